#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace smcurve {

using Int = mpz_class;
using Rat = mpq_class;

struct argument_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct calibration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rat make_rat(long n, long d = 1) {
    Rat r(n, d);
    r.canonicalize();
    return r;
}

inline Int floor_div(const Int& a, const Int& b) {
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

inline Int mod_pos(const Int& a, const Int& m) {
    Int r;
    mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
    return r;
}

inline Int gcd(const Int& a, const Int& b) {
    Int g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return g;
}

inline Int lcm(const Int& a, const Int& b) {
    Int l;
    mpz_lcm(l.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return l;
}

inline Rat floor_frac(const Rat& x) {  // x mod 1, in [0,1)
    Int f = floor_div(x.get_num(), x.get_den());
    return x - Rat(f);
}

inline Int rat_floor(const Rat& x) { return floor_div(x.get_num(), x.get_den()); }

inline Int pow_int(const Int& b, unsigned long e) {
    Int r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

inline Rat pow_rat(const Rat& b, long e) {
    Rat r(pow_int(b.get_num(), e < 0 ? -e : e), pow_int(b.get_den(), e < 0 ? -e : e));
    if (e < 0) r = 1 / r;
    r.canonicalize();
    return r;
}

// p-adic valuation; zero maps to a large sentinel
constexpr long kValInfinity = 1L << 40;

inline long vp(const Int& x, const Int& p) {
    if (x == 0) return kValInfinity;
    Int y = x;
    long v = 0;
    while (mpz_divisible_p(y.get_mpz_t(), p.get_mpz_t())) {
        mpz_divexact(y.get_mpz_t(), y.get_mpz_t(), p.get_mpz_t());
        ++v;
    }
    return v;
}

inline long vp(const Rat& x, const Int& p) {
    if (x == 0) return kValInfinity;
    return vp(x.get_num(), p) - vp(x.get_den(), p);
}

// Miller-Rabin with the first 20 prime bases; deterministic far beyond 2^64
inline bool is_prime(const Int& n) {
    if (n < 2) return false;
    static const unsigned small[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    for (unsigned p : small) {
        if (n == p) return true;
        if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return false;
    }
    Int d = n - 1;
    unsigned long s = 0;
    while (mpz_even_p(d.get_mpz_t())) {
        d /= 2;
        ++s;
    }
    for (unsigned a : small) {
        Int x;
        Int base = a;
        mpz_powm(x.get_mpz_t(), base.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (unsigned long r = 1; r < s; ++r) {
            x = x * x % n;
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

namespace detail {

inline Int pollard_rho(const Int& n) {
    if (mpz_even_p(n.get_mpz_t())) return 2;
    for (unsigned long c = 1;; ++c) {
        Int x = 2, y = 2, d = 1;
        auto f = [&](const Int& v) -> Int { return (v * v + c) % n; };
        while (d == 1) {
            x = f(x);
            y = f(f(y));
            Int diff = x - y;
            d = gcd(abs(diff), n);
        }
        if (d != n) return d;
    }
}

inline void factor_rec(const Int& n, std::map<Int, int>& out) {
    if (n == 1) return;
    if (is_prime(n)) {
        out[n] += 1;
        return;
    }
    Int d = pollard_rho(n);
    factor_rec(d, out);
    factor_rec(n / d, out);
}

}  // namespace detail

// trial division to 10^5, then Miller-Rabin / Pollard rho on the cofactor
inline std::map<Int, int> factor(Int n) {
    if (n == 0) throw argument_error("factor: zero");
    if (n < 0) n = -n;
    std::map<Int, int> out;
    for (unsigned long p = 2; p < 100000; p += (p == 2 ? 1 : 2)) {
        if (Int(p) * p > n) break;
        while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
            out[Int(p)] += 1;
            n /= p;
        }
    }
    if (n > 1) detail::factor_rec(n, out);
    return out;
}

inline std::vector<Int> prime_divisors(const Int& n) {
    std::vector<Int> ps;
    if (n == 0) return ps;
    for (auto& [p, e] : factor(n)) ps.push_back(p);
    return ps;
}

inline std::vector<Int> divisors(const Int& n) {
    std::vector<Int> ds{1};
    for (auto& [p, e] : factor(n)) {
        std::size_t k = ds.size();
        Int pk = 1;
        for (int i = 1; i <= e; ++i) {
            pk *= p;
            for (std::size_t j = 0; j < k; ++j) ds.push_back(ds[j] * pk);
        }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
}

inline bool is_squarefree(const Int& n) {
    for (auto& [p, e] : factor(n))
        if (e > 1) return false;
    return true;
}

// ---------------------------------------------------------------- factored values

struct FactoredInteger {
    int sign = 1;
    std::map<Int, int> factors;

    static FactoredInteger of(const Int& n) {
        FactoredInteger f;
        if (n == 0) {
            f.sign = 0;
            return f;
        }
        f.sign = n < 0 ? -1 : 1;
        f.factors = factor(n);
        return f;
    }
    Int value() const {
        Int v = sign;
        for (auto& [p, e] : factors) v *= pow_int(p, e);
        return v;
    }
    bool operator==(const FactoredInteger&) const = default;
};

class FactoredRational {
public:
    FactoredRational() = default;

    static FactoredRational of(const Rat& x) {
        FactoredRational f;
        if (x == 0) {
            f.sign_ = 0;
            return f;
        }
        f.sign_ = x < 0 ? -1 : 1;
        for (auto& [p, e] : factor(x.get_num())) f.exps_[p] += e;
        for (auto& [p, e] : factor(x.get_den())) f.exps_[p] -= e;
        return f;
    }
    static FactoredRational from_exponents(int sign, const std::map<Int, int>& exps) {
        FactoredRational f;
        f.sign_ = sign;
        for (auto& [p, e] : exps)
            if (e != 0) {
                if (!is_prime(p)) throw argument_error("FactoredRational: non-prime key " + p.get_str());
                f.exps_[p] = e;
            }
        return f;
    }

    int sign() const { return sign_; }
    const std::map<Int, int>& exponents() const { return exps_; }
    int exponent(const Int& p) const {
        auto it = exps_.find(p);
        return it == exps_.end() ? 0 : it->second;
    }

    FactoredInteger numerator() const {
        FactoredInteger n;
        n.sign = sign_;
        for (auto& [p, e] : exps_)
            if (e > 0) n.factors[p] = e;
        return n;
    }
    FactoredInteger denominator() const {
        FactoredInteger d;
        for (auto& [p, e] : exps_)
            if (e < 0) d.factors[p] = -e;
        return d;
    }
    Rat value() const {
        if (sign_ == 0) return 0;
        Rat r(numerator().value(), denominator().value());
        r.canonicalize();
        return r;
    }

    FactoredRational abs() const {
        FactoredRational f = *this;
        if (f.sign_ < 0) f.sign_ = 1;
        return f;
    }
    FactoredRational operator*(const FactoredRational& o) const {
        FactoredRational f;
        f.sign_ = sign_ * o.sign_;
        if (f.sign_ == 0) return f;
        f.exps_ = exps_;
        for (auto& [p, e] : o.exps_) f.exps_[p] += e;
        f.prune();
        return f;
    }
    FactoredRational inverse() const {
        if (sign_ == 0) throw domain_error("FactoredRational: inverse of zero");
        FactoredRational f = *this;
        for (auto& [p, e] : f.exps_) e = -e;
        return f;
    }
    FactoredRational operator/(const FactoredRational& o) const { return *this * o.inverse(); }
    FactoredRational pow(int k) const {
        FactoredRational f = *this;
        if (k == 0) return FactoredRational::of(1);
        if (k % 2 == 0 && f.sign_ < 0) f.sign_ = 1;
        for (auto& [p, e] : f.exps_) e *= k;
        return f;
    }
    bool operator==(const FactoredRational&) const = default;

    // grammar: [-]p1^e1*p2^e2.../q1^f1*...   (an empty side is written as 1)
    std::string str() const {
        if (sign_ == 0) return "0";
        auto side = [](const std::map<Int, int>& m, int s) {
            std::string out;
            for (auto& [p, e] : m) {
                int ee = e * s;
                if (ee <= 0) continue;
                if (!out.empty()) out += "*";
                out += p.get_str() + "^" + std::to_string(ee);
            }
            return out.empty() ? std::string("1") : out;
        };
        std::string s = sign_ < 0 ? "-" : "";
        s += side(exps_, 1);
        std::string d = side(exps_, -1);
        if (d != "1") s += "/" + d;
        return s;
    }

    static FactoredRational parse(const std::string& text) {
        std::string s;
        for (char c : text)
            if (!isspace(static_cast<unsigned char>(c))) s += c;
        if (s.empty()) throw argument_error("FactoredRational: empty string");
        if (s == "0") return FactoredRational::of(0);
        FactoredRational f;
        std::size_t pos = 0;
        if (s[0] == '-') {
            f.sign_ = -1;
            pos = 1;
        }
        auto parse_side = [&](const std::string& part, int sgn) {
            if (part == "1") return;
            std::size_t i = 0;
            while (i <= part.size()) {
                std::size_t j = part.find('*', i);
                if (j == std::string::npos) j = part.size();
                std::string term = part.substr(i, j - i);
                std::size_t k = term.find('^');
                if (term.empty()) throw argument_error("FactoredRational: bad term in '" + text + "'");
                Int p(term.substr(0, k));
                int e = k == std::string::npos ? 1 : std::stoi(term.substr(k + 1));
                if (!is_prime(p) || e <= 0) throw argument_error("FactoredRational: bad factor '" + term + "'");
                f.exps_[p] += sgn * e;
                i = j + 1;
            }
        };
        std::string body = s.substr(pos);
        std::size_t slash = body.find('/');
        try {
            parse_side(body.substr(0, slash), 1);
            if (slash != std::string::npos) parse_side(body.substr(slash + 1), -1);
        } catch (const std::logic_error& e) {
            throw argument_error(std::string("FactoredRational: cannot parse '") + text + "': " + e.what());
        }
        f.prune();
        return f;
    }

private:
    void prune() {
        for (auto it = exps_.begin(); it != exps_.end();)
            it = it->second == 0 ? exps_.erase(it) : std::next(it);
    }
    int sign_ = 1;
    std::map<Int, int> exps_;
};

// ---------------------------------------------------------------- log combinations

struct LogCombination {
    std::map<Int, Rat> terms;
    double residual = 0.0;

    void add(const Int& p, const Rat& c) {
        if (c == 0) return;
        Rat& slot = terms[p];
        slot += c;
        if (slot == 0) terms.erase(p);
    }
    LogCombination& operator+=(const LogCombination& o) {
        for (auto& [p, c] : o.terms) add(p, c);
        residual += o.residual;
        return *this;
    }
    LogCombination operator+(const LogCombination& o) const {
        LogCombination r = *this;
        r += o;
        return r;
    }
    LogCombination operator*(const Rat& s) const {
        LogCombination r;
        if (s != 0)
            for (auto& [p, c] : terms) r.terms[p] = c * s;
        r.residual = residual * s.get_d();
        return r;
    }
    Rat coefficient(const Int& p) const {
        auto it = terms.find(p);
        return it == terms.end() ? Rat(0) : it->second;
    }
    bool is_zero() const { return terms.empty() && residual == 0.0; }
    double numeric() const {
        double s = residual;
        for (auto& [p, c] : terms) s += c.get_d() * std::log(p.get_d());
        return s;
    }
    bool integral() const {
        for (auto& [p, c] : terms)
            if (c.get_den() != 1) return false;
        return true;
    }
    // exp of the exact part; coefficients must be integers
    FactoredRational exponentiate() const {
        std::map<Int, int> e;
        for (auto& [p, c] : terms) {
            if (c.get_den() != 1) throw domain_error("LogCombination: non-integral coefficient of log " + p.get_str());
            e[p] = static_cast<int>(c.get_num().get_si());
        }
        return FactoredRational::from_exponents(1, e);
    }
    std::string str() const {
        if (terms.empty()) return "0";
        std::string s;
        for (auto& [p, c] : terms) {
            if (!s.empty()) s += c < 0 ? " - " : " + ";
            else if (c < 0) s += "-";
            Rat a = abs(c);
            if (a != 1) s += a.get_str() + "*";
            s += "log(" + p.get_str() + ")";
        }
        return s;
    }
    bool operator==(const LogCombination& o) const { return terms == o.terms && residual == o.residual; }
};

// ---------------------------------------------------------------- characters and class numbers

inline int kronecker(const Int& d, const Int& n) { return mpz_kronecker(d.get_mpz_t(), n.get_mpz_t()); }
inline int kronecker(long d, long n) { return kronecker(Int(d), Int(n)); }

inline bool is_discriminant(const Int& d) {
    Int r = mod_pos(d, 4);
    return d < 0 && (r == 0 || r == 1);
}

inline bool is_fundamental(const Int& d) {
    if (!is_discriminant(d)) return false;
    Int r = mod_pos(d, 4);
    if (r == 1) return is_squarefree(-d);
    Int e = -d / 4;
    Int r4 = mod_pos(e, 4);
    return (r4 == 1 || r4 == 2) && is_squarefree(e);
}

struct ReducedForm {
    long a, b, c;
    bool operator<(const ReducedForm& o) const { return std::tie(a, b, c) < std::tie(o.a, o.b, o.c); }
    bool operator==(const ReducedForm&) const = default;
};

// primitive reduced forms: |b| <= a <= c, b >= 0 if |b| = a or a = c
inline std::vector<ReducedForm> reduced_forms(long disc) {
    if (!is_discriminant(disc)) throw argument_error("reduced_forms: invalid discriminant " + std::to_string(disc));
    std::vector<ReducedForm> out;
    long n = -disc;
    for (long a = 1; 3 * a * a <= n; ++a) {
        for (long b = -a + 1; b <= a; ++b) {
            long num = b * b - disc;
            if (num % (4 * a)) continue;
            long c = num / (4 * a);
            if (c < a) continue;
            if (c == a && b < 0) continue;
            if (std::gcd(std::gcd(a, std::labs(b)), c) != 1) continue;
            out.push_back({a, b, c});
        }
    }
    return out;
}

inline long class_number(long disc) { return static_cast<long>(reduced_forms(disc).size()); }

inline int unit_count(long disc) {
    if (disc >= 0) throw argument_error("unit_count: discriminant must be negative");
    return disc == -3 ? 6 : disc == -4 ? 4 : 2;
}

struct DiscSplit {
    Rat t;
    long disc;  // fundamental
    long n;
    bool operator==(const DiscSplit&) const = default;
};

inline DiscSplit disc_split(const Rat& t) {
    Rat four_t = 4 * t;
    if (t <= 0 || four_t.get_den() != 1) throw argument_error("disc_split: 4t must be a positive integer");
    Int N = four_t.get_num();  // = n^2 |disc|
    Int core = 1, n = 1;
    for (auto& [p, e] : factor(N)) {
        if (e % 2) core *= p;
        n *= pow_int(p, e / 2);
    }
    Int disc = -core;
    if (mod_pos(disc, 4) != 1) {
        disc *= 4;
        if (mod_pos(n, 2) != 0) throw argument_error("disc_split: -4t is not a discriminant");
        n /= 2;
    }
    return {t, disc.get_si(), n.get_si()};
}

inline long delta_ram(long delta0, long D) {
    if (delta0 <= 1) return 0;
    long g = std::gcd(delta0, D);
    long count = g == 1 ? 0 : static_cast<long>(factor(Int(g)).size());
    if (D % delta0 == 0) count -= 1;
    return count;
}

inline long ramified_product(long disc) {
    long r = 1;
    for (auto& p : prime_divisors(Int(disc))) r *= p.get_si();
    return r;
}

inline void require_nonsplit(long disc, long D) {
    for (auto& p : prime_divisors(Int(D)))
        if (kronecker(Int(disc), p) == 1)
            throw domain_error("no embedding exists: " + p.get_str() + " splits in Q(sqrt(" + std::to_string(disc) + "))");
}

inline Rat orbit_count(const Rat& t, long D) {
    DiscSplit s = disc_split(t);
    require_nonsplit(s.disc, D);
    long total = 0;
    for (auto& c : divisors(Int(s.n))) {
        long cc = c.get_si();
        total += class_number(cc * cc * s.disc);
    }
    long delta = delta_ram(ramified_product(s.disc), D);
    return Rat(total) / Rat(pow_int(2, delta));
}

inline Rat cycle_degree(long disc, long D, long n = 1) {
    require_nonsplit(disc, D);
    Rat sum = 0;
    for (auto& c : divisors(Int(n))) {
        long cc = c.get_si();
        long d = cc * cc * disc;
        sum += Rat(class_number(d), unit_count(d));
    }
    Rat prod = 1;
    for (auto& p : prime_divisors(Int(D))) prod *= 1 - kronecker(Int(disc), p);
    Rat r = 2 * sum * prod;
    r.canonicalize();
    return r;
}

// disc = f^2 * fundamental
inline std::pair<long, long> fundamental_part(long disc) {
    if (!is_discriminant(Int(disc)) || disc >= 0) throw argument_error("fundamental_part: negative discriminant expected");
    long f = 1;
    for (auto& [p, e] : factor(Int(-disc))) {
        long pl = p.get_si();
        for (int k = 0; k < e / 2; ++k) {
            long cand = disc / (pl * pl);
            if (is_discriminant(Int(cand))) {
                disc = cand;
                f *= pl;
            }
        }
    }
    if (!is_fundamental(Int(disc))) throw std::logic_error("fundamental_part: reduction failed");
    return {disc, f};
}

inline bool principal_form_represents(long disc, long n) {
    long b = ((disc % 2) + 2) % 2;
    long c = (b * b - disc) / 4;
    // x^2 + b x y + c y^2 = n
    for (long y = 0; -disc * y * y <= 4 * n; ++y) {
        long disc_x = b * b * y * y - 4 * (c * y * y - n);
        if (disc_x < 0) continue;
        long r = static_cast<long>(std::sqrt(static_cast<double>(disc_x)));
        while (r * r > disc_x) --r;
        while ((r + 1) * (r + 1) <= disc_x) ++r;
        if (r * r != disc_x) continue;
        if ((-b * y + r) % 2 == 0) return true;
    }
    return false;
}

// a CM point of discriminant disc exists on X*_D: every p | D is nonsplit in the field and prime to the conductor
inline void require_admissible(long disc, long D) {
    auto [fund, f] = fundamental_part(disc);
    require_nonsplit(fund, D);
    for (auto& p : prime_divisors(Int(D)))
        if (f % p.get_si() == 0)
            throw domain_error("no optimal embedding: " + p.get_str() + " divides the conductor of " + std::to_string(disc));
}

// size of the Galois orbit of a CM point of discriminant disc on X*_D: h(disc) divided by the order of the
// subgroup of the class group generated by the primes above p | gcd(D, disc)
inline long cm_point_count(long disc, long D) {
    require_admissible(disc, D);
    auto [fund, f] = fundamental_part(disc);
    std::vector<long> P;
    for (auto& p : prime_divisors(Int(D)))
        if (fund % p.get_si() == 0) P.push_back(p.get_si());
    long principal = 0;
    for (unsigned mask = 0; mask < (1u << P.size()); ++mask) {
        long n = 1;
        for (std::size_t i = 0; i < P.size(); ++i)
            if (mask >> i & 1) n *= P[i];
        if (principal_form_represents(disc, n)) ++principal;
    }
    long h = class_number(disc);
    long num = h * principal, den = 1L << P.size();
    if (num % den) throw std::logic_error("cm_point_count: non-integral orbit size");
    return num / den;
}

}  // namespace smcurve
