#pragma once

#include "lattice.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

namespace smcurve {

struct coherent_error : domain_error {
    using domain_error::domain_error;
};

// ---------------------------------------------------------------- good primes

inline int chi(long disc, const Int& p) { return kronecker(Int(disc), p); }

inline Int rho_p(const Rat& m, const Int& p, long disc) {
    if (m <= 0) throw argument_error("rho_p: m must be positive");
    long v = vp(m, p);
    if (v < 0) throw argument_error("rho_p: m is not p-integral");
    int c = chi(disc, p);
    Int s = 0, term = 1;
    for (long r = 0; r <= v; ++r) {
        s += term;
        term *= c;
    }
    return s;
}

inline LogCombination whittaker_derivative(const Rat& m, const Int& p, long disc) {
    if (rho_p(m, p, disc) != 0) throw std::logic_error("whittaker_derivative: rho_p(m) is nonzero");
    long v = vp(m, p);
    LogCombination out;
    out.add(p, Rat(v + 1) * Rat(rho_p(m / p, p, disc)) / 2);
    return out;
}

// ---------------------------------------------------------------- local densities

// Coefficients S_0, S_1, ... of alpha_p(X) = sum S_j X^j for the coset mu + Z^2 of the binary
// lattice with bilinear Gram G; S_j = A_j - A_{j-1}, A_k = p^k Prob(Q(mu + y) = m mod p^k).
using DensityPoly = std::vector<Rat>;

namespace detail {

inline Rat p_unit(const Rat& x, const Int& p) { return x / pow_rat(Rat(p), vp(x, p)); }

inline int legendre_unit(const Rat& x, const Int& p) {
    return kronecker(mod_pos(x.get_num(), p), p) * kronecker(mod_pos(x.get_den(), p), p);
}

struct DiagTerm {
    Rat coef;   // coefficient of y^2
    Rat shift;  // coset shift of the variable
};

inline std::array<DiagTerm, 2> diagonalize_odd(const Mat2& G, const std::array<Rat, 2>& mu, const Int& p) {
    Rat A = G[0][0] / 2, B = G[0][1], C = G[1][1] / 2;
    Rat m1 = mu[0], m2 = mu[1];
    for (int guard = 0; B != 0; ++guard) {
        if (guard > 8) throw std::logic_error("diagonalize_odd: no progress");
        long va = vp(A, p), vb = vp(B, p), vc = vp(C, p);
        if (va <= vb && va <= vc) {
            Rat k = B / (2 * A);
            C -= B * B / (4 * A);
            B = 0;
            m1 += k * m2;
        } else if (vc <= vb) {
            std::swap(A, C);
            std::swap(m1, m2);
        } else {
            Rat nB = 2 * A + B, nC = A + B + C;
            B = nB;
            C = nC;
            m1 -= m2;
        }
    }
    return {DiagTerm{A, m1}, DiagTerm{C, m2}};
}

}  // namespace detail

// closed form via Gauss sums after diagonalizing over Z_p, p odd
inline DensityPoly density_odd(const Mat2& G, const std::array<Rat, 2>& mu, const Rat& m, const Int& p) {
    if (p == 2) throw argument_error("density_odd: p must be odd");
    auto comps = detail::diagonalize_odd(G, mu, p);
    Rat qmu = 0;
    for (auto& c : comps) qmu += c.coef * c.shift * c.shift;
    if (vp(m - qmu, p) < 0) return {Rat(0)};
    struct Unshifted { long a; Rat u; };
    std::vector<Unshifted> unsh;
    std::vector<long> gaps;  // a - e for shifted variables
    Rat C = -m;
    for (auto& c : comps) {
        long a = vp(c.coef, p);
        if (vp(c.shift, p) < 0) {
            long e = -vp(c.shift, p);
            if (e > a) throw argument_error("density_odd: coset is not in the dual lattice");
            gaps.push_back(a - e);
            C += c.coef * c.shift * c.shift;
        } else {
            unsh.push_back({a, detail::p_unit(c.coef, p)});
        }
    }
    long vC = vp(C, p);
    long J;
    if (C != 0) J = vC + 1;
    else if (!gaps.empty()) J = *std::min_element(gaps.begin(), gaps.end());
    else throw argument_error("density_odd: m = 0 is not supported");
    if (!gaps.empty()) J = std::min(J, *std::min_element(gaps.begin(), gaps.end()));
    const int eps2 = mod_pos(p, 4) == 1 ? 1 : -1;
    const Rat P(p);
    DensityPoly out{Rat(1)};
    for (long j = 1; j <= J; ++j) {
        std::vector<std::pair<long, Rat>> odd;
        long tot = 0;
        for (auto& w : unsh)
            if (j > w.a) {
                tot += j - w.a;
                if ((j - w.a) % 2) odd.push_back({j - w.a, w.u});
            }
        Rat val = 0;
        if (odd.size() % 2 == 0) {
            Rat ram = vC >= j ? pow_rat(P, j) - pow_rat(P, j - 1) : vC == j - 1 ? Rat(-pow_rat(P, j - 1)) : Rat(0);
            if (tot % 2) throw std::logic_error("density_odd: parity");
            val = ram * pow_rat(P, -tot / 2);
            if (odd.size() == 2) val *= eps2 * detail::legendre_unit(odd[0].second * odd[1].second, p);
        } else if (vC == j - 1) {
            Rat cu = detail::p_unit(C, p);
            val = detail::legendre_unit(odd[0].second * cu, p) * eps2 * pow_rat(P, j - 1) * pow_rat(P, (1 - tot) / 2);
        }
        out.push_back(val);
    }
    return out;
}

namespace detail {

inline Int padic_integer(const Rat& x, const Int& p, const Int& mod) {
    // x must be p-integral
    Int den = x.get_den();
    Int inv;
    if (mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), mod.get_mpz_t()) == 0)
        throw argument_error("padic_integer: value is not p-integral");
    return mod_pos(x.get_num() * inv, mod);
}

inline long vp_capped(const Int& x, const Int& p, long cap) {
    if (x == 0) return cap;
    return std::min(cap, vp(x, p));
}

}  // namespace detail

// counts solutions of Q(mu + y) = m mod p^k for k <= K by refining residue classes of y
inline DensityPoly density_count(const Mat2& G, const std::array<Rat, 2>& mu, const Rat& m, const Int& p, long K) {
    for (auto& row : G)
        for (auto& g : row)
            if (g.get_den() != 1) throw argument_error("density_count: Gram must be integral");
    if (G[0][0].get_num() % 2 != 0 || G[1][1].get_num() % 2 != 0) throw argument_error("density_count: Gram must be even");
    const Int a = G[0][0].get_num() / 2, b = G[0][1].get_num(), c = G[1][1].get_num() / 2;
    long e = std::max({0L, -vp(mu[0], p), -vp(mu[1], p)});
    long vm = vp(m, p);
    long s = std::max(0L, -(vm + 2 * e));
    long off = 2 * e + s;  // v(Q(x) - m) = v(F) - off
    long cap = K + off;
    long P = cap + 4;
    Int mod = pow_int(p, P);
    Int pe = pow_int(p, e), ps = pow_int(p, s);
    std::array<Int, 2> M = {detail::padic_integer(mu[0] * Rat(pe), p, mod), detail::padic_integer(mu[1] * Rat(pe), p, mod)};
    Int MM = detail::padic_integer(m * Rat(pow_int(p, s + 2 * e)), p, mod);
    long vform = std::min({detail::vp_capped(a, p, P), detail::vp_capped(b, p, P), detail::vp_capped(c, p, P)});
    std::map<long, Rat> weight;  // valuation of F (capped) -> measure
    Rat inv_p2 = Rat(1) / Rat(p * p);
    long pl = p.get_si();
    struct Node { Int y0, y1; long j; Rat w; };
    std::vector<Node> stack{{Int(0), Int(0), 0, Rat(1)}};
    while (!stack.empty()) {
        Node nd = std::move(stack.back());
        stack.pop_back();
        Int v0 = M[0] + pe * nd.y0, v1 = M[1] + pe * nd.y1;
        Int F = mod_pos(ps * (a * v0 * v0 + b * v0 * v1 + c * v1 * v1) - MM, mod);
        long vF = detail::vp_capped(F, p, cap);
        Int g0 = 2 * a * v0 + b * v1, g1 = b * v0 + 2 * c * v1;
        long lin = s + e + nd.j + std::min(detail::vp_capped(mod_pos(g0, mod), p, P), detail::vp_capped(mod_pos(g1, mod), p, P));
        long quad = s + 2 * e + 2 * nd.j + vform;
        long cmin = std::min(lin, quad);
        if (vF < cmin || cmin >= cap) {
            weight[vF] += nd.w;
            continue;
        }
        if (nd.j > cap + 2 * e + 16) throw precision_error("density_count: refinement did not terminate");
        Int step = pow_int(p, nd.j);
        Rat cw = nd.w * inv_p2;
        for (long d0 = 0; d0 < pl; ++d0)
            for (long d1 = 0; d1 < pl; ++d1) stack.push_back({nd.y0 + d0 * step, nd.y1 + d1 * step, nd.j + 1, cw});
    }
    Rat below = 0;
    for (auto& [v, w] : weight)
        if (v < off) below += w;
    if (below != 0) {
        if (below != 1) throw std::logic_error("density_count: coset condition is not uniform");
        return {Rat(0)};
    }
    DensityPoly A;
    for (long k = 0; k <= K; ++k) {
        Rat pr = 0;
        for (auto& [v, w] : weight)
            if (v >= k + off) pr += w;
        A.push_back(pow_rat(Rat(p), k) * pr);
    }
    DensityPoly S{A[0]};
    for (long k = 1; k <= K; ++k) S.push_back(A[k] - A[k - 1]);
    return S;
}

inline void trim(DensityPoly& S) {
    while (S.size() > 1 && S.back() == 0) S.pop_back();
}

// 2-adic density: counting to a depth past the point where the counts must stabilize
inline DensityPoly density_two(const Mat2& G, const std::array<Rat, 2>& mu, const Rat& m, long kmin = 12) {
    const Int two(2);
    long e = std::max({0L, -vp(mu[0], two), -vp(mu[1], two)});
    long vm = std::max(0L, vp(m, two));
    long vd = vp(det2(G), two);
    long K = std::max(kmin, vm + vd + 2 * e + 8);
    DensityPoly S = density_count(G, mu, m, two, K);
    for (long k = K - 2; k <= K; ++k)
        if (k > 0 && static_cast<std::size_t>(k) < S.size() && S[k] != 0)
            throw precision_error("density_two: counts did not stabilize by depth " + std::to_string(K));
    trim(S);
    return S;
}

// ---------------------------------------------------------------- memo cache

class DensityCache {
public:
    static DensityCache& instance() {
        static DensityCache c;
        return c;
    }

    void set_directory(const std::string& dir) {
        std::unique_lock lk(mu_);
        dir_ = dir;
    }
    std::string directory() const {
        std::shared_lock lk(mu_);
        return dir_;
    }
    void clear() {
        std::unique_lock lk(mu_);
        mem_.clear();
        hits_ = misses_ = 0;
    }
    std::size_t size() const {
        std::shared_lock lk(mu_);
        return mem_.size();
    }
    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

    static std::string key(const Mat2& G, const std::array<Rat, 2>& mu, const Rat& m, const Int& p) {
        std::string k = p.get_str() + "|" + G[0][0].get_str() + "," + G[0][1].get_str() + "," + G[1][1].get_str() + "|" +
                        mu[0].get_str() + "," + mu[1].get_str() + "|" + m.get_str();
        return k;
    }

    static std::uint64_t fnv1a(const std::string& s) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
        return h;
    }

    std::optional<DensityPoly> get(const std::string& k) {
        {
            std::shared_lock lk(mu_);
            auto it = mem_.find(k);
            if (it != mem_.end()) {
                ++hits_;
                return it->second;
            }
        }
        std::string dir = directory();
        if (!dir.empty()) {
            if (auto v = load(dir, k)) {
                std::unique_lock lk(mu_);
                mem_.emplace(k, *v);
                ++hits_;
                return v;
            }
        }
        ++misses_;
        return std::nullopt;
    }

    void put(const std::string& k, const DensityPoly& v) {
        std::string dir;
        {
            std::unique_lock lk(mu_);
            mem_.emplace(k, v);
            dir = dir_;
        }
        if (!dir.empty()) store(dir, k, v);
    }

private:
    DensityCache() {
        if (const char* d = std::getenv("SMCURVE_CACHE_DIR")) dir_ = d;
    }

    static std::string path_for(const std::string& dir, const std::string& k) {
        std::ostringstream os;
        os << std::hex << fnv1a(k);
        return (std::filesystem::path(dir) / (os.str() + ".dens")).string();
    }

    static void put_field(std::ostream& os, const std::string& s) { os << s.size() << ':' << s << '\n'; }

    static std::optional<std::string> get_field(std::istream& is) {
        std::size_t n;
        char colon;
        if (!(is >> n) || !is.get(colon) || colon != ':') return std::nullopt;
        std::string s(n, '\0');
        if (!is.read(s.data(), static_cast<std::streamsize>(n))) return std::nullopt;
        is.ignore(1);
        return s;
    }

    static std::optional<DensityPoly> load(const std::string& dir, const std::string& k) {
        std::ifstream in(path_for(dir, k));
        if (!in) return std::nullopt;
        auto stored = get_field(in);
        if (!stored || *stored != k) return std::nullopt;
        auto count = get_field(in);
        if (!count) return std::nullopt;
        DensityPoly v;
        for (long i = 0, n = std::stol(*count); i < n; ++i) {
            auto f = get_field(in);
            if (!f) return std::nullopt;
            Rat r(*f);
            r.canonicalize();
            v.push_back(r);
        }
        return v;
    }

    static void store(const std::string& dir, const std::string& k, const DensityPoly& v) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        std::string path = path_for(dir, k);
        std::string tmp = path + ".tmp" + std::to_string(fnv1a(k + std::to_string(reinterpret_cast<std::uintptr_t>(&v))));
        {
            std::ofstream out(tmp);
            if (!out) return;
            put_field(out, k);
            put_field(out, std::to_string(v.size()));
            for (auto& r : v) put_field(out, r.get_str());
        }
        std::filesystem::rename(tmp, path, ec);
        if (ec) std::filesystem::remove(tmp, ec);
    }

    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, DensityPoly> mem_;
    std::string dir_;
    std::atomic<std::size_t> hits_{0}, misses_{0};
};

inline std::array<Rat, 2> reduce_coset(const std::array<Rat, 2>& mu) { return {floor_frac(mu[0]), floor_frac(mu[1])}; }

inline DensityPoly local_density(const Mat2& G, const std::array<Rat, 2>& mu_in, const Rat& m, const Int& p) {
    auto mu = reduce_coset(mu_in);
    auto& cache = DensityCache::instance();
    std::string k = DensityCache::key(G, mu, m, p);
    if (auto v = cache.get(k)) return *v;
    DensityPoly S = p == 2 ? density_two(G, mu, m) : density_odd(G, mu, m, p);
    trim(S);
    cache.put(k, S);
    return S;
}

// ---------------------------------------------------------------- Whittaker factors

struct LocalFactor {
    Int p;
    Rat value;                                // W*_{m,p}(0, mu)
    std::optional<LogCombination> derivative;  // present when value = 0
};

// W*(X) = alpha_p(X) / (1 - chi(p) X / p); value at X = 1 and -X d/dX at X = 1 (the s-derivative in units of log p)
inline LocalFactor whittaker_factor(const DensityPoly& S, const Int& p, long disc) {
    Rat a1 = 0, da = 0;
    for (std::size_t j = 0; j < S.size(); ++j) {
        a1 += S[j];
        da += Rat(static_cast<long>(j)) * S[j];
    }
    Rat x = Rat(chi(disc, p)) / Rat(p);
    Rat den = 1 - x;
    LocalFactor f;
    f.p = p;
    f.value = a1 / den;
    if (f.value == 0) {
        Rat xder = (da * den + a1 * x) / (den * den);
        LogCombination d;
        d.add(p, -xder);
        f.derivative = d;
    }
    return f;
}

inline LocalFactor bad_prime_factor(const Rat& m, const Int& p, const Mat2& Gminus, const std::array<Rat, 2>& mu, long disc) {
    return whittaker_factor(local_density(Gminus, mu, m, p), p, disc);
}

// -2 sqrt(|disc|) (w/2) / (h sqrt(det G_-)); the square root is rational for every lattice here
inline Rat kappa_prefactor(long disc, const Mat2& Gminus) {
    Rat r = Rat(-disc) / det2(Gminus);
    r.canonicalize();
    Int sn, sd;
    mpz_sqrt(sn.get_mpz_t(), r.get_num().get_mpz_t());
    mpz_sqrt(sd.get_mpz_t(), r.get_den().get_mpz_t());
    if (sn * sn != r.get_num() || sd * sd != r.get_den())
        throw domain_error("kappa_prefactor: |disc|/det(L_-) is not a rational square");
    Rat root(sn, sd);
    root.canonicalize();
    return Rat(-2) * root * Rat(unit_count(disc), 2) / Rat(class_number(disc));
}

inline std::vector<Int> relevant_primes(const Mat2& Gminus, const Rat& m, long disc) {
    std::set<Int> ps{Int(2)};
    auto addp = [&](const Int& n) {
        if (abs(n) > 1)
            for (auto& p : prime_divisors(abs(n))) ps.insert(p);
    };
    Rat d = det2(Gminus);
    addp(d.get_num());
    addp(d.get_den());
    addp(m.get_num());
    addp(m.get_den());
    addp(Int(disc));
    return {ps.begin(), ps.end()};
}

// ---------------------------------------------------------------- archimedean constant

// log|disc| + 2 Lambda'(1)/Lambda(1) for Lambda(s) = pi^{-(s+1)/2} Gamma((s+1)/2) L(s, chi_disc);
// by the functional equation this is -2 Lambda_c'/Lambda_c(0) with Lambda_c = (N/pi)^{(s+1)/2} Gamma((s+1)/2) L(s),
// and L(0), L'(0) are finite sums (Lerch)
inline double k0_constant(long disc) {
    if (!is_fundamental(Int(disc))) throw argument_error("k0_constant: discriminant must be fundamental");
    const long N = -disc;
    long double L0 = 0, L0p = 0;
    for (long a = 1; a < N; ++a) {
        int c = kronecker(disc, a);
        if (!c) continue;
        long double x = static_cast<long double>(a) / N;
        L0 += c * (0.5L - x);
        L0p += c * std::lgamma(x);
    }
    L0p -= std::log(static_cast<long double>(N)) * L0;
    const long double pi = std::numbers::pi_v<long double>;
    const long double euler = std::numbers::egamma_v<long double>;
    long double digamma_half = -euler - 2 * std::log(2.0L);
    long double ld = 0.5L * std::log(N / pi) + 0.5L * digamma_half + L0p / L0;
    return static_cast<double>(-2 * ld);
}

// ---------------------------------------------------------------- kappa

inline LogCombination kappa_minus(const std::array<Rat, 2>& mu, const Rat& m, const Mat2& Gminus, long disc) {
    LogCombination out;
    if (m < 0) return out;
    if (m == 0) {
        auto r = reduce_coset(mu);
        if (r[0] == 0 && r[1] == 0) {
            out.residual = k0_constant(disc);
            return out;
        }
        // nonzero isotropic coset (only for orders of conductor > 1)
        Int n = lcm(r[0].get_den(), r[1].get_den());
        auto ps = prime_divisors(n);
        if (ps.size() != 1 || ps[0] != n)
            throw domain_error("kappa_minus: isotropic coset of non-prime order " + n.get_str());
        long e = mod_pos(Int(disc), n) == 0 ? 2 : 1;
        out.add(n, Rat(-2 * e, unit_count(disc)));
        return out;
    }
    std::vector<LocalFactor> fs;
    std::optional<std::size_t> zero;
    std::size_t nzero = 0;
    for (auto& p : relevant_primes(Gminus, m, disc)) {
        fs.push_back(bad_prime_factor(m, p, Gminus, mu, disc));
        if (fs.back().value == 0) {
            ++nzero;
            zero = fs.size() - 1;
        }
    }
    if (nzero == 0)
        throw coherent_error("kappa_minus: no vanishing local factor (m = " + m.get_str() + ")");
    if (nzero >= 2) return out;
    Rat prod = kappa_prefactor(disc, Gminus);
    for (std::size_t i = 0; i < fs.size(); ++i)
        if (i != *zero) prod *= fs[i].value;
    return *fs[*zero].derivative * prod;
}

struct KappaDetail {
    LogCombination value;
    long archimedean_hits = 0;  // vectors of L + eta on the line of z with Q = m
};

// eta: a vector of L-dual in lattice coordinates
inline KappaDetail kappa_eta_detail(const TraceZeroLattice& L, const CMSplitting& S, const Vec3& eta, const Rat& m) {
    KappaDetail out;
    if (m < 0) return out;
    long disc = S.split.disc;
    double bound = std::sqrt(m.get_d() / S.t.get_d());
    for (auto& g : S.glue) {
        auto [s, c] = split_vector(L, S, vadd(eta, g.lambda));
        long lo = static_cast<long>(std::floor(-bound - s.get_d())) - 1;
        long hi = static_cast<long>(std::ceil(bound - s.get_d())) + 1;
        for (long k = lo; k <= hi; ++k) {
            Rat x = s + k;
            Rat mp = m - S.t * x * x;
            if (mp < 0) continue;
            if (mp == 0) {
                auto r = reduce_coset(c);
                if (r[0] == 0 && r[1] == 0) ++out.archimedean_hits;
            }
            out.value += kappa_minus(c, mp, S.minus_gram, disc);
        }
    }
    return out;
}

inline LogCombination kappa_eta(const TraceZeroLattice& L, const CMSplitting& S, const Vec3& eta, const Rat& m) {
    return kappa_eta_detail(L, S, eta, m).value;
}

}  // namespace smcurve
