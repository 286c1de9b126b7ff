#pragma once

#include "etaforms.hpp"
#include "lattice.hpp"

#include <complex>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace smcurve {

// ---------------------------------------------------------------- exact cyclotomic numbers

namespace detail {

inline std::vector<Int> poly_divexact(std::vector<Int> num, const std::vector<Int>& den) {
    // coefficients low to high, den monic
    std::size_t n = num.size(), m = den.size();
    std::vector<Int> q(n - m + 1);
    for (std::size_t i = n - m + 1; i-- > 0;) {
        q[i] = num[i + m - 1];
        for (std::size_t j = 0; j < m; ++j) num[i + j] -= q[i] * den[j];
    }
    return q;
}

inline const std::vector<Int>& cyclotomic_poly(long M) {
    static std::mutex mu;
    static std::map<long, std::vector<Int>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(M);
    if (it != cache.end()) return it->second;
    for (long d = 1; d <= M; ++d) {
        if (M % d || cache.count(d)) continue;
        std::vector<Int> p(d + 1, Int(0));
        p[0] = -1;
        p[d] = 1;
        for (long e = 1; e < d; ++e)
            if (d % e == 0) p = poly_divexact(p, cache.at(e));
        cache[d] = p;
    }
    return cache.at(M);
}

}  // namespace detail

// element of Q(zeta_M) as a sparse sum of c_k zeta_M^k (not reduced modulo Phi_M)
struct Cyc {
    long M = 1;
    std::vector<std::pair<long, Rat>> t;  // sorted by exponent, no zero coefficients after normalize()

    Cyc() = default;
    explicit Cyc(long order) : M(order) {}
    static Cyc rational(long order, const Rat& r) {
        Cyc x(order);
        if (r != 0) x.t.push_back({0, r});
        return x;
    }
    // zeta_M^k
    static Cyc root(long order, long k) {
        Cyc x(order);
        x.t.push_back({((k % order) + order) % order, Rat(1)});
        return x;
    }
    // e(r) for a rational r whose denominator divides M
    static Cyc e(long order, const Rat& r) {
        Rat k = r * order;
        if (k.get_den() != 1) throw argument_error("Cyc::e: root of unity not in the field");
        return root(order, mod_pos(k.get_num(), Int(order)).get_si());
    }

    void normalize() {
        std::sort(t.begin(), t.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        std::size_t w = 0;
        for (std::size_t i = 0; i < t.size();) {
            long k = t[i].first;
            Rat s = t[i].second;
            std::size_t j = i + 1;
            for (; j < t.size() && t[j].first == k; ++j) s += t[j].second;
            if (s != 0) t[w++] = {k, s};
            i = j;
        }
        t.resize(w);
    }
    bool empty() const { return t.empty(); }

    Cyc operator+(const Cyc& o) const {
        Cyc r = *this;
        r += o;
        return r;
    }
    Cyc operator-(const Cyc& o) const { return *this + o * Rat(-1); }
    Cyc& operator+=(const Cyc& o) {
        check(o);
        t.insert(t.end(), o.t.begin(), o.t.end());
        normalize();
        return *this;
    }
    Cyc operator*(const Cyc& o) const {
        check(o);
        Cyc r(M);
        r.t.reserve(t.size() * o.t.size());
        for (auto& [i, x] : t)
            for (auto& [j, y] : o.t) r.t.push_back({(i + j) % M, x * y});
        r.normalize();
        return r;
    }
    Cyc operator*(const Rat& s) const {
        Cyc r(M);
        if (s == 0) return r;
        r.t = t;
        for (auto& x : r.t) x.second *= s;
        return r;
    }
    Cyc shifted(long k) const {
        Cyc r(M);
        long s = ((k % M) + M) % M;
        for (auto& [i, x] : t) r.t.push_back({(i + s) % M, x});
        r.normalize();
        return r;
    }
    // append zeta^k * o without normalizing
    void append_shifted(const Cyc& o, long k) {
        long s = ((k % M) + M) % M;
        for (auto& [i, x] : o.t) t.push_back({(i + s) % M, x});
    }
    Cyc conj() const {
        Cyc r(M);
        for (auto& [i, x] : t) r.t.push_back({(M - i) % M, x});
        r.normalize();
        return r;
    }
    Cyc embed(long M2) const {
        if (M2 % M) throw argument_error("Cyc::embed: target order must be a multiple");
        Cyc r(M2);
        long f = M2 / M;
        for (auto& [i, x] : t) r.t.push_back({i * f, x});
        return r;
    }
    // canonical representative modulo Phi_M, degree < phi(M)
    std::vector<Rat> reduced() const {
        const auto& phi = detail::cyclotomic_poly(M);
        std::size_t deg = phi.size() - 1;
        std::vector<Rat> r(std::max<std::size_t>(M, deg), Rat(0));
        for (auto& [i, x] : t) r[i] += x;
        for (std::size_t i = r.size(); i-- > deg;) {
            if (r[i] == 0) continue;
            Rat s = r[i];
            for (std::size_t j = 0; j <= deg; ++j)
                if (phi[j] != 0) r[i - deg + j] -= s * Rat(phi[j]);
        }
        r.resize(deg);
        return r;
    }
    bool is_zero() const {
        if (t.empty()) return true;
        for (auto& x : reduced())
            if (x != 0) return false;
        return true;
    }
    // replace by the reduced form (keeps the value)
    Cyc canonical() const {
        Cyc r(M);
        auto red = reduced();
        for (std::size_t i = 0; i < red.size(); ++i)
            if (red[i] != 0) r.t.push_back({static_cast<long>(i), red[i]});
        return r;
    }
    bool operator==(const Cyc& o) const {
        if (M != o.M) {
            long L = std::lcm(M, o.M);
            return embed(L) == o.embed(L);
        }
        return (*this - o).is_zero();
    }
    std::optional<Rat> as_rational() const {
        auto r = reduced();
        for (std::size_t i = 1; i < r.size(); ++i)
            if (r[i] != 0) return std::nullopt;
        return r.empty() ? Rat(0) : r[0];
    }
    std::complex<double> numeric() const {
        std::complex<double> s = 0;
        for (auto& [i, x] : t) s += x.get_d() * std::polar(1.0, 2 * M_PI * static_cast<double>(i) / static_cast<double>(M));
        return s;
    }
    std::string str() const {
        if (auto q = as_rational()) return q->get_str();
        auto r = reduced();
        std::string s;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i] == 0) continue;
            if (!s.empty()) s += " + ";
            s += r[i].get_str() + (i ? "*z" + std::to_string(M) + "^" + std::to_string(i) : "");
        }
        return s;
    }

   private:
    void check(const Cyc& o) const {
        if (o.M != M) throw argument_error("Cyc: mismatched cyclotomic orders");
    }
};

// sqrt of a positive rational whose prime factors have square roots in Q(zeta_M)
inline Cyc cyc_sqrt(long M, const Rat& r) {
    if (r <= 0) throw argument_error("cyc_sqrt: positive rational expected");
    Cyc out = Cyc::rational(M, 1);
    Rat scalar = 1;
    for (int side = 0; side < 2; ++side) {
        Int n = side == 0 ? r.get_num() : r.get_den();
        for (auto& [p, e] : factor(n)) {
            Rat pe = pow_rat(Rat(p), e / 2);
            scalar *= side == 0 ? pe : 1 / pe;
            if (e % 2 == 0) continue;
            // sqrt(p) via the quadratic Gauss sum, sqrt(p*) = sum_a (a/p) zeta_p^a
            Cyc s(M);
            if (p == 2) {
                if (M % 8) throw domain_error("cyc_sqrt: sqrt(2) needs 8 | M");
                s = Cyc::root(M, M / 8) + Cyc::root(M, -M / 8);
            } else {
                long pl = p.get_si();
                if (M % pl) throw domain_error("cyc_sqrt: sqrt(" + p.get_str() + ") not in the field");
                for (long a = 1; a < pl; ++a) s = s + Cyc::root(M, a * (M / pl)) * Rat(kronecker(Int(a), p));
                if (pl % 4 == 3) {
                    // sqrt(-p) -> sqrt(p) = -i sqrt(-p)
                    if (M % 4) throw domain_error("cyc_sqrt: needs 4 | M");
                    s = s * Cyc::root(M, -M / 4);
                }
            }
            if (side == 0)
                out = out * s;
            else
                out = out * s * (Rat(1) / Rat(p));
        }
    }
    return out * scalar;
}

// ---------------------------------------------------------------- metaplectic group

struct MetaElement {
    long a = 1, b = 0, c = 0, d = 1;
    int branch = 1;  // j(tau) = branch * principal sqrt(c tau + d)

    std::complex<double> j(std::complex<double> tau) const {
        std::complex<double> w = c == 0 ? std::complex<double>(static_cast<double>(d), 0.0) : static_cast<double>(c) * tau + static_cast<double>(d);
        return static_cast<double>(branch) * std::sqrt(w);
    }
    std::complex<double> act(std::complex<double> tau) const {
        return (static_cast<double>(a) * tau + static_cast<double>(b)) / (static_cast<double>(c) * tau + static_cast<double>(d));
    }
    MetaElement operator*(const MetaElement& o) const {
        MetaElement r;
        r.a = a * o.a + b * o.c;
        r.b = a * o.b + b * o.d;
        r.c = c * o.a + d * o.c;
        r.d = c * o.b + d * o.d;
        const std::complex<double> tau0(0.1234, 1.377);
        std::complex<double> prod = j(o.act(tau0)) * o.j(tau0);
        r.branch = 1;
        r.branch = std::abs(prod - r.j(tau0)) < std::abs(prod + r.j(tau0)) ? 1 : -1;
        return r;
    }
    MetaElement inverse() const {
        MetaElement r{d, -b, -c, a, 1};
        const std::complex<double> tau0(0.1234, 1.377);
        // (G, j)^{-1} = (G^{-1}, 1 / j(G^{-1} tau))
        std::complex<double> want = 1.0 / j(r.act(tau0));
        r.branch = std::abs(want - r.j(tau0)) < std::abs(want + r.j(tau0)) ? 1 : -1;
        return r;
    }
    bool operator==(const MetaElement& o) const = default;
    std::string str() const {
        return "[[" + std::to_string(a) + "," + std::to_string(b) + "],[" + std::to_string(c) + "," + std::to_string(d) + "]]" +
               (branch > 0 ? "+" : "-");
    }
};

inline MetaElement meta_S() { return {0, -1, 1, 0, 1}; }
inline MetaElement meta_T(long n = 1) { return {1, n, 0, 1, 1}; }
inline MetaElement meta_Z() { return meta_S() * meta_S(); }

// word in S and T^k, gamma = w[0] w[1] ... ; token 0 = S, otherwise T^k encoded as (1, k)
struct WordLetter {
    bool is_S;
    long k;
};

inline std::vector<WordLetter> sl2_word(long a, long b, long c, long d) {
    if (a * d - b * c != 1) throw argument_error("sl2_word: determinant must be 1");
    std::vector<WordLetter> w;
    while (c != 0) {
        long k = floor_div(Int(a), Int(c)).get_si();
        if (k) w.push_back({false, k});
        long a2 = a - k * c, b2 = b - k * d;
        // (a2 b2; c d) = S (c d; -a2 -b2)
        w.push_back({true, 0});
        long na = c, nb = d, nc = -a2, nd = -b2;
        a = na, b = nb, c = nc, d = nd;
    }
    if (a == 1) {
        if (b) w.push_back({false, b});
    } else {
        w.push_back({true, 0});
        w.push_back({true, 0});
        if (b) w.push_back({false, -b});
    }
    return w;
}

inline MetaElement word_product(const std::vector<WordLetter>& w) {
    MetaElement g;
    for (auto& l : w) g = g * (l.is_S ? meta_S() : meta_T(l.k));
    return g;
}

// ---------------------------------------------------------------- Weil representation

using CycVec = std::vector<Cyc>;

struct WeilAction {
    DiscGroup dg;
    long N = 1;
    long M = 8;  // lcm(8, N)
    Cyc CL;
    int sign = 0;                             // signature mod 8
    long s_sign = 1;                          // rho(S) uses e(s_sign * (eta, delta))
    std::vector<std::vector<long>> pairM;     // M * (eta, delta) mod M
    std::vector<long> qM;                     // M * Q(eta) mod M
    std::vector<long long> cl_int;            // C_L = cl_scale * sum cl_int[k] zeta^k
    Rat cl_scale;

    std::size_t size() const { return dg.size(); }
    CycVec basis(std::size_t i) const {
        CycVec v(size(), Cyc(M));
        v[i] = Cyc::rational(M, 1);
        return v;
    }
    CycVec zero() const { return CycVec(size(), Cyc(M)); }

    // dense integer form: value = scale * sum a[eta*M + k] zeta^k e_eta
    struct Dense {
        Rat scale = 1;
        std::vector<long long> a;
    };
    Dense to_dense(const CycVec& v) const {
        Dense d;
        Int den = 1;
        for (auto& x : v)
            for (auto& [k, c] : x.t) den = lcm(den, c.get_den());
        d.scale = Rat(1) / Rat(den);
        d.a.assign(size() * M, 0);
        for (std::size_t i = 0; i < size(); ++i)
            for (auto& [k, c] : v[i].t) {
                Rat y = c * Rat(den);
                if (!y.get_num().fits_slong_p()) throw domain_error("WeilAction: coefficient overflow");
                d.a[i * M + k] += y.get_num().get_si();
            }
        return d;
    }
    CycVec from_dense(const Dense& d) const {
        CycVec v = zero();
        for (std::size_t i = 0; i < size(); ++i)
            for (long k = 0; k < M; ++k)
                if (d.a[i * M + k]) v[i].t.push_back({k, d.scale * Rat(static_cast<long>(d.a[i * M + k]))});
        return v;
    }
    void dense_T(Dense& d, long n) const {
        std::vector<long long> r(d.a.size(), 0);
        for (std::size_t i = 0; i < size(); ++i) {
            long s = ((-n * qM[i]) % M + M) % M;
            for (long k = 0; k < M; ++k) r[i * M + (k + s) % M] = d.a[i * M + k];
        }
        d.a.swap(r);
    }
    void dense_S(Dense& d, bool inverse) const {
        const long n = static_cast<long>(size());
        long long mx = 0;
        for (auto x : d.a) mx = std::max(mx, x < 0 ? -x : x);
        long long clsum = 0;
        for (auto x : cl_int) clsum += x < 0 ? -x : x;
        if (mx > 0 && static_cast<double>(mx) * n * clsum > 4e18) throw domain_error("WeilAction: integer overflow in rho(S)");
        long sgn = inverse ? -s_sign : s_sign;
        std::vector<long long> r(d.a.size(), 0);
        for (long eta = 0; eta < n; ++eta) {
            const long long* src = &d.a[eta * M];
            bool nz = false;
            for (long k = 0; k < M && !nz; ++k) nz = src[k] != 0;
            if (!nz) continue;
            for (long del = 0; del < n; ++del) {
                long s = ((sgn * pairM[eta][del]) % M + M) % M;
                long long* dst = &r[del * M];
                for (long k = 0; k < M; ++k)
                    if (src[k]) dst[(k + s) % M] += src[k];
            }
        }
        std::vector<long long> out(d.a.size(), 0);
        for (long del = 0; del < n; ++del)
            for (long k = 0; k < M; ++k) {
                long long x = r[del * M + k];
                if (!x) continue;
                for (long j = 0; j < M; ++j)
                    if (cl_int[j]) out[del * M + (k + (inverse ? M - j : j)) % M] += x * cl_int[j];
            }
        // reduce each entry modulo Phi_M to keep coefficients canonical
        const auto& phi = detail::cyclotomic_poly(M);
        const long deg = static_cast<long>(phi.size()) - 1;
        std::vector<long long> ph(phi.size());
        for (std::size_t j = 0; j < phi.size(); ++j) ph[j] = phi[j].get_si();
        for (long del = 0; del < n; ++del) {
            long long* e = &out[del * M];
            for (long i = M - 1; i >= deg; --i) {
                long long c = e[i];
                if (!c) continue;
                for (long j = 0; j <= deg; ++j) e[i - deg + j] -= c * ph[j];
            }
        }
        d.a.swap(out);
        d.scale *= cl_scale;
        long long g = 0;
        for (auto x : d.a) g = std::gcd(g, x < 0 ? -x : x);
        if (g > 1) {
            for (auto& x : d.a) x /= g;
            d.scale *= Rat(static_cast<long>(g));
        }
    }
    CycVec apply_T(const CycVec& v, long n = 1) const {
        CycVec r = v;
        for (std::size_t i = 0; i < size(); ++i) r[i] = v[i].shifted(-n * qM[i]);
        return r;
    }
    // s_sign = +1: rho(S) e_eta = C_L sum e((eta, delta)) e_delta
    CycVec apply_S(const CycVec& v, bool inverse = false) const {
        Dense d = to_dense(v);
        dense_S(d, inverse);
        return from_dense(d);
    }
    CycVec apply_word(const std::vector<WordLetter>& w, const CycVec& v) const {
        Dense d = to_dense(v);
        for (std::size_t i = w.size(); i-- > 0;)
            if (w[i].is_S)
                dense_S(d, false);
            else
                dense_T(d, w[i].k);
        return from_dense(d);
    }
    CycVec apply_word_inverse(const std::vector<WordLetter>& w, const CycVec& v) const {
        Dense d = to_dense(v);
        for (auto& l : w)
            if (l.is_S)
                dense_S(d, true);
            else
                dense_T(d, -l.k);
        return from_dense(d);
    }
    // rho(g) v, with the branch of g honoured (Z^2 acts by (-1)^sign)
    CycVec apply(const MetaElement& g, const CycVec& v) const {
        auto w = sl2_word(g.a, g.b, g.c, g.d);
        CycVec r = apply_word(w, v);
        if (word_product(w).branch != g.branch) r = scale(r, Cyc::rational(M, center_sign()));
        return r;
    }
    CycVec apply_inverse(const MetaElement& g, const CycVec& v) const {
        auto w = sl2_word(g.a, g.b, g.c, g.d);
        CycVec r = apply_word_inverse(w, v);
        if (word_product(w).branch != g.branch) r = scale(r, Cyc::rational(M, center_sign()));
        return r;
    }
    int center_sign() const { return sign % 2 ? -1 : 1; }
    static CycVec scale(CycVec v, const Cyc& s) {
        for (auto& x : v) x = x * s;
        return v;
    }
    static bool equal(const CycVec& u, const CycVec& v) {
        if (u.size() != v.size()) return false;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (!(u[i] == v[i])) return false;
        return true;
    }
};

inline WeilAction weil_action(const DiscGroup& dg) {
    WeilAction W;
    W.dg = dg;
    W.N = dg.level;
    W.M = std::lcm(8L, W.N);
    const std::size_t n = dg.size();
    W.qM.resize(n);
    W.pairM.assign(n, std::vector<long>(n));
    for (std::size_t i = 0; i < n; ++i) {
        Rat q = dg.Q(i) * W.M;
        if (q.get_den() != 1) throw domain_error("weil_action: Q values not in (1/M)Z");
        W.qM[i] = q.get_num().get_si();
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            Rat p = dg.pair(i, j) * W.M;
            if (p.get_den() != 1) throw domain_error("weil_action: pairing not in (1/M)Z");
            W.pairM[i][j] = W.pairM[j][i] = p.get_num().get_si();
        }
    // C_L = |Lambda|^{-1} sum e(Q(eta))
    Cyc s(W.M);
    for (std::size_t i = 0; i < n; ++i) s.t.push_back({W.qM[i], Rat(1)});
    s.normalize();
    W.CL = s * (Rat(1) / Rat(static_cast<long>(n)));
    W.cl_int.assign(W.M, 0);
    W.cl_scale = Rat(1) / Rat(static_cast<long>(n));
    for (auto& [k, c] : s.t) W.cl_int[k] = c.get_num().get_si();
    // Milgram: C_L^2 |Lambda| = e(sign/4), and C_L sqrt|Lambda| = e(sign/8)
    Cyc sq = cyc_sqrt(W.M, Rat(static_cast<long>(n)));
    Cyc u = W.CL * sq;
    W.sign = -1;
    for (int k = 0; k < 8; ++k)
        if (u == Cyc::root(W.M, k * W.M / 8)) W.sign = k;
    if (W.sign < 0) throw domain_error("weil_action: Gauss sum is not an eighth root of unity times |Lambda|^{-1/2}");
    return W;
}

// ---------------------------------------------------------------- characters, cosets

// (c/d) for odd d, extended to negative d by (c/-1) = sign(c)
inline int theta_symbol(long c, long d) { return kronecker(Int(c), Int(d)); }

inline Cyc character_chi_L(const MetaElement& g, const WeilAction& W) {
    if (g.c % W.N) throw argument_error("character_chi_L: element not in Gamma_0(N)");
    long size = static_cast<long>(W.size());
    long M = W.M;
    if (W.N % 4) return Cyc::rational(M, kronecker(Int(g.d), Int(size)));
    if (g.d % 2 == 0) throw argument_error("character_chi_L: d must be odd");
    // chi_theta
    int kr = theta_symbol(g.c, g.d);
    long dm4 = ((g.d % 4) + 4) % 4;
    Cyc th = dm4 == 1 ? Cyc::rational(M, g.branch * kr) : Cyc::root(M, 3 * M / 4) * Rat(g.branch * kr);
    long e = ((-W.sign + kronecker(Int(-1), Int(size)) - 1) % 4 + 4) % 4;
    Cyc r = Cyc::rational(M, 1);
    for (long i = 0; i < e; ++i) r = r * th;
    Int n = Int(size) * pow_int(2, static_cast<unsigned long>(W.sign));
    return r * Rat(kronecker(Int(g.d), n));
}

inline long gamma0_index_of(long N) { return gamma0_index(N); }

inline std::pair<long, long> p1_normal(long c, long d, long N) {
    c = ((c % N) + N) % N;
    d = ((d % N) + N) % N;
    std::pair<long, long> best{N, N};
    for (long u = 1; u < N; ++u) {
        if (std::gcd(u, N) != 1) continue;
        std::pair<long, long> p{(u * c) % N, (u * d) % N};
        best = std::min(best, p);
    }
    if (N == 1) best = {0, 0};
    return best;
}

inline bool same_coset(const MetaElement& g, const MetaElement& h, long N) {
    return p1_normal(g.c, g.d, N) == p1_normal(h.c, h.d, N);
}

// representatives S^-1 T^-n S^-1 T^-m of Gamma_0(N) \ SL2(Z)
inline std::vector<MetaElement> coset_reps(long N) {
    std::vector<MetaElement> reps;
    std::map<std::pair<long, long>, bool> seen;
    MetaElement Si = meta_S().inverse();
    for (long n = 0; n < N; ++n)
        for (long m = 0; m < N; ++m) {
            MetaElement g = Si * meta_T(-n) * Si * meta_T(-m);
            auto key = p1_normal(g.c, g.d, N);
            if (seen.count(key)) continue;
            seen[key] = true;
            reps.push_back(g);
        }
    if (static_cast<long>(reps.size()) != gamma0_index(N)) throw std::logic_error("coset_reps: incomplete coset list");
    return reps;
}

// ---------------------------------------------------------------- eta multiplier

inline Rat dedekind_sum(long d, long c) {
    // s(d, c) for c > 0
    auto saw = [](const Rat& x) -> Rat {
        if (x.get_den() == 1) return 0;
        return x - Rat(rat_floor(x)) - make_rat(1, 2);
    };
    Rat s = 0;
    for (long k = 1; k < c; ++k) s += saw(make_rat(k, c)) * saw(make_rat(d * k, c));
    return s;
}

// eta(g tau) = e(x) sqrt(c tau + d) eta(tau) with the principal square root; returns x mod 1
inline Rat eta_multiplier(long a, long b, long c, long d) {
    if (c > 0) return floor_frac(make_rat(a + d, 24 * c) - dedekind_sum(d, c) / 2 - make_rat(1, 8));
    if (c == 0) {
        if (d == 1) return floor_frac(make_rat(b, 24));
        return floor_frac(make_rat(3, 4) - make_rat(b, 24));
    }
    return floor_frac(eta_multiplier(-a, -b, -c, -d) + make_rat(1, 4));
}

// truncated series sum_e coeff[e] q^e with rational exponents
struct CycSeries {
    std::map<Rat, Cyc> coeffs;
    Rat bound;  // exact for exponents <= bound

    void add(const Rat& e, const Cyc& x) {
        auto it = coeffs.find(e);
        if (it == coeffs.end())
            coeffs.emplace(e, x);
        else
            it->second += x;
    }
};

// (prod eta(delta tau)^{r_delta}) | gamma with the principal branch, exponents <= bound
inline CycSeries eta_quotient_slash(const EtaQuotient& q, long a, long b, long c, long d, long M, const Rat& bound) {
    struct Factor {
        long A, B, Dp, r;
    };
    std::vector<Factor> fs;
    Cyc scalar = Cyc::rational(M, 1);
    Rat sqrt_arg = 1;
    Rat offset = 0;
    long W = 1;
    for (auto& [delta, r] : q.r) {
        if (r == 0) continue;
        long A = std::gcd(delta, std::labs(c));
        if (c == 0) A = delta;
        long x = delta * a / A, z = c / A;
        Int g, s, t;
        mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), Int(x).get_mpz_t(), Int(z).get_mpz_t());
        if (g != 1) throw std::logic_error("eta_quotient_slash: non-primitive column");
        long w = s.get_si(), y = -t.get_si();  // x w - y z = 1
        long Dp = delta / A;
        long B = w * delta * b - y * d;
        // check [[delta a, delta b],[c, d]] = [[x,y],[z,w]] [[A,B],[0,Dp]]
        if (x * A != delta * a || x * B + y * Dp != delta * b || z * A != c || z * B + w * Dp != d)
            throw std::logic_error("eta_quotient_slash: bad factorization");
        Rat eps = eta_multiplier(x, y, z, w);
        scalar = scalar * Cyc::e(M, floor_frac(eps * r + make_rat(B * r, 24 * Dp)));
        sqrt_arg *= pow_rat(Rat(Dp), -r);
        offset += make_rat(A * r, 24 * Dp);
        W = std::lcm(W, Dp);
        fs.push_back({A, B, Dp, r});
    }
    scalar = scalar * cyc_sqrt(M, sqrt_arg);
    CycSeries out;
    out.bound = bound;
    if (offset > bound) return out;
    // product over factors of prod_k (1 - e(Bk/Dp) u^{A k W/Dp})^r, u = q^{1/W}
    Rat span = (bound - offset) * W;
    long L = rat_floor(span).get_si() + 1;
    std::vector<Cyc> P(L, Cyc(M));
    P[0] = Cyc::rational(M, 1);
    for (auto& f : fs) {
        long step = f.A * (W / f.Dp);
        for (long k = 1; k * step < L; ++k) {
            Cyc root = Cyc::e(M, floor_frac(make_rat(f.B * k, f.Dp)));
            long e = k * step;
            long reps = std::labs(f.r);
            for (long t = 0; t < reps; ++t) {
                if (f.r > 0) {
                    // multiply by (1 - root u^e)
                    for (long i = L - 1; i >= e; --i) P[i] = P[i] - root * P[i - e];
                } else {
                    // divide by (1 - root u^e): P_i += root P_{i-e}, increasing i
                    for (long i = e; i < L; ++i) P[i] = P[i] + root * P[i - e];
                }
            }
        }
    }
    for (long i = 0; i < L; ++i) {
        if (P[i].is_zero()) continue;
        out.add(offset + make_rat(i, W), scalar * P[i]);
    }
    return out;
}

// ---------------------------------------------------------------- vectorization

struct VectorForm {
    std::size_t size = 0;
    Rat truncation;                                  // coefficients exact for m <= truncation
    std::map<std::pair<std::size_t, Rat>, Cyc> coeffs;  // (eta, m) -> c_eta(m)

    Cyc coefficient(std::size_t eta, const Rat& m) const {
        auto it = coeffs.find({eta, m});
        if (it == coeffs.end()) return Cyc();
        return it->second;
    }
    Rat rational(std::size_t eta, const Rat& m) const {
        auto it = coeffs.find({eta, m});
        if (it == coeffs.end()) return 0;
        auto r = it->second.as_rational();
        if (!r) throw domain_error("VectorForm: coefficient c(" + std::to_string(eta) + ", " + m.get_str() + ") is not rational");
        return *r;
    }
};

inline VectorForm vectorize_terms(const std::vector<std::pair<Rat, EtaQuotient>>& terms, const WeilAction& W,
                                  const std::vector<MetaElement>& reps, const Rat& bound = 0) {
    if (terms.empty()) throw argument_error("vectorize: empty form");
    for (auto& [c, q] : terms) {
        if (q.weight() != make_rat(1, 2)) throw argument_error("vectorize: only weight 1/2 forms are supported");
        auto chk = check_etaprod_conditions(q, static_cast<long>(W.size()), W.N);
        if (!chk.ok) throw argument_error("vectorize: eta quotient fails condition " + std::to_string(chk.failed));
    }
    const long Mf = std::lcm(24 * W.N, W.M);
    VectorForm F;
    F.size = W.size();
    F.truncation = bound;
    std::map<std::pair<std::size_t, Rat>, Cyc> acc;
    for (const auto& g : reps) {
        // rho(g^{-1}) e_0
        CycVec v = W.apply_inverse(g, W.basis(0));
        // f|g for the metaplectic element g: principal expansion times branch^{-1}
        CycSeries s;
        for (auto& [coef, q] : terms) {
            CycSeries t = eta_quotient_slash(q, g.a, g.b, g.c, g.d, Mf, bound);
            for (auto& [e, x] : t.coeffs) s.add(e, x * (coef * g.branch));
        }
        for (auto& [e, x] : s.coeffs) {
            if (x.is_zero()) continue;
            for (std::size_t eta = 0; eta < W.size(); ++eta) {
                if (v[eta].is_zero()) continue;
                Cyc term = x * v[eta].embed(Mf);
                auto key = std::make_pair(eta, e);
                auto it = acc.find(key);
                if (it == acc.end())
                    acc.emplace(key, term);
                else
                    it->second += term;
            }
        }
    }
    for (auto& [k, x] : acc)
        if (!x.is_zero()) F.coeffs.emplace(k, x);
    return F;
}

inline VectorForm vectorize(const InputForm& f, const WeilAction& W, const Rat& bound = 0) {
    if (f.level != W.N || f.disc_size != static_cast<long>(W.size())) throw argument_error("vectorize: form and lattice do not match");
    return vectorize_terms(f.terms, W, coset_reps(W.N), bound);
}

// ---------------------------------------------------------------- Lambda^{n*} and S_n

inline std::vector<std::size_t> lambda_n_star(const DiscGroup& dg, long n) {
    std::vector<std::size_t> torsion;
    for (std::size_t i = 0; i < dg.size(); ++i)
        if (dg.scale(i, n) == 0) torsion.push_back(i);
    std::vector<std::size_t> out;
    for (std::size_t del = 0; del < dg.size(); ++del) {
        bool ok = true;
        for (auto eta : torsion)
            if (floor_frac(dg.pair(del, eta) + Rat(n) * dg.Q(eta)) != 0) {
                ok = false;
                break;
            }
        if (ok) out.push_back(del);
    }
    return out;
}

inline Cyc gauss_sum_Sn(const WeilAction& W, long n, std::size_t delta) {
    Cyc s(W.M);
    for (std::size_t eta = 0; eta < W.size(); ++eta) {
        long k = (-W.pairM[eta][delta] - (n % W.M) * W.qM[eta]) % W.M;
        s.t.push_back({(k + W.M) % W.M, Rat(1)});
    }
    s.normalize();
    return s;
}

// the cached action for D in {6, 10}
inline const WeilAction& standard_action(long D) {
    static std::mutex mu;
    static std::map<long, WeilAction> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(D);
    if (it != cache.end()) return it->second;
    return cache[D] = weil_action(disc_group(standard_lattice(D)));
}

}  // namespace smcurve
