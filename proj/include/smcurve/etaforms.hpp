#pragma once

#include "quaternion.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smcurve {

// ---------------------------------------------------------------- q-series with a rational offset

// sum_k coeffs[k] q^{offset + k}, exact for offset + k < offset + prec
struct FracSeries {
    Rat offset = 0;
    std::vector<Rat> coeffs;
    long prec = 0;

    Rat coefficient(const Rat& exponent) const {
        Rat k = exponent - offset;
        if (k.get_den() != 1) return 0;
        long i = k.get_num().get_si();
        if (i < 0) return 0;
        if (i >= prec) throw argument_error("FracSeries: coefficient beyond truncation");
        return i < static_cast<long>(coeffs.size()) ? coeffs[i] : Rat(0);
    }
    Rat truncation() const { return offset + prec; }

    FracSeries operator*(const FracSeries& o) const {
        FracSeries r;
        r.offset = offset + o.offset;
        r.prec = std::min(prec, o.prec);
        r.coeffs.assign(r.prec, Rat(0));
        for (long i = 0; i < r.prec && i < static_cast<long>(coeffs.size()); ++i) {
            if (coeffs[i] == 0) continue;
            for (long j = 0; i + j < r.prec && j < static_cast<long>(o.coeffs.size()); ++j) r.coeffs[i + j] += coeffs[i] * o.coeffs[j];
        }
        return r;
    }
    FracSeries operator*(const Rat& s) const {
        FracSeries r = *this;
        for (auto& c : r.coeffs) c *= s;
        return r;
    }
    // aligned addition; offsets must differ by an integer
    FracSeries operator+(const FracSeries& o) const {
        Rat d = o.offset - offset;
        if (d.get_den() != 1) throw argument_error("FracSeries: offsets differ by a non-integer");
        const FracSeries& lo = d >= 0 ? *this : o;
        const FracSeries& hi = d >= 0 ? o : *this;
        long shift = Rat(abs(d)).get_num().get_si();
        FracSeries r;
        r.offset = lo.offset;
        r.prec = std::min(lo.prec, hi.prec + shift);
        r.coeffs.assign(r.prec, Rat(0));
        for (long i = 0; i < r.prec; ++i) {
            if (i < static_cast<long>(lo.coeffs.size())) r.coeffs[i] += lo.coeffs[i];
            long j = i - shift;
            if (j >= 0 && j < static_cast<long>(hi.coeffs.size())) r.coeffs[i] += hi.coeffs[j];
        }
        return r;
    }
    FracSeries operator-(const FracSeries& o) const { return *this + o * Rat(-1); }

    // 1/f for f with nonzero leading coefficient
    FracSeries inverse() const {
        if (coeffs.empty() || coeffs[0] == 0) throw argument_error("FracSeries: leading coefficient must be nonzero");
        FracSeries r;
        r.offset = -offset;
        r.prec = prec;
        r.coeffs.assign(prec, Rat(0));
        Rat inv0 = 1 / coeffs[0];
        for (long n = 0; n < prec; ++n) {
            Rat s = n == 0 ? Rat(1) : Rat(0);
            for (long k = 1; k <= n && k < static_cast<long>(coeffs.size()); ++k) s -= coeffs[k] * r.coeffs[n - k];
            r.coeffs[n] = s * inv0;
        }
        return r;
    }
    FracSeries pow(long e) const {
        FracSeries base = e < 0 ? inverse() : *this;
        FracSeries r;
        r.offset = 0;
        r.prec = prec;
        r.coeffs.assign(prec, Rat(0));
        r.coeffs[0] = 1;
        for (long k = std::labs(e); k > 0; k >>= 1) {
            if (k & 1) r = r * base;
            if (k > 1) base = base * base;
        }
        return r;
    }
    std::string str(long terms = 6) const {
        std::string s;
        long shown = 0;
        for (long i = 0; i < static_cast<long>(coeffs.size()) && shown < terms; ++i) {
            if (coeffs[i] == 0) continue;
            Rat e = offset + i;
            Rat c = coeffs[i];
            if (!s.empty()) s += c < 0 ? " - " : " + ";
            else if (c < 0) s += "-";
            Rat a = abs(c);
            if (e == 0) s += a.get_str();
            else {
                if (a != 1) s += a.get_str() + "*";
                s += e == 1 ? std::string("q") : "q^" + (e.get_den() == 1 ? e.get_str() : "(" + e.get_str() + ")");
            }
            ++shown;
        }
        return (s.empty() ? std::string("0") : s) + " + O(q^" + truncation().get_str() + ")";
    }
};

// q^{m/24} prod_{k>=1} (1 - q^{mk}), with prec integer steps past the offset
inline FracSeries eta_series(long m, long prec) {
    if (m <= 0 || prec < 1) throw argument_error("eta_series: bad arguments");
    FracSeries f;
    f.offset = make_rat(m, 24);
    f.prec = prec;
    f.coeffs.assign(prec, Rat(0));
    // pentagonal numbers k(3k-1)/2, sign (-1)^k
    for (long k = 0;; ++k) {
        bool any = false;
        for (long kk : {k, -k}) {
            if (k == 0 && kk == 0 && any) continue;
            long e = kk * (3 * kk - 1) / 2 * m;
            if (e < prec) {
                f.coeffs[e] += (k % 2) ? -1 : 1;
                any = true;
            }
        }
        if (!any && k > 0) break;
    }
    return f;
}

struct EtaQuotient {
    long level = 1;
    std::map<long, long> r;  // delta -> exponent

    Rat weight() const {
        long s = 0;
        for (auto& [d, e] : r) s += e;
        return make_rat(s, 2);
    }
    long exponent(long d) const {
        auto it = r.find(d);
        return it == r.end() ? 0 : it->second;
    }
    std::vector<long> vector() const {
        std::vector<long> v;
        for (auto& d : divisors(Int(level))) v.push_back(exponent(d.get_si()));
        return v;
    }
    std::string str() const {
        std::string num, den;
        for (auto& [d, e] : r) {
            if (e == 0) continue;
            std::string t = "eta" + std::to_string(d) + (std::labs(e) != 1 ? "^" + std::to_string(std::labs(e)) : "");
            std::string& side = e > 0 ? num : den;
            if (!side.empty()) side += "*";
            side += t;
        }
        if (num.empty()) num = "1";
        return den.empty() ? num : num + "/(" + den + ")";
    }
    bool operator==(const EtaQuotient& o) const { return level == o.level && vector() == o.vector(); }
    bool operator<(const EtaQuotient& o) const { return vector() < o.vector(); }
};

inline EtaQuotient make_eta_quotient(long N, const std::vector<long>& exps) {
    auto ds = divisors(Int(N));
    if (ds.size() != exps.size()) throw argument_error("make_eta_quotient: one exponent per divisor expected");
    EtaQuotient q;
    q.level = N;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (exps[i]) q.r[ds[i].get_si()] = exps[i];
    return q;
}

// prec: integer steps past the leading exponent
inline FracSeries quotient_series(const EtaQuotient& q, long prec) {
    FracSeries f;
    f.offset = 0;
    f.prec = prec;
    f.coeffs.assign(prec, Rat(0));
    f.coeffs[0] = 1;
    for (auto& [d, e] : q.r) {
        if (e == 0) continue;
        if (q.level % d) throw argument_error("quotient_series: exponent index does not divide the level");
        FracSeries s = eta_series(d, prec).pow(e);
        s.offset = make_rat(d * e, 24);
        f = f * s;
    }
    return f;
}

// ---------------------------------------------------------------- conditions, cusps

struct EtaCheck {
    bool ok = false;
    int failed = 0;  // index of the first failed condition (1..4), 0 if ok
    Rat weight;
    std::string character;
};

inline EtaCheck check_etaprod_conditions(const EtaQuotient& q, long disc_size, long level) {
    EtaCheck c;
    c.weight = q.weight();
    if (q.level != level) {
        c.failed = 1;
        return c;
    }
    Rat prod = 1;
    Rat s1 = 0, s2 = 0;
    for (auto& [d, e] : q.r) {
        prod *= pow_rat(Rat(d), e);
        s1 += Rat(d * e);
        s2 += make_rat(e, d);
    }
    Rat sq = Rat(disc_size) / prod;
    sq.canonicalize();
    Int n = sq.get_num(), d = sq.get_den();
    if (n < 0 || !mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) {
        c.failed = 2;
        return c;
    }
    if (Rat(s1 / 24).get_den() != 1) {
        c.failed = 3;
        return c;
    }
    if (Rat(s2 * level / 24).get_den() != 1) {
        c.failed = 4;
        return c;
    }
    c.ok = true;
    long twok = Rat(2 * c.weight).get_num().get_si();
    if (level % 4 == 0) {
        long thexp = twok + kronecker(-1L, disc_size) - 1;
        Int chimod = pow_int(2, twok) * disc_size;
        c.character = "chi_theta^" + std::to_string(thexp) + "*chi_" + chimod.get_str();
    } else {
        c.character = "chi_" + std::to_string(disc_size);
    }
    return c;
}

inline long cusp_width(long N, long c) {
    long g = std::gcd(c * c, N);
    return N / g;
}

// order in the local parameter at a/c, divided by the width of the cusp
inline Rat cusp_order(const EtaQuotient& q, long a, long c) {
    const long N = q.level;
    if (c <= 0 || N % c) throw argument_error("cusp_order: c must be a positive divisor of the level");
    if (std::gcd(a, c) != 1) throw argument_error("cusp_order: gcd(a, c) must be 1");
    Rat s = 0;
    long g = std::gcd(c, N / c);
    for (auto& [d, e] : q.r) {
        long h = std::gcd(c, d);
        s += make_rat(h * h * e, g * c * d);
    }
    Rat ligozat = s * Rat(N) / 24;
    return ligozat / Rat(cusp_width(N, c));
}

inline long gamma0_index(long N) {
    Rat idx(N);
    for (auto& p : prime_divisors(Int(N))) idx *= 1 + Rat(1) / Rat(p);
    return idx.get_num().get_si();
}

// sum over the cusps of Gamma_0(N) of order times width; equals weight * index / 12 for a modular form
inline Rat valence_sum(const EtaQuotient& q) {
    Rat s = 0;
    for (auto& cc : divisors(Int(q.level))) {
        long c = cc.get_si();
        long ncusps = 0;
        long g = std::gcd(c, q.level / c);
        for (long x = 1; x <= g; ++x)
            if (std::gcd(x, g) == 1) ++ncusps;
        s += cusp_order(q, 1, c) * Rat(cusp_width(q.level, c)) * Rat(ncusps);
    }
    return s;
}

// ---------------------------------------------------------------- exponent family

// r = M (A1, ..., A5) + r0 with A1 = order at infinity, A2 = (N/24) sum r/delta,
// |disc|/prod delta^r = (p^A3 p'^A4)^2, A5 = r_1, and weight fixed
struct EtaFamily {
    long level = 0;
    long disc_size = 0;
    Rat weight;
    std::vector<long> divs;
    std::vector<std::array<Rat, 5>> M;  // per divisor
    std::vector<Rat> r0;

    std::optional<EtaQuotient> at(const std::array<long, 5>& A) const {
        std::vector<long> exps;
        for (std::size_t i = 0; i < divs.size(); ++i) {
            Rat v = r0[i];
            for (int j = 0; j < 5; ++j) v += M[i][j] * A[j];
            if (v.get_den() != 1) return std::nullopt;
            exps.push_back(v.get_num().get_si());
        }
        return make_eta_quotient(level, exps);
    }
};

namespace detail {

template <std::size_t N>
inline RatMat<N> invert(const RatMat<N>& A) {
    RatMat<N> inv;
    for (std::size_t c = 0; c < N; ++c) {
        std::array<Rat, N> e{};
        e[c] = 1;
        auto col = solve<N>(A, e);
        for (std::size_t r = 0; r < N; ++r) inv[r][c] = col[r];
    }
    return inv;
}

}  // namespace detail

inline EtaFamily eta_family(long N, long disc_size, const Rat& weight = make_rat(1, 2)) {
    auto ds = divisors(Int(N));
    auto ps = prime_divisors(Int(disc_size));
    if (ds.size() != 6 || ps.size() != 2)
        throw argument_error("eta_family: the parameterization needs 6 divisors of N and 2 primes in |disc|");
    detail::RatMat<6> A;
    for (std::size_t i = 0; i < 6; ++i) {
        long d = ds[i].get_si();
        A[0][i] = make_rat(d, 24);
        A[1][i] = make_rat(N, 24 * d);
        A[2][i] = Rat(vp(Int(d), ps[0]));
        A[3][i] = Rat(vp(Int(d), ps[1]));
        A[4][i] = d == 1 ? 1 : 0;
        A[5][i] = 1;
    }
    auto inv = detail::invert<6>(A);
    // rhs = (A1, A2, v0 - 2 A3, v1 - 2 A4, A5, 2k)
    EtaFamily F;
    F.level = N;
    F.disc_size = disc_size;
    F.weight = weight;
    long v0 = vp(Int(disc_size), ps[0]), v1 = vp(Int(disc_size), ps[1]);
    std::array<Rat, 6> constant = {0, 0, Rat(v0), Rat(v1), 0, 2 * weight};
    for (std::size_t i = 0; i < 6; ++i) {
        F.divs.push_back(ds[i].get_si());
        std::array<Rat, 5> row;
        row[0] = inv[i][0];
        row[1] = inv[i][1];
        row[2] = -2 * inv[i][2];
        row[3] = -2 * inv[i][3];
        row[4] = inv[i][4];
        F.M.push_back(row);
        Rat c = 0;
        for (std::size_t j = 0; j < 6; ++j) c += inv[i][j] * constant[j];
        F.r0.push_back(c);
    }
    return F;
}

// holomorphic at the finite cusps, pole of the given order at infinity
inline std::vector<EtaQuotient> search_eta_quotients(long N, long disc_size, const Rat& weight, long pole,
                                                     long max_points = 200000000L) {
    EtaFamily F = eta_family(N, disc_size, weight);
    std::vector<long> cs;
    for (auto& c : divisors(Int(N)))
        if (c != N) cs.push_back(c.get_si());
    // cusp orders as affine functions of (A2..A5) with A1 = -pole
    const std::size_t nc = cs.size();
    std::vector<std::array<Rat, 4>> lin(nc);
    std::vector<Rat> cst(nc);
    for (std::size_t k = 0; k < nc; ++k) {
        long c = cs[k], g = std::gcd(c, N / c);
        std::array<Rat, 4> a{};
        Rat b = 0;
        for (std::size_t i = 0; i < F.divs.size(); ++i) {
            long d = F.divs[i], h = std::gcd(c, d);
            Rat w = make_rat(h * h * N, 24 * g * c * d);
            b += w * (F.r0[i] + F.M[i][0] * Rat(-pole));
            for (int j = 0; j < 4; ++j) a[j] += w * F.M[i][j + 1];
        }
        lin[k] = a;
        cst[k] = b;
    }
    // bounding box from the vertices of the simplex {orders >= 0}
    std::array<std::optional<Rat>, 4> lo, hi;
    std::vector<std::size_t> idx(nc);
    for (std::size_t skip = 0; skip < nc; ++skip) {
        detail::RatMat<4> A;
        std::array<Rat, 4> rhs;
        std::size_t row = 0;
        for (std::size_t k = 0; k < nc; ++k) {
            if (k == skip) continue;
            for (int j = 0; j < 4; ++j) A[row][j] = lin[k][j];
            rhs[row] = -cst[k];
            ++row;
        }
        std::array<Rat, 4> v;
        try {
            v = detail::solve<4>(A, rhs);
        } catch (const domain_error&) {
            throw domain_error("search_eta_quotients: degenerate cusp system");
        }
        for (int j = 0; j < 4; ++j) {
            if (!lo[j] || v[j] < *lo[j]) lo[j] = v[j];
            if (!hi[j] || v[j] > *hi[j]) hi[j] = v[j];
        }
    }
    std::array<long, 4> L, H;
    double points = 1;
    for (int j = 0; j < 4; ++j) {
        L[j] = rat_floor(*lo[j]).get_si();
        H[j] = rat_floor(*hi[j]).get_si() + 1;
        points *= static_cast<double>(H[j] - L[j] + 1);
    }
    if (points > static_cast<double>(max_points))
        throw domain_error("search_eta_quotients: enumeration box too large (" + std::to_string(points) + " points)");
    std::vector<EtaQuotient> out;
    std::array<long, 5> A{-pole, 0, 0, 0, 0};
    for (A[1] = L[0]; A[1] <= H[0]; ++A[1])
        for (A[2] = L[1]; A[2] <= H[1]; ++A[2])
            for (A[3] = L[2]; A[3] <= H[2]; ++A[3])
                for (A[4] = L[3]; A[4] <= H[3]; ++A[4]) {
                    bool ok = true;
                    for (std::size_t k = 0; k < nc && ok; ++k) {
                        Rat o = cst[k];
                        for (int j = 0; j < 4; ++j) o += lin[k][j] * A[j + 1];
                        if (o < 0) ok = false;
                    }
                    if (!ok) continue;
                    if (auto q = F.at(A)) out.push_back(*q);
                }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------- input forms

struct InputForm {
    long D = 0;
    bool companion = false;
    long level = 0;
    long disc_size = 0;
    std::vector<std::pair<Rat, EtaQuotient>> terms;
    FracSeries series;
    std::map<long, Rat> principal;  // m > 0 -> coefficient of q^{-m}
    Rat constant;

    Rat coefficient(long m) const {  // of q^{-m}
        auto it = principal.find(m);
        return it == principal.end() ? Rat(0) : it->second;
    }
};

struct InputSpec {
    long level, disc_size;
    std::map<long, Rat> target;            // m -> coefficient of q^{-m}
    std::map<long, std::vector<long>> preferred;  // pole order -> exponent vector
};

inline InputSpec input_spec(long D, bool companion) {
    InputSpec s;
    if (D == 6) {
        s.level = 12;
        s.disc_size = 72;
        if (!companion) {
            s.target = {{3, Rat(-6)}, {1, Rat(4)}};
            s.preferred[3] = {0, 1, 2, 4, 4, -10};
            s.preferred[1] = {-5, 12, 1, -4, -1, -2};
        } else {
            s.target = {{6, Rat(2)}, {3, Rat(-6)}};
        }
    } else if (D == 10) {
        s.level = 20;
        s.disc_size = 200;
        if (!companion) {
            s.target = {{3, Rat(3)}, {2, Rat(-2)}};
            s.preferred[3] = {0, -3, 6, -2, 8, -8};
            s.preferred[2] = {-2, 3, 2, 0, 2, -4};
            s.preferred[1] = {0, -1, 2, -2, 6, -4};
        } else {
            s.target = {{5, Rat(2)}, {2, Rat(-2)}};
        }
    } else {
        throw argument_error("input_spec: only D = 6 and D = 10 are supported");
    }
    return s;
}

// one quotient per pole order 0..max, combined by a triangular solve so that the principal part
// matches the target and the constant term vanishes
inline InputForm build_input_form(long D, bool companion = false, long prec = 60) {
    InputSpec spec = input_spec(D, companion);
    long maxpole = spec.target.rbegin()->first;
    InputForm f;
    f.D = D;
    f.companion = companion;
    f.level = spec.level;
    f.disc_size = spec.disc_size;
    std::vector<std::optional<EtaQuotient>> basis(maxpole + 1);
    std::vector<FracSeries> ser(maxpole + 1);
    for (long k = 0; k <= maxpole; ++k) {
        auto cands = search_eta_quotients(spec.level, spec.disc_size, make_rat(1, 2), k);
        if (cands.empty()) continue;
        EtaQuotient pick = cands.front();
        auto it = spec.preferred.find(k);
        if (it != spec.preferred.end()) {
            EtaQuotient want = make_eta_quotient(spec.level, it->second);
            if (std::find(cands.begin(), cands.end(), want) != cands.end()) pick = want;
        }
        basis[k] = pick;
        ser[k] = quotient_series(pick, prec + maxpole + 1);
        if (ser[k].offset != -k || ser[k].coeffs[0] != 1) throw std::logic_error("build_input_form: unexpected leading term");
    }
    // work on coefficients of q^{-maxpole} .. q^0
    std::map<long, Rat> want;  // exponent -> coefficient
    for (long e = -maxpole; e <= 0; ++e) want[e] = 0;
    for (auto& [m, c] : spec.target) want[-m] = c;
    std::map<long, Rat> have;
    for (long e = -maxpole; e <= 0; ++e) have[e] = 0;
    std::vector<Rat> coef(maxpole + 1, Rat(0));
    for (long k = maxpole; k >= 0; --k) {
        Rat need = want[-k] - have[-k];
        if (need == 0) continue;
        if (!basis[k]) throw domain_error("build_input_form: no eta quotient with a pole of order " + std::to_string(k));
        coef[k] = need;
        for (long e = -k; e <= 0; ++e) have[e] += need * ser[k].coefficient(Rat(e));
    }
    bool started = false;
    for (long k = maxpole; k >= 0; --k) {
        if (coef[k] == 0) continue;
        FracSeries term = ser[k] * coef[k];
        FracSeries aligned;
        aligned.offset = Rat(-maxpole);
        aligned.prec = prec + 1;
        aligned.coeffs.assign(aligned.prec, Rat(0));
        for (long i = 0; i < aligned.prec; ++i) aligned.coeffs[i] = term.coefficient(aligned.offset + i);
        f.series = started ? f.series + aligned : aligned;
        started = true;
        f.terms.push_back({coef[k], *basis[k]});
    }
    for (long m = 1; m <= maxpole; ++m) {
        Rat c = f.series.coefficient(Rat(-m));
        if (c != 0) f.principal[m] = c;
    }
    f.constant = f.series.coefficient(Rat(0));
    if (f.constant != 0) throw domain_error("build_input_form: nonzero constant term");
    for (auto& [m, c] : spec.target)
        if (f.coefficient(m) != c) throw std::logic_error("build_input_form: principal part mismatch");
    return f;
}

}  // namespace smcurve
