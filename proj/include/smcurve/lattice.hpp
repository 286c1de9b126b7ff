#pragma once

#include "quaternion.hpp"

#include <complex>
#include <functional>
#include <optional>

namespace smcurve {

using Vec3 = std::array<Rat, 3>;
using Mat3 = std::array<std::array<Rat, 3>, 3>;
using Mat2 = std::array<std::array<Rat, 2>, 2>;

inline Rat bil(const Mat3& G, const Vec3& u, const Vec3& v) {
    Rat s = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += u[i] * G[i][j] * v[j];
    return s;
}
inline Rat qform(const Mat3& G, const Vec3& u) { return bil(G, u, u) / 2; }
inline Vec3 vadd(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 vsub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 vscale(const Rat& s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline bool is_integral(const Vec3& v) {
    for (auto& c : v)
        if (c.get_den() != 1) return false;
    return true;
}
inline Vec3 ivec(long a, long b, long c) { return {Rat(a), Rat(b), Rat(c)}; }

// ---------------------------------------------------------------- integer normal forms

using IntMat = std::vector<std::vector<Int>>;

struct SmithForm {
    std::vector<Int> diag;  // invariant factors (non-negative)
    IntMat U, V;            // U * A * V = diag
};

inline IntMat identity(std::size_t n) {
    IntMat I(n, std::vector<Int>(n, 0));
    for (std::size_t i = 0; i < n; ++i) I[i][i] = 1;
    return I;
}

inline SmithForm smith_normal_form(IntMat A) {
    const std::size_t n = A.size(), m = A[0].size();
    IntMat U = identity(n), V = identity(m);
    auto rowop = [&](std::size_t i, std::size_t j, const Int& k) {  // row_i -= k row_j
        for (std::size_t c = 0; c < m; ++c) A[i][c] -= k * A[j][c];
        for (std::size_t c = 0; c < n; ++c) U[i][c] -= k * U[j][c];
    };
    auto colop = [&](std::size_t i, std::size_t j, const Int& k) {  // col_i -= k col_j
        for (std::size_t r = 0; r < n; ++r) A[r][i] -= k * A[r][j];
        for (std::size_t r = 0; r < m; ++r) V[r][i] -= k * V[r][j];
    };
    auto rowswap = [&](std::size_t i, std::size_t j) {
        std::swap(A[i], A[j]);
        std::swap(U[i], U[j]);
    };
    auto colswap = [&](std::size_t i, std::size_t j) {
        for (auto& row : A) std::swap(row[i], row[j]);
        for (auto& row : V) std::swap(row[i], row[j]);
    };
    const std::size_t k = std::min(n, m);
    for (std::size_t t = 0; t < k; ++t) {
        for (;;) {
            // smallest nonzero entry in the trailing block becomes the pivot
            std::optional<std::pair<std::size_t, std::size_t>> best;
            for (std::size_t r = t; r < n; ++r)
                for (std::size_t c = t; c < m; ++c)
                    if (A[r][c] != 0 && (!best || abs(A[r][c]) < abs(A[best->first][best->second]))) best = {r, c};
            if (!best) break;
            rowswap(t, best->first);
            colswap(t, best->second);
            bool clean = true;
            for (std::size_t r = t + 1; r < n; ++r) {
                rowop(r, t, floor_div(A[r][t], A[t][t]));
                if (A[r][t] != 0) clean = false;
            }
            for (std::size_t c = t + 1; c < m; ++c) {
                colop(c, t, floor_div(A[t][c], A[t][t]));
                if (A[t][c] != 0) clean = false;
            }
            if (!clean) continue;
            bool divides = true;
            for (std::size_t r = t + 1; r < n && divides; ++r)
                for (std::size_t c = t + 1; c < m; ++c)
                    if (A[r][c] % A[t][t] != 0) {
                        for (std::size_t cc = 0; cc < m; ++cc) A[t][cc] += A[r][cc];
                        for (std::size_t cc = 0; cc < n; ++cc) U[t][cc] += U[r][cc];
                        divides = false;
                        break;
                    }
            if (divides) break;
        }
        if (A[t][t] < 0) {
            for (std::size_t c = 0; c < m; ++c) A[t][c] = -A[t][c];
            for (std::size_t c = 0; c < n; ++c) U[t][c] = -U[t][c];
        }
    }
    SmithForm S;
    for (std::size_t t = 0; t < k; ++t) S.diag.push_back(A[t][t]);
    S.U = U;
    S.V = V;
    return S;
}

// ---------------------------------------------------------------- the trace-zero lattice

struct TraceZeroLattice {
    QuatOrder order;
    std::array<QuatElem, 3> basis;
    Mat3 gram;  // (x,y) = tr(x conj(y))

    QuatElem to_quat(const Vec3& c) const {
        QuatElem e = basis[0] * c[0] + basis[1] * c[1] + basis[2] * c[2];
        return e;
    }
    Vec3 coords(const QuatElem& x) const {
        detail::RatMat<3> A;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) A[i][j] = basis[j].x[i + 1];
        if (x.x[0] != 0) throw argument_error("coords: element is not trace zero");
        return detail::solve<3>(A, {x.x[1], x.x[2], x.x[3]});
    }
    Rat Q(const Vec3& c) const { return qform(gram, c); }
    Rat pair(const Vec3& u, const Vec3& v) const { return bil(gram, u, v); }
    Rat det() const {
        detail::RatMat<3> A;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) A[i][j] = gram[i][j];
        return detail::det<3>(A);
    }
    long D() const { return order.algebra.D; }
};

namespace detail {

// integer kernel of a single integer row via unimodular column operations
inline std::vector<std::vector<Int>> row_kernel(std::vector<Int> row) {
    const std::size_t n = row.size();
    IntMat U = identity(n);
    auto colop = [&](std::size_t i, std::size_t j, const Int& k) {
        for (std::size_t r = 0; r < n; ++r) U[r][i] -= k * U[r][j];
        row[i] -= k * row[j];
    };
    for (;;) {
        std::optional<std::size_t> piv;
        std::size_t nonzero = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (row[i] != 0) {
                ++nonzero;
                if (!piv || abs(row[i]) < abs(row[*piv])) piv = i;
            }
        if (nonzero <= 1) break;
        for (std::size_t i = 0; i < n; ++i)
            if (i != *piv && row[i] != 0) colop(i, *piv, floor_div(row[i], row[*piv]));
    }
    std::vector<std::vector<Int>> ker;
    for (std::size_t i = 0; i < n; ++i)
        if (row[i] == 0) {
            std::vector<Int> v(n);
            for (std::size_t r = 0; r < n; ++r) v[r] = U[r][i];
            ker.push_back(v);
        }
    return ker;
}

// row-style Hermite form of integer rows (positive pivots, entries above pivots reduced)
inline IntMat hermite_rows(IntMat A) {
    const std::size_t m = A[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < m && r < A.size(); ++c) {
        for (;;) {
            std::optional<std::size_t> piv;
            for (std::size_t i = r; i < A.size(); ++i)
                if (A[i][c] != 0 && (!piv || abs(A[i][c]) < abs(A[*piv][c]))) piv = i;
            if (!piv) break;
            std::swap(A[r], A[*piv]);
            bool done = true;
            for (std::size_t i = r + 1; i < A.size(); ++i) {
                Int k = floor_div(A[i][c], A[r][c]);
                for (std::size_t j = 0; j < m; ++j) A[i][j] -= k * A[r][j];
                if (A[i][c] != 0) done = false;
            }
            if (done) break;
        }
        if (r < A.size() && A[r][c] != 0) {
            if (A[r][c] < 0)
                for (auto& x : A[r]) x = -x;
            for (std::size_t i = 0; i < r; ++i) {
                Int k = floor_div(A[i][c], A[r][c]);
                for (std::size_t j = 0; j < m; ++j) A[i][j] -= k * A[r][j];
            }
            ++r;
        }
    }
    A.resize(r);
    return A;
}

}  // namespace detail

// L = O cap V.  Basis ordering: l1 spans L cap Q alpha, l2 completes L cap (Q alpha + Q alpha beta),
// l3 carries the beta direction with zero alpha part when possible.
inline TraceZeroLattice trace_zero_lattice(const QuatOrder& O) {
    std::vector<Int> tr(4);
    for (int i = 0; i < 4; ++i) {
        Rat t = O.basis[i].trace();
        if (t.get_den() != 1) throw argument_error("trace_zero_lattice: non-integral trace");
        tr[i] = t.get_num();
    }
    auto ker = detail::row_kernel(tr);
    // imaginary coordinates in the order (beta, alpha beta, alpha), scaled to integers
    Int den = 1;
    std::vector<std::array<Rat, 3>> gens;
    for (auto& k : ker) {
        QuatElem e = O.basis[0] * Rat(k[0]) + O.basis[1] * Rat(k[1]) + O.basis[2] * Rat(k[2]) + O.basis[3] * Rat(k[3]);
        std::array<Rat, 3> c{e.x[2], e.x[3], e.x[1]};
        for (auto& x : c) den = lcm(den, x.get_den());
        gens.push_back(c);
    }
    IntMat A;
    for (auto& g : gens) {
        std::vector<Int> row(3);
        for (int i = 0; i < 3; ++i) row[i] = Rat(g[i] * den).get_num();
        A.push_back(row);
    }
    IntMat H = detail::hermite_rows(A);
    if (H.size() != 3) throw std::logic_error("trace_zero_lattice: rank deficiency");
    auto elem = [&](const std::vector<Int>& row) {
        return std::array<Rat, 3>{Rat(row[0], den), Rat(row[1], den), Rat(row[2], den)};
    };
    std::array<Rat, 3> b3 = elem(H[0]), b2 = elem(H[1]), b1 = elem(H[2]);
    for (auto* v : {&b3, &b2, &b1})
        for (auto& x : *v) x.canonicalize();
    // b2: alpha coefficient into [0, pivot of b1)
    {
        Int k = rat_floor(b2[2] / b1[2]);
        for (int i = 0; i < 3; ++i) b2[i] -= Rat(k) * b1[i];
    }
    // b3: kill the alpha coefficient using b2 and b1 if possible
    {
        Rat a2 = b2[2] / b1[2];
        Int period = a2.get_den();
        bool found = false;
        for (Int i = 0; i < period; ++i) {
            Rat a3 = (b3[2] + Rat(i) * b2[2]) / b1[2];
            if (a3.get_den() == 1) {
                for (int j = 0; j < 3; ++j) b3[j] += Rat(i) * b2[j] - a3 * b1[j];
                found = true;
                break;
            }
        }
        if (found) {
            // pure alpha-beta step P*b2 - (P a2) b1
            Rat step = Rat(period) * b2[1];
            Int k = rat_floor(b3[1] / step);
            for (int j = 0; j < 3; ++j) b3[j] -= Rat(k) * (Rat(period) * b2[j] - Rat(period) * a2 * b1[j]);
        }
    }
    const QuatAlgebra& B = O.algebra;
    auto to_q = [&](const std::array<Rat, 3>& c) { return QuatElem(B, 0, c[2], c[0], c[1]); };
    TraceZeroLattice L;
    L.order = O;
    L.basis = {to_q(b1), to_q(b2), to_q(b3)};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) L.gram[i][j] = (L.basis[i] * L.basis[j].conj()).trace();
    return L;
}

inline TraceZeroLattice standard_lattice(long D) {
    long q = find_q(D);
    return trace_zero_lattice(maximal_order(D, q));
}

// ---------------------------------------------------------------- discriminant group

struct DiscGroup {
    std::vector<Vec3> generators;  // coordinates in the lattice basis
    std::vector<long> orders;      // invariant factors > 1
    long level = 1;
    Mat3 gram;
    std::vector<std::vector<long>> elements;  // index tuples
    std::vector<Rat> qvals;                   // Q mod 1 in [0,1)

    std::size_t size() const { return elements.size(); }
    Vec3 vector(std::size_t idx) const {
        Vec3 v{0, 0, 0};
        for (std::size_t i = 0; i < generators.size(); ++i) v = vadd(v, vscale(Rat(elements[idx][i]), generators[i]));
        return v;
    }
    Rat Q(std::size_t idx) const { return qvals[idx]; }
    Rat pair(std::size_t i, std::size_t j) const { return floor_frac(bil(gram, vector(i), vector(j))); }
    std::size_t index_of(const std::vector<long>& t) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < orders.size(); ++i) idx = idx * orders[i] + ((t[i] % orders[i]) + orders[i]) % orders[i];
        return idx;
    }
    std::size_t add(std::size_t i, std::size_t j) const {
        std::vector<long> t(orders.size());
        for (std::size_t k = 0; k < orders.size(); ++k) t[k] = elements[i][k] + elements[j][k];
        return index_of(t);
    }
    std::size_t neg(std::size_t i) const {
        std::vector<long> t(orders.size());
        for (std::size_t k = 0; k < orders.size(); ++k) t[k] = -elements[i][k];
        return index_of(t);
    }
    std::size_t scale(std::size_t i, long n) const {
        std::vector<long> t(orders.size());
        for (std::size_t k = 0; k < orders.size(); ++k) t[k] = elements[i][k] * (n % orders[k]);
        return index_of(t);
    }
    // index of a dual vector given by lattice-basis coordinates
    std::size_t locate(const Vec3& v) const {
        std::vector<long> t;
        for (std::size_t k = 0; k < orders.size(); ++k) {
            Rat w = 0;
            for (std::size_t j = 0; j < 3; ++j) w += vinv[smith_index[k]][j] * v[j];
            w *= orders[k];
            if (w.get_den() != 1) throw argument_error("DiscGroup::locate: vector is not in the dual lattice");
            t.push_back(mod_pos(w.get_num(), Int(orders[k])).get_si());
        }
        return index_of(t);
    }
    Mat3 vinv;                             // inverse of the Smith column transform
    std::vector<std::size_t> smith_index;  // Smith position of each generator
};

inline DiscGroup disc_group(const TraceZeroLattice& L) {
    IntMat G(3, std::vector<Int>(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (L.gram[i][j].get_den() != 1) throw argument_error("disc_group: Gram not integral");
            G[i][j] = L.gram[i][j].get_num();
        }
    SmithForm S = smith_normal_form(G);
    DiscGroup dg;
    dg.gram = L.gram;
    for (std::size_t i = 0; i < 3; ++i) {
        if (S.diag[i] == 0) throw domain_error("disc_group: degenerate lattice");
        if (S.diag[i] == 1) continue;
        Vec3 g;
        for (std::size_t r = 0; r < 3; ++r) g[r] = Rat(S.V[r][i], S.diag[i]);
        for (auto& c : g) c.canonicalize();
        dg.generators.push_back(g);
        dg.orders.push_back(S.diag[i].get_si());
        dg.smith_index.push_back(i);
    }
    {
        detail::RatMat<3> Vm;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) Vm[r][c] = Rat(S.V[r][c]);
        for (int c = 0; c < 3; ++c) {
            std::array<Rat, 3> e{0, 0, 0};
            e[c] = 1;
            auto col = detail::solve<3>(Vm, e);
            for (int r = 0; r < 3; ++r) dg.vinv[r][c] = col[r];
        }
    }
    std::size_t total = 1;
    for (long o : dg.orders) total *= o;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::vector<long> t(dg.orders.size());
        std::size_t r = idx;
        for (std::size_t k = dg.orders.size(); k-- > 0;) {
            t[k] = static_cast<long>(r % dg.orders[k]);
            r /= dg.orders[k];
        }
        dg.elements.push_back(t);
    }
    Int level = 1;
    for (std::size_t idx = 0; idx < total; ++idx) {
        Rat q = floor_frac(qform(L.gram, dg.vector(idx)));
        dg.qvals.push_back(q);
        level = lcm(level, q.get_den());
    }
    dg.level = level.get_si();
    return dg;
}

// ---------------------------------------------------------------- CM vectors and splittings

inline bool is_primitive(const Vec3& z) {
    if (!is_integral(z)) return false;
    Int g = gcd(gcd(z[0].get_num(), z[1].get_num()), z[2].get_num());
    return g == 1;
}

// the CM order of z is maximal: for t = 3 mod 4 require (1+z)/2 in O
inline bool optimal_for_maximal_order(const TraceZeroLattice& L, const Vec3& z) {
    Rat t = L.Q(z);
    DiscSplit s = disc_split(t);
    if (s.n == 1) return true;
    if (s.n == 2 && mod_pos(Int(s.disc), 4) == 1) {
        QuatElem w = (qunit(L.order.algebra, 0) + L.to_quat(z)) * make_rat(1, 2);
        return L.order.contains(w);
    }
    return false;
}

namespace detail {

struct PinnedVector {
    long D;
    long t;
    Vec3 z;
};

inline const std::vector<PinnedVector>& pinned_vectors() {
    static const std::vector<PinnedVector> v = {
        {6, 6, ivec(0, 0, 1)},
        {6, 163, ivec(1, 14, 0)},
        {10, 5, ivec(1, -3, 0)},
        {10, 17, ivec(7, -13, 1)},
    };
    return v;
}

}  // namespace detail

// the order Q(z) cap O has discriminant disc (-t if (1+z)/2 lies in O, else -4t)
inline bool optimal_for_order(const TraceZeroLattice& L, const Vec3& z, long disc) {
    Rat t = L.Q(z);
    QuatElem w = (qunit(L.order.algebra, 0) + L.to_quat(z)) * make_rat(1, 2);
    bool half = L.order.contains(w);
    return half ? Rat(-disc) == t : Rat(-disc) == 4 * t;
}

// shortest-coordinate primitive vector with Q(z) = t; ties broken lexicographically.
// With require_optimal the embedding of the maximal order of Q(sqrt(-t)) must be optimal;
// with order_disc the embedded order must have exactly that discriminant.
inline Vec3 find_cm_vector(const TraceZeroLattice& L, const Rat& t, bool require_optimal = true, long radius = 400,
                           std::optional<long> order_disc = std::nullopt) {
    if (t <= 0) throw argument_error("find_cm_vector: t must be positive");
    auto accept = [&](const Vec3& z) {
        if (order_disc) return optimal_for_order(L, z, *order_disc);
        return !require_optimal || optimal_for_maximal_order(L, z);
    };
    if (t.get_den() == 1)
        for (auto& p : detail::pinned_vectors())
            if (p.D == L.D() && t == p.t && accept(p.z)) return p.z;
    if (t.get_den() != 1) throw domain_error("find_cm_vector: Q is integral on L, t is not");
    if (L.D() > 1) require_nonsplit(disc_split(t).disc, L.D());
    using i128 = __int128;
    long g[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g[i][j] = L.gram[i][j].get_num().get_si();
    const i128 tq = 2 * static_cast<i128>(t.get_num().get_si());
    auto isqrt = [](i128 n) -> std::optional<i128> {
        if (n < 0) return std::nullopt;
        i128 r = static_cast<i128>(std::sqrt(static_cast<long double>(n)));
        while (r * r > n) --r;
        while ((r + 1) * (r + 1) <= n) ++r;
        if (r * r != n) return std::nullopt;
        return r;
    };
    for (long R = 1; R <= radius; ++R) {
        std::optional<Vec3> best;
        for (long a = -R; a <= R; ++a)
            for (long b = -R; b <= R; ++b) {
                // solve the quadratic in c for the given a, b
                i128 A = g[2][2];
                i128 Bc = 2 * (static_cast<i128>(g[0][2]) * a + static_cast<i128>(g[1][2]) * b);
                i128 C = static_cast<i128>(g[0][0]) * a * a + 2 * static_cast<i128>(g[0][1]) * a * b +
                         static_cast<i128>(g[1][1]) * b * b - tq;
                auto sq = isqrt(Bc * Bc - 4 * A * C);
                if (!sq) continue;
                for (int sgn : {-1, 1}) {
                    i128 numc = -Bc + sgn * *sq;
                    if (numc % (2 * A) != 0) continue;
                    long cl = static_cast<long>(numc / (2 * A));
                    if (std::max({std::labs(a), std::labs(b), std::labs(cl)}) != R) continue;
                    Vec3 z = ivec(a, b, cl);
                    if (!is_primitive(z)) continue;
                    if (!accept(z)) continue;
                    if (!best || z < *best) best = z;
                }
            }
        if (best) return *best;
    }
    throw domain_error("find_cm_vector: no representation of t within the search radius");
}

struct GlueElement {
    Vec3 lambda;          // representative in L
    Rat plus;             // lambda_+ = plus * z  (mod Z z)
    std::array<Rat, 2> minus;  // lambda_- in the L_- basis (mod Z^2)
};

struct CMSplitting {
    Vec3 z;
    Rat t;
    DiscSplit split;
    Rat plus_gram;                  // (z,z) = 2t
    std::array<Vec3, 2> minus_basis;
    Mat2 minus_gram;                // bilinear Gram of L_-, negative definite
    std::vector<GlueElement> glue;  // cyclic, glue[j] = j * generator
    long pairing_gcd = 0;           // gcd of (x,z) over x in L
    // Q(X u1 + Y u2) = c (X^2 + tprime Y^2) with u1 = minus_basis[0], u2 in L_- orthogonal to u1
    Rat normal_c, normal_tprime;
    std::array<Vec3, 2> normal_basis;
};

inline Rat det2(const Mat2& G) { return G[0][0] * G[1][1] - G[0][1] * G[1][0]; }

struct SplitVector {
    Rat plus;                  // v_+ = plus * z
    std::array<Rat, 2> minus;  // v_- in the L_- basis
};

// v (any vector of L tensor Q, in lattice coordinates) = v_+ + v_-
inline SplitVector split_vector(const TraceZeroLattice& L, const CMSplitting& S, const Vec3& v) {
    Rat s = L.pair(v, S.z) / (2 * S.t);
    Vec3 lm = vsub(v, vscale(s, S.z));
    const Mat2& Gm = S.minus_gram;
    Rat p1 = L.pair(lm, S.minus_basis[0]), p2 = L.pair(lm, S.minus_basis[1]);
    Rat dd = det2(Gm);
    return {s, {(p1 * Gm[1][1] - p2 * Gm[0][1]) / dd, (p2 * Gm[0][0] - p1 * Gm[1][0]) / dd}};
}

inline CMSplitting cm_splitting(const TraceZeroLattice& L, const Vec3& z) {
    Rat t = L.Q(z);
    if (t <= 0) throw argument_error("cm_splitting: Q(z) must be positive");
    if (!is_primitive(z)) throw argument_error("cm_splitting: z must be a primitive lattice vector");
    CMSplitting S;
    S.z = z;
    S.t = t;
    S.split = disc_split(t);
    S.plus_gram = 2 * t;
    // row (x -> (x,z)) on Z^3
    std::vector<Int> row(3);
    for (int i = 0; i < 3; ++i) {
        Rat r = 0;
        for (int j = 0; j < 3; ++j) r += L.gram[i][j] * z[j];
        row[i] = r.get_num();
    }
    Int g = gcd(gcd(row[0], row[1]), row[2]);
    S.pairing_gcd = g.get_si();
    auto ker = detail::row_kernel(row);
    Vec3 u1{Rat(ker[0][0]), Rat(ker[0][1]), Rat(ker[0][2])};
    Vec3 u2{Rat(ker[1][0]), Rat(ker[1][1]), Rat(ker[1][2])};
    // Gauss reduction for the positive definite form -Q
    auto nq = [&](const Vec3& v) -> Rat { return -L.Q(v); };
    for (;;) {
        if (nq(u2) < nq(u1)) std::swap(u1, u2);
        Rat b = -L.pair(u1, u2), a = 2 * nq(u1);
        if (2 * abs(b) <= a) break;
        Int r = rat_floor(b / a + make_rat(1, 2));
        u2 = vsub(u2, vscale(Rat(r), u1));
    }
    if (L.pair(u1, u2) > 0) u2 = vscale(-1, u2);
    S.minus_basis = {u1, u2};
    S.minus_gram = {{{L.pair(u1, u1), L.pair(u1, u2)}, {L.pair(u2, u1), L.pair(u2, u2)}}};
    // orthogonal companion of u1 inside L_-
    {
        Rat a = L.pair(u1, u1), b = L.pair(u1, u2);
        Rat ratio = -b / a;  // u2 + ratio u1 is orthogonal to u1
        Int d = ratio.get_den();
        Vec3 w = vadd(vscale(Rat(d), u2), vscale(Rat(d) * ratio, u1));
        S.normal_basis = {u1, w};
        S.normal_c = L.Q(u1);
        S.normal_tprime = L.Q(w) / L.Q(u1);
    }
    // glue group L/(L_- + L_+): cyclic of order 2t/g; choose l3 as generator when it works
    Rat ordr = 2 * t / Rat(g);
    if (ordr.get_den() != 1) throw std::logic_error("cm_splitting: non-integral glue order");
    long order = ordr.get_num().get_si();
    Vec3 gen{0, 0, 0};
    bool have = false;
    for (int i = 2; i >= 0 && !have; --i) {
        Vec3 e{0, 0, 0};
        e[i] = 1;
        Rat pz = L.pair(e, z) / Rat(g);
        if (gcd(mod_pos(pz.get_num(), Int(order)), Int(order)) == 1 || order == 1) {
            gen = e;
            have = true;
        }
    }
    if (!have) {
        // fall back to the preimage of the gcd (x,z) = g
        IntMat U = identity(3);
        std::vector<Int> r = row;
        for (;;) {
            std::optional<std::size_t> piv;
            std::size_t nz = 0;
            for (std::size_t i = 0; i < 3; ++i)
                if (r[i] != 0) {
                    ++nz;
                    if (!piv || abs(r[i]) < abs(r[*piv])) piv = i;
                }
            if (nz <= 1) break;
            for (std::size_t i = 0; i < 3; ++i)
                if (i != *piv && r[i] != 0) {
                    Int k = floor_div(r[i], r[*piv]);
                    for (std::size_t rr = 0; rr < 3; ++rr) U[rr][i] -= k * U[rr][*piv];
                    r[i] -= k * r[*piv];
                }
        }
        for (std::size_t i = 0; i < 3; ++i)
            if (r[i] != 0) gen = {Rat(U[0][i]), Rat(U[1][i]), Rat(U[2][i])};
    }
    for (long j = 0; j < order; ++j) {
        Vec3 lam = vscale(Rat(j), gen);
        auto [s, c] = split_vector(L, S, lam);
        GlueElement ge;
        ge.lambda = lam;
        ge.plus = floor_frac(s);
        ge.minus = {floor_frac(c[0]), floor_frac(c[1])};
        S.glue.push_back(ge);
    }
    return S;
}

// ---------------------------------------------------------------- fixed points

// roots (x2 sqrt D +- sqrt(-Q(x))) / (x1 + x3 sqrt D), kept symbolic
struct FixedPoint {
    long D = 0;
    Rat num_sqrtD;   // x2
    Rat negQ;        // -Q(x) < 0, so the radical is i sqrt(Q)
    Rat den_r, den_s;
    bool at_infinity = false;

    std::array<std::complex<double>, 2> numeric() const {
        double sd = std::sqrt(static_cast<double>(D));
        std::complex<double> rad(0.0, std::sqrt(-negQ.get_d()));
        std::complex<double> den(den_r.get_d() + den_s.get_d() * sd, 0.0);
        std::complex<double> a(num_sqrtD.get_d() * sd, 0.0);
        return {(a + rad) / den, (a - rad) / den};
    }
};

inline FixedPoint fixed_point(const QuatElem& x) {
    if (x.x[0] != 0) throw argument_error("fixed_point: element must have trace zero");
    if (x.norm() <= 0) throw domain_error("fixed_point: Q(x) must be positive");
    FixedPoint f;
    f.D = x.b;
    f.num_sqrtD = x.x[2];
    f.negQ = -x.norm();
    f.den_r = x.x[1];
    f.den_s = x.x[3];
    if (f.den_r == 0 && f.den_s == 0) f.at_infinity = true;
    return f;
}

inline std::complex<double> mobius(const SqrtMat& M, std::complex<double> z) {
    auto v = [](const SqrtNum& n) { return std::complex<double>(n.value(), 0.0); };
    return (v(M[0][0]) * z + v(M[0][1])) / (v(M[1][0]) * z + v(M[1][1]));
}

}  // namespace smcurve
