#pragma once

#include "arith.hpp"

#include <array>

namespace smcurve {

struct QuatAlgebra {
    long a = 0;  // alpha^2
    long b = 0;  // beta^2
    long D = 0;  // reduced discriminant
    bool operator==(const QuatAlgebra&) const = default;
};

struct QuatElem {
    std::array<Rat, 4> x{};  // coordinates in 1, alpha, beta, alpha*beta
    long a = 0, b = 0;

    QuatElem() = default;
    QuatElem(const QuatAlgebra& B, Rat x0, Rat x1, Rat x2, Rat x3) : x{x0, x1, x2, x3}, a(B.a), b(B.b) {}

    Rat trace() const { return 2 * x[0]; }
    Rat norm() const { return x[0] * x[0] - a * x[1] * x[1] - b * x[2] * x[2] + Rat(a * b) * x[3] * x[3]; }
    QuatElem conj() const {
        QuatElem y = *this;
        for (int i = 1; i < 4; ++i) y.x[i] = -y.x[i];
        return y;
    }
    QuatElem operator+(const QuatElem& o) const {
        check(o);
        QuatElem y = *this;
        for (int i = 0; i < 4; ++i) y.x[i] += o.x[i];
        return y;
    }
    QuatElem operator-(const QuatElem& o) const {
        check(o);
        QuatElem y = *this;
        for (int i = 0; i < 4; ++i) y.x[i] -= o.x[i];
        return y;
    }
    QuatElem operator*(const Rat& s) const {
        QuatElem y = *this;
        for (auto& c : y.x) c *= s;
        return y;
    }
    QuatElem operator*(const QuatElem& o) const {
        check(o);
        const auto& p = x;
        const auto& q = o.x;
        QuatElem z = *this;
        z.x[0] = p[0] * q[0] + a * p[1] * q[1] + b * p[2] * q[2] - Rat(a * b) * p[3] * q[3];
        z.x[1] = p[0] * q[1] + p[1] * q[0] - b * p[2] * q[3] + b * p[3] * q[2];
        z.x[2] = p[0] * q[2] + p[2] * q[0] + a * p[1] * q[3] - a * p[3] * q[1];
        z.x[3] = p[0] * q[3] + p[3] * q[0] + p[1] * q[2] - p[2] * q[1];
        return z;
    }
    bool operator==(const QuatElem& o) const { return x == o.x && a == o.a && b == o.b; }

private:
    void check(const QuatElem& o) const {
        if (a != o.a || b != o.b) throw argument_error("quaternion: elements of different algebras");
    }
};

inline QuatElem mul(const QuatElem& x, const QuatElem& y) { return x * y; }

inline QuatElem qunit(const QuatAlgebra& B, int i) {
    QuatElem e(B, 0, 0, 0, 0);
    e.x[i] = 1;
    return e;
}

// Hilbert symbol (a,b)_p
inline int hilbert_symbol(long a, long b, long p) {
    Int P(p);
    long va = vp(Int(a), P), vb = vp(Int(b), P);
    long u = a, v = b;
    for (long i = 0; i < va; ++i) u /= p;
    for (long i = 0; i < vb; ++i) v /= p;
    if (p != 2) {
        int s = ((va * vb) % 2 && p % 4 == 3) ? -1 : 1;
        if (vb % 2) s *= kronecker(Int(u), P);
        if (va % 2) s *= kronecker(Int(v), P);
        return s;
    }
    auto eps = [](long w) { return ((w % 8 + 8) % 8 == 3 || (w % 8 + 8) % 8 == 7) ? 1 : 0; };  // (w-1)/2 mod 2
    auto omega = [](long w) { long r = (w % 8 + 8) % 8; return (r == 3 || r == 5) ? 1 : 0; };   // (w^2-1)/8 mod 2
    long e = eps(u) * eps(v) + (va % 2) * omega(v) + (vb % 2) * omega(u);
    return e % 2 ? -1 : 1;
}

inline std::set<long> ramified_primes(long a, long b) {
    std::set<long> out;
    std::set<long> cand{2};
    for (auto& p : prime_divisors(Int(a))) cand.insert(p.get_si());
    for (auto& p : prime_divisors(Int(b))) cand.insert(p.get_si());
    for (long p : cand)
        if (hilbert_symbol(a, b, p) == -1) out.insert(p);
    return out;
}

inline long find_q(long D, long bound = 1000000) {
    if (D <= 0 || !is_squarefree(Int(D))) throw argument_error("find_q: D must be positive squarefree");
    auto odd = prime_divisors(Int(D));
    for (long q = 5; q < bound; q += 8) {
        if (!is_prime(Int(q))) continue;
        bool ok = true;
        for (auto& p : odd)
            if (p != 2 && kronecker(Int(q), p) != -1) ok = false;
        if (ok) return q;
    }
    throw domain_error("find_q: no suitable prime below bound");
}

struct QuatOrder {
    QuatAlgebra algebra;
    std::array<QuatElem, 4> basis;
    long m = 0;

    // coordinates of x in the order basis (rational in general)
    std::array<Rat, 4> coords(const QuatElem& x) const;
    bool contains(const QuatElem& x) const {
        for (auto& c : coords(x))
            if (c.get_den() != 1) return false;
        return true;
    }
};

namespace detail {

template <std::size_t N>
using RatMat = std::array<std::array<Rat, N>, N>;

template <std::size_t N>
inline std::array<Rat, N> solve(RatMat<N> A, std::array<Rat, N> rhs) {
    for (std::size_t c = 0; c < N; ++c) {
        std::size_t piv = c;
        while (piv < N && A[piv][c] == 0) ++piv;
        if (piv == N) throw domain_error("solve: singular matrix");
        std::swap(A[c], A[piv]);
        std::swap(rhs[c], rhs[piv]);
        for (std::size_t r = 0; r < N; ++r) {
            if (r == c || A[r][c] == 0) continue;
            Rat f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < N; ++k) A[r][k] -= f * A[c][k];
            rhs[r] -= f * rhs[c];
        }
    }
    std::array<Rat, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = rhs[i] / A[i][i];
    return out;
}

template <std::size_t N>
inline Rat det(RatMat<N> A) {
    Rat d = 1;
    for (std::size_t c = 0; c < N; ++c) {
        std::size_t piv = c;
        while (piv < N && A[piv][c] == 0) ++piv;
        if (piv == N) return 0;
        if (piv != c) {
            std::swap(A[c], A[piv]);
            d = -d;
        }
        d *= A[c][c];
        for (std::size_t r = c + 1; r < N; ++r) {
            Rat f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < N; ++k) A[r][k] -= f * A[c][k];
        }
    }
    return d;
}

}  // namespace detail

inline std::array<Rat, 4> QuatOrder::coords(const QuatElem& x) const {
    detail::RatMat<4> A;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) A[i][j] = basis[j].x[i];
    return detail::solve<4>(A, x.x);
}

// Z + Z(1+alpha)/2 + Z(m alpha + alpha beta)/q + Z e1 e2, with m the least positive root of m^2 = D mod q
inline QuatOrder maximal_order(long D, long q) {
    long m = 0;
    for (long r = 1; r < q; ++r)
        if ((r * r - D) % q == 0) {
            m = r;
            break;
        }
    if (m == 0) throw std::logic_error("maximal_order: D is not a square mod q");
    QuatAlgebra B{q, D, D};
    QuatOrder O;
    O.algebra = B;
    O.m = m;
    O.basis[0] = QuatElem(B, 1, 0, 0, 0);
    O.basis[1] = QuatElem(B, make_rat(1, 2), make_rat(1, 2), 0, 0);
    O.basis[2] = QuatElem(B, 0, make_rat(m, q), 0, make_rat(1, q));
    O.basis[3] = O.basis[1] * O.basis[2];
    return O;
}

inline Rat order_discriminant(const QuatOrder& O) {
    detail::RatMat<4> T;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) T[i][j] = (O.basis[i] * O.basis[j]).trace();
    return detail::det<4>(T);  // = -(reduced discriminant)^2
}

inline bool is_order(const QuatOrder& O) {
    if (!O.contains(qunit(O.algebra, 0))) return false;
    for (auto& x : O.basis) {
        if (x.trace().get_den() != 1 || x.norm().get_den() != 1) return false;
        for (auto& y : O.basis)
            if (!O.contains(x * y)) return false;
    }
    return true;
}

// element r + s sqrt(b)
struct SqrtNum {
    Rat r, s;
    long b = 0;
    SqrtNum operator+(const SqrtNum& o) const { return {r + o.r, s + o.s, b}; }
    SqrtNum operator-(const SqrtNum& o) const { return {r - o.r, s - o.s, b}; }
    SqrtNum operator*(const SqrtNum& o) const { return {r * o.r + Rat(b) * s * o.s, r * o.s + s * o.r, b}; }
    bool operator==(const SqrtNum& o) const { return r == o.r && s == o.s; }
    double value() const { return r.get_d() + s.get_d() * std::sqrt(static_cast<double>(b)); }
};

using SqrtMat = std::array<std::array<SqrtNum, 2>, 2>;

inline SqrtMat matmul(const SqrtMat& A, const SqrtMat& B) {
    SqrtMat C;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) C[i][j] = A[i][0] * B[0][j] + A[i][1] * B[1][j];
    return C;
}

inline SqrtNum det(const SqrtMat& A) { return A[0][0] * A[1][1] - A[0][1] * A[1][0]; }

// alpha -> (0 a; 1 0), beta -> (sqrt b, 0; 0, -sqrt b)
inline SqrtMat embed(const QuatElem& x) {
    const long a = x.a, b = x.b;
    SqrtMat M;
    M[0][0] = {x.x[0], x.x[2], b};
    M[1][1] = {x.x[0], -x.x[2], b};
    M[0][1] = {a * x.x[1], -a * x.x[3], b};
    M[1][0] = {x.x[1], x.x[3], b};
    return M;
}

}  // namespace smcurve
