#include "smcurve/whittaker.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace smcurve;

namespace {

long val(const Rat& x, long p) {
    if (x == 0) return 1000;
    return vp(x, Int(p));
}

// S_j from A_k = p^k #{y mod p^(k+e) : v(Q(mu+y) - m) >= k} / p^(2(k+e)), by enumeration
DensityPoly density_brute(const Mat2& G, const std::array<Rat, 2>& mu, const Rat& m, long p, long K) {
    long e = std::max({0L, -val(mu[0], p), -val(mu[1], p)});
    DensityPoly A;
    for (long k = 0; k <= K; ++k) {
        long mod = 1;
        for (long i = 0; i < k + e; ++i) mod *= p;
        long hits = 0;
        for (long y0 = 0; y0 < mod; ++y0)
            for (long y1 = 0; y1 < mod; ++y1) {
                Rat x0 = mu[0] + y0, x1 = mu[1] + y1;
                Rat q = (G[0][0] * x0 * x0 + 2 * G[0][1] * x0 * x1 + G[1][1] * x1 * x1) / 2;
                hits += val(q - m, p) >= k;
            }
        A.push_back(pow_rat(Rat(p), k) * Rat(hits) / Rat(Int(mod) * mod));
    }
    DensityPoly S{A[0]};
    for (long k = 1; k <= K; ++k) S.push_back(A[k] - A[k - 1]);
    return S;
}

Rat at(const DensityPoly& S, std::size_t j) { return j < S.size() ? S[j] : Rat(0); }

// log|d| + 2 Lambda'/Lambda(1) from slowly converging Dirichlet series, averaged over a period
double k0_oracle(long d) {
    long N = -d;
    long X = N * 20000;
    std::vector<int> chi(N);
    for (long a = 0; a < N; ++a) chi[a] = kronecker(d, a);
    double L = 0, Lp = 0, sumL = 0, sumLp = 0;
    for (long n = 1; n < X + N; ++n) {
        int c = chi[n % N];
        if (c) {
            L += c / static_cast<double>(n);
            Lp -= c * std::log(static_cast<double>(n)) / n;
        }
        if (n >= X) {
            sumL += L;
            sumLp += Lp;
        }
    }
    L = sumL / N;
    Lp = sumLp / N;
    const double euler = 0.57721566490153286;
    return std::log(static_cast<double>(N)) - std::log(M_PI) - euler + 2 * Lp / L;
}

LogCombination logs(std::initializer_list<std::pair<long, Rat>> xs) {
    LogCombination out;
    for (auto& [p, c] : xs) out.add(Int(p), c);
    return out;
}

}  // namespace

TEST_CASE("local densities against enumeration", "[whittaker]") {
    std::vector<Mat2> grams = {
        {{{Rat(-4), Rat(2)}, {Rat(2), Rat(-6)}}},
        {{{Rat(-2), Rat(0)}, {Rat(0), Rat(-18)}}},
        {{{Rat(-6), Rat(3)}, {Rat(3), Rat(-12)}}},
    };
    std::vector<std::array<Rat, 2>> cosets = {{Rat(0), Rat(0)}, {make_rat(1, 3), Rat(0)}, {Rat(0), make_rat(1, 3)},
                                              {make_rat(1, 2), make_rat(1, 2)},
                                              {make_rat(1, 5), make_rat(2, 5)}};
    for (auto& G : grams)
        for (auto& mu : cosets) {
            // only cosets of the dual lattice
            Rat g0 = G[0][0] * mu[0] + G[0][1] * mu[1], g1 = G[0][1] * mu[0] + G[1][1] * mu[1];
            if (g0.get_den() != 1 || g1.get_den() != 1) continue;
            for (long p : {2L, 3L, 5L}) {
                Rat qmu = (G[0][0] * mu[0] * mu[0] + 2 * G[0][1] * mu[0] * mu[1] + G[1][1] * mu[1] * mu[1]) / 2;
                for (long n : {1L, 2L, 3L, 6L, 9L, 10L}) {
                    Rat m = qmu + Rat(-n);  // the norm form is negative definite
                    long K = p == 2 ? 5 : 3;
                    auto brute = density_brute(G, mu, m, p, K);
                    INFO("p=" << p << " m=" << m << " mu=(" << mu[0] << "," << mu[1] << ") G00=" << G[0][0]);
                    bool ok = true;
                    DensityPoly count;
                    try {
                        count = density_count(G, mu, m, Int(p), K);
                    } catch (const argument_error&) {
                        ok = false;
                    }
                    if (ok)
                        for (long j = 0; j <= K; ++j) CHECK(at(count, j) == brute[j]);
                    if (p != 2) {
                        auto closed = density_odd(G, mu, m, Int(p));
                        // the closed form is exact; the enumeration is exact through depth K
                        for (long j = 0; j <= K; ++j) CHECK(at(closed, j) == brute[j]);
                    }
                }
            }
        }
}

TEST_CASE("good prime factors", "[whittaker]") {
    CHECK(rho_p(Rat(3), Int(3), -24) == 1);
    CHECK(rho_p(Rat(9), Int(5), -24) == 1);
    CHECK(rho_p(Rat(49), Int(7), -24) == 3);  // 7 splits in Q(sqrt -6)
    CHECK(rho_p(Rat(13), Int(13), -24) == 0);  // 13 is inert
    CHECK(rho_p(Rat(169), Int(13), -24) == 1);
    auto d = whittaker_derivative(Rat(13), Int(13), -24);
    CHECK(d.coefficient(Int(13)) == 1);
    CHECK(whittaker_derivative(Rat(13 * 13 * 13 * 5), Int(13), -24).coefficient(Int(13)) == 2);
    CHECK_THROWS(whittaker_derivative(Rat(169), Int(13), -24));
    CHECK_THROWS_AS(rho_p(Rat(-1), Int(3), -24), argument_error);
}

TEST_CASE("archimedean constant against the Dirichlet series", "[whittaker]") {
    for (long d : {-3L, -4L, -8L, -24L, -20L, -163L}) {
        INFO("disc " << d);
        CHECK(std::abs(k0_constant(d) - k0_oracle(d)) < 1e-5);
    }
    CHECK_THROWS_AS(k0_constant(-12), argument_error);
}

TEST_CASE("printed kappa values", "[whittaker]") {
    auto kappa0 = [](long D, long t, long m) {
        auto L = standard_lattice(D);
        auto S = cm_splitting(L, find_cm_vector(L, Rat(t)));
        auto k = kappa_eta_detail(L, S, Vec3{0, 0, 0}, Rat(m));
        CHECK(k.archimedean_hits == 0);
        CHECK(k.value.residual == 0.0);
        return k.value;
    };
    SECTION("disc -24") {
        CHECK(kappa0(6, 6, 1).terms == logs({{2, Rat(-6)}}).terms);
        CHECK(kappa0(6, 6, 3).terms == logs({{2, Rat(-8)}, {3, Rat(-4)}}).terms);
    }
    SECTION("disc -163") {
        CHECK(kappa0(6, 163, 1).terms ==
              logs({{2, Rat(-4)}, {3, Rat(-11)}, {7, Rat(-4)}, {19, Rat(-4)}, {23, Rat(-4)}}).terms);
        CHECK(kappa0(6, 163, 3).terms ==
              logs({{2, make_rat(-40, 3)}, {3, Rat(-4)}, {5, Rat(-4)}, {11, Rat(-4)}, {17, Rat(-4)}}).terms);
    }
    SECTION("disc -68") {
        CHECK(kappa0(10, 17, 2).terms == logs({{2, Rat(-6)}, {5, Rat(-6)}}).terms);
        CHECK(kappa0(10, 17, 3).terms == logs({{2, Rat(-8)}, {5, make_rat(-14, 3)}}).terms);
    }
    SECTION("disc -20") {
        auto c = (kappa0(10, 5, 3) * Rat(3) + kappa0(10, 5, 2) * Rat(-2)) * make_rat(-1, 4);
        CHECK(c.terms == logs({{2, Rat(3)}}).terms);
    }
}

TEST_CASE("kappa is a class invariant of the coset", "[whittaker]") {
    // eta and eta + lattice vector give the same value
    auto L = standard_lattice(6);
    auto S = cm_splitting(L, find_cm_vector(L, Rat(163)));
    auto dg = disc_group(L);
    for (std::size_t i : {std::size_t(3), std::size_t(11), std::size_t(40)}) {
        Vec3 eta = dg.vector(i);
        Rat m = floor_frac(-dg.Q(i)) + 2;
        auto a = kappa_eta(L, S, eta, m);
        auto b = kappa_eta(L, S, vadd(eta, ivec(1, -2, 1)), m);
        CHECK(a.terms == b.terms);
        CHECK(a.residual == b.residual);
    }
}
