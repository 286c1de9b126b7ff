#include "smcurve/weilrep.hpp"

#include <catch_amalgamated.hpp>

#include <complex>
#include <numeric>
#include <random>

using namespace smcurve;
using cd = std::complex<double>;

namespace {

cd eta_numeric(cd tau) {
    const cd two_pi_i(0, 2 * M_PI);
    cd q = std::exp(two_pi_i * tau);
    cd p = std::exp(two_pi_i * tau / 24.0);
    cd qn = q;
    for (int k = 1; k < 3000; ++k, qn *= q) p *= 1.0 - qn;
    return p;
}

MetaElement with_bottom_row(long c, long d, int branch = 1) {
    Int g, s, t;
    mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), Int(d).get_mpz_t(), Int(c).get_mpz_t());
    return {s.get_si(), -t.get_si(), c, d, branch};
}

}  // namespace

TEST_CASE("Gauss sum constant and signature", "[weilrep]") {
    for (auto [D, n] : {std::pair<long, long>{6, 12}, {10, 20}}) {
        const WeilAction& W = standard_action(D);
        Cyc want = (Cyc::rational(W.M, 1) - Cyc::root(W.M, W.M / 4)) * Rat(1, n);
        CHECK(W.CL == want);
        CHECK(W.sign == 7);
    }
}

TEST_CASE("Weil representation relations", "[weilrep]") {
    for (long D : {6L, 10L}) {
        const WeilAction& W = standard_action(D);
        Cyc iz = Cyc::root(W.M, (W.sign % 4) * W.M / 4);  // i^sign
        for (std::size_t i : {std::size_t(0), std::size_t(1), std::size_t(5), std::size_t(17), W.size() - 1}) {
            auto v = W.basis(i);
            auto s2 = W.apply_S(W.apply_S(v));
            auto st3 = W.apply_S(W.apply_T(W.apply_S(W.apply_T(W.apply_S(W.apply_T(v))))));
            CHECK(WeilAction::equal(s2, st3));
            // rho(Z) e_g = i^sign e_{-g}
            auto want = W.scale(W.basis(W.dg.neg(i)), iz);
            CHECK(WeilAction::equal(s2, want));
            CHECK(WeilAction::equal(W.apply(meta_Z(), v), want));
            auto s4 = W.apply_S(W.apply_S(s2));
            CHECK(WeilAction::equal(s4, W.scale(v, Cyc::rational(W.M, -1))));
            CHECK(WeilAction::equal(W.apply_S(W.apply_S(v, true)), v));
        }
    }
}

TEST_CASE("e_0 transforms by the character on Gamma_0(N)", "[weilrep]") {
    for (long D : {6L, 10L}) {
        const WeilAction& W = standard_action(D);
        long checked = 0;
        for (long c = 0; c <= 3 * W.N; c += W.N)
            for (long d = -15; d <= 15; ++d) {
                if (std::gcd(c, d) != 1 || (c == 0 && std::labs(d) != 1)) continue;
                for (int br : {1, -1}) {
                    auto g = with_bottom_row(c, d, br);
                    auto v = W.apply(g, W.basis(0));
                    auto want = W.scale(W.basis(0), character_chi_L(g, W));
                    INFO(g.str());
                    CHECK(WeilAction::equal(v, want));
                    ++checked;
                }
            }
        CHECK(checked > 50);
    }
}

TEST_CASE("Lambda^{n*} and the sums S_n", "[weilrep]") {
    for (long D : {6L, 10L}) {
        const WeilAction& W = standard_action(D);
        const auto& dg = W.dg;
        long N = W.N;
        for (long n = 1; n <= 2 * N; ++n) {
            auto star = lambda_n_star(dg, n);
            std::set<std::size_t> in(star.begin(), star.end());
            // definition: n Q(g) + (g, delta) in Z for every g of order dividing n
            std::vector<std::size_t> tors;
            for (std::size_t i = 0; i < dg.size(); ++i)
                if (dg.scale(i, n) == 0) tors.push_back(i);
            for (std::size_t d = 0; d < dg.size(); ++d) {
                bool member = true;
                for (auto g : tors) member = member && floor_frac(Rat(n) * dg.Q(g) + dg.pair(g, d)) == 0;
                CHECK(member == (in.count(d) == 1));
            }
            // away from n = 2 mod 4 this is the set where Q is a multiple of gcd(n, N)/N
            if (n % 4 != 2) {
                Rat unit = make_rat(std::gcd(n, N), N);
                for (std::size_t d = 0; d < dg.size(); ++d) {
                    Rat k = dg.Q(d) / unit;
                    CHECK((k.get_den() == 1) == (in.count(d) == 1));
                }
            }
            long torsion = static_cast<long>(tors.size());
            for (std::size_t d = 0; d < dg.size(); ++d) {
                double mag2 = std::norm(gauss_sum_Sn(W, n, d).numeric());
                if (in.count(d))
                    CHECK(std::abs(mag2 - static_cast<double>(dg.size() * torsion)) < 1e-6 * dg.size() * torsion);
                else
                    CHECK(mag2 < 1e-9);
            }
        }
    }
}

TEST_CASE("rho(T^m S T^n S) e_0 formula", "[weilrep]") {
    std::mt19937 rng(11);
    for (long D : {6L, 10L}) {
        const WeilAction& W = standard_action(D);
        for (int trial = 0; trial < 10; ++trial) {
            long m = static_cast<long>(rng() % (2 * W.N)) - W.N;
            long n = static_cast<long>(rng() % (2 * W.N)) + 1;
            auto v = W.apply_T(W.apply_S(W.apply_T(W.apply_S(W.basis(0)), n)), m);
            auto star = lambda_n_star(W.dg, n);
            std::set<std::size_t> in(star.begin(), star.end());
            Cyc cl2 = W.CL * W.CL;
            for (std::size_t d = 0; d < W.size(); ++d) {
                Cyc want(W.M);
                if (in.count(d)) want = cl2 * gauss_sum_Sn(W, n, d) * Cyc::e(W.M, -Rat(m) * W.dg.Q(d));
                INFO("D=" << D << " m=" << m << " n=" << n << " delta=" << d);
                CHECK(v[d] == want);
            }
        }
    }
}

TEST_CASE("coset representatives", "[weilrep]") {
    for (auto [N, count] : {std::pair<long, std::size_t>{12, 24}, {20, 36}}) {
        auto reps = coset_reps(N);
        CHECK(reps.size() == count);
        CHECK(static_cast<long>(count) == gamma0_index(N));
        for (std::size_t i = 0; i < reps.size(); ++i)
            for (std::size_t j = i + 1; j < reps.size(); ++j) CHECK_FALSE(same_coset(reps[i], reps[j], N));
    }
}

TEST_CASE("eta multiplier against the product", "[weilrep]") {
    cd tau(0.137, 2.3);
    long checked = 0;
    for (long c = -7; c <= 7; ++c)
        for (long d = -7; d <= 7; ++d) {
            if (std::gcd(c, d) != 1) continue;
            auto g = with_bottom_row(c, d);
            cd lhs = eta_numeric(g.act(tau));
            cd rhs = std::polar(1.0, 2 * M_PI * eta_multiplier(g.a, g.b, g.c, g.d).get_d()) * g.j(tau) * eta_numeric(tau);
            INFO(g.str());
            CHECK(std::abs(lhs - rhs) < 1e-8 * std::abs(lhs));
            ++checked;
        }
    CHECK(checked > 80);
}

TEST_CASE("slash expansions of the input form at every coset", "[weilrep]") {
    cd tau(0.137, 2.3);
    auto f = build_input_form(6, false, 30);
    auto value = [&](cd z) {
        cd s = 0;
        for (auto& [c, q] : f.terms) {
            cd p = 1;
            for (auto& [d, r] : q.r) p *= std::pow(eta_numeric(static_cast<double>(d) * z), static_cast<double>(r));
            s += c.get_d() * p;
        }
        return s;
    };
    // the expansion is for the principal square root of c tau + d
    for (auto& g : coset_reps(12)) {
        cd direct = value(g.act(tau)) / (g.j(tau) * static_cast<double>(g.branch));
        CycSeries ser;
        for (auto& [c, q] : f.terms)
            for (auto& [e, x] : eta_quotient_slash(q, g.a, g.b, g.c, g.d, 288, Rat(6)).coeffs) ser.add(e, x * c);
        cd sum = 0;
        for (auto& [e, x] : ser.coeffs) sum += x.numeric() * std::exp(cd(0, 2 * M_PI) * tau * e.get_d());
        INFO(g.str());
        CHECK(std::abs(direct - sum) < 1e-4 * std::abs(direct));
    }
}

TEST_CASE("vectorized input forms", "[weilrep]") {
    std::mt19937 rng(5);
    for (long D : {6L, 10L}) {
        const WeilAction& W = standard_action(D);
        auto f = build_input_form(D);
        Rat bound = D == 6 ? Rat(1) : Rat(0);
        auto F = vectorize(f, W, bound);
        // principal part sits on e_0 only and equals that of f
        for (auto& [key, x] : F.coeffs) {
            auto& [eta, m] = key;
            if (m < 0 && !x.is_zero()) {
                CHECK(eta == 0);
                CHECK(F.rational(eta, m) == f.coefficient(Rat(-m).get_num().get_si()));
            }
            // support and rationality
            if (!x.is_zero()) CHECK(floor_frac(m + W.dg.Q(eta)) == 0);
            CHECK(x.as_rational().has_value());
        }
        for (auto& [m, c] : f.principal) CHECK(F.rational(0, Rat(-m)) == c);
        CHECK(F.rational(0, Rat(0)) == 0);
        // components agree when Q agrees
        for (std::size_t i = 0; i < W.size(); ++i)
            for (auto& [key, x] : F.coeffs)
                if (W.dg.Q(i) == W.dg.Q(key.first)) CHECK(F.coefficient(i, key.second) == x);
        // another choice of representatives
        std::vector<MetaElement> alt;
        for (auto& g : coset_reps(W.N)) {
            long c = W.N * static_cast<long>(rng() % 3 + 1), d;
            do d = static_cast<long>(rng() % 41) - 20;
            while (std::gcd(c, d) != 1 || d % 2 == 0);
            alt.push_back(with_bottom_row(c, d, rng() % 2 ? 1 : -1) * g);
        }
        auto F2 = vectorize_terms(f.terms, W, alt, bound);
        CHECK(F2.coeffs.size() == F.coeffs.size());
        for (auto& [key, x] : F.coeffs) CHECK(F2.coefficient(key.first, key.second) == x);
    }
    SECTION("only weight 1/2 is accepted") {
        const WeilAction& W = standard_action(6);
        std::vector<std::pair<Rat, EtaQuotient>> bad = {{Rat(1), make_eta_quotient(12, {1, 0, 0, 0, 0, 0})}};
        CHECK_THROWS_AS(vectorize_terms(bad, W, coset_reps(12)), argument_error);
    }
}
