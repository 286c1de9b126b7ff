#include "smcurve/etaforms.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace smcurve;
using namespace smcurve::oracle;

namespace {

void check_against_oracle(const EtaQuotient& q, long terms) {
    auto s = quotient_series(q, terms + 2);
    auto [lead, coef] = product_oracle(q.r, terms);
    CHECK(s.offset == lead);
    for (long k = 0; k < terms; ++k) {
        INFO(q.str() << " term " << k);
        CHECK(s.coefficient(lead + k) == Rat(coef[k]));
    }
}

}  // namespace

TEST_CASE("eta series is the pentagonal expansion", "[etaforms]") {
    auto s = eta_series(1, 60);
    auto p = euler_product(60);
    CHECK(s.offset == Rat(1, 24));
    for (long k = 0; k < 50; ++k) CHECK(s.coefficient(Rat(1, 24) + k) == Rat(p[k]));
    auto s3 = eta_series(3, 60);
    CHECK(s3.offset == Rat(1, 8));
    for (long k = 0; k < 50; ++k) CHECK(s3.coefficient(Rat(1, 8) + k) == Rat(k % 3 == 0 ? p[k / 3] : Int(0)));
}

TEST_CASE("theta as an eta quotient", "[etaforms]") {
    auto th = make_eta_quotient(12, {-2, 5, 0, -2, 0, 0});
    auto s = quotient_series(th, 60);
    for (long k = 0; k < 50; ++k) {
        long r = 0;
        for (long n = -10; n <= 10; ++n) r += n * n == k;
        CHECK(s.coefficient(Rat(k)) == r);
    }
    CHECK(th.weight() == make_rat(1, 2));
    auto c = check_etaprod_conditions(th, 72, 12);
    CHECK(c.ok);
}

TEST_CASE("eta quotient conditions", "[etaforms]") {
    auto psi3 = make_eta_quotient(12, {0, 1, 2, 4, 4, -10});
    auto c = check_etaprod_conditions(psi3, 72, 12);
    CHECK(c.ok);
    CHECK(c.character == "chi_theta^1*chi_144");
    CHECK(check_etaprod_conditions(psi3, 72, 24).failed == 1);
    auto bad = make_eta_quotient(12, {1, 0, 0, 0, 0, 0});
    CHECK_FALSE(check_etaprod_conditions(bad, 72, 12).ok);
}

TEST_CASE("level 12 search counts", "[etaforms]") {
    auto s0 = search_eta_quotients(12, 72, make_rat(1, 2), 0);
    REQUIRE(s0.size() == 1);
    CHECK(s0[0] == make_eta_quotient(12, {-2, 5, 0, -2, 0, 0}));
    auto s1 = search_eta_quotients(12, 72, make_rat(1, 2), 1);
    CHECK(s1.size() == 5);
    CHECK(search_eta_quotients(12, 72, make_rat(1, 2), 2).size() == 15);
    CHECK(search_eta_quotients(12, 72, make_rat(1, 2), 3).size() == 35);
}

TEST_CASE("the five simple pole quotients", "[etaforms]") {
    std::vector<std::pair<std::vector<long>, long>> printed = {
        {{-5, 12, 1, -4, -1, -2}, 5}, {{-2, 3, 0, 2, 2, -4}, 2}, {{-1, 2, -3, 0, 9, -6}, 1},
        {{-3, 5, 3, -1, 0, -3}, 3},   {{1, 3, -1, -1, 2, -3}, -1},
    };
    auto found = search_eta_quotients(12, 72, make_rat(1, 2), 1);
    std::set<EtaQuotient> fs(found.begin(), found.end());
    for (auto& [r, c0] : printed) {
        auto q = make_eta_quotient(12, r);
        CHECK(fs.count(q) == 1);
        auto s = quotient_series(q, 30);
        CHECK(s.coefficient(Rat(-1)) == 1);
        CHECK(s.coefficient(Rat(0)) == c0);
        check_against_oracle(q, 21);
    }
    auto psi3 = quotient_series(make_eta_quotient(12, {0, 1, 2, 4, 4, -10}), 30);
    CHECK(psi3.coefficient(Rat(-3)) == 1);
    CHECK(psi3.coefficient(Rat(-2)) == 0);
    CHECK(psi3.coefficient(Rat(-1)) == -1);
    CHECK(psi3.coefficient(Rat(0)) == -2);
}

TEST_CASE("level 20 search counts", "[etaforms]") {
    CHECK(search_eta_quotients(20, 200, make_rat(1, 2), 0).size() == 1);
    CHECK(search_eta_quotients(20, 200, make_rat(1, 2), 1).size() == 2);
    CHECK(search_eta_quotients(20, 200, make_rat(1, 2), 2).size() == 6);
    CHECK(search_eta_quotients(20, 200, make_rat(1, 2), 3).size() == 11);
}

TEST_CASE("valence formula for every accepted quotient", "[etaforms]") {
    for (auto [N, size] : {std::pair<long, long>{12, 72}, {20, 200}}) {
        Rat want = Rat(gamma0_index(N)) / 24;  // weight 1/2
        for (long pole = 0; pole <= 3; ++pole)
            for (auto& q : search_eta_quotients(N, size, make_rat(1, 2), pole)) {
                INFO(q.str());
                CHECK(valence_sum(q) == want);
                // the only pole is at infinity, of order pole
                auto s = quotient_series(q, 4);
                CHECK(s.offset == Rat(-pole));
            }
    }
}

TEST_CASE("input forms", "[etaforms]") {
    auto f6 = build_input_form(6);
    CHECK(f6.series.coefficient(Rat(-3)) == -6);
    CHECK(f6.series.coefficient(Rat(-2)) == 0);
    CHECK(f6.series.coefficient(Rat(-1)) == 4);
    CHECK(f6.series.coefficient(Rat(0)) == 0);
    CHECK(f6.series.coefficient(Rat(1)) == 10);
    CHECK(f6.series.coefficient(Rat(2)) == -20);
    auto f10 = build_input_form(10);
    CHECK(f10.series.coefficient(Rat(-3)) == 3);
    CHECK(f10.series.coefficient(Rat(-2)) == -2);
    CHECK(f10.series.coefficient(Rat(-1)) == 0);
    CHECK(f10.series.coefficient(Rat(0)) == 0);
    CHECK(f10.series.coefficient(Rat(1)) == 4);
    for (auto& [c, q] : f10.terms) CHECK(check_etaprod_conditions(q, 200, 20).ok);
    auto g6 = build_input_form(6, true);
    CHECK(g6.principal == std::map<long, Rat>{{6, Rat(2)}, {3, Rat(-6)}});
    CHECK(g6.series.coefficient(Rat(0)) == 0);
    auto g10 = build_input_form(10, true);
    CHECK(g10.principal == std::map<long, Rat>{{5, Rat(2)}, {2, Rat(-2)}});
    CHECK(g10.series.coefficient(Rat(0)) == 0);
}
