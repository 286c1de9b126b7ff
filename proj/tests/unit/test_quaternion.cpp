#include "smcurve/lattice.hpp"

#include <catch_amalgamated.hpp>

using namespace smcurve;

TEST_CASE("Hilbert symbols locate the ramification", "[quaternion]") {
    CHECK(hilbert_symbol(-1, -1, 2) == -1);
    CHECK(hilbert_symbol(-1, -1, 3) == 1);
    CHECK(ramified_primes(-1, -1) == std::set<long>{2});
    CHECK(ramified_primes(13, 10) == std::set<long>{2, 5});
    for (long D : {6L, 10L, 14L, 15L}) {
        long q = find_q(D);
        std::set<long> want;
        for (auto& p : prime_divisors(Int(D))) want.insert(p.get_si());
        CHECK(ramified_primes(q, D) == want);
    }
}

TEST_CASE("maximal orders", "[quaternion]") {
    for (long D : {6L, 10L}) {
        auto O = maximal_order(D, find_q(D));
        CHECK(is_order(O));
        CHECK(order_discriminant(O) == Rat(-D * D));
        for (auto& x : O.basis) CHECK(O.contains(x * x.conj()));
    }
}

TEST_CASE("quaternion arithmetic", "[quaternion]") {
    QuatAlgebra B{13, 10, 10};
    QuatElem a = qunit(B, 1), b = qunit(B, 2);
    CHECK(a * a == qunit(B, 0) * Rat(13));
    CHECK(a * b == qunit(B, 3));
    CHECK(b * a == qunit(B, 3) * Rat(-1));
    QuatElem x(B, 1, make_rat(1, 2), 3, -2);
    QuatElem y(B, -2, 1, make_rat(1, 3), 5);
    CHECK((x * y).norm() == x.norm() * y.norm());
    CHECK((x * x.conj()) == qunit(B, 0) * x.norm());
}

TEST_CASE("embedding into M2(R)", "[quaternion]") {
    QuatAlgebra B{5, 6, 6};
    QuatElem x(B, 1, 2, -1, 3), y(B, 0, 1, 1, -2);
    auto ex = embed(x), ey = embed(y), exy = embed(x * y);
    auto prod = matmul(ex, ey);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(prod[i][j].value() - exy[i][j].value()) < 1e-9);
    CHECK(std::abs(det(ex).value() - x.norm().get_d()) < 1e-9);
}
