// Norms of t_6 and t_10 at a few CM points, with the kappa terms behind one of them.
#include "smcurve/pipeline.hpp"

#include <iostream>

using namespace smcurve;

int main() {
    std::cout << "c_6 = " << calibrate(6).str() << ", c_10 = " << calibrate(10).str() << "\n";

    for (auto [D, disc] : std::vector<std::pair<long, long>>{{6, -163}, {6, -40}, {6, -996}, {10, -68}}) {
        NormResult r = cm_norm(D, disc);
        std::cout << "D=" << D << " disc=" << disc << " orbit=" << r.degree << "  |N(t)| = " << r.value.str();
        if (r.companion) std::cout << "  |N(" << curve_config(D).offset << " - t)| = " << r.companion->str();
        if (r.sign) std::cout << "  sign " << (r.sign > 0 ? "+" : "-");
        std::cout << "\n";
    }

    // the two coefficients that make up log |t_6(P_-24)|
    auto L = standard_lattice(6);
    auto S = cm_point(L, -24);
    for (long m : {1L, 3L}) std::cout << "kappa_0(" << m << ") at -24: " << kappa_eta(L, S, Vec3{0, 0, 0}, Rat(m)).str() << "\n";

    for (long D : {6L, 10L}) {
        std::cout << "rational CM points on X*_" << D << ":";
        for (long d : rational_cm_list(D)) std::cout << " " << d;
        std::cout << "\n";
    }
}
