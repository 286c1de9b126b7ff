#pragma once

#include "smcurve/weilrep.hpp"
#include "smcurve/whittaker.hpp"

#include <atomic>
#include <exception>
#include <thread>

namespace smcurve {

// the CM cycle meets the divisor of the Borcherds product
struct collision_error : domain_error {
    bool zero;  // true: zero of the function, false: pole
    long disc;
    Rat m;
    collision_error(long disc_, const Rat& m_, bool zero_)
        : domain_error("CM point of discriminant " + std::to_string(disc_) + " lies on the " + (zero_ ? "zero" : "pole") +
                       " divisor (m = " + m_.get_str() + ")"),
          zero(zero_), disc(disc_), m(m_) {}
};

struct CurveConfig {
    long D = 0;
    long offset = 0;                          // companion function is offset - t
    FactoredRational normalization;           // |t| = c * ||Psi||^2 per point
    FactoredRational companion_normalization;  // |offset - t| = c' * ||Psi'||^2
    long base_disc = 0;                       // t(P_base) = base_value
    Rat base_value;
    long companion_base_disc = 0;  // t(P) = 0 there, so |offset - t| = offset
};

inline const CurveConfig& curve_config(long D) {
    static const CurveConfig six{6, 1, FactoredRational::parse("2^6*3^6"), FactoredRational::parse("2^6"), -24, Rat(1), -4};
    static const CurveConfig ten{10, 2, FactoredRational::parse("1/2^2"), FactoredRational::parse("2/5^2"), -20, Rat(2), -3};
    if (D == 6) return six;
    if (D == 10) return ten;
    throw argument_error("curve_config: D must be 6 or 10");
}

struct PrincipalTerm {
    std::size_t eta;  // index in the discriminant group
    Vec3 vector;      // a representative in L-dual
    Rat m;            // the term is coefficient * q^{-m} e_eta, m >= 0
    Rat coefficient;
};

struct PrincipalPart {
    long D = 0;
    bool companion = false;
    std::vector<PrincipalTerm> terms;

    Rat coefficient(std::size_t eta, const Rat& m) const {
        for (auto& t : terms)
            if (t.eta == eta && t.m == m) return t.coefficient;
        return 0;
    }
};

inline PrincipalPart compute_principal_part(long D, bool companion) {
    const WeilAction& W = standard_action(D);
    InputForm f = build_input_form(D, companion);
    VectorForm F = vectorize(f, W, Rat(0));
    PrincipalPart P;
    P.D = D;
    P.companion = companion;
    for (auto& [key, c] : F.coeffs) {
        auto& [eta, m] = key;
        if (m > 0 || c.is_zero()) continue;
        P.terms.push_back({eta, W.dg.vector(eta), -m, F.rational(eta, m)});
    }
    return P;
}

// cached; the vectorization takes a few seconds for D = 10
inline const PrincipalPart& principal_part(long D, bool companion = false) {
    static std::mutex mu;
    static std::map<std::pair<long, bool>, std::shared_ptr<PrincipalPart>> cache;
    std::shared_ptr<PrincipalPart> slot;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto& s = cache[{D, companion}];
        if (!s) s = std::make_shared<PrincipalPart>(compute_principal_part(D, companion));
        slot = s;
    }
    return *slot;
}

inline long cm_vector_norm(long disc) { return disc % 4 == 0 ? -disc / 4 : -disc; }

inline CMSplitting cm_point(const TraceZeroLattice& L, long disc) {
    return cm_splitting(L, find_cm_vector(L, Rat(cm_vector_norm(disc)), true, 400, disc));
}

// log ||Psi(F)(z)||^2 at one CM point: -(1/2^{#primes of D}) sum c_eta(-m) kappa_eta(m)
inline LogCombination schofer_sum(const TraceZeroLattice& L, const CMSplitting& S, const PrincipalPart& P, long disc) {
    LogCombination tot;
    for (auto& t : P.terms) {
        auto k = kappa_eta_detail(L, S, t.vector, t.m);
        if (k.archimedean_hits > 0) throw collision_error(disc, t.m, t.coefficient > 0);
        tot += k.value * t.coefficient;
    }
    long r = static_cast<long>(prime_divisors(Int(P.D)).size());
    return tot * Rat(-1, 1L << r);
}

struct NormResult {
    long D = 0;
    long disc = 0;
    long degree = 0;  // number of CM points in the Galois orbit on X*_D
    FactoredRational value;  // |norm of t|
    std::optional<FactoredRational> companion;  // |norm of offset - t|
    double residual = 0.0;
    int sign = 0;  // sign of t for a rational point when the companion fixes it, else 0
    std::vector<std::string> flags;

    bool flagged(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

inline constexpr double residual_tolerance = 1e-9;

inline FactoredRational orbit_norm(const FactoredRational& c, const LogCombination& S, long degree) {
    return (c.pow(static_cast<int>(degree)) * (S * Rat(degree)).exponentiate()).abs();
}

inline FactoredRational companion_norm(long D, long disc) {
    const CurveConfig& cfg = curve_config(D);
    long k = cm_point_count(disc, D);
    auto L = standard_lattice(D);
    auto S = cm_point(L, disc);
    LogCombination s = schofer_sum(L, S, principal_part(D, true), disc);
    if (std::abs(s.residual) > residual_tolerance)
        throw precision_error("companion_norm: archimedean residual " + std::to_string(s.residual));
    return orbit_norm(cfg.companion_normalization, s, k);
}

inline NormResult cm_norm(long D, long disc) {
    const CurveConfig& cfg = curve_config(D);
    NormResult r;
    r.D = D;
    r.disc = disc;
    r.degree = cm_point_count(disc, D);
    auto L = standard_lattice(D);
    auto S = cm_point(L, disc);
    LogCombination main = schofer_sum(L, S, principal_part(D, false), disc);
    r.residual = std::abs(main.residual);
    r.value = orbit_norm(cfg.normalization, main, r.degree);
    try {
        LogCombination comp = schofer_sum(L, S, principal_part(D, true), disc);
        r.residual = std::max(r.residual, std::abs(comp.residual));
        r.companion = orbit_norm(cfg.companion_normalization, comp, r.degree);
    } catch (const collision_error&) {
        r.flags.push_back("companion-collision");
    }
    if (r.residual > residual_tolerance) r.flags.push_back("residual");
    if (r.degree == 1 && r.companion) {
        Rat a = r.value.value(), c = r.companion->value(), off(cfg.offset);
        bool plus = abs(off - a) == c, minus = abs(off + a) == c;
        if (plus != minus) r.sign = plus ? 1 : -1;
        else r.flags.push_back("sign-unknown");
    } else if (r.degree == 1) {
        r.flags.push_back("sign-unknown");
    }
    return r;
}

// |c_D| from the base point; also checks the companion constant
inline FactoredRational calibrate(long D) {
    const CurveConfig& cfg = curve_config(D);
    auto L = standard_lattice(D);
    auto base = schofer_sum(L, cm_point(L, cfg.base_disc), principal_part(D, false), cfg.base_disc);
    if (std::abs(base.residual) > residual_tolerance) throw calibration_error("calibrate: base point residual too large");
    FactoredRational c = FactoredRational::of(abs(cfg.base_value)) * base.exponentiate().inverse();
    if (c.abs() != cfg.normalization.abs())
        throw calibration_error("calibrate: base point gives " + c.str() + ", stored constant is " + cfg.normalization.str());
    auto cb = schofer_sum(L, cm_point(L, cfg.companion_base_disc), principal_part(D, true), cfg.companion_base_disc);
    FactoredRational cc = FactoredRational::of(Rat(cfg.offset)) * cb.exponentiate().inverse();
    if (cc.abs() != cfg.companion_normalization.abs())
        throw calibration_error("calibrate: companion base point gives " + cc.str() + ", stored constant is " +
                                cfg.companion_normalization.str());
    return c;
}

// fundamental discriminants -d or -4d, d squarefree, in the order of d
inline std::vector<long> table_discriminants(long max_d) {
    std::vector<long> out;
    for (long d = 1; d <= max_d; ++d) {
        if (!is_squarefree(Int(d))) continue;
        out.push_back((-d) % 4 == -3 ? -d : -4 * d);
    }
    return out;
}

inline bool admissible(long disc, long D) {
    try {
        require_admissible(disc, D);
        return true;
    } catch (const domain_error&) {
        return false;
    }
}

inline std::vector<NormResult> table(long D, long max_d, unsigned threads = 0) {
    curve_config(D);
    if (max_d < 1 || max_d > 5000) throw argument_error("table: max must lie in [1, 5000]");
    std::vector<long> discs;
    for (long disc : table_discriminants(max_d))
        if (admissible(disc, D)) discs.push_back(disc);
    principal_part(D, false);
    principal_part(D, true);
    std::vector<std::optional<NormResult>> rows(discs.size());
    std::vector<std::exception_ptr> errors(discs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < discs.size();) {
            try {
                NormResult r = cm_norm(D, discs[i]);
                if (r.companion) rows[i] = std::move(r);
            } catch (const collision_error&) {
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<NormResult> out;
    for (auto& r : rows)
        if (r) out.push_back(std::move(*r));
    return out;
}

// discriminants (orders included) whose CM point on X*_D is rational
inline std::vector<long> rational_cm_list(long D, long bound = 2000) {
    curve_config(D);
    std::vector<long> out;
    for (long disc = -3; disc >= -bound; --disc) {
        if (!is_discriminant(Int(disc)) || !admissible(disc, D)) continue;
        if (cm_point_count(disc, D) == 1) out.push_back(disc);
    }
    return out;
}

}  // namespace smcurve
