#include "smcurve/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace smcurve;
using nlohmann::json;

namespace {

json to_json(const NormResult& r) {
    json j;
    j["D"] = r.D;
    j["disc"] = r.disc;
    j["degree"] = r.degree;
    j["value"] = r.value.str();
    j["companion"] = r.companion ? json(r.companion->str()) : json(nullptr);
    j["residual"] = r.residual;
    j["sign"] = r.sign;
    j["flags"] = r.flags;
    return j;
}

std::string flag_field(const NormResult& r) {
    std::string s;
    for (auto& f : r.flags) s += (s.empty() ? "" : ";") + f;
    return s;
}

struct Check {
    std::string name;
    std::function<bool()> run;
};

int selfcheck() {
    auto norm_is = [](long D, long disc, const char* want) {
        return [=] { return cm_norm(D, disc).value == FactoredRational::parse(want).abs(); };
    };
    std::vector<Check> checks = {
        {"calibrate D=6", [] { return calibrate(6) == FactoredRational::parse("2^6*3^6"); }},
        {"calibrate D=10", [] { return calibrate(10) == FactoredRational::parse("1/2^2"); }},
        {"t6(-163)", norm_is(6, -163, "3^11*7^4*19^4*23^4/2^10*5^6*11^6*17^6")},
        {"t6(-147)", norm_is(6, -147, "11^4*23^4/2^10*3^3*5^6*7")},
        {"t6(-996)", norm_is(6, -996, "2^16*7^12*71^4*83^2/17^6*29^6*41^6")},
        {"t10(-68)", norm_is(10, -68, "2^2*5")},
        {"1-t6(-40)", [] { return companion_norm(6, -40) == FactoredRational::parse("2^3*17^2/5^3"); }},
        {"2-t10(-68)", [] { return companion_norm(10, -68) == FactoredRational::parse("2^4*17/5^2"); }},
        {"1-t6(-996)", [] { return companion_norm(6, -996) == FactoredRational::parse("3^14*13^6*47^2*157^2/17^2*29^6*41^6"); }},
    };
    int failed = 0;
    for (auto& c : checks) {
        bool ok = false;
        std::string why;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            why = e.what();
        }
        std::cout << (ok ? "ok   " : "FAIL ") << c.name << (why.empty() ? "" : "  (" + why + ")") << "\n";
        failed += !ok;
    }
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"norms of singular moduli on X*_6 and X*_10"};
    app.require_subcommand(1);

    long D = 6, disc = 0, max_d = 250, pole = 1;
    bool companion = false, as_json = false, deep = false;
    unsigned threads = 0;
    std::string out;
    Rat bound = 0;
    std::string bound_text = "1";
    auto add_D = [&](CLI::App* s) { s->add_option("--D", D, "6 or 10")->required()->check(CLI::IsMember({6, 10})); };

    auto* norm = app.add_subcommand("norm", "norm of t_D (or offset - t_D) over the Galois orbit of a CM point");
    add_D(norm);
    norm->add_option("--disc", disc, "negative discriminant")->required();
    norm->add_flag("--companion", companion);
    norm->add_flag("--json", as_json);

    auto* tab = app.add_subcommand("table", "norms for fundamental discriminants -d, -4d with d <= max");
    add_D(tab);
    tab->add_option("--max", max_d)->check(CLI::Range(1L, 5000L));
    tab->add_option("--out", out, "CSV file (default stdout)");
    tab->add_option("--threads", threads);

    auto* cal = app.add_subcommand("calibrate", "normalization constant from the base CM point");
    add_D(cal);

    auto* self = app.add_subcommand("selfcheck", "published values");

    auto* eta = app.add_subcommand("eta-search", "weight 1/2 eta quotients with a pole of given order at infinity");
    add_D(eta);
    eta->add_option("--pole", pole)->check(CLI::Range(0L, 6L));

    auto* vec = app.add_subcommand("vectorize", "principal part of the vector valued input form");
    add_D(vec);
    vec->add_flag("--companion", companion);
    vec->add_option("--bound", bound_text, "also print coefficients up to q^bound");
    vec->add_flag("--deep-check", deep, "check support and rationality of all computed coefficients");

    auto* dump = app.add_subcommand("dump-lattice", "trace zero lattice and discriminant group");
    add_D(dump);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*norm) {
            if (companion) {
                auto v = companion_norm(D, disc);
                if (as_json)
                    std::cout << json{{"D", D}, {"disc", disc}, {"companion", v.str()}}.dump(2) << "\n";
                else
                    std::cout << v.str() << "\n";
                return 0;
            }
            auto r = cm_norm(D, disc);
            if (as_json) {
                std::cout << to_json(r).dump(2) << "\n";
            } else {
                std::cout << (r.sign < 0 ? "-" : "") << r.value.str() << "\n";
                if (r.companion) std::cout << "companion " << r.companion->str() << "\n";
                std::cout << "degree " << r.degree << "\n";
                if (!r.flags.empty()) std::cout << "flags " << flag_field(r) << "\n";
            }
            return r.flagged("residual") ? 3 : 0;
        }
        if (*tab) {
            calibrate(D);
            auto rows = table(D, max_d, threads);
            std::ofstream file;
            if (!out.empty()) {
                file.open(out);
                if (!file) throw argument_error("cannot open " + out);
            }
            std::ostream& os = out.empty() ? std::cout : file;
            os << "disc,value,companion,residual,flags\n";
            for (auto& r : rows)
                os << r.disc << "," << r.value.str() << "," << r.companion->str() << "," << r.residual << "," << flag_field(r) << "\n";
            return 0;
        }
        if (*cal) {
            std::cout << calibrate(D).str() << "\n";
            return 0;
        }
        if (*self) return selfcheck();
        if (*eta) {
            long N = D == 6 ? 12 : 20;
            long size = standard_action(D).size();
            auto qs = search_eta_quotients(N, size, make_rat(1, 2), pole);
            for (auto& q : qs) std::cout << q.str() << "  " << quotient_series(q, 8).str(6) << "\n";
            std::cout << qs.size() << " quotients\n";
            return 0;
        }
        if (*vec) {
            bound = Rat(bound_text);
            bound.canonicalize();
            const WeilAction& W = standard_action(D);
            InputForm f = build_input_form(D, companion);
            std::cout << "scalar " << f.series.str(8) << "\n";
            VectorForm F = vectorize(f, W, bound);
            for (auto& [key, c] : F.coeffs) {
                auto& [e, m] = key;
                if (m > bound || c.is_zero()) continue;
                auto r = c.as_rational();
                std::cout << "c(" << e << ", " << m.get_str() << ") = " << (r ? r->get_str() : c.str()) << "\n";
            }
            if (deep) {
                long bad = 0;
                for (auto& [key, c] : F.coeffs) {
                    auto& [e, m] = key;
                    if (!c.as_rational()) ++bad;
                    if (!c.is_zero() && floor_frac(m + W.dg.Q(e)) != 0) ++bad;
                }
                std::cout << (bad ? "deep check FAILED: " + std::to_string(bad) + " coefficients" : std::string("deep check ok")) << "\n";
                return bad ? 1 : 0;
            }
            return 0;
        }
        if (*dump) {
            auto L = standard_lattice(D);
            auto dg = disc_group(L);
            std::cout << "gram";
            for (auto& row : L.gram)
                for (auto& x : row) std::cout << " " << x.get_str();
            std::cout << "\ndiscriminant group order " << dg.size() << ", level " << dg.level << ", invariants";
            for (long o : dg.orders) std::cout << " " << o;
            std::cout << "\n";
            return 0;
        }
    } catch (const calibration_error& e) {
        std::cerr << "calibration failure: " << e.what() << "\n";
        return 2;
    } catch (const precision_error& e) {
        std::cerr << "precision error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
