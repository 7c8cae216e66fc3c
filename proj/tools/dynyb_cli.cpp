// dynyb: run a verification suite and print its JSON report.
// Exit status 0 iff every check passes; 1 on failure; 2 on usage or input errors.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include <dynyb/suites.hpp>

namespace {

using dynyb::cplx;

void complex_option(CLI::App* app, const std::string& name, cplx& target, const std::string& help) {
    app->add_option_function<std::string>(
           name,
           [&target, name](const std::string& v) {
               auto z = dynyb::parse_complex(v);
               if (!z) throw CLI::ValidationError(name, "expected a complex number like 0.3+0.1i");
               target = *z;
           },
           help)
        ->type_name("COMPLEX");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verification suites for dynamical Yang-Baxter operators, intertwiners and twists"};
    app.require_subcommand(1);

    dynyb::SuiteConfig cfg;
    std::string out;
    bool no_time = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--model", cfg.model, "8v, sos, sym-sos, ell-a, trig-a")->check(CLI::IsMember(dynyb::model_names()));
        sub->add_option("--pair", cfg.pair, "8v-sos, sos-sym-sos, 8v-sym-sos");
        sub->add_option("--cells", cfg.cells, "ad, e6 or a cell-data JSON file");
        sub->add_option("--window", cfg.window, "A-chain window: restricted, unrestricted, auto")
            ->check(CLI::IsMember({"restricted", "unrestricted", "auto"}));
        sub->add_option("--input", cfg.input, "twist data JSON file (drinfeld, dyn-twist)");
        sub->add_option("--tol", cfg.tol, "tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--samples", cfg.samples, "sample count")->check(CLI::Range(1, 1000000));
        sub->add_option("--seed", cfg.seed, "sampler seed");
        complex_option(sub, "--tau", cfg.tau, "modular parameter of theta");
        complex_option(sub, "--nome", cfg.nome, "nome p of H and Theta");
        complex_option(sub, "--lambda", cfg.lambda, "crossing scale lambda");
        sub->add_option("--level", cfg.level, "level L (period 2L-2)")->check(CLI::Range(0, 200));
        complex_option(sub, "--shift", cfg.shift, "shift b of the unrestricted window");
        complex_option(sub, "--z", cfg.z, "spectral parameter (export, theta-eval, cell)");
        sub->add_option("--object", cfg.object, "object id (export)");
        sub->add_option("--out", out, "write the JSON output to this file");
        sub->add_flag("--no-time", no_time, "omit wall_time from the report");
    };

    const std::vector<std::pair<std::string, std::string>> commands{
        {"dybe", "dynamical Yang-Baxter equation of --model"},
        {"ybe", "Yang-Baxter equation of --model"},
        {"inversion", "R(z)R(-z) = id for --model"},
        {"symmetric", "exact symmetry of the coefficient table of --model"},
        {"rcc", "intertwining relation of --pair"},
        {"rdd", "transposed intertwining relation of --pair"},
        {"trace", "trace relation of --pair, or commuting transfer matrices of --model"},
        {"weight-zero", "weight-zero relation of --pair or of a cell intertwiner"},
        {"twist-unique", "gauge twist of --model as a unique connecting-system twist"},
        {"twist-quasi", "quasi-unique twist of --cells"},
        {"cell", "cell-twist conditions, sign resolution and twisted dYBE for --cells"},
        {"gauge", "dYBE of a random gauge transform of --model"},
        {"drinfeld", "static twist relations (--input file, factorized or nontwist)"},
        {"dyn-twist", "dynamical twist relations (--input file or example)"},
        {"export", "source-fiber matrix of --model at --object and --z"},
        {"theta-eval", "theta function values at --z"}};
    for (auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    cfg.suite = app.get_subcommands().front()->get_name();

    try {
        dynyb::json j;
        bool pass = true;
        if (cfg.suite == "export") {
            j = dynyb::export_fiber(cfg);
        } else if (cfg.suite == "theta-eval") {
            j = dynyb::theta_eval(cfg);
        } else {
            auto rep = dynyb::run_suite(cfg);
            j = rep.to_json(!no_time);
            pass = rep.pass();
        }
        if (!out.empty()) dynyb::write_json_file(out, j);
        std::cout << j.dump(2) << "\n";
        return pass ? 0 : 1;
    } catch (const dynyb::schema_error& e) {
        std::cerr << "schema error: " << e.what() << "\n";
    } catch (const dynyb::pole_exhaustion& e) {
        std::cerr << "pole exhaustion: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
}
