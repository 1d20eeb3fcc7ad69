// mlz: command-line front end for multistate Landau-Zener models.
//
// Exit codes: 0 ok, 2 input error, 3 integrator failure, 4 unitarity defect.

#include "mlz/model.hpp"
#include "mlz/model_io.hpp"
#include "mlz/presets.hpp"
#include "mlz/propagator.hpp"
#include "mlz/scattering.hpp"
#include "mlz/sweep.hpp"
#include "mlz/theory.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitIntegrator = 3;
constexpr int kExitUnitarity = 4;
constexpr double kUnitarityLimit = 1e-4;

struct Globals {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::string window = "";
    std::string out;
    bool quiet = false;
    std::string method = "dop853";
    std::size_t workers = mlz::default_workers();
};

struct LoadedModel {
    mlz::ModelSpec spec;
    std::optional<double> preset_window;
    std::string label;
};

// Thrown after violations have been printed.
struct ValidationFailure {};

LoadedModel load_model(const std::string& source, bool quiet) {
    LoadedModel m;
    m.label = source;
    if (source.rfind("preset:", 0) == 0) {
        std::string rest = source.substr(7);
        std::optional<double> param;
        if (const auto colon = rest.find(':'); colon != std::string::npos) {
            try {
                std::size_t used = 0;
                param = std::stod(rest.substr(colon + 1), &used);
                if (used != rest.size() - colon - 1) throw std::invalid_argument("trailing");
            } catch (const std::logic_error&) {
                throw mlz::InputError("bad preset parameter in '" + source + "'");
            }
            rest = rest.substr(0, colon);
        }
        auto p = mlz::make_preset(rest, param);
        m.spec = std::move(p.spec);
        m.preset_window = p.window;
    } else {
        m.spec = mlz::read_model_file(source);
    }
    const auto violations = mlz::validate(m.spec);
    for (const auto& v : violations) {
        if (v.severity == mlz::Severity::error || !quiet) {
            std::cerr << (v.severity == mlz::Severity::error ? "error: " : "warning: ") << v.message
                      << '\n';
        }
    }
    if (mlz::has_errors(violations)) throw ValidationFailure{};
    return m;
}

mlz::IntegratorConfig make_config(const Globals& g) {
    mlz::IntegratorConfig c;
    c.rtol = g.rtol;
    c.atol = g.atol;
    if (g.method == "dopri5") {
        c.method = mlz::Method::dopri5;
    } else if (g.method == "dop853") {
        c.method = mlz::Method::dop853;
    } else {
        throw mlz::InputError("unknown method '" + g.method + "' (dopri5, dop853)");
    }
    return c;
}

double resolve_window(const Globals& g, const LoadedModel& m) {
    if (!g.window.empty() && g.window != "auto") {
        try {
            std::size_t used = 0;
            const double t = std::stod(g.window, &used);
            if (used != g.window.size() || !(t > 0.0)) throw std::invalid_argument("T");
            return t;
        } catch (const std::logic_error&) {
            throw mlz::InputError("--T must be a positive number or 'auto'");
        }
    }
    if (g.window.empty() && m.preset_window) return *m.preset_window;
    return mlz::choose_window(m.spec);
}

std::size_t resolve_state(int k, const mlz::ModelSpec& spec, const char* what) {
    if (k < 1 || static_cast<std::size_t>(k) > spec.size()) {
        throw mlz::InputError(std::string(what) + " must be between 1 and " + std::to_string(spec.size()));
    }
    return static_cast<std::size_t>(k - 1);
}

// Writes via `emit` to --out, or to stdout when no file was given.
template <class Emit>
void write_output(const std::string& path, Emit&& emit) {
    if (path.empty() || path == "-") {
        emit(std::cout);
        return;
    }
    std::ofstream f(path);
    if (!f) throw mlz::InputError("cannot open '" + path + "' for writing");
    emit(f);
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// Summary lines go to stdout unless the data itself is on stdout.
std::ostream& summary_stream(const Globals& g) {
    return (g.out.empty() || g.out == "-") ? std::cerr : std::cout;
}

mlz::ModelSpec canonical_for_analysis(const mlz::ModelSpec& spec, const Globals& g) {
    if (mlz::is_canonical(spec)) return spec;
    if (!g.quiet) std::cerr << "note: rotating coupled bands to canonical form for analysis\n";
    return mlz::canonicalize_bands(spec).spec;
}

int cmd_simulate(const Globals& g, const std::string& source, int initial, std::size_t samples) {
    const auto m = load_model(source, g.quiet);
    auto cfg = make_config(g);
    cfg.sample_count = samples;
    const std::size_t k = resolve_state(initial, m.spec, "--initial");
    const double window = resolve_window(g, m);
    const auto r = mlz::propagate(m.spec, mlz::StateVector::basis(m.spec.size(), k, -window), window, cfg);
    write_output(g.out, [&](std::ostream& os) { mlz::write_timeseries_csv(os, r); });
    if (!g.quiet) {
        auto& os = summary_stream(g);
        os << "window: T = " << mlz::shortest(window) << ", initial state " << k + 1 << '\n';
        const auto p = r.final_probabilities();
        for (std::size_t i = 0; i < p.size(); ++i) os << "P" << i + 1 << " = " << fmt("%.10g", p[i]) << '\n';
        os << "norm drift = " << fmt("%.3e", r.norm_drift) << '\n';
        os << "steps accepted = " << r.accepted_steps << ", rejected = " << r.rejected_steps
           << ", rhs evaluations = " << r.rhs_evals << '\n';
    }
    return kExitOk;
}

std::string companion_path(const std::string& out) {
    const auto dot = out.rfind(".csv");
    if (dot != std::string::npos && dot + 4 == out.size()) return out.substr(0, dot) + ".amp.csv";
    return out + ".amp.csv";
}

void print_saturation(std::ostream& os, const mlz::SaturationReport& s) {
    os << "saturation of column " << s.column + 1 << " (T = " << mlz::shortest(s.window) << " vs 2T):\n";
    os << "  entry      P(T)              P(2T)             delta        saturated\n";
    for (std::size_t i = 0; i < s.delta.size(); ++i) {
        os << "  (" << i + 1 << "," << s.column + 1 << ")    " << fmt("%-17.10g", s.at_window[i]) << " "
           << fmt("%-17.10g", s.at_double[i]) << " " << fmt("%-12.3e", s.delta[i]) << " "
           << (s.saturated[i] ? "yes" : "no") << '\n';
    }
}

int cmd_scatter(const Globals& g, const std::string& source, bool saturation) {
    const auto m = load_model(source, g.quiet);
    const auto cfg = make_config(g);
    const double window = resolve_window(g, m);
    const auto s = mlz::scattering_matrix(m.spec, window, cfg, {saturation, g.workers});
    write_output(g.out, [&](std::ostream& os) { mlz::write_probability_csv(os, s); });
    if (!g.out.empty() && g.out != "-") {
        const auto amp = companion_path(g.out);
        std::ofstream f(amp);
        if (!f) throw mlz::InputError("cannot open '" + amp + "' for writing");
        mlz::write_amplitude_csv(f, s);
    } else {
        mlz::write_amplitude_csv(std::cout, s);
    }
    const double defect = mlz::unitarity_defect(s.amplitudes);
    auto& os = summary_stream(g);
    if (!g.quiet) {
        os << "window: T = " << mlz::shortest(window) << '\n';
        os << "unitarity defect max|S^dagger S - I| = " << fmt("%.3e", defect) << '\n';
        os << "max norm drift = " << fmt("%.3e", s.max_drift()) << '\n';
        for (const auto& rep : s.saturation) print_saturation(os, rep);
    }
    if (defect > kUnitarityLimit) {
        std::cerr << "error: unitarity defect " << fmt("%.3e", defect) << " exceeds "
                  << fmt("%.0e", kUnitarityLimit) << "; results are not trustworthy\n";
        return kExitUnitarity;
    }
    return kExitOk;
}

int cmd_check(const Globals& g, const std::string& source, int initial) {
    const auto m = load_model(source, g.quiet);
    const auto spec = canonical_for_analysis(m.spec, g);
    auto cfg = make_config(g);
    cfg.sample_count = 2;
    const std::size_t k = resolve_state(initial, spec, "--initial");
    const double window = resolve_window(g, m);
    const auto nogo = mlz::nogo_prediction(spec);

    std::set<std::size_t> sources{k};
    for (const auto& p : nogo) sources.insert(p.from);
    std::vector<std::size_t> cols(sources.begin(), sources.end());
    std::vector<std::vector<double>> prob(spec.size());
    const auto errors = mlz::parallel_for(
        cols.size(),
        [&](std::size_t c) {
            prob[cols[c]] = mlz::scattering_column(spec, cols[c], window, cfg).final_probabilities();
        },
        g.workers);
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    const auto sat = mlz::saturation_check(spec, k, window, cfg);

    std::ostream& os = std::cout;
    os << "model: " << m.label << ", T = " << mlz::shortest(window) << ", initial state " << k + 1 << "\n\n";
    os << "Brundobler-Elser survival |S_kk|^2:\n";
    try {
        const auto be = mlz::be_survival(spec, k);
        const double predicted = be.survival_probability();
        const double measured = prob[k][k];
        os << "  state  predicted         measured          abs_dev      rel_dev\n";
        os << "  " << k + 1 << "      " << fmt("%-17.10g", predicted) << " " << fmt("%-17.10g", measured)
           << " " << fmt("%-12.3e", std::abs(measured - predicted)) << " "
           << fmt("%.3e", std::abs(measured - predicted) / predicted) << '\n';
    } catch (const mlz::InputError&) {
        os << "  not applicable: state " << k + 1 << " does not have an extreme slope\n";
    }
    os << "\nNo-go (counterintuitive) transitions, predicted |S_nm|^2 = 0:\n";
    if (nogo.empty()) {
        os << "  none\n";
    } else {
        os << "  source -> target  measured\n";
        for (const auto& p : nogo) {
            os << "  " << p.from + 1 << " -> " << p.to + 1 << "            " << fmt("%.3e", prob[p.from][p.to])
               << '\n';
        }
    }
    os << '\n';
    print_saturation(os, sat);
    return kExitOk;
}

int cmd_sweep(const Globals& g, const std::string& source, const std::string& param,
              const std::vector<double>& values, const std::string& grid, int initial, bool full) {
    const auto m = load_model(source, g.quiet);
    mlz::SweepSpec sweep;
    sweep.path = mlz::ParameterPath::parse(param);
    if (!grid.empty() && !values.empty()) throw mlz::InputError("give either --values or --grid, not both");
    sweep.values = grid.empty() ? values : mlz::parse_grid(grid);
    if (sweep.values.empty()) throw mlz::InputError("sweep needs --values or --grid");
    sweep.full_matrix = full;

    mlz::SweepOptions opt;
    opt.initial = resolve_state(initial, m.spec, "--initial");
    opt.config = make_config(g);
    opt.workers = g.workers;
    if (!g.window.empty() && g.window != "auto") {
        opt.window = resolve_window(g, m);
    } else if (g.window.empty() && m.preset_window) {
        opt.window = m.preset_window;
    }
    const auto result = mlz::run_sweep(m.spec, sweep, opt);
    write_output(g.out, [&](std::ostream& os) { mlz::write_sweep_csv(os, result); });
    for (const auto& row : result.rows) {
        if (!row.ok()) std::cerr << "error: point " << mlz::shortest(row.value) << ": " << row.error << '\n';
    }
    return result.all_ok() ? kExitOk : kExitIntegrator;
}

int cmd_preset(const Globals& g, const std::string& name, const std::vector<double>& params) {
    if (params.size() > 1) throw mlz::InputError("preset takes at most one parameter");
    std::optional<double> p;
    if (!params.empty()) p = params.front();
    const auto preset = mlz::make_preset(name, p);
    std::string header = "preset " + preset.name;
    if (p) header += " " + mlz::shortest(*p);
    header += ": " + preset.description;
    if (preset.window) header += "\nsuggested window: --T " + mlz::shortest(*preset.window);
    const auto text = mlz::format_model(preset.spec, header);
    write_output(g.out, [&](std::ostream& os) { os << text; });
    return kExitOk;
}

int cmd_classify(const Globals& g, const std::string& source) {
    const auto m = load_model(source, g.quiet);
    const auto spec = canonical_for_analysis(m.spec, g);
    const auto decomposition = mlz::bands(spec);
    write_output(g.out, [&](std::ostream& os) {
        os << "bands:\n";
        for (const auto& b : decomposition) {
            os << "  slope " << mlz::shortest(b.slope) << " (" << mlz::to_string(b.kind) << "):";
            for (auto i : b.members) os << ' ' << i + 1;
            os << '\n';
        }
        os << "transitions (source -> target):\n";
        for (std::size_t a = 0; a < spec.size(); ++a) {
            for (std::size_t b = 0; b < spec.size(); ++b) {
                if (a == b) continue;
                os << "  " << a + 1 << " -> " << b + 1 << "  ";
                try {
                    os << mlz::to_string(mlz::classify_transition(spec, a, b)) << '\n';
                } catch (const mlz::InputError&) {
                    os << "unclassified (single slope)\n";
                }
            }
        }
    });
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multistate Landau-Zener solver: time series, scattering matrices, sweeps, checks"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--rtol", g.rtol, "relative tolerance per step")->capture_default_str();
    app.add_option("--atol", g.atol, "absolute tolerance per step")->capture_default_str();
    app.add_option("--T", g.window, "half-window T (number or 'auto'; presets carry a default)");
    app.add_option("--out", g.out, "output file (default: standard output)");
    app.add_flag("--quiet", g.quiet, "suppress summaries and warnings");
    app.add_option("--method", g.method, "integrator: dop853 or dopri5")->capture_default_str();
    app.add_option("--workers", g.workers, "concurrent workers")->capture_default_str();

    std::string model;
    int initial = 1;
    std::size_t samples = 2000;
    bool saturation = false;
    std::string param;
    std::vector<double> values;
    std::string grid;
    bool full = false;
    std::string preset_name;
    std::vector<double> preset_params;

    const char* model_help = "model file, or preset:NAME[:PARAM]";
    auto* sim = app.add_subcommand("simulate", "time series of populations from one initial state");
    sim->add_option("model", model, model_help)->required();
    sim->add_option("--initial", initial, "initial state (1-based)")->capture_default_str();
    sim->add_option("--samples", samples, "number of output samples")->capture_default_str();

    auto* sc = app.add_subcommand("scatter", "full probability matrix with unitarity report");
    sc->add_option("model", model, model_help)->required();
    sc->add_flag("--saturation", saturation, "also run at 2T and flag unsaturated entries");

    auto* chk = app.add_subcommand("check", "compare closed-form predictions with numerics");
    chk->add_option("model", model, model_help)->required();
    chk->add_option("--initial", initial, "initial state (1-based)")->capture_default_str();

    auto* sw = app.add_subcommand("sweep", "probabilities as a function of one parameter");
    sw->add_option("model", model, model_help)->required();
    sw->add_option("--param", param, "parameter path, e.g. alpha[2], -alpha[2], coupling[1][3].re")
        ->required();
    sw->add_option("--values", values, "explicit sweep values")->delimiter(',');
    sw->add_option("--grid", grid, "linear grid start:stop:count");
    sw->add_option("--initial", initial, "initial state (1-based)")->capture_default_str();
    sw->add_flag("--full", full, "emit the full matrix per point");

    auto* pre = app.add_subcommand("preset", "print a built-in model file");
    pre->add_option("name", preset_name, "fig1, fig1-decoupled, fig1-caption, fig4 <eps>, lz2")->required();
    pre->add_option("param", preset_params, "preset parameter (fig4: epsilon)");

    auto* cls = app.add_subcommand("classify", "print bands and the transition class table");
    cls->add_option("model", model, model_help)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*sim) return cmd_simulate(g, model, initial, samples);
        if (*sc) return cmd_scatter(g, model, saturation);
        if (*chk) return cmd_check(g, model, initial);
        if (*sw) return cmd_sweep(g, model, param, values, grid, initial, full);
        if (*pre) return cmd_preset(g, preset_name, preset_params);
        if (*cls) return cmd_classify(g, model);
    } catch (const ValidationFailure&) {
        return kExitInput;
    } catch (const mlz::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const mlz::IntegrationError& e) {
        std::cerr << "integrator failure: " << e.what() << '\n';
        return kExitIntegrator;
    }
    return kExitInput;
}
