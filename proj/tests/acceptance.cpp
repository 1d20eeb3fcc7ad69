// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "mlz/model.hpp"
#include "mlz/presets.hpp"
#include "mlz/propagator.hpp"
#include "mlz/scattering.hpp"
#include "mlz/sweep.hpp"
#include "mlz/theory.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

using namespace mlz;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), f, a, b);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> column_one(const ModelSpec& spec, double window) {
    return scattering_column(spec, 0, window).final_probabilities();
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

std::vector<std::size_t> extreme_states(const ModelSpec& spec) {
    std::vector<std::size_t> out;
    for (const auto& b : bands(spec)) {
        if (b.kind == BandKind::max_slope || b.kind == BandKind::min_slope) {
            out.insert(out.end(), b.members.begin(), b.members.end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Random canonical model with N <= 6 and a random extreme band of 1 to 3 members.
ModelSpec random_model(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> band_size(1, std::min<std::size_t>(3, n - 1));
    const auto slopes = testing::random_slopes(rng, n, band_size(rng), 1.0);
    return testing::random_canonical_model(rng, {n, 0.8, 1.0, 1.0}, slopes);
}

Outcome criterion_1(std::vector<double>& fig1_p) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    fig1_p = column_one(fig1_model(), 500.0);
    const double elapsed = seconds_since(t0);
    o.require(within(fig1_p[0], 0.234, 0.005), fmt("|S11|^2 = %.5f (0.234 +- 0.005)", fig1_p[0]));
    o.require(within(fig1_p[3], 0.295, 0.005), fmt("|S41|^2 = %.5f (0.295 +- 0.005)", fig1_p[3]));
    o.require(within(fig1_p[4], 0.472, 0.005), fmt("|S51|^2 = %.5f (0.472 +- 0.005)", fig1_p[4]));
    o.require(elapsed < 5.0, fmt("runtime %.2f s (< 5 s)", elapsed));
    return o;
}

Outcome criterion_2(const std::vector<double>& at500) {
    Outcome o;
    o.require(at500[1] <= 1e-5, fmt("|S21|^2 = %.3e at T=500 (<= 1e-5)", at500[1]));
    o.require(at500[2] <= 1e-5, fmt("|S31|^2 = %.3e at T=500 (<= 1e-5)", at500[2]));
    const auto at1000 = column_one(fig1_model(), 1000.0);
    o.require(at1000[1] < at500[1], fmt("|S21|^2 decays: %.3e at T=1000 < %.3e", at1000[1], at500[1]));
    o.require(at1000[2] < at500[2], fmt("|S31|^2 decays: %.3e at T=1000 < %.3e", at1000[2], at500[2]));
    return o;
}

Outcome criterion_3() {
    Outcome o;
    const auto p = column_one(fig1_decoupled_model(), 500.0);
    o.require(within(p[3], 0.672, 0.005), fmt("|S41|^2 = %.5f (0.672 +- 0.005)", p[3]));
    o.require(within(p[4], 0.094, 0.005), fmt("|S51|^2 = %.5f (0.094 +- 0.005)", p[4]));
    return o;
}

Outcome criterion_4(const std::vector<double>& fig1_p) {
    Outcome o;
    const auto be = be_survival(fig1_model(), 0);
    o.require(std::abs(be.exponent / M_PI - 0.231344) < 1e-6,
              fmt("exponent / pi = %.7f (0.231344...)", be.exponent / M_PI));
    const double rel = std::abs(fig1_p[0] - be.survival_probability()) / be.survival_probability();
    o.require(rel < 0.01, fmt("fig1: numeric %.5f vs BE %.5f", fig1_p[0], be.survival_probability()) +
                              fmt(", rel %.2e", rel));

    std::mt19937_64 rng(4004);
    std::uniform_int_distribution<std::size_t> size(2, 6);
    int failures = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const ModelSpec m = random_model(rng, size(rng));
        const auto candidates = extreme_states(m);
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const std::size_t k = candidates[pick(rng)];
        const double window = choose_window(m) + 500.0;
        StateVector start = StateVector::basis(m.size(), k, -window);
        IntegratorConfig cfg;
        cfg.sample_count = 2;
        const double numeric = propagate(m, start, window, cfg).final_probabilities()[k];
        const double predicted = be_survival(m, k).survival_probability();
        const double r = std::abs(numeric - predicted) / predicted;
        worst = std::max(worst, r);
        if (r >= 0.01) {
            ++failures;
            // Leading finite-window correction: O(|c| / (|dbeta| T)) dressing at both ends.
            double s = 0.0;
            for (std::size_t i = 0; i < m.size(); ++i) {
                const auto a = static_cast<Eigen::Index>(i);
                const auto b = static_cast<Eigen::Index>(k);
                if (m.beta[a] != m.beta[b]) {
                    s += 2.0 * std::abs(m.coupling(b, a)) / (std::abs(m.beta[b] - m.beta[a]) * window);
                }
            }
            const double estimate = 2.0 * std::sqrt(predicted) * s + s * s;
            o.notes.push_back("     model " + std::to_string(trial) + " (N=" + std::to_string(m.size()) +
                              ", k=" + std::to_string(k + 1) + "): " +
                              fmt("numeric %.6e vs BE %.6e", numeric, predicted) + fmt(", rel %.2e", r) +
                              fmt(", |dev| %.2e vs finite-window estimate %.2e", std::abs(numeric - predicted),
                                  estimate));
        }
    }
    o.require(failures == 0, std::to_string(20 - failures) + "/20 random models within 1% relative" +
                                 fmt(" (worst %.2e)", worst));
    return o;
}

Outcome criterion_5() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    SweepSpec sweep{ParameterPath::parse("-alpha[2]"), linear_grid(-1.0, 1.0, 21), false};
    SweepOptions opt;
    opt.window = 600.0;
    const auto res = run_sweep(fig4_model(0.0), sweep, opt);
    const double elapsed = seconds_since(t0);
    o.require(res.all_ok(), "all 21 sweep points integrated");

    const double target = std::exp(-2.0 * M_PI * (0.17 / 2.0 + 0.36 / 1.5));
    double p1_min = 1.0, p1_max = 0.0, worst_dev = 0.0;
    double p2_pos_max = 0.0, p2_neg_max = 0.0;
    double p3_min = 1.0, p3_max = 0.0, p4_min = 1.0, p4_max = 0.0;
    for (const auto& row : res.rows) {
        const double eps = row.value;
        const auto& p = row.probabilities;
        if (std::abs(eps) >= 0.1 - 1e-12) {
            p1_min = std::min(p1_min, p[0]);
            p1_max = std::max(p1_max, p[0]);
            worst_dev = std::max(worst_dev, std::abs(p[0] - target));
        }
        if (eps >= 0.3 - 1e-12) p2_pos_max = std::max(p2_pos_max, p[1]);
        if (eps <= -0.3 + 1e-12) p2_neg_max = std::max(p2_neg_max, p[1]);
        if (eps > 0.0) {
            p3_min = std::min(p3_min, p[2]);
            p3_max = std::max(p3_max, p[2]);
            p4_min = std::min(p4_min, p[3]);
            p4_max = std::max(p4_max, p[3]);
        }
    }
    o.require(p1_max - p1_min <= 0.01, fmt("(a) |S11|^2 spread %.4f for |eps| >= 0.1 (<= 0.01)", p1_max - p1_min));
    o.require(worst_dev <= 0.005, fmt("(b) |S11|^2 within %.4f of %.4f (<= 0.005)", worst_dev, target));
    o.require(p2_pos_max <= 1e-3, fmt("(c) max |S21|^2 for eps >= 0.3 is %.3e (<= 1e-3)", p2_pos_max));
    o.require(p2_neg_max >= 0.01, fmt("(c) max |S21|^2 for eps <= -0.3 is %.4f (>= 0.01)", p2_neg_max));
    o.require(p3_max - p3_min >= 0.05, fmt("(d) |S31|^2 varies by %.4f for eps > 0 (>= 0.05)", p3_max - p3_min));
    o.require(p4_max - p4_min >= 0.05, fmt("(d) |S41|^2 varies by %.4f for eps > 0 (>= 0.05)", p4_max - p4_min));
    o.require(elapsed < 120.0, fmt("runtime %.1f s (< 120 s)", elapsed));
    return o;
}

Outcome criterion_6() {
    Outcome o;
    // Unitarity and norm drift on every preset and on random models.
    double worst_defect = 0.0, worst_drift = 0.0;
    std::size_t matrices = 0;
    const auto audit = [&](const ModelSpec& m, double window) {
        const auto s = scattering_matrix(m, window);
        worst_defect = std::max(worst_defect, unitarity_defect(s.amplitudes));
        worst_drift = std::max(worst_drift, s.max_drift());
        ++matrices;
    };
    for (const auto& name : preset_names()) {
        if (name == "fig4") {
            for (double eps : {-0.5, 0.5}) {
                const Preset p = make_preset(name, eps);
                audit(p.spec, *p.window);
            }
        } else {
            const Preset p = make_preset(name);
            audit(p.spec, p.window ? *p.window : choose_window(p.spec));
        }
    }
    std::mt19937_64 rng(6006);
    std::uniform_int_distribution<std::size_t> size(2, 6);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelSpec m = random_model(rng, size(rng));
        audit(m, choose_window(m) + 200.0);
    }
    o.require(worst_defect < 1e-5,
              fmt("unitarity defect max %.2e over ", worst_defect) + std::to_string(matrices) + " matrices (< 1e-5)");
    o.require(worst_drift < 1e-6, fmt("norm drift max %.2e (< 1e-6)", worst_drift));

    // Time reversal on the preset scenarios.
    double worst_reversal = 0.0;
    for (const auto& [m, window] : std::vector<std::pair<ModelSpec, double>>{
             {fig1_model(), 500.0}, {fig4_model(0.5), 600.0}, {lz2_model(), choose_window(lz2_model())}}) {
        IntegratorConfig cfg;
        cfg.sample_count = 2;
        const StateVector start = StateVector::basis(m.size(), 0, -window);
        const auto fwd = propagate(m, start, window, cfg);
        const auto back = propagate(m, fwd.final_state, -window, cfg);
        worst_reversal = std::max(worst_reversal, (back.final_state.amps - start.amps).cwiseAbs().maxCoeff());
    }
    o.require(worst_reversal < 1e-6, fmt("time-reversal round trip max error %.2e (< 1e-6)", worst_reversal));

    // Exact one-sloped-level oracle against propagation.
    std::mt19937_64 grng(6106);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_oracle = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        DOGeometry g;
        g.band_slope = -0.5 + unit(grng);
        const double gap = 0.5 + 1.5 * unit(grng);
        g.sloped_slope = g.band_slope + (trial % 2 ? gap : -gap);
        g.sloped_offset = -1.0 + 2.0 * unit(grng);
        const std::size_t levels = 1 + static_cast<std::size_t>(trial % 4);
        double offset = -1.5;
        for (std::size_t k = 0; k < levels; ++k) {
            offset += 0.2 + 0.6 * unit(grng);
            g.band_offsets.push_back(offset);
            g.couplings.push_back(std::polar(0.8 * unit(grng), 2.0 * M_PI * unit(grng)));
        }
        const ModelSpec m = g.to_model();
        const std::size_t start = static_cast<std::size_t>(trial) % g.size();
        IntegratorConfig cfg;
        cfg.sample_count = 2;
        // The oracle is asymptotic; the longer window keeps the O(1/T) residual below tolerance.
        const double window = choose_window(m) + 1000.0;
        const auto numeric = propagate(m, StateVector::basis(m.size(), start, -window), window, cfg)
                                 .final_probabilities();
        const auto exact = do_oracle(g, start);
        for (std::size_t i = 0; i < exact.size(); ++i) {
            worst_oracle = std::max(worst_oracle, std::abs(numeric[i] - exact[i]));
        }
    }
    o.require(worst_oracle < 1e-3, fmt("one-sloped-level oracle max deviation %.2e (< 1e-3)", worst_oracle));

    // First-order asymptotic eigenenergy: error ratio between t and 2t.
    const auto eig_error = [](const ModelSpec& m, double t) {
        const Eigen::VectorXd exact = testing::exact_eigenvalues(m, t);
        double worst = 0.0;
        for (std::size_t k = 0; k < m.size(); ++k) {
            worst = std::max(worst, (exact.array() - asymptotic_eigenenergy(m, k, t)).abs().minCoeff());
        }
        return worst;
    };
    double ratio_min = 1e300, ratio_max = 0.0;
    std::vector<std::pair<ModelSpec, double>> eig_cases{{fig1_model(), 200.0}, {fig4_model(0.5), 200.0}};
    std::mt19937_64 erng(6206);
    for (int trial = 0; trial < 5; ++trial) {
        const ModelSpec m = random_model(erng, 3 + static_cast<std::size_t>(trial % 4));
        eig_cases.emplace_back(m, 2.0 * asymptotic_threshold(m));
    }
    for (const auto& [m, t] : eig_cases) {
        const double r = eig_error(m, t) / eig_error(m, 2.0 * t);
        ratio_min = std::min(ratio_min, r);
        ratio_max = std::max(ratio_max, r);
    }
    o.require(ratio_min >= 3.2 && ratio_max <= 4.8,
              fmt("eigenenergy error ratio in [%.3f, %.3f] (within [3.2, 4.8])", ratio_min, ratio_max));

    // Band canonicalization commutes with propagation.
    ModelSpec band = ModelSpec::diagonal({1.0, 1.0, -1.0}, {0.0, 0.4, 0.1});
    band.set_coupling(0, 1, {0.25, 0.0});
    band.set_coupling(0, 2, {0.3, 0.1});
    band.set_coupling(1, 2, {0.2, -0.15});
    const auto canon = canonicalize_bands(band);
    IntegratorConfig tight;
    tight.rtol = 1e-12;
    tight.atol = 1e-14;
    const double window = 20.0;
    const Eigen::MatrixXcd lab_orig =
        lab_frame_amplitudes(band, scattering_matrix(band, window, tight).amplitudes, window);
    const Eigen::MatrixXcd lab_canon =
        lab_frame_amplitudes(canon.spec, scattering_matrix(canon.spec, window, tight).amplitudes, window);
    const Eigen::MatrixXcd u = canon.full_unitary();
    const double conj_err = ((u * lab_canon * u.adjoint()).cwiseAbs2() - lab_orig.cwiseAbs2()).cwiseAbs().maxCoeff();
    o.require(conj_err < 1e-8, fmt("canonicalization conjugation equivalence %.2e (< 1e-8)", conj_err));
    return o;
}

Outcome criterion_7() {
    Outcome o;
    std::mt19937_64 rng(7007);
    int below = 0, decayed = 0, entries = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        // Three parallel levels at the top or bottom slope, three singletons.
        auto slopes = testing::random_slopes(rng, 6, 3, 1.0);
        if (trial % 2) {
            for (auto& s : slopes) s = -s;
        }
        const ModelSpec m = testing::random_canonical_model(rng, {6, 0.8, 1.0, 1.0}, slopes);
        const auto pairs = nogo_prediction(m);
        const double window = choose_window(m) + 500.0;
        std::vector<std::size_t> sources;
        for (const auto& p : pairs) {
            if (std::find(sources.begin(), sources.end(), p.from) == sources.end()) sources.push_back(p.from);
        }
        for (std::size_t src : sources) {
            IntegratorConfig cfg;
            cfg.sample_count = 2;
            const auto full = propagate(m, StateVector::basis(6, src, -window), window, cfg).final_probabilities();
            const auto half =
                propagate(m, StateVector::basis(6, src, -0.5 * window), 0.5 * window, cfg).final_probabilities();
            for (const auto& p : pairs) {
                if (p.from != src) continue;
                ++entries;
                worst = std::max(worst, full[p.to]);
                const bool small = full[p.to] < 1e-4;
                const bool decays = full[p.to] < half[p.to];
                below += small;
                decayed += decays;
                if (!small || !decays) {
                    o.notes.push_back("     model " + std::to_string(trial) + " " + std::to_string(p.from + 1) +
                                      "->" + std::to_string(p.to + 1) +
                                      fmt(": %.3e at T, %.3e at T/2", full[p.to], half[p.to]));
                }
            }
        }
    }
    o.require(entries > 0 && below == entries, std::to_string(below) + "/" + std::to_string(entries) +
                                                   fmt(" no-go entries below 1e-4 (worst %.2e)", worst));
    o.require(decayed == entries, std::to_string(decayed) + "/" + std::to_string(entries) +
                                      " no-go entries smaller at T than at T/2");
    return o;
}

} // namespace

int main() {
    struct Row {
        int id;
        const char* title;
        Outcome outcome;
        double seconds;
    };
    std::vector<Row> rows;
    std::vector<double> fig1_p;
    const auto run = [&](int id, const char* title, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        rows.push_back({id, title, o, seconds_since(t0)});
        const Row& r = rows.back();
        std::printf("%s criterion %d: %s (%.1f s)\n", r.outcome.pass ? "PASS" : "FAIL", r.id, r.title, r.seconds);
        for (const auto& n : r.outcome.notes) std::printf("       %s\n", n.c_str());
        std::fflush(stdout);
    };

    run(1, "five-state regression at T=500", [&] { return criterion_1(fig1_p); });
    run(2, "counterintuitive suppression and decay", [&] {
        if (fig1_p.empty()) fig1_p = column_one(fig1_model(), 500.0);
        return criterion_2(fig1_p);
    });
    run(3, "decoupled control", [] { return criterion_3(); });
    run(4, "extreme-slope survival formula", [&] {
        if (fig1_p.empty()) fig1_p = column_one(fig1_model(), 500.0);
        return criterion_4(fig1_p);
    });
    run(5, "band-splitting sweep", [] { return criterion_5(); });
    run(6, "property suite", [] { return criterion_6(); });
    run(7, "generalized no-go on random six-state models", [] { return criterion_7(); });

    const auto passed = std::count_if(rows.begin(), rows.end(), [](const Row& r) { return r.outcome.pass; });
    std::printf("%zd/%zu criteria passed\n", passed, rows.size());
    return passed == static_cast<long>(rows.size()) ? EXIT_SUCCESS : EXIT_FAILURE;
}
