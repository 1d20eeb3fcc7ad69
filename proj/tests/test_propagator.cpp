#include "mlz/presets.hpp"
#include "mlz/propagator.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace mlz;

namespace {

Eigen::VectorXcd random_state(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = cplx(g(rng), g(rng));
    return v / v.norm();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

TEST_CASE("rhs vanishes without couplings") {
    const ModelSpec m = ModelSpec::diagonal({1.0, 0.0, -2.0}, {0.3, -1.0, 2.0});
    std::mt19937_64 rng(1);
    const Eigen::VectorXcd r = rhs(m, {3.7, random_state(rng, 3)});
    CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rhs of the two-state model at t = 0") {
    const Eigen::VectorXcd r = rhs(lz2_model(), StateVector::basis(2, 0, 0.0));
    CHECK(std::abs(r[0]) == 0.0);
    CHECK(std::abs(r[1] - cplx(0.0, -0.5)) < 1e-15);
}

TEST_CASE("rhs carries the relative phase of the pair") {
    const ModelSpec m = lz2_model();
    const double t = 1.3;
    const Eigen::VectorXcd r = rhs(m, StateVector::basis(2, 0, t));
    // theta_2 - theta_1 = (beta_2 - beta_1) t^2 / 2 = -t^2
    const cplx expected = cplx(0.0, -0.5) * std::exp(cplx(0.0, -t * t));
    CHECK(std::abs(r[1] - expected) < 1e-15);
}

TEST_CASE("rhs conserves the norm to machine precision") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> tt(-300.0, 300.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
        const ModelSpec m = testing::random_canonical_model(rng, {n, 1.0, 1.0, 1.0},
                                                            testing::random_slopes(rng, n, 1 + trial % 2, 1.0));
        const StateVector s{tt(rng), random_state(rng, n)};
        const Eigen::VectorXcd r = rhs(m, s);
        CHECK(std::abs(2.0 * s.amps.dot(r).real()) < 1e-14);
    }
}

TEST_CASE("a single state stays put") {
    const ModelSpec m = ModelSpec::diagonal({0.7}, {-2.0});
    const auto res = propagate(m, StateVector::basis(1, 0, -50.0), 50.0);
    CHECK(std::abs(std::abs(res.final_state.amps[0]) - 1.0) < 1e-12);
    CHECK(res.norm_drift < 1e-12);
    CHECK(res.final_state.t == 50.0);
}

TEST_CASE("two-state crossing reaches the closed-form survival") {
    const double expected = std::exp(-M_PI / 4.0);
    for (Method method : {Method::dop853, Method::dopri5}) {
        CAPTURE(to_string(method));
        IntegratorConfig cfg;
        cfg.method = method;
        const auto res = propagate(lz2_model(), StateVector::basis(2, 0, -500.0), 500.0, cfg);
        CHECK(std::abs(res.final_probabilities()[0] - expected) < 1e-3);
        CHECK(res.norm_drift < 1e-6);
    }
}

TEST_CASE("samples are evenly spaced and end exactly at t_final") {
    IntegratorConfig cfg;
    cfg.sample_count = 11;
    const auto res = propagate(lz2_model(), StateVector::basis(2, 0, -10.0), 10.0, cfg);
    REQUIRE(res.samples.size() == 11);
    for (std::size_t k = 0; k < res.samples.size(); ++k) {
        CHECK(res.samples[k].t == doctest::Approx(-10.0 + 2.0 * static_cast<double>(k)).epsilon(1e-14));
        double sum = 0.0;
        for (double p : res.samples[k].probabilities) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-8);
    }
    CHECK(res.samples.front().t == -10.0);
    CHECK(res.samples.back().t == 10.0);
    CHECK(max_abs_diff(res.samples.back().probabilities, res.final_probabilities()) == 0.0);
}

TEST_CASE("dense output matches propagation to the sample times") {
    const ModelSpec m = fig1_model();
    for (Method method : {Method::dop853, Method::dopri5}) {
        CAPTURE(to_string(method));
        IntegratorConfig cfg;
        cfg.method = method;
        cfg.sample_count = 9;
        const auto res = propagate(m, StateVector::basis(5, 0, -20.0), 20.0, cfg);
        IntegratorConfig direct_cfg = cfg;
        direct_cfg.sample_count = 2;
        for (std::size_t k = 1; k + 1 < res.samples.size(); ++k) {
            const auto direct = propagate(m, StateVector::basis(5, 0, -20.0), res.samples[k].t, direct_cfg);
            CHECK(max_abs_diff(res.samples[k].probabilities, direct.final_probabilities()) < 1e-7);
        }
    }
}

TEST_CASE("forward then backward propagation returns the initial state") {
    const ModelSpec m = fig1_model();
    std::mt19937_64 rng(3);
    const StateVector start{-100.0, random_state(rng, 5)};
    IntegratorConfig cfg;
    cfg.sample_count = 2;
    const auto fwd = propagate(m, start, 100.0, cfg);
    const auto back = propagate(m, fwd.final_state, -100.0, cfg);
    CHECK(back.final_state.t == -100.0);
    CHECK((back.final_state.amps - start.amps).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("interaction frame agrees with a lab-frame reference integrator") {
    for (const ModelSpec& m : {fig1_model(), fig4_model(0.3), lz2_model()}) {
        const std::size_t n = m.size();
        const double T = 20.0;
        const StateVector start = StateVector::basis(n, 0, -T);
        IntegratorConfig cfg;
        cfg.rtol = 1e-12;
        cfg.atol = 1e-14;
        cfg.sample_count = 2;
        const auto res = propagate(m, start, T, cfg);
        const Eigen::VectorXcd psi =
            testing::lab_frame_rk4(m, to_lab_frame(m, start.amps, -T), -T, T, 80000);
        CHECK((psi.cwiseAbs2() - res.final_state.amps.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((to_lab_frame(m, res.final_state.amps, T) - psi).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("frame conversions are inverse and norm preserving") {
    const ModelSpec m = fig1_model();
    std::mt19937_64 rng(4);
    const Eigen::VectorXcd a = random_state(rng, 5);
    const Eigen::VectorXcd psi = to_lab_frame(m, a, 12.5);
    CHECK(std::abs(psi.norm() - 1.0) < 1e-15);
    CHECK((to_interaction_frame(m, psi, 12.5) - a).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((psi.cwiseAbs() - a.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("norm is conserved on random models") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
        const ModelSpec m = testing::random_canonical_model(rng, {n, 1.0, 1.0, 1.0},
                                                            testing::random_slopes(rng, n, 1 + trial % 3, 1.0));
        IntegratorConfig cfg;
        cfg.sample_count = 2;
        const auto res = propagate(m, StateVector::basis(n, 0, -100.0), 100.0, cfg);
        CHECK(res.norm_drift < 1e-6);
    }
}

TEST_CASE("halving the tolerances changes results by less than the coarse error") {
    const ModelSpec m = fig1_model();
    const StateVector start = StateVector::basis(5, 0, -100.0);
    const auto run = [&](double rtol, double atol) {
        IntegratorConfig cfg;
        cfg.rtol = rtol;
        cfg.atol = atol;
        cfg.max_step = 5.0;
        cfg.sample_count = 2;
        return propagate(m, start, 100.0, cfg).final_probabilities();
    };
    const auto coarse = run(1e-6, 1e-8);
    const auto half = run(5e-7, 5e-9);
    const auto reference = run(1e-13, 1e-15);
    const double coarse_error = max_abs_diff(coarse, reference);
    const double change = max_abs_diff(coarse, half);
    CHECK(coarse_error > 0.0);
    CHECK(change < coarse_error);
    CHECK(max_abs_diff(half, reference) < coarse_error);
}

TEST_CASE("step counters and diagnostics are populated") {
    const auto res = propagate(lz2_model(), StateVector::basis(2, 0, -30.0), 30.0);
    CHECK(res.accepted_steps > 0);
    CHECK(res.rhs_evals > res.accepted_steps);
    CHECK(res.samples.size() == 2000);
}

TEST_CASE("integration failures are reported") {
    SUBCASE("step size underflow") {
        ModelSpec m = lz2_model();
        m.set_coupling(0, 1, {1e16, 0.0});
        CHECK_THROWS_AS(propagate(m, StateVector::basis(2, 0, -1.0), 1.0), StepSizeUnderflow);
    }
    SUBCASE("non-finite initial state") {
        StateVector s = StateVector::basis(2, 0, -1.0);
        s.amps[1] = cplx(std::nan(""), 0.0);
        CHECK_THROWS_AS(propagate(lz2_model(), s, 1.0), NonFiniteState);
    }
    SUBCASE("non-finite coupling") {
        ModelSpec m = lz2_model();
        m.coupling(0, 1) = cplx(std::numeric_limits<double>::infinity(), 0.0);
        m.coupling(1, 0) = m.coupling(0, 1);
        CHECK_THROWS_AS(propagate(m, StateVector::basis(2, 0, -1.0), 1.0), IntegrationError);
    }
    SUBCASE("bad configuration") {
        IntegratorConfig cfg;
        cfg.rtol = 0.0;
        CHECK_THROWS_AS(propagate(lz2_model(), StateVector::basis(2, 0, -1.0), 1.0, cfg), InputError);
        cfg = {};
        cfg.sample_count = 1;
        CHECK_THROWS_AS(cfg.check(), InputError);
        CHECK_THROWS_AS(propagate(lz2_model(), StateVector::basis(3, 0, -1.0), 1.0), InputError);
    }
}

TEST_CASE("choose_window uses the latest crossing time") {
    const ModelSpec f1 = fig1_model();
    CHECK(choose_window(f1, 10.0) == doctest::Approx(10.5).epsilon(1e-15));
    CHECK(choose_window(f1) == doctest::Approx(0.5 + default_margin(f1)).epsilon(1e-15));
    CHECK(choose_window(lz2_model(), 7.0) == 7.0);
    CHECK(choose_window(lz2_model()) == default_margin(lz2_model()));
    CHECK_THROWS_AS(choose_window(ModelSpec::diagonal({2.0, 2.0}, {0.0, 1.0})), InputError);
    // 50 cycles of the slowest relative phase past its crossing
    const double margin = default_margin(lz2_model());
    CHECK(2.0 * margin * margin / 2.0 == doctest::Approx(2.0 * M_PI * 50.0));
}

TEST_CASE("phase_step_cap resolves the fastest coupled phase") {
    const ModelSpec m = lz2_model();
    CHECK(phase_step_cap(m, 10.0) == doctest::Approx(0.25 * 2.0 * M_PI / (2.0 * 10.0 + 1e-12)));
    const ModelSpec uncoupled = ModelSpec::diagonal({1.0, -1.0}, {0.0, 0.0});
    CHECK(phase_step_cap(uncoupled, 10.0) > 1e6);
}

TEST_CASE("time-series CSV layout") {
    IntegratorConfig cfg;
    cfg.sample_count = 3;
    const auto res = propagate(lz2_model(), StateVector::basis(2, 0, -1.0), 1.0, cfg);
    std::ostringstream os;
    write_timeseries_csv(os, res);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,P1,P2");
    std::getline(is, line);
    CHECK(line.rfind("-1,1,", 0) == 0);
    int rows = 1;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("counterintuitive populations are large in transit and vanish at the end") {
    IntegratorConfig cfg;
    cfg.sample_count = 2001;
    const auto res = propagate(fig1_model(), StateVector::basis(5, 0, -500.0), 500.0, cfg);
    double peak2 = 0.0, peak3 = 0.0;
    for (const auto& s : res.samples) {
        peak2 = std::max(peak2, s.probabilities[1]);
        peak3 = std::max(peak3, s.probabilities[2]);
    }
    CHECK(peak2 > 0.1);
    CHECK(peak3 > 0.1);
    CHECK(res.final_probabilities()[1] < 1e-5);
    CHECK(res.final_probabilities()[2] < 1e-5);
    CHECK(res.norm_drift < 1e-6);

    // Identical runs give byte-identical CSV.
    std::ostringstream a, b;
    write_timeseries_csv(a, res);
    write_timeseries_csv(b, propagate(fig1_model(), StateVector::basis(5, 0, -500.0), 500.0, cfg));
    CHECK(a.str() == b.str());
}
