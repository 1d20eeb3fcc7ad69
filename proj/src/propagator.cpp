#include "mlz/propagator.hpp"

#include "dop853_tableau.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace mlz {

namespace {

constexpr double kUnderflowFactor = 1e-14;
constexpr double kCapDelta = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925286766559;

using Vec = Eigen::VectorXcd;

struct PhasePair {
    double dbeta;
    double dalpha;
};

// Interaction-frame derivative. Phase factors are formed per state, so one
// call costs N sin/cos pairs and one N x N matrix-vector product.
class FrameRhs {
public:
    explicit FrameRhs(const ModelSpec& spec)
        : beta_(spec.beta), alpha_(spec.alpha), coupling_(spec.coupling),
          phase_(spec.beta.size()), work_(spec.beta.size()), mixed_(spec.beta.size()) {
        const auto n = spec.beta.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (spec.coupling(i, j) != cplx(0.0, 0.0) || spec.coupling(j, i) != cplx(0.0, 0.0)) {
                    pairs_.push_back({std::abs(spec.beta[i] - spec.beta[j]),
                                      std::abs(spec.alpha[i] - spec.alpha[j])});
                }
            }
        }
    }

    void operator()(double t, const Vec& a, Vec& out) {
        ++evals;
        const auto n = beta_.size();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double theta = (0.5 * beta_[j] * t + alpha_[j]) * t;
            phase_[j] = cplx(std::cos(theta), -std::sin(theta));
            work_[j] = phase_[j] * a[j];
        }
        mixed_.noalias() = coupling_ * work_;
        for (Eigen::Index i = 0; i < n; ++i) {
            // -i * conj(phase_i) * mixed_i
            const cplx z = std::conj(phase_[i]) * mixed_[i];
            out[i] = cplx(z.imag(), -z.real());
        }
    }

    double cap(double t) const {
        if (pairs_.empty()) return std::numeric_limits<double>::infinity();
        double fastest = 0.0;
        for (const auto& p : pairs_) fastest = std::max(fastest, p.dbeta * std::abs(t) + p.dalpha);
        return 0.25 * kTwoPi / (fastest + kCapDelta);
    }

    std::size_t evals = 0;

private:
    Eigen::VectorXd beta_;
    Eigen::VectorXd alpha_;
    Eigen::MatrixXcd coupling_;
    Vec phase_;
    Vec work_;
    Vec mixed_;
    std::vector<PhasePair> pairs_;
};

struct ControllerParams {
    double exponent;  // applied to the error norm
    double pi_beta;   // weight of the previous error
    double min_ratio; // h_new / h lower bound
    double max_ratio; // h_new / h upper bound
};

constexpr double kSafety = 0.9;

// Dormand-Prince 5(4).
class Dopri5Stepper {
public:
    static constexpr ControllerParams params{0.2 - 0.04 * 0.75, 0.04, 0.2, 10.0};
    static constexpr int order = 5;

    explicit Dopri5Stepper(Eigen::Index n)
        : k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), rc1(n), rc2(n), rc3(n),
          rc4(n), rc5(n) {}

    // Error norm of the step (t, y) -> (t + h, ynew); accepted when <= 1.
    double attempt(FrameRhs& f, double t, double h, double t_end, const Vec& y, const Vec& k1,
                   double atol, double rtol) {
        constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
        constexpr double a21 = 1.0 / 5.0;
        constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                         a54 = -212.0 / 729.0;
        constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                         a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                         a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
        constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                         e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        tmp = y + h * (a21 * k1);
        f(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t_end, tmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        f(t_end, ynew, k7);

        tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double sc = atol + rtol * std::max(y.norm(), ynew.norm());
        return tmp.norm() / sc;
    }

    const Vec& y_new() const { return ynew; }
    const Vec& k_end() const { return k7; }

    void prepare_dense(FrameRhs&, double, double h, const Vec& y, const Vec& k1) {
        constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                         d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                         d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
        rc1 = y;
        rc2 = ynew - y;
        rc3 = h * k1 - rc2;
        rc4 = rc2 - h * k7 - rc3;
        rc5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    }

    void dense(double s, Vec& out) const {
        const double s1 = 1.0 - s;
        out = rc1 + s * (rc2 + s1 * (rc3 + s * (rc4 + s1 * rc5)));
    }

private:
    Vec k2, k3, k4, k5, k6, k7, tmp, ynew, rc1, rc2, rc3, rc4, rc5;
};

// Dormand-Prince 8(5,3).
class Dop853Stepper {
public:
    static constexpr ControllerParams params{1.0 / 8.0, 0.0, 1.0 / 3.0, 6.0};
    static constexpr int order = 8;

    explicit Dop853Stepper(Eigen::Index n)
        : k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n), k11(n), k12(n),
          k13(n), k14(n), k15(n), k16(n), tmp(n), ynew(n), rc1(n), rc2(n), rc3(n), rc4(n),
          rc5(n), rc6(n), rc7(n), rc8(n) {}

    double attempt(FrameRhs& f, double t, double h, double t_end, const Vec& y, const Vec& k1,
                   double atol, double rtol) {
        using namespace detail::dop853;
        tmp = y + h * (a21 * k1);
        f(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a43 * k3);
        f(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a53 * k3 + a54 * k4);
        f(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a64 * k4 + a65 * k5);
        f(t + c6 * h, tmp, k6);
        tmp = y + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
        f(t + c7 * h, tmp, k7);
        tmp = y + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
        f(t + c8 * h, tmp, k8);
        tmp = y + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
        f(t + c9 * h, tmp, k9);
        tmp = y + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 +
                       a109 * k9);
        f(t + c10 * h, tmp, k10);
        tmp = y + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 +
                       a119 * k9 + a1110 * k10);
        f(t + c11 * h, tmp, k11);
        tmp = y + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 +
                       a129 * k9 + a1210 * k10 + a1211 * k11);
        f(t_end, tmp, k12);

        // tmp holds the weighted slope of the eighth-order solution.
        tmp = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k11 + b12 * k12;
        ynew = y + h * tmp;

        const double sc = atol + rtol * std::max(y.norm(), ynew.norm());
        const double err3 = (tmp - bhh1 * k1 - bhh2 * k9 - bhh3 * k12).norm() / sc;
        const double err5 = (er1 * k1 + er6 * k6 + er7 * k7 + er8 * k8 + er9 * k9 + er10 * k10 +
                             er11 * k11 + er12 * k12)
                                .norm() /
                            sc;
        const double deno = err5 * err5 + 0.01 * err3 * err3;
        if (deno <= 0.0) return 0.0;
        return std::abs(h) * err5 * err5 / std::sqrt(deno);
    }

    // Only valid after finish_step().
    const Vec& y_new() const { return ynew; }
    const Vec& k_end() const { return k13; }

    // FSAL derivative at the accepted end point.
    void finish_step(FrameRhs& f, double t_end) { f(t_end, ynew, k13); }

    void prepare_dense(FrameRhs& f, double t, double h, const Vec& y, const Vec& k1) {
        using namespace detail::dop853;
        rc1 = y;
        rc2 = ynew - y;
        rc3 = h * k1 - rc2;
        rc4 = rc2 - h * k13 - rc3;
        rc5 = d41 * k1 + d46 * k6 + d47 * k7 + d48 * k8 + d49 * k9 + d410 * k10 + d411 * k11 +
              d412 * k12;
        rc6 = d51 * k1 + d56 * k6 + d57 * k7 + d58 * k8 + d59 * k9 + d510 * k10 + d511 * k11 +
              d512 * k12;
        rc7 = d61 * k1 + d66 * k6 + d67 * k7 + d68 * k8 + d69 * k9 + d610 * k10 + d611 * k11 +
              d612 * k12;
        rc8 = d71 * k1 + d76 * k6 + d77 * k7 + d78 * k8 + d79 * k9 + d710 * k10 + d711 * k11 +
              d712 * k12;

        tmp = y + h * (a141 * k1 + a147 * k7 + a148 * k8 + a149 * k9 + a1410 * k10 + a1411 * k11 +
                       a1412 * k12 + a1413 * k13);
        f(t + c14 * h, tmp, k14);
        tmp = y + h * (a151 * k1 + a156 * k6 + a157 * k7 + a158 * k8 + a1511 * k11 + a1512 * k12 +
                       a1513 * k13 + a1514 * k14);
        f(t + c15 * h, tmp, k15);
        tmp = y + h * (a161 * k1 + a166 * k6 + a167 * k7 + a168 * k8 + a169 * k9 + a1613 * k13 +
                       a1614 * k14 + a1615 * k15);
        f(t + c16 * h, tmp, k16);

        rc5 = h * (rc5 + d413 * k13 + d414 * k14 + d415 * k15 + d416 * k16);
        rc6 = h * (rc6 + d513 * k13 + d514 * k14 + d515 * k15 + d516 * k16);
        rc7 = h * (rc7 + d613 * k13 + d614 * k14 + d615 * k15 + d616 * k16);
        rc8 = h * (rc8 + d713 * k13 + d714 * k14 + d715 * k15 + d716 * k16);
    }

    void dense(double s, Vec& out) const {
        const double s1 = 1.0 - s;
        out = rc1 +
              s * (rc2 + s1 * (rc3 + s * (rc4 + s1 * (rc5 + s * (rc6 + s1 * (rc7 + s * rc8))))));
    }

private:
    Vec k2, k3, k4, k5, k6, k7, k8, k9, k10, k11, k12, k13, k14, k15, k16, tmp, ynew;
    Vec rc1, rc2, rc3, rc4, rc5, rc6, rc7, rc8;
};

template <class S>
concept HasFinishStep = requires(S s, FrameRhs& f) { s.finish_step(f, 0.0); };

bool all_finite(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
    }
    return true;
}

std::vector<double> probabilities_of(const Vec& a) {
    std::vector<double> p(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) p[static_cast<std::size_t>(i)] = std::norm(a[i]);
    return p;
}

std::string format_time(const char* prefix, double t) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s at t = %.17g", prefix, t);
    return buf;
}

template <class Stepper>
PropagationResult integrate(const ModelSpec& spec, const StateVector& initial, double t_final,
                            const IntegratorConfig& config) {
    const auto n = spec.beta.size();
    const double t0 = initial.t;
    const double span = t_final - t0;
    const double dir = span >= 0.0 ? 1.0 : -1.0;
    const double h_min =
        kUnderflowFactor * std::max({std::abs(t0), std::abs(t_final), std::abs(span)});
    const std::size_t count = config.sample_count;
    const double sample_dt = span / static_cast<double>(count - 1);
    const auto sample_time = [&](std::size_t s) {
        return s + 1 == count ? t_final : t0 + static_cast<double>(s) * sample_dt;
    };

    PropagationResult result;
    result.samples.reserve(count);
    result.samples.push_back({t0, probabilities_of(initial.amps)});

    FrameRhs f(spec);
    Stepper stepper(n);
    Vec y = initial.amps;
    Vec k1(n), probe(n), dense_out(n);
    const double norm0 = y.squaredNorm();
    double t = t0;
    f(t, y, k1);

    const auto step_cap = [&](double at) {
        const double cap = config.max_step ? *config.max_step : f.cap(at);
        return std::min(cap, std::abs(t_final - at));
    };

    double h = 0.0;
    if (span != 0.0) {
        if (config.initial_step) {
            h = *config.initial_step;
        } else {
            // Hairer's starting step heuristic.
            const double sc = config.atol + config.rtol * y.norm();
            const double d0 = y.norm() / sc;
            const double d1 = k1.norm() / sc;
            double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
            h0 = std::min(h0, step_cap(t));
            probe = y + dir * h0 * k1;
            f(t + dir * h0, probe, dense_out);
            const double d2 = (dense_out - k1).norm() / sc / h0;
            const double dmax = std::max(d1, d2);
            const double h1 = dmax <= 1e-15 ? std::max(1e-6, 1e-3 * h0)
                                            : std::pow(0.01 / dmax, 1.0 / Stepper::order);
            h = std::min(100.0 * h0, h1);
        }
    }

    constexpr ControllerParams ctl = Stepper::params;
    std::size_t next_sample = 1;
    double err_old = 1e-4;
    bool last_rejected = false;

    while (dir * (t_final - t) > 0.0) {
        h = std::min(h, step_cap(t));
        if (h < h_min) throw StepSizeUnderflow(t, h);
        const double hs = dir * h;
        const bool hits_end = h >= std::abs(t_final - t);
        const double t_end = hits_end ? t_final : t + hs;

        const double e = stepper.attempt(f, t, hs, t_end, y, k1, config.atol, config.rtol);
        if (!std::isfinite(e) || !all_finite(stepper.y_new())) throw NonFiniteState(t_end);

        const double fac11 = e > 0.0 ? std::pow(e, ctl.exponent) : 0.0;
        if (e > 1.0) {
            ++result.rejected_steps;
            h = h / std::min(1.0 / ctl.min_ratio, fac11 / kSafety);
            last_rejected = true;
            continue;
        }

        if constexpr (HasFinishStep<Stepper>) stepper.finish_step(f, t_end);

        if (next_sample < count && dir * (t_end - sample_time(next_sample)) >= 0.0) {
            bool prepared = false;
            while (next_sample < count) {
                const double ts = sample_time(next_sample);
                if (dir * (t_end - ts) < 0.0) break;
                if (ts == t_end) {
                    result.samples.push_back({ts, probabilities_of(stepper.y_new())});
                } else {
                    if (!prepared) {
                        stepper.prepare_dense(f, t, hs, y, k1);
                        prepared = true;
                    }
                    stepper.dense((ts - t) / hs, dense_out);
                    result.samples.push_back({ts, probabilities_of(dense_out)});
                }
                ++next_sample;
            }
        }

        t = t_end;
        y = stepper.y_new();
        k1 = stepper.k_end();
        ++result.accepted_steps;
        result.norm_drift = std::max(result.norm_drift, std::abs(y.squaredNorm() - norm0));

        double fac = ctl.pi_beta > 0.0 ? fac11 / std::pow(err_old, ctl.pi_beta) : fac11;
        fac = std::clamp(fac / kSafety, 1.0 / ctl.max_ratio, 1.0 / ctl.min_ratio);
        double h_next = h / fac;
        if (last_rejected) h_next = std::min(h_next, h);
        err_old = std::max(e, 1e-4);
        last_rejected = false;
        h = h_next;
    }

    while (result.samples.size() < count) {
        result.samples.push_back({sample_time(result.samples.size()), probabilities_of(y)});
    }
    result.final_state = {t_final, y};
    result.rhs_evals = f.evals;
    return result;
}

} // namespace

StateVector StateVector::basis(std::size_t n, std::size_t k, double t) {
    if (k >= n) throw InputError("StateVector::basis: index out of range");
    StateVector s;
    s.t = t;
    s.amps = Vec::Zero(static_cast<Eigen::Index>(n));
    s.amps[static_cast<Eigen::Index>(k)] = 1.0;
    return s;
}

void IntegratorConfig::check() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw InputError("IntegratorConfig: rtol and atol must be > 0");
    if (sample_count < 2) throw InputError("IntegratorConfig: sample_count must be >= 2");
    if (max_step && !(*max_step > 0.0)) throw InputError("IntegratorConfig: max_step must be > 0");
    if (initial_step && !(*initial_step > 0.0)) {
        throw InputError("IntegratorConfig: initial_step must be > 0");
    }
}

std::vector<double> PropagationResult::final_probabilities() const {
    return probabilities_of(final_state.amps);
}

StepSizeUnderflow::StepSizeUnderflow(double t_, double h_)
    : IntegrationError(format_time("step size underflow", t_)), t(t_), h(h_) {}

NonFiniteState::NonFiniteState(double t_)
    : IntegrationError(format_time("non-finite amplitude", t_)), t(t_) {}

Eigen::VectorXcd rhs(const ModelSpec& spec, const StateVector& state) {
    FrameRhs f(spec);
    Vec out(state.amps.size());
    f(state.t, state.amps, out);
    return out;
}

double phase_step_cap(const ModelSpec& spec, double t) { return FrameRhs(spec).cap(t); }

PropagationResult propagate(const ModelSpec& spec, const StateVector& initial, double t_final,
                            const IntegratorConfig& config) {
    config.check();
    if (initial.amps.size() != spec.beta.size()) {
        throw InputError("propagate: state dimension does not match model");
    }
    if (!all_finite(initial.amps)) throw NonFiniteState(initial.t);
    switch (config.method) {
    case Method::dopri5: return integrate<Dopri5Stepper>(spec, initial, t_final, config);
    case Method::dop853: return integrate<Dop853Stepper>(spec, initial, t_final, config);
    }
    throw InputError("propagate: unknown method");
}

const char* to_string(Method method) {
    switch (method) {
    case Method::dopri5: return "dopri5";
    case Method::dop853: return "dop853";
    }
    return "?";
}

double default_margin(const ModelSpec& spec) {
    double min_dbeta = std::numeric_limits<double>::infinity();
    const auto n = spec.beta.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = std::abs(spec.beta[i] - spec.beta[j]);
            if (d > 0.0) min_dbeta = std::min(min_dbeta, d);
        }
    }
    if (!std::isfinite(min_dbeta)) {
        throw InputError("choose_window: all slopes are equal; no crossings exist");
    }
    // Relative phase past the crossing is dbeta * m^2 / 2; require 50 turns.
    return std::sqrt(2.0 * 50.0 * kTwoPi / min_dbeta);
}

double choose_window(const ModelSpec& spec, double margin) {
    double latest = -1.0;
    const auto n = spec.beta.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double db = spec.beta[i] - spec.beta[j];
            if (db == 0.0) continue;
            latest = std::max(latest, std::abs((spec.alpha[j] - spec.alpha[i]) / db));
        }
    }
    if (latest < 0.0) throw InputError("choose_window: all slopes are equal; no crossings exist");
    return latest + margin;
}

double choose_window(const ModelSpec& spec) { return choose_window(spec, default_margin(spec)); }

Eigen::VectorXcd to_lab_frame(const ModelSpec& spec, const Eigen::VectorXcd& amps, double t) {
    Vec psi(amps.size());
    for (Eigen::Index i = 0; i < amps.size(); ++i) {
        const double theta = (0.5 * spec.beta[i] * t + spec.alpha[i]) * t;
        psi[i] = std::polar(1.0, -theta) * amps[i];
    }
    return psi;
}

Eigen::VectorXcd to_interaction_frame(const ModelSpec& spec, const Eigen::VectorXcd& psi, double t) {
    Vec a(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const double theta = (0.5 * spec.beta[i] * t + spec.alpha[i]) * t;
        a[i] = std::polar(1.0, theta) * psi[i];
    }
    return a;
}

void write_timeseries_csv(std::ostream& os, const PropagationResult& result) {
    const std::size_t n = result.samples.empty() ? 0 : result.samples.front().probabilities.size();
    os << "t";
    for (std::size_t i = 0; i < n; ++i) os << ",P" << i + 1;
    os << '\n';
    char buf[40];
    for (const auto& s : result.samples) {
        std::snprintf(buf, sizeof(buf), "%.17g", s.t);
        os << buf;
        for (double p : s.probabilities) {
            std::snprintf(buf, sizeof(buf), "%.17g", p);
            os << ',' << buf;
        }
        os << '\n';
    }
}

} // namespace mlz
