#include "mlz/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mlz {

namespace {

constexpr double kSaturationAbs = 1e-6;
constexpr double kSaturationRel = 1e-3;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void rethrow_tagged(std::size_t column, const std::exception_ptr& err) {
    try {
        std::rethrow_exception(err);
    } catch (const IntegrationError& e) {
        throw ColumnError(column, e.what());
    }
}

} // namespace

bool SaturationReport::all_saturated() const {
    return std::all_of(saturated.begin(), saturated.end(), [](bool b) { return b; });
}

double ScatteringMatrix::max_drift() const {
    double d = 0.0;
    for (double x : column_drift) d = std::max(d, x);
    return d;
}

ColumnError::ColumnError(std::size_t column_, const std::string& what)
    : IntegrationError("column " + std::to_string(column_ + 1) + ": " + what), column(column_) {}

PropagationResult scattering_column(const ModelSpec& spec, std::size_t j, double window,
                                    const IntegratorConfig& config) {
    if (!(window > 0.0)) throw InputError("scattering window must be positive");
    try {
        return propagate(spec, StateVector::basis(spec.size(), j, -window), window, config);
    } catch (const IntegrationError& e) {
        throw ColumnError(j, e.what());
    }
}

ScatteringMatrix scattering_matrix(const ModelSpec& spec, double window,
                                   const IntegratorConfig& config, const ScatterOptions& options) {
    const std::size_t n = spec.size();
    if (!(window > 0.0)) throw InputError("scattering window must be positive");
    config.check();

    // Time series are not needed here; two samples keep memory bounded.
    IntegratorConfig cfg = config;
    cfg.sample_count = 2;

    std::vector<Eigen::VectorXcd> finals(n);
    std::vector<Eigen::VectorXcd> doubled(options.check_saturation ? n : 0);
    std::vector<double> drift(n, 0.0);
    const std::size_t jobs = options.check_saturation ? 2 * n : n;

    const auto errors = parallel_for(
        jobs,
        [&](std::size_t job) {
            const std::size_t j = job % n;
            const double w = job < n ? window : 2.0 * window;
            const auto r = propagate(spec, StateVector::basis(n, j, -w), w, cfg);
            if (job < n) {
                finals[j] = r.final_state.amps;
                drift[j] = r.norm_drift;
            } else {
                doubled[j] = r.final_state.amps;
            }
        },
        options.workers);
    for (std::size_t job = 0; job < jobs; ++job) {
        if (errors[job]) rethrow_tagged(job % n, errors[job]);
    }

    ScatteringMatrix s;
    const auto nn = static_cast<Eigen::Index>(n);
    s.amplitudes.resize(nn, nn);
    for (std::size_t j = 0; j < n; ++j) s.amplitudes.col(static_cast<Eigen::Index>(j)) = finals[j];
    s.probabilities = s.amplitudes.cwiseAbs2();
    s.window = window;
    s.column_drift = drift;
    if (options.check_saturation) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> p1(n), p2(n);
            for (std::size_t i = 0; i < n; ++i) {
                p1[i] = std::norm(finals[j][static_cast<Eigen::Index>(i)]);
                p2[i] = std::norm(doubled[j][static_cast<Eigen::Index>(i)]);
            }
            s.saturation.push_back(compare_windows(j, window, p1, p2));
        }
    }
    return s;
}

SaturationReport compare_windows(std::size_t j, double window, const std::vector<double>& at_window,
                                 const std::vector<double>& at_double) {
    SaturationReport r;
    r.column = j;
    r.window = window;
    r.at_window = at_window;
    r.at_double = at_double;
    for (std::size_t i = 0; i < at_window.size(); ++i) {
        const double d = std::abs(at_window[i] - at_double[i]);
        r.delta.push_back(d);
        r.saturated.push_back(d < std::max(kSaturationAbs, kSaturationRel * at_double[i]));
    }
    return r;
}

SaturationReport saturation_check(const ModelSpec& spec, std::size_t j, double window,
                                  const IntegratorConfig& config) {
    IntegratorConfig cfg = config;
    cfg.sample_count = 2;
    std::vector<double> p[2];
    const auto errors = parallel_for(2, [&](std::size_t k) {
        p[k] = scattering_column(spec, j, k == 0 ? window : 2.0 * window, cfg).final_probabilities();
    });
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return compare_windows(j, window, p[0], p[1]);
}

double unitarity_defect(const Eigen::MatrixXcd& s) {
    const auto n = s.cols();
    return (s.adjoint() * s - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd lab_frame_amplitudes(const ModelSpec& spec, const Eigen::MatrixXcd& s, double window) {
    // psi(T) = P(T)^dagger a(T), a(-T) = P(-T) psi(-T)
    Eigen::MatrixXcd lab = s;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        lab.col(j) = to_lab_frame(spec, s.col(j), window);
    }
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const double theta = (0.5 * spec.beta[j] * window - spec.alpha[j]) * window;
        lab.col(j) *= std::polar(1.0, theta);
    }
    return lab;
}

void write_probability_csv(std::ostream& os, const ScatteringMatrix& s) {
    const auto n = s.probabilities.rows();
    os << "S_ij_prob";
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << j + 1;
    os << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        os << i + 1;
        for (Eigen::Index j = 0; j < n; ++j) os << ',' << g17(s.probabilities(i, j));
        os << '\n';
    }
}

void write_amplitude_csv(std::ostream& os, const ScatteringMatrix& s) {
    const auto n = s.amplitudes.rows();
    os << "S_ij_amp";
    for (Eigen::Index j = 0; j < n; ++j) os << ",re_" << j + 1 << ",im_" << j + 1;
    os << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        os << i + 1;
        for (Eigen::Index j = 0; j < n; ++j) {
            os << ',' << g17(s.amplitudes(i, j).real()) << ',' << g17(s.amplitudes(i, j).imag());
        }
        os << '\n';
    }
}

} // namespace mlz
