// scattering.hpp: finite-window scattering matrices.

#pragma once

#include "mlz/model.hpp"
#include "mlz/propagator.hpp"
#include "mlz/parallel.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace mlz {

struct SaturationReport {
    std::size_t column = 0;
    double window = 0.0;
    std::vector<double> at_window; // P(T)
    std::vector<double> at_double; // P(2T)
    std::vector<double> delta;     // |P(T) - P(2T)|
    std::vector<bool> saturated;

    bool all_saturated() const;
};

struct ScatteringMatrix {
    // Column j holds the interaction-frame state at +T after starting in
    // basis state j at -T. Phases depend on the frame; magnitudes do not.
    Eigen::MatrixXcd amplitudes;
    Eigen::MatrixXd probabilities;
    double window = 0.0;
    std::vector<double> column_drift;
    std::vector<SaturationReport> saturation; // per column; empty unless requested

    std::size_t size() const noexcept { return static_cast<std::size_t>(amplitudes.rows()); }
    double max_drift() const;
};

// Integration failure of one column of a scattering matrix.
class ColumnError : public IntegrationError {
public:
    ColumnError(std::size_t column, const std::string& what);
    std::size_t column;
};

struct ScatterOptions {
    bool check_saturation = false;
    std::size_t workers = default_workers();
};

// Propagates basis state j from -T to +T.
PropagationResult scattering_column(const ModelSpec& spec, std::size_t j, double window,
                                    const IntegratorConfig& config = {});

// Columns are computed concurrently and joined; each column depends only on
// its own inputs, so the result does not depend on scheduling.
ScatteringMatrix scattering_matrix(const ModelSpec& spec, double window,
                                   const IntegratorConfig& config = {},
                                   const ScatterOptions& options = {});

// Runs column j at windows T and 2T. An entry is saturated when
// |P(T) - P(2T)| < max(1e-6, 1e-3 P(2T)).
SaturationReport saturation_check(const ModelSpec& spec, std::size_t j, double window,
                                  const IntegratorConfig& config = {});

SaturationReport compare_windows(std::size_t j, double window, const std::vector<double>& at_window,
                                 const std::vector<double>& at_double);

// max |(S^dagger S - I)_ij|
double unitarity_defect(const Eigen::MatrixXcd& s);

// Lab-frame scattering amplitudes psi(+T) = S_lab psi(-T).
Eigen::MatrixXcd lab_frame_amplitudes(const ModelSpec& spec, const Eigen::MatrixXcd& s, double window);

void write_probability_csv(std::ostream& os, const ScatteringMatrix& s);
void write_amplitude_csv(std::ostream& os, const ScatteringMatrix& s);

} // namespace mlz
