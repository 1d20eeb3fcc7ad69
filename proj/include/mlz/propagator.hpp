// propagator.hpp: adaptive integration of i dpsi/dt = (A + B t) psi.
//
// Integration runs in the interaction frame
//     a_i(t) = exp(+i (beta_i t^2 / 2 + alpha_i t)) psi_i(t),
// where the diagonal dynamic phases are removed and the right-hand side
// only carries the couplings with bounded, oscillating phase factors.
// |a_i| = |psi_i|, so populations are read directly from the amplitudes.

#pragma once

#include "mlz/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mlz {

struct StateVector {
    double t = 0.0;
    Eigen::VectorXcd amps;

    static StateVector basis(std::size_t n, std::size_t k, double t);
    double norm2() const { return amps.squaredNorm(); }
};

// Embedded Runge-Kutta pair used for stepping. Both estimate the local
// error with a fifth-order embedded formula.
enum class Method {
    dopri5, // Dormand-Prince 5(4), fourth-order dense output
    dop853, // Dormand-Prince 8(5,3), seventh-order dense output
};

struct IntegratorConfig {
    Method method = Method::dop853;
    double rtol = 1e-10;
    double atol = 1e-12;
    std::optional<double> max_step;     // empty: phase-resolving automatic cap
    std::optional<double> initial_step; // empty: automatic
    std::size_t sample_count = 2000;

    void check() const;
};

struct Sample {
    double t;
    std::vector<double> probabilities;
};

struct PropagationResult {
    std::vector<Sample> samples;
    StateVector final_state;
    double norm_drift = 0.0; // max over accepted steps of | |a|^2 - |a0|^2 |
    std::size_t rhs_evals = 0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    std::vector<double> final_probabilities() const;
};

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StepSizeUnderflow : public IntegrationError {
public:
    StepSizeUnderflow(double t, double h);
    double t;
    double h;
};

class NonFiniteState : public IntegrationError {
public:
    explicit NonFiniteState(double t);
    double t;
};

// da/dt in the interaction frame:
//   da_i/dt = -i sum_j coupling_ij exp(i[(beta_i-beta_j) t^2/2 + (alpha_i-alpha_j) t]) a_j
Eigen::VectorXcd rhs(const ModelSpec& spec, const StateVector& state);

// Integrates from initial.t to t_final (either direction). The model is
// expected to be canonical, though the equations remain exact otherwise.
PropagationResult propagate(const ModelSpec& spec, const StateVector& initial, double t_final,
                            const IntegratorConfig& config = {});

const char* to_string(Method method);

// Automatic step cap at time t: a quarter period of the fastest coupled phase.
double phase_step_cap(const ModelSpec& spec, double t);

// Margin that lets every pair's relative phase turn at least 50 cycles past
// its crossing.
double default_margin(const ModelSpec& spec);

// Latest pairwise crossing time |t_c| plus margin.
double choose_window(const ModelSpec& spec, double margin);
double choose_window(const ModelSpec& spec);

// Interaction-frame amplitudes <-> lab-frame amplitudes at time t.
Eigen::VectorXcd to_lab_frame(const ModelSpec& spec, const Eigen::VectorXcd& amps, double t);
Eigen::VectorXcd to_interaction_frame(const ModelSpec& spec, const Eigen::VectorXcd& psi, double t);

// CSV "t,P1,...,PN" with 17 significant digits.
void write_timeseries_csv(std::ostream& os, const PropagationResult& result);

} // namespace mlz
