// sweep.hpp: parameter sweeps over a model.
//
// Parameter paths use 1-based indices:
//   beta[i]  alpha[i]  coupling[i][j].re  coupling[i][j].im
// A leading '-' sets the parameter to minus the sweep value, so
// "-alpha[2]" sweeps a level that sits at -t - eps.

#pragma once

#include "mlz/model.hpp"
#include "mlz/parallel.hpp"
#include "mlz/propagator.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlz {

struct ParameterPath {
    enum class Target { beta, alpha, coupling_re, coupling_im };

    Target target = Target::alpha;
    std::size_t i = 0; // 0-based
    std::size_t j = 0;
    bool negate = false;

    static ParameterPath parse(std::string_view text);
    std::string to_string() const;
    // Throws InputError if the path does not resolve in the model.
    void apply(ModelSpec& spec, double value) const;
};

// count evenly spaced values from start to stop inclusive.
std::vector<double> linear_grid(double start, double stop, std::size_t count);

// Parses "start:stop:count".
std::vector<double> parse_grid(std::string_view text);

struct SweepSpec {
    ParameterPath path;
    std::vector<double> values;
    bool full_matrix = false; // all N columns instead of the initial state's
};

struct SweepRow {
    double value = 0.0;
    std::vector<double> probabilities; // column of the initial state, or N*N column-major
    std::string error;                 // empty when the point succeeded

    bool ok() const { return error.empty(); }
};

struct SweepResult {
    std::size_t states = 0;
    bool full_matrix = false;
    std::vector<SweepRow> rows; // ascending by value

    bool all_ok() const;
};

struct SweepOptions {
    std::size_t initial = 0;
    std::optional<double> window; // empty: choose_window per point
    IntegratorConfig config;
    std::size_t workers = default_workers();
};

SweepResult run_sweep(const ModelSpec& base, const SweepSpec& sweep, const SweepOptions& options);

// "param,P1,...,PN" or, for full matrices, "param,P_1_1,P_2_1,..." (P_i_j:
// target i, source j). Failed points are rows of NaN.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

} // namespace mlz
