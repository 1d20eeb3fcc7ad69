// theory.hpp: closed-form predictions for linear-crossing models.

#pragma once

#include "mlz/model.hpp"

#include <cstddef>
#include <vector>

namespace mlz {

// Survival amplitude of a state whose slope is the largest or smallest:
//   |S_kk| = exp(-pi sum_{i: beta_i != beta_k} |A_ki|^2 / |beta_k - beta_i|)
struct BEPrediction {
    std::size_t state;
    double survival_amplitude;
    double exponent;

    double survival_probability() const { return survival_amplitude * survival_amplitude; }
};

// Throws InputError when beta_k is not extreme or the model is not canonical.
BEPrediction be_survival(const ModelSpec& spec, std::size_t k);

struct TransitionPair {
    std::size_t from;
    std::size_t to;

    bool operator==(const TransitionPair&) const = default;
};

// All counterintuitive transitions; their asymptotic probabilities vanish.
// Ordered by source, then target.
std::vector<TransitionPair> nogo_prediction(const ModelSpec& spec);

// One sloped level crossing a band of parallel levels. State 0 is the
// sloped level, state 1 + m is band level m.
struct DOGeometry {
    double sloped_slope = 0.0;
    double sloped_offset = 0.0;
    double band_slope = 0.0;
    std::vector<double> band_offsets; // strictly increasing
    std::vector<cplx> couplings;      // sloped level <-> band level m

    std::size_t size() const noexcept { return band_offsets.size() + 1; }
    void check() const;
    ModelSpec to_model() const;
    // Band indices in the order the sloped level crosses them.
    std::vector<std::size_t> crossing_order() const;
};

// Exact asymptotic probabilities for a start state, from ordered products of
// two-state survival factors p_m = exp(-2 pi |g_m|^2 / |beta_s - beta_b|).
std::vector<double> do_oracle(const DOGeometry& geom, std::size_t start);

// Smallest |t| at which asymptotic_eigenenergy accepts the model.
double asymptotic_threshold(const ModelSpec& spec);

// First-order adiabatic energy of diabatic state k at large |t|:
//   beta_k t + alpha_k + sum_{i: beta_i != beta_k} |A_ki|^2 / ((beta_k - beta_i) t)
double asymptotic_eigenenergy(const ModelSpec& spec, std::size_t k, double t);

} // namespace mlz
