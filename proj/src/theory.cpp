#include "mlz/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mlz {

namespace {

void require_index(const ModelSpec& spec, std::size_t k, const char* who) {
    if (k >= spec.size()) throw InputError(std::string(who) + ": state index out of range");
}

} // namespace

BEPrediction be_survival(const ModelSpec& spec, std::size_t k) {
    require_index(spec, k, "be_survival");
    if (!is_canonical(spec)) {
        throw InputError("be_survival: model has intra-band couplings; canonicalize first");
    }
    const auto n = spec.beta.size();
    const auto ik = static_cast<Eigen::Index>(k);
    const double bk = spec.beta[ik];
    if (bk != spec.beta.maxCoeff() && bk != spec.beta.minCoeff()) {
        throw InputError("be_survival: state " + std::to_string(k + 1) +
                         " does not have an extreme slope; the formula does not apply");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (spec.beta[i] == bk) continue;
        sum += std::norm(spec.coupling(ik, i)) / std::abs(bk - spec.beta[i]);
    }
    const double exponent = std::numbers::pi * sum;
    return {k, std::exp(-exponent), exponent};
}

std::vector<TransitionPair> nogo_prediction(const ModelSpec& spec) {
    std::vector<TransitionPair> out;
    const std::size_t n = spec.size();
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t k = 0; k < n; ++k) {
            if (m != k && classify_transition(spec, m, k) == TransitionClass::counterintuitive) {
                out.push_back({m, k});
            }
        }
    }
    return out;
}

void DOGeometry::check() const {
    if (band_offsets.empty()) throw InputError("DOGeometry: band is empty");
    if (couplings.size() != band_offsets.size()) {
        throw InputError("DOGeometry: need one coupling per band level");
    }
    if (!std::isfinite(sloped_slope) || !std::isfinite(band_slope) || !std::isfinite(sloped_offset)) {
        throw InputError("DOGeometry: non-finite slope or offset");
    }
    if (sloped_slope == band_slope) throw InputError("DOGeometry: sloped level parallel to band");
    for (std::size_t m = 0; m < band_offsets.size(); ++m) {
        if (!std::isfinite(band_offsets[m]) || !std::isfinite(couplings[m].real()) ||
            !std::isfinite(couplings[m].imag())) {
            throw InputError("DOGeometry: non-finite band offset or coupling");
        }
        if (m > 0 && !(band_offsets[m] > band_offsets[m - 1])) {
            throw InputError("DOGeometry: band offsets must be strictly increasing");
        }
    }
}

ModelSpec DOGeometry::to_model() const {
    check();
    std::vector<double> slopes{sloped_slope};
    std::vector<double> offsets{sloped_offset};
    for (double a : band_offsets) {
        slopes.push_back(band_slope);
        offsets.push_back(a);
    }
    ModelSpec spec = ModelSpec::diagonal(std::move(slopes), std::move(offsets));
    for (std::size_t m = 0; m < couplings.size(); ++m) spec.set_coupling(0, m + 1, couplings[m]);
    return spec;
}

std::vector<std::size_t> DOGeometry::crossing_order() const {
    // Crossing times (alpha_m - alpha_s)/(beta_s - beta_b) increase with
    // alpha_m when the sloped level is steeper than the band.
    std::vector<std::size_t> order(band_offsets.size());
    for (std::size_t m = 0; m < order.size(); ++m) order[m] = m;
    if (sloped_slope < band_slope) std::reverse(order.begin(), order.end());
    return order;
}

std::vector<double> do_oracle(const DOGeometry& geom, std::size_t start) {
    geom.check();
    if (start >= geom.size()) throw InputError("do_oracle: start state out of range");
    const double dbeta = std::abs(geom.sloped_slope - geom.band_slope);
    const std::size_t m_count = geom.band_offsets.size();
    std::vector<double> survive(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        survive[m] = std::exp(-2.0 * std::numbers::pi * std::norm(geom.couplings[m]) / dbeta);
    }
    const auto order = geom.crossing_order();

    std::vector<double> p(geom.size(), 0.0);
    // Population currently riding the sloped level, and where in the
    // crossing sequence it enters.
    double on_sloped = 0.0;
    std::size_t first = 0;
    if (start == 0) {
        on_sloped = 1.0;
    } else {
        const std::size_t m = start - 1;
        const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), m) - order.begin());
        p[start] = survive[m];
        on_sloped = 1.0 - survive[m];
        first = pos + 1;
    }
    for (std::size_t pos = first; pos < order.size(); ++pos) {
        const std::size_t m = order[pos];
        p[m + 1] = on_sloped * (1.0 - survive[m]);
        on_sloped *= survive[m];
    }
    p[0] = on_sloped;
    return p;
}

double asymptotic_threshold(const ModelSpec& spec) {
    double worst = 0.0;
    const auto n = spec.beta.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double db = std::abs(spec.beta[i] - spec.beta[j]);
            if (db == 0.0) continue;
            worst = std::max(worst,
                             (std::abs(spec.alpha[i] - spec.alpha[j]) + 2.0 * std::abs(spec.coupling(i, j))) / db);
        }
    }
    return 10.0 * worst;
}

double asymptotic_eigenenergy(const ModelSpec& spec, std::size_t k, double t) {
    require_index(spec, k, "asymptotic_eigenenergy");
    const double threshold = asymptotic_threshold(spec);
    if (!(std::abs(t) > threshold)) {
        throw InputError("asymptotic_eigenenergy: |t| must exceed " + std::to_string(threshold));
    }
    const auto ik = static_cast<Eigen::Index>(k);
    const double bk = spec.beta[ik];
    double e = bk * t + spec.alpha[ik];
    for (Eigen::Index i = 0; i < spec.beta.size(); ++i) {
        if (spec.beta[i] == bk) continue;
        e += std::norm(spec.coupling(ik, i)) / ((bk - spec.beta[i]) * t);
    }
    return e;
}

} // namespace mlz
