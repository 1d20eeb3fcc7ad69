#include "mlz/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mlz {

namespace {

constexpr double kNearParallel = 1e-9;

std::string pair_label(std::size_t i, std::size_t j) {
    std::ostringstream os;
    os << "(" << i + 1 << "," << j + 1 << ")";
    return os.str();
}

} // namespace

ModelSpec::ModelSpec(Eigen::VectorXd slopes, Eigen::VectorXd offsets, Eigen::MatrixXcd couplings)
    : beta(std::move(slopes)), alpha(std::move(offsets)), coupling(std::move(couplings)) {}

ModelSpec ModelSpec::diagonal(std::vector<double> slopes, std::vector<double> offsets) {
    if (slopes.size() != offsets.size()) {
        throw InputError("ModelSpec::diagonal: slopes and offsets differ in length");
    }
    const auto n = static_cast<Eigen::Index>(slopes.size());
    ModelSpec spec;
    spec.beta = Eigen::Map<Eigen::VectorXd>(slopes.data(), n);
    spec.alpha = Eigen::Map<Eigen::VectorXd>(offsets.data(), n);
    spec.coupling = Eigen::MatrixXcd::Zero(n, n);
    return spec;
}

void ModelSpec::set_coupling(std::size_t i, std::size_t j, cplx value) {
    if (i >= size() || j >= size()) {
        throw InputError("set_coupling: index out of range");
    }
    if (i == j) {
        throw InputError("set_coupling: diagonal belongs to alpha");
    }
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    coupling(a, b) = value;
    coupling(b, a) = std::conj(value);
}

Eigen::MatrixXcd ModelSpec::hamiltonian(double t) const {
    Eigen::MatrixXcd h = coupling;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        h(i, i) = cplx(beta[i] * t + alpha[i], 0.0);
    }
    return h;
}

std::vector<Violation> validate(const ModelSpec& spec) {
    std::vector<Violation> out;
    const auto n = spec.beta.size();
    if (n == 0) {
        out.push_back({Severity::error, ViolationKind::empty_model, 0, 0, "model has no states"});
        return out;
    }
    if (spec.alpha.size() != n || spec.coupling.rows() != n || spec.coupling.cols() != n) {
        std::ostringstream os;
        os << "size mismatch: beta " << n << ", alpha " << spec.alpha.size() << ", coupling "
           << spec.coupling.rows() << "x" << spec.coupling.cols();
        out.push_back({Severity::error, ViolationKind::size_mismatch, 0, 0, os.str()});
        return out;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(spec.beta[i]) || !std::isfinite(spec.alpha[i])) {
            const auto k = static_cast<std::size_t>(i);
            out.push_back({Severity::error, ViolationKind::non_finite, k, k,
                           "non-finite slope or offset at state " + std::to_string(k + 1)});
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(i);
        if (spec.coupling(i, i) != cplx(0.0, 0.0)) {
            out.push_back({Severity::error, ViolationKind::nonzero_diagonal_coupling, a, a,
                           "nonzero diagonal coupling at " + pair_label(a, a) +
                               "; offsets belong in alpha"});
        }
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto b = static_cast<std::size_t>(j);
            const cplx cij = spec.coupling(i, j);
            const cplx cji = spec.coupling(j, i);
            if (!std::isfinite(cij.real()) || !std::isfinite(cij.imag()) ||
                !std::isfinite(cji.real()) || !std::isfinite(cji.imag())) {
                out.push_back({Severity::error, ViolationKind::non_finite, a, b,
                               "non-finite coupling at " + pair_label(a, b)});
                continue;
            }
            if (cij != std::conj(cji)) {
                out.push_back({Severity::error, ViolationKind::non_hermitian, a, b,
                               "coupling not Hermitian at " + pair_label(a, b) + "/" +
                                   pair_label(b, a)});
            }
            if (spec.beta[i] == spec.beta[j]) {
                if (cij != cplx(0.0, 0.0) || cji != cplx(0.0, 0.0)) {
                    out.push_back({Severity::warning, ViolationKind::non_canonical_band_coupling, a,
                                   b, "non-canonical band coupling at " + pair_label(a, b)});
                }
            } else if (std::abs(spec.beta[i] - spec.beta[j]) < kNearParallel) {
                out.push_back({Severity::warning, ViolationKind::near_parallel_slopes, a, b,
                               "slopes at " + pair_label(a, b) +
                                   " differ by less than 1e-9 but are not equal"});
            }
        }
    }
    return out;
}

bool has_errors(const std::vector<Violation>& violations) {
    return std::any_of(violations.begin(), violations.end(),
                       [](const Violation& v) { return v.severity == Severity::error; });
}

bool is_canonical(const ModelSpec& spec) {
    const auto n = spec.beta.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && spec.beta[i] == spec.beta[j] && spec.coupling(i, j) != cplx(0.0, 0.0)) {
                return false;
            }
        }
    }
    return true;
}

std::vector<Band> bands(const ModelSpec& spec) {
    const std::size_t n = spec.size();
    std::vector<double> slopes(spec.beta.data(), spec.beta.data() + n);
    std::sort(slopes.begin(), slopes.end());
    slopes.erase(std::unique(slopes.begin(), slopes.end()), slopes.end());

    std::vector<Band> out;
    out.reserve(slopes.size());
    for (double s : slopes) {
        Band band{s, {}, BandKind::interior};
        for (std::size_t i = 0; i < n; ++i) {
            if (spec.beta[static_cast<Eigen::Index>(i)] == s) band.members.push_back(i);
        }
        std::stable_sort(band.members.begin(), band.members.end(),
                         [&](std::size_t a, std::size_t b) {
                             return spec.alpha[static_cast<Eigen::Index>(a)] <
                                    spec.alpha[static_cast<Eigen::Index>(b)];
                         });
        if (slopes.size() == 1) {
            band.kind = BandKind::unique_slope_all;
        } else if (s == slopes.back()) {
            band.kind = BandKind::max_slope;
        } else if (s == slopes.front()) {
            band.kind = BandKind::min_slope;
        }
        out.push_back(std::move(band));
    }
    return out;
}

std::size_t band_of(const std::vector<Band>& decomposition, std::size_t k) {
    for (std::size_t b = 0; b < decomposition.size(); ++b) {
        const auto& m = decomposition[b].members;
        if (std::find(m.begin(), m.end(), k) != m.end()) return b;
    }
    throw InputError("band_of: state " + std::to_string(k + 1) + " not in decomposition");
}

TransitionClass classify_transition(const ModelSpec& spec, std::size_t m, std::size_t n) {
    if (m >= spec.size() || n >= spec.size()) {
        throw InputError("classify_transition: state index out of range");
    }
    if (m == n) {
        throw InputError("classify_transition: source and target coincide");
    }
    const auto im = static_cast<Eigen::Index>(m);
    const auto in = static_cast<Eigen::Index>(n);
    if (spec.beta[im] != spec.beta[in]) return TransitionClass::regular_crossing;

    const auto decomposition = bands(spec);
    const Band& band = decomposition[band_of(decomposition, m)];
    if (band.kind == BandKind::unique_slope_all) {
        throw InputError("classify_transition: all states share one slope; no extreme band exists");
    }
    const double am = spec.alpha[im];
    const double an = spec.alpha[in];
    if (am == an) return TransitionClass::degenerate;
    switch (band.kind) {
    case BandKind::max_slope:
        return am < an ? TransitionClass::counterintuitive : TransitionClass::within_band_intuitive;
    case BandKind::min_slope:
        return am > an ? TransitionClass::counterintuitive : TransitionClass::within_band_intuitive;
    default:
        return TransitionClass::interior_band;
    }
}

Eigen::MatrixXcd CanonicalModel::full_unitary() const {
    const auto n = static_cast<Eigen::Index>(spec.size());
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n, n);
    for (const auto& tr : transforms) {
        for (std::size_t a = 0; a < tr.members.size(); ++a) {
            for (std::size_t b = 0; b < tr.members.size(); ++b) {
                u(static_cast<Eigen::Index>(tr.members[a]), static_cast<Eigen::Index>(tr.members[b])) =
                    tr.unitary(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
    }
    return u;
}

CanonicalModel canonicalize_bands(const ModelSpec& spec) {
    CanonicalModel result{spec, {}};
    const auto n = static_cast<Eigen::Index>(spec.size());

    Eigen::MatrixXcd u_full = Eigen::MatrixXcd::Identity(n, n);
    for (const Band& band : bands(spec)) {
        if (band.members.size() < 2) continue;
        std::vector<std::size_t> members = band.members;
        std::sort(members.begin(), members.end());
        const auto m = static_cast<Eigen::Index>(members.size());

        Eigen::MatrixXcd block(m, m);
        bool coupled = false;
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) {
                const auto ia = static_cast<Eigen::Index>(members[static_cast<std::size_t>(a)]);
                const auto ib = static_cast<Eigen::Index>(members[static_cast<std::size_t>(b)]);
                block(a, b) = a == b ? cplx(spec.alpha[ia], 0.0) : spec.coupling(ia, ib);
                if (a != b && block(a, b) != cplx(0.0, 0.0)) coupled = true;
            }
        }
        if (!coupled) continue;

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(block);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("canonicalize_bands: band eigendecomposition failed");
        }
        Eigen::MatrixXcd vecs = solver.eigenvectors();
        // Fix the phase: largest component of each eigenvector real and positive.
        for (Eigen::Index c = 0; c < m; ++c) {
            Eigen::Index arg = 0;
            vecs.col(c).cwiseAbs().maxCoeff(&arg);
            const cplx z = vecs(arg, c);
            vecs.col(c) *= std::conj(z) / std::abs(z);
        }
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) {
                u_full(static_cast<Eigen::Index>(members[static_cast<std::size_t>(a)]),
                       static_cast<Eigen::Index>(members[static_cast<std::size_t>(b)])) = vecs(a, b);
            }
        }
        result.transforms.push_back({members, vecs});
    }
    if (result.transforms.empty()) return result;

    // A' = U^dagger A U, with B unchanged because U only mixes equal slopes.
    Eigen::MatrixXcd a_full = spec.hamiltonian(0.0);
    Eigen::MatrixXcd a_new = u_full.adjoint() * a_full * u_full;
    for (const auto& tr : result.transforms) {
        for (std::size_t a = 0; a < tr.members.size(); ++a) {
            for (std::size_t b = 0; b < tr.members.size(); ++b) {
                if (a != b) {
                    a_new(static_cast<Eigen::Index>(tr.members[a]),
                          static_cast<Eigen::Index>(tr.members[b])) = cplx(0.0, 0.0);
                }
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        result.spec.alpha[i] = a_new(i, i).real();
        a_new(i, i) = cplx(0.0, 0.0);
    }
    // Enforce exact Hermiticity of the rotated couplings.
    result.spec.coupling = 0.5 * (a_new + a_new.adjoint());
    return result;
}

const char* to_string(BandKind kind) {
    switch (kind) {
    case BandKind::max_slope: return "max-slope";
    case BandKind::min_slope: return "min-slope";
    case BandKind::interior: return "interior";
    case BandKind::unique_slope_all: return "unique-slope-all";
    }
    return "?";
}

const char* to_string(TransitionClass cls) {
    switch (cls) {
    case TransitionClass::regular_crossing: return "regular-crossing";
    case TransitionClass::counterintuitive: return "counterintuitive";
    case TransitionClass::within_band_intuitive: return "within-band-intuitive";
    case TransitionClass::degenerate: return "degenerate";
    case TransitionClass::interior_band: return "interior-band";
    }
    return "?";
}

const char* to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::empty_model: return "empty-model";
    case ViolationKind::size_mismatch: return "size-mismatch";
    case ViolationKind::non_finite: return "non-finite";
    case ViolationKind::nonzero_diagonal_coupling: return "nonzero-diagonal-coupling";
    case ViolationKind::non_hermitian: return "non-hermitian";
    case ViolationKind::non_canonical_band_coupling: return "non-canonical-band-coupling";
    case ViolationKind::near_parallel_slopes: return "near-parallel-slopes";
    }
    return "?";
}

} // namespace mlz
