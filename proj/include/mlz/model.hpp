// model.hpp: multistate Landau-Zener models H(t) = A + B t.
//
// A model is stored as diabatic slopes (diagonal of B), diabatic offsets
// (diagonal of A) and the off-diagonal Hermitian coupling part of A.
// State indices are 0-based throughout the library; files and the CLI use
// 1-based indices.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlz {

using cplx = std::complex<double>;

class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ModelSpec {
    Eigen::VectorXd beta;      // slopes
    Eigen::VectorXd alpha;     // offsets
    Eigen::MatrixXcd coupling; // off-diagonal part of A, zero diagonal

    ModelSpec() = default;
    ModelSpec(Eigen::VectorXd slopes, Eigen::VectorXd offsets, Eigen::MatrixXcd couplings);

    // Zero-coupling model with the given slopes and offsets.
    static ModelSpec diagonal(std::vector<double> slopes, std::vector<double> offsets);

    std::size_t size() const noexcept { return static_cast<std::size_t>(beta.size()); }

    // Sets coupling(i, j) and its Hermitian partner (j, i).
    void set_coupling(std::size_t i, std::size_t j, cplx value);

    double diabatic_energy(std::size_t i, double t) const { return beta[i] * t + alpha[i]; }

    // Full Hamiltonian A + B t at real time t.
    Eigen::MatrixXcd hamiltonian(double t) const;

    bool operator==(const ModelSpec&) const = default;
};

enum class Severity { error, warning };

enum class ViolationKind {
    empty_model,
    size_mismatch,
    non_finite,
    nonzero_diagonal_coupling,
    non_hermitian,
    non_canonical_band_coupling,
    near_parallel_slopes,
};

struct Violation {
    Severity severity;
    ViolationKind kind;
    std::size_t i;
    std::size_t j;
    std::string message;
};

// Every structural problem of the spec. Band couplings and near-parallel
// slopes are reported as warnings; everything else is an error.
std::vector<Violation> validate(const ModelSpec& spec);

bool has_errors(const std::vector<Violation>& violations);

// True when no pair of states sharing a slope is coupled.
bool is_canonical(const ModelSpec& spec);

enum class BandKind { max_slope, min_slope, interior, unique_slope_all };

struct Band {
    double slope;
    std::vector<std::size_t> members; // ascending by alpha, ties by index
    BandKind kind;
};

// Partition of the states by exact slope equality, ordered by ascending slope.
std::vector<Band> bands(const ModelSpec& spec);

// Index into bands(spec) of the band holding state k.
std::size_t band_of(const std::vector<Band>& decomposition, std::size_t k);

enum class TransitionClass {
    regular_crossing,
    counterintuitive,
    within_band_intuitive,
    degenerate,
    interior_band,
};

// Class of the transition from state m to state n.
TransitionClass classify_transition(const ModelSpec& spec, std::size_t m, std::size_t n);

struct BandTransform {
    std::vector<std::size_t> members; // band states, ascending index
    Eigen::MatrixXcd unitary;         // columns: new basis states in the old band basis
};

struct CanonicalModel {
    ModelSpec spec;
    std::vector<BandTransform> transforms; // one per band with more than one member

    // Block-diagonal N x N unitary U with psi_old = U psi_new.
    Eigen::MatrixXcd full_unitary() const;
};

// Removes intra-band couplings by diagonalizing A restricted to each band.
// Bands without intra-band coupling are left untouched. Within a coupled
// band the eigenvalues are assigned in ascending order to the member
// indices in ascending order.
CanonicalModel canonicalize_bands(const ModelSpec& spec);

const char* to_string(BandKind kind);
const char* to_string(TransitionClass cls);
const char* to_string(ViolationKind kind);

} // namespace mlz
