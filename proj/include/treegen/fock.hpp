#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace treegen::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Occupation = std::vector<int>;

// Permanent of the n x n matrix gathered from A by (rows, cols) index lists.
// Direct expansion for small n, Gray-coded Ryser beyond.
Complex permanent(const Matrix& A, const std::vector<int>& rows, const std::vector<int>& cols);

// All occupation vectors of n photons over m modes, in lexicographically
// descending order. The ordering is part of the serialized format, so it
// must never change.
class FockBasis {
public:
    FockBasis(int modes, int photons);

    int modes() const { return m_; }
    int photons() const { return n_; }
    std::size_t size() const { return states_.size(); }
    const Occupation& state(std::size_t i) const { return states_[i]; }
    const std::vector<Occupation>& states() const { return states_; }

    // Inverse of state(); throws if occ is not a member.
    std::size_t index_of(const Occupation& occ) const;

    static std::shared_ptr<const FockBasis> get(int modes, int photons);

private:
    int m_;
    int n_;
    std::vector<Occupation> states_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

struct StateVector {
    BasisPtr basis;
    Vector amps;

    StateVector() = default;
    explicit StateVector(BasisPtr b) : basis(std::move(b)), amps(Vector::Zero(basis->size())) {}
    StateVector(BasisPtr b, Vector a) : basis(std::move(b)), amps(std::move(a)) {}

    double squared_norm() const { return amps.squaredNorm(); }
    Complex inner(const StateVector& other) const { return amps.dot(other.amps); }

    std::string to_text() const;
    static StateVector from_text(const std::string& text);
};

BasisPtr basis_of(int modes, int photons);

// Multi-photon action of an m x m transfer matrix. Output amplitude on
// occupation T from input occupation S is perm(U[T|S]) / sqrt(prod s! prod t!)
// with rows/columns of U repeated by the occupations.
StateVector apply_linear(const Matrix& transfer, const StateVector& state);

// Dense matrix of the same map on the full fixed-photon-number basis.
Matrix transfer_matrix(const Matrix& transfer, const FockBasis& basis);

// Same matrix computed column-wise by iterated photon insertion; agrees with
// transfer_matrix to machine precision and is what the training engine uses
// when many meshes are lifted per epoch.
Matrix transfer_matrix_fast(const Matrix& transfer, const FockBasis& basis);

// Photon-number-dependent phase screen: every mode with occupation n >= 1
// contributes phi1 + (n-1)*phi2.
StateVector apply_nonlinearity(const StateVector& state, double phi1, double phi2);
void apply_nonlinearity_inplace(Vector& amps, const FockBasis& basis, double phi1, double phi2);

// Annihilate one photon in `mode`: (a psi)_{S} = sqrt(S_mode + 1) psi_{S+e}.
StateVector lower(const StateVector& state, int mode);

enum class Qubit : std::uint8_t { Zero, One, Plus, Minus };

// Ordered dual-rail qubit slots; slot s occupies modes (2s, 2s+1). ABSENT
// slots hold vacuum on their pair, so photon number varies per configuration.
class QubitConfiguration {
public:
    explicit QubitConfiguration(std::vector<bool> present);

    int slots() const { return static_cast<int>(present_.size()); }
    int modes() const { return 2 * slots(); }
    int photons() const { return photons_; }
    bool present(int slot) const { return present_[slot]; }
    int first_present() const { return first_present_; }
    const std::vector<int>& present_slots() const { return present_slots_; }

    std::string label() const;  // e.g. "P.P" with '.' for absent

private:
    std::vector<bool> present_;
    std::vector<int> present_slots_;
    int photons_;
    int first_present_;
};

// The dual-rail computational basis of a configuration: Fock-basis indices of
// every PRESENT-slot bit assignment, in bit order (slot first_present = MSB).
struct ComputationalBasis {
    std::vector<std::size_t> indices;        // into the configuration's Fock basis
    std::vector<std::uint32_t> bitstrings;   // logical bits, one per index
};

ComputationalBasis computational_basis(const QubitConfiguration& config);

StateVector encode_dual_rail(const QubitConfiguration& config, const std::vector<Qubit>& logical);

// CZ between the first PRESENT slot and every other PRESENT slot. Throws if
// the state has weight outside the configuration's computational basis.
StateVector apply_cz_circuit(const StateVector& state, const QubitConfiguration& config);

struct TrainingPair {
    QubitConfiguration config;
    StateVector input;
    StateVector target;
    std::vector<Qubit> logical_in;  // per PRESENT slot, in slot order
};

enum class BasisChoice { Restricted, Full };

// All parent+children configurations a branching-b unit-cell network must
// support: first slot PRESENT, each of the b child slots independently
// present or absent.
std::vector<QubitConfiguration> configs_for_branching(int b);

// Restricted mode fixes the first PRESENT slot to |+> and enumerates the
// remaining slots over the X basis and, separately, the Z basis. Full mode
// enumerates every slot over both bases. Exact duplicates are removed.
std::vector<TrainingPair> build_training_set(const std::vector<QubitConfiguration>& configs,
                                             BasisChoice choice);

}  // namespace treegen::fock
