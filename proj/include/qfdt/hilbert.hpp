// hilbert.hpp — many-spin tensor-product basis, sparse real-symmetric
// operators, and states.
//
// Conventions (fixed so that golden files are deterministic):
//   * basis index encodes the spin configuration bit-wise,
//     site 1 = most significant bit;
//   * bit value 0 = spin up, 1 = spin down, so sigma_z = diag(+1, -1)
//     on a single spin.
//
// All Hamiltonians and observables handled here are real-symmetric in this
// basis; complex amplitudes appear only during time evolution (see dynamics).

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qfdt::hilbert {

using Index = std::int64_t;

struct SpinBasis {
    int n_spins = 0;
    Index dimension = 0;

    explicit SpinBasis(int n);

    // Bit of `site` (1-based, site 1 = MSB) in basis state `index`.
    int bit(Index index, int site) const;
};

enum class PauliKind { x, y, z, plus, minus };

PauliKind pauli_kind_from_string(const std::string& s);

// One entry of the stored upper triangle (row <= col).
struct Entry {
    Index row = 0;
    Index col = 0;
    double value = 0.0;
};

// Real-symmetric sparse matrix; only the upper triangle is stored and the
// full matrix is implied by M = M^T. Immutable after construction.
class SparseHermitian {
public:
    SparseHermitian() = default;
    SparseHermitian(Index dim, std::vector<Entry> upper_entries);

    Index dim() const { return dim_; }
    std::size_t nnz() const { return entries_.size(); }
    std::span<const Entry> entries() const { return entries_; }

    // Symmetric lookup; zero when absent.
    double coeff(Index r, Index c) const;

    Eigen::MatrixXd to_dense() const;

    // y = M x (full symmetric action).
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    // x^T M y
    double bilinear(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    // x^T M x
    double quadratic(const Eigen::VectorXd& x) const { return bilinear(x, x); }

    // Quadratic form with a complex vector split into (re, im):
    // returns {Re<y|M|y>, Im<y|M|y>}. The imaginary part is an exact-zero
    // residual for symmetric M and is reported for assertion purposes.
    std::pair<double, double> complex_quadratic(const Eigen::VectorXd& re,
                                                const Eigen::VectorXd& im) const;

    double max_abs() const;

    SparseHermitian scaled(double factor) const;
    static SparseHermitian sum(const SparseHermitian& a, const SparseHermitian& b);

private:
    Index dim_ = 0;
    std::vector<Entry> entries_;  // sorted by (row, col), row <= col, no zeros
};

// General sparse operator with complex coefficients; the assembly container
// for Pauli strings. Converts to SparseHermitian once real symmetry holds.
class SparseOperator {
public:
    SparseOperator() = default;
    explicit SparseOperator(Index dim) : dim_(dim) {}

    Index dim() const { return dim_; }
    std::size_t nnz() const { return map_.size(); }

    void add(Index r, Index c, std::complex<double> v);
    std::complex<double> coeff(Index r, Index c) const;

    bool is_hermitian(double tol) const;
    bool is_real(double tol) const;
    double max_abs() const;

    Eigen::MatrixXcd to_dense() const;

    // Validates real symmetry (within tol * max_abs) and packs the upper
    // triangle. Throws std::invalid_argument otherwise.
    SparseHermitian to_hermitian(double tol = 1e-12) const;

    const std::map<std::pair<Index, Index>, std::complex<double>>& raw() const {
        return map_;
    }

private:
    Index dim_ = 0;
    std::map<std::pair<Index, Index>, std::complex<double>> map_;
};

// Real unit-norm state in the tensor-product basis.
struct StateVector {
    Eigen::VectorXd amplitudes;

    StateVector() = default;
    explicit StateVector(Eigen::VectorXd amps);  // checks norm within 1e-12

    Index dim() const { return amplitudes.size(); }

    static StateVector basis_state(Index dim, Index index);
};

// Single-site Pauli operator embedded by identity tensor factors.
// site is 1-based; throws std::invalid_argument when out of range.
SparseOperator pauli_operator(PauliKind kind, int site, const SpinBasis& basis);

struct PauliFactor {
    PauliKind kind;
    int site;  // 1-based
};

struct PauliTerm {
    double coefficient = 0.0;
    std::vector<PauliFactor> factors;  // applied right-to-left, as written
};

// Sum of tensor-product Pauli strings. The result must be real-symmetric
// (validated); a non-Hermitian assembly throws std::invalid_argument.
SparseHermitian operator_product_sum(const std::vector<PauliTerm>& terms,
                                     const SpinBasis& basis);

// <psi|O|psi> for a real state.
double expectation(const StateVector& state, const SparseHermitian& op);

// <psi|O|psi> for a complex state; asserts the imaginary residue is below
// 1e-10 * scale and discards it.
double expectation(const Eigen::VectorXcd& state, const SparseHermitian& op);

}  // namespace qfdt::hilbert
