// models.hpp — the two model families and their synthetic observables and
// initial states: a GOE-perturbed diagonal Hamiltonian on a uniform level
// ladder, and a spin chain where a single system spin couples to a
// non-integrable bath chain.

#pragma once

#include "qfdt/hilbert.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qfdt::models {

using hilbert::Index;
using hilbert::SparseHermitian;
using hilbert::SpinBasis;
using hilbert::StateVector;

// ---------------------------------------------------------------- parameters

// Diagonal ladder H0 with E_alpha = alpha * omega0 (alpha = 1..N) plus a GOE
// perturbation of strength g. omega0 = 1/N is fixed by construction.
struct RmtParams {
    Index dimension = 0;
    double g = 0.0;
    std::uint64_t seed = 0;

    RmtParams(Index n, double g_coupling, std::uint64_t seed_value);

    double omega0() const { return 1.0 / static_cast<double>(dimension); }
    // Decay/width scale of the overlap Lorentzian: pi g^2 / (N omega0) = pi g^2.
    double gamma() const;
};

struct SpinChainParams {
    int n_spins = 0;      // total chain length (system site + bath)
    double b_z_s = 0.0;   // system fields
    double b_x_s = 0.0;
    double b_z_b = 0.0;   // bath fields
    double b_x_b = 0.0;
    double j_z = 0.0;     // bath nearest-neighbour couplings
    double j_x = 0.0;
    double j_z_sb = 0.0;  // system-bath couplings
    double j_x_sb = 0.0;
    int n_m = 5;          // bath site coupled to the system

    void validate() const;  // throws std::invalid_argument
};

// --------------------------------------------------------------- observables

// Sparse Hermitian operator with band-structure metadata: entries live on
// declared bands n, each with an energy offset E_n (E_n = n * omega0 on a
// uniform ladder; gaps of H_S for the spin chain).
struct ObservableMatrix {
    SparseHermitian matrix;
    std::string basis_tag;
    std::vector<int> band_offsets;           // sorted labels, e.g. {-1, 0, 1}
    std::map<int, double> band_gap_energies;  // n -> energy offset
    // Indices into matrix.entries() per band label; negative labels share the
    // stored upper-triangle entries of their positive partner.
    std::map<int, std::vector<std::size_t>> band_entries;

    // Checks that every stored entry lies on a declared band: the energy gap
    // E_col - E_row must match a declared E_n within tol.
    void validate_bands(const Eigen::VectorXd& basis_energies, double tol) const;
};

// ------------------------------------------------------------------- builders

// Symmetric matrix with i.i.d. Gaussian entries: off-diagonal variance g^2/N,
// diagonal variance 2g^2/N. Deterministic for a fixed seed.
Eigen::MatrixXd sample_goe(Index n, double g, std::uint64_t seed);

struct RmtModel {
    RmtParams params;
    Eigen::VectorXd h0_energies;  // alpha * omega0, alpha = 1..N
    Eigen::MatrixXd v;            // GOE perturbation

    Eigen::MatrixXd full_hamiltonian() const;  // diag(h0) + v
};

RmtModel build_rmt_model(const RmtParams& params);

struct SpinChainModel {
    SpinChainParams params;
    SpinBasis basis;
    SparseHermitian h_s;   // system term on site 1
    SparseHermitian h_b;   // bath fields + bonds on sites 2..N
    SparseHermitian h_sb;  // system-bath coupling (site 1 <-> site n_m)
    SparseHermitian h0;    // h_s + h_b
    SparseHermitian h;     // h0 + h_sb
};

SpinChainModel build_spin_chain(const SpinChainParams& params);

// Bath Hamiltonian re-indexed onto its own (n_spins - 1)-spin register,
// for diagonalizing the bath independently of the system spin.
SparseHermitian bath_hamiltonian(const SpinChainParams& params);

// sigma_z on site 1 in the computational basis (diagonal there).
ObservableMatrix sigma_z_system(const SpinChainModel& model);

// Parity observables on the RMT level index alpha = 1..N:
// O_odd has diagonal (1, 0, 1, ...), O_sym has (1, -1, 1, ...).
std::pair<ObservableMatrix, ObservableMatrix> make_parity_observables(Index n);

// -------------------------------------------------- non-interacting structure

// Product eigenbasis of H0 = H_S + H_B for the spin chain: every state is
// |phi_s>_S |phi_b>_B with energy E_s + E_b, sorted ascending in total energy.
// The caller supplies the bath eigensystem (energies ascending, orthonormal
// columns in the bath register basis).
struct NonInteractingSystem {
    Eigen::VectorXd energies;                    // sorted NI energies
    std::vector<std::pair<int, Index>> labels;   // alpha -> (s, bath index), s: 0 = "+", 1 = "-"
    std::vector<Index> pos_plus;                 // bath index -> alpha of (+, b)
    std::vector<Index> pos_minus;                // bath index -> alpha of (-, b)

    double e_split = 0.0;   // E = sqrt(b_z_s^2 + b_x_s^2)
    double psi_plus = 1.0;  // |up> = psi_plus |phi_+> + psi_minus |phi_->
    double psi_minus = 0.0;
    Eigen::Matrix2d sys_vectors;  // columns |phi_+>, |phi_-> in the (up, down) basis
    Eigen::Vector2d sys_energies; // (+E, -E)

    Eigen::VectorXd bath_energies;
    Eigen::MatrixXd bath_vectors;

    Index dim() const { return energies.size(); }

    // Amplitudes of a computational-basis vector in the NI basis.
    Eigen::VectorXd to_ni(const Eigen::VectorXd& psi_computational) const;

    // sigma_z(site 1) in the NI ordering, with bands {0, +2E, -2E}.
    ObservableMatrix sigma_z_observable() const;
};

NonInteractingSystem build_noninteracting(const SpinChainModel& model,
                                          const Eigen::VectorXd& bath_energies,
                                          const Eigen::MatrixXd& bath_vectors);

// --------------------------------------------------------------- initial states

// Standard basis vector for the RMT ladder; alpha0 is 1-based (E = alpha0 * omega0).
StateVector rmt_basis_state(const RmtModel& model, Index alpha0);

// |up>_S tensor bath eigenstate b (0-based column of bath_vectors), expressed
// in the full computational basis.
StateVector up_times_bath_eigenstate(const SpinChainModel& model,
                                     const Eigen::MatrixXd& bath_vectors, Index b);

// Product state from a pattern like "udd...d" (site 1 first). Must cover all sites.
StateVector product_state(const SpinBasis& basis, const std::string& pattern);

}  // namespace qfdt::models
