// spectral.hpp — dense exact diagonalization and everything read directly off
// the eigenpairs: overlaps, local density of states, strength functions, DOS
// estimates, and basis transforms of observables.

#pragma once

#include "qfdt/models.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace qfdt::spectral {

using hilbert::Index;
using hilbert::SparseHermitian;
using hilbert::StateVector;
using models::ObservableMatrix;

// Spectrum plus orthogonal eigenvector matrix. Column mu of `vectors` holds
// the amplitudes c_mu(alpha) in the basis named by basis_tag. Systems that
// are diagonal in their own basis (H0 ladders, the product NI basis) carry
// identity vectors implicitly to avoid storing a dense identity.
struct EigenSystem {
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd vectors;   // empty when identity_vectors
    std::string basis_tag;
    bool identity_vectors = false;

    Index dim() const { return energies.size(); }

    // c_mu = <psi_mu | psi> for all mu.
    Eigen::VectorXd overlaps_with(const Eigen::VectorXd& psi) const;

    // O_mu,mu for a sparse observable expressed in this system's basis.
    Eigen::VectorXd diagonal_matrix_elements(const SparseHermitian& op) const;

    static EigenSystem diagonal(Eigen::VectorXd energies_sorted, std::string tag);
};

// Energy-smoothed profile on a grid: LDOS, strength function, or DOS.
struct SmoothedProfile {
    enum class Kind { ldos, strength_function, dos };
    std::vector<double> energy_grid;  // strictly increasing
    std::vector<double> values;
    double kernel_width = 0.0;  // epsilon of the Lorentzian kernel
    Kind kind = Kind::ldos;

    double trapezoid_integral() const;
};

// Dense symmetric eigendecomposition (LAPACK dsyevd underneath).
// Sign convention: the largest-magnitude component of each eigenvector is
// made positive (first such index on ties), so results are reproducible.
EigenSystem diagonalize(const Eigen::MatrixXd& h_symmetric, std::string basis_tag);
EigenSystem diagonalize(const SparseHermitian& h, std::string basis_tag);

// Overlap matrix c_mu(alpha) = <ref_alpha | psi_mu> between an interacting
// eigensystem and a reference basis (identity reference when omitted).
Eigen::MatrixXd overlaps(const EigenSystem& interacting, const EigenSystem& reference);
Eigen::MatrixXd overlaps(const EigenSystem& interacting);

// Lorentzian kernel delta_eps(x) = (eps/pi) / (x^2 + eps^2).
double lorentzian_kernel(double x, double eps);

// F0(E) = sum_mu |<psi_mu|psi0>|^2 delta_eps(E_mu - E) on the supplied grid.
SmoothedProfile ldos_profile(const StateVector& state, const EigenSystem& eig,
                             double eps, std::span<const double> grid);

// S_O(omega) = mean over mu in the central window of
// sum_{nu != mu} |O_mu,nu|^2 delta_eps(E_mu - E_nu - omega).
// `central_fraction` selects the window by energy range (default: central 1/2).
SmoothedProfile strength_function(const Eigen::MatrixXd& o_eigenbasis,
                                  const EigenSystem& eig, double eps,
                                  std::span<const double> omega_grid,
                                  double central_fraction = 0.5);

// Level count in [e - w/2, e + w/2] divided by w. Windows clipped by the
// spectrum edges are rejected.
double dos_estimate(const EigenSystem& eig, double energy, double window_width);

// O_mu,nu = sum_ab c_mu(a) c_nu(b) O_ab. The observable must be expressed in
// the same basis as the eigensystem (basis tags are checked).
Eigen::MatrixXd observable_to_eigenbasis(const ObservableMatrix& obs,
                                         const EigenSystem& eig);

// Mean level spacing over the central fraction of the spectrum.
double mean_level_spacing(const EigenSystem& eig, double central_fraction = 0.5);

}  // namespace qfdt::spectral
