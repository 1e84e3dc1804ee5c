// dynamics.hpp — quench time evolution of observables, free (H0) evolution,
// diagonal-ensemble time averages, and time-averaged fluctuations.
//
// Evolution is evaluated in the eigenbasis (diagonal propagator), which is
// exact to machine precision; no time-steppers are involved.

#pragma once

#include "qfdt/spectral.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace qfdt::dynamics {

using hilbert::SparseHermitian;
using hilbert::StateVector;
using models::ObservableMatrix;
using spectral::EigenSystem;

struct TimeSeries {
    std::vector<double> times;   // strictly increasing, units of inverse energy
    std::vector<double> values;  // <O(t)>

    std::size_t size() const { return times.size(); }
    void validate() const;  // lengths match, times strictly increasing

    // CSV with header "t,value", 17 significant digits.
    void write_csv(const std::filesystem::path& path) const;
};

struct FluctuationReport {
    double delta_sq_measured = 0.0;       // windowed estimator
    double delta_sq_diag_ensemble = 0.0;  // sum over mu != nu
    double time_average = 0.0;            // diagonal ensemble
    double microcanonical_average = 0.0;
    std::pair<double, double> window{0.0, 0.0};
};

// Uniform grid helper: n samples on [t0, t1] (inclusive endpoints).
std::vector<double> uniform_times(double t0, double t1, int n);

// <O(t)> = sum_{mu nu} cbar_mu cbar_nu O_mu,nu exp(-i (E_mu - E_nu) t) for
// the real initial state psi0. The observable must be expressed in the same
// basis as the eigensystem. Values are asserted real within 1e-9.
TimeSeries evolve_expectation(const EigenSystem& eig, const StateVector& psi0,
                              const ObservableMatrix& obs, std::span<const double> times);

// Same evolution evaluated for several observables at once; the dense basis
// transform of the evolved state is shared across observables.
std::vector<TimeSeries> evolve_expectation_multi(
    const EigenSystem& eig, const StateVector& psi0,
    std::span<const ObservableMatrix* const> observables, std::span<const double> times);

// Same contract with the non-interacting eigensystem.
TimeSeries free_evolution(const EigenSystem& h0_eig, const StateVector& psi0,
                          const ObservableMatrix& obs, std::span<const double> times);

// Closed form for <sigma_z(t)>_0 from |up> under H_S = B_z sigma_z + B_x sigma_x:
// A^2 + 4 B^2 cos(2 E t) with E = sqrt(B_z^2 + B_x^2).
TimeSeries analytic_free_evolution(double b_z, double b_x, std::span<const double> times);

// True when some energy gap is below rel_tol * bandwidth.
bool has_degenerate_gaps(const EigenSystem& eig, double rel_tol = 1e-12);

// Diagonal-ensemble (infinite-time) average: sum_mu |cbar_mu|^2 O_mu,mu.
double time_average_diagonal(const EigenSystem& eig, const StateVector& psi0,
                             const ObservableMatrix& obs);

// Diagonal-ensemble fluctuations: sum_{mu != nu} |cbar_mu|^2 |cbar_nu|^2 |O_mu,nu|^2.
// The overload taking o_eigenbasis avoids recomputing the dense transform.
double fluctuations_diagonal(const EigenSystem& eig, const StateVector& psi0,
                             const ObservableMatrix& obs);
double fluctuations_diagonal(const EigenSystem& eig, const StateVector& psi0,
                             const Eigen::MatrixXd& o_eigenbasis);

// Finite-window realization of the infinite-time variance: mean of squares
// minus square of mean over samples with t in [window.first, window.second].
// Requires >= 100 samples in the window; when gamma_est > 0 the window must
// start at or after 5 / gamma_est.
double fluctuations_windowed(const TimeSeries& series, std::pair<double, double> window,
                             double gamma_est = 0.0);

// Bundles both fluctuation estimators with the equilibrium averages for one
// (state, observable) pair; o_eigenbasis is the observable transformed to the
// interacting eigenbasis.
FluctuationReport fluctuation_report(const EigenSystem& eig, const StateVector& psi0,
                                     const Eigen::MatrixXd& o_eigenbasis,
                                     const TimeSeries& window_series,
                                     std::pair<double, double> window, double gamma_est,
                                     double microcanonical_average);

}  // namespace qfdt::dynamics
