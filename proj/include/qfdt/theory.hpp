// theory.hpp — closed-form layer: the Lorentzian overlap family, chaotic
// wavefunction four-point correlators with orthogonality corrections,
// microcanonical averages of banded observables, the observable decay law,
// and the quantum-chaotic fluctuation-dissipation predictions.
//
// Everything here is a pure function of value inputs; these results serve
// both as predictions and as ground truth for the empirical estimators.

#pragma once

#include "qfdt/dynamics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>

namespace qfdt::theory {

using dynamics::TimeSeries;
using models::ObservableMatrix;

// Lorentzian overlap profile: Lambda^(n)(dE) = omega0 n Gamma / pi / (dE^2 + (n Gamma)^2).
struct LorentzianFamily {
    double omega0 = 0.0;  // mean level spacing (1/DOS)
    double gamma = 0.0;   // width of the n = 1 member

    LorentzianFamily(double omega0_value, double gamma_value);
};

double lambda_n(const LorentzianFamily& fam, int n, double delta_e);

// Band structure of |O_mu,nu|^2: a_0 is the microcanonical variance of the
// diagonal, a_n the microcanonical average of the squared band elements.
struct BandCoefficients {
    std::map<int, double> a;           // n -> a_n (>= 0)
    std::map<int, double> gap_energy;  // n -> E_n
    double center_energy = 0.0;
};

// ------------------------------------------------- four-point correlators
// Index arguments are energy labels on the uniform grid (E = label * omega0);
// Kronecker deltas act on the labels.

// <c_mu(a0) c_nu(b0) c_mu(a) c_nu(b)> for mu != nu: Gaussian contraction minus
// the two orthogonality corrections divided by Lambda^(2)(mu, nu).
double four_point_offdiag(const LorentzianFamily& fam, std::int64_t mu, std::int64_t nu,
                          std::int64_t a0, std::int64_t b0, std::int64_t a, std::int64_t b);

// <c_mu(a) c_mu(b) c_mu(ap) c_mu(bp)>: pure Gaussian contractions.
double four_point_diag(const LorentzianFamily& fam, std::int64_t mu, std::int64_t a,
                       std::int64_t b, std::int64_t ap, std::int64_t bp);

// ------------------------------------------------- microcanonical averages

// Lorentzian-weighted average of the band-n matrix elements around e_center,
// evaluated on the model's energy grid and normalized by the grid mass of the
// kernel. Throws std::invalid_argument for an undeclared band.
double microcanonical_average(const ObservableMatrix& obs, int band,
                              const LorentzianFamily& fam, double e_center,
                              const Eigen::VectorXd& basis_energies);

// All band coefficients of an observable around e_center.
BandCoefficients band_coefficients(const ObservableMatrix& obs, const LorentzianFamily& fam,
                                   double e_center, const Eigen::VectorXd& basis_energies);

// Closed form for sigma_z under crossed fields: a_0 = B_z^2/E^2 - avg^2,
// a_{+-1} = B_x^2 / (2 E^2) at gaps {0, +-2E}.
BandCoefficients crossed_field_coefficients(double b_z, double b_x, double time_average);

// ------------------------------------------------------------- decay law

// <O(t)> ~ <O(t)>_0 exp(-2 Gamma t) + avg (1 - exp(-2 Gamma t)).
TimeSeries predicted_decay(const TimeSeries& o_free, double o_avg, double gamma);

// ------------------------------------------------------------------- FDT

// delta^2 = (omega0 / 4 pi Gamma) a0; pass 1/D(E) for omega0 in model systems.
double qcfdt_simple(double a0, double omega0_or_inverse_dos, double gamma);

// Generalized form: delta^2 = sum_n a_n sum_{ab} w_a w_b Lambda^(4)(E_a - E_b + E_n).
// `weights` are |psi_alpha|^2 aligned with basis_energies; must sum to 1
// within 1e-8.
double qcfdt_general(const Eigen::VectorXd& weights, const Eigen::VectorXd& basis_energies,
                     const BandCoefficients& bands, const LorentzianFamily& fam);

// Three-peak closed form for sigma_z under crossed fields.
double qcfdt_three_peak(double b_z, double b_x, double gamma, double inverse_dos,
                        double time_average);

// ------------------------------------------------------ third-term bound

// Kernel of the inner double sum:
// omega0 (dE^2 Gamma + 12 Gamma^3) / (pi (dE^2 + 4 Gamma^2)^2) <= 3 omega0/(4 pi Gamma).
double third_term_inner_kernel(const LorentzianFamily& fam, double delta_e);

// Upper bound max|O| * N_O * 3 omega0 / (4 pi Gamma); psi0 weights are only
// checked for normalization.
double bound_third_term(const ObservableMatrix& obs, const Eigen::VectorXd& psi0_weights,
                        const LorentzianFamily& fam);

// Direct evaluation of |A(t)| by the quadruple sum on the uniform grid
// (E_alpha = (alpha+1) omega0). Meant for small instances.
std::vector<double> third_term_direct(const ObservableMatrix& obs,
                                      const Eigen::VectorXd& psi0_amplitudes,
                                      const LorentzianFamily& fam,
                                      std::span<const double> times);

}  // namespace qfdt::theory
