#include "qfdt/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qfdt::theory {

namespace {
constexpr double kPi = std::numbers::pi;
}

LorentzianFamily::LorentzianFamily(double omega0_value, double gamma_value)
    : omega0(omega0_value), gamma(gamma_value) {
    if (omega0 <= 0.0) throw std::invalid_argument("LorentzianFamily: omega0 must be > 0");
    if (gamma <= 0.0) throw std::invalid_argument("LorentzianFamily: Gamma must be > 0");
}

double lambda_n(const LorentzianFamily& fam, int n, double delta_e) {
    if (n < 1) throw std::invalid_argument("lambda_n: n must be >= 1");
    const double ng = n * fam.gamma;
    return fam.omega0 * ng / kPi / (delta_e * delta_e + ng * ng);
}

namespace {

inline double lam(const LorentzianFamily& fam, int n, std::int64_t i, std::int64_t j) {
    return lambda_n(fam, n, static_cast<double>(i - j) * fam.omega0);
}

}  // namespace

double four_point_offdiag(const LorentzianFamily& fam, std::int64_t mu, std::int64_t nu,
                          std::int64_t a0, std::int64_t b0, std::int64_t a, std::int64_t b) {
    if (mu == nu) {
        throw std::invalid_argument("four_point_offdiag: mu == nu (use four_point_diag)");
    }
    double out = 0.0;
    if (a0 == a && b0 == b) out += lam(fam, 1, mu, a0) * lam(fam, 1, nu, b0);
    const double l2 = lam(fam, 2, mu, nu);
    if (a0 == b0 && a == b) {
        out -= lam(fam, 1, mu, a0) * lam(fam, 1, nu, a0) * lam(fam, 1, mu, a) *
               lam(fam, 1, nu, a) / l2;
    }
    if (a0 == b && b0 == a) {
        out -= lam(fam, 1, mu, a0) * lam(fam, 1, nu, a0) * lam(fam, 1, mu, b0) *
               lam(fam, 1, nu, b0) / l2;
    }
    return out;
}

double four_point_diag(const LorentzianFamily& fam, std::int64_t mu, std::int64_t a,
                       std::int64_t b, std::int64_t ap, std::int64_t bp) {
    double out = 0.0;
    if (a == b && ap == bp) out += lam(fam, 1, mu, a) * lam(fam, 1, mu, ap);
    if (a == ap && b == bp) out += lam(fam, 1, mu, a) * lam(fam, 1, mu, b);
    if (a == bp && ap == b) out += lam(fam, 1, mu, a) * lam(fam, 1, mu, b);
    return out;
}

namespace {

// Grid mass of the kernel around e_center; the continuum value is 1.
double kernel_grid_mass(const LorentzianFamily& fam, double e_center,
                        const Eigen::VectorXd& energies) {
    double mass = 0.0;
    for (Eigen::Index i = 0; i < energies.size(); ++i) {
        mass += lambda_n(fam, 1, e_center - energies[i]);
    }
    return mass;
}

// alpha-side energy of a stored upper-triangle entry on band n
inline double entry_alpha_energy(const hilbert::Entry& e, int band,
                                 const Eigen::VectorXd& energies) {
    return band >= 0 ? energies[e.row] : energies[e.col];
}

}  // namespace

double microcanonical_average(const ObservableMatrix& obs, int band,
                              const LorentzianFamily& fam, double e_center,
                              const Eigen::VectorXd& basis_energies) {
    const auto it = obs.band_entries.find(band);
    if (it == obs.band_entries.end()) {
        throw std::invalid_argument("microcanonical_average: band not declared");
    }
    if (basis_energies.size() != obs.matrix.dim()) {
        throw std::invalid_argument("microcanonical_average: energy grid mismatch");
    }
    const auto entries = obs.matrix.entries();
    double num = 0.0;
    for (const std::size_t k : it->second) {
        const auto& e = entries[k];
        num += lambda_n(fam, 1, e_center - entry_alpha_energy(e, band, basis_energies)) * e.value;
    }
    return num / kernel_grid_mass(fam, e_center, basis_energies);
}

BandCoefficients band_coefficients(const ObservableMatrix& obs, const LorentzianFamily& fam,
                                   double e_center, const Eigen::VectorXd& basis_energies) {
    if (basis_energies.size() != obs.matrix.dim()) {
        throw std::invalid_argument("band_coefficients: energy grid mismatch");
    }
    BandCoefficients bc;
    bc.center_energy = e_center;
    bc.gap_energy = obs.band_gap_energies;
    const auto entries = obs.matrix.entries();
    for (const int n : obs.band_offsets) {
        const auto& idx = obs.band_entries.at(n);
        const double e_n = obs.band_gap_energies.at(n);
        // band average is centred midway between the coupled levels
        const double center = e_center - 0.5 * e_n;
        const double mass = kernel_grid_mass(fam, center, basis_energies);
        double avg_sq = 0.0;
        double avg = 0.0;
        for (const std::size_t k : idx) {
            const auto& e = entries[k];
            const double w = lambda_n(fam, 1, center - entry_alpha_energy(e, n, basis_energies));
            avg_sq += w * e.value * e.value;
            avg += w * e.value;
        }
        avg_sq /= mass;
        avg /= mass;
        bc.a[n] = (n == 0) ? std::max(avg_sq - avg * avg, 0.0) : avg_sq;
    }
    return bc;
}

BandCoefficients crossed_field_coefficients(double b_z, double b_x, double time_average) {
    const double e = std::hypot(b_z, b_x);
    if (e == 0.0) throw std::invalid_argument("crossed_field_coefficients: zero field");
    BandCoefficients bc;
    bc.center_energy = 0.0;
    bc.a[0] = std::max(b_z * b_z / (e * e) - time_average * time_average, 0.0);
    bc.gap_energy[0] = 0.0;
    if (b_x != 0.0) {
        const double a1 = 0.5 * b_x * b_x / (e * e);
        bc.a[1] = a1;
        bc.a[-1] = a1;
        bc.gap_energy[1] = 2.0 * e;
        bc.gap_energy[-1] = -2.0 * e;
    }
    return bc;
}

TimeSeries predicted_decay(const TimeSeries& o_free, double o_avg, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("predicted_decay: Gamma must be > 0");
    o_free.validate();
    TimeSeries out;
    out.times = o_free.times;
    out.values.resize(o_free.size());
    for (std::size_t i = 0; i < o_free.size(); ++i) {
        const double decay = std::exp(-2.0 * gamma * o_free.times[i]);
        out.values[i] = o_free.values[i] * decay + o_avg * (1.0 - decay);
    }
    return out;
}

double qcfdt_simple(double a0, double omega0_or_inverse_dos, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("qcfdt_simple: Gamma must be > 0");
    return omega0_or_inverse_dos / (4.0 * kPi * gamma) * a0;
}

double qcfdt_general(const Eigen::VectorXd& weights, const Eigen::VectorXd& basis_energies,
                     const BandCoefficients& bands, const LorentzianFamily& fam) {
    if (weights.size() != basis_energies.size()) {
        throw std::invalid_argument("qcfdt_general: weights/energies size mismatch");
    }
    if (std::abs(weights.sum() - 1.0) > 1e-8) {
        throw std::invalid_argument("qcfdt_general: weights are not normalized");
    }
    // trim negligible weights before the double sum
    std::vector<Eigen::Index> support;
    support.reserve(weights.size());
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (weights[i] > 1e-14) support.push_back(i);
    }
    double total = 0.0;
    for (const auto& [n, a_n] : bands.a) {
        if (a_n == 0.0) continue;
        const double e_n = bands.gap_energy.at(n);
        double acc = 0.0;
        for (const Eigen::Index ia : support) {
            const double ea = basis_energies[ia];
            const double wa = weights[ia];
            for (const Eigen::Index ib : support) {
                acc += wa * weights[ib] * lambda_n(fam, 4, ea - basis_energies[ib] + e_n);
            }
        }
        total += a_n * acc;
    }
    return total;
}

double qcfdt_three_peak(double b_z, double b_x, double gamma, double inverse_dos,
                        double time_average) {
    if (b_z == 0.0 && b_x == 0.0) {
        throw std::invalid_argument("qcfdt_three_peak: zero fields");
    }
    if (gamma <= 0.0) throw std::invalid_argument("qcfdt_three_peak: Gamma must be > 0");
    const double e = std::hypot(b_z, b_x);
    const double denom = (b_z + e) * (b_z + e) + b_x * b_x;
    double psi_p, psi_m;
    if (denom == 0.0) {  // b_x = 0, b_z < 0
        psi_p = 0.0;
        psi_m = 1.0;
    } else {
        psi_p = (b_z + e) / std::sqrt(denom);
        psi_m = b_x / std::sqrt(denom);
    }
    const double a0 = std::max(b_z * b_z / (e * e) - time_average * time_average, 0.0);
    const double a1 = 0.5 * b_x * b_x / (e * e);

    const double p4 = psi_p * psi_p * psi_p * psi_p + psi_m * psi_m * psi_m * psi_m;
    const double cross = 2.0 * psi_p * psi_p * psi_m * psi_m;
    const double g4 = 4.0 * gamma;
    const double peak = 1.0 / (4.0 * kPi * gamma);                      // Lambda^(4)(0)/omega0
    const double off_2e = (g4 / kPi) / (4.0 * e * e + g4 * g4);         // Lambda^(4)(2E)/omega0
    const double off_4e = (g4 / kPi) / (16.0 * e * e + g4 * g4);        // Lambda^(4)(4E)/omega0

    return inverse_dos * (p4 * (a0 * peak + 2.0 * a1 * off_2e) +
                          cross * (a0 * off_2e + a1 * peak + a1 * off_4e));
}

double third_term_inner_kernel(const LorentzianFamily& fam, double delta_e) {
    const double g = fam.gamma;
    const double d2 = delta_e * delta_e;
    const double denom = d2 + 4.0 * g * g;
    return fam.omega0 * (d2 * g + 12.0 * g * g * g) / (kPi * denom * denom);
}

double bound_third_term(const ObservableMatrix& obs, const Eigen::VectorXd& psi0_weights,
                        const LorentzianFamily& fam) {
    if (std::abs(psi0_weights.sum() - 1.0) > 1e-8) {
        throw std::invalid_argument("bound_third_term: weights are not normalized");
    }
    const double n_o = static_cast<double>(obs.band_offsets.size());
    return obs.matrix.max_abs() * n_o * 3.0 * fam.omega0 / (4.0 * kPi * fam.gamma);
}

std::vector<double> third_term_direct(const ObservableMatrix& obs,
                                      const Eigen::VectorXd& psi0_amplitudes,
                                      const LorentzianFamily& fam,
                                      std::span<const double> times) {
    const Eigen::Index n = obs.matrix.dim();
    if (psi0_amplitudes.size() != n) {
        throw std::invalid_argument("third_term_direct: dimension mismatch");
    }
    // pairs (a0, b0) with psi_a0 psi_b0 O_a0,b0 != 0
    struct Pair {
        Eigen::Index a0, b0;
        double weight;
    };
    std::vector<Pair> pairs;
    for (const auto& e : obs.matrix.entries()) {
        const double w = psi0_amplitudes[e.row] * psi0_amplitudes[e.col] * e.value;
        if (w == 0.0) continue;
        pairs.push_back({e.row, e.col, w});
        if (e.row != e.col) pairs.push_back({e.col, e.row, w});
    }

    std::vector<double> out(times.size(), 0.0);
    Eigen::MatrixXd kernel(n, n);
    for (const auto& p : pairs) {
        for (Eigen::Index mu = 0; mu < n; ++mu) {
            const double lma = lam(fam, 1, mu, p.a0);
            const double lmb = lam(fam, 1, mu, p.b0);
            for (Eigen::Index nu = 0; nu < n; ++nu) {
                if (nu == mu) {
                    kernel(mu, nu) = 0.0;
                    continue;
                }
                kernel(mu, nu) = lma * lam(fam, 1, nu, p.a0) * lmb * lam(fam, 1, nu, p.b0) /
                                 lam(fam, 2, mu, nu);
            }
        }
        for (std::size_t k = 0; k < times.size(); ++k) {
            // imaginary parts cancel under mu <-> nu; the cosine part remains
            double acc = 0.0;
            for (Eigen::Index mu = 0; mu < n; ++mu) {
                for (Eigen::Index nu = 0; nu < n; ++nu) {
                    if (nu == mu) continue;
                    acc += kernel(mu, nu) *
                           std::cos(static_cast<double>(mu - nu) * fam.omega0 * times[k]);
                }
            }
            out[k] += p.weight * acc;
        }
    }
    for (auto& v : out) v = std::abs(v);
    return out;
}

}  // namespace qfdt::theory
