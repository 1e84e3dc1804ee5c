#include "qfdt/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qfdt::dynamics {

void TimeSeries::validate() const {
    if (times.size() != values.size()) {
        throw std::invalid_argument("TimeSeries: times/values length mismatch");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] <= times[i - 1]) {
            throw std::invalid_argument("TimeSeries: times must be strictly increasing");
        }
    }
}

void TimeSeries::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("TimeSeries::write_csv: cannot open " + path.string());
    out << "t,value\n";
    char buf[64];
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,", times[i]);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%.17g\n", values[i]);
        out << buf;
    }
}

std::vector<double> uniform_times(double t0, double t1, int n) {
    if (n < 2 || t1 <= t0) throw std::invalid_argument("uniform_times: bad grid request");
    std::vector<double> t(n);
    const double dt = (t1 - t0) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) t[i] = t0 + dt * i;
    return t;
}

namespace {

void check_obs_basis(const EigenSystem& eig, const ObservableMatrix& obs) {
    if (obs.matrix.dim() != eig.dim()) {
        throw std::invalid_argument("dynamics: observable/eigensystem dimension mismatch");
    }
    if (!obs.basis_tag.empty() && !eig.basis_tag.empty() && obs.basis_tag != eig.basis_tag) {
        throw std::invalid_argument("dynamics: observable basis '" + obs.basis_tag +
                                    "' does not match eigensystem basis '" + eig.basis_tag + "'");
    }
}

}  // namespace

std::vector<TimeSeries> evolve_expectation_multi(
    const EigenSystem& eig, const StateVector& psi0,
    std::span<const ObservableMatrix* const> observables, std::span<const double> times) {
    for (const auto* obs : observables) check_obs_basis(eig, *obs);
    if (psi0.dim() != eig.dim()) {
        throw std::invalid_argument("evolve_expectation: state dimension mismatch");
    }
    const Eigen::VectorXd cbar = eig.overlaps_with(psi0.amplitudes);
    const Eigen::Index n = eig.dim();

    std::vector<TimeSeries> out(observables.size());
    for (auto& series : out) {
        series.times.assign(times.begin(), times.end());
        series.values.resize(times.size());
    }

    // batched over time chunks so the basis transform runs as a dense product
    constexpr Eigen::Index kChunk = 256;
    Eigen::MatrixXd z_re(n, std::min<Eigen::Index>(kChunk, static_cast<Eigen::Index>(times.size())));
    Eigen::MatrixXd z_im(n, z_re.cols());

    for (std::size_t start = 0; start < times.size(); start += kChunk) {
        const Eigen::Index cols =
            static_cast<Eigen::Index>(std::min<std::size_t>(kChunk, times.size() - start));
        for (Eigen::Index k = 0; k < cols; ++k) {
            const double t = times[start + k];
            for (Eigen::Index mu = 0; mu < n; ++mu) {
                const double phase = eig.energies[mu] * t;
                z_re(mu, k) = cbar[mu] * std::cos(phase);
                z_im(mu, k) = -cbar[mu] * std::sin(phase);
            }
        }
        Eigen::MatrixXd y_re, y_im;
        if (eig.identity_vectors) {
            y_re = z_re.leftCols(cols);
            y_im = z_im.leftCols(cols);
        } else {
            y_re.noalias() = eig.vectors * z_re.leftCols(cols);
            y_im.noalias() = eig.vectors * z_im.leftCols(cols);
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            for (std::size_t o = 0; o < observables.size(); ++o) {
                const auto [val, imag_residue] =
                    observables[o]->matrix.complex_quadratic(y_re.col(k), y_im.col(k));
                const double scale = std::max(1.0, std::abs(val));
                if (std::abs(imag_residue) > 1e-9 * scale) {
                    throw std::runtime_error("evolve_expectation: imaginary residue above 1e-9");
                }
                out[o].values[start + k] = val;
            }
        }
    }
    return out;
}

TimeSeries evolve_expectation(const EigenSystem& eig, const StateVector& psi0,
                              const ObservableMatrix& obs, std::span<const double> times) {
    const ObservableMatrix* ptr = &obs;
    auto results = evolve_expectation_multi(eig, psi0, std::span(&ptr, 1), times);
    return std::move(results.front());
}

TimeSeries free_evolution(const EigenSystem& h0_eig, const StateVector& psi0,
                          const ObservableMatrix& obs, std::span<const double> times) {
    return evolve_expectation(h0_eig, psi0, obs, times);
}

TimeSeries analytic_free_evolution(double b_z, double b_x, std::span<const double> times) {
    if (b_z == 0.0 && b_x == 0.0) {
        throw std::invalid_argument("analytic_free_evolution: zero field");
    }
    TimeSeries out;
    out.times.assign(times.begin(), times.end());
    out.values.resize(times.size());
    if (b_x == 0.0) {
        std::fill(out.values.begin(), out.values.end(), 1.0);
        return out;
    }
    const double e = std::hypot(b_z, b_x);
    const double denom = (b_z + e) * (b_z + e) + b_x * b_x;
    const double a = ((b_z + e) * (b_z + e) - b_x * b_x) / denom;
    const double b = (b_z + e) * b_x / denom;
    for (std::size_t i = 0; i < times.size(); ++i) {
        out.values[i] = a * a + 4.0 * b * b * std::cos(2.0 * e * times[i]);
    }
    return out;
}

bool has_degenerate_gaps(const EigenSystem& eig, double rel_tol) {
    const Eigen::Index n = eig.dim();
    const double bandwidth = eig.energies[n - 1] - eig.energies[0];
    if (bandwidth <= 0.0) return true;
    double min_gap = bandwidth;
    for (Eigen::Index i = 1; i < n; ++i) {
        min_gap = std::min(min_gap, eig.energies[i] - eig.energies[i - 1]);
    }
    return min_gap <= rel_tol * bandwidth;
}

double time_average_diagonal(const EigenSystem& eig, const StateVector& psi0,
                             const ObservableMatrix& obs) {
    check_obs_basis(eig, obs);
    const Eigen::VectorXd cbar = eig.overlaps_with(psi0.amplitudes);
    const Eigen::VectorXd diag = eig.diagonal_matrix_elements(obs.matrix);
    return cbar.cwiseProduct(cbar).dot(diag);
}

double fluctuations_diagonal(const EigenSystem& eig, const StateVector& psi0,
                             const ObservableMatrix& obs) {
    return fluctuations_diagonal(eig, psi0, spectral::observable_to_eigenbasis(obs, eig));
}

double fluctuations_diagonal(const EigenSystem& eig, const StateVector& psi0,
                             const Eigen::MatrixXd& o_eigenbasis) {
    const Eigen::Index n = eig.dim();
    if (o_eigenbasis.rows() != n || o_eigenbasis.cols() != n) {
        throw std::invalid_argument("fluctuations_diagonal: dimension mismatch");
    }
    const Eigen::VectorXd cbar = eig.overlaps_with(psi0.amplitudes);
    const Eigen::VectorXd w = cbar.cwiseProduct(cbar);
    // sum_{mu != nu} w_mu w_nu O_mu,nu^2, column-wise to avoid a dense temporary
    double total = 0.0;
    for (Eigen::Index nu = 0; nu < n; ++nu) {
        const auto col = o_eigenbasis.col(nu);
        double acc = 0.0;
        for (Eigen::Index mu = 0; mu < n; ++mu) acc += w[mu] * col[mu] * col[mu];
        acc -= w[nu] * col[nu] * col[nu];
        total += w[nu] * acc;
    }
    return std::max(total, 0.0);
}

double fluctuations_windowed(const TimeSeries& series, std::pair<double, double> window,
                             double gamma_est) {
    series.validate();
    if (window.second <= window.first) {
        throw std::invalid_argument("fluctuations_windowed: empty window");
    }
    if (gamma_est > 0.0 && window.first < 5.0 / gamma_est) {
        throw std::invalid_argument("fluctuations_windowed: window starts before 5/Gamma");
    }
    double sum = 0.0, sum_sq = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.times[i];
        if (t < window.first || t > window.second) continue;
        sum += series.values[i];
        sum_sq += series.values[i] * series.values[i];
        ++count;
    }
    if (count < 100) {
        throw std::invalid_argument("fluctuations_windowed: fewer than 100 samples in window");
    }
    const double mean = sum / static_cast<double>(count);
    return std::max(sum_sq / static_cast<double>(count) - mean * mean, 0.0);
}

FluctuationReport fluctuation_report(const EigenSystem& eig, const StateVector& psi0,
                                     const Eigen::MatrixXd& o_eigenbasis,
                                     const TimeSeries& window_series,
                                     std::pair<double, double> window, double gamma_est,
                                     double microcanonical_average) {
    FluctuationReport report;
    report.window = window;
    report.microcanonical_average = microcanonical_average;
    report.delta_sq_measured = fluctuations_windowed(window_series, window, gamma_est);
    report.delta_sq_diag_ensemble = fluctuations_diagonal(eig, psi0, o_eigenbasis);
    const Eigen::VectorXd cbar = eig.overlaps_with(psi0.amplitudes);
    report.time_average = cbar.cwiseProduct(cbar).dot(o_eigenbasis.diagonal());
    return report;
}

}  // namespace qfdt::dynamics
