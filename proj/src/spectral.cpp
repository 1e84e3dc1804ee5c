#include "qfdt/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qfdt::spectral {

namespace {

// One-time sanity check of the dsyevd path (see blas_guard.cpp): a broken
// BLAS kernel yields correct eigenvalues with garbage eigenvectors, so verify
// the residual of a moderate-size solve once per process.
void verify_eigensolver_once() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        const int n = 256;
        Eigen::MatrixXd h(n, n);
        std::uint64_t state = 0x243f6a8885a308d3ull;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) {
                state = state * 6364136223846793005ull + 1442695040888963407ull;
                const double v = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
                h(i, j) = v;
                h(j, i) = v;
            }
        }
        Eigen::MatrixXd vec = h;
        Eigen::VectorXd w(n);
        const int info =
            LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, vec.data(), n, w.data());
        const double residual =
            (h * vec - vec * w.asDiagonal()).cwiseAbs().maxCoeff();
        if (info != 0 || residual > 1e-10) {
            throw std::runtime_error(
                "eigensolver self-check failed: the linked BLAS produces wrong results "
                "on this machine (try OPENBLAS_CORETYPE=SKYLAKEX or HASWELL)");
        }
    });
}

}  // namespace

Eigen::VectorXd EigenSystem::overlaps_with(const Eigen::VectorXd& psi) const {
    if (psi.size() != dim()) {
        throw std::invalid_argument("EigenSystem::overlaps_with: dimension mismatch");
    }
    if (identity_vectors) return psi;
    return vectors.transpose() * psi;
}

Eigen::VectorXd EigenSystem::diagonal_matrix_elements(const SparseHermitian& op) const {
    if (op.dim() != dim()) {
        throw std::invalid_argument("EigenSystem::diagonal_matrix_elements: dimension mismatch");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    if (identity_vectors) {
        for (const auto& e : op.entries()) {
            if (e.row == e.col) out[e.row] = e.value;
        }
        return out;
    }
    // O_mumu = sum over entries o_ab * c_mu(a) c_mu(b) (+ symmetric partner)
    for (const auto& e : op.entries()) {
        const auto row = vectors.row(e.row);
        if (e.row == e.col) {
            out += e.value * row.cwiseProduct(row).transpose();
        } else {
            out += 2.0 * e.value * row.cwiseProduct(vectors.row(e.col)).transpose();
        }
    }
    return out;
}

EigenSystem EigenSystem::diagonal(Eigen::VectorXd energies_sorted, std::string tag) {
    EigenSystem sys;
    sys.energies = std::move(energies_sorted);
    sys.basis_tag = std::move(tag);
    sys.identity_vectors = true;
    for (Index i = 1; i < sys.energies.size(); ++i) {
        if (sys.energies[i] < sys.energies[i - 1]) {
            throw std::invalid_argument("EigenSystem::diagonal: energies must be ascending");
        }
    }
    return sys;
}

EigenSystem diagonalize(const Eigen::MatrixXd& h_symmetric, std::string basis_tag) {
    const Index n = h_symmetric.rows();
    if (n < 2 || h_symmetric.cols() != n) {
        throw std::invalid_argument("diagonalize: matrix must be square with dim >= 2");
    }
    verify_eigensolver_once();
    EigenSystem sys;
    sys.basis_tag = std::move(basis_tag);
    sys.energies.resize(n);
    sys.vectors = h_symmetric;
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<int>(n),
                                    sys.vectors.data(), static_cast<int>(n),
                                    sys.energies.data());
    if (info != 0) {
        std::ostringstream msg;
        msg << "diagonalize: dsyevd failed (info=" << info << ", dim=" << n
            << ", max|H|=" << h_symmetric.cwiseAbs().maxCoeff() << ")";
        throw std::runtime_error(msg.str());
    }
    // sign convention: largest-magnitude component positive (first on ties)
    for (Index mu = 0; mu < n; ++mu) {
        auto col = sys.vectors.col(mu);
        Index imax = 0;
        double vmax = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double a = std::abs(col[i]);
            if (a > vmax) {
                vmax = a;
                imax = i;
            }
        }
        if (col[imax] < 0.0) col = -col;
    }
    return sys;
}

EigenSystem diagonalize(const SparseHermitian& h, std::string basis_tag) {
    return diagonalize(h.to_dense(), std::move(basis_tag));
}

Eigen::MatrixXd overlaps(const EigenSystem& interacting, const EigenSystem& reference) {
    if (interacting.dim() != reference.dim()) {
        throw std::invalid_argument("overlaps: dimension mismatch");
    }
    if (reference.identity_vectors) return overlaps(interacting);
    if (interacting.identity_vectors) return reference.vectors.transpose();
    return reference.vectors.transpose() * interacting.vectors;
}

Eigen::MatrixXd overlaps(const EigenSystem& interacting) {
    if (interacting.identity_vectors) {
        return Eigen::MatrixXd::Identity(interacting.dim(), interacting.dim());
    }
    return interacting.vectors;
}

double lorentzian_kernel(double x, double eps) {
    return (eps / std::numbers::pi) / (x * x + eps * eps);
}

double SmoothedProfile::trapezoid_integral() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < energy_grid.size(); ++i) {
        acc += 0.5 * (values[i] + values[i - 1]) * (energy_grid[i] - energy_grid[i - 1]);
    }
    return acc;
}

namespace {

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("profile: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) {
            throw std::invalid_argument("profile: grid must be strictly increasing");
        }
    }
}

}  // namespace

SmoothedProfile ldos_profile(const StateVector& state, const EigenSystem& eig,
                             double eps, std::span<const double> grid) {
    if (eps <= 0.0) throw std::invalid_argument("ldos_profile: eps must be > 0");
    check_grid(grid);
    const Eigen::VectorXd c = eig.overlaps_with(state.amplitudes);
    SmoothedProfile p;
    p.energy_grid.assign(grid.begin(), grid.end());
    p.values.assign(grid.size(), 0.0);
    p.kernel_width = eps;
    p.kind = SmoothedProfile::Kind::ldos;
    for (Index mu = 0; mu < eig.dim(); ++mu) {
        const double w = c[mu] * c[mu];
        if (w < 1e-16) continue;
        for (std::size_t k = 0; k < p.energy_grid.size(); ++k) {
            p.values[k] += w * lorentzian_kernel(eig.energies[mu] - p.energy_grid[k], eps);
        }
    }
    return p;
}

SmoothedProfile strength_function(const Eigen::MatrixXd& o_eigenbasis,
                                  const EigenSystem& eig, double eps,
                                  std::span<const double> omega_grid,
                                  double central_fraction) {
    if (eps <= 0.0) throw std::invalid_argument("strength_function: eps must be > 0");
    check_grid(omega_grid);
    const Index n = eig.dim();
    if (o_eigenbasis.rows() != n || o_eigenbasis.cols() != n) {
        throw std::invalid_argument("strength_function: dimension mismatch");
    }
    const double e_min = eig.energies[0];
    const double e_max = eig.energies[n - 1];
    const double margin = 0.5 * (1.0 - central_fraction) * (e_max - e_min);
    const double lo = e_min + margin;
    const double hi = e_max - margin;

    SmoothedProfile p;
    p.energy_grid.assign(omega_grid.begin(), omega_grid.end());
    p.values.assign(omega_grid.size(), 0.0);
    p.kernel_width = eps;
    p.kind = SmoothedProfile::Kind::strength_function;

    // accumulate |O_mu,nu|^2 into fine gap bins, then convolve with the kernel;
    // the bin width is small against eps so the smoothing is unaffected
    const double grid_step =
        p.energy_grid.size() > 1 ? p.energy_grid[1] - p.energy_grid[0] : eps;
    const double bin_width = std::min(eps / 8.0, grid_step / 2.0);
    const double gap_lo = p.energy_grid.front() - 40.0 * eps;
    const double gap_hi = p.energy_grid.back() + 40.0 * eps;
    const std::size_t n_bins =
        static_cast<std::size_t>((gap_hi - gap_lo) / bin_width) + 2;
    std::vector<double> bins(n_bins, 0.0);

    long n_window = 0;
    for (Index mu = 0; mu < n; ++mu) {
        if (eig.energies[mu] < lo || eig.energies[mu] > hi) continue;
        ++n_window;
        for (Index nu = 0; nu < n; ++nu) {
            if (nu == mu) continue;
            const double w = o_eigenbasis(mu, nu) * o_eigenbasis(mu, nu);
            if (w < 1e-18) continue;
            const double gap = eig.energies[mu] - eig.energies[nu];
            if (gap < gap_lo || gap >= gap_hi) continue;
            bins[static_cast<std::size_t>((gap - gap_lo) / bin_width)] += w;
        }
    }
    if (n_window == 0) throw std::invalid_argument("strength_function: central window is empty");

    for (std::size_t b = 0; b < n_bins; ++b) {
        if (bins[b] == 0.0) continue;
        const double gap = gap_lo + (b + 0.5) * bin_width;
        for (std::size_t k = 0; k < p.energy_grid.size(); ++k) {
            p.values[k] += bins[b] * lorentzian_kernel(gap - p.energy_grid[k], eps);
        }
    }
    for (auto& v : p.values) v /= static_cast<double>(n_window);
    return p;
}

double dos_estimate(const EigenSystem& eig, double energy, double window_width) {
    if (window_width <= 0.0) throw std::invalid_argument("dos_estimate: window must be > 0");
    const double lo = energy - 0.5 * window_width;
    const double hi = energy + 0.5 * window_width;
    if (lo < eig.energies[0] || hi > eig.energies[eig.dim() - 1]) {
        throw std::invalid_argument("dos_estimate: window extends beyond spectrum");
    }
    const auto* begin = eig.energies.data();
    const auto* end = begin + eig.dim();
    const auto count = std::upper_bound(begin, end, hi) - std::lower_bound(begin, end, lo);
    return static_cast<double>(count) / window_width;
}

Eigen::MatrixXd observable_to_eigenbasis(const ObservableMatrix& obs,
                                         const EigenSystem& eig) {
    if (obs.matrix.dim() != eig.dim()) {
        throw std::invalid_argument("observable_to_eigenbasis: dimension mismatch");
    }
    if (!obs.basis_tag.empty() && !eig.basis_tag.empty() && obs.basis_tag != eig.basis_tag) {
        throw std::invalid_argument("observable_to_eigenbasis: basis tags differ (" +
                                    obs.basis_tag + " vs " + eig.basis_tag + ")");
    }
    const Index n = eig.dim();
    if (eig.identity_vectors) return obs.matrix.to_dense();
    // (O V) via sparse entries, then V^T (O V) as one dense product
    Eigen::MatrixXd ov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : obs.matrix.entries()) {
        ov.row(e.row) += e.value * eig.vectors.row(e.col);
        if (e.row != e.col) ov.row(e.col) += e.value * eig.vectors.row(e.row);
    }
    return eig.vectors.transpose() * ov;
}

double mean_level_spacing(const EigenSystem& eig, double central_fraction) {
    const Index n = eig.dim();
    const double e_min = eig.energies[0];
    const double e_max = eig.energies[n - 1];
    const double margin = 0.5 * (1.0 - central_fraction) * (e_max - e_min);
    const double lo = e_min + margin;
    const double hi = e_max - margin;
    const auto* begin = eig.energies.data();
    const auto* end = begin + n;
    const auto* plo = std::lower_bound(begin, end, lo);
    const auto* phi = std::upper_bound(begin, end, hi);
    const long count = phi - plo;
    if (count < 2) throw std::invalid_argument("mean_level_spacing: window too small");
    return (*(phi - 1) - *plo) / static_cast<double>(count - 1);
}

}  // namespace qfdt::spectral
