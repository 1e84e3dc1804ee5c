// Ensemble-level checks: Lorentzian overlap statistics, self-averaging,
// fluctuation estimators, and the qualitative decay shape. These are slower
// than the unit suite and run as their own ctest entry.

#include "qfdt/dynamics.hpp"
#include "qfdt/experiments.hpp"
#include "qfdt/fitting.hpp"
#include "qfdt/rng.hpp"
#include "qfdt/theory.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace qfdt;

namespace {

spectral::SmoothedProfile profile_from(const std::vector<double>& grid,
                                       const std::vector<double>& values, double eps) {
    spectral::SmoothedProfile p;
    p.energy_grid = grid;
    p.values = values;
    p.kernel_width = eps;
    return p;
}

}  // namespace

TEST_CASE("overlap statistics of a GOE ensemble at N = 1000") {
    const hilbert::Index n = 1000;
    const double g = 0.1;
    const int realizations = 50;
    const double omega0 = 1.0 / static_cast<double>(n);
    const double gamma_expected = std::numbers::pi * g * g;

    const int mu_half_window = 25;   // bulk eigenstates around the band center
    const int offset_window = 150;   // overlap profile range in level units
    std::vector<double> overlap_sq(2 * offset_window + 1, 0.0);
    long overlap_counts = 0;

    // kernel-smoothed LDOS of the central basis state, ensemble averaged
    const hilbert::Index alpha0 = n / 2 + 1;
    const double eps = 5.0 * omega0;
    std::vector<double> ldos_grid;
    for (double e = 0.5 - 0.3; e <= 0.5 + 0.3; e += eps / 3.0) ldos_grid.push_back(e);
    std::vector<double> ldos_acc(ldos_grid.size(), 0.0);

    // |O_mu,nu|^2 of O_sym binned by the index offset
    const int band_window = 120;
    std::vector<double> band_acc(2 * band_window + 1, 0.0);
    long band_counts = 0;

    double spacing_first = 0.0;
    for (int r = 0; r < realizations; ++r) {
        const models::RmtParams params(n, g, rng::derive_stream(2024, r));
        const auto model = models::build_rmt_model(params);
        const auto eig = spectral::diagonalize(model.full_hamiltonian(), "rmt-alpha");
        if (r == 0) spacing_first = spectral::mean_level_spacing(eig);

        for (hilbert::Index mu = n / 2 - mu_half_window; mu < n / 2 + mu_half_window; ++mu) {
            for (int k = -offset_window; k <= offset_window; ++k) {
                const double c = eig.vectors(mu + k, mu);
                overlap_sq[k + offset_window] += c * c;
            }
            ++overlap_counts;
        }

        const auto psi0 = models::rmt_basis_state(model, alpha0);
        const auto ldos = spectral::ldos_profile(psi0, eig, eps, ldos_grid);
        for (std::size_t i = 0; i < ldos_acc.size(); ++i) ldos_acc[i] += ldos.values[i];

        const auto [o_odd, o_sym] = models::make_parity_observables(n);
        const Eigen::MatrixXd o_eig = spectral::observable_to_eigenbasis(o_sym, eig);
        for (hilbert::Index mu = n / 2 - mu_half_window; mu < n / 2 + mu_half_window; ++mu) {
            for (int k = -band_window; k <= band_window; ++k) {
                if (k == 0) continue;
                const double v = o_eig(mu, mu + k);
                band_acc[k + band_window] += v * v;
            }
            ++band_counts;
        }
    }

    // Bulk mean level spacing: level repulsion dilates the ladder at second
    // order in g, about 4% at g = 0.1, so the 2% statement is checked in the
    // perturbative regime and the measured dilation is bounded at g = 0.1.
    CHECK(std::abs(spacing_first - omega0) / omega0 < 0.06);
    {
        const models::RmtParams weak(n, 0.05, rng::derive_stream(2024, 0));
        const auto weak_eig =
            spectral::diagonalize(models::build_rmt_model(weak).full_hamiltonian(), "rmt-alpha");
        CHECK(std::abs(spectral::mean_level_spacing(weak_eig) - omega0) / omega0 < 0.02);
    }

    // ensemble-averaged |c_mu(alpha)|^2 is a lorentzian of width Gamma
    std::vector<double> offsets_energy;
    std::vector<double> overlap_mean;
    for (int k = -offset_window; k <= offset_window; ++k) {
        offsets_energy.push_back(k * omega0);
        overlap_mean.push_back(overlap_sq[k + offset_window] /
                               static_cast<double>(overlap_counts));
    }
    const auto overlap_fit =
        fitting::fit_lorentzian(profile_from(offsets_energy, overlap_mean, 0.0));
    CHECK(overlap_fit.converged);
    CHECK(std::abs(overlap_fit.parameters.at("width") - gamma_expected) / gamma_expected < 0.15);

    // ensemble-averaged LDOS fits to width Gamma + eps
    for (auto& v : ldos_acc) v /= realizations;
    const auto ldos_fit = fitting::fit_lorentzian(profile_from(ldos_grid, ldos_acc, eps));
    const double gamma_ldos =
        fitting::deconvolved_gamma(ldos_fit, eps, fitting::WidthConvention::ldos);
    CHECK(std::abs(gamma_ldos - gamma_expected) / gamma_expected < 0.15);

    // |O_mu,nu|^2 matches a0 Lambda^(2) near the peak (a0 = 1 for O_sym)
    const theory::LorentzianFamily fam(omega0, gamma_expected);
    const int peak_range = static_cast<int>(gamma_expected / omega0);  // ~31 levels
    for (int k = 1; k <= peak_range; ++k) {
        const double expected = theory::lambda_n(fam, 2, k * omega0);
        const double measured = band_acc[k + band_window] / static_cast<double>(band_counts);
        CHECK(std::abs(measured - expected) / expected < 0.20);
    }
}

TEST_CASE("self-averaging and fluctuation estimators at N = 2000") {
    const hilbert::Index n = 2000;
    const double g = 0.1;
    const double omega0 = 1.0 / static_cast<double>(n);
    const double gamma_expected = std::numbers::pi * g * g;
    const int realizations = 50;
    const hilbert::Index alpha0 = n / 2 + 1;
    const double eps = 5.0 * omega0;

    // Self-averaging trades the ensemble average for a spectral average:
    // within one realization the LDOS is accumulated over central ladder
    // states on a common offset grid.
    std::vector<double> offset_grid;
    for (double e = -0.25; e <= 0.25; e += eps / 3.0) offset_grid.push_back(e);
    auto spectral_averaged_ldos = [&](const models::RmtModel& model,
                                      const spectral::EigenSystem& eig) {
        std::vector<double> values(offset_grid.size(), 0.0);
        const int half_states = 10;
        for (hilbert::Index a = alpha0 - half_states; a <= alpha0 + half_states; ++a) {
            std::vector<double> grid(offset_grid);
            for (auto& e : grid) e += model.h0_energies[a - 1];
            const auto ldos =
                spectral::ldos_profile(models::rmt_basis_state(model, a), eig, eps, grid);
            for (std::size_t i = 0; i < values.size(); ++i) values[i] += ldos.values[i];
        }
        for (auto& v : values) v /= (2.0 * half_states + 1.0);
        return values;
    };

    std::vector<double> acc(offset_grid.size(), 0.0);
    fitting::FitResult single_fit;

    const auto [o_odd, o_sym] = models::make_parity_observables(n);
    std::vector<double> delta2_diag_samples;
    spectral::EigenSystem first_eig;

    for (int r = 0; r < realizations; ++r) {
        const models::RmtParams params(n, g, rng::derive_stream(7777, r));
        const auto model = models::build_rmt_model(params);
        const auto eig = spectral::diagonalize(model.full_hamiltonian(), "rmt-alpha");
        const auto ldos = spectral_averaged_ldos(model, eig);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += ldos[i];
        if (r == 0) {
            single_fit = fitting::fit_lorentzian(profile_from(offset_grid, ldos, eps));
            first_eig = eig;
        }
        if (r < 20) {
            const auto psi0 = models::rmt_basis_state(model, alpha0);
            const Eigen::MatrixXd o_eig = spectral::observable_to_eigenbasis(o_sym, eig);
            delta2_diag_samples.push_back(dynamics::fluctuations_diagonal(eig, psi0, o_eig));
        }
    }

    // single realization vs 50-realization ensemble fit: parameters within 10%
    for (auto& v : acc) v /= realizations;
    const auto ensemble_fit = fitting::fit_lorentzian(profile_from(offset_grid, acc, eps));
    CHECK(std::abs(single_fit.parameters.at("width") - ensemble_fit.parameters.at("width")) /
              ensemble_fit.parameters.at("width") < 0.10);
    CHECK(std::abs(single_fit.parameters.at("amplitude") -
                   ensemble_fit.parameters.at("amplitude")) /
              ensemble_fit.parameters.at("amplitude") < 0.10);

    // diagonal-ensemble fluctuations meet the analytic value within 25%
    double mean_delta2 = 0.0;
    for (const double d : delta2_diag_samples) mean_delta2 += d;
    mean_delta2 /= static_cast<double>(delta2_diag_samples.size());
    const double predicted = theory::qcfdt_simple(1.0, omega0, gamma_expected);
    CHECK(std::abs(mean_delta2 - predicted) / predicted < 0.25);

    // windowed estimator against the diagonal ensemble on realization 0
    const models::RmtParams params(n, g, rng::derive_stream(7777, 0));
    const auto model = models::build_rmt_model(params);
    const auto psi0 = models::rmt_basis_state(model, alpha0);
    const double d2_diag = delta2_diag_samples[0];
    const double w_lo = 10.0 / gamma_expected;
    const double w_hi = 50.0 / gamma_expected;
    const auto times = dynamics::uniform_times(w_lo, w_hi, 2000);
    const auto series = dynamics::evolve_expectation(first_eig, psi0, o_sym, times);
    const double d2_win = dynamics::fluctuations_windowed(series, {w_lo, w_hi}, gamma_expected);
    CHECK(std::abs(d2_win - d2_diag) / d2_diag < 0.20);

    // windowed numerical mean vs diagonal-ensemble time average within 3 sigma
    const auto short_times = dynamics::uniform_times(10.0 / gamma_expected,
                                                     20.0 / gamma_expected, 500);
    const auto short_series =
        dynamics::evolve_expectation(first_eig, psi0, o_sym, short_times);
    double mean_win = 0.0;
    for (const double v : short_series.values) mean_win += v;
    mean_win /= static_cast<double>(short_series.values.size());
    const double t_avg = dynamics::time_average_diagonal(first_eig, psi0, o_sym);
    CHECK(std::abs(mean_win - t_avg) < 3.0 * std::sqrt(d2_diag));

    // strength function of a diagonal observable: one peak at omega = 0 with
    // half-width 2 Gamma
    const Eigen::MatrixXd o_eig = spectral::observable_to_eigenbasis(o_sym, first_eig);
    std::vector<double> omega_grid;
    for (double w = -0.3; w <= 0.3; w += eps / 3.0) omega_grid.push_back(w);
    const auto strength = spectral::strength_function(o_eig, first_eig, eps, omega_grid);
    const auto sfit = fitting::fit_lorentzian(strength);
    CHECK(std::abs(sfit.parameters.at("center")) < 2.0 * gamma_expected);
    const double gamma_strength =
        fitting::deconvolved_gamma(sfit, eps, fitting::WidthConvention::strength_function);
    CHECK(std::abs(gamma_strength - gamma_expected) / gamma_expected < 0.20);
}

TEST_CASE("the two fluctuation estimators agree across an ensemble") {
    experiments::ExperimentSpec spec;
    spec.model.kind = experiments::Kind::rmt_fdt;
    spec.model.rmt_dimension = 1200;
    spec.model.g_list = {0.12};
    spec.ensemble.n_realizations = 10;
    spec.ensemble.seed = 909;
    const auto report = experiments::run_experiment(spec);

    int agree = 0, total = 0;
    for (const auto& row : report.rows) {
        if (row.gamma_fit <= 0.0) continue;
        ++total;
        if (std::abs(row.delta2_measured - row.delta2_diag) <= 0.25 * row.delta2_diag) ++agree;
    }
    CHECK(total == 20);
    CHECK(agree >= static_cast<int>(std::ceil(0.9 * total)));
}

TEST_CASE("dos estimate is window-stable on a 12-spin chain") {
    models::SpinChainParams p;
    p.n_spins = 12;
    p.b_z_s = 0.8;
    p.b_x_b = 0.3;
    p.j_x = 1.0;
    p.j_z = 0.1;
    p.j_x_sb = 0.4;
    p.j_z_sb = 0.2;
    p.n_m = 5;
    const auto model = models::build_spin_chain(p);
    const auto eig = spectral::diagonalize(model.h, "computational");
    const double mid = 0.5 * (eig.energies[0] + eig.energies[eig.dim() - 1]);
    const double w = 0.4;
    const double d1 = spectral::dos_estimate(eig, mid, w);
    const double d2 = spectral::dos_estimate(eig, mid, 2.0 * w);
    CHECK(std::abs(d2 - d1) / d1 < 0.10);
}

TEST_CASE("quench trace decays monotonically after coarse graining") {
    // benchmark chain parameters at a tractable size
    models::SpinChainParams p;
    p.n_spins = 11;
    p.b_z_s = 0.8;
    p.b_z_b = 0.0;
    p.b_x_b = 0.3;
    p.j_x = 1.0;
    p.j_z = 0.0;
    p.j_x_sb = 0.4;
    p.j_z_sb = 0.2;
    p.n_m = 5;
    const auto model = models::build_spin_chain(p);
    const auto eig = spectral::diagonalize(model.h, "computational");
    const auto sz = models::sigma_z_system(model);
    const auto bath_eig = spectral::diagonalize(models::bath_hamiltonian(p), "bath");
    const auto idx = experiments::sample_central_indices(bath_eig.energies, 0.5, 1, 42);
    const auto psi0 = models::up_times_bath_eigenstate(model, bath_eig.vectors, idx[0]);

    const auto times = dynamics::uniform_times(0.0, 40.0, 640);
    const auto series = dynamics::evolve_expectation(eig, psi0, sz, times);
    CHECK(series.values[0] == doctest::Approx(1.0).epsilon(1e-10));

    const double t_avg = dynamics::time_average_diagonal(eig, psi0, sz);
    const Eigen::MatrixXd o_eig = spectral::observable_to_eigenbasis(sz, eig);
    const double d2 = dynamics::fluctuations_diagonal(eig, psi0, o_eig);
    const double plateau_band = std::max(3.0 * std::sqrt(d2), 0.05);

    // coarse grain over blocks of width 1/B_z
    const double block_width = 1.0 / p.b_z_s;
    const int per_block = static_cast<int>(block_width / (times[1] - times[0]));
    std::vector<double> blocks;
    for (std::size_t start = 0; start + per_block <= series.size(); start += per_block) {
        double mean = 0.0;
        for (int i = 0; i < per_block; ++i) mean += series.values[start + i];
        blocks.push_back(mean / per_block);
    }

    bool reached_plateau = false;
    for (std::size_t b = 1; b < blocks.size(); ++b) {
        if (std::abs(blocks[b] - t_avg) <= plateau_band) {
            reached_plateau = true;
            break;
        }
        // monotone decrease from 1 toward the average, small slack for ripple
        CHECK(blocks[b] <= blocks[b - 1] + 0.02);
    }
    CHECK(reached_plateau);
    CHECK(blocks.front() > 0.9);
}
