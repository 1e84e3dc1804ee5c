#include "qfdt/models.hpp"
#include "qfdt/spectral.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace qfdt;
using hilbert::SpinBasis;

TEST_CASE("rmt parameters and ladder") {
    const models::RmtParams params(4, 0.1, 1);
    CHECK(params.omega0() == doctest::Approx(0.25));
    CHECK(params.gamma() == doctest::Approx(std::numbers::pi * 0.01).epsilon(1e-14));

    const auto model = models::build_rmt_model(params);
    CHECK(model.h0_energies[0] == doctest::Approx(0.25));
    CHECK(model.h0_energies[3] == doctest::Approx(1.0));

    CHECK_THROWS_AS(models::RmtParams(1, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(models::RmtParams(10, -0.1, 1), std::invalid_argument);
}

TEST_CASE("goe sampling is reproducible and zero for g = 0") {
    const auto a = models::sample_goe(32, 0.1, 42);
    const auto b = models::sample_goe(32, 0.1, 42);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    const auto c = models::sample_goe(32, 0.1, 43);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);

    CHECK(models::sample_goe(16, 0.0, 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(models::sample_goe(1, 0.1, 1), std::invalid_argument);
}

TEST_CASE("goe entry statistics match the ensemble definition") {
    const int n = 8;
    const double g = 0.3;
    const int draws = 10000;
    double sum_all = 0.0, sumsq_off = 0.0, sumsq_diag = 0.0;
    long n_off = 0, n_diag = 0, n_all = 0;
    for (int d = 0; d < draws; ++d) {
        const auto h = models::sample_goe(n, g, 1000 + d);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                sum_all += h(i, j);
                ++n_all;
                if (i == j) {
                    sumsq_diag += h(i, j) * h(i, j);
                    ++n_diag;
                } else {
                    sumsq_off += h(i, j) * h(i, j);
                    ++n_off;
                }
            }
        }
    }
    const double var_off_expected = g * g / n;
    const double var_diag_expected = 2.0 * g * g / n;

    // mean of entries: SE uses the larger (diagonal) variance as a bound
    const double mean = sum_all / n_all;
    const double se_mean = std::sqrt(var_diag_expected / n_all);
    CHECK(std::abs(mean) < 5.0 * se_mean);

    // sample variances within 5 SE of the ensemble values
    const double var_off = sumsq_off / n_off;
    const double se_var_off = var_off_expected * std::sqrt(2.0 / n_off);
    CHECK(std::abs(var_off - var_off_expected) < 5.0 * se_var_off);

    const double var_diag = sumsq_diag / n_diag;
    const double se_var_diag = var_diag_expected * std::sqrt(2.0 / n_diag);
    CHECK(std::abs(var_diag - var_diag_expected) < 5.0 * se_var_diag);
}

TEST_CASE("spin chain with fields only is diagonal") {
    models::SpinChainParams p;
    p.n_spins = 4;
    p.b_z_s = 0.8;
    p.b_z_b = 0.5;
    p.n_m = 2;
    const auto model = models::build_spin_chain(p);
    for (const auto& e : model.h.entries()) CHECK(e.row == e.col);
    // largest eigenvalue: all spins up
    CHECK(model.h.coeff(0, 0) == doctest::Approx(0.8 + 3 * 0.5));
    CHECK(model.h.coeff(model.basis.dimension - 1, model.basis.dimension - 1) ==
          doctest::Approx(-0.8 - 3 * 0.5));
}

TEST_CASE("benchmark parameter set builds and is symmetric") {
    models::SpinChainParams p;
    p.n_spins = 13;
    p.j_x_sb = 0.4;
    p.j_x = 1.0;
    p.b_z_b = 0.0;
    p.b_x_b = 0.3;
    p.j_z_sb = 0.2;
    p.j_z = 0.0;
    p.b_z_s = 0.8;
    p.n_m = 5;
    const auto model = models::build_spin_chain(p);
    CHECK(model.basis.dimension == 8192);
    CHECK(model.h.nnz() > 0);
    CHECK(model.h_sb.nnz() > 0);
}

TEST_CASE("sigma_z commutes with h0 when the system field is longitudinal") {
    models::SpinChainParams p;
    p.n_spins = 6;
    p.b_z_s = 0.8;
    p.b_x_b = 0.3;
    p.j_x = 1.0;
    p.j_z_sb = 0.2;
    p.j_x_sb = 0.4;
    p.n_m = 3;
    const auto model = models::build_spin_chain(p);
    const Eigen::MatrixXd h0 = model.h0.to_dense();
    const Eigen::MatrixXd sz = models::sigma_z_system(model).matrix.to_dense();
    CHECK((h0 * sz - sz * h0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("chain parameter validation") {
    models::SpinChainParams p;
    p.n_spins = 4;
    p.n_m = 7;
    CHECK_THROWS_AS(models::build_spin_chain(p), std::invalid_argument);
    p.n_m = 1;
    CHECK_THROWS_AS(models::build_spin_chain(p), std::invalid_argument);
    p.n_spins = 1;
    p.n_m = 2;
    CHECK_THROWS_AS(models::build_spin_chain(p), std::invalid_argument);
}

TEST_CASE("parity observables") {
    const auto [o_odd, o_sym] = models::make_parity_observables(6);
    // alpha = 1 (row 0) is odd
    CHECK(o_odd.matrix.coeff(0, 0) == 1.0);
    CHECK(o_odd.matrix.coeff(1, 1) == 0.0);
    CHECK(o_sym.matrix.coeff(0, 0) == 1.0);
    CHECK(o_sym.matrix.coeff(1, 1) == -1.0);

    const Eigen::MatrixXd sym = o_sym.matrix.to_dense();
    CHECK((sym * sym - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);

    // O_sym = 2 O_odd - I exactly
    const Eigen::MatrixXd odd = o_odd.matrix.to_dense();
    CHECK((sym - (2.0 * odd - Eigen::MatrixXd::Identity(6, 6))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("initial states") {
    const models::RmtParams params(8, 0.0, 1);
    const auto model = models::build_rmt_model(params);
    const auto e3 = models::rmt_basis_state(model, 3);
    CHECK(e3.amplitudes[2] == 1.0);
    CHECK_THROWS_AS(models::rmt_basis_state(model, 0), std::invalid_argument);
    CHECK_THROWS_AS(models::rmt_basis_state(model, 9), std::invalid_argument);

    SpinBasis three(3);
    const auto udd = models::product_state(three, "udd");
    CHECK(udd.amplitudes[3] == 1.0);  // bits 011
    CHECK_THROWS_AS(models::product_state(three, "ud"), std::invalid_argument);
    CHECK_THROWS_AS(models::product_state(three, "uxd"), std::invalid_argument);
}

TEST_CASE("system-up times bath eigenstate") {
    models::SpinChainParams p;
    p.n_spins = 5;
    p.b_z_s = 0.8;
    p.b_x_b = 0.3;
    p.j_x = 1.0;
    p.j_z = 0.1;
    p.j_x_sb = 0.4;
    p.j_z_sb = 0.2;
    p.n_m = 3;
    const auto model = models::build_spin_chain(p);
    const auto bath = models::bath_hamiltonian(p);
    const auto bath_eig = spectral::diagonalize(bath, "bath");

    const auto psi = models::up_times_bath_eigenstate(model, bath_eig.vectors, 5);
    CHECK(psi.amplitudes.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const auto sz = models::sigma_z_system(model);
    CHECK(hilbert::expectation(psi, sz.matrix) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(models::up_times_bath_eigenstate(model, bath_eig.vectors, 99),
                    std::invalid_argument);
    CHECK_THROWS_AS(models::up_times_bath_eigenstate(model, Eigen::MatrixXd(2, 2), 0),
                    std::invalid_argument);
}

TEST_CASE("non-interacting product basis matches a dense construction") {
    models::SpinChainParams p;
    p.n_spins = 5;
    p.b_z_s = 0.8;
    p.b_x_s = 0.6;
    p.b_x_b = 0.3;
    p.j_x = 1.0;
    p.j_z = 0.1;
    p.j_x_sb = 0.4;
    p.n_m = 3;
    const auto model = models::build_spin_chain(p);
    const auto bath = models::bath_hamiltonian(p);
    const auto bath_eig = spectral::diagonalize(bath, "bath");
    const auto ni = models::build_noninteracting(model, bath_eig.energies, bath_eig.vectors);

    const Eigen::Index dim = model.basis.dimension;
    const Eigen::Index bdim = dim / 2;

    // dense NI eigenvector matrix: column alpha = kron(sys column, bath column)
    Eigen::MatrixXd w0(dim, dim);
    for (Eigen::Index alpha = 0; alpha < dim; ++alpha) {
        const auto [s, b] = ni.labels[alpha];
        w0.col(alpha).head(bdim) = ni.sys_vectors(0, s) * bath_eig.vectors.col(b);
        w0.col(alpha).tail(bdim) = ni.sys_vectors(1, s) * bath_eig.vectors.col(b);
    }

    // w0 diagonalizes h0 with the recorded energies
    const Eigen::MatrixXd h0 = model.h0.to_dense();
    const Eigen::MatrixXd should_be_diag = w0.transpose() * h0 * w0;
    CHECK((should_be_diag.diagonal() - ni.energies).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::MatrixXd off = should_be_diag;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() < 1e-10);

    // to_ni agrees with the dense transform
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(dim);
    psi[3] = std::sqrt(0.5);
    psi[17] = -std::sqrt(0.5);
    CHECK((ni.to_ni(psi) - w0.transpose() * psi).cwiseAbs().maxCoeff() < 1e-12);

    // banded sigma_z observable agrees with the dense transform
    const Eigen::MatrixXd sz = models::sigma_z_system(model).matrix.to_dense();
    const Eigen::MatrixXd sz_ni_dense = w0.transpose() * sz * w0;
    const auto obs = ni.sigma_z_observable();
    CHECK((obs.matrix.to_dense() - sz_ni_dense).cwiseAbs().maxCoeff() < 1e-10);
    obs.validate_bands(ni.energies, 1e-9);
    CHECK(obs.band_offsets.size() == 3);
    CHECK(obs.band_gap_energies.at(1) == doctest::Approx(2.0 * std::hypot(0.8, 0.6)));
}

TEST_CASE("sorted non-interacting energies are sums of part energies") {
    models::SpinChainParams p;
    p.n_spins = 4;
    p.b_z_s = 0.8;
    p.b_x_b = 0.3;
    p.j_x = 1.0;
    p.n_m = 2;
    const auto model = models::build_spin_chain(p);
    const auto bath = models::bath_hamiltonian(p);
    const auto bath_eig = spectral::diagonalize(bath, "bath");
    const auto ni = models::build_noninteracting(model, bath_eig.energies, bath_eig.vectors);
    for (Eigen::Index a = 1; a < ni.dim(); ++a) CHECK(ni.energies[a] >= ni.energies[a - 1]);
    const auto [s0, b0] = ni.labels[0];
    CHECK(ni.energies[0] ==
          doctest::Approx(ni.sys_energies[s0] + bath_eig.energies[b0]).epsilon(1e-14));
}
