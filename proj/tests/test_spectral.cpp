#include "qfdt/spectral.hpp"

#include "qfdt/cache.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>

using namespace qfdt;
using spectral::EigenSystem;

TEST_CASE("diagonal matrix diagonalizes to itself") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
    h.diagonal() << 1.0, 2.0, 3.0;
    const auto sys = spectral::diagonalize(h, "test");
    CHECK(sys.energies[0] == doctest::Approx(1.0));
    CHECK(sys.energies[2] == doctest::Approx(3.0));
    CHECK((sys.vectors - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("two-level crossing") {
    Eigen::MatrixXd h(2, 2);
    h << 0.0, 1.0, 1.0, 0.0;
    const auto sys = spectral::diagonalize(h, "test");
    CHECK(sys.energies[0] == doctest::Approx(-1.0));
    CHECK(sys.energies[1] == doctest::Approx(1.0));
    const double s = std::sqrt(0.5);
    // sign convention: first of the tied max components is positive
    CHECK(sys.vectors(0, 0) == doctest::Approx(s));
    CHECK(sys.vectors(1, 0) == doctest::Approx(-s));
    CHECK(sys.vectors(0, 1) == doctest::Approx(s));
    CHECK(sys.vectors(1, 1) == doctest::Approx(s));
}

TEST_CASE("reconstruction and orthonormality on a GOE draw") {
    const Eigen::MatrixXd v = models::sample_goe(256, 0.1, 5);
    Eigen::MatrixXd h = v;
    for (int i = 0; i < 256; ++i) h(i, i) += (i + 1) / 256.0;
    const auto sys = spectral::diagonalize(h, "test");

    const Eigen::MatrixXd vtv = sys.vectors.transpose() * sys.vectors;
    CHECK((vtv - Eigen::MatrixXd::Identity(256, 256)).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd rebuilt =
        sys.vectors * sys.energies.asDiagonal() * sys.vectors.transpose();
    const double scale = h.cwiseAbs().maxCoeff();
    CHECK((rebuilt - h).cwiseAbs().maxCoeff() < 1e-8 * scale);
}

TEST_CASE("overlaps reduce to the eigenvectors for an identity reference") {
    const models::RmtParams params(16, 0.0, 3);
    const auto model = models::build_rmt_model(params);
    const auto sys = spectral::diagonalize(model.full_hamiltonian(), "rmt-alpha");
    // g = 0: c_mu(alpha) = delta (signs fixed positive by convention)
    CHECK((spectral::overlaps(sys) - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() <
          1e-12);

    const auto ref = EigenSystem::diagonal(model.h0_energies, "rmt-alpha");
    CHECK((spectral::overlaps(sys, ref) - sys.vectors).cwiseAbs().maxCoeff() == 0.0);

    // column norms are 1 for any draw
    const auto v2 = models::sample_goe(64, 0.2, 9);
    Eigen::MatrixXd h2 = v2;
    for (int i = 0; i < 64; ++i) h2(i, i) += (i + 1) / 64.0;
    const auto sys2 = spectral::diagonalize(h2, "rmt-alpha");
    for (int mu = 0; mu < 64; ++mu) {
        CHECK(sys2.vectors.col(mu).norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("ldos profile: eigenstate bump, kernel mass, Parseval") {
    const models::RmtParams params(400, 0.1, 11);
    const auto model = models::build_rmt_model(params);
    const auto sys = spectral::diagonalize(model.full_hamiltonian(), "rmt-alpha");

    // Parseval for an arbitrary state
    const auto psi = models::rmt_basis_state(model, 200);
    const Eigen::VectorXd c = sys.overlaps_with(psi.amplitudes);
    CHECK(c.squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));

    const double spacing = spectral::mean_level_spacing(sys);
    const double eps = 3.0 * spacing;

    // grid spanning the spectrum +- 20 eps integrates to ~1
    const double lo = sys.energies[0] - 20.0 * eps;
    const double hi = sys.energies[sys.dim() - 1] + 20.0 * eps;
    std::vector<double> grid;
    for (double x = lo; x <= hi; x += eps / 4.0) grid.push_back(x);
    const auto profile = spectral::ldos_profile(psi, sys, eps, grid);
    CHECK(profile.trapezoid_integral() == doctest::Approx(1.0).epsilon(0.02));

    // an eigenstate of H gives a single kernel bump at its energy
    hilbert::StateVector eigenstate(sys.vectors.col(123));
    const auto bump = spectral::ldos_profile(eigenstate, sys, eps, grid);
    std::size_t imax = 0;
    for (std::size_t i = 0; i < bump.values.size(); ++i) {
        if (bump.values[i] > bump.values[imax]) imax = i;
    }
    CHECK(std::abs(bump.energy_grid[imax] - sys.energies[123]) < eps);

    CHECK_THROWS_AS(spectral::ldos_profile(psi, sys, eps, std::span<const double>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(spectral::ldos_profile(psi, sys, 0.0, grid), std::invalid_argument);
}

TEST_CASE("strength function of the zero observable vanishes") {
    const models::RmtParams params(64, 0.1, 2);
    const auto model = models::build_rmt_model(params);
    const auto sys = spectral::diagonalize(model.full_hamiltonian(), "rmt-alpha");
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(64, 64);
    std::vector<double> grid;
    for (double w = -0.5; w <= 0.5; w += 0.01) grid.push_back(w);
    const auto s = spectral::strength_function(zero, sys, 0.01, grid);
    for (const double v : s.values) CHECK(v == 0.0);

    // central window can be emptied with a tiny fraction on a 2-level system
    Eigen::MatrixXd h2(2, 2);
    h2 << 0.0, 0.3, 0.3, 0.0;
    const auto two = spectral::diagonalize(h2, "t");
    CHECK_THROWS_AS(
        spectral::strength_function(Eigen::MatrixXd::Identity(2, 2), two, 0.01, grid, 0.01),
        std::invalid_argument);
}

TEST_CASE("dos estimates on the rmt ladder") {
    const models::RmtParams params(1000, 0.05, 21);
    const auto model = models::build_rmt_model(params);
    const auto sys = spectral::diagonalize(model.full_hamiltonian(), "rmt-alpha");
    const double mid = 0.5;
    const double d = spectral::dos_estimate(sys, mid, 0.2);
    CHECK(std::abs(d - 1000.0) / 1000.0 < 0.05);
    CHECK_THROWS_AS(spectral::dos_estimate(sys, sys.energies[0], 0.5), std::invalid_argument);
}

TEST_CASE("observable transform: identity, sum rule on an 8-spin chain") {
    models::SpinChainParams p;
    p.n_spins = 8;
    p.b_z_s = 0.8;
    p.b_x_b = 0.3;
    p.j_x = 1.0;
    p.j_z = 0.1;
    p.j_x_sb = 0.4;
    p.j_z_sb = 0.2;
    p.n_m = 5;
    const auto model = models::build_spin_chain(p);
    const auto sys = spectral::diagonalize(model.h, "computational");

    const auto ident = testutil::identity_observable(model.basis.dimension, "computational");
    const Eigen::MatrixXd ident_t = spectral::observable_to_eigenbasis(ident, sys);
    CHECK((ident_t - Eigen::MatrixXd::Identity(256, 256)).cwiseAbs().maxCoeff() < 1e-12);

    const auto sz = models::sigma_z_system(model);
    const Eigen::MatrixXd o = spectral::observable_to_eigenbasis(sz, sys);
    // sum rule: sum_nu |O_mu,nu|^2 = (O^2)_mu,mu = 1 for every mu
    for (int mu = 0; mu < 256; ++mu) {
        CHECK(std::abs(o.row(mu).squaredNorm() - 1.0) < 1e-9);
    }

    // basis tags guard against mixing bases
    const auto bad = models::ObservableMatrix{sz.matrix, "noninteracting", {0}, {{0, 0.0}}, {}};
    CHECK_THROWS_AS(spectral::observable_to_eigenbasis(bad, sys), std::invalid_argument);
}

TEST_CASE("eigensystem cache round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "qfdt_cache_test";
    fs::remove_all(dir);

    const Eigen::MatrixXd v = models::sample_goe(48, 0.2, 31);
    Eigen::MatrixXd h = v;
    for (int i = 0; i < 48; ++i) h(i, i) += (i + 1) / 48.0;

    const auto key = cache::content_hash(h);
    CHECK(key == cache::content_hash(h));  // deterministic
    Eigen::MatrixXd h2 = h;
    h2(0, 0) = std::nextafter(h2(0, 0), 1.0);
    CHECK(cache::content_hash(h2) != key);

    const auto direct = spectral::diagonalize(h, "t");
    CHECK(cache::store(dir, key, direct));
    const auto loaded = cache::load(dir, key, "t");
    REQUIRE(loaded.has_value());
    CHECK((loaded->energies - direct.energies).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded->vectors - direct.vectors).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded->basis_tag == "t");

    // read-through helper returns bit-identical results on a cache hit
    const auto cached = cache::diagonalize_cached(h, "t", dir);
    CHECK((cached.vectors - direct.vectors).cwiseAbs().maxCoeff() == 0.0);

    const auto stats = cache::stats(dir);
    CHECK(stats.files == 1);
    CHECK(stats.bytes > 48 * 48 * 8);
    CHECK(cache::clear(dir) == 1);
    CHECK(cache::stats(dir).files == 0);
    CHECK(!cache::load(dir, key, "t").has_value());
    fs::remove_all(dir);
}

TEST_CASE("eigensystem requires square input of dim >= 2") {
    CHECK_THROWS_AS(spectral::diagonalize(Eigen::MatrixXd::Zero(1, 1), "t"),
                    std::invalid_argument);
    CHECK_THROWS_AS(spectral::diagonalize(Eigen::MatrixXd::Zero(2, 3), "t"),
                    std::invalid_argument);
}
