#include "qfdt/models.hpp"

#include "qfdt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qfdt::models {

using hilbert::Entry;
using hilbert::PauliKind;
using hilbert::PauliTerm;

RmtParams::RmtParams(Index n, double g_coupling, std::uint64_t seed_value)
    : dimension(n), g(g_coupling), seed(seed_value) {
    if (dimension < 2) throw std::invalid_argument("RmtParams: dimension must be >= 2");
    if (g < 0.0) throw std::invalid_argument("RmtParams: g must be >= 0");
}

double RmtParams::gamma() const {
    return std::numbers::pi * g * g / (static_cast<double>(dimension) * omega0());
}

void SpinChainParams::validate() const {
    if (n_spins < 2) throw std::invalid_argument("SpinChainParams: n_spins must be >= 2");
    if (n_m < 2 || n_m > n_spins) {
        throw std::invalid_argument("SpinChainParams: n_m must lie in [2, n_spins]");
    }
}

void ObservableMatrix::validate_bands(const Eigen::VectorXd& basis_energies,
                                      double tol) const {
    if (basis_energies.size() != matrix.dim()) {
        throw std::invalid_argument("ObservableMatrix::validate_bands: dimension mismatch");
    }
    for (const auto& e : matrix.entries()) {
        const double gap = basis_energies[e.col] - basis_energies[e.row];
        bool on_band = false;
        for (const auto& [n, en] : band_gap_energies) {
            if (std::abs(std::abs(gap) - std::abs(en)) <= tol) {
                on_band = true;
                break;
            }
        }
        if (!on_band) {
            throw std::runtime_error("ObservableMatrix: entry off every declared band");
        }
    }
}

Eigen::MatrixXd sample_goe(Index n, double g, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("sample_goe: N must be >= 2");
    if (g < 0.0) throw std::invalid_argument("sample_goe: g must be >= 0");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    if (g == 0.0) return h;
    rng::CounterRng gen(seed);
    const double sigma_off = g / std::sqrt(static_cast<double>(n));
    const double sigma_diag = sigma_off * std::numbers::sqrt2;
    // fixed draw order: upper triangle, row-major
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double v = gen.next_gaussian() * (i == j ? sigma_diag : sigma_off);
            h(i, j) = v;
            h(j, i) = v;
        }
    }
    return h;
}

RmtModel build_rmt_model(const RmtParams& params) {
    RmtModel model{params, Eigen::VectorXd(params.dimension), Eigen::MatrixXd()};
    const double w0 = params.omega0();
    for (Index a = 0; a < params.dimension; ++a) {
        model.h0_energies[a] = static_cast<double>(a + 1) * w0;
    }
    model.v = sample_goe(params.dimension, params.g, params.seed);
    return model;
}

Eigen::MatrixXd RmtModel::full_hamiltonian() const {
    Eigen::MatrixXd h = v;
    h.diagonal() += h0_energies;
    return h;
}

namespace {

std::vector<PauliTerm> field_terms(int site, double bz, double bx) {
    std::vector<PauliTerm> terms;
    if (bz != 0.0) terms.push_back({bz, {{PauliKind::z, site}}});
    if (bx != 0.0) terms.push_back({bx, {{PauliKind::x, site}}});
    return terms;
}

void append_bond(std::vector<PauliTerm>& terms, int i, int j, double jz, double jx) {
    if (jz != 0.0) terms.push_back({jz, {{PauliKind::z, i}, {PauliKind::z, j}}});
    if (jx != 0.0) {
        terms.push_back({jx, {{PauliKind::plus, i}, {PauliKind::minus, j}}});
        terms.push_back({jx, {{PauliKind::minus, i}, {PauliKind::plus, j}}});
    }
}

}  // namespace

SpinChainModel build_spin_chain(const SpinChainParams& params) {
    params.validate();
    SpinBasis basis(params.n_spins);

    std::vector<PauliTerm> sys = field_terms(1, params.b_z_s, params.b_x_s);

    std::vector<PauliTerm> bath;
    for (int j = 2; j <= params.n_spins; ++j) {
        auto f = field_terms(j, params.b_z_b, params.b_x_b);
        bath.insert(bath.end(), f.begin(), f.end());
    }
    for (int j = 2; j <= params.n_spins - 1; ++j) {
        append_bond(bath, j, j + 1, params.j_z, params.j_x);
    }

    std::vector<PauliTerm> coupling;
    append_bond(coupling, 1, params.n_m, params.j_z_sb, params.j_x_sb);

    SpinChainModel model{params,
                         basis,
                         hilbert::operator_product_sum(sys, basis),
                         hilbert::operator_product_sum(bath, basis),
                         hilbert::operator_product_sum(coupling, basis),
                         SparseHermitian(),
                         SparseHermitian()};
    model.h0 = SparseHermitian::sum(model.h_s, model.h_b);
    model.h = SparseHermitian::sum(model.h0, model.h_sb);
    return model;
}

SparseHermitian bath_hamiltonian(const SpinChainParams& params) {
    params.validate();
    SpinBasis bath_basis(params.n_spins - 1);
    std::vector<PauliTerm> terms;
    for (int j = 1; j <= params.n_spins - 1; ++j) {
        auto f = field_terms(j, params.b_z_b, params.b_x_b);
        terms.insert(terms.end(), f.begin(), f.end());
    }
    for (int j = 1; j <= params.n_spins - 2; ++j) {
        append_bond(terms, j, j + 1, params.j_z, params.j_x);
    }
    if (terms.empty()) return SparseHermitian(bath_basis.dimension, {});
    return hilbert::operator_product_sum(terms, bath_basis);
}

ObservableMatrix sigma_z_system(const SpinChainModel& model) {
    const Index dim = model.basis.dimension;
    const Index half = dim / 2;
    std::vector<Entry> entries;
    entries.reserve(dim);
    for (Index i = 0; i < dim; ++i) {
        entries.push_back({i, i, i < half ? 1.0 : -1.0});  // site 1 = MSB, bit 0 = up
    }
    ObservableMatrix obs;
    obs.matrix = SparseHermitian(dim, std::move(entries));
    obs.basis_tag = "computational";
    obs.band_offsets = {0};
    obs.band_gap_energies[0] = 0.0;
    std::vector<std::size_t> idx(obs.matrix.nnz());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    obs.band_entries[0] = std::move(idx);
    return obs;
}

std::pair<ObservableMatrix, ObservableMatrix> make_parity_observables(Index n) {
    if (n < 2) throw std::invalid_argument("make_parity_observables: N must be >= 2");
    std::vector<Entry> odd_entries;
    std::vector<Entry> sym_entries;
    odd_entries.reserve(n);
    sym_entries.reserve(n);
    for (Index i = 0; i < n; ++i) {
        const bool alpha_odd = ((i + 1) % 2) == 1;  // alpha = i + 1
        if (alpha_odd) odd_entries.push_back({i, i, 1.0});
        sym_entries.push_back({i, i, alpha_odd ? 1.0 : -1.0});
    }
    auto make = [n](std::vector<Entry> entries) {
        ObservableMatrix obs;
        obs.matrix = SparseHermitian(n, std::move(entries));
        obs.basis_tag = "rmt-alpha";
        obs.band_offsets = {0};
        obs.band_gap_energies[0] = 0.0;
        std::vector<std::size_t> idx(obs.matrix.nnz());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        obs.band_entries[0] = std::move(idx);
        return obs;
    };
    return {make(std::move(odd_entries)), make(std::move(sym_entries))};
}

NonInteractingSystem build_noninteracting(const SpinChainModel& model,
                                          const Eigen::VectorXd& bath_energies,
                                          const Eigen::MatrixXd& bath_vectors) {
    const Index bath_dim = model.basis.dimension / 2;
    if (bath_energies.size() != bath_dim || bath_vectors.rows() != bath_dim ||
        bath_vectors.cols() != bath_dim) {
        throw std::invalid_argument("build_noninteracting: bath eigensystem has wrong dimension");
    }

    NonInteractingSystem ni;
    ni.bath_energies = bath_energies;
    ni.bath_vectors = bath_vectors;

    const double bz = model.params.b_z_s;
    const double bx = model.params.b_x_s;
    const double e = std::hypot(bz, bx);
    ni.e_split = e;
    if (e == 0.0) {
        ni.psi_plus = 1.0;
        ni.psi_minus = 0.0;
        ni.sys_vectors = Eigen::Matrix2d::Identity();
    } else if (bx == 0.0 && bz < 0.0) {
        // |phi_+> = |down> carries energy +E = -bz
        ni.psi_plus = 0.0;
        ni.psi_minus = 1.0;
        ni.sys_vectors << 0.0, -1.0, 1.0, 0.0;
    } else {
        const double denom = std::sqrt((bz + e) * (bz + e) + bx * bx);
        ni.psi_plus = (bz + e) / denom;
        ni.psi_minus = bx / denom;
        ni.sys_vectors << ni.psi_plus, -ni.psi_minus, ni.psi_minus, ni.psi_plus;
    }
    ni.sys_energies << e, -e;

    const Index dim = model.basis.dimension;
    std::vector<Index> order(dim);
    std::vector<double> raw_energies(dim);
    std::vector<std::pair<int, Index>> raw_labels(dim);
    for (int s = 0; s < 2; ++s) {
        for (Index b = 0; b < bath_dim; ++b) {
            const Index k = s * bath_dim + b;
            raw_energies[k] = ni.sys_energies[s] + bath_energies[b];
            raw_labels[k] = {s, b};
        }
    }
    for (Index k = 0; k < dim; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return raw_energies[a] < raw_energies[b];
    });

    ni.energies.resize(dim);
    ni.labels.resize(dim);
    ni.pos_plus.assign(bath_dim, -1);
    ni.pos_minus.assign(bath_dim, -1);
    for (Index alpha = 0; alpha < dim; ++alpha) {
        const Index k = order[alpha];
        ni.energies[alpha] = raw_energies[k];
        ni.labels[alpha] = raw_labels[k];
        if (raw_labels[k].first == 0) {
            ni.pos_plus[raw_labels[k].second] = alpha;
        } else {
            ni.pos_minus[raw_labels[k].second] = alpha;
        }
    }
    return ni;
}

Eigen::VectorXd NonInteractingSystem::to_ni(const Eigen::VectorXd& psi_computational) const {
    const Index bath_dim = bath_energies.size();
    if (psi_computational.size() != 2 * bath_dim) {
        throw std::invalid_argument("NonInteractingSystem::to_ni: dimension mismatch");
    }
    // site 1 = MSB: top block is spin-up, bottom block spin-down
    const Eigen::VectorXd up = bath_vectors.transpose() * psi_computational.head(bath_dim);
    const Eigen::VectorXd down = bath_vectors.transpose() * psi_computational.tail(bath_dim);
    Eigen::VectorXd out(2 * bath_dim);
    for (Index alpha = 0; alpha < 2 * bath_dim; ++alpha) {
        const auto [s, b] = labels[alpha];
        out[alpha] = sys_vectors(0, s) * up[b] + sys_vectors(1, s) * down[b];
    }
    return out;
}

ObservableMatrix NonInteractingSystem::sigma_z_observable() const {
    const Index bath_dim = bath_energies.size();
    // sigma_z in the system eigenbasis
    const double m_diag = psi_plus * psi_plus - psi_minus * psi_minus;
    const double m_off = -2.0 * psi_plus * psi_minus;

    std::vector<Entry> entries;
    entries.reserve(3 * bath_dim);
    for (Index b = 0; b < bath_dim; ++b) {
        const Index ap = pos_plus[b];
        const Index am = pos_minus[b];
        if (m_diag != 0.0) {
            entries.push_back({ap, ap, m_diag});
            entries.push_back({am, am, -m_diag});
        }
        if (m_off != 0.0) entries.push_back({std::min(ap, am), std::max(ap, am), m_off});
    }
    ObservableMatrix obs;
    obs.matrix = SparseHermitian(2 * bath_dim, std::move(entries));
    obs.basis_tag = "noninteracting";
    if (m_off == 0.0) {
        obs.band_offsets = {0};
        obs.band_gap_energies[0] = 0.0;
    } else {
        obs.band_offsets = {-1, 0, 1};
        obs.band_gap_energies[-1] = -2.0 * e_split;
        obs.band_gap_energies[0] = 0.0;
        obs.band_gap_energies[1] = 2.0 * e_split;
    }
    auto span = obs.matrix.entries();
    for (std::size_t k = 0; k < span.size(); ++k) {
        if (span[k].row == span[k].col) {
            obs.band_entries[0].push_back(k);
        } else {
            // stored upper triangle: energy ascends with index, so the gap is +2E
            obs.band_entries[1].push_back(k);
            obs.band_entries[-1].push_back(k);
        }
    }
    return obs;
}

StateVector rmt_basis_state(const RmtModel& model, Index alpha0) {
    if (alpha0 < 1 || alpha0 > model.params.dimension) {
        throw std::invalid_argument("rmt_basis_state: alpha0 out of range (1-based)");
    }
    return StateVector::basis_state(model.params.dimension, alpha0 - 1);
}

StateVector up_times_bath_eigenstate(const SpinChainModel& model,
                                     const Eigen::MatrixXd& bath_vectors, Index b) {
    const Index bath_dim = model.basis.dimension / 2;
    if (bath_vectors.rows() != bath_dim) {
        throw std::invalid_argument("up_times_bath_eigenstate: bath eigensystem missing or wrong size");
    }
    if (b < 0 || b >= bath_vectors.cols()) {
        throw std::invalid_argument("up_times_bath_eigenstate: bath index out of range");
    }
    Eigen::VectorXd amps = Eigen::VectorXd::Zero(model.basis.dimension);
    amps.head(bath_dim) = bath_vectors.col(b);
    return StateVector(std::move(amps));
}

StateVector product_state(const SpinBasis& basis, const std::string& pattern) {
    if (static_cast<int>(pattern.size()) != basis.n_spins) {
        throw std::invalid_argument("product_state: pattern length must equal n_spins");
    }
    Index index = 0;
    for (int site = 1; site <= basis.n_spins; ++site) {
        const char c = pattern[site - 1];
        if (c == 'd' || c == 'D' || c == '1') {
            index |= Index(1) << (basis.n_spins - site);
        } else if (!(c == 'u' || c == 'U' || c == '0')) {
            throw std::invalid_argument("product_state: pattern must consist of u/d");
        }
    }
    return StateVector::basis_state(basis.dimension, index);
}

}  // namespace qfdt::models
