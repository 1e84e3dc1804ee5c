#include "qfdt/experiments.hpp"

#include "qfdt/rng.hpp"
#include "qfdt/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qfdt::experiments {

using dynamics::TimeSeries;
using models::ObservableMatrix;
using spectral::EigenSystem;

Kind kind_from_string(const std::string& name) {
    if (name == "rmt_fdt") return Kind::rmt_fdt;
    if (name == "spinchain_fdt") return Kind::spinchain_fdt;
    if (name == "spinchain_product_state") return Kind::spinchain_product_state;
    if (name == "generalized_fdt_bx") return Kind::generalized_fdt_bx;
    if (name == "coupling_sweep") return Kind::coupling_sweep;
    if (name == "time_dependence") return Kind::time_dependence;
    throw std::invalid_argument("unknown experiment kind: " + name);
}

const char* to_string(Kind kind) {
    switch (kind) {
        case Kind::rmt_fdt: return "rmt_fdt";
        case Kind::spinchain_fdt: return "spinchain_fdt";
        case Kind::spinchain_product_state: return "spinchain_product_state";
        case Kind::generalized_fdt_bx: return "generalized_fdt_bx";
        case Kind::coupling_sweep: return "coupling_sweep";
        case Kind::time_dependence: return "time_dependence";
    }
    return "?";
}

void ExperimentSpec::validate() const {
    if (ensemble.n_realizations < 1 || ensemble.n_initial_states < 1) {
        throw std::invalid_argument("ensemble counts must be positive");
    }
    if (analysis.fit_samples < 50 || analysis.pilot_samples < 50) {
        throw std::invalid_argument("fit/pilot sample counts must be at least 50");
    }
    if (analysis.window_samples < 100) {
        throw std::invalid_argument("window_samples must be at least 100");
    }
    if (analysis.window_lo < 5.0 || analysis.window_hi <= analysis.window_lo) {
        throw std::invalid_argument("fluctuation window must satisfy 5 <= lo < hi");
    }
    switch (model.kind) {
        case Kind::rmt_fdt:
            if (model.rmt_dimension < 2) throw std::invalid_argument("dimension must be >= 2");
            if (model.g_list.empty()) throw std::invalid_argument("g list must not be empty");
            for (const double g : model.g_list) {
                if (g < 0.0) throw std::invalid_argument("g must be >= 0");
            }
            break;
        case Kind::spinchain_fdt:
        case Kind::spinchain_product_state:
        case Kind::generalized_fdt_bx:
        case Kind::coupling_sweep:
        case Kind::time_dependence: {
            auto sizes = model.n_list;
            if (sizes.empty()) sizes.push_back(model.chain.n_spins);
            for (const int n : sizes) {
                models::SpinChainParams p = model.chain;
                p.n_spins = n;
                p.n_m = std::min(p.n_m, n);
                p.validate();
            }
            break;
        }
    }
}

double ExperimentSpec::memory_estimate_bytes() const {
    Index dim = 0;
    if (model.kind == Kind::rmt_fdt) {
        dim = model.rmt_dimension;
    } else {
        int n = model.chain.n_spins;
        for (const int m : model.n_list) n = std::max(n, m);
        dim = Index(1) << n;
    }
    return 8.0 * static_cast<double>(dim) * static_cast<double>(dim) * 3.0;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

TimeSeries head(const TimeSeries& s, std::size_t k) {
    TimeSeries out;
    out.times.assign(s.times.begin(), s.times.begin() + k);
    out.values.assign(s.values.begin(), s.values.begin() + k);
    return out;
}

void parallel_for(std::size_t n_items, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n_items)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n_items;
    std::exception_ptr error;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_items) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ------------------------------------------------------------ instance engine

struct TheoryGrid {
    Eigen::VectorXd energies;  // non-interacting grid
    Eigen::VectorXd weights;   // |psi_alpha|^2 on that grid
};

struct GroupObservable {
    std::string name;
    const ObservableMatrix* obs = nullptr;          // dynamics basis
    const ObservableMatrix* obs_ni = nullptr;       // theory grid basis
    const Eigen::MatrixXd* o_eigenbasis = nullptr;  // interacting eigenbasis
    std::function<TimeSeries(std::span<const double>)> free_fn;
};

struct Outcome {
    RunRow row;
    TimeSeries measured, free_series, predicted;  // fit-grid traces
};

void append_flag(std::string& flags, const std::string& token) {
    if (!flags.empty()) flags += ';';
    flags += token;
}

// Shared-initial-state analysis: the pilot fit runs on the anchor observable
// and fixes the time grids; every observable is then fit on those grids.
std::vector<Outcome> analyze_shared_state(const EigenSystem& eig, const StateVector& psi0,
                                          const TheoryGrid& grid,
                                          std::span<const GroupObservable> observables,
                                          std::size_t anchor, const AnalysisSpec& an,
                                          Kind kind, const models::SpinChainParams* chain) {
    const std::size_t n_obs = observables.size();
    std::vector<Outcome> out(n_obs);
    std::vector<const ObservableMatrix*> obs_ptrs(n_obs);
    for (std::size_t i = 0; i < n_obs; ++i) {
        out[i].row.observable = observables[i].name;
        append_flag(out[i].row.flags, "obs=" + observables[i].name);
        obs_ptrs[i] = observables[i].obs;
    }

    const bool degenerate = dynamics::has_degenerate_gaps(eig);
    std::vector<double> t_avg(n_obs), d2_diag(n_obs);
    for (std::size_t i = 0; i < n_obs; ++i) {
        if (degenerate) append_flag(out[i].row.flags, "degenerate_gaps");
        t_avg[i] = dynamics::time_average_diagonal(eig, psi0, *observables[i].obs);
        d2_diag[i] = dynamics::fluctuations_diagonal(eig, psi0, *observables[i].o_eigenbasis);
    }

    const Eigen::VectorXd cbar = eig.overlaps_with(psi0.amplitudes);
    const double e0 = cbar.cwiseProduct(cbar).dot(eig.energies);

    auto fit_one = [&](const TimeSeries& measured, const TimeSeries& free_series,
                       std::size_t i) -> std::optional<fitting::FitResult> {
        std::size_t cut = fitting::decay_fit_window(measured, t_avg[i], d2_diag[i]);
        if (cut < 50) cut = measured.size();
        try {
            return fitting::fit_gamma(head(measured, cut), head(free_series, cut), t_avg[i]);
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    };

    // pilot estimate on the anchor observable
    double gamma_est = 0.0;
    {
        const auto pilot_times = dynamics::uniform_times(0.0, an.pilot_horizon, an.pilot_samples);
        const auto pilot =
            dynamics::evolve_expectation(eig, psi0, *observables[anchor].obs, pilot_times);
        const auto pilot_free = observables[anchor].free_fn(pilot_times);
        if (auto fit = fit_one(pilot, pilot_free, anchor)) {
            gamma_est = fit->parameters.at("gamma");
        }
    }
    if (gamma_est <= 0.0) {
        // flat anchor trace: no decay to fit; report diagonal-ensemble data only
        for (std::size_t i = 0; i < n_obs; ++i) {
            append_flag(out[i].row.flags, "fit_degenerate");
            out[i].row.time_avg = t_avg[i];
            out[i].row.delta2_diag = d2_diag[i];
            out[i].row.initial_energy = e0;
        }
        return out;
    }

    // refine the horizon until it spans the decay
    std::vector<fitting::FitResult> fits(n_obs);
    std::vector<bool> fit_ok(n_obs, false);
    std::vector<TimeSeries> measured, frees(n_obs);
    for (int round = 0; round < 3; ++round) {
        const double horizon = 5.0 / gamma_est;
        const auto times = dynamics::uniform_times(0.0, horizon, an.fit_samples);
        measured = dynamics::evolve_expectation_multi(eig, psi0, obs_ptrs, times);
        for (std::size_t i = 0; i < n_obs; ++i) frees[i] = observables[i].free_fn(times);
        for (std::size_t i = 0; i < n_obs; ++i) {
            if (auto fit = fit_one(measured[i], frees[i], i)) {
                fits[i] = *fit;
                fit_ok[i] = true;
            } else {
                fit_ok[i] = false;
            }
        }
        if (!fit_ok[anchor]) break;
        const double gamma_anchor = fits[anchor].parameters.at("gamma");
        const double span = horizon * gamma_anchor;
        if (span >= 1.5 && span <= 25.0) break;
        gamma_est = gamma_anchor;
        if (round == 2) {
            for (std::size_t i = 0; i < n_obs; ++i) {
                append_flag(out[i].row.flags, "fit_window_unspanned");
            }
        }
    }

    const double gamma_anchor =
        fit_ok[anchor] ? fits[anchor].parameters.at("gamma") : gamma_est;

    // equilibrium window, shared across observables
    const double w_lo = an.window_lo / gamma_anchor;
    const double w_hi = an.window_hi / gamma_anchor;
    const auto w_times = dynamics::uniform_times(w_lo, w_hi, an.window_samples);
    const auto w_series = dynamics::evolve_expectation_multi(eig, psi0, obs_ptrs, w_times);

    for (std::size_t i = 0; i < n_obs; ++i) {
        RunRow& row = out[i].row;
        row.time_avg = t_avg[i];
        row.delta2_diag = d2_diag[i];
        row.initial_energy = e0;
        if (!fit_ok[i]) {
            append_flag(row.flags, "fit_degenerate");
            continue;
        }
        const double gamma = fits[i].parameters.at("gamma");
        row.gamma_fit = gamma;
        if (!fits[i].converged) append_flag(row.flags, "fit_nonconverged");

        out[i].measured = measured[i];
        out[i].free_series = frees[i];
        out[i].predicted = theory::predicted_decay(frees[i], t_avg[i], gamma);
        double rss = 0.0;
        for (std::size_t k = 0; k < out[i].measured.size(); ++k) {
            const double r = out[i].measured.values[k] - out[i].predicted.values[k];
            rss += r * r;
        }
        row.fit_residual_rms = std::sqrt(rss / static_cast<double>(out[i].measured.size()));

        // density of states at the initial energy, window clipped to the spectrum
        const double e_min = eig.energies[0];
        const double e_max = eig.energies[eig.dim() - 1];
        double width = an.dos_window_gammas * gamma;
        const double max_width = 1.96 * std::min(e0 - e_min, e_max - e0);
        if (width > max_width) {
            width = max_width;
            append_flag(row.flags, "dos_clamped");
        }
        row.dos = spectral::dos_estimate(eig, e0, width);

        const theory::LorentzianFamily fam(1.0 / row.dos, gamma);
        const auto bands =
            theory::band_coefficients(*observables[i].obs_ni, fam, e0, grid.energies);
        row.a0 = bands.a.count(0) ? bands.a.at(0) : 0.0;
        row.mc_avg =
            theory::microcanonical_average(*observables[i].obs_ni, 0, fam, e0, grid.energies);

        const auto fluct = dynamics::fluctuation_report(
            eig, psi0, *observables[i].o_eigenbasis, w_series[i], {w_lo, w_hi},
            gamma_anchor, row.mc_avg);
        row.delta2_measured = fluct.delta_sq_measured;
        row.delta2_diag = fluct.delta_sq_diag_ensemble;
        row.time_avg = fluct.time_average;
        row.delta2_pred_simple = theory::qcfdt_simple(row.a0, 1.0 / row.dos, gamma);
        if (kind == Kind::generalized_fdt_bx && chain != nullptr) {
            row.delta2_pred_general = theory::qcfdt_three_peak(chain->b_z_s, chain->b_x_s,
                                                               gamma, 1.0 / row.dos, t_avg[i]);
        } else {
            row.delta2_pred_general =
                theory::qcfdt_general(grid.weights, grid.energies, bands, fam);
        }
    }
    return out;
}

// --------------------------------------------------------------- group set-up

EigenSystem diagonalize_maybe_cached(const Eigen::MatrixXd& h, std::string tag,
                                     const std::filesystem::path& cache_dir) {
    if (cache_dir.empty()) return spectral::diagonalize(h, std::move(tag));
    return cache::diagonalize_cached(h, std::move(tag), cache_dir);
}

struct ChainGroup {
    models::SpinChainModel model;
    EigenSystem eig;        // computational basis
    ObservableMatrix sz;    // computational basis
    Eigen::MatrixXd o_eig;  // sigma_z in the interacting eigenbasis
    EigenSystem bath_eig;   // bath register
    models::NonInteractingSystem ni;
    ObservableMatrix sz_ni;  // non-interacting banded form
    EigenSystem h0_sys;      // NI-diagonal system for free evolution
};

ChainGroup build_chain_group(const models::SpinChainParams& params,
                             const std::filesystem::path& cache_dir) {
    auto model = models::build_spin_chain(params);
    auto eig = diagonalize_maybe_cached(model.h.to_dense(), "computational", cache_dir);
    auto sz = models::sigma_z_system(model);
    auto o_eig = spectral::observable_to_eigenbasis(sz, eig);
    auto bath_eig = spectral::diagonalize(models::bath_hamiltonian(params), "bath");
    auto ni = models::build_noninteracting(model, bath_eig.energies, bath_eig.vectors);
    auto sz_ni = ni.sigma_z_observable();
    auto h0_sys = EigenSystem::diagonal(ni.energies, "noninteracting");
    return ChainGroup{std::move(model),    std::move(eig),   std::move(sz),
                      std::move(o_eig),    std::move(bath_eig), std::move(ni),
                      std::move(sz_ni),    std::move(h0_sys)};
}

StateVector normalized_state(Eigen::VectorXd amps) {
    amps /= amps.norm();
    return StateVector(std::move(amps));
}

// NI eigenstate (s, b) expressed in the computational basis.
StateVector ni_product_state(const ChainGroup& g, int s, Index b) {
    const Index bath_dim = g.ni.bath_energies.size();
    Eigen::VectorXd amps(2 * bath_dim);
    amps.head(bath_dim) = g.ni.sys_vectors(0, s) * g.ni.bath_vectors.col(b);
    amps.tail(bath_dim) = g.ni.sys_vectors(1, s) * g.ni.bath_vectors.col(b);
    return normalized_state(std::move(amps));
}

Outcome analyze_chain_instance(const ChainGroup& g, const StateVector& psi0,
                               const AnalysisSpec& an, Kind kind) {
    TheoryGrid grid;
    grid.energies = g.ni.energies;
    const Eigen::VectorXd psi_ni = g.ni.to_ni(psi0.amplitudes);
    grid.weights = psi_ni.cwiseProduct(psi_ni);
    grid.weights /= grid.weights.sum();

    const StateVector psi0_ni = normalized_state(psi_ni);
    GroupObservable obs;
    obs.name = "sigma_z";
    obs.obs = &g.sz;
    obs.obs_ni = &g.sz_ni;
    obs.o_eigenbasis = &g.o_eig;
    obs.free_fn = [&g, psi0_ni](std::span<const double> times) {
        return dynamics::free_evolution(g.h0_sys, psi0_ni, g.sz_ni, times);
    };
    auto outcomes = analyze_shared_state(g.eig, psi0, grid, std::span(&obs, 1), 0, an, kind,
                                         &g.model.params);
    return std::move(outcomes.front());
}

void write_group_profiles(const ChainGroup& g, const StateVector& psi0, double gamma,
                          const AnalysisSpec& an, const std::filesystem::path& out_dir,
                          const std::string& tag) {
    const double spacing = spectral::mean_level_spacing(g.eig);
    const double eps = an.epsilon > 0.0 ? an.epsilon : 5.0 * spacing;

    const double e_lo = g.eig.energies[0] - 20.0 * eps;
    const double e_hi = g.eig.energies[g.eig.dim() - 1] + 20.0 * eps;
    std::vector<double> e_grid;
    for (int k = 0; k < 500; ++k) e_grid.push_back(e_lo + (e_hi - e_lo) * k / 499.0);
    const auto ldos = spectral::ldos_profile(psi0, g.eig, eps, e_grid);

    const double w_max = 2.0 * g.ni.e_split + std::max(20.0 * gamma, 10.0 * eps);
    std::vector<double> w_grid;
    for (int k = 0; k < 601; ++k) w_grid.push_back(-w_max + 2.0 * w_max * k / 600.0);
    const auto strength = spectral::strength_function(g.o_eig, g.eig, eps, w_grid);

    auto write_profile = [&](const spectral::SmoothedProfile& p, const std::string& name) {
        std::ofstream out(out_dir / (name + "_" + tag + ".csv"));
        out << "energy,value\n";
        for (std::size_t i = 0; i < p.energy_grid.size(); ++i) {
            out << fmt(p.energy_grid[i]) << ',' << fmt(p.values[i]) << '\n';
        }
    };
    write_profile(ldos, "ldos");
    write_profile(strength, "strength");
}

void write_timeseries_file(const Outcome& o, const std::filesystem::path& path) {
    if (o.measured.size() == 0) return;
    std::ofstream out(path);
    out << "t,measured,free,predicted\n";
    for (std::size_t i = 0; i < o.measured.size(); ++i) {
        out << fmt(o.measured.times[i]) << ',' << fmt(o.measured.values[i]) << ','
            << fmt(o.free_series.values[i]) << ',' << fmt(o.predicted.values[i]) << '\n';
    }
}

// ------------------------------------------------------------------- drivers

void run_rmt(const ExperimentSpec& spec, RunReport& report) {
    const Index dim = spec.model.rmt_dimension;
    const Index alpha0 = spec.model.alpha0 > 0 ? spec.model.alpha0 : dim / 2 + 1;
    const auto [o_odd, o_sym] = models::make_parity_observables(dim);

    const std::size_t n_groups =
        spec.model.g_list.size() * static_cast<std::size_t>(spec.ensemble.n_realizations);
    std::vector<std::vector<RunRow>> group_rows(n_groups);

    parallel_for(n_groups, spec.threads, [&](std::size_t gi) {
        const double g = spec.model.g_list[gi / spec.ensemble.n_realizations];
        const std::uint64_t seed_r = rng::derive_stream(spec.ensemble.seed, gi);

        const models::RmtParams params(dim, g, seed_r);
        const auto model = models::build_rmt_model(params);
        const auto eig = diagonalize_maybe_cached(model.full_hamiltonian(), "rmt-alpha",
                                                  spec.output.cache_dir);
        const Eigen::MatrixXd odd_eig = spectral::observable_to_eigenbasis(o_odd, eig);
        Eigen::MatrixXd sym_eig = 2.0 * odd_eig;
        sym_eig.diagonal().array() -= 1.0;

        const auto psi0 = models::rmt_basis_state(model, alpha0);
        const auto h0_sys = EigenSystem::diagonal(model.h0_energies, "rmt-alpha");

        TheoryGrid grid;
        grid.energies = model.h0_energies;
        grid.weights = psi0.amplitudes.cwiseProduct(psi0.amplitudes);

        std::array<GroupObservable, 2> observables;
        observables[0] = {"odd", &o_odd, &o_odd, &odd_eig,
                          [&](std::span<const double> t) {
                              return dynamics::free_evolution(h0_sys, psi0, o_odd, t);
                          }};
        observables[1] = {"sym", &o_sym, &o_sym, &sym_eig,
                          [&](std::span<const double> t) {
                              return dynamics::free_evolution(h0_sys, psi0, o_sym, t);
                          }};
        // anchor on sym: full-swing decay, best conditioned fit
        auto outcomes = analyze_shared_state(eig, psi0, grid, observables, 1, spec.analysis,
                                             spec.model.kind, nullptr);

        // Self-averaging: the equilibrium fluctuations of the model are
        // measured as a spectral average over a few central basis states
        // (parity-preserving ladder offsets), not from a single state whose
        // weights carry Porter-Thomas noise over only Gamma/omega0 levels.
        const double gamma_anchor = outcomes[1].row.gamma_fit;
        if (gamma_anchor > 0.0 && spec.ensemble.n_initial_states > 1) {
            const double w_lo = spec.analysis.window_lo / gamma_anchor;
            const double w_hi = spec.analysis.window_hi / gamma_anchor;
            const auto w_times =
                dynamics::uniform_times(w_lo, w_hi, spec.analysis.window_samples);
            std::array<const ObservableMatrix*, 2> obs_ptrs = {&o_odd, &o_sym};
            std::array<double, 2> measured_acc = {0.0, 0.0};
            std::array<double, 2> diag_acc = {0.0, 0.0};
            int n_states = 0;
            for (int k = 0; k < spec.ensemble.n_initial_states; ++k) {
                const Index offset = (k % 2 == 0 ? 1 : -1) * ((k + 1) / 2) * 2;
                const Index a = alpha0 + offset;
                if (a < 1 || a > dim) continue;
                const auto psi_k = models::rmt_basis_state(model, a);
                const auto series =
                    dynamics::evolve_expectation_multi(eig, psi_k, obs_ptrs, w_times);
                measured_acc[0] +=
                    dynamics::fluctuations_windowed(series[0], {w_lo, w_hi}, gamma_anchor);
                measured_acc[1] +=
                    dynamics::fluctuations_windowed(series[1], {w_lo, w_hi}, gamma_anchor);
                diag_acc[0] += dynamics::fluctuations_diagonal(eig, psi_k, odd_eig);
                diag_acc[1] += dynamics::fluctuations_diagonal(eig, psi_k, sym_eig);
                ++n_states;
            }
            if (n_states > 0) {
                for (int i = 0; i < 2; ++i) {
                    if (outcomes[i].row.gamma_fit <= 0.0) continue;
                    outcomes[i].row.delta2_measured = measured_acc[i] / n_states;
                    outcomes[i].row.delta2_diag = diag_acc[i] / n_states;
                }
            }
        }

        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            RunRow row = std::move(outcomes[i].row);
            row.n = static_cast<int>(dim);
            row.g = g;
            row.instance_seed = seed_r;
            if (spec.output.write_timeseries) {
                std::ostringstream name;
                name << "timeseries_g" << g << "_r" << (gi % spec.ensemble.n_realizations)
                     << "_" << row.observable << ".csv";
                write_timeseries_file(outcomes[i], spec.output.out_dir / name.str());
            }
            group_rows[gi].push_back(std::move(row));
        }
    });

    for (auto& rows : group_rows) {
        for (auto& row : rows) {
            row.instance = static_cast<long>(report.rows.size());
            report.rows.push_back(std::move(row));
        }
    }
}

void run_chain(const ExperimentSpec& spec, RunReport& report) {
    const Kind kind = spec.model.kind;

    struct Group {
        std::string tag;
        double g_column = 1.0;
        models::SpinChainParams params;
    };
    std::vector<Group> groups;
    switch (kind) {
        case Kind::spinchain_fdt: {
            auto sizes = spec.model.n_list;
            if (sizes.empty()) sizes.push_back(spec.model.chain.n_spins);
            for (const int n : sizes) {
                Group g{"N" + std::to_string(n), 1.0, spec.model.chain};
                g.params.n_spins = n;
                g.params.n_m = std::min(g.params.n_m, n);
                groups.push_back(std::move(g));
            }
            break;
        }
        case Kind::spinchain_product_state: {
            auto bzs = spec.model.bz_list;
            if (bzs.empty()) bzs.push_back(spec.model.chain.b_z_s);
            for (const double bz : bzs) {
                Group g{"bz" + std::to_string(bz).substr(0, 4), bz, spec.model.chain};
                g.params.b_z_s = bz;
                groups.push_back(std::move(g));
            }
            break;
        }
        case Kind::coupling_sweep: {
            auto scales = spec.model.coupling_scales;
            if (scales.empty()) scales = {0.5, 0.75, 1.0, 1.25};
            for (const double c : scales) {
                Group g{"c" + std::to_string(c).substr(0, 4), c, spec.model.chain};
                g.params.j_x_sb *= c;
                g.params.j_z_sb *= c;
                groups.push_back(std::move(g));
            }
            break;
        }
        default:
            groups.push_back({"main", 1.0, spec.model.chain});
            break;
    }

    long next_instance = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto group = build_chain_group(groups[gi].params, spec.output.cache_dir);

        std::vector<StateVector> states;
        std::vector<std::uint64_t> state_seeds;
        const std::uint64_t group_seed = rng::derive_stream(spec.ensemble.seed, 1000 + gi);
        switch (kind) {
            case Kind::spinchain_fdt:
            case Kind::generalized_fdt_bx: {
                const auto idx = sample_central_indices(group.bath_eig.energies, 0.5,
                                                        spec.ensemble.n_initial_states,
                                                        group_seed);
                for (const Index b : idx) {
                    states.push_back(models::up_times_bath_eigenstate(
                        group.model, group.bath_eig.vectors, b));
                    state_seeds.push_back(rng::derive_stream(group_seed, b));
                }
                break;
            }
            case Kind::coupling_sweep: {
                // mid-energy eigenstates of H0 (system level x bath eigenstate);
                // the window is kept narrow so the sweep points share one DOS
                const auto idx = sample_central_indices(group.ni.energies, 0.2,
                                                        spec.ensemble.n_initial_states,
                                                        group_seed);
                for (const Index alpha : idx) {
                    const auto [s, b] = group.ni.labels[alpha];
                    states.push_back(ni_product_state(group, s, b));
                    state_seeds.push_back(rng::derive_stream(group_seed, alpha));
                }
                break;
            }
            default: {
                if (!spec.model.pattern.empty()) {
                    states.push_back(
                        models::product_state(group.model.basis, spec.model.pattern));
                } else if (kind == Kind::time_dependence) {
                    const auto idx =
                        sample_central_indices(group.bath_eig.energies, 0.5, 1, group_seed);
                    states.push_back(models::up_times_bath_eigenstate(
                        group.model, group.bath_eig.vectors, idx[0]));
                } else {
                    std::string pattern(group.model.params.n_spins, 'd');
                    pattern[0] = 'u';
                    states.push_back(models::product_state(group.model.basis, pattern));
                }
                state_seeds.push_back(group_seed);
                break;
            }
        }

        std::vector<Outcome> outcomes(states.size());
        parallel_for(states.size(), spec.threads, [&](std::size_t k) {
            outcomes[k] = analyze_chain_instance(group, states[k], spec.analysis, kind);
        });

        for (std::size_t k = 0; k < outcomes.size(); ++k) {
            RunRow row = std::move(outcomes[k].row);
            row.instance = next_instance++;
            row.n = group.model.params.n_spins;
            row.g = groups[gi].g_column;
            row.instance_seed = state_seeds[k];
            report.rows.push_back(std::move(row));
            const bool force_series = kind == Kind::time_dependence;
            if (spec.output.write_timeseries || force_series) {
                std::ostringstream name;
                name << "timeseries_" << groups[gi].tag << "_s" << k << ".csv";
                write_timeseries_file(outcomes[k], spec.output.out_dir / name.str());
                if (force_series && k == 0) {
                    write_timeseries_file(outcomes[k], spec.output.out_dir / "timeseries.csv");
                }
            }
        }
        if (spec.output.write_profiles) {
            const double gamma = report.rows.back().gamma_fit;
            if (gamma > 0.0) {
                write_group_profiles(group, states.front(), gamma, spec.analysis,
                                     spec.output.out_dir, groups[gi].tag);
            }
        }
    }
}

}  // namespace

RunReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const double budget_bytes = spec.budget.max_gb * 1073741824.0;
    if (spec.memory_estimate_bytes() > budget_bytes) {
        std::ostringstream msg;
        msg << "memory estimate " << spec.memory_estimate_bytes() / 1073741824.0
            << " GiB exceeds budget " << spec.budget.max_gb << " GiB";
        throw std::invalid_argument(msg.str());
    }
    const bool writes_files = spec.output.write_timeseries || spec.output.write_profiles ||
                              spec.model.kind == Kind::time_dependence;
    if (writes_files && !spec.output.out_dir.empty()) {
        std::filesystem::create_directories(spec.output.out_dir);
    }

    RunReport report;
    report.kind = spec.model.kind;
    report.seed = spec.ensemble.seed;
    report.config_hash = spec.config_hash;
    report.code_version = kVersion;

    if (spec.model.kind == Kind::rmt_fdt) {
        run_rmt(spec, report);
    } else {
        run_chain(spec, report);
    }
    return report;
}

std::vector<Index> sample_central_indices(const Eigen::VectorXd& energies_ascending,
                                          double central_fraction, int count,
                                          std::uint64_t seed) {
    const Index n = energies_ascending.size();
    if (n < 1 || central_fraction <= 0.0 || central_fraction > 1.0) {
        throw std::invalid_argument("sample_central_indices: bad window");
    }
    const double e_min = energies_ascending[0];
    const double e_max = energies_ascending[n - 1];
    const double margin = 0.5 * (1.0 - central_fraction) * (e_max - e_min);
    std::vector<Index> window;
    for (Index i = 0; i < n; ++i) {
        if (energies_ascending[i] >= e_min + margin && energies_ascending[i] <= e_max - margin) {
            window.push_back(i);
        }
    }
    if (window.empty()) throw std::invalid_argument("sample_central_indices: empty window");
    if (count > static_cast<int>(window.size())) {
        throw std::invalid_argument("sample_central_indices: count exceeds window population");
    }
    // partial Fisher-Yates for distinct uniform draws
    rng::CounterRng gen(seed, 0);
    for (int k = 0; k < count; ++k) {
        const std::size_t j = k + gen.next_below(window.size() - k);
        std::swap(window[k], window[j]);
    }
    window.resize(count);
    std::sort(window.begin(), window.end());
    return window;
}

std::vector<StateVector> random_initial_states(const models::SpinChainModel& model,
                                               const Eigen::VectorXd& bath_energies,
                                               const Eigen::MatrixXd& bath_vectors,
                                               double central_fraction, int count,
                                               std::uint64_t seed) {
    const auto indices = sample_central_indices(bath_energies, central_fraction, count, seed);
    std::vector<StateVector> states;
    states.reserve(indices.size());
    for (const Index b : indices) {
        states.push_back(models::up_times_bath_eigenstate(model, bath_vectors, b));
    }
    return states;
}

// ------------------------------------------------------------------ reporting

void RunReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
    out << "instance,N,g,gamma_fit,delta2_measured,delta2_diag,delta2_pred_simple,"
           "delta2_pred_general,dos,time_avg,mc_avg,flags\n";
    for (const auto& r : rows) {
        out << r.instance << ',' << r.n << ',' << fmt(r.g) << ',' << fmt(r.gamma_fit) << ','
            << fmt(r.delta2_measured) << ',' << fmt(r.delta2_diag) << ','
            << fmt(r.delta2_pred_simple) << ',' << fmt(r.delta2_pred_general) << ','
            << fmt(r.dos) << ',' << fmt(r.time_avg) << ',' << fmt(r.mc_avg) << ',' << r.flags
            << '\n';
    }
}

void RunReport::write_json(const std::filesystem::path& path) const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["kind"] = to_string(kind);
    doc["seed"] = seed;
    doc["config_hash"] = hex64(config_hash);
    doc["code_version"] = code_version;
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        doc["rows"].push_back({{"instance", r.instance},
                               {"N", r.n},
                               {"g", r.g},
                               {"observable", r.observable},
                               {"gamma_fit", r.gamma_fit},
                               {"delta2_measured", r.delta2_measured},
                               {"delta2_diag", r.delta2_diag},
                               {"delta2_pred_simple", r.delta2_pred_simple},
                               {"delta2_pred_general", r.delta2_pred_general},
                               {"dos", r.dos},
                               {"time_avg", r.time_avg},
                               {"mc_avg", r.mc_avg},
                               {"a0", r.a0},
                               {"initial_energy", r.initial_energy},
                               {"fit_residual_rms", r.fit_residual_rms},
                               {"instance_seed", r.instance_seed},
                               {"flags", r.flags}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_json: cannot open " + path.string());
    out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- oracle suite

OracleReport oracle_suite(Index n, int realizations, double g, std::uint64_t seed) {
    if (n < 64) throw std::invalid_argument("oracle_suite: n must be >= 64");
    if (realizations < 10) throw std::invalid_argument("oracle_suite: need >= 10 realizations");
    const double omega0 = 1.0 / static_cast<double>(n);
    const double gamma = std::numbers::pi * g * g;
    const theory::LorentzianFamily fam(omega0, gamma);

    const Index mu = n / 2;
    const Index d1 = 6;  // a few level spacings, inside the Lorentzian width
    const Index d2 = 12;

    struct Tuple {
        std::string label;
        bool offdiag;
        Index nu_offset;
        std::array<Index, 4> off;  // (a0, b0, a, b) relative to mu
        bool translation_averaged;
    };
    const std::vector<Tuple> tuples = {
        {"od_gauss_peak", true, d1, {0, d1, 0, d1}, false},
        {"od_gauss_shift", true, d1, {-3, d1 + 2, -3, d1 + 2}, false},
        {"od_gauss_far", true, d2, {5, d2 - 4, 5, d2 - 4}, false},
        {"od_ortho_pair", true, d1, {2, 2, 5, 5}, true},
        {"od_ortho_mid", true, d1, {3, 3, 3, 3}, true},
        {"od_swap_term", true, d1, {1, 4, 4, 1}, true},
        {"od_swap_far", true, d2, {0, 7, 7, 0}, true},
        {"od_zero_a", true, d1, {0, d1, 1, d1}, false},
        {"od_zero_b", true, d1, {0, d1, 0, d1 + 1}, false},
        {"od_zero_c", true, d2, {-2, 3, 4, 9}, false},
        {"od_gauss_peak2", true, d2, {0, d2, 0, d2}, false},
        {"od_ortho_wide", true, d2, {6, 6, -6, -6}, true},
        {"diag_gauss_pair", false, 0, {-2, -2, 3, 3}, false},
        {"diag_second", false, 0, {1, -4, 1, -4}, false},
        {"diag_third", false, 0, {2, -2, -2, 2}, false},
        {"diag_all_equal", false, 0, {2, 2, 2, 2}, true},
        {"diag_all_equal0", false, 0, {0, 0, 0, 0}, true},
        {"diag_zero", false, 0, {-3, 1, 4, 8}, false},
        {"diag_pair_far", false, 0, {-9, -9, 9, 9}, false},
        {"diag_second_far", false, 0, {8, -8, 8, -8}, false},
    };

    // translation anchors reduce the estimator variance where the
    // orthogonality corrections would otherwise drown in noise
    std::vector<Index> anchors;
    for (Index a = -24; a <= 24; a += 4) anchors.push_back(a);

    std::vector<std::vector<double>> samples(tuples.size());
    for (auto& s : samples) s.reserve(realizations);

    for (int r = 0; r < realizations; ++r) {
        const std::uint64_t seed_r = rng::derive_stream(seed, r);
        const models::RmtParams params(n, g, seed_r);
        const auto model = models::build_rmt_model(params);
        const auto eig = spectral::diagonalize(model.full_hamiltonian(), "rmt-alpha");
        const auto& v = eig.vectors;

        for (std::size_t t = 0; t < tuples.size(); ++t) {
            const auto& tp = tuples[t];
            auto product_at = [&](Index shift) {
                const Index m = mu + shift;
                const Index nu = m + tp.nu_offset;
                const Index a0 = m + tp.off[0];
                const Index b0 = m + tp.off[1];
                const Index a = m + tp.off[2];
                const Index b = m + tp.off[3];
                if (tp.offdiag) return v(a0, m) * v(b0, nu) * v(a, m) * v(b, nu);
                return v(a0, m) * v(b0, m) * v(a, m) * v(b, m);
            };
            if (tp.translation_averaged) {
                double acc = 0.0;
                for (const Index a : anchors) acc += product_at(a);
                samples[t].push_back(acc / static_cast<double>(anchors.size()));
            } else {
                samples[t].push_back(product_at(0));
            }
        }
    }

    OracleReport report;
    report.dimension = n;
    report.realizations = realizations;
    report.g = g;
    report.all_pass = true;
    for (std::size_t t = 0; t < tuples.size(); ++t) {
        const auto& tp = tuples[t];
        double mean = 0.0;
        for (const double s : samples[t]) mean += s;
        mean /= static_cast<double>(realizations);
        double var = 0.0;
        for (const double s : samples[t]) var += (s - mean) * (s - mean);
        var /= static_cast<double>(realizations - 1);
        const double std_error = std::sqrt(var / static_cast<double>(realizations));

        double th;
        if (tp.offdiag) {
            th = theory::four_point_offdiag(fam, mu, mu + tp.nu_offset, mu + tp.off[0],
                                            mu + tp.off[1], mu + tp.off[2], mu + tp.off[3]);
        } else {
            th = theory::four_point_diag(fam, mu, mu + tp.off[0], mu + tp.off[1],
                                         mu + tp.off[2], mu + tp.off[3]);
        }

        OracleCheck check;
        check.label = tp.label;
        check.empirical = mean;
        check.std_error = std_error;
        check.theory = th;
        check.n_sigma = std_error > 0.0 ? std::abs(mean - th) / std_error : 0.0;
        check.pass = check.n_sigma <= 5.0;
        report.all_pass = report.all_pass && check.pass;
        report.checks.push_back(std::move(check));
    }
    return report;
}

}  // namespace qfdt::experiments
