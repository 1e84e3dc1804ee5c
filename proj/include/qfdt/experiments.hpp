// experiments.hpp — reproducible measurement protocols: build a model,
// diagonalize, quench, fit the decay rate, measure the equilibrium
// fluctuations two ways, and compare against the analytic predictions.
// Every run is deterministic given its seed.

#pragma once

#include "qfdt/cache.hpp"
#include "qfdt/dynamics.hpp"
#include "qfdt/fitting.hpp"
#include "qfdt/theory.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qfdt::experiments {

using hilbert::Index;
using hilbert::StateVector;

enum class Kind {
    rmt_fdt,                // decay + fluctuation relation on the random-matrix model
    spinchain_fdt,          // spin chain, bath-eigenstate initial states, sizes n_list
    spinchain_product_state,// spin chain, product initial state, b_z_s sweep
    generalized_fdt_bx,     // crossed system fields, three-peak observable structure
    coupling_sweep,         // fixed size, system-bath coupling scaled
    time_dependence,        // single quench trace plus the predicted decay curve
};

Kind kind_from_string(const std::string& name);
const char* to_string(Kind kind);

struct EnsembleSpec {
    int n_realizations = 1;
    int n_initial_states = 5;
    std::uint64_t seed = 1;
};

struct AnalysisSpec {
    double epsilon = 0.0;          // profile kernel width; 0 = 5x mean level spacing
    int fit_samples = 400;
    int window_samples = 2000;
    int pilot_samples = 200;
    double pilot_horizon = 50.0;   // inverse energy units
    double window_lo = 10.0;       // fluctuation window in units of 1/Gamma_fit
    double window_hi = 50.0;
    double dos_window_gammas = 10.0;
};

struct ModelSpec {
    Kind kind = Kind::rmt_fdt;
    // random-matrix model
    Index rmt_dimension = 1000;
    std::vector<double> g_list = {0.1};
    Index alpha0 = 0;  // 1-based ladder index; 0 = dimension/2 + 1
    // spin chain
    models::SpinChainParams chain{};
    std::vector<int> n_list;              // spinchain_fdt
    std::vector<double> bz_list;          // spinchain_product_state
    std::vector<double> coupling_scales;  // coupling_sweep
    std::string pattern;                  // product state; empty = up + all-down
};

struct OutputSpec {
    std::filesystem::path out_dir = ".";
    std::filesystem::path cache_dir;  // empty = no eigensystem cache
    bool write_timeseries = false;
    bool write_profiles = false;
};

struct BudgetSpec {
    double max_gb = 4.0;
};

struct ExperimentSpec {
    ModelSpec model;
    EnsembleSpec ensemble;
    AnalysisSpec analysis;
    OutputSpec output;
    BudgetSpec budget;
    int threads = 0;  // 0 = hardware concurrency
    std::uint64_t config_hash = 0;

    void validate() const;                  // throws std::invalid_argument
    double memory_estimate_bytes() const;   // 3 dense matrices at the largest dimension
};

struct RunRow {
    long instance = -1;
    int n = 0;       // matrix dimension (RMT) or spin count (chain)
    double g = 0.0;  // coupling g (RMT) or coupling scale / b_z_s (chain kinds)
    double gamma_fit = 0.0;
    double delta2_measured = 0.0;
    double delta2_diag = 0.0;
    double delta2_pred_simple = 0.0;
    double delta2_pred_general = 0.0;
    double dos = 0.0;
    double time_avg = 0.0;
    double mc_avg = 0.0;
    std::string flags;  // semicolon-joined tokens, includes obs=<name>

    // carried in the JSON report only (the CSV schema is fixed)
    std::string observable;
    double fit_residual_rms = 0.0;
    double initial_energy = 0.0;
    double a0 = 0.0;
    std::uint64_t instance_seed = 0;
};

struct RunReport {
    Kind kind = Kind::rmt_fdt;
    std::vector<RunRow> rows;  // sorted by instance
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string code_version;

    void write_csv(const std::filesystem::path& path) const;
    void write_json(const std::filesystem::path& path) const;
};

RunReport run_experiment(const ExperimentSpec& spec);

// Distinct indices sampled uniformly from the central `fraction` of the
// energy range. Throws when the window is empty or the count exceeds the
// window population. Reproducible given the seed.
std::vector<Index> sample_central_indices(const Eigen::VectorXd& energies_ascending,
                                          double central_fraction, int count,
                                          std::uint64_t seed);

// |up>_S x |phi_b>_B for sampled central-window bath eigenstates.
std::vector<StateVector> random_initial_states(const models::SpinChainModel& model,
                                               const Eigen::VectorXd& bath_energies,
                                               const Eigen::MatrixXd& bath_vectors,
                                               double central_fraction, int count,
                                               std::uint64_t seed);

// ---------------------------------------------------------------- oracle suite
// Empirical four-point wavefunction correlators from a GOE ensemble compared
// against the closed-form correlators, including the orthogonality
// corrections. A check passes within 5 standard errors.

struct OracleCheck {
    std::string label;
    double empirical = 0.0;
    double std_error = 0.0;
    double theory = 0.0;
    double n_sigma = 0.0;
    bool pass = false;
};

struct OracleReport {
    std::vector<OracleCheck> checks;
    Index dimension = 0;
    int realizations = 0;
    double g = 0.0;
    bool all_pass = false;
};

OracleReport oracle_suite(Index n, int realizations, double g, std::uint64_t seed);

}  // namespace qfdt::experiments
