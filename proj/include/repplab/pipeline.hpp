#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repplab/config.hpp"
#include "repplab/stats.hpp"

namespace repplab {

struct RunOptions {
    int threads = 1;
    std::string out_dir;
    bool assert_mode = false;
    std::optional<std::uint64_t> seed_override;
};

// Orbit ensemble for one n: streams the orbits, records per-index exceedance
// counts and per-orbit cluster structure. Initial points are sampled from
// Lebesgue; random systems run a fixed word (quenched) with an equilibration
// prefix so the effective law is the sample measure.
EnsembleRun generate_ensemble(const SystemSpec& sys, const Observable& obs,
                              double u_n, double radius, std::int64_t n, int H,
                              std::int64_t q, double tau, std::int64_t ensemble,
                              double gamma, std::uint64_t master_seed,
                              int threads, std::size_t word_prefix);

struct MarkAnalysis {
    MarkType mark = MarkType::aot;
    MultiplicityEcdf ecdf;
    TestReport ks;            // finite marks against the theory pi
    bool ks_available = false;
    // downsampled ecdf for plotting: x, ecdf(x), pi_theory(x)
    std::vector<double> plot_x, plot_ecdf, plot_pi;
};

struct NResult {
    std::int64_t n = 0;
    ThresholdResult threshold;
    FrequencySummary freq;
    std::int64_t burn_in = 0;
    BlockPartition blocks;
    ThetaEstimate theta_hat;
    ThetaResult theta_theory;
    std::vector<MarkAnalysis> marks;
    TestReport repp_chi2;
    bool repp_chi2_available = false;
    TestReport interarrival;
    DiagnosticValue dprime;
    UlcTable ulc;
    LaplaceTable laplace;
    MarkType laplace_mark = MarkType::pot;
    double repp_mass_at_1 = 0.0;
    std::int64_t clusters = 0;
    std::int64_t infinite_marks = 0;
    double kn_condition = 0.0;  // k_n * t_n* * Fbar_max at this n
};

// Runs the full pipeline for one n of the config. The ensemble is returned to
// the caller through the optional out pointer when diagnostics need it.
NResult analyze_n(const ExperimentConfig& cfg, std::int64_t n,
                  std::uint64_t master_seed, int threads,
                  EnsembleRun* run_out = nullptr);

// theory model for a configured mark type
CompoundPoissonModel theory_model(const ExperimentConfig& cfg, MarkType mark);
ThetaResult theta_theory_of(const ExperimentConfig& cfg);

struct BundleResult {
    std::vector<NResult> per_n;
    std::string bundle_json;  // what was (or would be) written to disk
    bool asserts_passed = true;
    std::vector<std::string> assert_failures;
};

// exit codes: 0 ok, 1 assertion failure (--assert), 2 config error,
// 3 numerical failure
BundleResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

enum class PlotKind { ecdf_vs_pi, theta_vs_n, dprime_vs_n, laplace_grid };
PlotKind plot_kind_from_name(const std::string& name);

// writes CSV files derived from a bundle.json; returns the file paths
std::vector<std::string> emit_plot_data(const std::string& bundle_json_path,
                                        PlotKind kind,
                                        const std::string& out_dir);

// estimate-q driver: small ensembles per n feeding the gap profile
QProfile estimate_q_driver(const ExperimentConfig& cfg,
                           const std::vector<std::int64_t>& n_grid,
                           std::int64_t ensemble, std::uint64_t seed);

}  // namespace repplab
