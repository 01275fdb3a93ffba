#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "repplab/dynamics.hpp"
#include "repplab/pointprocess.hpp"
#include "repplab/theory.hpp"
#include "repplab/thresholds.hpp"

namespace repplab {

// ---------------------------------------------------------------------------
// ensemble runs
// ---------------------------------------------------------------------------

struct SeedLedger {
    std::uint64_t master = 0;
    std::string derivation =
        "seed(tag, counter) = splitmix64(master ^ fnv1a(tag) ^ counter * c)";
    std::vector<std::pair<std::string, std::uint64_t>> entries;

    void record(const std::string& tag, std::uint64_t value) {
        entries.emplace_back(tag, value);
    }
};

struct OrbitSummary {
    std::vector<ClusterRecord> clusters;
    std::int64_t exceedances = 0;      // total over the full window
    std::int64_t infinite_marks = 0;   // clusters carrying an infinite excess
};

struct EnsembleRun {
    std::string system;
    std::string reference_measure;  // "m (Lebesgue)" or "mu_omega, word seed ..."
    std::int64_t n = 0;
    int H = 1;
    double tau = 1.0;
    double u_n = 0.0;
    double radius = 0.0;
    std::int64_t q = 0;
    double a_n = 1.0;
    double gamma = 0.6;
    std::int64_t burn_in = 0;
    FrequencySummary freq;
    std::vector<double> Fbar;  // per-index exceedance frequency, length H*n
    std::vector<OrbitSummary> orbits;
    SeedLedger seeds;

    std::int64_t horizon() const { return static_cast<std::int64_t>(H) * n; }
    std::size_t ensemble_size() const { return orbits.size(); }
};

// ---------------------------------------------------------------------------
// test reports
// ---------------------------------------------------------------------------

struct TestReport {
    std::string name;
    std::string null_reference;
    double statistic = 0.0;
    double p_value = 1.0;
    std::int64_t sample_size = 0;
    std::string verdict;  // pass | reject | inconclusive
    std::int64_t n = 0;
    std::int64_t ensemble = 0;
    std::uint64_t seed = 0;

    std::string to_json_string() const;
};

// asymptotic Kolmogorov tail probability for sup-distance d at sample size n
double kolmogorov_p_value(double d, std::int64_t n);
// upper tail of the chi-square distribution with df degrees of freedom
double chi2_sf(double x, double df);

// ---------------------------------------------------------------------------
// estimators
// ---------------------------------------------------------------------------

struct ThetaEstimate {
    double value = 0.0;
    double se = 0.0;
    std::int64_t escapes = 0;
    std::int64_t exceedances = 0;
    bool defined = false;
    bool low_sample = false;  // fewer than 100 escapes
};

// ratio of post-burn-in escape frequency to exceedance frequency, with an
// orbit-level bootstrap standard error
ThetaEstimate estimate_theta(const EnsembleRun& run, int bootstrap_resamples = 200);

struct MultiplicityEcdf {
    std::vector<double> sorted_marks;          // a_n * mark, finite only
    std::int64_t infinite_count = 0;
    std::vector<std::int64_t> size_histogram;  // index k-1: clusters of size k

    double at(double x) const;  // empirical cdf
};

MultiplicityEcdf empirical_multiplicity(const EnsembleRun& run, MarkType mark_type);

TestReport ks_statistic(const std::vector<double>& sorted_sample,
                        const std::function<double(double)>& cdf,
                        const std::string& null_reference);

TestReport chi_square_geometric(const std::vector<std::int64_t>& size_histogram,
                                double theta);

// single realisation: consecutive gaps against Exp(theta)
TestReport interarrival_test(const std::vector<double>& times, double theta);

// ensemble runs: atom processes are superposed over groups of orbits and the
// gaps rescaled by the group size, so the pooled gaps are Exp(theta) within
// lattice resolution
TestReport interarrival_test(const EnsembleRun& run, double theta);

// ---------------------------------------------------------------------------
// convergence diagnostics
// ---------------------------------------------------------------------------

struct DiagnosticValue {
    double value = 0.0;
    double mc_sigma = 0.0;
};

// Monte Carlo estimate of the double sum over blocks of
// P(escape at j, exceedance at r) plus the tail-block term
DiagnosticValue dprime_diagnostic(const EnsembleRun& run,
                                  const BlockPartition& blocks);

struct UlcTable {
    std::vector<double> y;
    std::vector<double> block_sum;    // sum over blocks, weight e^{-yx}
    std::vector<double> trimmed_sum;  // blocks trimmed by their gaps
    double tail = 0.0;                // last partial block, weight e^{-x}
};

UlcTable ulc_diagnostic(const EnsembleRun& run, const BlockPartition& blocks,
                        const std::vector<double>& y_grid);

struct LaplaceCell {
    double y = 0.0;
    Interval interval;
    double psi_hat = 0.0;
    double psi_theory = 0.0;
    double mc_sigma = 0.0;
};

struct LaplaceTable {
    std::vector<LaplaceCell> cells;
    std::int64_t within_3sigma = 0;
};

LaplaceTable laplace_convergence(const EnsembleRun& run,
                                 const CompoundPoissonModel& model,
                                 const std::vector<Interval>& intervals,
                                 const std::vector<double>& y_grid);

struct CorrDecayPoint {
    std::int64_t t = 0;
    double cov = 0.0;
    double sigma = 0.0;
};

struct CorrDecay {
    std::vector<CorrDecayPoint> points;
    double fitted_log_slope = 0.0;  // least-squares slope of log|cov| over t >= 1
};

// covariance of 1_A along the orbit between offsets i0 and i0 + t
CorrDecay correlation_decay_diagnostic(const SystemSpec& sys, double a, double b,
                                       const std::vector<std::int64_t>& t_grid,
                                       std::int64_t i0, std::size_t ensemble,
                                       std::uint64_t seed);

}  // namespace repplab
