#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repplab/dynamics.hpp"
#include "repplab/observables.hpp"

namespace repplab {

struct ThresholdResult {
    double u = 0.0;
    double radius = 0.0;
    double residual = 0.0;  // |n mu(ball) - tau|
    std::string source;     // closed_form | root_found | marginal_MC
};

// Solve n * mu(B(zeta, r)) = tau by bisection on r, then map through g.
// The residual is measured against the supplied density approximation.
ThresholdResult threshold_from_tau(double tau, std::int64_t n,
                                   const DensityApprox& density,
                                   const Observable& obs);

struct MarginalThresholdResult {
    double u = 0.0;
    double radius = 0.0;
    double residual = 0.0;
    bool confidence_widened = false;  // set when mc_samples is below par
    DensityApprox marginal;           // averaged fibre density
};

// (1 - tau/n) quantile of phi under the Monte Carlo estimate of the marginal
// measure: average of sample_measure_density over mc_samples random word
// prefixes of the given burn-in length.
MarginalThresholdResult marginal_threshold(double tau, std::int64_t n,
                                           const RandomLYSystem& sys,
                                           const Observable& obs,
                                           std::size_t mc_samples,
                                           std::size_t burn_in,
                                           std::size_t grid_cells,
                                           std::uint64_t seed);

struct FrequencySummary {
    double F_star_1n = 0.0;  // sum of Fbar_i over i < n
    double F_star_Hn = 0.0;  // sum over i < Hn
    double Fbar_max = 0.0;   // max over i < Hn
    double v_n = 0.0;        // n / F_star_1n
    bool v_defined = false;
};

// Fbar holds the per-index exceedance frequencies, length H*n.
FrequencySummary frequency_summary(const std::vector<double>& Fbar,
                                   std::int64_t n, int H);

// burn-in length floor(n^gamma); gamma defaults to max(0.6, 1.1/xi)
double default_gamma(double xi);
std::int64_t burn_in_length(std::int64_t n, double gamma);

struct ThresholdSchedule {
    double tau = 0.0;
    std::string source;
    std::vector<std::int64_t> ns;
    std::vector<ThresholdResult> levels;
};

}  // namespace repplab
