#include "repplab/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace repplab {

namespace {

// Largest radius with mu(B(zeta, r)) <= target, refined until the bracket is
// one ulp wide. The target is hit to machine precision because the ball mass
// is continuous and nondecreasing in r.
double solve_ball_radius(const DensityApprox& density, double zeta,
                         double target) {
    double lo = 0.0;
    double hi = 0.5;
    if (density.ball_mass(zeta, hi) < target) {
        throw std::invalid_argument("threshold: tau/n exceeds total mass");
    }
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (density.ball_mass(zeta, mid) <= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return density.ball_mass(zeta, hi) <= target ? hi : lo;
}

}  // namespace

ThresholdResult threshold_from_tau(double tau, std::int64_t n,
                                   const DensityApprox& density,
                                   const Observable& obs) {
    if (!(tau > 0.0) || n < 1) {
        throw std::invalid_argument("threshold_from_tau: need tau > 0 and n >= 1");
    }
    const double total = density.integral();
    if (std::abs(total - 1.0) > 1e-6) {
        throw std::invalid_argument("threshold_from_tau: density not normalised");
    }
    const double target = tau / static_cast<double>(n);
    if (target > total) {
        throw std::invalid_argument("threshold_from_tau: tau/n exceeds total mass");
    }
    ThresholdResult res;
    res.radius = solve_ball_radius(density, obs.zeta, target);
    res.u = obs.g_of(res.radius);
    res.residual = std::abs(static_cast<double>(n) *
                                density.ball_mass(obs.zeta, res.radius) -
                            tau);
    res.source = "root_found";
    return res;
}

MarginalThresholdResult marginal_threshold(double tau, std::int64_t n,
                                           const RandomLYSystem& sys,
                                           const Observable& obs,
                                           std::size_t mc_samples,
                                           std::size_t burn_in,
                                           std::size_t grid_cells,
                                           std::uint64_t seed) {
    if (!(tau > 0.0) || n < 1) {
        throw std::invalid_argument("marginal_threshold: need tau > 0 and n >= 1");
    }
    sys.validate();
    MarginalThresholdResult res;
    res.confidence_widened = mc_samples < 10000;
    res.marginal.cells = grid_cells;
    res.marginal.values.assign(grid_cells, 0.0);
    for (std::size_t s = 0; s < mc_samples; ++s) {
        Rng rng(derive_seed(seed, "marginal_word", s));
        const auto word = sample_word(sys, burn_in, rng);
        const auto fib = sample_measure_density(sys, word, grid_cells);
        for (std::size_t k = 0; k < grid_cells; ++k) {
            res.marginal.values[k] += fib.density.values[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(mc_samples);
    for (double& v : res.marginal.values) v *= inv;

    const double target = tau / static_cast<double>(n);
    res.radius = solve_ball_radius(res.marginal, obs.zeta, target);
    res.u = obs.g_of(res.radius);
    res.residual = std::abs(static_cast<double>(n) *
                                res.marginal.ball_mass(obs.zeta, res.radius) -
                            tau);
    return res;
}

FrequencySummary frequency_summary(const std::vector<double>& Fbar,
                                   std::int64_t n, int H) {
    if (H < 1 || n < 1) {
        throw std::invalid_argument("frequency_summary: need H >= 1 and n >= 1");
    }
    const auto total = static_cast<std::size_t>(n) * static_cast<std::size_t>(H);
    if (Fbar.size() != total) {
        throw std::invalid_argument("frequency_summary: Fbar length must be H*n");
    }
    FrequencySummary s;
    for (std::size_t i = 0; i < total; ++i) {
        const double f = Fbar[i];
        if (f < 0.0 || f > 1.0) {
            throw std::invalid_argument("frequency_summary: Fbar outside [0,1]");
        }
        if (i < static_cast<std::size_t>(n)) s.F_star_1n += f;
        s.F_star_Hn += f;
        s.Fbar_max = std::max(s.Fbar_max, f);
    }
    if (s.F_star_1n > 0.0) {
        s.v_n = static_cast<double>(n) / s.F_star_1n;
        s.v_defined = true;
    }
    return s;
}

double default_gamma(double xi) {
    return std::max(0.6, 1.1 / xi);
}

std::int64_t burn_in_length(std::int64_t n, double gamma) {
    if (!(gamma > 0.0) || gamma >= 1.0) {
        throw std::invalid_argument("burn_in_length: gamma must lie in (0,1)");
    }
    return static_cast<std::int64_t>(
        std::floor(std::pow(static_cast<double>(n), gamma)));
}

}  // namespace repplab
