#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repplab/dynamics.hpp"
#include "repplab/observables.hpp"
#include "repplab/pointprocess.hpp"
#include "repplab/theory.hpp"

namespace repplab {

// Optional pass/fail gates evaluated when the CLI runs with --assert.
struct AssertSpec {
    std::optional<double> theta_lo, theta_hi;
    std::optional<double> pot_ks_max, aot_ks_max;
    std::optional<double> repp_chi2_p_min;
    std::optional<double> interarrival_ks_max;
    std::optional<double> repp_k1_min;
    std::optional<std::int64_t> laplace_cells_min;
};

struct ExperimentConfig {
    SystemSpec system = SequentialSystem{};
    Observable observable;

    ZetaKind zeta_kind = ZetaKind::aperiodic;
    int period = 1;

    double tau = 1.0;
    std::vector<std::int64_t> n_grid{1000};
    int H = 1;
    std::int64_t ensemble = 1000;
    std::int64_t q = 0;
    bool q_estimate = false;  // q = "estimate"
    std::vector<MarkType> marks{MarkType::aot, MarkType::pot, MarkType::repp};
    double gamma = 0.0;  // 0 = auto: max(0.6, 1.1/xi)
    std::uint64_t seed = 1;

    // k_n / t_n* rules: 0 = defaults floor(log n)^2 and floor((log n)^2)
    std::int64_t k_n_override = 0;
    std::int64_t t_star_override = 0;

    std::size_t grid_cells = 4096;
    std::size_t word_prefix = 64;   // random systems: equilibration letters
    std::size_t mc_samples = 10000; // marginal threshold word draws
    std::int64_t j_max = 4;         // estimate-q scan depth
    std::int64_t dump_mrepp = 0;    // sample measures written per n

    std::vector<double> y_grid{0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<Interval> intervals{
        {0.0, 0.15}, {0.2, 0.35}, {0.4, 0.55}, {0.6, 0.75}, {0.8, 0.95}};

    AssertSpec asserts;

    double effective_gamma() const;
    std::int64_t k_n_for(std::int64_t n) const;
    std::int64_t t_star_for(std::int64_t n) const;
    void validate() const;  // throws std::invalid_argument with a message
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

}  // namespace repplab
