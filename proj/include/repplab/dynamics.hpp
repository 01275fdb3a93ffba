#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "repplab/rng.hpp"

namespace repplab {

// ---------------------------------------------------------------------------
// beta transformations on the circle [0,1), 0 ~ 1
// ---------------------------------------------------------------------------

// T_beta(x) = beta * x mod 1. Inputs outside [0,1) are rejected except x == 1,
// which is identified with 0.
double beta_map_apply(double beta, double x);

enum class PerturbationSign { plus, minus, alternating };

// Drifting parameter sequence beta_i = beta + s_i * i^{-xi}, i = 1..length.
struct BetaSchedule {
    double beta_limit = 2.0;  // unperturbed beta
    double xi = 2.0;          // decay exponent, must be > 1
    PerturbationSign sign = PerturbationSign::plus;
    std::size_t length = 0;
    double c = 1e-3;  // every beta_i must stay above 1 + c

    void validate() const;
};

// Generated values satisfy |beta_i - beta| <= i^{-xi} bit-exactly (the rounded
// sum is nudged back by an ulp when rounding overshoots the bound).
std::vector<double> make_schedule(const BetaSchedule& spec);

std::vector<double> constant_schedule(double beta, std::size_t length);

// Finitely many interval maps (one beta per letter) driven by a Bernoulli
// shift with the given weights.
struct RandomLYSystem {
    std::vector<double> alphabet;  // beta values, each > 1
    std::vector<double> weights;   // probability vector

    void validate() const;
};

// i.i.d. letters, 0-based indices into the alphabet
std::vector<std::uint32_t> sample_word(const RandomLYSystem& sys,
                                       std::size_t length, Rng& rng);

struct SequentialSystem {
    double beta = 3.0;
    bool perturbed = false;
    double xi = 2.0;
    PerturbationSign sign = PerturbationSign::plus;
    double c = 1e-3;

    std::vector<double> schedule(std::size_t length) const;
};

using SystemSpec = std::variant<SequentialSystem, RandomLYSystem>;

std::string system_id(const SystemSpec& sys);

// ---------------------------------------------------------------------------
// orbits
// ---------------------------------------------------------------------------

struct Orbit {
    double x0 = 0.0;
    std::vector<double> points;          // x_0, x_1, ..., x_n
    std::vector<std::uint32_t> word;     // letters used (random case only)
};

// points[i] = T_{beta_i} o ... o T_{beta_1}(x0)
Orbit sequential_orbit(const std::vector<double>& schedule, double x0,
                       std::size_t n);

// Orbit engine for Monte Carlo ensembles. Integer-beta maps cannot be iterated
// in plain doubles: multiplying by 2 is exact in binary, so the doubling map
// drains one mantissa bit per step and every orbit hits 0 within ~53 steps.
// In lattice mode the state is a 128-bit fraction X and one step is
// X <- (beta X + C) mod 2^128 with C uniform on {0..beta-1}, which is the
// exact law of beta x mod 1 for a Lebesgue-random x0 carrying unobserved tail
// bits. Non-integer beta uses the plain double map, where rounding keeps the
// low bits alive.
class CircleWalker {
public:
    CircleWalker(std::uint64_t seed, bool exact_lattice);

    double value() const {
        // lattice readout keeps 53 bits so the double stays inside [0,1)
        return lattice_ ? static_cast<double>(hi_ >> 11) * 0x1.0p-53 : x_;
    }
    void step(double beta);

private:
    bool lattice_;
    std::uint64_t hi_ = 0, lo_ = 0;
    double x_ = 0.0;
    Rng rng_;
};

// true when every map parameter the walker will see is a small integer
bool all_integer_betas(const SystemSpec& sys);

// points[i] = f_{w_i} o ... o f_{w_1}(x0)
Orbit random_orbit(const RandomLYSystem& sys,
                   const std::vector<std::uint32_t>& word, double x0,
                   std::size_t n);

// ---------------------------------------------------------------------------
// densities
// ---------------------------------------------------------------------------

// Piecewise-constant density on a uniform grid over [0,1]; values are cell
// averages, so cell sums integrate exactly.
struct DensityApprox {
    std::size_t cells = 0;
    std::vector<double> values;

    double cell_width() const { return 1.0 / static_cast<double>(cells); }
    double integral() const;
    // integral over [a,b] within [0,1]
    double mass(double a, double b) const;
    // integral over the circle ball B(center, radius), wrapping mod 1
    double ball_mass(double center, double radius) const;
    double value_at(double x) const;
    // L1 distance against another density on the same grid
    double l1_distance(const DensityApprox& other) const;
};

// Orbit of the boundary point 1 under T_beta: 1, T(1), T^2(1), ...
// Terminates when the orbit hits 0 (within a rounding-growth tolerance) or
// after max_terms entries.
std::vector<double> orbit_of_one(double beta, std::size_t max_terms);

// Invariant density of T_beta: h(x) = (1/M) * sum_{n: x < T^n(1)} beta^{-n},
// series truncated once beta^{-n} < 1e-14 or the orbit of 1 hits 0.
DensityApprox parry_density(double beta, std::size_t orbit_terms,
                            std::size_t grid_cells);

// Occupation histogram of an orbit tail (indices >= burn_in), as a density.
DensityApprox occupation_histogram(const std::vector<double>& points,
                                   std::size_t grid_cells,
                                   std::size_t burn_in);

// One application of the transfer operator of T_beta to a grid density
// (projection of the exact pushforward back onto the grid).
void ulam_apply(double beta, DensityApprox& density);

struct SampleDensityResult {
    DensityApprox density;
    bool positive_everywhere = true;
    std::size_t nonpositive_cells = 0;
};

// Fibre density after pushing the flat density through the word prefix.
SampleDensityResult sample_measure_density(const RandomLYSystem& sys,
                                           const std::vector<std::uint32_t>& word_prefix,
                                           std::size_t grid_cells);

}  // namespace repplab
