#include "repplab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace repplab {

double beta_map_apply(double beta, double x) {
    if (!std::isfinite(beta) || !std::isfinite(x)) {
        throw std::invalid_argument("beta_map_apply: non-finite input");
    }
    if (beta <= 1.0) {
        throw std::invalid_argument("beta_map_apply: beta must exceed 1");
    }
    if (x == 1.0) x = 0.0;  // 0 ~ 1
    if (x < 0.0 || x >= 1.0) {
        throw std::invalid_argument("beta_map_apply: x outside [0,1)");
    }
    double y = beta * x;
    y -= std::floor(y);
    if (y >= 1.0) y = 0.0;  // floor rounding guard
    return y;
}

void BetaSchedule::validate() const {
    if (!(xi > 1.0)) {
        throw std::invalid_argument("BetaSchedule: xi must exceed 1");
    }
    if (!(c > 0.0) || !(beta_limit > 1.0 + c)) {
        throw std::invalid_argument("BetaSchedule: beta must exceed 1 + c");
    }
    if (length == 0) {
        throw std::invalid_argument("BetaSchedule: empty schedule");
    }
    // worst perturbation is at i = 1 with magnitude 1
    if (sign != PerturbationSign::plus && beta_limit - 1.0 <= 1.0 + c) {
        throw std::invalid_argument(
            "BetaSchedule: negative perturbation at i=1 drops below 1 + c");
    }
}

std::vector<double> make_schedule(const BetaSchedule& spec) {
    spec.validate();
    std::vector<double> betas(spec.length);
    for (std::size_t i = 1; i <= spec.length; ++i) {
        const double delta = std::pow(static_cast<double>(i), -spec.xi);
        double s = 1.0;
        if (spec.sign == PerturbationSign::minus) s = -1.0;
        if (spec.sign == PerturbationSign::alternating && (i % 2 == 0)) s = -1.0;
        double b = spec.beta_limit + s * delta;
        // keep |beta_i - beta| <= i^{-xi} after rounding
        while (std::abs(b - spec.beta_limit) > delta) {
            b = std::nextafter(b, spec.beta_limit);
        }
        if (!(b > 1.0 + spec.c)) {
            throw std::invalid_argument("make_schedule: beta_i fell below 1 + c");
        }
        betas[i - 1] = b;
    }
    return betas;
}

std::vector<double> constant_schedule(double beta, std::size_t length) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("constant_schedule: beta must exceed 1");
    }
    return std::vector<double>(length, beta);
}

void RandomLYSystem::validate() const {
    if (alphabet.empty()) {
        throw std::invalid_argument("RandomLYSystem: empty alphabet");
    }
    if (weights.size() != alphabet.size()) {
        throw std::invalid_argument("RandomLYSystem: weights/alphabet size mismatch");
    }
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("RandomLYSystem: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("RandomLYSystem: weights must sum to 1");
    }
    for (double b : alphabet) {
        if (!(b > 1.0)) {
            throw std::invalid_argument("RandomLYSystem: each map needs delta(f) > 1");
        }
    }
}

std::vector<std::uint32_t> sample_word(const RandomLYSystem& sys,
                                       std::size_t length, Rng& rng) {
    sys.validate();
    std::vector<double> cum(sys.weights.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < sys.weights.size(); ++k) {
        acc += sys.weights[k];
        cum[k] = acc;
    }
    cum.back() = 1.0;
    std::vector<std::uint32_t> word(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        word[i] = static_cast<std::uint32_t>(it - cum.begin());
    }
    return word;
}

std::vector<double> SequentialSystem::schedule(std::size_t length) const {
    if (!perturbed) return constant_schedule(beta, length);
    BetaSchedule spec;
    spec.beta_limit = beta;
    spec.xi = xi;
    spec.sign = sign;
    spec.length = length;
    spec.c = c;
    return make_schedule(spec);
}

std::string system_id(const SystemSpec& sys) {
    std::ostringstream os;
    if (const auto* seq = std::get_if<SequentialSystem>(&sys)) {
        os << "sequential(beta=" << seq->beta;
        if (seq->perturbed) os << ",xi=" << seq->xi;
        os << ")";
    } else {
        const auto& rnd = std::get<RandomLYSystem>(sys);
        os << "random(alphabet=";
        for (std::size_t k = 0; k < rnd.alphabet.size(); ++k) {
            if (k) os << ",";
            os << rnd.alphabet[k];
        }
        os << ")";
    }
    return os.str();
}

Orbit sequential_orbit(const std::vector<double>& schedule, double x0,
                       std::size_t n) {
    if (schedule.size() < n) {
        throw std::invalid_argument("sequential_orbit: schedule shorter than n");
    }
    Orbit orbit;
    orbit.x0 = x0;
    orbit.points.resize(n + 1);
    double x = (x0 == 1.0) ? 0.0 : x0;
    if (!(x >= 0.0) || x >= 1.0) {
        throw std::invalid_argument("sequential_orbit: x0 outside [0,1)");
    }
    orbit.points[0] = x;
    for (std::size_t i = 0; i < n; ++i) {
        x = beta_map_apply(schedule[i], x);
        orbit.points[i + 1] = x;
    }
    return orbit;
}

CircleWalker::CircleWalker(std::uint64_t seed, bool exact_lattice)
    : lattice_(exact_lattice), rng_(seed) {
    if (lattice_) {
        hi_ = rng_.next_u64();
        lo_ = rng_.next_u64();
    } else {
        x_ = rng_.uniform();
    }
}

void CircleWalker::step(double beta) {
    if (lattice_) {
        const auto b = static_cast<std::uint64_t>(beta);
        const std::uint64_t carry = rng_.next_u64() % b;
        const unsigned __int128 plo =
            static_cast<unsigned __int128>(lo_) * b + carry;
        const unsigned __int128 phi =
            static_cast<unsigned __int128>(hi_) * b +
            static_cast<std::uint64_t>(plo >> 64);
        lo_ = static_cast<std::uint64_t>(plo);
        hi_ = static_cast<std::uint64_t>(phi);  // integer part discarded
    } else {
        x_ = beta_map_apply(beta, x_);
    }
}

bool all_integer_betas(const SystemSpec& sys) {
    const auto is_small_int = [](double b) {
        return b > 1.0 && b <= 64.0 && b == std::floor(b);
    };
    if (const auto* seq = std::get_if<SequentialSystem>(&sys)) {
        return !seq->perturbed && is_small_int(seq->beta);
    }
    const auto& rnd = std::get<RandomLYSystem>(sys);
    for (double b : rnd.alphabet) {
        if (!is_small_int(b)) return false;
    }
    return true;
}

Orbit random_orbit(const RandomLYSystem& sys,
                   const std::vector<std::uint32_t>& word, double x0,
                   std::size_t n) {
    sys.validate();
    if (word.size() < n) {
        throw std::invalid_argument("random_orbit: word shorter than n");
    }
    Orbit orbit;
    orbit.x0 = x0;
    orbit.word.assign(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(n));
    orbit.points.resize(n + 1);
    double x = (x0 == 1.0) ? 0.0 : x0;
    if (!(x >= 0.0) || x >= 1.0) {
        throw std::invalid_argument("random_orbit: x0 outside [0,1)");
    }
    orbit.points[0] = x;
    for (std::size_t i = 0; i < n; ++i) {
        if (word[i] >= sys.alphabet.size()) {
            throw std::invalid_argument("random_orbit: letter outside alphabet");
        }
        x = beta_map_apply(sys.alphabet[word[i]], x);
        orbit.points[i + 1] = x;
    }
    return orbit;
}

double DensityApprox::integral() const {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc * cell_width();
}

double DensityApprox::mass(double a, double b) const {
    if (b <= a) return 0.0;
    a = std::max(a, 0.0);
    b = std::min(b, 1.0);
    const double w = cell_width();
    const auto lo = static_cast<std::size_t>(
        std::min(std::floor(a / w), static_cast<double>(cells - 1)));
    const auto hi = static_cast<std::size_t>(
        std::min(std::floor(b / w), static_cast<double>(cells - 1)));
    if (lo == hi) return values[lo] * (b - a);
    double acc = values[lo] * ((static_cast<double>(lo) + 1.0) * w - a);
    for (std::size_t k = lo + 1; k < hi; ++k) acc += values[k] * w;
    acc += values[hi] * (b - static_cast<double>(hi) * w);
    return acc;
}

double DensityApprox::ball_mass(double center, double radius) const {
    if (radius <= 0.0) return 0.0;
    if (radius >= 0.5) return integral();
    const double a = center - radius;
    const double b = center + radius;
    double acc = mass(std::max(a, 0.0), std::min(b, 1.0));
    if (a < 0.0) acc += mass(1.0 + a, 1.0);
    if (b > 1.0) acc += mass(0.0, b - 1.0);
    return acc;
}

double DensityApprox::value_at(double x) const {
    if (x < 0.0 || x >= 1.0) {
        throw std::invalid_argument("DensityApprox::value_at: x outside [0,1)");
    }
    const auto k = static_cast<std::size_t>(x * static_cast<double>(cells));
    return values[std::min(k, cells - 1)];
}

double DensityApprox::l1_distance(const DensityApprox& other) const {
    if (other.cells != cells) {
        throw std::invalid_argument("l1_distance: grid mismatch");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
        acc += std::abs(values[k] - other.values[k]);
    }
    return acc * cell_width();
}

std::vector<double> orbit_of_one(double beta, std::size_t max_terms) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("orbit_of_one: beta must exceed 1");
    }
    std::vector<double> pts;
    pts.reserve(std::min<std::size_t>(max_terms, 64));
    double x = 1.0;
    pts.push_back(x);
    // Rounding grows like beta^n; a point that lands within that envelope of
    // the lattice 0 ~ 1 is treated as an exact hit so the series terminates.
    double err = 64.0 * std::numeric_limits<double>::epsilon();
    for (std::size_t n = 1; n < max_terms; ++n) {
        double y = beta * x;
        y -= std::floor(y);
        err = std::min(err * beta, 1e-9);
        if (y < err || y > 1.0 - err) return pts;  // orbit hit 0
        pts.push_back(y);
        x = y;
    }
    return pts;
}

DensityApprox parry_density(double beta, std::size_t orbit_terms,
                            std::size_t grid_cells) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("parry_density: beta must exceed 1");
    }
    if (grid_cells == 0) {
        throw std::invalid_argument("parry_density: empty grid");
    }
    // series cutoff: beta^{-n} < 1e-14
    const auto cutoff = static_cast<std::size_t>(
        std::ceil(14.0 * std::log(10.0) / std::log(beta))) + 1;
    const std::size_t terms = std::min(orbit_terms, cutoff);
    const std::vector<double> orbit = orbit_of_one(beta, terms);

    DensityApprox d;
    d.cells = grid_cells;
    d.values.assign(grid_cells, 0.0);
    const double w = d.cell_width();
    double total = 0.0;  // sum_n beta^{-n} T^n(1) = M(beta), truncated
    double weight = 1.0;
    for (double endpoint : orbit) {
        // cell-averaged mass of weight * 1_{x < endpoint}
        const double full = endpoint / w;
        const auto nfull = static_cast<std::size_t>(std::floor(full));
        for (std::size_t k = 0; k < std::min(nfull, grid_cells); ++k) {
            d.values[k] += weight;
        }
        if (nfull < grid_cells) {
            d.values[nfull] += weight * (full - static_cast<double>(nfull));
        }
        total += weight * endpoint;
        weight /= beta;
    }
    if (!(total > 0.0)) {
        throw std::logic_error("parry_density: degenerate normalisation");
    }
    for (double& v : d.values) v /= total;
    return d;
}

DensityApprox occupation_histogram(const std::vector<double>& points,
                                   std::size_t grid_cells,
                                   std::size_t burn_in) {
    if (points.size() <= burn_in) {
        throw std::invalid_argument("occupation_histogram: orbit shorter than burn-in");
    }
    DensityApprox d;
    d.cells = grid_cells;
    d.values.assign(grid_cells, 0.0);
    const double g = static_cast<double>(grid_cells);
    std::size_t count = 0;
    for (std::size_t i = burn_in; i < points.size(); ++i) {
        auto k = static_cast<std::size_t>(points[i] * g);
        if (k >= grid_cells) k = grid_cells - 1;
        d.values[k] += 1.0;
        ++count;
    }
    const double norm = g / static_cast<double>(count);
    for (double& v : d.values) v *= norm;
    return d;
}

void ulam_apply(double beta, DensityApprox& density) {
    const std::size_t g = density.cells;
    const double w = density.cell_width();
    std::vector<double> next(g, 0.0);
    // image of cell k is an interval of length beta*w carrying density v/beta
    const auto deposit = [&](double lo, double len, double dens) {
        while (len > 0.0) {
            const double seg = std::min(len, 1.0 - lo);
            const double hi = lo + seg;
            const double flo = lo / w;
            const double fhi = hi / w;
            auto klo = static_cast<std::size_t>(std::floor(flo));
            auto khi = static_cast<std::size_t>(std::floor(fhi));
            klo = std::min(klo, g - 1);
            khi = std::min(khi, g - 1);
            if (klo == khi) {
                next[klo] += dens * seg;
            } else {
                next[klo] += dens * ((static_cast<double>(klo) + 1.0) * w - lo);
                for (std::size_t k = klo + 1; k < khi; ++k) next[k] += dens * w;
                next[khi] += dens * (hi - static_cast<double>(khi) * w);
            }
            len -= seg;
            lo = 0.0;
        }
    };
    for (std::size_t k = 0; k < g; ++k) {
        if (density.values[k] == 0.0) continue;
        double lo = beta * static_cast<double>(k) * w;
        lo -= std::floor(lo);
        if (lo >= 1.0) lo = 0.0;
        deposit(lo, beta * w, density.values[k] / beta);
    }
    // next holds per-cell mass; convert back to density and renormalise
    double total = 0.0;
    for (double m : next) total += m;
    const double scale = 1.0 / (total * w);
    for (std::size_t k = 0; k < g; ++k) density.values[k] = next[k] * scale;
}

SampleDensityResult sample_measure_density(const RandomLYSystem& sys,
                                           const std::vector<std::uint32_t>& word_prefix,
                                           std::size_t grid_cells) {
    sys.validate();
    if (grid_cells < 64) {
        throw std::invalid_argument("sample_measure_density: need >= 64 cells");
    }
    SampleDensityResult res;
    res.density.cells = grid_cells;
    res.density.values.assign(grid_cells, 1.0);
    for (std::uint32_t letter : word_prefix) {
        if (letter >= sys.alphabet.size()) {
            throw std::invalid_argument("sample_measure_density: letter outside alphabet");
        }
        ulam_apply(sys.alphabet[letter], res.density);
    }
    for (double v : res.density.values) {
        if (!(v > 0.0)) ++res.nonpositive_cells;
    }
    res.positive_everywhere = (res.nonpositive_cells == 0);
    return res;
}

}  // namespace repplab
