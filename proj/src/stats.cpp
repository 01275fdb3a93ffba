#include "repplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace repplab {

std::string TestReport::to_json_string() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["null"] = null_reference;
    j["statistic"] = statistic;
    j["p_value"] = p_value;
    j["sample_size"] = sample_size;
    j["verdict"] = verdict;
    j["n"] = n;
    j["ensemble"] = ensemble;
    j["seed"] = seed;
    return j.dump();
}

double kolmogorov_p_value(double d, std::int64_t n) {
    if (d <= 0.0) return 1.0;
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double acc = 0.0;
    for (int k = 1; k <= 128; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        acc += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(acc, 0.0, 1.0);
}

namespace {

// regularized upper incomplete gamma Q(a, x)
double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        // series for P(a,x)
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - lg);
        return 1.0 - p;
    }
    // continued fraction for Q(a,x), modified Lentz
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - lg);
}

double sample_sigma_of_mean(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / (static_cast<double>(values.size()) *
                            (static_cast<double>(values.size()) - 1.0)));
}

}  // namespace

double chi2_sf(double x, double df) {
    return gamma_q(0.5 * df, 0.5 * x);
}

ThetaEstimate estimate_theta(const EnsembleRun& run, int bootstrap_resamples) {
    ThetaEstimate est;
    const std::size_t E = run.orbits.size();
    std::vector<std::int64_t> esc(E, 0), exc(E, 0);
    for (std::size_t o = 0; o < E; ++o) {
        for (const auto& c : run.orbits[o].clusters) {
            if (c.escape_index() >= run.burn_in) ++esc[o];
            for (std::int64_t idx : c.exceedance_indices) {
                if (idx >= run.burn_in) ++exc[o];
            }
        }
        est.escapes += esc[o];
        est.exceedances += exc[o];
    }
    if (est.exceedances == 0) return est;  // undefined, signalled via flag
    est.defined = true;
    est.low_sample = est.escapes < 100;
    est.value = static_cast<double>(est.escapes) / static_cast<double>(est.exceedances);

    std::vector<double> replicas;
    replicas.reserve(static_cast<std::size_t>(bootstrap_resamples));
    for (int b = 0; b < bootstrap_resamples; ++b) {
        Rng rng(derive_seed(run.seeds.master, "theta_bootstrap",
                            static_cast<std::uint64_t>(b)));
        std::int64_t se_sum = 0, xe_sum = 0;
        for (std::size_t o = 0; o < E; ++o) {
            const std::size_t pick = rng.index(E);
            se_sum += esc[pick];
            xe_sum += exc[pick];
        }
        if (xe_sum > 0) {
            replicas.push_back(static_cast<double>(se_sum) /
                               static_cast<double>(xe_sum));
        }
    }
    if (replicas.size() > 1) {
        double mean = std::accumulate(replicas.begin(), replicas.end(), 0.0) /
                      static_cast<double>(replicas.size());
        double acc = 0.0;
        for (double r : replicas) acc += (r - mean) * (r - mean);
        est.se = std::sqrt(acc / (static_cast<double>(replicas.size()) - 1.0));
    }
    return est;
}

double MultiplicityEcdf::at(double x) const {
    const auto it = std::upper_bound(sorted_marks.begin(), sorted_marks.end(), x);
    return static_cast<double>(it - sorted_marks.begin()) /
           static_cast<double>(sorted_marks.size());
}

MultiplicityEcdf empirical_multiplicity(const EnsembleRun& run, MarkType mark_type) {
    MultiplicityEcdf e;
    for (const auto& orbit : run.orbits) {
        for (const auto& c : orbit.clusters) {
            if (c.escape_index() < run.burn_in) continue;
            const auto size = static_cast<std::size_t>(c.kappa() + 1);
            if (e.size_histogram.size() < size) e.size_histogram.resize(size, 0);
            ++e.size_histogram[size - 1];
            const double mark = compute_mark(c, mark_type);
            if (std::isinf(mark)) {
                ++e.infinite_count;
            } else {
                e.sorted_marks.push_back(run.a_n * mark);
            }
        }
    }
    std::sort(e.sorted_marks.begin(), e.sorted_marks.end());
    return e;
}

TestReport ks_statistic(const std::vector<double>& sorted_sample,
                        const std::function<double(double)>& cdf,
                        const std::string& null_reference) {
    const auto n = static_cast<std::int64_t>(sorted_sample.size());
    if (n < 1) throw std::invalid_argument("ks_statistic: empty sample");
    double d = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double f = cdf(sorted_sample[static_cast<std::size_t>(i)]);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d = std::max(d, std::max(std::abs(hi - f), std::abs(f - lo)));
    }
    TestReport r;
    r.name = "ks";
    r.null_reference = null_reference;
    r.statistic = d;
    r.p_value = kolmogorov_p_value(d, n);
    r.sample_size = n;
    r.verdict = r.p_value > 0.01 ? "pass" : "reject";
    return r;
}

TestReport chi_square_geometric(const std::vector<std::int64_t>& size_histogram,
                                double theta) {
    if (!(theta > 0.0) || theta > 1.0) {
        throw std::invalid_argument("chi_square_geometric: theta must lie in (0,1]");
    }
    TestReport r;
    r.name = "chi_square_geometric";
    r.null_reference = "cluster sizes ~ geometric(theta)";
    std::int64_t total = 0;
    for (std::int64_t c : size_histogram) total += c;
    r.sample_size = total;
    if (total < 30) {
        r.verdict = "inconclusive";
        return r;
    }
    const auto N = static_cast<double>(total);
    // retain bins 1..K-1 and pool the geometric tail into bin K so that every
    // expected count stays >= 5
    std::size_t K = size_histogram.size();
    const auto expected_at = [&](std::size_t k1) {  // bin for size k1, 1-based
        return N * repp_multiplicity(theta, static_cast<std::int64_t>(k1));
    };
    const auto tail_expected = [&](std::size_t k1) {  // sizes >= k1
        return N * std::pow(1.0 - theta, static_cast<double>(k1 - 1));
    };
    while (K > 1 && (tail_expected(K) < 5.0 || expected_at(K - 1) < 5.0)) --K;
    if (K < 1) {
        r.verdict = "inconclusive";
        return r;
    }
    double stat = 0.0;
    std::int64_t bins = 0;
    std::int64_t seen = 0;
    for (std::size_t k = 1; k < K; ++k) {
        const double expect = expected_at(k);
        const auto obs = static_cast<double>(size_histogram[k - 1]);
        stat += (obs - expect) * (obs - expect) / expect;
        seen += size_histogram[k - 1];
        ++bins;
    }
    {
        const double expect = tail_expected(K);
        const auto obs = static_cast<double>(total - seen);
        stat += (obs - expect) * (obs - expect) / expect;
        ++bins;
    }
    r.statistic = stat;
    if (bins < 2) {
        // single pooled bin: no degrees of freedom left to test
        r.p_value = 1.0;
        r.verdict = "inconclusive";
        return r;
    }
    r.p_value = chi2_sf(stat, static_cast<double>(bins - 1));
    r.verdict = r.p_value > 0.01 ? "pass" : "reject";
    return r;
}

TestReport interarrival_test(const std::vector<double>& times, double theta) {
    std::vector<double> gaps;
    gaps.reserve(times.size());
    for (std::size_t i = 1; i < times.size(); ++i) {
        gaps.push_back(times[i] - times[i - 1]);
    }
    std::sort(gaps.begin(), gaps.end());
    auto report = ks_statistic(
        gaps, [&](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-theta * x); },
        "gaps ~ Exp(theta)");
    report.name = "interarrival_ks";
    return report;
}

TestReport interarrival_test(const EnsembleRun& run, double theta) {
    const std::size_t E = run.orbits.size();
    if (E == 0) throw std::invalid_argument("interarrival_test: empty run");
    const double v_n = run.freq.v_defined
                           ? run.freq.v_n
                           : static_cast<double>(run.n) / run.tau;
    // group size keeps the superposed mean gap at least 50 lattice steps wide
    const auto G = std::max<std::size_t>(
        1, std::min(E, static_cast<std::size_t>(v_n / (50.0 * theta))));
    std::vector<double> gaps;
    std::vector<double> times;
    for (std::size_t base = 0; base + G <= E; base += G) {
        times.clear();
        for (std::size_t o = base; o < base + G; ++o) {
            for (const auto& c : run.orbits[o].clusters) {
                times.push_back(static_cast<double>(c.escape_index()) / v_n);
            }
        }
        std::sort(times.begin(), times.end());
        for (std::size_t i = 1; i < times.size(); ++i) {
            gaps.push_back(static_cast<double>(G) * (times[i] - times[i - 1]));
        }
    }
    std::sort(gaps.begin(), gaps.end());
    auto report = ks_statistic(
        gaps, [&](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-theta * x); },
        "superposed atom gaps ~ Exp(theta)");
    report.name = "interarrival_ks";
    report.n = run.n;
    report.ensemble = static_cast<std::int64_t>(E);
    report.seed = run.seeds.master;
    return report;
}

DiagnosticValue dprime_diagnostic(const EnsembleRun& run,
                                  const BlockPartition& blocks) {
    const std::size_t E = run.orbits.size();
    std::vector<double> per_orbit(E, 0.0);
    for (std::size_t o = 0; o < E; ++o) {
        const auto& orbit = run.orbits[o];
        std::vector<std::int64_t> exceed;
        for (const auto& c : orbit.clusters) {
            for (std::int64_t idx : c.exceedance_indices) exceed.push_back(idx);
        }
        double count = 0.0;
        for (const auto& c : orbit.clusters) {
            const std::int64_t e = c.escape_index();
            std::int64_t upper;
            if (e >= blocks.tail_start) {
                upper = blocks.horizon;
            } else {
                const std::int64_t blk = blocks.block_of(e);
                if (blk < 0) continue;  // before the blocked range
                upper = blocks.L[static_cast<std::size_t>(blk) + 1];
            }
            const auto lo = std::upper_bound(exceed.begin(), exceed.end(), e);
            const auto hi = std::lower_bound(exceed.begin(), exceed.end(), upper);
            count += static_cast<double>(hi - lo);
        }
        per_orbit[o] = count;
    }
    DiagnosticValue v;
    for (double c : per_orbit) v.value += c;
    v.value /= static_cast<double>(E);
    v.mc_sigma = sample_sigma_of_mean(per_orbit, v.value);
    return v;
}

UlcTable ulc_diagnostic(const EnsembleRun& run, const BlockPartition& blocks,
                        const std::vector<double>& y_grid) {
    UlcTable table;
    table.y = y_grid;
    table.block_sum.assign(y_grid.size(), 0.0);
    table.trimmed_sum.assign(y_grid.size(), 0.0);
    table.tail = 0.0;
    for (double y : y_grid) {
        if (!(y > 0.0)) throw std::invalid_argument("ulc_diagnostic: y must be > 0");
    }
    const std::int64_t q = run.q;
    if (q == 0) return table;  // delta vanishes identically

    const auto E = static_cast<double>(run.orbits.size());
    // contribution of one cluster to delta_{n,s,l} integrated against e^{-yx}:
    // (1 - e^{-y m}) / y for each set the cluster belongs to
    const auto add_delta = [&](std::int64_t s, std::int64_t len,
                               std::int64_t f, std::int64_t kappa,
                               double weight, double* acc) {
        if (len <= 0) return;
        const std::int64_t end = s + len;
        if (f < s || f >= end) return;
        const std::int64_t kcap = len / q;
        if (kappa >= 1 && kappa <= kcap) {
            if (f >= end - kappa * q) *acc += weight;
        } else if (kappa > kcap) {
            *acc += weight;
        }
        if (f >= end - q) *acc += weight;  // boundary B term
    };

    for (const auto& orbit : run.orbits) {
        for (const auto& c : orbit.clusters) {
            const std::int64_t f = c.first_index();
            const std::int64_t kappa = c.kappa();
            const double mark = run.a_n * compute_mark(c, MarkType::aot);
            for (std::size_t yi = 0; yi < y_grid.size(); ++yi) {
                const double y = y_grid[yi];
                const double w =
                    (std::isinf(mark) ? 1.0 : 1.0 - std::exp(-y * mark)) / y;
                const std::int64_t blk = blocks.block_of(f);
                if (blk >= 0) {
                    const std::int64_t s = blocks.L[static_cast<std::size_t>(blk)];
                    const std::int64_t len = blocks.ell[static_cast<std::size_t>(blk)];
                    add_delta(s, len, f, kappa, w, &table.block_sum[yi]);
                    add_delta(s, len - blocks.t[static_cast<std::size_t>(blk)], f,
                              kappa, w, &table.trimmed_sum[yi]);
                }
            }
            if (f >= blocks.tail_start) {
                const double w1 =
                    std::isinf(mark) ? 1.0 : 1.0 - std::exp(-mark);  // y = 1
                add_delta(blocks.tail_start, blocks.horizon - blocks.tail_start,
                          f, kappa, w1, &table.tail);
            }
        }
    }
    for (std::size_t yi = 0; yi < y_grid.size(); ++yi) {
        table.block_sum[yi] /= E;
        table.trimmed_sum[yi] /= E;
    }
    table.tail /= E;
    return table;
}

LaplaceTable laplace_convergence(const EnsembleRun& run,
                                 const CompoundPoissonModel& model,
                                 const std::vector<Interval>& intervals,
                                 const std::vector<double>& y_grid) {
    const std::size_t E = run.orbits.size();
    const std::size_t ni = intervals.size();
    const std::size_t ny = y_grid.size();
    const double v_n = run.freq.v_defined
                           ? run.freq.v_n
                           : static_cast<double>(run.n) / run.tau;

    // per-orbit masses per interval
    std::vector<double> psi_sum(ny * ni, 0.0), psi_sq(ny * ni, 0.0);
    std::vector<double> mass(ni, 0.0);
    const MarkType mt = model.mark_type;
    for (std::size_t o = 0; o < E; ++o) {
        std::fill(mass.begin(), mass.end(), 0.0);
        for (const auto& c : run.orbits[o].clusters) {
            const double time = static_cast<double>(c.escape_index()) / v_n;
            for (std::size_t j = 0; j < ni; ++j) {
                // A_n(I) sums the cluster marks of atoms landing in I
                if (time >= intervals[j].a && time < intervals[j].b) {
                    mass[j] += compute_mark(c, mt);
                    break;
                }
            }
        }
        for (std::size_t yi = 0; yi < ny; ++yi) {
            for (std::size_t j = 0; j < ni; ++j) {
                const double v = std::exp(-y_grid[yi] * run.a_n * mass[j]);
                psi_sum[yi * ni + j] += v;
                psi_sq[yi * ni + j] += v * v;
            }
        }
    }

    LaplaceTable table;
    table.cells.reserve(ny * ni);
    for (std::size_t yi = 0; yi < ny; ++yi) {
        for (std::size_t j = 0; j < ni; ++j) {
            LaplaceCell cell;
            cell.y = y_grid[yi];
            cell.interval = intervals[j];
            const double mean = psi_sum[yi * ni + j] / static_cast<double>(E);
            cell.psi_hat = mean;
            const double var =
                (psi_sq[yi * ni + j] / static_cast<double>(E) - mean * mean) /
                static_cast<double>(E);
            cell.mc_sigma = var > 0.0 ? std::sqrt(var) : 0.0;
            cell.psi_theory = compound_poisson_laplace(model, {intervals[j]},
                                                       {y_grid[yi]});
            if (std::abs(cell.psi_hat - cell.psi_theory) <= 3.0 * cell.mc_sigma) {
                ++table.within_3sigma;
            }
            table.cells.push_back(cell);
        }
    }
    return table;
}

CorrDecay correlation_decay_diagnostic(const SystemSpec& sys, double a, double b,
                                       const std::vector<std::int64_t>& t_grid,
                                       std::int64_t i0, std::size_t ensemble,
                                       std::uint64_t seed) {
    if (!(a < b) || a < 0.0 || b > 1.0) {
        throw std::invalid_argument("correlation_decay: bad indicator interval");
    }
    std::int64_t t_max = 0;
    for (std::int64_t t : t_grid) t_max = std::max(t_max, t);
    const auto horizon = static_cast<std::size_t>(i0 + t_max);

    std::vector<double> schedule;
    const RandomLYSystem* rnd = std::get_if<RandomLYSystem>(&sys);
    std::vector<std::uint32_t> word;
    if (const auto* seq = std::get_if<SequentialSystem>(&sys)) {
        schedule = seq->schedule(horizon);
    } else {
        Rng wrng(derive_seed(seed, "corr_word", 0));
        word = sample_word(*rnd, horizon, wrng);
    }

    const std::size_t nt = t_grid.size();
    const bool lattice = all_integer_betas(sys);
    std::vector<double> base_sum(nt, 0.0), off_sum(nt, 0.0), prod_sum(nt, 0.0),
        prod_sq(nt, 0.0);
    for (std::size_t o = 0; o < ensemble; ++o) {
        CircleWalker walker(derive_seed(seed, "corr_orbit", o), lattice);
        std::vector<double> tail(static_cast<std::size_t>(t_max) + 1);
        for (std::int64_t i = 0; i < i0; ++i) {
            walker.step(rnd ? rnd->alphabet[word[static_cast<std::size_t>(i)]]
                            : schedule[static_cast<std::size_t>(i)]);
        }
        tail[0] = walker.value();
        for (std::int64_t i = 0; i < t_max; ++i) {
            walker.step(
                rnd ? rnd->alphabet[word[static_cast<std::size_t>(i0 + i)]]
                    : schedule[static_cast<std::size_t>(i0 + i)]);
            tail[static_cast<std::size_t>(i) + 1] = walker.value();
        }
        const double base = (tail[0] >= a && tail[0] < b) ? 1.0 : 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
            const double off = (tail[static_cast<std::size_t>(t_grid[k])] >= a &&
                                tail[static_cast<std::size_t>(t_grid[k])] < b)
                                   ? 1.0
                                   : 0.0;
            base_sum[k] += base;
            off_sum[k] += off;
            prod_sum[k] += base * off;
            prod_sq[k] += base * off;  // indicator product squares to itself
        }
    }

    CorrDecay out;
    const auto E = static_cast<double>(ensemble);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t fitted = 0;
    for (std::size_t k = 0; k < nt; ++k) {
        CorrDecayPoint p;
        p.t = t_grid[k];
        const double mb = base_sum[k] / E;
        const double mo = off_sum[k] / E;
        const double mp = prod_sum[k] / E;
        p.cov = mp - mb * mo;
        const double var = (prod_sq[k] / E - mp * mp) / E;
        p.sigma = var > 0.0 ? std::sqrt(var) : 0.0;
        out.points.push_back(p);
        if (p.t >= 1 && std::abs(p.cov) > 3.0 * p.sigma && p.cov != 0.0) {
            const auto xt = static_cast<double>(p.t);
            const double yv = std::log(std::abs(p.cov));
            sx += xt;
            sy += yv;
            sxx += xt * xt;
            sxy += xt * yv;
            ++fitted;
        }
    }
    if (fitted >= 2) {
        const auto fn = static_cast<double>(fitted);
        out.fitted_log_slope = (fn * sxy - sx * sy) / (fn * sxx - sx * sx);
    }
    return out;
}

}  // namespace repplab
