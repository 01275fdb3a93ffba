#include "repplab/pointprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace repplab {

std::vector<Exceedance> scan_exceedances(const std::vector<double>& series,
                                         double u) {
    if (!std::isfinite(u)) {
        throw std::invalid_argument("scan_exceedances: non-finite threshold");
    }
    std::vector<Exceedance> out;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i] > u) {
            out.push_back({static_cast<std::int64_t>(i), series[i] - u});
        }
    }
    return out;
}

std::vector<ClusterRecord> detect_clusters(const std::vector<Exceedance>& exc,
                                           std::int64_t q,
                                           std::int64_t series_length) {
    if (q < 0) throw std::invalid_argument("detect_clusters: q must be >= 0");
    std::vector<ClusterRecord> clusters;
    ClusterRecord cur;
    for (std::size_t k = 0; k < exc.size(); ++k) {
        if (k > 0 && exc[k].index <= exc[k - 1].index) {
            throw std::invalid_argument("detect_clusters: indices not increasing");
        }
        if (!cur.exceedance_indices.empty() &&
            exc[k].index - cur.escape_index() > q) {
            clusters.push_back(std::move(cur));
            cur = ClusterRecord{};
        }
        cur.exceedance_indices.push_back(exc[k].index);
        cur.excesses.push_back(exc[k].excess);
    }
    if (!cur.exceedance_indices.empty()) {
        cur.truncated = (series_length - cur.escape_index() - 1) < q;
        clusters.push_back(std::move(cur));
    }
    return clusters;
}

std::string mark_type_name(MarkType m) {
    switch (m) {
        case MarkType::aot: return "AOT";
        case MarkType::pot: return "POT";
        case MarkType::repp: default: return "REPP";
    }
}

MarkType mark_type_from_name(const std::string& name) {
    if (name == "AOT" || name == "aot") return MarkType::aot;
    if (name == "POT" || name == "pot") return MarkType::pot;
    if (name == "REPP" || name == "repp") return MarkType::repp;
    throw std::invalid_argument("unknown mark type: " + name);
}

double compute_mark(const ClusterRecord& cluster, MarkType mark_type) {
    if (cluster.exceedance_indices.empty()) {
        throw std::invalid_argument("compute_mark: empty cluster");
    }
    switch (mark_type) {
        case MarkType::aot: {
            double acc = 0.0;
            for (double e : cluster.excesses) acc += e;
            return acc;
        }
        case MarkType::pot: {
            double peak = 0.0;
            for (double e : cluster.excesses) peak = std::max(peak, e);
            return peak;
        }
        case MarkType::repp:
        default:
            return static_cast<double>(cluster.excesses.size());
    }
}

MarkedMeasure build_mrepp(const std::vector<ClusterRecord>& clusters, double u,
                          std::int64_t q, MarkType mark_type, double v_n) {
    if (!std::isfinite(v_n) || !(v_n > 0.0)) {
        throw std::invalid_argument("build_mrepp: v_n must be finite and positive");
    }
    MarkedMeasure m;
    m.mark_type = mark_type;
    m.u_n = u;
    m.v_n = v_n;
    m.q = q;
    m.times.reserve(clusters.size());
    m.marks.reserve(clusters.size());
    for (const auto& c : clusters) {
        m.times.push_back(static_cast<double>(c.escape_index()) / v_n);
        m.marks.push_back(compute_mark(c, mark_type));
    }
    return m;
}

MarkedMeasure build_mrepp(const std::vector<double>& series, double u,
                          std::int64_t q, MarkType mark_type, double v_n) {
    const auto exc = scan_exceedances(series, u);
    const auto clusters =
        detect_clusters(exc, q, static_cast<std::int64_t>(series.size()));
    return build_mrepp(clusters, u, q, mark_type, v_n);
}

std::vector<double> evaluate_mrepp(const MarkedMeasure& measure,
                                   const std::vector<Interval>& intervals) {
    std::vector<std::size_t> order(intervals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return intervals[a].a < intervals[b].a;
    });
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        if (intervals[order[k]].b > intervals[order[k + 1]].a) {
            throw std::invalid_argument("evaluate_mrepp: overlapping intervals");
        }
    }
    std::vector<double> masses(intervals.size(), 0.0);
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto lo = std::lower_bound(measure.times.begin(),
                                         measure.times.end(), intervals[i].a);
        const auto hi = std::lower_bound(measure.times.begin(),
                                         measure.times.end(), intervals[i].b);
        for (auto it = lo; it != hi; ++it) {
            masses[i] += measure.marks[it - measure.times.begin()];
        }
    }
    return masses;
}

void write_mrepp(std::ostream& os, const MarkedMeasure& measure) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "# mrepp v1 mark_type=%s u_n=%.17g v_n=%.17g q=%lld\n",
                  mark_type_name(measure.mark_type).c_str(), measure.u_n,
                  measure.v_n, static_cast<long long>(measure.q));
    os << buf;
    for (std::size_t i = 0; i < measure.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", measure.times[i],
                      measure.marks[i]);
        os << buf;
    }
}

MarkedMeasure read_mrepp(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("# mrepp v1 ", 0) != 0) {
        throw std::invalid_argument("read_mrepp: bad header");
    }
    MarkedMeasure m;
    std::istringstream hs(header.substr(11));
    std::string token;
    while (hs >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::string val = token.substr(eq + 1);
        if (key == "mark_type") m.mark_type = mark_type_from_name(val);
        else if (key == "u_n") m.u_n = std::stod(val);
        else if (key == "v_n") m.v_n = std::stod(val);
        else if (key == "q") m.q = std::stoll(val);
    }
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("read_mrepp: bad row: " + line);
        }
        m.times.push_back(std::stod(line.substr(0, comma)));
        m.marks.push_back(std::stod(line.substr(comma + 1)));
    }
    return m;
}

std::int64_t BlockPartition::block_of(std::int64_t index) const {
    if (index < start_index || index >= tail_start) return -1;
    const auto it = std::upper_bound(L.begin(), L.end(), index);
    return (it - L.begin()) - 1;
}

BlockPartition build_blocks(const std::vector<double>& Fbar, std::int64_t k_n,
                            std::int64_t t_n_star, int H, std::int64_t n,
                            std::int64_t start_index) {
    if (k_n < 1) throw std::invalid_argument("build_blocks: k_n must be >= 1");
    if (t_n_star < 0) throw std::invalid_argument("build_blocks: t_n* must be >= 0");
    const auto horizon = static_cast<std::int64_t>(Fbar.size());
    if (horizon != static_cast<std::int64_t>(H) * n) {
        throw std::invalid_argument("build_blocks: Fbar length must be H*n");
    }
    if (start_index < 0 || start_index >= horizon) {
        throw std::invalid_argument("build_blocks: start index out of range");
    }

    BlockPartition bp;
    bp.k_n = k_n;
    bp.t_n_star = t_n_star;
    bp.start_index = start_index;
    bp.horizon = horizon;
    bp.H = H;
    bp.n = n;

    // prefix sums over the blocked range; every inequality below is evaluated
    // on these same prefix differences
    std::vector<double> prefix(static_cast<std::size_t>(horizon - start_index) + 1,
                               0.0);
    for (std::int64_t j = start_index; j < horizon; ++j) {
        const double f = Fbar[static_cast<std::size_t>(j)];
        if (f < 0.0) throw std::invalid_argument("build_blocks: negative Fbar");
        bp.Fbar_max = std::max(bp.Fbar_max, f);
        prefix[static_cast<std::size_t>(j - start_index + 1)] =
            prefix[static_cast<std::size_t>(j - start_index)] + f;
    }
    bp.F_star = prefix.back();
    if (!(bp.F_star > 0.0)) {
        throw std::invalid_argument("build_blocks: F*_{H,n} must be positive");
    }
    const double target = bp.F_star / static_cast<double>(k_n);
    bp.epsilon = (static_cast<double>(t_n_star) + 1.0) * bp.Fbar_max *
                 static_cast<double>(k_n) / bp.F_star;
    const double gap_target = bp.epsilon * target;

    const auto sum_range = [&](std::int64_t a, std::int64_t b) {
        return prefix[static_cast<std::size_t>(b - start_index)] -
               prefix[static_cast<std::size_t>(a - start_index)];
    };

    bp.L.assign(static_cast<std::size_t>(k_n) + 1, start_index);
    std::int64_t begin = start_index;
    for (std::int64_t i = 0; i < k_n; ++i) {
        // largest ell with sum over [begin, begin+ell) <= target
        std::int64_t lo = 0, hi = horizon - begin;
        while (lo < hi) {
            const std::int64_t mid = lo + (hi - lo + 1) / 2;
            if (sum_range(begin, begin + mid) <= target) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        const std::int64_t ell = lo;
        const std::int64_t end = begin + ell;
        bp.ell.push_back(ell);
        bp.block_sums.push_back(sum_range(begin, end));
        bp.L[static_cast<std::size_t>(i) + 1] = end;

        // largest t with sum over [end - t, end) <= epsilon * target
        std::int64_t tlo = 0, thi = end - start_index;
        while (tlo < thi) {
            const std::int64_t mid = tlo + (thi - tlo + 1) / 2;
            if (sum_range(end - mid, end) <= gap_target) {
                tlo = mid;
            } else {
                thi = mid - 1;
            }
        }
        bp.t.push_back(std::min(tlo, ell));
        if (!(t_n_star < tlo && tlo < ell)) bp.t_invariant_ok = false;
        begin = end;
    }
    bp.tail_start = begin;
    bp.tail_sum = sum_range(begin, horizon);

    for (std::int64_t i = 0; i < k_n; ++i) {
        const double s = bp.block_sums[static_cast<std::size_t>(i)];
        if (!(target - bp.Fbar_max <= s && s <= target)) bp.estimate_ok = false;
    }
    bp.tail_ok = bp.tail_sum <= static_cast<double>(k_n) * bp.Fbar_max;
    return bp;
}

std::int64_t default_k_n(std::int64_t n) {
    const double l = std::floor(std::log(static_cast<double>(n)));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(l * l));
}

std::int64_t default_t_star(std::int64_t n) {
    const double l = std::log(static_cast<double>(n));
    return static_cast<std::int64_t>(std::floor(l * l));
}

QProfile estimate_q_profile(const std::vector<std::int64_t>& n_grid,
                            const std::vector<std::vector<std::int64_t>>& gap_samples,
                            std::int64_t j_max) {
    if (j_max < 0) throw std::invalid_argument("estimate_q: j_max must be >= 0");
    if (n_grid.size() != gap_samples.size() || n_grid.size() < 2) {
        throw std::invalid_argument("estimate_q: need a matching n grid of size >= 2");
    }
    QProfile prof;
    prof.n_grid = n_grid;
    prof.j_max = j_max;
    prof.min_return.assign(static_cast<std::size_t>(j_max) + 1,
                           std::vector<std::int64_t>(n_grid.size(), -1));

    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        std::vector<std::int64_t> gaps = gap_samples[g];
        std::sort(gaps.begin(), gaps.end());
        for (std::int64_t j = 0; j <= j_max; ++j) {
            // a level-j escape returning after r steps is a gap r > j
            const auto it = std::upper_bound(gaps.begin(), gaps.end(), j);
            if (it != gaps.end()) {
                prof.min_return[static_cast<std::size_t>(j)][g] = *it;
            }
        }
    }

    prof.grows.assign(static_cast<std::size_t>(j_max) + 1, false);
    for (std::int64_t j = 0; j <= j_max; ++j) {
        const auto& row = prof.min_return[static_cast<std::size_t>(j)];
        bool ok = true;
        for (std::size_t g = 0; g + 1 < row.size(); ++g) {
            const bool both_unbounded = row[g] < 0 && row[g + 1] < 0;
            const bool increased = row[g + 1] < 0 || (row[g] >= 0 && row[g + 1] > row[g]);
            if (!(both_unbounded || increased)) ok = false;
        }
        // a short periodic return stays pinned near j; genuine escapes end far
        const std::int64_t floor_needed = 16 * (j + 1);
        if (row.back() >= 0 && row.back() < floor_needed) ok = false;
        prof.grows[static_cast<std::size_t>(j)] = ok;
        if (ok && !prof.determined) {
            prof.q = j;
            prof.determined = true;
        }
    }
    return prof;
}

}  // namespace repplab
