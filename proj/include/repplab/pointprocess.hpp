#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace repplab {

// ---------------------------------------------------------------------------
// exceedances and q-gap clusters
// ---------------------------------------------------------------------------

struct Exceedance {
    std::int64_t index = 0;
    double excess = 0.0;  // X_i - u_n, may be +inf
};

std::vector<Exceedance> scan_exceedances(const std::vector<double>& series,
                                         double u);

// A maximal run of exceedances whose consecutive gaps are <= q. The run ends
// with an escape at its last exceedance; kappa + 1 is the cluster size.
struct ClusterRecord {
    std::vector<std::int64_t> exceedance_indices;
    std::vector<double> excesses;
    bool truncated = false;  // fewer than q clean indices follow the escape

    std::int64_t kappa() const {
        return static_cast<std::int64_t>(exceedance_indices.size()) - 1;
    }
    std::int64_t first_index() const { return exceedance_indices.front(); }
    std::int64_t escape_index() const { return exceedance_indices.back(); }
};

std::vector<ClusterRecord> detect_clusters(const std::vector<Exceedance>& exc,
                                           std::int64_t q,
                                           std::int64_t series_length);

enum class MarkType { aot, pot, repp };

std::string mark_type_name(MarkType m);
MarkType mark_type_from_name(const std::string& name);

// AOT: summed excesses, POT: peak excess, REPP: exceedance count
double compute_mark(const ClusterRecord& cluster, MarkType mark_type);

// ---------------------------------------------------------------------------
// marked point measures on rescaled time
// ---------------------------------------------------------------------------

struct Interval {
    double a = 0.0;
    double b = 0.0;  // half-open [a, b)
    double length() const { return b - a; }
};

struct MarkedMeasure {
    MarkType mark_type = MarkType::aot;
    double u_n = 0.0;
    double v_n = 1.0;
    std::int64_t q = 0;
    std::vector<double> times;  // strictly increasing, escape_index / v_n
    std::vector<double> marks;

    std::size_t size() const { return times.size(); }
};

MarkedMeasure build_mrepp(const std::vector<double>& series, double u,
                          std::int64_t q, MarkType mark_type, double v_n);

MarkedMeasure build_mrepp(const std::vector<ClusterRecord>& clusters, double u,
                          std::int64_t q, MarkType mark_type, double v_n);

// Sum of marks per interval; the intervals must be pairwise disjoint.
std::vector<double> evaluate_mrepp(const MarkedMeasure& measure,
                                   const std::vector<Interval>& intervals);

// columnar text format, one atom per line
void write_mrepp(std::ostream& os, const MarkedMeasure& measure);
MarkedMeasure read_mrepp(std::istream& is);

// ---------------------------------------------------------------------------
// blocking construction
// ---------------------------------------------------------------------------

// Blocks of near-equal expected exceedance count, with trailing gaps whose
// expected count is the epsilon fraction of a block.
struct BlockPartition {
    std::int64_t k_n = 0;
    std::int64_t t_n_star = 0;
    std::int64_t start_index = 0;  // L_{H,n,0}
    std::int64_t horizon = 0;      // H*n
    int H = 1;
    std::int64_t n = 0;
    double F_star = 0.0;   // sum of Fbar over [start_index, horizon)
    double Fbar_max = 0.0;
    double epsilon = 0.0;  // (t_n*+1) * Fbar_max * k_n / F_star
    std::vector<std::int64_t> ell;  // block lengths
    std::vector<std::int64_t> t;    // trailing gap lengths
    std::vector<std::int64_t> L;    // cumulative boundaries, size k_n+1
    std::vector<double> block_sums;
    double tail_sum = 0.0;
    std::int64_t tail_start = 0;  // L_{H,n,k_n}

    bool estimate_ok = true;     // F*/k - Fmax <= block sum <= F*/k, per block
    bool tail_ok = true;         // tail sum <= k_n * Fmax
    bool t_invariant_ok = true;  // t* < t_i < ell_i, per block

    std::int64_t block_of(std::int64_t index) const;  // -1 if outside blocks
};

BlockPartition build_blocks(const std::vector<double>& Fbar, std::int64_t k_n,
                            std::int64_t t_n_star, int H, std::int64_t n,
                            std::int64_t start_index = 0);

// default rules: k_n = floor(log n)^2, t_n* = floor((log n)^2)
std::int64_t default_k_n(std::int64_t n);
std::int64_t default_t_star(std::int64_t n);

// ---------------------------------------------------------------------------
// empirical choice of the gap parameter q
// ---------------------------------------------------------------------------

struct QProfile {
    std::vector<std::int64_t> n_grid;
    std::int64_t j_max = 0;
    // min observed return gap after a level-j escape, per (j, n); the sentinel
    // -1 means no return was observed at all (treated as unbounded growth)
    std::vector<std::vector<std::int64_t>> min_return;
    std::vector<bool> grows;
    std::int64_t q = -1;
    bool determined = false;
};

// gap_samples[g] holds, for n_grid[g], the pooled gaps between consecutive
// exceedances across the ensemble. A level-j escape returning after r steps
// is exactly a gap r > j, so min_i R_{j,n,i} = min{gap : gap > j}.
QProfile estimate_q_profile(const std::vector<std::int64_t>& n_grid,
                            const std::vector<std::vector<std::int64_t>>& gap_samples,
                            std::int64_t j_max);

}  // namespace repplab
