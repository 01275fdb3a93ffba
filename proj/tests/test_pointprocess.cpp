#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "repplab/pipeline.hpp"
#include "repplab/pointprocess.hpp"
#include "repplab/rng.hpp"

using namespace repplab;

namespace {

// Brute-force evaluation of the recursive escape/cluster sets on a finite
// indicator window. U[0][i] marks an exceedance; level kappa requires another
// level-(kappa-1) point within gap q; Q peels off the points whose remaining
// cluster has size exactly kappa + 1. Indices past the end count as below
// threshold.
struct RecursiveSets {
    std::vector<std::vector<bool>> U, Q;

    RecursiveSets(const std::vector<bool>& exceed, std::int64_t q) {
        const std::size_t N = exceed.size();
        U.assign(N + 1, std::vector<bool>(N, false));
        Q.assign(N + 1, std::vector<bool>(N, false));
        for (std::size_t i = 0; i < N; ++i) U[0][i] = exceed[i];
        const auto any_within_gap = [&](const std::vector<bool>& row,
                                        std::size_t i) {
            for (std::int64_t l = 1; l <= q; ++l) {
                if (i + static_cast<std::size_t>(l) < row.size() &&
                    row[i + static_cast<std::size_t>(l)]) {
                    return true;
                }
            }
            return false;
        };
        for (std::size_t kappa = 0; kappa <= N; ++kappa) {
            if (kappa > 0) {
                for (std::size_t i = 0; i < N; ++i) {
                    U[kappa][i] = U[kappa - 1][i] && any_within_gap(U[kappa - 1], i);
                }
            }
            // Q needs the completed U row
            for (std::size_t i = 0; i < N; ++i) {
                Q[kappa][i] = U[kappa][i] && !any_within_gap(U[kappa], i);
            }
        }
    }

    // size of the cluster starting here, or -1 when i is not in any Q level
    std::int64_t exact_cluster_level(std::size_t i) const {
        std::int64_t level = -1;
        for (std::size_t kappa = 0; kappa + 1 < U.size(); ++kappa) {
            if (Q[kappa][i]) {
                if (level >= 0) return -2;  // not a partition: fail the test
                level = static_cast<std::int64_t>(kappa);
            }
        }
        return level;
    }
};

std::vector<Exceedance> make_exceedances(const std::vector<std::int64_t>& idx) {
    std::vector<Exceedance> out;
    for (auto i : idx) out.push_back({i, 1.0});
    return out;
}

}  // namespace

TEST_CASE("scan exceedances") {
    CHECK(scan_exceedances({0.0, 1.0, 2.0}, 4.0).empty());
    const auto one = scan_exceedances({0.0, 5.0, 0.0}, 4.0);
    REQUIRE(one.size() == 1);
    CHECK(one[0].index == 1);
    CHECK(one[0].excess == doctest::Approx(1.0));

    // naive rescan oracle on a random series
    Rng rng(6);
    std::vector<double> series(500);
    for (auto& s : series) s = rng.uniform();
    const double u = 0.9;
    const auto scanned = scan_exceedances(series, u);
    std::size_t k = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i] > u) {
            REQUIRE(k < scanned.size());
            CHECK(scanned[k].index == static_cast<std::int64_t>(i));
            CHECK(scanned[k].excess == series[i] - u);
            ++k;
        }
    }
    CHECK(k == scanned.size());
    CHECK_THROWS_AS(scan_exceedances(series, std::nan("")), std::invalid_argument);
}

TEST_CASE("cluster detection by gaps") {
    const auto clusters =
        detect_clusters(make_exceedances({2, 3, 7, 8, 9}), 1, 100);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0].exceedance_indices == std::vector<std::int64_t>{2, 3});
    CHECK(clusters[0].kappa() == 1);
    CHECK(clusters[1].exceedance_indices == std::vector<std::int64_t>{7, 8, 9});
    CHECK(clusters[1].kappa() == 2);
    CHECK(clusters[1].escape_index() == 9);
    CHECK(!clusters[0].truncated);

    // q = 0: every exceedance is its own cluster
    const auto singletons = detect_clusters(make_exceedances({2, 3, 7}), 0, 100);
    CHECK(singletons.size() == 3);
    for (const auto& c : singletons) CHECK(c.kappa() == 0);

    // trailing run cut by the series end is still a cluster, flagged
    const auto cut = detect_clusters(make_exceedances({97, 98}), 3, 100);
    REQUIRE(cut.size() == 1);
    CHECK(cut[0].truncated);

    CHECK_THROWS_AS(detect_clusters(make_exceedances({1}), -1, 10),
                    std::invalid_argument);
    CHECK_THROWS_AS(detect_clusters(make_exceedances({3, 2}), 1, 10),
                    std::invalid_argument);
}

TEST_CASE("clusters match the recursive set definitions") {
    Rng rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::int64_t N = 20 + static_cast<std::int64_t>(rng.uniform() * 180);
        const double rate = 0.02 + 0.2 * rng.uniform();
        std::vector<bool> exceed(static_cast<std::size_t>(N), false);
        std::vector<Exceedance> exc;
        for (std::int64_t i = 0; i < N; ++i) {
            if (rng.uniform() < rate) {
                exceed[static_cast<std::size_t>(i)] = true;
                exc.push_back({i, rng.uniform()});
            }
        }
        for (std::int64_t q = 0; q <= 3; ++q) {
            const RecursiveSets sets(exceed, q);
            const auto clusters = detect_clusters(exc, q, N);
            std::vector<std::int64_t> level(static_cast<std::size_t>(N), -1);
            for (const auto& c : clusters) {
                const auto size = c.kappa() + 1;
                for (std::int64_t t = 0; t < size; ++t) {
                    // the t-th member still has size - t exceedances ahead
                    level[static_cast<std::size_t>(
                        c.exceedance_indices[static_cast<std::size_t>(t)])] =
                        size - 1 - t;
                }
            }
            for (std::int64_t i = 0; i < N; ++i) {
                CHECK(sets.exact_cluster_level(static_cast<std::size_t>(i)) ==
                      level[static_cast<std::size_t>(i)]);
                ++checked;
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("cluster partition and q-monotonicity") {
    Rng rng(77);
    std::vector<Exceedance> exc;
    for (std::int64_t i = 0; i < 2000; ++i) {
        if (rng.uniform() < 0.05) exc.push_back({i, rng.uniform()});
    }
    std::size_t prev_count = exc.size() + 1;
    for (std::int64_t q = 0; q <= 6; ++q) {
        const auto clusters = detect_clusters(exc, q, 2000);
        std::size_t members = 0;
        for (const auto& c : clusters) {
            members += c.exceedance_indices.size();
        }
        CHECK(members == exc.size());  // every exceedance in exactly one cluster
        CHECK(clusters.size() <= prev_count);  // coarser q never adds clusters
        prev_count = clusters.size();
    }
}

TEST_CASE("marks") {
    ClusterRecord c;
    c.exceedance_indices = {4, 6};
    c.excesses = {0.5, 0.2};
    CHECK(compute_mark(c, MarkType::aot) == doctest::Approx(0.7));
    CHECK(compute_mark(c, MarkType::pot) == doctest::Approx(0.5));
    CHECK(compute_mark(c, MarkType::repp) == 2.0);

    ClusterRecord single;
    single.exceedance_indices = {9};
    single.excesses = {0.31};
    CHECK(compute_mark(single, MarkType::aot) ==
          compute_mark(single, MarkType::pot));
    CHECK(compute_mark(single, MarkType::repp) == 1.0);

    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        ClusterRecord r;
        const int size = 1 + static_cast<int>(rng.uniform() * 5);
        for (int k = 0; k < size; ++k) {
            r.exceedance_indices.push_back(k * 2);
            r.excesses.push_back(rng.uniform());
        }
        CHECK(compute_mark(r, MarkType::aot) >= compute_mark(r, MarkType::pot));
        CHECK(compute_mark(r, MarkType::repp) >= 1.0);
    }
    CHECK_THROWS_AS(compute_mark(ClusterRecord{}, MarkType::aot),
                    std::invalid_argument);
}

TEST_CASE("mrepp construction and evaluation") {
    const MarkedMeasure empty = build_mrepp(std::vector<double>{0.1, 0.2}, 4.0,
                                            1, MarkType::aot, 100.0);
    CHECK(empty.size() == 0);
    CHECK(evaluate_mrepp(empty, {{0.0, 1.0}}) == std::vector<double>{0.0});

    std::vector<double> series(1000, 0.0);
    series[500] = 5.0;
    const auto one = build_mrepp(series, 4.0, 1, MarkType::aot, 1000.0);
    REQUIRE(one.size() == 1);
    CHECK(one.times[0] == doctest::Approx(0.5));
    CHECK(one.marks[0] == doctest::Approx(1.0));

    // atom exactly on a boundary goes to the right interval (half-open)
    MarkedMeasure m;
    m.times = {0.5};
    m.marks = {2.0};
    const auto masses = evaluate_mrepp(m, {{0.0, 0.5}, {0.5, 1.0}});
    CHECK(masses[0] == 0.0);
    CHECK(masses[1] == 2.0);

    CHECK_THROWS_AS(evaluate_mrepp(m, {{0.0, 0.6}, {0.5, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_mrepp(series, 4.0, 1, MarkType::aot, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        build_mrepp(series, 4.0, 1, MarkType::aot,
                    std::numeric_limits<double>::infinity()),
        std::invalid_argument);
}

TEST_CASE("aot measure total mass equals the raw excess sum") {
    Rng rng(41);
    std::vector<double> series(5000);
    for (auto& s : series) s = rng.uniform() * 5.0;
    const double u = 4.5;
    const double v_n = 1250.0;
    const auto measure = build_mrepp(series, u, 2, MarkType::aot, v_n);
    double direct = 0.0;
    for (double s : series) direct += std::max(s - u, 0.0);
    const auto total = evaluate_mrepp(
        measure, {{0.0, static_cast<double>(series.size()) / v_n + 1.0}});
    CHECK(total[0] == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("mrepp additivity over an interval split") {
    Rng rng(43);
    MarkedMeasure m;
    double t = 0.0;
    for (int k = 0; k < 200; ++k) {
        t += rng.uniform() * 0.05;
        m.times.push_back(t);
        m.marks.push_back(rng.uniform() * 3.0);
    }
    const auto whole = evaluate_mrepp(m, {{0.0, 10.0}});
    const auto parts = evaluate_mrepp(
        m, {{0.0, 2.5}, {2.5, 5.0}, {5.0, 7.5}, {7.5, 10.0}});
    CHECK(whole[0] ==
          doctest::Approx(parts[0] + parts[1] + parts[2] + parts[3]).epsilon(1e-12));
}

TEST_CASE("rescaling halves atom times exactly") {
    std::vector<double> series(400, 0.0);
    series[31] = series[99] = series[250] = 7.0;
    const auto a = build_mrepp(series, 6.0, 0, MarkType::pot, 100.0);
    const auto b = build_mrepp(series, 6.0, 0, MarkType::pot, 200.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.times[i] / 2.0 == b.times[i]);
    }
}

TEST_CASE("mrepp text round trip") {
    MarkedMeasure m;
    m.mark_type = MarkType::pot;
    m.u_n = 9.903487552536127;
    m.v_n = 10234.567891234;
    m.q = 2;
    Rng rng(55);
    double t = 0.0;
    for (int k = 0; k < 64; ++k) {
        t += rng.uniform();
        m.times.push_back(t);
        m.marks.push_back(-std::log(rng.uniform_pos()));
    }
    m.marks[5] = std::numeric_limits<double>::infinity();
    std::ostringstream os;
    write_mrepp(os, m);
    CHECK(os.str().rfind("# mrepp v1 mark_type=POT u_n=", 0) == 0);
    std::istringstream is(os.str());
    const auto back = read_mrepp(is);
    CHECK(back.mark_type == m.mark_type);
    CHECK(back.u_n == m.u_n);
    CHECK(back.v_n == m.v_n);
    CHECK(back.q == m.q);
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(back.times[i] == m.times[i]);
        CHECK(back.marks[i] == m.marks[i]);
    }
}

TEST_CASE("block construction on constant frequencies") {
    const std::vector<double> Fbar(10000, 1e-3);
    const auto bp = build_blocks(Fbar, 10, 5, 1, 10000);
    REQUIRE(bp.ell.size() == 10);
    for (auto l : bp.ell) CHECK(l == 1000);
    CHECK(bp.tail_start == 10000);
    CHECK(bp.tail_sum == 0.0);
    CHECK(bp.estimate_ok);
    CHECK(bp.tail_ok);
    // gaps: largest t with t * 1e-3 <= (5+1) * 1e-3 -> t = 6 > t* = 5
    for (auto t : bp.t) CHECK(t == 6);
    CHECK(bp.t_invariant_ok);

    // single block covers everything
    const auto single = build_blocks(Fbar, 1, 5, 1, 10000);
    CHECK(single.ell[0] == 10000);
    CHECK(single.tail_sum <= single.Fbar_max);

    CHECK_THROWS_AS(build_blocks(std::vector<double>(100, 0.0), 4, 2, 1, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_blocks(Fbar, 10, 5, 2, 10000), std::invalid_argument);
}

TEST_CASE("block estimates hold exactly for random frequencies") {
    Rng rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        const std::int64_t n = 1000 + static_cast<std::int64_t>(rng.uniform() * 3000);
        std::vector<double> Fbar(static_cast<std::size_t>(n));
        for (auto& f : Fbar) f = rng.uniform() * 2e-3;
        const std::int64_t k_n = 2 + static_cast<std::int64_t>(rng.uniform() * 14);
        const std::int64_t t_star = 1 + static_cast<std::int64_t>(rng.uniform() * 8);
        const auto bp = build_blocks(Fbar, k_n, t_star, 1, n);
        CHECK(bp.estimate_ok);
        CHECK(bp.tail_ok);
        // re-derive the inequalities directly
        const double target = bp.F_star / static_cast<double>(k_n);
        for (std::size_t i = 0; i < bp.block_sums.size(); ++i) {
            CHECK(bp.block_sums[i] <= target);
            CHECK(bp.block_sums[i] >= target - bp.Fbar_max);
        }
        CHECK(bp.tail_sum <= static_cast<double>(k_n) * bp.Fbar_max);
        CHECK(bp.epsilon ==
              (static_cast<double>(t_star) + 1.0) * bp.Fbar_max *
                  static_cast<double>(k_n) / bp.F_star);
    }
}

TEST_CASE("block lookup") {
    const std::vector<double> Fbar(1000, 1e-3);
    const auto bp = build_blocks(Fbar, 4, 3, 1, 1000, 100);
    CHECK(bp.start_index == 100);
    CHECK(bp.block_of(50) == -1);
    CHECK(bp.block_of(100) == 0);
    CHECK(bp.block_of(bp.L[1]) == 1);
    CHECK(bp.block_of(bp.L[1] - 1) == 0);
    CHECK(bp.block_of(bp.tail_start) == -1);
}

TEST_CASE("q profile from synthetic gaps") {
    // period-2 style gaps at every n fail to grow; genuine escapes grow
    const std::vector<std::int64_t> n_grid{1000, 4000, 16000};
    std::vector<std::vector<std::int64_t>> gaps(3);
    gaps[0] = {2, 2, 2, 40, 55};
    gaps[1] = {2, 2, 150, 170};
    gaps[2] = {2, 700, 800};
    const auto prof = estimate_q_profile(n_grid, gaps, 3);
    CHECK(prof.min_return[0][0] == 2);
    CHECK(prof.min_return[0][2] == 2);
    CHECK_FALSE(prof.grows[0]);
    CHECK_FALSE(prof.grows[1]);  // gap 2 > 1 still pins the minimum at 2
    CHECK(prof.min_return[2][0] == 40);
    CHECK(prof.grows[2]);
    CHECK(prof.determined);
    CHECK(prof.q == 2);

    CHECK_THROWS_AS(estimate_q_profile({1000}, {{1, 2}}, 2),
                    std::invalid_argument);
}

TEST_CASE("q estimate on beta systems") {
    // fixed point: zeta = 1/2 under beta = 3 has prime period 1
    ExperimentConfig fixed;
    fixed.system = SequentialSystem{3.0, false, 2.0, PerturbationSign::plus, 1e-3};
    fixed.observable.type = GType::type1;
    fixed.observable.zeta = 0.5;
    fixed.zeta_kind = ZetaKind::interior_periodic;
    fixed.j_max = 3;
    const std::vector<std::int64_t> grid{1000, 4000, 16000};
    const auto p1 = estimate_q_driver(fixed, grid, 64, 2025);
    CHECK(p1.determined);
    CHECK(p1.q == 1);

    // zeta = 1/3 under beta = 2: symbolic orbit 1/3 -> 2/3 -> 1/3, period 2
    {
        double z = 1.0 / 3.0;
        double z1 = beta_map_apply(2.0, z);
        double z2 = beta_map_apply(2.0, z1);
        CHECK(circle_dist(z2, z) < 1e-9);
        CHECK(circle_dist(z1, z) > 0.1);
    }
    ExperimentConfig period2 = fixed;
    period2.system = SequentialSystem{2.0, false, 2.0, PerturbationSign::plus, 1e-3};
    period2.observable.zeta = 1.0 / 3.0;
    const auto p2 = estimate_q_driver(period2, grid, 64, 2025);
    CHECK(p2.determined);
    CHECK(p2.q == 2);

    // generic target: no clustering, q = 0
    ExperimentConfig generic = fixed;
    generic.observable.zeta = std::sqrt(2.0) - 1.0;
    generic.zeta_kind = ZetaKind::aperiodic;
    const auto p0 = estimate_q_driver(generic, grid, 64, 2025);
    CHECK(p0.determined);
    CHECK(p0.q == 0);
}
