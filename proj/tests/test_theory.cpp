#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "repplab/theory.hpp"

using namespace repplab;

TEST_CASE("extremal index formulas") {
    const auto a = extremal_index(3.0, ZetaKind::interior_periodic, 1);
    CHECK(a.theta == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    const auto b = extremal_index(2.0, ZetaKind::interior_periodic, 2);
    CHECK(b.theta == doctest::Approx(0.75).epsilon(1e-15));
    const auto c = extremal_index(5.0, ZetaKind::aperiodic);
    CHECK(c.theta == 1.0);

    // boundary target: both readings reported
    const auto d = extremal_index(2.0, ZetaKind::boundary, 1, 1.0, 1.0);
    CHECK(d.verbatim == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.normalized == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(d.theta == d.normalized);

    // equal densities and equal periods collapse onto 1 - beta^{-p}
    for (double beta : {2.0, 3.0, 4.5}) {
        const auto e = extremal_index(beta, ZetaKind::boundary, 1, 0.7, 0.7);
        CHECK(e.normalized ==
              doctest::Approx(1.0 - 1.0 / beta).epsilon(1e-14));
    }

    CHECK_THROWS_AS(extremal_index(3.0, ZetaKind::interior_periodic, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(extremal_index(0.9, ZetaKind::aperiodic),
                    std::invalid_argument);
}

TEST_CASE("repp multiplicity") {
    CHECK(repp_multiplicity(1.0, 1) == 1.0);
    CHECK(repp_multiplicity(1.0, 2) == 0.0);
    CHECK(repp_multiplicity(2.0 / 3.0, 2) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    double total = 0.0;
    for (std::int64_t k = 1; k <= 200; ++k) total += repp_multiplicity(0.37, k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(repp_multiplicity(0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(repp_multiplicity(0.5, 0), std::invalid_argument);
}

TEST_CASE("pot multiplicity rows") {
    Observable o1;
    o1.type = GType::type1;
    CHECK(pot_multiplicity(o1, 0.0) == 0.0);
    CHECK(pot_multiplicity(o1, 1.0) == doctest::Approx(0.6321205588).epsilon(1e-9));

    Observable o2;
    o2.type = GType::type2;
    o2.alpha = 2.0;
    CHECK(pot_multiplicity(o2, 1.0) == doctest::Approx(0.75).epsilon(1e-15));

    Observable o3;
    o3.type = GType::type3;
    o3.alpha = 2.0;
    CHECK(pot_multiplicity(o3, 0.5) == doctest::Approx(1.0 - 0.25).epsilon(1e-15));
    CHECK(pot_multiplicity(o3, 1.5) == 1.0);
}

namespace {

// independent bracket checks for the closed-form table rows
std::int64_t neg_log_kappa(double x, double M) {
    return static_cast<std::int64_t>(
        std::floor((std::sqrt(1.0 + 8.0 * x / std::log(M)) - 1.0) / 2.0));
}

}  // namespace

TEST_CASE("aot table rows") {
    CHECK(aot_multiplicity_table(AotForm::neg_log, 1.0, 3.0, 0.0) == 0.0);
    CHECK(aot_multiplicity_table(AotForm::power, 2.0, 3.0, 0.0) ==
          doctest::Approx(0.0).epsilon(1e-14));
    CHECK(aot_multiplicity_table(AotForm::bounded, 2.0, 3.0, 0.0) ==
          doctest::Approx(0.0).epsilon(1e-14));

    // M = 4, x = log 4: kappa = 1 and pi = 1 - (1/2) e^{-log(4)/2} = 3/4
    const double x = std::log(4.0);
    CHECK(neg_log_kappa(x, 4.0) == 1);
    CHECK(aot_multiplicity_table(AotForm::neg_log, 1.0, 4.0, x) ==
          doctest::Approx(0.75).epsilon(1e-12));

    // tails reach 1
    CHECK(aot_multiplicity_table(AotForm::neg_log, 1.0, 3.0, 400.0) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK(aot_multiplicity_table(AotForm::power, 1.5, 3.0, 1e8) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK(aot_multiplicity_table(AotForm::bounded, 1.5, 3.0, 60.0) ==
          doctest::Approx(1.0).epsilon(1e-6));

    CHECK_THROWS_AS(aot_multiplicity_table(AotForm::neg_log, 1.0, 0.9, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(aot_multiplicity_table(AotForm::power, 2.0, 3.0, -1.0),
                    std::invalid_argument);
}

TEST_CASE("aot table cdf validity and bracket consistency") {
    for (double M : {2.0, 3.0, 9.0}) {
        for (auto form : {AotForm::neg_log, AotForm::power, AotForm::bounded}) {
            double prev = -1e-12;
            for (int k = 0; k <= 400; ++k) {
                const double x = 0.05 * k;
                const double pi = aot_multiplicity_table(form, 1.7, M, x);
                CHECK(pi >= prev - 1e-12);  // nondecreasing
                CHECK(pi <= 1.0 + 1e-12);
                prev = pi;
            }
            CHECK(aot_multiplicity_table(form, 1.7, M, 300.0) > 0.99);
        }
    }
    // printed bracket inequality for the neg-log row
    for (double x : {0.1, 0.7, 2.3, 9.4, 30.0}) {
        const double M = 3.0;
        const auto kappa = neg_log_kappa(x, M);
        const double lo = 0.5 * kappa * (kappa + 1.0) * std::log(M);
        const double hi = 0.5 * (kappa + 1.0) * (kappa + 2.0) * std::log(M);
        CHECK(lo <= x);
        CHECK(x < hi);
    }
}

TEST_CASE("aot general evaluation converges to the table") {
    // type 1, g = -log: exact at any level
    Observable o1;
    o1.type = GType::type1;
    for (double M : {3.0, 4.0}) {
        for (int k = 0; k <= 100; ++k) {
            const double x = 0.05 * k;
            const auto g = aot_multiplicity_general(o1, M, 20.0, x);
            REQUIRE(g.ok);
            CHECK(std::abs(g.pi - aot_multiplicity_table(AotForm::neg_log, 1.0,
                                                         M, x)) < 1e-3);
        }
    }
    // kappa = 0 branch coincides with the exponential law
    for (double x : {0.0, 0.2, 0.6, 1.0}) {
        const auto g = aot_multiplicity_general(o1, 4.0, 20.0, x);
        REQUIRE(g.ok);
        CHECK(g.kappa == 0);
        CHECK(g.pi == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-9));
    }

    Observable o2;
    o2.type = GType::type2;
    o2.alpha = 2.0;
    for (int k = 0; k <= 100; ++k) {
        const double x = 0.05 * k;
        const auto g = aot_multiplicity_general(o2, 3.0, 1000.0, x);
        REQUIRE(g.ok);
        CHECK(std::abs(g.pi - aot_multiplicity_table(AotForm::power, 2.0, 3.0,
                                                     x)) < 1e-3);
    }

    Observable o3;
    o3.type = GType::type3;
    o3.alpha = 1.5;
    o3.D = 1.0;
    for (int k = 0; k <= 100; ++k) {
        const double x = 0.05 * k;
        const auto g = aot_multiplicity_general(o3, 3.0, 0.999, x);
        REQUIRE(g.ok);
        CHECK(std::abs(g.pi - aot_multiplicity_table(AotForm::bounded, 1.5, 3.0,
                                                     x)) < 1e-3);
    }

    CHECK_THROWS_AS(aot_multiplicity_general(o3, 3.0, 1.5, 0.2),
                    std::invalid_argument);
}

TEST_CASE("multiplicity distributions are valid laws") {
    Observable o2;
    o2.type = GType::type2;
    o2.alpha = 1.4;
    const MultiplicityDist dists[] = {
        MultiplicityDist::unit(),
        MultiplicityDist::exponential(),
        MultiplicityDist::geometric(0.66),
        MultiplicityDist::pot(o2),
        MultiplicityDist::aot(AotForm::neg_log, 1.0, 3.0),
    };
    for (const auto& d : dists) {
        double prev = -1e-12;
        for (int k = 0; k <= 300; ++k) {
            const double x = 0.1 * k;
            const double c = d.cdf(x);
            CHECK(c >= prev - 1e-12);
            CHECK(c <= 1.0 + 1e-12);
            prev = c;
        }
        CHECK(d.cdf(-1.0) == 0.0);
    }
}

TEST_CASE("laplace transforms") {
    CompoundPoissonModel unit;
    unit.theta = 1.0;
    unit.pi = MultiplicityDist::unit();
    CHECK(compound_poisson_laplace(unit, {{0.0, 1.0}}, {0.0}) == 1.0);
    CHECK(compound_poisson_laplace(unit, {{0.0, 1.0}}, {1.0}) ==
          doctest::Approx(std::exp(-(1.0 - std::exp(-1.0)))).epsilon(1e-12));
    CHECK(compound_poisson_laplace(unit, {{0.0, 1.0}}, {1.0}) ==
          doctest::Approx(0.531463605387).epsilon(1e-9));

    // independence over disjoint intervals: joint = product of singles
    CompoundPoissonModel geo;
    geo.theta = 0.66;
    geo.pi = MultiplicityDist::geometric(0.66);
    const double joint = compound_poisson_laplace(
        geo, {{0.0, 1.0}, {2.0, 2.5}}, {0.7, 0.7});
    const double split = compound_poisson_laplace(geo, {{0.0, 1.0}}, {0.7}) *
                         compound_poisson_laplace(geo, {{2.0, 2.5}}, {0.7});
    CHECK(joint == doctest::Approx(split).epsilon(1e-12));

    CHECK_THROWS_AS(
        compound_poisson_laplace(geo, {{0.0, 1.0}, {0.5, 2.0}}, {1.0, 1.0}),
        std::invalid_argument);
    CHECK_THROWS_AS(compound_poisson_laplace(geo, {{0.0, 1.0}}, {-1.0}),
                    std::invalid_argument);
}

TEST_CASE("laplace quadrature against an independent integral") {
    // pot type 2, alpha = 2: substitute t = 1/(1+x) and integrate on (0,1]
    Observable o2;
    o2.type = GType::type2;
    o2.alpha = 2.0;
    const auto d = MultiplicityDist::pot(o2);
    for (double y : {0.3, 1.0, 2.5}) {
        const int N = 400000;
        double acc = 0.0;
        for (int k = 0; k < N; ++k) {
            const double t = (k + 0.5) / N;
            acc += std::exp(-y * (1.0 / t - 1.0)) * 2.0 * t;
        }
        acc /= N;
        CHECK(d.laplace(y) == doctest::Approx(acc).epsilon(1e-6));
    }
    // exponential law has the closed form 1/(1+y)
    const auto e = MultiplicityDist::exponential();
    CHECK(e.laplace(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // geometric closed form
    const auto g = MultiplicityDist::geometric(0.5);
    const double y = 0.9;
    double series = 0.0;
    for (int k = 1; k <= 200; ++k) {
        series += 0.5 * std::pow(0.5, k - 1) * std::exp(-y * k);
    }
    CHECK(g.laplace(y) == doctest::Approx(series).epsilon(1e-12));
}

TEST_CASE("compound poisson sampler") {
    CompoundPoissonModel model;
    model.theta = 4.0;
    model.pi = MultiplicityDist::unit();
    const auto m = compound_poisson_sample(model, 5000.0, 99);
    const double expected = model.theta * 5000.0;
    CHECK(std::abs(static_cast<double>(m.size()) - expected) <
          4.0 * std::sqrt(expected));
    for (std::size_t i = 1; i < m.size(); ++i) CHECK(m.times[i] > m.times[i - 1]);
    for (double mk : m.marks) CHECK(mk == 1.0);

    // standard Poisson: counts over [0, t) have mean and variance t
    CompoundPoissonModel std_poisson;
    std_poisson.theta = 1.0;
    std_poisson.pi = MultiplicityDist::unit();
    const double t = 3.0;
    double mean = 0.0, sq = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        const auto s = compound_poisson_sample(std_poisson, t,
                                               1000 + static_cast<std::uint64_t>(r));
        const auto count = static_cast<double>(s.size());
        mean += count;
        sq += count * count;
    }
    mean /= reps;
    sq = sq / reps - mean * mean;
    CHECK(mean == doctest::Approx(t).epsilon(0.05));
    CHECK(sq == doctest::Approx(t).epsilon(0.15));

    CHECK_THROWS_AS(compound_poisson_sample(model, -1.0, 5),
                    std::invalid_argument);
}

TEST_CASE("sampler matches its own laplace transform") {
    CompoundPoissonModel model;
    model.theta = 2.0 / 3.0;
    model.pi = MultiplicityDist::aot(AotForm::neg_log, 1.0, 3.0);
    const double horizon = 30000.0;
    const auto m = compound_poisson_sample(model, horizon, 31415);

    const double y = 1.3;
    const Interval I{0.0, 1.0};
    double acc = 0.0, acc2 = 0.0;
    int windows = 0;
    for (double t0 = 0.0; t0 + 1.0 <= horizon; t0 += 1.0) {
        double mass = 0.0;
        const auto lo = std::lower_bound(m.times.begin(), m.times.end(), t0);
        const auto hi = std::lower_bound(m.times.begin(), m.times.end(), t0 + 1.0);
        for (auto it = lo; it != hi; ++it) {
            mass += m.marks[static_cast<std::size_t>(it - m.times.begin())];
        }
        const double v = std::exp(-y * mass);
        acc += v;
        acc2 += v * v;
        ++windows;
    }
    const double mean = acc / windows;
    const double sigma =
        std::sqrt((acc2 / windows - mean * mean) / windows);
    const double psi = compound_poisson_laplace(model, {I}, {y});
    CHECK(std::abs(mean - psi) < 4.0 * sigma);
}

TEST_CASE("empirical multiplicity distribution object") {
    const auto d = MultiplicityDist::empirical({3.0, 1.0, 2.0, 2.0});
    CHECK(d.cdf(0.5) == 0.0);
    CHECK(d.cdf(1.0) == doctest::Approx(0.25));
    CHECK(d.cdf(2.0) == doctest::Approx(0.75));
    CHECK(d.cdf(10.0) == 1.0);
    const double y = 0.4;
    const double expect = (std::exp(-y * 1.0) + 2.0 * std::exp(-y * 2.0) +
                           std::exp(-y * 3.0)) / 4.0;
    CHECK(d.laplace(y) == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(MultiplicityDist::empirical({}), std::invalid_argument);
}
