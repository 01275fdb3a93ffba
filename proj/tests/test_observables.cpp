#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "repplab/observables.hpp"
#include "repplab/rng.hpp"

using namespace repplab;

namespace {

Observable type1_obs(double zeta = 0.3) {
    Observable o;
    o.type = GType::type1;
    o.zeta = zeta;
    return o;
}

Observable type2_obs(double alpha, double zeta = 0.3) {
    Observable o;
    o.type = GType::type2;
    o.alpha = alpha;
    o.zeta = zeta;
    return o;
}

Observable type3_obs(double D, double alpha, double zeta = 0.3) {
    Observable o;
    o.type = GType::type3;
    o.D = D;
    o.alpha = alpha;
    o.zeta = zeta;
    return o;
}

}  // namespace

TEST_CASE("circle distance") {
    CHECK(circle_dist(0.1, 0.9) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(circle_dist(0.3, 0.3) == 0.0);
    CHECK(circle_dist(0.0, 0.5) == 0.5);
    CHECK(circle_dist(0.9, 0.1) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("observe by type") {
    auto o1 = type1_obs();
    CHECK(observe(o1, 0.4) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
    CHECK(observe(o1, 0.3) == std::numeric_limits<double>::infinity());

    auto o2 = type2_obs(2.0);
    CHECK(observe(o2, 0.34) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(observe(o2, 0.3) == std::numeric_limits<double>::infinity());

    auto o3 = type3_obs(1.0, 1.0);
    CHECK(observe(o3, 0.55) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(observe(o3, 0.3) == 1.0);  // g(0) = D finite

    CHECK_THROWS_AS(observe(o1, 1.2), std::invalid_argument);
}

TEST_CASE("g inverse") {
    auto o1 = type1_obs();
    CHECK(g_inverse(o1, std::log(100.0)) == doctest::Approx(0.01).epsilon(1e-12));
    auto o2 = type2_obs(2.0);
    CHECK(g_inverse(o2, 5.0) == doctest::Approx(0.04).epsilon(1e-12));
    auto o3 = type3_obs(1.0, 1.0);
    CHECK(g_inverse(o3, 0.75) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(g_inverse(o3, 1.5), std::invalid_argument);  // above g(0)
}

TEST_CASE("round trip g(g_inverse(u)) = u") {
    auto o1 = type1_obs();
    auto o2 = type2_obs(1.7);
    auto o3 = type3_obs(2.0, 0.8);
    for (int k = 0; k <= 40; ++k) {
        const double u1 = 0.5 * std::pow(1.3, k * 0.5);  // log-spaced levels
        CHECK(o1.g_of(g_inverse(o1, u1)) == doctest::Approx(u1).epsilon(1e-12));
        CHECK(o2.g_of(g_inverse(o2, u1)) == doctest::Approx(u1).epsilon(1e-12));
        const double u3 = 2.0 - 1.4 * std::pow(0.8, k);  // approaches D from below
        CHECK(o3.g_of(g_inverse(o3, u3)) == doctest::Approx(u3).epsilon(1e-12));
    }
}

TEST_CASE("normalizer") {
    auto o1 = type1_obs();
    CHECK(normalizer(o1, 7.0) == 1.0);
    o1.h_scale = 2.5;  // g = -2.5 log r pairs with h = 2.5
    CHECK(normalizer(o1, 7.0) == doctest::Approx(0.4).epsilon(1e-15));

    auto o2 = type2_obs(2.0);
    CHECK(normalizer(o2, 5.0) == doctest::Approx(0.2).epsilon(1e-15));

    auto o3 = type3_obs(1.0, 1.0);
    CHECK(normalizer(o3, 0.75) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK_THROWS_AS(normalizer(o3, 1.0), std::invalid_argument);  // u = D
}

TEST_CASE("observe is strictly decreasing in the distance") {
    for (auto obs : {type1_obs(), type2_obs(1.3), type3_obs(1.5, 2.0)}) {
        obs.validate();
        double prev = obs.g_of(1e-6);
        for (int k = 1; k <= 60; ++k) {
            const double r = 1e-6 * std::pow(1.2, k);
            const double cur = obs.g_of(r);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("exceedance-ball duality") {
    Rng rng(99);
    for (auto obs : {type1_obs(0.7), type2_obs(2.0, 0.7), type3_obs(1.0, 1.0, 0.7)}) {
        const double u = (obs.type == GType::type3) ? 0.9 : 4.0;
        const double r = g_inverse(obs, u);
        for (int k = 0; k < 10000; ++k) {
            const double x = rng.uniform();
            const bool exceeds = observe(obs, x) > u;
            const bool inside = circle_dist(x, obs.zeta) < r;
            CHECK(exceeds == inside);
        }
    }
}

TEST_CASE("validation rejects bad specs") {
    auto o = type2_obs(-1.0);
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
    auto z = type1_obs(1.0);
    CHECK_THROWS_AS(z.validate(), std::invalid_argument);
    auto h = type1_obs();
    h.h_scale = 0.0;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    auto d = type3_obs(std::numeric_limits<double>::infinity(), 1.0);
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}
