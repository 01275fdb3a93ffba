#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace repplab {

// dist on the circle with 0 ~ 1
inline double circle_dist(double x, double y) {
    const double d = std::abs(x - y);
    return std::min(d, 1.0 - d);
}

enum class GType { type1, type2, type3 };

// phi(x) = g(dist(x, zeta)) with one of three tail shapes:
//   type 1: g(r) = -scale * log r        (g(0) = +inf, scale function h = scale)
//   type 2: g(r) = r^{-1/alpha}          (g(0) = +inf)
//   type 3: g(r) = D - r^{1/alpha}       (g(0) = D finite)
struct Observable {
    GType type = GType::type1;
    double zeta = 0.5;
    double alpha = 1.0;    // tail parameter, types 2/3
    double D = 1.0;        // finite maximum, type 3
    double h_scale = 1.0;  // type-1 scale function (constant)

    void validate() const {
        if (!(zeta >= 0.0) || zeta >= 1.0) {
            throw std::invalid_argument("Observable: zeta outside [0,1)");
        }
        if (type != GType::type1 && !(alpha > 0.0)) {
            throw std::invalid_argument("Observable: alpha must be positive");
        }
        if (type == GType::type1 && !(h_scale > 0.0)) {
            throw std::invalid_argument("Observable: h_scale must be positive");
        }
        if (type == GType::type3 && !std::isfinite(D)) {
            throw std::invalid_argument("Observable: D must be finite");
        }
        // g must be strictly decreasing near 0
        double prev = g_of(1e-9);
        for (int k = 1; k <= 32; ++k) {
            const double r = 1e-9 * std::pow(1.5, k);
            const double cur = g_of(r);
            if (!(cur < prev)) {
                throw std::invalid_argument("Observable: g not strictly decreasing");
            }
            prev = cur;
        }
    }

    double g0() const {
        return type == GType::type3 ? D : std::numeric_limits<double>::infinity();
    }

    double g_of(double r) const {
        if (r < 0.0) throw std::invalid_argument("Observable: negative radius");
        switch (type) {
            case GType::type1:
                return r == 0.0 ? std::numeric_limits<double>::infinity()
                                : -h_scale * std::log(r);
            case GType::type2:
                return r == 0.0 ? std::numeric_limits<double>::infinity()
                                : std::pow(r, -1.0 / alpha);
            case GType::type3:
            default:
                return D - std::pow(r, 1.0 / alpha);
        }
    }
};

inline double observe(const Observable& obs, double x) {
    if (!(x >= 0.0) || x >= 1.0) {
        throw std::invalid_argument("observe: x outside [0,1)");
    }
    return obs.g_of(circle_dist(x, obs.zeta));
}

// radius r with g(r) = u, so that {X_0 > u} = B(zeta, r)
inline double g_inverse(const Observable& obs, double u) {
    switch (obs.type) {
        case GType::type1:
            return std::exp(-u / obs.h_scale);
        case GType::type2:
            if (!(u > 0.0)) {
                throw std::invalid_argument("g_inverse: type-2 level must be positive");
            }
            return std::pow(u, -obs.alpha);
        case GType::type3:
        default:
            if (u > obs.D) {
                throw std::invalid_argument("g_inverse: level above g(0) = D");
            }
            return std::pow(obs.D - u, obs.alpha);
    }
}

// a_n for the level u_n: 1/h(u_n), 1/u_n, 1/(D - u_n) for types 1/2/3
inline double normalizer(const Observable& obs, double u_n) {
    switch (obs.type) {
        case GType::type1:
            return 1.0 / obs.h_scale;
        case GType::type2:
            if (!(u_n > 0.0)) {
                throw std::invalid_argument("normalizer: type-2 level must be positive");
            }
            return 1.0 / u_n;
        case GType::type3:
        default:
            if (u_n >= obs.D) {
                throw std::invalid_argument("normalizer: level at or above D");
            }
            return 1.0 / (obs.D - u_n);
    }
}

}  // namespace repplab
