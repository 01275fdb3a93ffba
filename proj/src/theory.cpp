#include "repplab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace repplab {

ThetaResult extremal_index(double beta, ZetaKind kind, int p, double h_at_0,
                           double h_at_1) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("extremal_index: beta must exceed 1");
    }
    ThetaResult r;
    r.kind = kind;
    r.p = p;
    switch (kind) {
        case ZetaKind::aperiodic:
            r.theta = r.verbatim = r.normalized = 1.0;
            break;
        case ZetaKind::interior_periodic: {
            if (p < 1) throw std::invalid_argument("extremal_index: p must be >= 1");
            const double v = 1.0 - std::pow(beta, -static_cast<double>(p));
            r.theta = r.verbatim = r.normalized = v;
            break;
        }
        case ZetaKind::boundary: {
            if (p < 1) throw std::invalid_argument("extremal_index: p must be >= 1");
            if (!(h_at_0 > 0.0) || !(h_at_1 > 0.0)) {
                throw std::invalid_argument("extremal_index: densities must be positive");
            }
            r.verbatim = h_at_0 * (1.0 - 1.0 / beta) +
                         h_at_1 * (1.0 - std::pow(beta, -static_cast<double>(p)));
            r.normalized = r.verbatim / (h_at_0 + h_at_1);
            r.theta = r.normalized;
            break;
        }
    }
    return r;
}

double repp_multiplicity(double theta, std::int64_t k) {
    if (!(theta > 0.0) || theta > 1.0) {
        throw std::invalid_argument("repp_multiplicity: theta must lie in (0,1]");
    }
    if (k < 1) throw std::invalid_argument("repp_multiplicity: k must be >= 1");
    return theta * std::pow(1.0 - theta, static_cast<double>(k - 1));
}

double pot_multiplicity(const Observable& obs, double x) {
    if (x < 0.0) throw std::invalid_argument("pot_multiplicity: x must be >= 0");
    switch (obs.type) {
        case GType::type1:
            return 1.0 - std::exp(-x);
        case GType::type2:
            return 1.0 - std::pow(1.0 + x, -obs.alpha);
        case GType::type3:
        default:
            if (x >= 1.0) return 1.0;
            return 1.0 - std::pow(1.0 - x, obs.alpha);
    }
}

AotForm aot_form_of(const Observable& obs) {
    switch (obs.type) {
        case GType::type1: return AotForm::neg_log;
        case GType::type2: return AotForm::power;
        case GType::type3: default: return AotForm::bounded;
    }
}

double aot_multiplicity_table(AotForm form, double alpha, double M, double x) {
    if (!(M > 1.0)) throw std::invalid_argument("aot_multiplicity_table: M must exceed 1");
    if (x < 0.0) throw std::invalid_argument("aot_multiplicity_table: x must be >= 0");
    switch (form) {
        case AotForm::neg_log: {
            const double logM = std::log(M);
            const double k = std::floor((std::sqrt(1.0 + 8.0 * x / logM) - 1.0) / 2.0);
            return 1.0 - std::pow(std::sqrt(M), -k) * std::exp(-x / (k + 1.0));
        }
        case AotForm::power: {
            if (!(alpha > 0.0)) {
                throw std::invalid_argument("aot_multiplicity_table: alpha must be positive");
            }
            // the kappa brackets tile [0, inf): take the first kappa whose
            // upper edge exceeds kappa + 1 + x
            const double mi = std::pow(M, -1.0 / alpha);
            for (std::int64_t kappa = 0; kappa < 100000; ++kappa) {
                const double kk = static_cast<double>(kappa);
                const double hi = (std::pow(M, (kk + 1.0) / alpha) - 1.0) / (1.0 - mi);
                const double v = kk + 1.0 + x;
                if (v < hi) {
                    const double ratio =
                        (1.0 - mi) / (1.0 - std::pow(M, -(kk + 1.0) / alpha));
                    return 1.0 - std::pow(ratio, -alpha) * std::pow(v, -alpha);
                }
            }
            return 1.0;
        }
        case AotForm::bounded:
        default: {
            if (!(alpha > 0.0)) {
                throw std::invalid_argument("aot_multiplicity_table: alpha must be positive");
            }
            const double mp = std::pow(M, 1.0 / alpha);
            for (std::int64_t kappa = 0; kappa < 100000; ++kappa) {
                const double kk = static_cast<double>(kappa);
                const double v = kk + 1.0 - x;
                const double lo = (1.0 - std::pow(M, -(kk + 1.0) / alpha)) / (mp - 1.0);
                if (v > lo) {
                    const double ratio = (1.0 - mp) / (1.0 - std::pow(M, (kk + 1.0) / alpha));
                    return 1.0 - std::pow(ratio, alpha) * std::pow(v, alpha);
                }
            }
            return 1.0;
        }
    }
}

AotGeneralResult aot_multiplicity_general(const Observable& obs, double M,
                                          double u, double x) {
    if (!(M > 1.0)) throw std::invalid_argument("aot_multiplicity_general: M must exceed 1");
    if (x < 0.0) throw std::invalid_argument("aot_multiplicity_general: x must be >= 0");
    if (!(u < obs.g0())) {
        throw std::invalid_argument("aot_multiplicity_general: level above g(0)");
    }
    const double rho = g_inverse(obs, u);
    const double a_n = normalizer(obs, u);

    // normalized cluster mark for entry radius rho * t and kappa + 1 exceedances
    const auto mark = [&](std::int64_t kappa, double t) {
        double acc = 0.0;
        double scale = 1.0;
        for (std::int64_t i = 0; i <= kappa; ++i) {
            acc += obs.g_of(std::min(scale * rho * t, rho)) - u;
            scale *= M;
        }
        return a_n * acc;
    };

    AotGeneralResult res;
    std::int64_t kappa = -1;
    double tlo = 0.0, thi = 1.0;  // t bracket for the located kappa
    double pk = 1.0;              // M^{-kappa}
    for (std::int64_t k = 0; k < 100000; ++k) {
        const double lo_val = mark(k, pk);           // at t = M^{-kappa}
        const double hi_val = mark(k, pk / M);       // at t = M^{-(kappa+1)}
        if (lo_val <= x && x < hi_val) {
            kappa = k;
            thi = pk;
            tlo = pk / M;
            break;
        }
        pk /= M;
    }
    if (kappa < 0) {
        res.ok = false;
        return res;
    }
    res.kappa = kappa;
    // mark(kappa, t) is strictly decreasing in t on the bracket
    for (int it = 0; it < 200 && thi - tlo > 0.0; ++it) {
        const double mid = 0.5 * (tlo + thi);
        if (mid <= tlo || mid >= thi) break;
        if (mark(kappa, mid) > x) {
            tlo = mid;
        } else {
            thi = mid;
        }
    }
    res.pi = 1.0 - thi;
    return res;
}

MultiplicityDist MultiplicityDist::unit() {
    MultiplicityDist d;
    d.kind_ = Kind::unit;
    return d;
}

MultiplicityDist MultiplicityDist::exponential() {
    MultiplicityDist d;
    d.kind_ = Kind::exponential;
    return d;
}

MultiplicityDist MultiplicityDist::geometric(double theta) {
    if (!(theta > 0.0) || theta > 1.0) {
        throw std::invalid_argument("MultiplicityDist: theta must lie in (0,1]");
    }
    MultiplicityDist d;
    d.kind_ = Kind::geometric;
    d.theta_ = theta;
    return d;
}

MultiplicityDist MultiplicityDist::pot(const Observable& obs) {
    MultiplicityDist d;
    switch (obs.type) {
        case GType::type1: d.kind_ = Kind::exponential; break;
        case GType::type2: d.kind_ = Kind::pot_type2; break;
        case GType::type3: d.kind_ = Kind::pot_type3; break;
    }
    d.alpha_ = obs.alpha;
    return d;
}

MultiplicityDist MultiplicityDist::aot(AotForm form, double alpha, double M) {
    if (!(M > 1.0)) throw std::invalid_argument("MultiplicityDist: M must exceed 1");
    MultiplicityDist d;
    d.kind_ = Kind::aot_table;
    d.form_ = form;
    d.alpha_ = alpha;
    d.M_ = M;
    return d;
}

MultiplicityDist MultiplicityDist::empirical(std::vector<double> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("MultiplicityDist: empty empirical sample");
    }
    MultiplicityDist d;
    d.kind_ = Kind::empirical;
    d.samples_ = std::move(samples);
    std::sort(d.samples_.begin(), d.samples_.end());
    return d;
}

double MultiplicityDist::cdf(double x) const {
    if (x < 0.0) return 0.0;
    switch (kind_) {
        case Kind::unit:
            return x >= 1.0 ? 1.0 : 0.0;
        case Kind::exponential:
            return 1.0 - std::exp(-x);
        case Kind::geometric:
            return 1.0 - std::pow(1.0 - theta_, std::floor(x));
        case Kind::pot_type2:
            return 1.0 - std::pow(1.0 + x, -alpha_);
        case Kind::pot_type3:
            return x >= 1.0 ? 1.0 : 1.0 - std::pow(1.0 - x, alpha_);
        case Kind::aot_table:
            return aot_multiplicity_table(form_, alpha_, M_, x);
        case Kind::empirical:
        default: {
            const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
            return static_cast<double>(it - samples_.begin()) /
                   static_cast<double>(samples_.size());
        }
    }
}

double MultiplicityDist::tail_support() const {
    double hi = 1.0;
    for (int i = 0; i < 80 && cdf(hi) < 1.0 - 1e-12; ++i) hi *= 2.0;
    return hi;
}

double MultiplicityDist::laplace_quadrature(double y) const {
    // phi(y) = 1 - y * int_0^inf e^{-yx} (1 - cdf(x)) dx, truncated where both
    // the tail and the kernel are negligible
    const double xmax = std::min(tail_support(), 45.0 / y);
    const auto integrand = [&](double x) {
        return std::exp(-y * x) * (1.0 - cdf(x));
    };
    // adaptive Simpson
    struct Panel {
        double a, b, fa, fm, fb, whole;
    };
    const auto simpson = [&](double a, double b, double fa, double fm, double fb) {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    };
    double total = 0.0;
    std::vector<Panel> stack;
    {
        const double m = 0.5 * xmax;
        Panel p{0.0, xmax, integrand(0.0), integrand(m), integrand(xmax), 0.0};
        p.whole = simpson(p.a, p.b, p.fa, p.fm, p.fb);
        stack.push_back(p);
    }
    int iterations = 0;
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double m = 0.5 * (p.a + p.b);
        const double lm = 0.5 * (p.a + m);
        const double rm = 0.5 * (m + p.b);
        const double flm = integrand(lm);
        const double frm = integrand(rm);
        const double left = simpson(p.a, m, p.fa, flm, p.fm);
        const double right = simpson(m, p.b, p.fm, frm, p.fb);
        if (std::abs(left + right - p.whole) < 1e-12 ||
            p.b - p.a < 1e-9 * xmax || ++iterations > 200000) {
            total += left + right;
        } else {
            stack.push_back({p.a, m, p.fa, flm, p.fm, left});
            stack.push_back({m, p.b, p.fm, frm, p.fb, right});
        }
    }
    return 1.0 - y * total;
}

double MultiplicityDist::laplace(double y) const {
    if (y < 0.0) throw std::invalid_argument("laplace: y must be >= 0");
    if (y == 0.0) return 1.0;
    switch (kind_) {
        case Kind::unit:
            return std::exp(-y);
        case Kind::exponential:
            return 1.0 / (1.0 + y);
        case Kind::geometric: {
            const double e = std::exp(-y);
            return theta_ * e / (1.0 - (1.0 - theta_) * e);
        }
        case Kind::empirical: {
            double acc = 0.0;
            for (double s : samples_) acc += std::exp(-y * s);
            return acc / static_cast<double>(samples_.size());
        }
        case Kind::pot_type2:
        case Kind::pot_type3:
        case Kind::aot_table:
        default:
            return laplace_quadrature(y);
    }
}

double MultiplicityDist::sample(Rng& rng) const {
    switch (kind_) {
        case Kind::unit:
            return 1.0;
        case Kind::exponential:
            return -std::log(rng.uniform_pos());
        case Kind::geometric: {
            if (theta_ >= 1.0) return 1.0;
            const double u = rng.uniform_pos();
            return std::ceil(std::log(u) / std::log(1.0 - theta_));
        }
        case Kind::pot_type2:
            return std::pow(rng.uniform_pos(), -1.0 / alpha_) - 1.0;
        case Kind::pot_type3:
            return 1.0 - std::pow(rng.uniform_pos(), 1.0 / alpha_);
        case Kind::empirical:
            return samples_[rng.index(samples_.size())];
        case Kind::aot_table:
        default: {
            // inverse cdf by bisection; the table cdf is continuous
            const double u = rng.uniform();
            double lo = 0.0, hi = tail_support();
            for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                if (cdf(mid) < u) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
    }
}

std::string MultiplicityDist::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::unit: os << "unit mass at 1"; break;
        case Kind::exponential: os << "1 - exp(-x)"; break;
        case Kind::geometric: os << "geometric(theta=" << theta_ << ")"; break;
        case Kind::pot_type2: os << "1 - (1+x)^(-" << alpha_ << ")"; break;
        case Kind::pot_type3: os << "1 - (1-x)^" << alpha_; break;
        case Kind::aot_table:
            os << "aot-table(";
            switch (form_) {
                case AotForm::neg_log: os << "neg_log"; break;
                case AotForm::power: os << "power,alpha=" << alpha_; break;
                case AotForm::bounded: os << "bounded,alpha=" << alpha_; break;
            }
            os << ",M=" << M_ << ")";
            break;
        case Kind::empirical:
            os << "empirical(" << samples_.size() << " samples)";
            break;
    }
    return os.str();
}

double compound_poisson_laplace(const CompoundPoissonModel& model,
                                const std::vector<Interval>& intervals,
                                const std::vector<double>& y) {
    if (intervals.size() != y.size()) {
        throw std::invalid_argument("compound_poisson_laplace: size mismatch");
    }
    std::vector<std::size_t> order(intervals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return intervals[a].a < intervals[b].a;
    });
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        if (intervals[order[k]].b > intervals[order[k + 1]].a) {
            throw std::invalid_argument("compound_poisson_laplace: overlapping intervals");
        }
    }
    double exponent = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (y[i] < 0.0) {
            throw std::invalid_argument("compound_poisson_laplace: y must be >= 0");
        }
        exponent += (1.0 - model.pi.laplace(y[i])) * intervals[i].length();
    }
    return std::exp(-model.theta * exponent);
}

MarkedMeasure compound_poisson_sample(const CompoundPoissonModel& model,
                                      double horizon, std::uint64_t seed) {
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("compound_poisson_sample: horizon must be positive");
    }
    Rng time_rng(derive_seed(seed, "cp_times", 0));
    Rng mark_rng(derive_seed(seed, "cp_marks", 0));
    MarkedMeasure m;
    m.mark_type = model.mark_type;
    m.v_n = 1.0;
    m.q = 0;
    double t = 0.0;
    while (true) {
        t += time_rng.exponential(model.theta);
        if (t >= horizon) break;
        m.times.push_back(t);
        m.marks.push_back(model.pi.sample(mark_rng));
    }
    return m;
}

}  // namespace repplab
