#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repplab/observables.hpp"
#include "repplab/pointprocess.hpp"
#include "repplab/rng.hpp"

namespace repplab {

// ---------------------------------------------------------------------------
// extremal index
// ---------------------------------------------------------------------------

enum class ZetaKind { interior_periodic, boundary, aperiodic };

// The boundary target 0 ~ 1 admits two readings of the two-sided formula; both
// are reported and the simulation adjudicates between them.
struct ThetaResult {
    double theta = 1.0;       // value used by models (normalized, for boundary)
    double verbatim = 1.0;    // h(0)(1-1/beta) + h(1)(1-beta^{-p}) as printed
    double normalized = 1.0;  // verbatim / (h(0) + h(1))
    ZetaKind kind = ZetaKind::aperiodic;
    int p = 1;
};

ThetaResult extremal_index(double beta, ZetaKind kind, int p = 1,
                           double h_at_0 = 1.0, double h_at_1 = 1.0);

// cluster-size law theta (1-theta)^{k-1}
double repp_multiplicity(double theta, std::int64_t k);

// ---------------------------------------------------------------------------
// multiplicity distributions
// ---------------------------------------------------------------------------

double pot_multiplicity(const Observable& obs, double x);

enum class AotForm { neg_log, power, bounded };

AotForm aot_form_of(const Observable& obs);

// Closed-form AOT multiplicity rows, M = beta^p. The kappa bracket is found by
// a linear scan; consecutive brackets tile [0, inf).
double aot_multiplicity_table(AotForm form, double alpha, double M, double x);

struct AotGeneralResult {
    double pi = 0.0;
    std::int64_t kappa = 0;
    bool ok = true;  // false when the root finder could not bracket
};

// Pre-limit evaluation at finite level u: finds kappa from the g_{kappa,u}
// brackets and solves g_{kappa,u}(g^{-1}(u) t) = x / a_n for t by bisection.
AotGeneralResult aot_multiplicity_general(const Observable& obs, double M,
                                          double u, double x);

// pi as a sampleable object with cdf and Laplace transform
class MultiplicityDist {
public:
    enum class Kind {
        unit,       // point mass at 1
        exponential,
        geometric,
        pot_type2,
        pot_type3,
        aot_table,
        empirical
    };

    static MultiplicityDist unit();
    static MultiplicityDist exponential();
    static MultiplicityDist geometric(double theta);
    static MultiplicityDist pot(const Observable& obs);
    static MultiplicityDist aot(AotForm form, double alpha, double M);
    static MultiplicityDist empirical(std::vector<double> samples);

    double cdf(double x) const;
    double laplace(double y) const;
    double sample(Rng& rng) const;
    std::string describe() const;
    Kind kind() const { return kind_; }

private:
    Kind kind_ = Kind::unit;
    double theta_ = 1.0;  // geometric
    double alpha_ = 1.0;  // pot_type2/3, aot
    double M_ = 2.0;      // aot
    AotForm form_ = AotForm::neg_log;
    std::vector<double> samples_;  // empirical, sorted

    double laplace_quadrature(double y) const;
    double tail_support() const;  // x with 1 - cdf(x) below 1e-12 (capped)
};

// ---------------------------------------------------------------------------
// compound Poisson limit
// ---------------------------------------------------------------------------

struct CompoundPoissonModel {
    double theta = 1.0;
    MultiplicityDist pi = MultiplicityDist::unit();
    MarkType mark_type = MarkType::repp;
};

// joint Laplace transform exp(-theta sum (1 - phi(y_l)) |I_l|)
double compound_poisson_laplace(const CompoundPoissonModel& model,
                                const std::vector<Interval>& intervals,
                                const std::vector<double>& y);

// event times are partial sums of iid Exp(theta); marks iid from pi
MarkedMeasure compound_poisson_sample(const CompoundPoissonModel& model,
                                      double horizon, std::uint64_t seed);

}  // namespace repplab
