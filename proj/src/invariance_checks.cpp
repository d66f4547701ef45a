#include "invpred/invariance_checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "invpred/groups.hpp"
#include "invpred/mvn_predict.hpp"
#include "invpred/risk_mc.hpp"
#include "invpred/run_config.hpp"

namespace invpred {

namespace {

Vector normal_vector(Index d, RandomStream& s, double scale = 1.0) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = scale * s.normal();
    return v;
}

// Diagonal in [e^-1, e], standard normal above it.
Matrix upper_factor(Index d, RandomStream& s) {
    Matrix u = Matrix::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
        u(i, i) = std::exp(2.0 * s.uniform() - 1.0);
        for (Index j = i + 1; j < d; ++j) u(i, j) = s.normal();
    }
    return u;
}

GroupElementN random_gn(Index d, RandomStream& s) { return GroupElementN{upper_factor(d, s), normal_vector(d, s)}; }

GpGroupElement random_ggp(Index p, RandomStream& s) {
    const double a = std::exp(s.normal());
    return GpGroupElement{a, normal_vector(p, s)};
}

ObservationSet random_obs(Index n, Index d, RandomStream& s) {
    Matrix m(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) m(i, j) = s.normal();
    return ObservationSet(std::move(m));
}

// Spatial design on the unit square with features (1, x1, x2).
GpDesign random_design(Index n, Index m, RandomStream& s) {
    Matrix coords(n + m, 2);
    for (Index i = 0; i < n + m; ++i) coords.row(i) << s.uniform(), s.uniform();
    const Matrix f = with_constant_feature(coords);
    return GpDesign{f.topRows(n), f.bottomRows(m), 0.6};
}

double gn_distance(const GroupElementN& a, const GroupElementN& b) {
    return std::max((a.V - b.V).cwiseAbs().maxCoeff(), (a.m - b.m).cwiseAbs().maxCoeff());
}

double gp_distance(const GpGroupElement& a, const GpGroupElement& b) {
    return std::max(std::abs(a.a - b.a), (a.b - b.b).cwiseAbs().maxCoeff());
}

struct LocScale {
    Vector loc;
    Matrix scale;
};

LocScale gp_loc_scale(const GpFactorization& f, const Vector& y, GpPredictorKind kind) {
    switch (kind) {
        case GpPredictorKind::RightInvariant:
        case GpPredictorKind::Jeffreys: {
            const StudentTParams t =
                f.predict(y, kind == GpPredictorKind::RightInvariant ? GpPrior::RightInvariant : GpPrior::Jeffreys);
            return {t.loc, t.scale};
        }
        case GpPredictorKind::PluginUnbiased:
        case GpPredictorKind::PluginMLE: {
            const GpParams fit =
                f.gls_fit(y, kind == GpPredictorKind::PluginMLE ? GlsFlavor::MLE : GlsFlavor::Unbiased);
            const ConditionalNormal c = f.conditional(y, fit);
            return {c.mean, c.cov};
        }
    }
    return {};
}

class Suite {
public:
    explicit Suite(std::uint64_t seed) : seed_(seed) {}

    // Each property draws from its own stream, keyed by name.
    void add(std::string name, double tolerance, int cases, const std::function<double(RandomStream&)>& one,
             bool informational = false) {
        RandomStream s = RandomStream(seed_).substream(fnv1a64(name));
        double worst = 0.0;
        for (int i = 0; i < cases; ++i) worst = std::max(worst, one(s));
        results_.push_back(PropertyResult{std::move(name), worst <= tolerance, worst, tolerance, cases, informational});
    }

    std::vector<PropertyResult> take() { return std::move(results_); }

private:
    std::uint64_t seed_;
    std::vector<PropertyResult> results_;
};

}  // namespace

std::vector<PropertyResult> run_invariance_suite(const InvarianceOptions& options) {
    Suite suite(options.seed);
    const int nm = options.mvnCases, ng = options.gpCases;

    suite.add("G_N group axioms", 1e-10, nm, [](RandomStream& s) {
        const Index d = 1 + static_cast<Index>(s() % 3);
        const GroupElementN g1 = random_gn(d, s), g2 = random_gn(d, s), g3 = random_gn(d, s);
        const GroupElementN e = GroupElementN::identity(d);
        return std::max({gn_distance(gn_compose(gn_compose(g3, g2), g1), gn_compose(g3, gn_compose(g2, g1))),
                         gn_distance(gn_compose(g1, e), g1), gn_distance(gn_compose(e, g1), g1),
                         gn_distance(gn_compose(g1, gn_inverse(g1)), e),
                         gn_distance(gn_compose(gn_inverse(g1), g1), e)});
    });

    suite.add("G_N likelihood invariance", 1e-9, nm, [](RandomStream& s) {
        const Index d = 1 + static_cast<Index>(s() % 3);
        const GroupElementN g = random_gn(d, s);
        const MvnParams theta{normal_vector(d, s), upper_factor(d, s)};
        const Vector x = normal_vector(d, s, 2.0);
        const double lhs = mvn_logpdf(gn_act_point(g, x), gn_act_params(g, theta)) + gn_log_det(g);
        return std::abs(lhs - mvn_logpdf(x, theta));
    });

    for (MvnPredictorKind kind : kAllMvnPredictors) {
        suite.add("MVN predictive invariance " + std::string(to_string(kind)), 1e-9, nm, [kind](RandomStream& s) {
            const GroupElementN g = random_gn(2, s);
            const ObservationSet obs = random_obs(5, 2, s);
            const Vector x = normal_vector(2, s, 1.5);
            const double before = mvn_predict_logdensity(kind, obs, x).logDensity;
            const double after =
                mvn_predict_logdensity(kind, gn_act_data(g, obs), gn_act_point(g, x)).logDensity + gn_log_det(g);
            return std::abs(after - before);
        });
    }

    // The swapped predictive is invariant under the transposed (lower
    // triangular) action instead.
    suite.add(
        "RSwapped invariance under lower-triangular action", 1e-9, nm,
        [](RandomStream& s) {
            const GroupElementN g = random_gn(2, s);
            const ObservationSet obs = random_obs(5, 2, s);
            const Vector x = normal_vector(2, s, 1.5);
            const Matrix lower = g.V.transpose();
            const ObservationSet moved((obs.data() * lower.transpose()).rowwise() + g.m.transpose());
            const auto kind = MvnPredictorKind::RightInvariantSwapped;
            const double after = mvn_predict_logdensity(kind, moved, lower * x + g.m).logDensity + gn_log_det(g);
            return std::abs(after - mvn_predict_logdensity(kind, obs, x).logDensity);
        },
        true);

    suite.add("G_GP group axioms", 1e-10, ng, [](RandomStream& s) {
        const GpGroupElement g1 = random_ggp(3, s), g2 = random_ggp(3, s), g3 = random_ggp(3, s);
        const GpGroupElement e = GpGroupElement::identity(3);
        return std::max({gp_distance(gp_compose(gp_compose(g3, g2), g1), gp_compose(g3, gp_compose(g2, g1))),
                         gp_distance(gp_compose(g1, e), g1), gp_distance(gp_compose(g1, gp_inverse(g1)), e),
                         gp_distance(gp_compose(gp_inverse(g1), g1), e)});
    });

    suite.add("G_GP conditional density", 1e-8, ng, [](RandomStream& s) {
        const GpFactorization f(random_design(6, 2, s));
        const GpParams theta{normal_vector(3, s), std::exp(0.5 * s.normal())};
        Vector y, yStar;
        f.sample_joint(theta, s, y, yStar);
        const GpGroupElement g = random_ggp(3, s);
        const GpActResult r = gp_act(g, f.design().trainX, y, f.design().predX, yStar, theta);
        const double before = f.conditional_logpdf(y, yStar, theta);
        const double after = f.conditional_logpdf(r.y, r.yStar, r.params) + 2.0 * std::log(g.a);
        return std::abs(after - before);
    });

    for (GpPredictorKind kind : kAllGpPredictors) {
        const std::string tag(to_string(kind));
        auto instance = [kind](RandomStream& s) {
            const GpFactorization f(random_design(7, 2, s));
            const Vector y = normal_vector(7, s);
            const GpGroupElement g = random_ggp(3, s);
            const GpActResult moved =
                gp_act(g, f.design().trainX, y, f.design().predX, Vector::Zero(2), GpParams{Vector::Zero(3), 1.0});
            return std::tuple{gp_loc_scale(f, y, kind), gp_loc_scale(f, moved.y, kind), g, f.design().predX};
        };
        suite.add("GP location equivariance " + tag, 1e-9, ng, [instance](RandomStream& s) {
            const auto [before, after, g, predX] = instance(s);
            const Vector expect = g.a * before.loc + predX * g.b;
            return (after.loc - expect).norm() / (1.0 + expect.norm());
        });
        suite.add("GP scale equivariance " + tag, 1e-9, ng, [instance](RandomStream& s) {
            const auto [before, after, g, predX] = instance(s);
            return (after.scale - g.a * g.a * before.scale).norm() / after.scale.norm();
        });
    }

    return suite.take();
}

bool suite_passed(const std::vector<PropertyResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const PropertyResult& r) { return r.informational || r.passed; });
}

}  // namespace invpred
