#include "doctest.h"

#include <cmath>
#include <numbers>

#include "invpred/groups.hpp"
#include "invpred/mvn_predict.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace invpred;
using namespace testutil;
using K = MvnPredictorKind;

namespace {

double logq(K kind, const ObservationSet& obs, const Vector& x) {
    const PredictiveEvaluation e = mvn_predict_logdensity(kind, obs, x);
    REQUIRE(e.wellDefined);
    return e.logDensity;
}

ObservationSet swap_columns(const ObservationSet& obs) {
    Matrix m = obs.data();
    m.col(0).swap(m.col(1));
    return ObservationSet(m);
}

Vector swap2(const Vector& x) { return Eigen::Vector2d(x(1), x(0)); }

}  // namespace

TEST_CASE("tags round trip") {
    for (K kind : kAllMvnPredictors) CHECK(parse_mvn_predictor(to_string(kind)) == kind);
    CHECK_FALSE(parse_mvn_predictor("bogus").has_value());
}

TEST_CASE("univariate independence-Jeffreys predictive") {
    const ObservationSet obs(Matrix{{0.0}, {1.0}});
    const Vector x = Vector::Constant(1, 0.5);
    const double value = logq(K::IndependenceJeffreys, obs, x);
    CHECK(value == doctest::Approx(std::log(1.0 / (std::numbers::pi * std::sqrt(0.75)))).epsilon(1e-12));
    CHECK(std::abs(std::exp(value) - oracle::univariate_predictive(Vector::Map(obs.data().data(), 2), 0.5)) < 1e-6);

    RandomStream s(4);
    for (int rep = 0; rep < 5; ++rep) {
        const Vector data = random_vector(4 + rep, s);
        const double xs = 2.0 * s.normal();
        const double ours = std::exp(logq(K::IndependenceJeffreys, ObservationSet(Matrix(data)), Vector::Constant(1, xs)));
        CHECK(testutil::rel_diff(ours, oracle::univariate_predictive(data, xs)) < 1e-6);
    }
}

TEST_CASE("plug-in MLE at the sample mean") {
    RandomStream s(6);
    const ObservationSet obs = random_obs(3, 2, s);
    const SampleStats st = sample_stats(obs);
    const double expected = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log((st.scatter / 3.0).determinant());
    CHECK(logq(K::PluginMLE, obs, st.mean) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("closed forms match their definitions") {
    RandomStream s(9);
    for (Index d = 1; d <= 3; ++d) {
        const Index n = d + 3;
        const ObservationSet obs = random_obs(n, d, s);
        const SampleStats st = sample_stats(obs);
        const Vector x = random_vector(d, s);
        const double dn = double(n), dd = double(d);
        const double nuJ = dn - dd + 1.0, nuIJ = dn - dd;
        CHECK(nuJ - nuIJ == 1.0);
        CHECK(logq(K::Jeffreys, obs, x) ==
              doctest::Approx(mvt_logpdf(x, {nuJ, st.mean, (dn + 1.0) / (dn * nuJ) * st.scatter})));
        CHECK(logq(K::IndependenceJeffreys, obs, x) ==
              doctest::Approx(mvt_logpdf(x, {nuIJ, st.mean, (dn + 1.0) / (dn * nuIJ) * st.scatter})));
        CHECK(logq(K::PluginUnbiased, obs, x) == doctest::Approx(mvn_logpdf_cov(x, st.mean, st.scatter / (dn - 1.0))));
        CHECK(logq(K::PluginMLE, obs, x) == doctest::Approx(mvn_logpdf_cov(x, st.mean, st.scatter / dn)));
    }
}

TEST_CASE("definedness") {
    RandomStream s(10);
    const ObservationSet two = random_obs(2, 2, s);
    for (K kind : kAllMvnPredictors) CHECK_FALSE(mvn_predict_logdensity(kind, two, Vector::Zero(2)).wellDefined);
    const ObservationSet three = random_obs(3, 2, s);
    for (K kind : kAllMvnPredictors) CHECK(mvn_predict_logdensity(kind, three, Vector::Zero(2)).wellDefined);
    CHECK(mvn_predictor_defined(K::PluginUnbiased, 2, 1));
    CHECK_FALSE(mvn_predictor_defined(K::IndependenceJeffreys, 1, 1));
    const ObservationSet threeD = random_obs(5, 3, s);
    CHECK_THROWS_AS(mvn_predict_logdensity(K::RightInvariant, threeD, Vector::Zero(3)), Error);
    CHECK_THROWS_AS(mvn_predict_logdensity(K::Jeffreys, three, Vector::Zero(3)), Error);
}

TEST_CASE("right-invariant golden values") {
    // Frozen after agreement with the three-dimensional posterior integral.
    const ObservationSet obs(Matrix{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
    CHECK(std::exp(logq(K::RightInvariant, obs, Eigen::Vector2d(0.5, 0.5))) ==
          doctest::Approx(0.178207319732297).epsilon(1e-12));
    CHECK(std::exp(logq(K::RightInvariant, obs, Eigen::Vector2d(2.0, -1.0))) ==
          doctest::Approx(0.0153146915394943).epsilon(1e-12));
}

TEST_CASE("right-invariant matches the posterior integral") {
    RandomStream s(15);
    const ObservationSet obs = random_obs(5, 2, s);
    for (int rep = 0; rep < 2; ++rep) {
        const Vector x = random_vector(2, s, 1.5);
        const double ours = std::exp(logq(K::RightInvariant, obs, x));
        CHECK(rel_diff(ours, oracle::qR_posterior_predictive(obs.data(), x)) < 1e-6);
    }
}

TEST_CASE("right-invariant normalization") {
    RandomStream s(16);
    const ObservationSet five = random_obs(5, 2, s);
    CHECK(std::abs(mvn_qR_normalization_check(five, 1e-6) - 1.0) < 1e-3);
    const ObservationSet three = random_obs(3, 2, s);
    const double m3 = mvn_qR_normalization_check(three, 1e-4);
    CHECK(std::abs(m3 - 1.0) < 2e-2);
    const ObservationSet ten = random_obs(10, 2, s);
    const double m10 = mvn_qR_normalization_check(ten, 1e-6);
    CHECK(std::abs(m10 - 1.0) < 1e-3);
    const ObservationSet scaled(1000.0 * ten.data());
    CHECK(std::abs(mvn_qR_normalization_check(scaled, 1e-6) - m10) < 1e-3);
}

TEST_CASE("unnormalized right-invariant density") {
    RandomStream s(17);
    const ObservationSet obs = random_obs(4, 2, s);
    const Vector x0 = random_vector(2, s);
    const double gap0 = logq(K::RightInvariant, obs, x0) - mvn_qR_unnormalized_logdensity(obs, x0);
    for (int rep = 0; rep < 20; ++rep) {
        const Vector x = random_vector(2, s, 2.0);
        const double gap = logq(K::RightInvariant, obs, x) - mvn_qR_unnormalized_logdensity(obs, x);
        CHECK(std::abs(gap - gap0) < 1e-10);
    }

    Matrix asym = obs.data();
    asym.col(1) *= 3.0;
    const ObservationSet a(asym);
    CHECK(std::abs(mvn_qR_unnormalized_logdensity(a, x0) -
                   mvn_qR_unnormalized_logdensity(swap_columns(a), swap2(x0))) > 1e-3);

    // Scaling by 2 multiplies G3 by 16 and G4 by 4.
    const double n = 4.0;
    const double shifted = mvn_qR_unnormalized_logdensity(ObservationSet(2.0 * obs.data()), 2.0 * x0);
    CHECK(std::abs(shifted - mvn_qR_unnormalized_logdensity(obs, x0) + 2.0 * n * std::log(2.0)) < 1e-10);
}

TEST_CASE("G_N invariance of the predictive procedures") {
    RandomStream s(18);
    for (K kind : kAllMvnPredictors) {
        if (kind == K::RightInvariantSwapped) continue;
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const GroupElementN g{random_upper(2, s), random_vector(2, s)};
            const ObservationSet obs = random_obs(5, 2, s);
            const Vector x = random_vector(2, s, 1.5);
            const double lhs = logq(kind, gn_act_data(g, obs), gn_act_point(g, x)) + gn_log_det(g);
            worst = std::max(worst, std::abs(lhs - logq(kind, obs, x)));
        }
        INFO(to_string(kind));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("swapped right-invariant predictive") {
    RandomStream s(19);
    const ObservationSet obs = random_obs(5, 2, s);
    const Vector x = random_vector(2, s);
    CHECK(logq(K::RightInvariantSwapped, obs, x) ==
          doctest::Approx(logq(K::RightInvariant, swap_columns(obs), swap2(x))).epsilon(1e-14));
    CHECK(std::abs(logq(K::RightInvariantSwapped, obs, x) - logq(K::RightInvariant, obs, x)) > 1e-3);

    // Invariant under the lower-triangular (coordinate-swapped) group.
    double worstSwapped = 0.0, worstUpper = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const GroupElementN g{random_upper(2, s), random_vector(2, s)};
        const ObservationSet o = random_obs(5, 2, s);
        const Vector xs = random_vector(2, s, 1.5);
        const Matrix lower = g.V.transpose();
        const ObservationSet moved((o.data() * lower.transpose()).rowwise() + g.m.transpose());
        const double lhs = logq(K::RightInvariantSwapped, moved, lower * xs + g.m) + gn_log_det(g);
        worstSwapped = std::max(worstSwapped, std::abs(lhs - logq(K::RightInvariantSwapped, o, xs)));
        const double up = logq(K::RightInvariantSwapped, gn_act_data(g, o), gn_act_point(g, xs)) + gn_log_det(g);
        worstUpper = std::max(worstUpper, std::abs(up - logq(K::RightInvariantSwapped, o, xs)));
    }
    CHECK(worstSwapped < 1e-9);
    // Not invariant under generic upper-triangular V.
    CHECK(worstUpper > 1e-3);
}

TEST_CASE("tail ordering far from the data") {
    RandomStream s(20);
    for (int rep = 0; rep < 5; ++rep) {
        const ObservationSet obs = random_obs(6, 2, s);
        const SampleStats st = sample_stats(obs);
        const Vector far = st.mean + 10.0 * (st.scatter.diagonal() / 6.0).cwiseSqrt();
        const double plugMax = std::max(logq(K::PluginUnbiased, obs, far), logq(K::PluginMLE, obs, far));
        CHECK(logq(K::RightInvariant, obs, far) > plugMax);
        CHECK(logq(K::IndependenceJeffreys, obs, far) > plugMax);
        CHECK(logq(K::Jeffreys, obs, far) > plugMax);
    }
}

TEST_CASE("collinear data is rejected by the right-invariant predictive") {
    const ObservationSet line(Matrix{{0.0, 0.0}, {1.0, 2.0}, {2.0, 4.0}, {-1.5, -3.0}});
    for (K kind : {K::RightInvariant, K::RightInvariantSwapped}) {
        try {
            mvn_predict_logdensity(kind, line, Eigen::Vector2d(0.3, 0.1));
            FAIL("expected SingularGram");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::SingularGram);
        }
    }
    // Nearly collinear but in general position is fine.
    const ObservationSet near(Matrix{{0.0, 0.0}, {1.0, 2.0}, {2.0, 4.001}, {-1.5, -3.0}});
    CHECK(std::isfinite(logq(K::RightInvariant, near, Eigen::Vector2d(0.3, 0.1))));
    try {
        mvn_predict_logdensity(K::PluginMLE, line, Eigen::Vector2d(0.3, 0.1));
        FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
        CHECK(is_degeneracy(e.kind()));
    }
}
