#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "invpred/data_files.hpp"
#include "invpred/gp_predict.hpp"
#include "invpred/groups.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace invpred;
using namespace testutil;

namespace {

GpDesign frozen_design() {
    return make_spatial_gp_design(load_gp_design(INVPRED_DATA_DIR "/gp_design_v1.txt"), 1.0);
}

GpDesign random_design(Index n, Index m, double lengthscale, RandomStream& s) {
    Matrix coords(n + m, 2);
    for (Index i = 0; i < n + m; ++i) coords.row(i) << s.uniform(), s.uniform();
    const Matrix f = with_constant_feature(coords);
    return GpDesign{f.topRows(n), f.bottomRows(m), lengthscale};
}

Matrix stacked(const GpDesign& d) {
    Matrix all(d.n() + d.m(), d.p());
    all << d.trainX, d.predX;
    return all;
}

// Direct formula with dense inverses.
Matrix dense_A(const GpDesign& d) {
    const Matrix X = stacked(d);
    const Matrix kInv = oracle::rbf(X, X, d.lengthscale).inverse();
    return kInv - kInv * X * (X.transpose() * kInv * X).inverse() * X.transpose() * kInv;
}

template <class F>
ErrorKind error_kind(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("rbf_kernel") {
    const Matrix one{{0.3, 0.7}};
    CHECK(rbf_kernel(one, one, 0.5)(0, 0) == 1.0);
    const double l = 0.8;
    const Matrix two{{0.0, 0.0}, {l * std::sqrt(2.0), 0.0}};
    CHECK(rbf_kernel(two, two, l)(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    RandomStream s(1);
    const Matrix a = random_matrix(4, 2, s), b = random_matrix(3, 2, s);
    CHECK((rbf_kernel(a, b, 0.7) - oracle::rbf(a, b, 0.7)).cwiseAbs().maxCoeff() < 1e-14);
    const Matrix kaa = rbf_kernel(a, a, 0.7);
    CHECK(kaa == kaa.transpose());
    CHECK((kaa.diagonal().array() == 1.0).all());
}

TEST_CASE("A for the centering case") {
    const Matrix A = gp_a_from_kernel(Matrix::Identity(3, 3), Matrix::Ones(3, 1));
    CHECK((A - (Matrix::Identity(3, 3) - Matrix::Constant(3, 3, 1.0 / 3.0))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("A annihilates the features and is PSD") {
    RandomStream s(2);
    {
        // Well spread points: absolute check.
        Matrix coords(6, 2);
        coords << 0, 0, 2, 0, 0, 2, 2, 2, 1, 1, 3, 1;
        const Matrix f = with_constant_feature(coords);
        const GpAMatrix a = gp_build_A(GpDesign{f.topRows(5), f.bottomRows(1), 1.0});
        CHECK((a.A * f).cwiseAbs().maxCoeff() < 1e-8);
    }
    const GpDesign frozen = frozen_design();
    const GpAMatrix a = gp_build_A(frozen);
    const Matrix X = stacked(frozen);
    CHECK((a.A * X).norm() <= 1e-8 * a.A.norm() * X.norm());
    CHECK(a.A == a.A.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(a.A);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * eig.eigenvalues().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Matrix> app(Matrix(a.App()));
    CHECK(app.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("A agrees with the symmetric square root form") {
    RandomStream s(3);
    const GpDesign d = random_design(5, 1, 0.5, s);
    const Matrix X = stacked(d);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(oracle::rbf(X, X, d.lengthscale));
    const Matrix kInvHalf = eig.operatorInverseSqrt();
    const Matrix Z = kInvHalf * X;
    const Matrix proj = Matrix::Identity(6, 6) - Z * (Z.transpose() * Z).inverse() * Z.transpose();
    const Matrix alt = kInvHalf * proj * kInvHalf;
    const Matrix A = gp_build_A(d).A;
    CHECK((A - alt).norm() <= 1e-8 * A.norm());
    CHECK((A - dense_A(d)).norm() <= 1e-8 * A.norm());
}

TEST_CASE("gp_predict matches the dense block formula") {
    RandomStream s(4);
    for (int rep = 0; rep < 5; ++rep) {
        const GpDesign d = random_design(7, 2, 0.4, s);
        const Vector y = random_vector(7, s);
        const Matrix A = dense_A(d);
        const Matrix Aoo = A.topLeftCorner(7, 7), Aop = A.topRightCorner(7, 2), Apo = A.bottomLeftCorner(2, 7),
                     App = A.bottomRightCorner(2, 2);
        const Matrix appInv = App.inverse();
        const Vector loc = -appInv * Apo * y;
        const double q = y.dot((Aoo - Aop * appInv * Apo) * y);
        const StudentTParams t = gp_predict(d, y, GpPrior::RightInvariant);
        CHECK(t.nu == 4.0);
        CHECK((t.loc - loc).norm() <= 1e-8 * loc.norm());
        CHECK((t.scale - q / 4.0 * appInv).norm() <= 1e-7 * t.scale.norm());
        CHECK(q > 0.0);
    }
}

TEST_CASE("gp_predict agrees with the integrated posterior") {
    RandomStream s(5);
    const GpDesign d = random_design(6, 1, 0.6, s);
    const GpFactorization f(d);
    Vector y, ys;
    f.sample_joint(GpParams{Eigen::Vector3d(0.5, -1.0, 2.0), 0.7}, s, y, ys);
    const StudentTParams t = f.predict(y, GpPrior::RightInvariant);
    const double sd = std::sqrt(t.scale(0, 0));
    for (double z : {-2.5, -1.0, 0.0, 0.7, 3.0}) {
        const Vector yStar = t.loc + Vector::Constant(1, z * sd);
        const double ours = std::exp(mvt_logpdf(yStar, t));
        CHECK(rel_diff(ours, oracle::gp_predictive(d.trainX, y, d.predX, yStar, d.lengthscale)) < 1e-6);
    }
}

TEST_CASE("Jeffreys and right-invariant GP predictives") {
    RandomStream s(6);
    const GpDesign d = random_design(8, 1, 0.5, s);
    const Vector y = random_vector(8, s);
    const StudentTParams r = gp_predict(d, y, GpPrior::RightInvariant);
    const StudentTParams j = gp_predict(d, y, GpPrior::Jeffreys);
    CHECK((r.loc - j.loc).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(j.nu - r.nu == 3.0);
    CHECK((j.scale * j.nu - r.scale * r.nu).norm() <= 1e-12 * (r.scale * r.nu).norm());
}

TEST_CASE("symmetric design gives mirror-symmetric weights") {
    // Reflection x1 -> 1 - x1 maps the design to itself; the prediction point is on the axis.
    Matrix coords(7, 2);
    coords << 0.2, 0.1, 0.8, 0.1, 0.3, 0.6, 0.7, 0.6, 0.1, 0.9, 0.9, 0.9, 0.5, 0.4;
    const Matrix f = with_constant_feature(coords);
    const GpDesign d{f.topRows(6), f.bottomRows(1), 1.0};
    RandomStream s(7);
    Vector y(6);
    for (int k = 0; k < 3; ++k) y(2 * k) = y(2 * k + 1) = s.normal();
    y(0) += 0.3;  // keep y off the feature space
    Vector mirrored = y;
    for (int k = 0; k < 3; ++k) std::swap(mirrored(2 * k), mirrored(2 * k + 1));
    const double loc = gp_predict(d, y, GpPrior::RightInvariant).loc(0);
    CHECK(loc == doctest::Approx(gp_predict(d, mirrored, GpPrior::RightInvariant).loc(0)).epsilon(1e-10));
    // Equal values at the mirrored pair equidistant from the prediction point.
    Vector pair = Vector::Zero(6);
    pair(0) = pair(1) = 1.0;
    pair(4) = 0.2;
    const GpParams fit = gp_gls_fit(d, pair, GlsFlavor::MLE);
    const double kriging = gp_conditional_normal(d, pair, fit).mean(0);
    CHECK(gp_predict(d, pair, GpPrior::RightInvariant).loc(0) == doctest::Approx(kriging).epsilon(1e-9));
}

TEST_CASE("gls fit") {
    RandomStream s(8);
    const GpDesign d = random_design(9, 1, 1e-3, s);  // K is the identity to double precision
    const Vector y = random_vector(9, s);
    const GpParams mle = gp_gls_fit(d, y, GlsFlavor::MLE);
    const Vector ols = (d.trainX.transpose() * d.trainX).ldlt().solve(d.trainX.transpose() * y);
    CHECK((mle.beta - ols).norm() < 1e-10);
    const double rss = (y - d.trainX * ols).squaredNorm();
    CHECK(mle.sigmaY * mle.sigmaY == doctest::Approx(rss / 9.0).epsilon(1e-10));
    const GpParams unb = gp_gls_fit(d, y, GlsFlavor::Unbiased);
    CHECK(unb.sigmaY * unb.sigmaY == doctest::Approx(mle.sigmaY * mle.sigmaY * 9.0 / 6.0).epsilon(1e-13));

    const Vector inSpan = d.trainX * Eigen::Vector3d(1.0, -2.0, 0.5);
    CHECK(error_kind([&] { gp_gls_fit(d, inSpan, GlsFlavor::MLE); }) == ErrorKind::DegenerateObservation);
}

TEST_CASE("degenerate and invalid inputs") {
    const GpDesign d = frozen_design();
    const Vector inSpan = d.trainX * Eigen::Vector3d(3.0, 1.0, -4.0);
    CHECK(error_kind([&] { gp_predict(d, inSpan, GpPrior::RightInvariant); }) == ErrorKind::DegenerateObservation);
    CHECK(error_kind([&] { gp_predict(d, inSpan, GpPrior::Jeffreys); }) == ErrorKind::DegenerateObservation);

    GpDesign dup = d;
    dup.predX = d.trainX.row(2);
    CHECK(error_kind([&] { GpFactorization f(dup); }) == ErrorKind::SingularKernel);

    // A fourth feature x1 + x2 keeps the points distinct but the features dependent.
    GpDesign rank = d;
    rank.trainX.conservativeResize(Eigen::NoChange, 4);
    rank.predX.conservativeResize(Eigen::NoChange, 4);
    rank.trainX.col(3) = rank.trainX.col(1) + rank.trainX.col(2);
    rank.predX.col(3) = rank.predX.col(1) + rank.predX.col(2);
    rank.lengthscale = 0.3;
    CHECK(error_kind([&] { GpFactorization f(rank); }) == ErrorKind::RankDeficientFeatures);

    const GpDesign few = d.with_train_prefix(3);
    CHECK(error_kind([&] { gp_predict(few, Vector::Ones(3), GpPrior::RightInvariant); }) ==
          ErrorKind::InvalidArgument);
}

TEST_CASE("gp_conditional_normal") {
    RandomStream s(9);
    for (int rep = 0; rep < 5; ++rep) {
        const GpDesign d = random_design(6, 2, 0.5, s);
        const GpParams theta{random_vector(3, s), std::exp(s.normal())};
        const GpFactorization f(d);
        Vector y, ys;
        f.sample_joint(theta, s, y, ys);
        CHECK(std::abs(f.conditional_logpdf(y, ys, theta) -
                       oracle::gp_conditional_logpdf(d.trainX, y, d.predX, ys, theta.beta, theta.sigmaY,
                                                     d.lengthscale)) < 1e-9);
        const ConditionalNormal c = gp_conditional_normal(d, y, theta);
        CHECK(std::abs(mvn_logpdf_cov(ys, c.mean, c.cov) - f.conditional_logpdf(y, ys, theta)) < 1e-9);
    }

    const GpDesign d = random_design(5, 1, 0.5, s);
    const ConditionalNormal zero = gp_conditional_normal(d, Vector::Zero(5), GpParams{Vector::Zero(3), 2.0});
    CHECK(zero.mean.isZero());
    const Matrix koo = oracle::rbf(d.trainX, d.trainX, 0.5), kpo = oracle::rbf(d.predX, d.trainX, 0.5);
    CHECK(zero.cov(0, 0) == doctest::Approx(4.0 * (1.0 - kpo.row(0).dot(koo.inverse() * kpo.row(0).transpose()))));

    // Variance shrinks monotonically as the prediction point approaches a training point.
    double previous = std::numeric_limits<double>::infinity();
    for (double dist : {0.3, 0.1, 0.03, 0.01, 0.003}) {
        GpDesign moving = d;
        moving.predX = d.trainX.row(0);
        moving.predX(0, 1) += dist;
        const double v = gp_conditional_normal(moving, Vector::Zero(5), GpParams{Vector::Zero(3), 1.0}).cov(0, 0);
        CHECK(v < previous);
        previous = v;
    }
    CHECK(previous < 1e-3);

    // No observations: the marginal law.
    const GpDesign none = d.with_train_prefix(0);
    const ConditionalNormal marginal = gp_conditional_normal(none, Vector(), GpParams{Eigen::Vector3d(1, 2, 3), 1.5});
    CHECK(marginal.mean(0) == doctest::Approx(d.predX.row(0).dot(Eigen::Vector3d(1, 2, 3))));
    CHECK(marginal.cov(0, 0) == doctest::Approx(2.25));
}

TEST_CASE("entropy improvement") {
    const GpDesign d = frozen_design();
    CHECK(gp_entropy_improvement(d, 0) == 0.0);
    const GpParams a{Vector::Zero(3), 1.0}, b{Eigen::Vector3d(5.0, -2.0, 1.0), 17.0};
    for (Index k = 1; k <= 10; ++k) {
        const GpDesign prefix = d.with_train_prefix(k), none = d.with_train_prefix(0);
        const double viaA = gp_oracle_entropy(none, a) - gp_oracle_entropy(prefix, a);
        const double viaB = gp_oracle_entropy(none, b) - gp_oracle_entropy(prefix, b);
        CHECK(std::abs(viaA - viaB) < 1e-12);
        CHECK(std::abs(gp_entropy_improvement(d, k) - viaA) < 1e-12);
    }
    RandomStream s(10);
    for (int rep = 0; rep < 10; ++rep) {
        const GpDesign r = random_design(10, 1, 1.0, s);
        double previous = 0.0;
        for (Index k = 1; k <= 10; ++k) {
            const double v = gp_entropy_improvement(r, k);
            CHECK(v >= previous - 1e-12);
            previous = v;
        }
    }
    CHECK_THROWS_AS(gp_entropy_improvement(d, 11), Error);
}

TEST_CASE("G_GP equivariance of the predictive") {
    RandomStream s(11);
    double worstLoc = 0.0, worstScale = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const GpDesign d = random_design(7, 2, 0.6, s);
        const Vector y = random_vector(7, s);
        const GpGroupElement g{std::exp(s.normal()), random_vector(3, s)};
        const GpActResult moved = gp_act(g, d.trainX, y, d.predX, Vector::Zero(2), GpParams{Vector::Zero(3), 1.0});
        const StudentTParams before = gp_predict(d, y, GpPrior::RightInvariant);
        const StudentTParams after = gp_predict(d, moved.y, GpPrior::RightInvariant);
        const Vector expectLoc = g.a * before.loc + d.predX * g.b;
        worstLoc = std::max(worstLoc, (after.loc - expectLoc).norm() / (1.0 + expectLoc.norm()));
        worstScale = std::max(worstScale, (after.scale - g.a * g.a * before.scale).norm() / after.scale.norm());
        CHECK(after.nu == before.nu);
    }
    CHECK(worstLoc < 1e-9);
    CHECK(worstScale < 1e-9);
}

TEST_CASE("one-dimensional GP predictive integrates to one") {
    RandomStream s(12);
    for (int rep = 0; rep < 3; ++rep) {
        const GpDesign d = random_design(5 + rep, 1, 0.7, s);
        const StudentTParams t = gp_predict(d, random_vector(d.n(), s), GpPrior::RightInvariant);
        boost::math::quadrature::sinh_sinh<double> rule;
        const double mass =
            rule.integrate([&](double v) { return std::exp(mvt_logpdf(Vector::Constant(1, v), t)); }, 1e-10);
        CHECK(std::abs(mass - 1.0) < 1e-3);
    }
}

TEST_CASE("design file") {
    const SpatialDesign raw = load_gp_design(INVPRED_DATA_DIR "/gp_design_v1.txt");
    CHECK(raw.train.rows() == 10);
    CHECK(raw.predict.rows() == 1);
    CHECK(raw.train.cols() == 2);
    const GpDesign d = make_spatial_gp_design(raw, 1.0);
    CHECK(d.p() == 3);
    CHECK((d.trainX.col(0).array() == 1.0).all());
}
