#include "invpred/numcore.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace invpred {

namespace {

constexpr double kPivotRoundoff = 16.0 * std::numeric_limits<double>::epsilon();

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_symmetric(const Matrix& m, double relTol, const char* what) {
    require(m.rows() == m.cols(), ErrorKind::DimensionMismatch, what);
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > relTol * scale) fail(ErrorKind::InvalidArgument, std::string(what) + ": not symmetric");
}

}  // namespace

ObservationSet::ObservationSet(Matrix data) : data_(std::move(data)) {
    require(data_.rows() >= 1 && data_.cols() >= 1, ErrorKind::InvalidArgument,
            "ObservationSet: need n >= 1 and d >= 1");
    require(all_finite(data_), ErrorKind::InvalidArgument, "ObservationSet: non-finite entry");
}

ObservationSet ObservationSet::head(Index count) const {
    require(count >= 1 && count <= n(), ErrorKind::InvalidArgument, "ObservationSet::head: bad count");
    return ObservationSet(data_.topRows(count));
}

MvnParams MvnParams::standard(Index d) {
    return MvnParams{Vector::Zero(d), Matrix::Identity(d, d)};
}

void MvnParams::validate() const {
    require(U.rows() == mu.size() && U.cols() == mu.size(), ErrorKind::DimensionMismatch,
            "MvnParams: U must be d x d");
    for (Index j = 0; j < U.cols(); ++j) {
        require(U(j, j) > 0.0, ErrorKind::InvalidArgument, "MvnParams: U diagonal must be positive");
        for (Index i = j + 1; i < U.rows(); ++i)
            require(U(i, j) == 0.0, ErrorKind::InvalidArgument, "MvnParams: U must be upper triangular");
    }
}

void StudentTParams::validate() const {
    require(nu > 0.0, ErrorKind::InvalidArgument, "StudentTParams: nu must be positive");
    require(scale.rows() == loc.size() && scale.cols() == loc.size(), ErrorKind::DimensionMismatch,
            "StudentTParams: scale must be m x m");
    require_symmetric(scale, 1e-12, "StudentTParams scale");
}

Matrix cholesky_upper(const Matrix& sigma, double jitter) {
    require_symmetric(sigma, 1e-10, "cholesky_upper");
    const Index d = sigma.rows();
    Matrix U = Matrix::Zero(d, d);
    for (Index j = d - 1; j >= 0; --j) {
        double pivot = sigma(j, j) + jitter;
        for (Index k = j + 1; k < d; ++k) pivot -= U(j, k) * U(j, k);
        // A pivot at rounding level relative to its diagonal entry is a zero pivot.
        if (!(pivot > kPivotRoundoff * (sigma(j, j) + jitter)))
            fail(ErrorKind::NotPositiveDefinite, "cholesky_upper: non-positive pivot");
        U(j, j) = std::sqrt(pivot);
        for (Index i = 0; i < j; ++i) {
            double s = sigma(i, j);
            for (Index k = j + 1; k < d; ++k) s -= U(i, k) * U(j, k);
            U(i, j) = s / U(j, j);
        }
    }
    return U;
}

double gram_logdet(std::span<const Vector> vectors) {
    const Index k = static_cast<Index>(vectors.size());
    require(k >= 1, ErrorKind::InvalidArgument, "gram_logdet: need at least one vector");
    const Index len = vectors[0].size();
    for (const auto& v : vectors)
        require(v.size() == len, ErrorKind::DimensionMismatch, "gram_logdet: vectors differ in length");

    Matrix G(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j <= i; ++j) G(i, j) = G(j, i) = vectors[i].dot(vectors[j]);

    Vector logDiag(k);
    for (Index i = 0; i < k; ++i) {
        if (!(G(i, i) > 0.0)) fail(ErrorKind::SingularGram, "gram_logdet: zero vector");
        logDiag(i) = std::log(G(i, i));
    }
    const Vector inv = (-0.5 * logDiag).array().exp();
    const Matrix scaled = inv.asDiagonal() * G * inv.asDiagonal();

    // Plain lower Cholesky of the unit-diagonal matrix; pivots live in (0, 1].
    Matrix L = Matrix::Zero(k, k);
    double logdet = logDiag.sum();
    for (Index j = 0; j < k; ++j) {
        double pivot = scaled(j, j) - L.row(j).head(j).squaredNorm();
        if (!(pivot > kGramPivotTolerance)) fail(ErrorKind::SingularGram, "gram_logdet: numerically singular Gram matrix");
        L(j, j) = std::sqrt(pivot);
        logdet += std::log(pivot);
        for (Index i = j + 1; i < k; ++i)
            L(i, j) = (scaled(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
    return logdet;
}

double triangular_logdet(const Matrix& T) {
    return T.diagonal().array().log().sum();
}

double mvn_logpdf(const Vector& x, const MvnParams& params) {
    require(x.size() == params.dim(), ErrorKind::DimensionMismatch, "mvn_logpdf: dimension mismatch");
    params.validate();
    const double d = static_cast<double>(x.size());
    const Vector r = params.U.triangularView<Eigen::Upper>().solve(x - params.mu);
    return -0.5 * d * std::log(2.0 * std::numbers::pi) - triangular_logdet(params.U) - 0.5 * r.squaredNorm();
}

double mvn_logpdf_cov(const Vector& x, const Vector& mean, const Matrix& cov) {
    require(cov.rows() == mean.size(), ErrorKind::DimensionMismatch, "mvn_logpdf_cov: dimension mismatch");
    return mvn_logpdf(x, MvnParams{mean, cholesky_upper(cov)});
}

double mvt_logpdf(const Vector& x, const StudentTParams& params) {
    require(x.size() == params.dim(), ErrorKind::DimensionMismatch, "mvt_logpdf: dimension mismatch");
    params.validate();
    const Eigen::LLT<Matrix> llt(params.scale);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all())
        fail(ErrorKind::NotPositiveDefinite, "mvt_logpdf: scale not positive definite");
    const Vector r = llt.matrixL().solve(x - params.loc);
    const double m = static_cast<double>(x.size());
    const double nu = params.nu;
    double logdet = 0.0;
    for (Index i = 0; i < params.dim(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    return std::lgamma(0.5 * (nu + m)) - std::lgamma(0.5 * nu) - 0.5 * m * std::log(nu * std::numbers::pi) -
           0.5 * logdet - 0.5 * (nu + m) * std::log1p(r.squaredNorm() / nu);
}

ObservationSet sample_mvn(const MvnParams& params, Index count, RandomStream& stream) {
    require(count >= 1, ErrorKind::InvalidArgument, "sample_mvn: count must be >= 1");
    params.validate();
    const Index d = params.dim();
    Matrix out(count, d);
    Vector z(d);
    for (Index i = 0; i < count; ++i) {
        for (Index j = 0; j < d; ++j) z(j) = stream.normal();
        out.row(i) = (params.mu + params.U.triangularView<Eigen::Upper>() * z).transpose();
    }
    return ObservationSet(std::move(out));
}

SampleStats sample_stats(const ObservationSet& obs) {
    SampleStats stats;
    stats.count = obs.n();
    stats.mean = obs.data().colwise().mean().transpose();
    const Matrix centered = obs.data().rowwise() - stats.mean.transpose();
    stats.scatter = centered.transpose() * centered;
    // Symmetric by construction up to rounding in the product; make it exact.
    stats.scatter = 0.5 * (stats.scatter + stats.scatter.transpose()).eval();
    return stats;
}

}  // namespace invpred
