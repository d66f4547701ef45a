#include "invpred/gp_predict.hpp"

#include <cmath>
#include <numbers>

namespace invpred {

namespace {

constexpr double kKernelPivotTolerance = 1e-14;
constexpr double kFeatureRankTolerance = 1e-10;

// Lower Cholesky factor of a kernel matrix with unit diagonal. A squared pivot
// at or below the tolerance means two rows are numerically the same point.
Matrix kernel_cholesky(const Matrix& k) {
    const Eigen::LLT<Matrix> llt(k);
    if (llt.info() != Eigen::Success) fail(ErrorKind::SingularKernel, "kernel matrix is not positive definite");
    Matrix l = llt.matrixL();
    for (Index j = 0; j < l.rows(); ++j)
        if (!(l(j, j) * l(j, j) > kKernelPivotTolerance * k(j, j)))
            fail(ErrorKind::SingularKernel, "kernel matrix is numerically singular (duplicate design points?)");
    return l;
}

void require_distinct_rows(const Matrix& x) {
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < i; ++j)
            if (x.row(i) == x.row(j)) fail(ErrorKind::SingularKernel, "design contains duplicate points");
}

// Thin QR of z; throws RankDeficientFeatures unless z has full column rank.
void thin_qr(const Matrix& z, Matrix& q, Matrix& r, const char* what) {
    const Eigen::HouseholderQR<Matrix> qr(z);
    const Index k = z.cols();
    q = qr.householderQ() * Matrix::Identity(z.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const double largest = r.diagonal().cwiseAbs().maxCoeff();
    for (Index j = 0; j < k; ++j)
        if (!(std::abs(r(j, j)) > kFeatureRankTolerance * largest) || !(largest > 0.0))
            fail(ErrorKind::RankDeficientFeatures, what);
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

void GpDesign::validate() const {
    require(lengthscale > 0.0 && std::isfinite(lengthscale), ErrorKind::InvalidArgument,
            "GpDesign: lengthscale must be positive");
    require(predX.rows() >= 1, ErrorKind::InvalidArgument, "GpDesign: need at least one prediction point");
    require(predX.cols() >= 1 && trainX.cols() == predX.cols(), ErrorKind::DimensionMismatch,
            "GpDesign: train and prediction features differ in width");
    require(trainX.allFinite() && predX.allFinite(), ErrorKind::InvalidArgument, "GpDesign: non-finite feature");
}

GpDesign GpDesign::with_train_prefix(Index count) const {
    require(count >= 0 && count <= n(), ErrorKind::InvalidArgument, "GpDesign: prefix longer than training set");
    GpDesign out = *this;
    out.trainX = trainX.topRows(count);
    return out;
}

GpKernelPack::GpKernelPack(const Matrix& kxx, Matrix ksx) : kxxLlt_(kxx), ksx_(std::move(ksx)) {
    require(kxx.rows() == kxx.cols() && ksx_.cols() == kxx.rows(), ErrorKind::DimensionMismatch,
            "GpKernelPack: kernel shape mismatch");
    kernel_cholesky(kxx);
    regression_ = kxxLlt_.solve(ksx_.transpose()).transpose();
}

Matrix rbf_kernel(const Matrix& X1, const Matrix& X2, double lengthscale) {
    require(lengthscale > 0.0, ErrorKind::InvalidArgument, "rbf_kernel: lengthscale must be positive");
    require(X1.cols() == X2.cols(), ErrorKind::DimensionMismatch, "rbf_kernel: feature widths differ");
    const double scale = -0.5 / (lengthscale * lengthscale);
    Matrix k(X1.rows(), X2.rows());
    for (Index i = 0; i < X1.rows(); ++i)
        for (Index j = 0; j < X2.rows(); ++j) k(i, j) = std::exp(scale * (X1.row(i) - X2.row(j)).squaredNorm());
    return k;
}

Matrix with_constant_feature(const Matrix& coords) {
    Matrix out(coords.rows(), coords.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(coords.cols()) = coords;
    return out;
}

namespace {

Matrix stacked_features(const GpDesign& design) {
    Matrix all(design.n() + design.m(), design.p());
    all << design.trainX, design.predX;
    return all;
}

// M = P L^{-1} with A = M^T M.
Matrix projected_whitener(const Matrix& lower, const Matrix& features, const char* what) {
    const Index count = lower.rows();
    const Matrix lInv = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(count, count));
    Matrix q, r;
    thin_qr(lInv * features, q, r, what);
    return lInv - q * (q.transpose() * lInv);
}

}  // namespace

GpFactorization::GpFactorization(GpDesign design) : design_(std::move(design)) {
    design_.validate();
    const Index n = design_.n(), m = design_.m(), p = design_.p();
    const Matrix all = stacked_features(design_);
    require_distinct_rows(all);
    lAll_ = kernel_cholesky(rbf_kernel(all, all, design_.lengthscale));

    const Matrix lOo = lAll_.topLeftCorner(n, n);
    const Matrix lPo = lAll_.bottomLeftCorner(m, n);
    regression_ = n == 0 ? Matrix(m, 0)
                         : Matrix(lOo.transpose().triangularView<Eigen::Upper>().solve(lPo.transpose()).transpose());
    condFactor_ = lAll_.bottomRightCorner(m, m);
    condLogdet_ = 2.0 * condFactor_.diagonal().array().log().sum();

    if (n <= p) return;
    predictable_ = true;

    const Matrix lOoInv = lOo.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    Matrix qn, rn;
    thin_qr(lOoInv * design_.trainX, qn, rn, "training features are rank deficient");
    residualMap_ = lOoInv - qn * (qn.transpose() * lOoInv);
    glsMap_ = rn.triangularView<Eigen::Upper>().solve(qn.transpose() * lOoInv);

    const Matrix whitener = projected_whitener(lAll_, all, "stacked features are rank deficient");
    Matrix qp, rp;
    thin_qr(whitener.rightCols(m), qp, rp, "A_pp is singular");
    locMap_ = -rp.triangularView<Eigen::Upper>().solve(qp.transpose() * whitener.leftCols(n));
    const Matrix rpInv = rp.triangularView<Eigen::Upper>().solve(Matrix::Identity(m, m));
    appInverse_ = symmetrized(rpInv * rpInv.transpose());
}

GpAMatrix GpFactorization::a_matrix() const {
    const Matrix whitener = projected_whitener(lAll_, stacked_features(design_), "stacked features are rank deficient");
    return GpAMatrix{symmetrized(whitener.transpose() * whitener), n(), m()};
}

GpKernelPack GpFactorization::kernel_pack() const {
    return GpKernelPack(rbf_kernel(design_.trainX, design_.trainX, design_.lengthscale),
                        rbf_kernel(design_.predX, design_.trainX, design_.lengthscale));
}

void GpFactorization::sample_joint(const GpParams& theta, RandomStream& stream, Vector& y, Vector& yStar) const {
    require(theta.beta.size() == p(), ErrorKind::DimensionMismatch, "sample_joint: beta has wrong length");
    const Index total = n() + m();
    Vector z(total);
    for (Index i = 0; i < total; ++i) z(i) = stream.normal();
    Vector noise = lAll_.triangularView<Eigen::Lower>() * z;
    noise *= theta.sigmaY;
    y = design_.trainX * theta.beta + noise.head(n());
    yStar = design_.predX * theta.beta + noise.tail(m());
}

ConditionalNormal GpFactorization::conditional(const Vector& y, const GpParams& theta) const {
    require(y.size() == n(), ErrorKind::DimensionMismatch, "conditional: y has wrong length");
    require(theta.beta.size() == p(), ErrorKind::DimensionMismatch, "conditional: beta has wrong length");
    require(theta.sigmaY > 0.0, ErrorKind::InvalidArgument, "conditional: sigmaY must be positive");
    ConditionalNormal out;
    out.mean = design_.predX * theta.beta;
    if (n() > 0) out.mean += regression_ * (y - design_.trainX * theta.beta);
    out.cov = symmetrized(theta.sigmaY * theta.sigmaY * condFactor_ * condFactor_.transpose());
    return out;
}

double GpFactorization::conditional_logpdf(const Vector& y, const Vector& yStar, const GpParams& theta) const {
    require(yStar.size() == m(), ErrorKind::DimensionMismatch, "conditional_logpdf: y* has wrong length");
    Vector mean = design_.predX * theta.beta;
    if (n() > 0) mean += regression_ * (y - design_.trainX * theta.beta);
    const Vector r = condFactor_.triangularView<Eigen::Lower>().solve(yStar - mean) / theta.sigmaY;
    const double dm = static_cast<double>(m());
    return -0.5 * dm * std::log(2.0 * std::numbers::pi) - dm * std::log(theta.sigmaY) - 0.5 * condLogdet_ -
           0.5 * r.squaredNorm();
}

void GpFactorization::require_predictable() const {
    require(predictable_, ErrorKind::InvalidArgument, "GP predictive needs more observations than features");
}

void GpFactorization::require_observation(const Vector& y) const {
    require(y.size() == n(), ErrorKind::DimensionMismatch, "y has wrong length");
    require(y.allFinite(), ErrorKind::InvalidArgument, "y has non-finite entries");
}

double GpFactorization::residual_quadratic(const Vector& y) const {
    require_predictable();
    require_observation(y);
    return (residualMap_ * y).squaredNorm();
}

StudentTParams GpFactorization::predict(const Vector& y, GpPrior prior) const {
    const double q = residual_quadratic(y);
    if (!(q > kDegenerateObservationTolerance * y.squaredNorm()))
        fail(ErrorKind::DegenerateObservation, "gp_predict: y lies in the feature column space");
    const double nu = static_cast<double>(prior == GpPrior::RightInvariant ? n() - p() : n());
    return StudentTParams{nu, locMap_ * y, (q / nu) * appInverse_};
}

GpParams GpFactorization::gls_fit(const Vector& y, GlsFlavor flavor) const {
    const double q = residual_quadratic(y);
    if (!(q > kDegenerateObservationTolerance * y.squaredNorm()))
        fail(ErrorKind::DegenerateObservation, "gp_gls_fit: zero residual");
    const double divisor = static_cast<double>(flavor == GlsFlavor::MLE ? n() : n() - p());
    return GpParams{glsMap_ * y, std::sqrt(q / divisor)};
}

Matrix gp_a_from_kernel(const Matrix& K, const Matrix& X) {
    require(K.rows() == K.cols() && X.rows() == K.rows(), ErrorKind::DimensionMismatch,
            "gp_a_from_kernel: shape mismatch");
    const Matrix whitener = projected_whitener(kernel_cholesky(K), X, "features are rank deficient");
    return symmetrized(whitener.transpose() * whitener);
}

GpKernelPack gp_kernel_pack(const GpDesign& design) {
    design.validate();
    return GpKernelPack(rbf_kernel(design.trainX, design.trainX, design.lengthscale),
                        rbf_kernel(design.predX, design.trainX, design.lengthscale));
}

GpAMatrix gp_build_A(const GpDesign& design) { return GpFactorization(design).a_matrix(); }

StudentTParams gp_predict(const GpDesign& design, const Vector& y, GpPrior prior) {
    return GpFactorization(design).predict(y, prior);
}

GpParams gp_gls_fit(const GpDesign& design, const Vector& y, GlsFlavor flavor) {
    return GpFactorization(design).gls_fit(y, flavor);
}

ConditionalNormal gp_conditional_normal(const GpDesign& design, const Vector& y, const GpParams& params) {
    return GpFactorization(design).conditional(y, params);
}

double gp_oracle_entropy(const GpDesign& design, const GpParams& params) {
    require(params.sigmaY > 0.0, ErrorKind::InvalidArgument, "gp_oracle_entropy: sigmaY must be positive");
    const GpFactorization f(design);
    const double dm = static_cast<double>(f.m());
    return 0.5 * dm * (1.0 + std::log(2.0 * std::numbers::pi)) + dm * std::log(params.sigmaY) +
           0.5 * f.conditional_logdet();
}

double gp_entropy_improvement(const GpDesign& design, Index nObs) {
    require(nObs >= 0 && nObs <= design.n(), ErrorKind::InvalidArgument,
            "gp_entropy_improvement: nObs exceeds the training set");
    if (nObs == 0) return 0.0;
    const double prior = GpFactorization(design.with_train_prefix(0)).conditional_logdet();
    const double posterior = GpFactorization(design.with_train_prefix(nObs)).conditional_logdet();
    return 0.5 * (prior - posterior);
}

}  // namespace invpred
