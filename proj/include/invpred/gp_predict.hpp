#pragma once

#include <Eigen/QR>

#include "invpred/gp_types.hpp"
#include "invpred/numcore.hpp"

namespace invpred {

// K(v, w)_ij = exp(-|v_i - w_j|^2 / (2 l^2))
Matrix rbf_kernel(const Matrix& X1, const Matrix& X2, double lengthscale);

// A = K^{-1} - K^{-1} X (X^T K^{-1} X)^{-1} X^T K^{-1} over all n + m points,
// train rows first.
struct GpAMatrix {
    Matrix A;
    Index n = 0;
    Index m = 0;

    auto Aoo() const { return A.topLeftCorner(n, n); }
    auto Aop() const { return A.topRightCorner(n, m); }
    auto Apo() const { return A.bottomLeftCorner(m, n); }
    auto App() const { return A.bottomRightCorner(m, m); }
};

enum class GpPrior { RightInvariant, Jeffreys };
enum class GlsFlavor { MLE, Unbiased };

struct ConditionalNormal {
    Vector mean;
    Matrix cov;
};

// Below this ratio y^T A_n y / |y|^2 the observation is treated as lying in the
// feature column space.
inline constexpr double kDegenerateObservationTolerance = 1e-12;

// Factorizations of one design, reusable across many observation vectors.
// Everything below is linear algebra on the fixed design; per-y work is a few
// small matrix-vector products.
//
// K over all points is factored as L L^T (lower, train rows first). With
// Z = L^{-1} X and P the projector onto col(Z)^perp, A = M^T M for M = P L^{-1}.
// Blocks of A are never formed explicitly on the per-y path.
class GpFactorization {
public:
    explicit GpFactorization(GpDesign design);

    const GpDesign& design() const { return design_; }
    Index n() const { return design_.n(); }
    Index m() const { return design_.m(); }
    Index p() const { return design_.p(); }

    GpAMatrix a_matrix() const;
    GpKernelPack kernel_pack() const;

    // Joint draw of (y, y*) from N(X_all beta, sigma^2 K_all).
    void sample_joint(const GpParams& theta, RandomStream& stream, Vector& y, Vector& yStar) const;

    // Law of y* given y at the given parameters. Works for n = 0.
    ConditionalNormal conditional(const Vector& y, const GpParams& theta) const;
    double conditional_logpdf(const Vector& y, const Vector& yStar, const GpParams& theta) const;

    // y^T (Aoo - Aop App^{-1} Apo) y; equals the GLS residual quadratic form.
    double residual_quadratic(const Vector& y) const;

    StudentTParams predict(const Vector& y, GpPrior prior) const;
    GpParams gls_fit(const Vector& y, GlsFlavor flavor) const;

    // log det of the unit-amplitude conditional covariance of y* given the
    // locations of the training points.
    double conditional_logdet() const { return condLogdet_; }

private:
    void require_observation(const Vector& y) const;
    void require_predictable() const;

    GpDesign design_;
    Matrix lAll_;         // lower Cholesky factor of K over all points
    Matrix regression_;   // K(x*, x) K(x, x)^{-1}
    Matrix condFactor_;   // lower factor of the unit-amplitude conditional covariance
    double condLogdet_ = 0.0;

    bool predictable_ = false;  // n > p and features of rank p
    Matrix residualMap_;  // M_n, with |M_n y|^2 = y^T A_n y
    Matrix glsMap_;       // beta_hat = glsMap_ y
    Matrix locMap_;       // -App^{-1} Apo
    Matrix appInverse_;
};

// The same A from an explicit kernel matrix K and feature matrix X (rows
// aligned). Throws SingularKernel / RankDeficientFeatures.
Matrix gp_a_from_kernel(const Matrix& K, const Matrix& X);

GpKernelPack gp_kernel_pack(const GpDesign& design);
GpAMatrix gp_build_A(const GpDesign& design);
StudentTParams gp_predict(const GpDesign& design, const Vector& y, GpPrior prior);
GpParams gp_gls_fit(const GpDesign& design, const Vector& y, GlsFlavor flavor);
ConditionalNormal gp_conditional_normal(const GpDesign& design, const Vector& y, const GpParams& params);

// Differential entropy of y* given y at the design's training locations.
double gp_oracle_entropy(const GpDesign& design, const GpParams& params);

// h_0 - h_nObs for the oracle predictive at the prediction points, where
// h_k uses the first k training points. Independent of (beta, sigmaY).
double gp_entropy_improvement(const GpDesign& design, Index nObs);

// (1, x1, ..., xk) feature rows from raw coordinates.
Matrix with_constant_feature(const Matrix& coords);

}  // namespace invpred
