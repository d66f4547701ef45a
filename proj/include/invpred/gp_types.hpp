#pragma once

#include <Eigen/Cholesky>

#include "invpred/numcore.hpp"

namespace invpred {

// Feature rows for the observed (train) and prediction points. The kernel is
// evaluated on the same rows, so a constant feature column does not affect it;
// the spatial experiment uses (1, x1, x2).
struct GpDesign {
    Matrix trainX;  // n x p
    Matrix predX;   // m x p
    double lengthscale = 1.0;

    Index n() const { return trainX.rows(); }
    Index m() const { return predX.rows(); }
    Index p() const { return trainX.cols(); }
    void validate() const;

    // Same prediction rows, first `count` training rows.
    GpDesign with_train_prefix(Index count) const;
};

struct GpParams {
    Vector beta;
    double sigmaY = 1.0;
};

// Kernel blocks shared between the group action and the predictors:
// K(x*, x) and a Cholesky factor of K(x, x).
class GpKernelPack {
public:
    // Throws SingularKernel if kxx is not numerically positive definite.
    GpKernelPack(const Matrix& kxx, Matrix ksx);

    const Matrix& cross() const { return ksx_; }
    const Eigen::LLT<Matrix>& train_factor() const { return kxxLlt_; }
    // K(x*, x) K(x, x)^{-1}
    const Matrix& regression() const { return regression_; }

private:
    Eigen::LLT<Matrix> kxxLlt_;
    Matrix ksx_;
    Matrix regression_;
};

}  // namespace invpred
