#pragma once

#include <span>

#include <Eigen/Dense>

#include "invpred/error.hpp"
#include "invpred/random_stream.hpp"

namespace invpred {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// n observed samples in R^d, one per row.
class ObservationSet {
public:
    ObservationSet() = default;
    explicit ObservationSet(Matrix data);

    Index n() const { return data_.rows(); }
    Index d() const { return data_.cols(); }
    const Matrix& data() const { return data_; }
    Vector row(Index i) const { return data_.row(i).transpose(); }

    // First `count` rows.
    ObservationSet head(Index count) const;

private:
    Matrix data_;
};

// Normal parameters as (mean, U) with covariance U U^T and U upper triangular
// with positive diagonal. Note this is the reverse of the usual lower
// triangular Cholesky convention: U is the factor acted on by the
// upper-triangular group from the left.
struct MvnParams {
    Vector mu;
    Matrix U;

    static MvnParams standard(Index d);
    Index dim() const { return mu.size(); }
    Matrix covariance() const { return U * U.transpose(); }
    void validate() const;
};

struct StudentTParams {
    double nu = 1.0;
    Vector loc;
    Matrix scale;

    Index dim() const { return loc.size(); }
    void validate() const;
};

struct SampleStats {
    Vector mean;
    Matrix scatter;  // sum_i (x_i - mean)(x_i - mean)^T
    Index count = 0;
};

// Upper-triangular U with U U^T = sigma + jitter*I. Throws NotPositiveDefinite
// on a pivot that is not positive beyond rounding (16 eps times its diagonal
// entry), InvalidArgument if sigma is not symmetric.
Matrix cholesky_upper(const Matrix& sigma, double jitter = 0.0);

// log det of the Gram matrix G_ij = <v_i, v_j>. The Gram matrix is scaled to
// unit diagonal before factorizing; a squared pivot at or below
// kGramPivotTolerance is reported as SingularGram.
inline constexpr double kGramPivotTolerance = 1e-14;
double gram_logdet(std::span<const Vector> vectors);

double mvn_logpdf(const Vector& x, const MvnParams& params);
double mvt_logpdf(const Vector& x, const StudentTParams& params);

// Log density of N(mean, cov) through an upper Cholesky factor of cov.
double mvn_logpdf_cov(const Vector& x, const Vector& mean, const Matrix& cov);

ObservationSet sample_mvn(const MvnParams& params, Index count, RandomStream& stream);

SampleStats sample_stats(const ObservationSet& obs);

// log|det| of a triangular matrix with positive diagonal.
double triangular_logdet(const Matrix& T);

}  // namespace invpred
