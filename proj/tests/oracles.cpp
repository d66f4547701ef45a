#include "oracles.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/sinh_sinh.hpp>

namespace oracle {

namespace {

constexpr double kTol = 1e-10;

// exp of a log-integrand; the far tails of the substituted ranges produce
// inf - inf, which is a zero contribution.
double tail_exp(double logValue) { return std::isnan(logValue) ? 0.0 : std::exp(logValue); }

// Evidence of N bivariate points under the right-Haar prior.
double bivariate_evidence(const Matrix& pts) {
    const double N = static_cast<double>(pts.rows());
    const Vector mean = pts.colwise().mean();
    double suu = 0.0, suv = 0.0, svv = 0.0;
    for (int i = 0; i < pts.rows(); ++i) {
        const double du = pts(i, 0) - mean(0), dv = pts(i, 1) - mean(1);
        suu += du * du;
        suv += du * dv;
        svv += dv * dv;
    }
    const double logConst = (1.0 - N) * std::log(2.0 * std::numbers::pi) - std::log(N);
    boost::math::quadrature::sinh_sinh<double> rule;
    auto overS = [&](double s) {
        auto overT = [&](double t) {
            auto overBeta = [&](double beta) {
                const double quad = (suu - 2.0 * beta * suv + beta * beta * svv) * std::exp(-2.0 * s) / 2.0 +
                                    svv * std::exp(-2.0 * t) / 2.0;
                return tail_exp(logConst + (1.0 - N) * (s + t) - quad);
            };
            return rule.integrate(overBeta, kTol);
        };
        return rule.integrate(overT, kTol);
    };
    return rule.integrate(overS, kTol);
}

}  // namespace

double qR_posterior_predictive(const Matrix& obs, const Vector& xstar) {
    Matrix joint(obs.rows() + 1, 2);
    joint << obs, xstar.transpose();
    return bivariate_evidence(joint) / bivariate_evidence(obs);
}

namespace {

double univariate_evidence(const Vector& x) {
    const double N = static_cast<double>(x.size());
    const double S = (x.array() - x.mean()).square().sum();
    const double logConst = 0.5 * (1.0 - N) * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(N);
    boost::math::quadrature::sinh_sinh<double> rule;
    return rule.integrate([&](double s) { return tail_exp(logConst + (1.0 - N) * s - 0.5 * S * std::exp(-2.0 * s)); },
                          kTol);
}

double gp_evidence(const Matrix& X, const Vector& y, double lengthscale) {
    const double N = static_cast<double>(X.rows());
    const double p = static_cast<double>(X.cols());
    const Matrix K = rbf(X, X, lengthscale);
    const Eigen::PartialPivLU<Matrix> lu(K);
    const Matrix kInvX = lu.solve(X);
    const Vector kInvY = lu.solve(y);
    const Matrix M = X.transpose() * kInvX;
    const Eigen::LDLT<Matrix> ldlt(M);
    const Vector betaHat = ldlt.solve(X.transpose() * kInvY);
    const Vector resid = y - X * betaHat;
    const double Q = resid.dot(lu.solve(resid));
    const double logDetK = std::log(std::abs(lu.determinant()));
    const double logDetM = std::log(M.determinant());
    const double logConst = 0.5 * (p - N) * std::log(2.0 * std::numbers::pi) - 0.5 * logDetK - 0.5 * logDetM;
    // Integrand in s = log sigma; the prior d beta d sigma / sigma becomes ds.
    const double peak = 0.5 * std::log(Q / (N - p));
    const double logPeak = logConst + (p - N) * peak - 0.5 * Q * std::exp(-2.0 * peak);
    const double h = 0.01;
    double total = 0.0;
    for (int k = -4000; k <= 4000; ++k) {
        const double s = peak + k * h;
        total += std::exp(logConst + (p - N) * s - 0.5 * Q * std::exp(-2.0 * s) - logPeak);
    }
    return total * h * std::exp(logPeak);
}

}  // namespace

double univariate_predictive(const Vector& obs, double xstar) {
    Vector joint(obs.size() + 1);
    joint << obs, xstar;
    return univariate_evidence(joint) / univariate_evidence(obs);
}

Matrix rbf(const Matrix& a, const Matrix& b, double lengthscale) {
    Matrix k(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.rows(); ++j) {
            double d2 = 0.0;
            for (int c = 0; c < a.cols(); ++c) d2 += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
            k(i, j) = std::exp(-d2 / (2.0 * lengthscale * lengthscale));
        }
    return k;
}

double gp_predictive(const Matrix& trainX, const Vector& y, const Matrix& predX, const Vector& yStar,
                     double lengthscale) {
    Matrix allX(trainX.rows() + predX.rows(), trainX.cols());
    allX << trainX, predX;
    Vector allY(y.size() + yStar.size());
    allY << y, yStar;
    return gp_evidence(allX, allY, lengthscale) / gp_evidence(trainX, y, lengthscale);
}

double gp_conditional_logpdf(const Matrix& trainX, const Vector& y, const Matrix& predX, const Vector& yStar,
                             const Vector& beta, double sigma, double lengthscale) {
    const Matrix koo = rbf(trainX, trainX, lengthscale);
    const Matrix kpo = rbf(predX, trainX, lengthscale);
    const Matrix kpp = rbf(predX, predX, lengthscale);
    const Eigen::PartialPivLU<Matrix> lu(koo);
    const Vector mean = predX * beta + kpo * lu.solve(y - trainX * beta);
    const Matrix cov = sigma * sigma * (kpp - kpo * lu.solve(kpo.transpose()));
    const Vector r = yStar - mean;
    const double m = static_cast<double>(yStar.size());
    return -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant()) -
           0.5 * r.dot(cov.inverse() * r);
}

}  // namespace oracle
