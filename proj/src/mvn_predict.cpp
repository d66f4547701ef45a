#include "invpred/mvn_predict.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace invpred {

std::string_view to_string(MvnPredictorKind kind) {
    switch (kind) {
        case MvnPredictorKind::RightInvariant: return "R";
        case MvnPredictorKind::RightInvariantSwapped: return "RSwapped";
        case MvnPredictorKind::Jeffreys: return "J";
        case MvnPredictorKind::IndependenceJeffreys: return "IJ";
        case MvnPredictorKind::PluginUnbiased: return "unb";
        case MvnPredictorKind::PluginMLE: return "MLE";
    }
    return "?";
}

std::optional<MvnPredictorKind> parse_mvn_predictor(std::string_view tag) {
    for (MvnPredictorKind kind : kAllMvnPredictors)
        if (to_string(kind) == tag) return kind;
    return std::nullopt;
}

bool mvn_predictor_defined(MvnPredictorKind kind, Index n, Index d) {
    switch (kind) {
        case MvnPredictorKind::RightInvariant:
        case MvnPredictorKind::RightInvariantSwapped: return d == 2 && n > d;
        case MvnPredictorKind::Jeffreys:
        case MvnPredictorKind::IndependenceJeffreys: return n > d;
        case MvnPredictorKind::PluginUnbiased:
        case MvnPredictorKind::PluginMLE: return n >= 2 && n > d;
    }
    return false;
}

namespace {

// Right-invariant predictive for one bivariate data set. The columns are
// centered at the sample mean and scaled to unit root-mean-square before the
// Gram determinants are taken; every Gram set contains the ones vector, so
// centering leaves the determinants unchanged and the scales are added back
// in log space.
class RightInvariantDensity {
public:
    RightInvariantDensity(const ObservationSet& obs, bool swapped) : swapped_(swapped) {
        require(obs.d() == 2, ErrorKind::InvalidArgument, "right-invariant predictive requires d = 2");
        require(obs.n() > 2, ErrorKind::InvalidArgument, "right-invariant predictive requires n > 2");
        n_ = obs.n();
        const Index first = swapped ? 1 : 0;
        Vector u = obs.data().col(first);
        Vector v = obs.data().col(1 - first);
        meanU_ = u.mean();
        meanV_ = v.mean();
        u.array() -= meanU_;
        v.array() -= meanV_;
        const double ssU = u.squaredNorm(), ssV = v.squaredNorm();
        if (!(ssU > 0.0) || !(ssV > 0.0)) fail(ErrorKind::SingularGram, "right-invariant predictive: constant coordinate");
        scaleU_ = std::sqrt(ssU / static_cast<double>(n_));
        scaleV_ = std::sqrt(ssV / static_cast<double>(n_));
        u /= scaleU_;
        v /= scaleV_;

        const double dn = static_cast<double>(n_);
        const Vector ones = Vector::Ones(n_);
        const std::array<Vector, 2> g1{v, ones};
        const std::array<Vector, 3> g2{u, v, ones};
        const double logG1 = gram_logdet(g1);
        const double logG2 = gram_logdet(g2);
        logConst_ = std::log(dn - 2.0) - std::log(2.0 * std::numbers::pi) + 0.5 * (dn - 1.0) * std::log(dn + 1.0) -
                    0.5 * (dn - 2.0) * std::log(dn) + logG1 + 0.5 * (dn - 2.0) * logG2;

        uExt_.resize(n_ + 1);
        vExt_.resize(n_ + 1);
        uExt_.head(n_) = u;
        vExt_.head(n_) = v;
        onesExt_ = Vector::Ones(n_ + 1);
    }

    // Log of -((n-1)/2) log G3 - log G4 on the scaled copies.
    double scaled_tail(const Vector& xstar) {
        require(xstar.size() == 2, ErrorKind::DimensionMismatch, "right-invariant predictive: x* must be 2-D");
        const Index first = swapped_ ? 1 : 0;
        uExt_(n_) = (xstar(first) - meanU_) / scaleU_;
        vExt_(n_) = (xstar(1 - first) - meanV_) / scaleV_;
        const std::array<Vector, 3> g3{uExt_, vExt_, onesExt_};
        const std::array<Vector, 2> g4{vExt_, onesExt_};
        return -0.5 * (static_cast<double>(n_) - 1.0) * gram_logdet(g3) - gram_logdet(g4);
    }

    double log_density(const Vector& xstar) {
        return logConst_ + scaled_tail(xstar) - std::log(scaleU_) - std::log(scaleV_);
    }

    double unnormalized(const Vector& xstar) {
        const double logScales = std::log(scaleU_) + std::log(scaleV_);
        return scaled_tail(xstar) - (static_cast<double>(n_) - 1.0) * logScales - 2.0 * std::log(scaleV_);
    }

private:
    bool swapped_;
    Index n_ = 0;
    double meanU_ = 0.0, meanV_ = 0.0;
    double scaleU_ = 1.0, scaleV_ = 1.0;
    double logConst_ = 0.0;
    Vector uExt_, vExt_, onesExt_;
};

}  // namespace

PredictiveEvaluation mvn_predict_logdensity(MvnPredictorKind kind, const ObservationSet& obs, const Vector& xstar) {
    require(xstar.size() == obs.d(), ErrorKind::DimensionMismatch, "mvn_predict_logdensity: x* dimension mismatch");
    const bool rightInvariant =
        kind == MvnPredictorKind::RightInvariant || kind == MvnPredictorKind::RightInvariantSwapped;
    require(!rightInvariant || obs.d() == 2, ErrorKind::InvalidArgument,
            "mvn_predict_logdensity: right-invariant predictive requires d = 2");
    if (!mvn_predictor_defined(kind, obs.n(), obs.d())) return {};

    if (rightInvariant) {
        RightInvariantDensity density(obs, kind == MvnPredictorKind::RightInvariantSwapped);
        return {density.log_density(xstar), true};
    }

    const SampleStats stats = sample_stats(obs);
    const double n = static_cast<double>(obs.n());
    const double d = static_cast<double>(obs.d());
    switch (kind) {
        case MvnPredictorKind::Jeffreys: {
            const double nu = n - d + 1.0;
            return {mvt_logpdf(xstar, StudentTParams{nu, stats.mean, (n + 1.0) / (n * nu) * stats.scatter}), true};
        }
        case MvnPredictorKind::IndependenceJeffreys: {
            const double nu = n - d;
            return {mvt_logpdf(xstar, StudentTParams{nu, stats.mean, (n + 1.0) / (n * nu) * stats.scatter}), true};
        }
        case MvnPredictorKind::PluginUnbiased:
            return {mvn_logpdf_cov(xstar, stats.mean, stats.scatter / (n - 1.0)), true};
        case MvnPredictorKind::PluginMLE:
            return {mvn_logpdf_cov(xstar, stats.mean, stats.scatter / n), true};
        default: break;
    }
    fail(ErrorKind::InvalidArgument, "mvn_predict_logdensity: unknown predictor");
}

double mvn_qR_unnormalized_logdensity(const ObservationSet& obs, const Vector& xstar) {
    RightInvariantDensity density(obs, false);
    return density.unnormalized(xstar);
}

double mvn_qR_normalization_check(const ObservationSet& obs, double relTol) {
    require(relTol > 0.0, ErrorKind::InvalidArgument, "mvn_qR_normalization_check: relTol must be positive");
    RightInvariantDensity density(obs, false);
    const SampleStats stats = sample_stats(obs);
    const double n = static_cast<double>(obs.n());
    // Upper factor: the slowest tail runs along the first coordinate at fixed
    // second coordinate, and with x* = mean + U t that is the t1 axis, so the
    // mass at infinity lands on a face of the square rather than a corner.
    const Matrix L = cholesky_upper(stats.scatter / (n - 2.0));
    const double logDetL = std::log(L(0, 0)) + std::log(L(1, 1));

    using Rule = boost::math::quadrature::gauss<double, 20>;
    const auto& abscissa = Rule::abscissa();
    const auto& weights = Rule::weights();
    // The rule stores the nonnegative half of a symmetric rule.
    std::vector<double> nodes, nodeWeights;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        nodes.push_back(abscissa[i]);
        nodeWeights.push_back(weights[i]);
        if (abscissa[i] != 0.0) {
            nodes.push_back(-abscissa[i]);
            nodeWeights.push_back(weights[i]);
        }
    }

    const double half = 0.5 * std::numbers::pi;
    auto integrate = [&](int panels) {
        std::vector<double> phi, w;
        const double width = 2.0 * half / panels;
        for (int k = 0; k < panels; ++k) {
            const double centre = -half + (k + 0.5) * width;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                phi.push_back(centre + 0.5 * width * nodes[i]);
                w.push_back(0.5 * width * nodeWeights[i]);
            }
        }
        std::vector<double> t(phi.size()), jac(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) {
            t[i] = std::tan(phi[i]);
            jac[i] = w[i] * (1.0 + t[i] * t[i]);
        }
        double total = 0.0;
        Vector x(2);
        for (std::size_t i = 0; i < t.size(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < t.size(); ++j) {
                x = stats.mean + L * Eigen::Vector2d(t[i], t[j]);
                row += jac[j] * std::exp(density.log_density(x) + logDetL);
            }
            total += jac[i] * row;
        }
        return total;
    };

    double previous = integrate(4);
    for (int panels = 8; panels <= 128; panels *= 2) {
        const double current = integrate(panels);
        if (std::abs(current - previous) <= relTol * std::abs(current)) return current;
        previous = current;
    }
    fail(ErrorKind::QuadratureNotConverged, "mvn_qR_normalization_check: refinements did not agree");
}

}  // namespace invpred
