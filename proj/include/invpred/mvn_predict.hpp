#pragma once

#include <optional>
#include <string_view>

#include "invpred/numcore.hpp"

namespace invpred {

enum class MvnPredictorKind {
    RightInvariant,
    RightInvariantSwapped,
    Jeffreys,
    IndependenceJeffreys,
    PluginUnbiased,
    PluginMLE,
};

inline constexpr MvnPredictorKind kAllMvnPredictors[] = {
    MvnPredictorKind::RightInvariant,       MvnPredictorKind::RightInvariantSwapped,
    MvnPredictorKind::Jeffreys,             MvnPredictorKind::IndependenceJeffreys,
    MvnPredictorKind::PluginUnbiased,       MvnPredictorKind::PluginMLE,
};

// Short tags used in configs and tables: R, RSwapped, J, IJ, unb, MLE.
std::string_view to_string(MvnPredictorKind kind);
std::optional<MvnPredictorKind> parse_mvn_predictor(std::string_view tag);

struct PredictiveEvaluation {
    double logDensity = 0.0;
    bool wellDefined = false;
};

// Whether the predictor exists for n observations in dimension d: the t-based
// and right-invariant kinds need n > d, the plug-ins need n >= 2 and a
// nonsingular scatter matrix, which again means n > d.
bool mvn_predictor_defined(MvnPredictorKind kind, Index n, Index d);

// Next-sample predictive log density. Returns wellDefined = false when the
// predictor does not exist for (n, d). The right-invariant kinds require d = 2.
// Throws SingularGram / NotPositiveDefinite for data in special position.
PredictiveEvaluation mvn_predict_logdensity(MvnPredictorKind kind, const ObservationSet& obs, const Vector& xstar);

// The right-invariant predictive before normalization,
// -((n-1)/2) log det G((u;u*), (v;v*), 1) - log det G((v;v*), 1).
double mvn_qR_unnormalized_logdensity(const ObservationSet& obs, const Vector& xstar);

// Total mass of the right-invariant predictive over the plane, by tensor
// Gauss-Legendre quadrature after the substitution x* = mean + L tan(phi),
// U U^T = S/(n-2) with U upper triangular. The panel count doubles until successive estimates agree to
// relTol; QuadratureNotConverged otherwise.
double mvn_qR_normalization_check(const ObservationSet& obs, double relTol);

}  // namespace invpred
