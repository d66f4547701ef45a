#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "invpred/gp_predict.hpp"
#include "invpred/mvn_predict.hpp"

namespace invpred {

struct MvnModel {
    MvnParams theta;
};

// The full design; an experiment with n observations uses its first n
// training rows and all prediction rows.
struct GpModel {
    GpDesign design;
    GpParams theta;
};

using Model = std::variant<MvnModel, GpModel>;

enum class GpPredictorKind { RightInvariant, Jeffreys, PluginUnbiased, PluginMLE };

inline constexpr GpPredictorKind kAllGpPredictors[] = {
    GpPredictorKind::RightInvariant, GpPredictorKind::Jeffreys, GpPredictorKind::PluginUnbiased,
    GpPredictorKind::PluginMLE};

// R, J, unb, MLE (the right-invariant GP predictive is also the
// independence-Jeffreys one; "IJ" parses to it).
std::string_view to_string(GpPredictorKind kind);
std::optional<GpPredictorKind> parse_gp_predictor(std::string_view tag);

// The true conditional law used as a predictor; every per-sample term is 0.
struct OraclePredictor {};

// User-supplied next-sample MVN predictor (log density at x* given obs).
struct CustomMvnPredictor {
    std::string name;
    std::function<PredictiveEvaluation(const ObservationSet&, const Vector&)> logDensity;
};

using Predictor = std::variant<OraclePredictor, MvnPredictorKind, GpPredictorKind, CustomMvnPredictor>;

std::string predictor_name(const Predictor& p);

// Parses "oracle" and the MVN or GP tags, depending on the model kind.
std::optional<Predictor> parse_predictor(std::string_view tag, bool gpModel);

struct ExperimentSpec {
    Model model;
    Predictor predictor;
    Index n = 0;
    Index m = 1;
    std::uint64_t nSamples = 0;
    std::uint64_t seed = 0;
    unsigned shards = 1;
};

struct RiskEstimate {
    double mean = 0.0;
    double stdErr = 0.0;
    std::uint64_t nSamples = 0;
    std::uint64_t nUndefined = 0;

    bool operator==(const RiskEstimate&) const = default;
};

// Samples per accumulation block. Blocks are the unit of work for shards and
// are merged in block order, which makes results independent of the shard
// count.
inline constexpr std::uint64_t kRiskBlockSize = 4096;

// The run fails when undefined samples reach this fraction.
inline constexpr double kMaxUndefinedFraction = 1e-6;

// Whether the predictor exists for this model and n (e.g. n > d for t-based
// MVN predictors, n > p for every GP predictor).
bool predictor_defined(const Model& model, const Predictor& predictor, Index n);

// Monte Carlo predictive risk: mean over samples of
// log p(y* | y, theta*) - log q(y* | y), with (y, y*) drawn jointly at theta*.
// Sample i uses RandomStream(seed).substream(i).
RiskEstimate estimate_risk(const ExperimentSpec& spec);

// Same draws for every predictor (common random numbers). spec.predictor is
// ignored.
std::vector<RiskEstimate> estimate_risks(const ExperimentSpec& spec, const std::vector<Predictor>& predictors);

enum class SeedPolicy {
    Independent,  // run k uses mix64(seed ^ mix64(k)), base is k = 0
    Common,       // every run uses spec.seed
};

std::uint64_t constancy_seed(std::uint64_t seed, std::size_t run, SeedPolicy policy);

struct ConstancyReport {
    std::vector<RiskEstimate> estimates;  // [0] is the base model
    std::vector<std::pair<std::size_t, std::size_t>> flagged;
    bool any_flag() const { return !flagged.empty(); }
};

// Estimates the risk at the base model and at each alternative, and flags
// pairs whose means differ by more than 3 combined standard errors.
ConstancyReport risk_constancy_report(const ExperimentSpec& base, const std::vector<Model>& alternatives,
                                      SeedPolicy policy = SeedPolicy::Independent);

// log p(y* | y, theta*). For i.i.d. normal data this ignores y.
double oracle_logscore(const MvnModel& model, const ObservationSet& y, const Vector& ystar);
double oracle_logscore(const GpFactorization& factorization, const GpParams& theta, const Vector& y,
                       const Vector& ystar);

}  // namespace invpred
