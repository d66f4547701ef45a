#pragma once

#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "invpred/invariance_checks.hpp"
#include "invpred/mvn_predict.hpp"
#include "invpred/result_table.hpp"
#include "invpred/run_config.hpp"

namespace invpred {

// mvn-risk / gp-risk: one row per (n, predictor), n-major. Predictors that do
// not exist at some n get an "undefined" row. Progress goes to `log`.
ResultTable risk_table(const RunConfig& config, std::ostream& log);

// gp-improvement: (nObs, improvement) for the configured n, or 0..n_train.
std::vector<std::pair<Index, double>> improvement_table(const RunConfig& config);

// Region {log q >= max - drop} of a grid, described by its second moments.
struct LevelSetSummary {
    double eccentricity = 0.0;  // sqrt(1 - lambda_min / lambda_max)
    double orientation = 0.0;   // major axis angle in [0, pi)
    double fillRatio = 0.0;     // area / (4 pi sqrt(det C)); 1 for an ellipse
    Index points = 0;
    bool touchesBoundary = false;
};

inline constexpr double kLevelSetDrop = 2.0;

LevelSetSummary level_set_summary(const Matrix& logDensity, const Vector& xs, const Vector& ys, double drop);

struct MvnGrid {
    Vector xs, ys;
    std::vector<MvnPredictorKind> kinds;
    std::vector<Matrix> logDensity;  // (i, j) at (xs(i), ys(j)); NaN where undefined
    std::vector<LevelSetSummary> levelSets;
    Index undefinedPoints = 0;
};

// Every MVN kind over the box mean +- halfWidth sample standard deviations.
MvnGrid mvn_grid(const ObservationSet& obs, const GridSpec& spec);

// Runs the configured command and writes its files under config.outPath.
// Returns 0, or 1 when a property suite failed. Throws Error.
int run(const RunConfig& config, std::ostream& log);

// As run, but an Error becomes exit status 2 with a JSON error record at
// <out>.json (when an output path is known) and a message on `err`.
int run_reporting_errors(const RunConfig& config, std::ostream& log, std::ostream& err);

// {"status": "error", "error_kind": ..., "message": ...}
std::string error_record_json(const Error& error, std::string_view command);

}  // namespace invpred
