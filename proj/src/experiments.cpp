#include "invpred/experiments.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "invpred/data_files.hpp"
#include "json.hpp"

namespace invpred {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& message) { fail(ErrorKind::ConfigError, message); }

GpModel load_gp_model(const RunConfig& cfg) {
    const GpDesign design = make_spatial_gp_design(load_gp_design(cfg.designFile), cfg.lengthscale);
    const Vector beta = cfg.beta.value_or(Vector::Zero(design.p()));
    if (beta.size() != design.p())
        config_error("beta has " + std::to_string(beta.size()) + " values, design has " +
                     std::to_string(design.p()) + " features");
    return GpModel{design, GpParams{beta, cfg.sigmaY}};
}

MvnModel mvn_model(const RunConfig& cfg) {
    const Index d = cfg.dimension;
    MvnParams theta{cfg.thetaMu.value_or(Vector::Zero(d)), cfg.thetaU.value_or(Matrix::Identity(d, d))};
    theta.validate();
    return MvnModel{std::move(theta)};
}

std::vector<Predictor> configured_predictors(const RunConfig& cfg, bool gp) {
    std::vector<std::string> tags = cfg.predictors;
    if (tags.empty()) {
        if (gp)
            for (auto k : kAllGpPredictors) tags.emplace_back(to_string(k));
        else
            for (auto k : kAllMvnPredictors) tags.emplace_back(to_string(k));
    }
    std::vector<Predictor> out;
    for (const auto& tag : tags) {
        auto p = parse_predictor(tag, gp);
        if (!p) config_error("unknown predictor '" + tag + "' for " + std::string(to_string(cfg.command)));
        out.push_back(std::move(*p));
    }
    return out;
}

json base_metadata(const RunConfig& cfg) {
    return json{{"format", "invpred-run"},
                {"version", 1},
                {"command", std::string(to_string(cfg.command))},
                {"seed", cfg.seed},
                {"config_hash", hash_hex(config_hash(cfg))},
                {"library_version", std::string(kLibraryVersion)},
                {"eigen_version", eigen_version()},
                {"compiler", compiler_version()},
                {"status", "ok"}};
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
    return std::filesystem::path(prefix).concat(suffix);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) fail(ErrorKind::IoError, "cannot write " + path.string());
}

void prepare_output(const std::filesystem::path& prefix) {
    if (prefix.empty()) config_error("no output path (set `out` or pass --out)");
    std::error_code ec;
    if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path(), ec);
    if (ec) fail(ErrorKind::IoError, "cannot create " + prefix.parent_path().string() + ": " + ec.message());
}

double angle_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), std::numbers::pi);
    return std::min(d, std::numbers::pi - d);
}

int run_risk(const RunConfig& cfg, std::ostream& log) {
    ResultTable table = risk_table(cfg, log);
    table.metadata.command = std::string(to_string(cfg.command));
    table.metadata.seed = cfg.seed;
    table.metadata.nSamples = cfg.nSamples;
    table.metadata.configHash = config_hash(cfg);
    write_result_table(table, cfg.outPath);
    return 0;
}

int run_improvement(const RunConfig& cfg, std::ostream& log) {
    const auto rows = improvement_table(cfg);
    std::string csv = "n_obs,improvement\n";
    json meta = base_metadata(cfg);
    meta["rows"] = json::array();
    bool nondecreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv += std::to_string(rows[i].first) + "," + format_double(rows[i].second) + "\n";
        meta["rows"].push_back({{"n_obs", rows[i].first}, {"improvement", rows[i].second}});
        if (i > 0 && rows[i].first > rows[i - 1].first && rows[i].second < rows[i - 1].second) nondecreasing = false;
        log << "n_obs " << rows[i].first << ": " << format_double(rows[i].second) << '\n';
    }
    meta["nondecreasing"] = nondecreasing;
    write_text(with_suffix(cfg.outPath, ".csv"), csv);
    write_text(with_suffix(cfg.outPath, ".json"), meta.dump(2) + "\n");
    return 0;
}

int run_grid(const RunConfig& cfg, std::ostream& log) {
    const ObservationSet obs = load_mvn_data(cfg.dataFile);
    const MvnGrid grid = mvn_grid(obs, cfg.grid);
    json meta = base_metadata(cfg);
    meta["grid"] = {{"center", cfg.grid.center},
                    {"half_width_sd", cfg.grid.halfWidth},
                    {"resolution", cfg.grid.resolution},
                    {"x1_range", {grid.xs(0), grid.xs(grid.xs.size() - 1)}},
                    {"x2_range", {grid.ys(0), grid.ys(grid.ys.size() - 1)}},
                    {"undefined_points", grid.undefinedPoints}};
    meta["level_set_drop"] = kLevelSetDrop;
    meta["files"] = json::array();
    meta["level_sets"] = json::object();

    const Index nx = grid.xs.size(), ny = grid.ys.size();
    for (std::size_t k = 0; k < grid.kinds.size(); ++k) {
        const std::string tag(to_string(grid.kinds[k]));
        std::string csv = "x1,x2,log_density\n";
        csv.reserve(static_cast<std::size_t>(nx * ny) * 48);
        for (Index i = 0; i < nx; ++i)
            for (Index j = 0; j < ny; ++j)
                csv += format_double(grid.xs(i)) + "," + format_double(grid.ys(j)) + "," +
                       format_double(grid.logDensity[k](i, j)) + "\n";
        const auto path = with_suffix(cfg.outPath, "_" + tag + ".csv");
        write_text(path, csv);
        meta["files"].push_back(path.filename().string());
        const LevelSetSummary& s = grid.levelSets[k];
        meta["level_sets"][tag] = {{"eccentricity", s.eccentricity},
                                   {"orientation", s.orientation},
                                   {"fill_ratio", s.fillRatio},
                                   {"points", s.points},
                                   {"touches_boundary", s.touchesBoundary}};
    }

    auto index_of = [&](MvnPredictorKind kind) {
        for (std::size_t k = 0; k < grid.kinds.size(); ++k)
            if (grid.kinds[k] == kind) return k;
        return grid.kinds.size();
    };
    const auto r = index_of(MvnPredictorKind::RightInvariant);
    const auto rs = index_of(MvnPredictorKind::RightInvariantSwapped);
    const auto ij = index_of(MvnPredictorKind::IndependenceJeffreys);
    const auto j = index_of(MvnPredictorKind::Jeffreys);
    double swapDiff = 0.0;
    for (Index i = 0; i < grid.logDensity[r].size(); ++i) {
        const double d = std::abs(grid.logDensity[r].data()[i] - grid.logDensity[rs].data()[i]);
        if (std::isfinite(d)) swapDiff = std::max(swapDiff, d);
    }
    const LevelSetSummary &sij = grid.levelSets[ij], &sj = grid.levelSets[j];
    // Tolerances are a few grid cells' worth of discretization error.
    const bool sameShape = std::abs(sij.eccentricity - sj.eccentricity) < 0.02 &&
                           angle_distance(sij.orientation, sj.orientation) < 0.02 &&
                           std::abs(sij.fillRatio - 1.0) < 0.02 && std::abs(sj.fillRatio - 1.0) < 0.02;
    meta["checks"] = {{"r_rswapped_max_abs_difference", swapDiff},
                      {"r_rswapped_differ", swapDiff > 1e-3},
                      {"ij_j_same_elliptical_shape", sameShape}};
    write_text(with_suffix(cfg.outPath, ".json"), meta.dump(2) + "\n");
    log << "grid " << nx << "x" << ny << ", R vs RSwapped max |diff| " << swapDiff << ", IJ/J same shape "
        << (sameShape ? "yes" : "no") << '\n';
    return 0;
}

int run_invariance(const RunConfig& cfg, std::ostream& log) {
    const auto results = run_invariance_suite(InvarianceOptions{cfg.seed, cfg.cases, cfg.gpCases});
    std::string csv = "property,passed,worst,tolerance,cases,informational\n";
    json meta = base_metadata(cfg);
    meta["properties"] = json::array();
    for (const auto& r : results) {
        csv += r.name + "," + (r.passed ? "true" : "false") + "," + format_double(r.worst) + "," +
               format_double(r.tolerance) + "," + std::to_string(r.cases) + "," +
               (r.informational ? "true" : "false") + "\n";
        meta["properties"].push_back({{"name", r.name},
                                      {"passed", r.passed},
                                      {"worst", r.worst},
                                      {"tolerance", r.tolerance},
                                      {"cases", r.cases},
                                      {"informational", r.informational}});
        log << (r.passed ? "PASS " : "FAIL ") << r.name << " (worst " << r.worst << ", tol " << r.tolerance
            << (r.informational ? ", informational" : "") << ")\n";
    }
    const bool passed = suite_passed(results);
    meta["suite_passed"] = passed;
    write_text(with_suffix(cfg.outPath, ".csv"), csv);
    write_text(with_suffix(cfg.outPath, ".json"), meta.dump(2) + "\n");
    return passed ? 0 : 1;
}

}  // namespace

ResultTable risk_table(const RunConfig& cfg, std::ostream& log) {
    validate_run_config(cfg);
    const bool gp = cfg.command == Command::GpRisk;
    if (!gp && cfg.command != Command::MvnRisk) config_error("risk_table needs mvn-risk or gp-risk");

    Model model = gp ? Model(load_gp_model(cfg)) : Model(mvn_model(cfg));
    const Index m = gp ? std::get<GpModel>(model).design.m() : 1;
    if (gp) {
        const Index nTrain = std::get<GpModel>(model).design.n();
        for (Index n : cfg.nRange)
            if (n > nTrain)
                config_error("n = " + std::to_string(n) + " exceeds the " + std::to_string(nTrain) +
                             " training points of the design");
    }
    const std::vector<Predictor> predictors = configured_predictors(cfg, gp);

    ResultTable table;
    for (Index n : cfg.nRange) {
        std::vector<Predictor> defined;
        for (const auto& p : predictors)
            if (predictor_defined(model, p, n)) defined.push_back(p);
        std::vector<RiskEstimate> estimates;
        if (!defined.empty()) {
            const ExperimentSpec spec{model, defined.front(), n, m, cfg.nSamples, cfg.seed, cfg.shards};
            estimates = estimate_risks(spec, defined);
        }
        std::size_t next = 0;
        for (const auto& p : predictors) {
            ResultRow row{predictor_name(p), n, std::nullopt};
            if (predictor_defined(model, p, n)) row.estimate = estimates[next++];
            log << "n=" << n << ' ' << row.predictor << ": ";
            if (row.estimate)
                log << format_double(row.estimate->mean) << " +- " << format_double(row.estimate->stdErr) << '\n';
            else
                log << "undefined\n";
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::vector<std::pair<Index, double>> improvement_table(const RunConfig& cfg) {
    validate_run_config(cfg);
    const GpModel model = load_gp_model(cfg);
    std::vector<Index> counts = cfg.nRange;
    if (counts.empty())
        for (Index k = 0; k <= model.design.n(); ++k) counts.push_back(k);
    std::vector<std::pair<Index, double>> rows;
    for (Index k : counts) {
        if (k > model.design.n()) config_error("n = " + std::to_string(k) + " exceeds the design");
        rows.emplace_back(k, gp_entropy_improvement(model.design, k));
    }
    return rows;
}

LevelSetSummary level_set_summary(const Matrix& logDensity, const Vector& xs, const Vector& ys, double drop) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < logDensity.size(); ++i)
        if (std::isfinite(logDensity.data()[i])) peak = std::max(peak, logDensity.data()[i]);
    require(std::isfinite(peak), ErrorKind::InvalidArgument, "level_set_summary: no finite values");

    LevelSetSummary s;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    Eigen::Matrix2d outer = Eigen::Matrix2d::Zero();
    const Index nx = xs.size(), ny = ys.size();
    for (Index i = 0; i < nx; ++i)
        for (Index j = 0; j < ny; ++j) {
            if (!(logDensity(i, j) >= peak - drop)) continue;
            const Eigen::Vector2d p(xs(i), ys(j));
            sum += p;
            outer += p * p.transpose();
            ++s.points;
            if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) s.touchesBoundary = true;
        }
    const double count = static_cast<double>(s.points);
    const Eigen::Vector2d mean = sum / count;
    const Eigen::Matrix2d cov = outer / count - mean * mean.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(1);
    s.eccentricity = std::sqrt(std::max(0.0, 1.0 - lo / hi));
    const Eigen::Vector2d major = eig.eigenvectors().col(1);
    s.orientation = std::atan2(major(1), major(0));
    if (s.orientation < 0.0) s.orientation += std::numbers::pi;
    if (s.orientation >= std::numbers::pi) s.orientation -= std::numbers::pi;
    const double cell = (xs(1) - xs(0)) * (ys(1) - ys(0));
    s.fillRatio = count * cell / (4.0 * std::numbers::pi * std::sqrt(lo * hi));
    return s;
}

MvnGrid mvn_grid(const ObservationSet& obs, const GridSpec& spec) {
    require(obs.d() == 2, ErrorKind::InvalidArgument, "mvn_grid: data must be bivariate");
    require(obs.n() >= 3, ErrorKind::InvalidArgument, "mvn_grid: need at least 3 points");
    require(spec.resolution >= 2, ErrorKind::InvalidArgument, "mvn_grid: resolution must be >= 2");
    const SampleStats st = sample_stats(obs);
    const Vector sd = (st.scatter.diagonal() / static_cast<double>(obs.n() - 1)).cwiseSqrt();

    MvnGrid g;
    const Index r = spec.resolution;
    g.xs = Vector::LinSpaced(r, st.mean(0) - spec.halfWidth * sd(0), st.mean(0) + spec.halfWidth * sd(0));
    g.ys = Vector::LinSpaced(r, st.mean(1) - spec.halfWidth * sd(1), st.mean(1) + spec.halfWidth * sd(1));
    for (MvnPredictorKind kind : kAllMvnPredictors) {
        Matrix values(r, r);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < r; ++j) {
                double v = std::numeric_limits<double>::quiet_NaN();
                try {
                    const PredictiveEvaluation e =
                        mvn_predict_logdensity(kind, obs, Eigen::Vector2d(g.xs(i), g.ys(j)));
                    if (e.wellDefined) v = e.logDensity;
                } catch (const Error& err) {
                    // A grid point in special position with the data.
                    if (!is_degeneracy(err.kind())) throw;
                }
                if (std::isnan(v)) ++g.undefinedPoints;
                values(i, j) = v;
            }
        g.kinds.push_back(kind);
        g.levelSets.push_back(level_set_summary(values, g.xs, g.ys, kLevelSetDrop));
        g.logDensity.push_back(std::move(values));
    }
    return g;
}

int run(const RunConfig& cfg, std::ostream& log) {
    validate_run_config(cfg);
    prepare_output(cfg.outPath);
    switch (cfg.command) {
        case Command::MvnRisk:
        case Command::GpRisk: return run_risk(cfg, log);
        case Command::GpImprovement: return run_improvement(cfg, log);
        case Command::MvnGrid: return run_grid(cfg, log);
        case Command::CheckInvariance: return run_invariance(cfg, log);
    }
    return 0;
}

std::string error_record_json(const Error& error, std::string_view command) {
    const json j{{"format", "invpred-run"},
                 {"version", 1},
                 {"command", std::string(command)},
                 {"library_version", std::string(kLibraryVersion)},
                 {"status", "error"},
                 {"error_kind", std::string(to_string(error.kind()))},
                 {"message", error.what()}};
    return j.dump(2) + "\n";
}

int run_reporting_errors(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        return run(cfg, log);
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        if (!cfg.outPath.empty()) {
            try {
                prepare_output(cfg.outPath);
                write_text(with_suffix(cfg.outPath, ".json"), error_record_json(e, to_string(cfg.command)));
            } catch (const Error& inner) {
                err << "error: could not write error record: " << inner.what() << '\n';
            }
        }
        return 2;
    }
}

}  // namespace invpred
