#include "invpred/risk_mc.hpp"

#include <cmath>
#include <exception>
#include <memory>
#include <thread>

namespace invpred {

std::string_view to_string(GpPredictorKind kind) {
    switch (kind) {
        case GpPredictorKind::RightInvariant: return "R";
        case GpPredictorKind::Jeffreys: return "J";
        case GpPredictorKind::PluginUnbiased: return "unb";
        case GpPredictorKind::PluginMLE: return "MLE";
    }
    return "?";
}

std::optional<GpPredictorKind> parse_gp_predictor(std::string_view tag) {
    if (tag == "IJ") return GpPredictorKind::RightInvariant;
    for (GpPredictorKind kind : kAllGpPredictors)
        if (to_string(kind) == tag) return kind;
    return std::nullopt;
}

std::string predictor_name(const Predictor& p) {
    struct Visitor {
        std::string operator()(const OraclePredictor&) const { return "oracle"; }
        std::string operator()(MvnPredictorKind k) const { return std::string(to_string(k)); }
        std::string operator()(GpPredictorKind k) const { return std::string(to_string(k)); }
        std::string operator()(const CustomMvnPredictor& c) const { return c.name; }
    };
    return std::visit(Visitor{}, p);
}

std::optional<Predictor> parse_predictor(std::string_view tag, bool gpModel) {
    if (tag == "oracle") return Predictor{OraclePredictor{}};
    if (gpModel) {
        if (auto k = parse_gp_predictor(tag)) return Predictor{*k};
    } else if (auto k = parse_mvn_predictor(tag)) {
        return Predictor{*k};
    }
    return std::nullopt;
}

bool predictor_defined(const Model& model, const Predictor& predictor, Index n) {
    if (const auto* mvn = std::get_if<MvnModel>(&model)) {
        if (n < 1) return false;
        if (std::holds_alternative<OraclePredictor>(predictor)) return true;
        if (std::holds_alternative<CustomMvnPredictor>(predictor)) return true;
        if (const auto* k = std::get_if<MvnPredictorKind>(&predictor))
            return mvn_predictor_defined(*k, n, mvn->theta.dim());
        return false;
    }
    const auto& gp = std::get<GpModel>(model);
    if (n < 0 || n > gp.design.n()) return false;
    if (std::holds_alternative<OraclePredictor>(predictor)) return true;
    if (std::holds_alternative<GpPredictorKind>(predictor)) return n > gp.design.p();
    return false;
}

double oracle_logscore(const MvnModel& model, const ObservationSet& y, const Vector& ystar) {
    require(y.d() == model.theta.dim(), ErrorKind::DimensionMismatch, "oracle_logscore: dimension mismatch");
    return mvn_logpdf(ystar, model.theta);
}

double oracle_logscore(const GpFactorization& factorization, const GpParams& theta, const Vector& y,
                       const Vector& ystar) {
    return factorization.conditional_logpdf(y, ystar, theta);
}

namespace {

// Welford accumulation with Chan's pairwise merge.
struct Accumulator {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const Accumulator& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        const double total = static_cast<double>(count + other.count);
        const double delta = other.mean - mean;
        mean += delta * static_cast<double>(other.count) / total;
        m2 += other.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(other.count) / total;
        count += other.count;
    }
};

struct BlockResult {
    std::vector<Accumulator> terms;
    std::vector<std::uint64_t> undefined;
};

// Scores one sample for every predictor. `defined[k]` is false when
// predictor k was not wellDefined or hit a measure-zero degeneracy.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual void score(RandomStream& stream, std::vector<double>& terms, std::vector<char>& defined) const = 0;
};

template <class F>
bool guarded(F&& f, double& out) {
    try {
        return f(out);
    } catch (const Error& e) {
        if (is_degeneracy(e.kind())) return false;
        throw;
    }
}

class MvnScorer final : public Scorer {
public:
    MvnScorer(MvnParams theta, Index n, const std::vector<Predictor>& predictors)
        : theta_(std::move(theta)), n_(n), predictors_(predictors) {}

    void score(RandomStream& stream, std::vector<double>& terms, std::vector<char>& defined) const override {
        const ObservationSet obs = sample_mvn(theta_, n_, stream);
        const Vector xstar = sample_mvn(theta_, 1, stream).row(0);
        const double truth = mvn_logpdf(xstar, theta_);
        for (std::size_t k = 0; k < predictors_.size(); ++k) {
            double logq = truth;
            const Predictor& p = predictors_[k];
            bool ok = true;
            if (const auto* kind = std::get_if<MvnPredictorKind>(&p)) {
                ok = guarded([&](double& out) {
                    const PredictiveEvaluation e = mvn_predict_logdensity(*kind, obs, xstar);
                    out = e.logDensity;
                    return e.wellDefined;
                }, logq);
            } else if (const auto* custom = std::get_if<CustomMvnPredictor>(&p)) {
                ok = guarded([&](double& out) {
                    const PredictiveEvaluation e = custom->logDensity(obs, xstar);
                    out = e.logDensity;
                    return e.wellDefined;
                }, logq);
            }
            defined[k] = ok;
            terms[k] = ok ? truth - logq : 0.0;
        }
    }

private:
    MvnParams theta_;
    Index n_;
    const std::vector<Predictor>& predictors_;
};

class GpScorer final : public Scorer {
public:
    GpScorer(const GpModel& model, Index n, const std::vector<Predictor>& predictors)
        : factorization_(model.design.with_train_prefix(n)), theta_(model.theta), predictors_(predictors) {}

    void score(RandomStream& stream, std::vector<double>& terms, std::vector<char>& defined) const override {
        Vector y, ystar;
        factorization_.sample_joint(theta_, stream, y, ystar);
        const double truth = factorization_.conditional_logpdf(y, ystar, theta_);
        for (std::size_t k = 0; k < predictors_.size(); ++k) {
            double logq = truth;
            bool ok = true;
            if (const auto* kind = std::get_if<GpPredictorKind>(&predictors_[k])) {
                ok = guarded([&](double& out) {
                    switch (*kind) {
                        case GpPredictorKind::RightInvariant:
                            out = mvt_logpdf(ystar, factorization_.predict(y, GpPrior::RightInvariant));
                            break;
                        case GpPredictorKind::Jeffreys:
                            out = mvt_logpdf(ystar, factorization_.predict(y, GpPrior::Jeffreys));
                            break;
                        case GpPredictorKind::PluginUnbiased:
                            out = factorization_.conditional_logpdf(y, ystar,
                                                                    factorization_.gls_fit(y, GlsFlavor::Unbiased));
                            break;
                        case GpPredictorKind::PluginMLE:
                            out = factorization_.conditional_logpdf(y, ystar, factorization_.gls_fit(y, GlsFlavor::MLE));
                            break;
                    }
                    return true;
                }, logq);
            }
            defined[k] = ok;
            terms[k] = ok ? truth - logq : 0.0;
        }
    }

private:
    GpFactorization factorization_;
    GpParams theta_;
    const std::vector<Predictor>& predictors_;
};

void validate_spec(const ExperimentSpec& spec, const std::vector<Predictor>& predictors) {
    require(spec.nSamples >= 1, ErrorKind::InvalidSpec, "nSamples must be positive");
    require(spec.shards >= 1, ErrorKind::InvalidSpec, "shards must be positive");
    require(spec.nSamples % spec.shards == 0, ErrorKind::InvalidSpec, "nSamples must be divisible by shards");
    require(!predictors.empty(), ErrorKind::InvalidSpec, "no predictors");
    if (const auto* mvn = std::get_if<MvnModel>(&spec.model)) {
        mvn->theta.validate();
        require(spec.m == 1, ErrorKind::InvalidSpec, "MVN predictors are next-sample (m = 1)");
    } else {
        const auto& gp = std::get<GpModel>(spec.model);
        gp.design.validate();
        require(spec.m == gp.design.m(), ErrorKind::InvalidSpec, "m must equal the number of prediction points");
        require(gp.theta.beta.size() == gp.design.p() && gp.theta.sigmaY > 0.0, ErrorKind::InvalidSpec,
                "GP parameters do not match the design");
    }
    for (const Predictor& p : predictors)
        if (!predictor_defined(spec.model, p, spec.n))
            fail(ErrorKind::InvalidSpec, "predictor " + predictor_name(p) + " is not defined for n = " +
                                             std::to_string(spec.n));
}

}  // namespace

std::vector<RiskEstimate> estimate_risks(const ExperimentSpec& spec, const std::vector<Predictor>& predictors) {
    validate_spec(spec, predictors);
    std::unique_ptr<Scorer> scorer;
    if (const auto* mvn = std::get_if<MvnModel>(&spec.model))
        scorer = std::make_unique<MvnScorer>(mvn->theta, spec.n, predictors);
    else
        scorer = std::make_unique<GpScorer>(std::get<GpModel>(spec.model), spec.n, predictors);

    const std::size_t count = predictors.size();
    const std::uint64_t blocks = (spec.nSamples + kRiskBlockSize - 1) / kRiskBlockSize;
    std::vector<BlockResult> results(blocks);
    const RandomStream root(spec.seed);

    auto run_shard = [&](unsigned shard) {
        std::vector<double> terms(count);
        std::vector<char> defined(count);
        for (std::uint64_t b = shard; b < blocks; b += spec.shards) {
            BlockResult& r = results[b];
            r.terms.assign(count, Accumulator{});
            r.undefined.assign(count, 0);
            const std::uint64_t end = std::min(spec.nSamples, (b + 1) * kRiskBlockSize);
            for (std::uint64_t i = b * kRiskBlockSize; i < end; ++i) {
                RandomStream stream = root.substream(i);
                scorer->score(stream, terms, defined);
                for (std::size_t k = 0; k < count; ++k) {
                    if (defined[k])
                        r.terms[k].add(terms[k]);
                    else
                        ++r.undefined[k];
                }
            }
        }
    };

    if (spec.shards == 1) {
        run_shard(0);
    } else {
        std::vector<std::exception_ptr> errors(spec.shards);
        std::vector<std::thread> threads;
        for (unsigned s = 0; s < spec.shards; ++s)
            threads.emplace_back([&, s] {
                try {
                    run_shard(s);
                } catch (...) {
                    errors[s] = std::current_exception();
                }
            });
        for (auto& t : threads) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::vector<RiskEstimate> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        Accumulator total;
        std::uint64_t undefined = 0;
        for (const BlockResult& r : results) {
            total.merge(r.terms[k]);
            undefined += r.undefined[k];
        }
        if (undefined > 0 &&
            static_cast<double>(undefined) >= kMaxUndefinedFraction * static_cast<double>(spec.nSamples))
            fail(ErrorKind::TooManyUndefined, "predictor " + predictor_name(predictors[k]) + ": " +
                                                  std::to_string(undefined) + " of " +
                                                  std::to_string(spec.nSamples) + " samples undefined");
        RiskEstimate& est = out[k];
        est.nSamples = spec.nSamples;
        est.nUndefined = undefined;
        est.mean = total.mean;
        est.stdErr = total.count > 1
                         ? std::sqrt(total.m2 / static_cast<double>(total.count - 1) / static_cast<double>(total.count))
                         : 0.0;
    }
    return out;
}

RiskEstimate estimate_risk(const ExperimentSpec& spec) { return estimate_risks(spec, {spec.predictor}).front(); }

std::uint64_t constancy_seed(std::uint64_t seed, std::size_t run, SeedPolicy policy) {
    if (policy == SeedPolicy::Common || run == 0) return seed;
    return mix64(seed ^ mix64(static_cast<std::uint64_t>(run)));
}

ConstancyReport risk_constancy_report(const ExperimentSpec& base, const std::vector<Model>& alternatives,
                                      SeedPolicy policy) {
    ConstancyReport report;
    ExperimentSpec spec = base;
    report.estimates.push_back(estimate_risk(spec));
    for (std::size_t k = 0; k < alternatives.size(); ++k) {
        require(alternatives[k].index() == base.model.index(), ErrorKind::InvalidSpec,
                "risk_constancy_report: alternative model of a different kind");
        spec.model = alternatives[k];
        spec.seed = constancy_seed(base.seed, k + 1, policy);
        report.estimates.push_back(estimate_risk(spec));
    }
    for (std::size_t i = 0; i < report.estimates.size(); ++i)
        for (std::size_t j = i + 1; j < report.estimates.size(); ++j) {
            const RiskEstimate &a = report.estimates[i], &b = report.estimates[j];
            if (std::abs(a.mean - b.mean) > 3.0 * std::sqrt(a.stdErr * a.stdErr + b.stdErr * b.stdErr))
                report.flagged.emplace_back(i, j);
        }
    return report;
}

}  // namespace invpred
