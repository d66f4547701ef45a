#include "invpred/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "invpred/result_table.hpp"

namespace invpred {

namespace {

constexpr std::string_view kWhitespace = " \t\r";

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(kWhitespace);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(kWhitespace);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto b = s.find_first_not_of(kWhitespace, pos);
        if (b == std::string_view::npos) break;
        auto e = s.find_first_of(kWhitespace, b);
        if (e == std::string_view::npos) e = s.size();
        out.push_back(s.substr(b, e - b));
        pos = e;
    }
    return out;
}

class LineParser {
public:
    explicit LineParser(int line) : line_(line) {}

    [[noreturn]] void error(const std::string& message) const {
        fail(ErrorKind::ConfigError, "line " + std::to_string(line_) + ": " + message);
    }

    template <class T>
    T number(std::string_view tok) const {
        T value{};
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) error("bad number '" + std::string(tok) + "'");
        return value;
    }

    std::string_view single(const std::vector<std::string_view>& toks) const {
        if (toks.size() != 1) error("expected exactly one value");
        return toks[0];
    }

    Vector vector(const std::vector<std::string_view>& toks) const {
        if (toks.empty()) error("expected at least one value");
        Vector v(static_cast<Index>(toks.size()));
        for (std::size_t i = 0; i < toks.size(); ++i) v(static_cast<Index>(i)) = number<double>(toks[i]);
        return v;
    }

private:
    int line_;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string_view to_string(Command command) {
    switch (command) {
        case Command::MvnRisk: return "mvn-risk";
        case Command::GpRisk: return "gp-risk";
        case Command::GpImprovement: return "gp-improvement";
        case Command::MvnGrid: return "mvn-grid";
        case Command::CheckInvariance: return "check-invariance";
    }
    return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
    for (Command c : {Command::MvnRisk, Command::GpRisk, Command::GpImprovement, Command::MvnGrid,
                      Command::CheckInvariance})
        if (to_string(c) == name) return c;
    return std::nullopt;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& baseDir,
                           std::optional<Command> defaultCommand) {
    RunConfig cfg;
    std::optional<Command> command;
    std::set<std::string, std::less<>> seen;
    auto resolve = [&](std::string_view p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : baseDir / path;
    };

    int lineNo = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineNo;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const LineParser lp(lineNo);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) lp.error("expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const auto toks = tokens(line.substr(eq + 1));
        if (key.empty()) lp.error("empty key");
        if (toks.empty()) lp.error("empty value for '" + std::string(key) + "'");

        const bool isList = key == "n" || key == "predictor";
        if (!isList && !seen.insert(std::string(key)).second) lp.error("duplicate key '" + std::string(key) + "'");

        if (key == "command") {
            command = parse_command(lp.single(toks));
            if (!command) lp.error("unknown command '" + std::string(toks[0]) + "'");
        } else if (key == "seed") {
            cfg.seed = lp.number<std::uint64_t>(lp.single(toks));
        } else if (key == "samples") {
            cfg.nSamples = lp.number<std::uint64_t>(lp.single(toks));
        } else if (key == "shards") {
            cfg.shards = lp.number<unsigned>(lp.single(toks));
        } else if (key == "n") {
            for (auto t : toks) cfg.nRange.push_back(lp.number<Index>(t));
        } else if (key == "predictor") {
            for (auto t : toks) cfg.predictors.emplace_back(t);
        } else if (key == "dimension") {
            cfg.dimension = lp.number<Index>(lp.single(toks));
        } else if (key == "theta_mu") {
            cfg.thetaMu = lp.vector(toks);
        } else if (key == "theta_u") {
            const Vector flat = lp.vector(toks);
            const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
            if (d * d != flat.size()) lp.error("theta_u needs d*d values");
            cfg.thetaU = Matrix(d, d);
            for (Index i = 0; i < d; ++i)
                for (Index j = 0; j < d; ++j) (*cfg.thetaU)(i, j) = flat(i * d + j);
        } else if (key == "design") {
            cfg.designFile = resolve(lp.single(toks));
        } else if (key == "lengthscale") {
            cfg.lengthscale = lp.number<double>(lp.single(toks));
        } else if (key == "beta") {
            cfg.beta = lp.vector(toks);
        } else if (key == "sigma_y") {
            cfg.sigmaY = lp.number<double>(lp.single(toks));
        } else if (key == "data") {
            cfg.dataFile = resolve(lp.single(toks));
        } else if (key == "grid_center") {
            cfg.grid.center = std::string(lp.single(toks));
            if (cfg.grid.center != "mean") lp.error("grid_center must be 'mean'");
        } else if (key == "grid_halfwidth") {
            cfg.grid.halfWidth = lp.number<double>(lp.single(toks));
        } else if (key == "grid_resolution") {
            cfg.grid.resolution = lp.number<Index>(lp.single(toks));
        } else if (key == "cases") {
            cfg.cases = lp.number<int>(lp.single(toks));
        } else if (key == "gp_cases") {
            cfg.gpCases = lp.number<int>(lp.single(toks));
        } else if (key == "out") {
            cfg.outPath = std::filesystem::path(lp.single(toks));
        } else {
            lp.error("unknown key '" + std::string(key) + "'");
        }
    }

    if (command && defaultCommand && *command != *defaultCommand)
        fail(ErrorKind::ConfigError, "config is for '" + std::string(to_string(*command)) + "', not '" +
                                         std::string(to_string(*defaultCommand)) + "'");
    if (!command) command = defaultCommand;
    if (!command) fail(ErrorKind::ConfigError, "no command given");
    cfg.command = *command;
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<Command> defaultCommand) {
    const std::string text = read_file(path);
    try {
        return parse_run_config(text, path.parent_path(), defaultCommand);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) fail(ErrorKind::ConfigError, path.string() + ": " + e.what());
        throw;
    }
}

void validate_run_config(const RunConfig& cfg) {
    auto check = [](bool ok, const std::string& message) {
        if (!ok) fail(ErrorKind::ConfigError, message);
    };
    check(cfg.shards >= 1, "shards must be >= 1");
    switch (cfg.command) {
        case Command::MvnRisk:
            check(!cfg.nRange.empty(), "mvn-risk needs at least one n");
            check(cfg.nSamples >= 1, "samples must be >= 1");
            check(cfg.dimension >= 1, "dimension must be >= 1");
            check(!cfg.thetaMu || cfg.thetaMu->size() == cfg.dimension, "theta_mu must have `dimension` values");
            check(!cfg.thetaU || cfg.thetaU->rows() == cfg.dimension, "theta_u must be dimension x dimension");
            break;
        case Command::GpRisk:
            check(!cfg.nRange.empty(), "gp-risk needs at least one n");
            check(cfg.nSamples >= 1, "samples must be >= 1");
            [[fallthrough]];
        case Command::GpImprovement:
            check(!cfg.designFile.empty(), "design file required");
            check(cfg.lengthscale > 0.0, "lengthscale must be positive");
            check(cfg.sigmaY > 0.0, "sigma_y must be positive");
            break;
        case Command::MvnGrid:
            check(!cfg.dataFile.empty(), "data file required");
            check(cfg.grid.halfWidth > 0.0, "grid_halfwidth must be positive");
            check(cfg.grid.resolution >= 2, "grid_resolution must be >= 2");
            break;
        case Command::CheckInvariance:
            check(cfg.cases >= 1 && cfg.gpCases >= 1, "cases and gp_cases must be >= 1");
            break;
    }
    for (Index n : cfg.nRange) check(n >= 1, "n must be >= 1");
}

std::string canonical_form(const RunConfig& cfg) {
    std::ostringstream out;
    auto vec = [&](const char* key, const Vector& v) {
        out << key << '=';
        for (Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v(i));
        out << '\n';
    };
    out << "command=" << to_string(cfg.command) << '\n';
    out << "seed=" << cfg.seed << '\n';
    switch (cfg.command) {
        case Command::MvnRisk:
        case Command::GpRisk:
            out << "samples=" << cfg.nSamples << '\n';
            out << "n=";
            for (Index n : cfg.nRange) out << n << ' ';
            out << "\npredictor=";
            for (const auto& p : cfg.predictors) out << p << ' ';
            out << '\n';
            break;
        default:
            break;
    }
    switch (cfg.command) {
        case Command::MvnRisk:
            out << "dimension=" << cfg.dimension << '\n';
            vec("theta_mu", cfg.thetaMu.value_or(Vector::Zero(cfg.dimension)));
            vec("theta_u", cfg.thetaU.value_or(Matrix::Identity(cfg.dimension, cfg.dimension)).reshaped<Eigen::RowMajor>());
            break;
        case Command::GpRisk:
            if (cfg.beta && !cfg.beta->isZero(0.0)) vec("beta", *cfg.beta);
            out << "sigma_y=" << format_double(cfg.sigmaY) << '\n';
            [[fallthrough]];
        case Command::GpImprovement:
            out << "lengthscale=" << format_double(cfg.lengthscale) << '\n';
            out << "design#" << fnv1a64(read_file(cfg.designFile)) << '\n';
            break;
        case Command::MvnGrid:
            out << "grid=" << cfg.grid.center << ' ' << format_double(cfg.grid.halfWidth) << ' '
                << cfg.grid.resolution << '\n';
            out << "data#" << fnv1a64(read_file(cfg.dataFile)) << '\n';
            break;
        case Command::CheckInvariance:
            out << "cases=" << cfg.cases << ' ' << cfg.gpCases << '\n';
            break;
    }
    return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a64(canonical_form(config)); }

}  // namespace invpred
