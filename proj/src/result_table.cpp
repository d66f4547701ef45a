#include "invpred/result_table.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Core>

#include "json.hpp"

namespace invpred {

namespace {

using nlohmann::json;

constexpr std::string_view kCsvHeader = "predictor,n,mean,std_err,n_samples,n_undefined,status";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

template <class T>
T parse_integer(std::string_view text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        fail(ErrorKind::IoError, "bad integer '" + std::string(text) + "'");
    return value;
}

json row_json(const ResultRow& row) {
    json j{{"predictor", row.predictor}, {"n", row.n}};
    if (row.estimate) {
        j["mean"] = row.estimate->mean;
        j["std_err"] = row.estimate->stdErr;
        j["n_samples"] = row.estimate->nSamples;
        j["n_undefined"] = row.estimate->nUndefined;
        j["status"] = "ok";
    } else {
        j["status"] = "undefined";
    }
    return j;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        fail(ErrorKind::IoError, "bad number '" + std::string(text) + "'");
    return value;
}

std::string hash_hex(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string eigen_version() {
    return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
           std::to_string(EIGEN_MINOR_VERSION);
}

std::string compiler_version() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
}

void write_result_csv(const ResultTable& table, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& row : table.rows) {
        out << row.predictor << ',' << row.n << ',';
        if (row.estimate) {
            const RiskEstimate& e = *row.estimate;
            out << format_double(e.mean) << ',' << format_double(e.stdErr) << ',' << e.nSamples << ','
                << e.nUndefined << ",ok\n";
        } else {
            out << ",,,,undefined\n";
        }
    }
}

std::vector<ResultRow> read_result_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) fail(ErrorKind::IoError, "result csv: bad header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 7) fail(ErrorKind::IoError, "result csv: expected 7 fields in '" + line + "'");
        ResultRow row{f[0], parse_integer<Index>(f[1]), std::nullopt};
        if (f[6] == "ok") {
            row.estimate = RiskEstimate{parse_double(f[2]), parse_double(f[3]), parse_integer<std::uint64_t>(f[4]),
                                        parse_integer<std::uint64_t>(f[5])};
        } else if (f[6] != "undefined") {
            fail(ErrorKind::IoError, "result csv: unknown status '" + f[6] + "'");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string result_json(const ResultTable& table) {
    const ResultMetadata& m = table.metadata;
    json j{{"format", "invpred-risk-table"},
           {"version", 1},
           {"command", m.command},
           {"seed", m.seed},
           {"n_samples", m.nSamples},
           {"config_hash", hash_hex(m.configHash)},
           {"library_version", m.libraryVersion},
           {"crn_policy", m.crnPolicy},
           {"eigen_version", eigen_version()},
           {"compiler", compiler_version()},
           {"status", "ok"}};
    j["rows"] = json::array();
    for (const auto& row : table.rows) j["rows"].push_back(row_json(row));
    return j.dump(2) + "\n";
}

ResultTable parse_result_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        ResultTable t;
        t.metadata.command = j.at("command").get<std::string>();
        t.metadata.seed = j.at("seed").get<std::uint64_t>();
        t.metadata.nSamples = j.at("n_samples").get<std::uint64_t>();
        t.metadata.configHash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
        t.metadata.libraryVersion = j.at("library_version").get<std::string>();
        t.metadata.crnPolicy = j.at("crn_policy").get<std::string>();
        for (const auto& r : j.at("rows")) {
            ResultRow row{r.at("predictor").get<std::string>(), r.at("n").get<Index>(), std::nullopt};
            if (r.at("status") == "ok")
                row.estimate = RiskEstimate{r.at("mean").get<double>(), r.at("std_err").get<double>(),
                                            r.at("n_samples").get<std::uint64_t>(),
                                            r.at("n_undefined").get<std::uint64_t>()};
            t.rows.push_back(std::move(row));
        }
        return t;
    } catch (const json::exception& e) {
        fail(ErrorKind::IoError, std::string("result json: ") + e.what());
    }
}

void write_result_table(const ResultTable& table, const std::filesystem::path& prefix) {
    std::ofstream csv(std::filesystem::path(prefix).concat(".csv"));
    std::ofstream js(std::filesystem::path(prefix).concat(".json"));
    if (!csv || !js) fail(ErrorKind::IoError, "cannot write " + prefix.string() + ".{csv,json}");
    write_result_csv(table, csv);
    js << result_json(table);
    if (!csv || !js) fail(ErrorKind::IoError, "write failed for " + prefix.string());
}

ResultTable read_result_table(const std::filesystem::path& prefix) {
    std::ifstream csv(std::filesystem::path(prefix).concat(".csv"));
    std::ifstream js(std::filesystem::path(prefix).concat(".json"));
    if (!csv || !js) fail(ErrorKind::IoError, "cannot read " + prefix.string() + ".{csv,json}");
    std::ostringstream buf;
    buf << js.rdbuf();
    ResultTable t = parse_result_json(buf.str());
    // Rows come from the CSV; the JSON copy must agree with it.
    const std::vector<ResultRow> rows = read_result_csv(csv);
    if (rows != t.rows) fail(ErrorKind::IoError, "csv and json rows disagree for " + prefix.string());
    return t;
}

}  // namespace invpred
