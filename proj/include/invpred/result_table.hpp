#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "invpred/risk_mc.hpp"

namespace invpred {

inline constexpr std::string_view kLibraryVersion = "0.1.0";

// Predictors at one n share their draws; different n are separate runs.
inline constexpr std::string_view kCrnPolicy = "common-within-n";

// Shortest decimal text that reads back to the same double; locale-free.
std::string format_double(double value);
double parse_double(std::string_view text);

struct ResultRow {
    std::string predictor;
    Index n = 0;
    std::optional<RiskEstimate> estimate;  // empty: predictor undefined at this n

    bool operator==(const ResultRow&) const = default;
};

struct ResultMetadata {
    std::string command;
    std::uint64_t seed = 0;
    std::uint64_t nSamples = 0;
    std::uint64_t configHash = 0;
    std::string libraryVersion{kLibraryVersion};
    std::string crnPolicy{kCrnPolicy};

    bool operator==(const ResultMetadata&) const = default;
};

struct ResultTable {
    ResultMetadata metadata;
    std::vector<ResultRow> rows;

    bool operator==(const ResultTable&) const = default;
};

// CSV: predictor,n,mean,std_err,n_samples,n_undefined,status with status
// "ok" or "undefined" (numeric cells left empty).
void write_result_csv(const ResultTable& table, std::ostream& out);
std::vector<ResultRow> read_result_csv(std::istream& in);

// JSON sidecar: metadata plus the same rows.
std::string result_json(const ResultTable& table);
ResultTable parse_result_json(std::string_view text);

// <prefix>.csv and <prefix>.json. Throws IoError.
void write_result_table(const ResultTable& table, const std::filesystem::path& prefix);
ResultTable read_result_table(const std::filesystem::path& prefix);

std::string hash_hex(std::uint64_t hash);

// Build information recorded in every JSON sidecar.
std::string eigen_version();
std::string compiler_version();

}  // namespace invpred
