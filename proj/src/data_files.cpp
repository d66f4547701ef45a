#include "invpred/data_files.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "invpred/gp_predict.hpp"

namespace invpred {

namespace {

struct Line {
    int number;
    std::vector<std::string> fields;
};

std::vector<Line> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<Line> out;
    std::string text;
    int number = 0;
    while (std::getline(in, text)) {
        ++number;
        if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
        std::istringstream words(text);
        Line line{number, {}};
        for (std::string w; words >> w;) line.fields.push_back(w);
        if (!line.fields.empty()) out.push_back(std::move(line));
    }
    return out;
}

[[noreturn]] void bad_line(const std::filesystem::path& path, int number, const std::string& what) {
    fail(ErrorKind::ConfigError, path.string() + ":" + std::to_string(number) + ": " + what);
}

double parse_number(const std::filesystem::path& path, const Line& line, const std::string& s) {
    double value = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(value))
        bad_line(path, line.number, "not a finite number: " + s);
    return value;
}

void expect_format(const std::filesystem::path& path, const std::vector<Line>& lines, const std::string& name) {
    if (lines.empty()) fail(ErrorKind::ConfigError, path.string() + ": empty file");
    const Line& first = lines.front();
    if (first.fields.size() != 3 || first.fields[0] != "format" || first.fields[1] != name)
        bad_line(path, first.number, "expected 'format " + name + " 1'");
    if (first.fields[2] != "1") bad_line(path, first.number, "unsupported version " + first.fields[2]);
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, Index width) {
    Matrix m(static_cast<Index>(rows.size()), width);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < width; ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace

SpatialDesign load_gp_design(const std::filesystem::path& path) {
    const std::vector<Line> lines = read_lines(path);
    expect_format(path, lines, "gp-design");
    std::vector<std::vector<double>> train, predict;
    std::size_t width = 0;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const Line& line = lines[k];
        const std::string& role = line.fields[0];
        if (role != "train" && role != "predict") bad_line(path, line.number, "role must be train or predict");
        if (line.fields.size() < 2) bad_line(path, line.number, "missing coordinates");
        if (width == 0) width = line.fields.size() - 1;
        if (line.fields.size() - 1 != width) bad_line(path, line.number, "inconsistent number of coordinates");
        std::vector<double> row;
        for (std::size_t j = 1; j < line.fields.size(); ++j) row.push_back(parse_number(path, line, line.fields[j]));
        (role == "train" ? train : predict).push_back(std::move(row));
    }
    if (predict.empty()) fail(ErrorKind::ConfigError, path.string() + ": no predict rows");
    return SpatialDesign{to_matrix(train, static_cast<Index>(width)), to_matrix(predict, static_cast<Index>(width))};
}

ObservationSet load_mvn_data(const std::filesystem::path& path) {
    const std::vector<Line> lines = read_lines(path);
    expect_format(path, lines, "mvn-data");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const Line& line = lines[k];
        if (!rows.empty() && line.fields.size() != rows.front().size())
            bad_line(path, line.number, "inconsistent number of coordinates");
        std::vector<double> row;
        for (const auto& f : line.fields) row.push_back(parse_number(path, line, f));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrorKind::ConfigError, path.string() + ": no data rows");
    return ObservationSet(to_matrix(rows, static_cast<Index>(rows.front().size())));
}

GpDesign make_spatial_gp_design(const SpatialDesign& design, double lengthscale) {
    return GpDesign{with_constant_feature(design.train), with_constant_feature(design.predict), lengthscale};
}

}  // namespace invpred
