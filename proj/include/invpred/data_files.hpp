#pragma once

#include <filesystem>

#include "invpred/gp_types.hpp"
#include "invpred/numcore.hpp"

namespace invpred {

// Raw coordinates from a `format gp-design 1` file.
struct SpatialDesign {
    Matrix train;    // rows in observation order
    Matrix predict;
};

// Both loaders skip blank lines and '#' comments, require the format line
// first, and throw ConfigError with the line number on malformed content,
// IoError if the file cannot be read.
SpatialDesign load_gp_design(const std::filesystem::path& path);
ObservationSet load_mvn_data(const std::filesystem::path& path);

// Features (1, x1, ..., xk) for both point sets.
GpDesign make_spatial_gp_design(const SpatialDesign& design, double lengthscale);

}  // namespace invpred
