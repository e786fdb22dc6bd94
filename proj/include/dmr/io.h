#pragma once

// CSV, binary and JSON serialization of paths, curves, parameters and reports.
// File layouts are documented in docs/FORMATS.md.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dmr/analytics.h"
#include "dmr/experiments.h"
#include "dmr/model.h"
#include "dmr/sde.h"
#include "json.hpp"

namespace dmr {

using Json = nlohmann::ordered_json;

/// Shortest round-trip is not required; every value is written with 17 significant digits.
std::string format_double(double v);

/// Header line plus one row per index; all columns must have equal length.
std::string csv_table(std::span<const std::string> header, std::span<const std::vector<double>> columns);

/// Writes text to a file, creating parent directories. Throws Error(Io).
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void write_paths_csv(const std::filesystem::path& path, const PathBundle& bundle);
void write_reflected_csv(const std::filesystem::path& path, const ReflectedPath& path_m);
void write_moments_csv(const std::filesystem::path& path, const MomentCurve& curve);
void write_density_csv(const std::filesystem::path& path, std::span<const double> x, std::span<const double> pdf);

inline constexpr char kBinaryMagic[8] = {'D', 'M', 'R', 'P', 'A', 'T', 'H', '\0'};
inline constexpr std::uint32_t kBinaryVersion = 1;

struct BinaryTable {
  std::uint64_t n_steps = 0;
  std::uint64_t n_cols = 0;
  std::vector<double> data;  // (n_steps + 1) x n_cols, row-major
};

/// 32-byte header then little-endian float64 rows of (t, s, x, y).
void write_paths_binary(const std::filesystem::path& path, const PathBundle& bundle);
void write_binary_table(const std::filesystem::path& path, const BinaryTable& table);
BinaryTable read_binary_table(const std::filesystem::path& path);

// JSON ----------------------------------------------------------------------

Json to_json(const ModelParams& p);
/// Flat keys a1, b1, sigma1, alpha1, x0, a2, b2, sigma2, alpha2, y0, s0, corr.
/// Missing keys keep their defaults; unknown keys or wrong types throw Error(Config).
ModelParams model_from_json(const Json& j);
Json to_json(const GridSpec& g);
GridSpec grid_from_json(const Json& j);

Json to_json(const McEstimate& e);
Json to_json(const ValidationReport& r);
Json to_json(const BoundaryClassification& c);
Json to_json(const PlateauReport& r);
Json to_json(const OccupancyReport& r);
Json to_json(const DensityFitReport& r);
Json to_json(const ComparisonReport& r);
Json to_json(const ReflectedMeanReport& r);
Json to_json(const SupMomentReport& r);
Json to_json(const BoundaryEvidence& r);
Json to_json(const PositivityReading& r);
Json to_json(const ScanReport& r);

/// Serializes with two-space indentation and a trailing newline.
std::string dump(const Json& j);

}  // namespace dmr
