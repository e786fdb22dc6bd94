#include "dmr/io.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dmr/error.h"

namespace dmr {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary export assumes a little-endian host");

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_table(std::span<const std::string> header, std::span<const std::vector<double>> columns) {
  if (header.size() != columns.size()) throw Error(ErrorCode::InvalidParams, "header and column count differ");
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw Error(ErrorCode::InvalidParams, "ragged columns");
  }
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
  out += '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out += ',';
      out += format_double(columns[j][i]);
    }
    out += '\n';
  }
  return out;
}

namespace {

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<double> grid_times(const GridSpec& g) {
  std::vector<double> t(g.n_points());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = g.time(i);
  return t;
}

template <class T>
void put(std::ofstream& f, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  f.write(bytes, sizeof(T));
}

template <class T>
T get(std::ifstream& f, const fs::path& path) {
  char bytes[sizeof(T)];
  if (!f.read(bytes, sizeof(T))) throw Error(ErrorCode::Io, "truncated file " + path.string());
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

Json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

template <class T>
Json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_same_v<T, double>) {
    return num(*v);
  } else {
    return *v;
  }
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  finish(f, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_paths_csv(const fs::path& path, const PathBundle& b) {
  const std::vector<std::string> header{"t", "s", "x", "y"};
  const std::vector<std::vector<double>> cols{grid_times(b.grid), b.s, b.x, b.y};
  write_text(path, csv_table(header, cols));
}

void write_reflected_csv(const fs::path& path, const ReflectedPath& r) {
  const std::vector<std::string> header{"t", "y_m", "l_m", "z_m"};
  const std::vector<std::vector<double>> cols{grid_times(r.grid), r.y_m, r.l_m, r.z_m};
  write_text(path, csv_table(header, cols));
}

void write_moments_csv(const fs::path& path, const MomentCurve& c) {
  const std::vector<std::string> header{"t", "mean", "second_moment"};
  const std::vector<std::vector<double>> cols{
      c.times, c.mean, c.second_moment.value_or(std::vector<double>(c.times.size(), std::nan("")))};
  write_text(path, csv_table(header, cols));
}

void write_density_csv(const fs::path& path, std::span<const double> x, std::span<const double> pdf) {
  const std::vector<std::string> header{"x", "pdf"};
  const std::vector<std::vector<double>> cols{{x.begin(), x.end()}, {pdf.begin(), pdf.end()}};
  write_text(path, csv_table(header, cols));
}

void write_binary_table(const fs::path& path, const BinaryTable& t) {
  if (t.data.size() != (t.n_steps + 1) * t.n_cols) throw Error(ErrorCode::InvalidParams, "table size mismatch");
  auto f = open_out(path);
  f.write(kBinaryMagic, sizeof kBinaryMagic);
  put<std::uint32_t>(f, kBinaryVersion);
  put<std::uint32_t>(f, 0);
  put<std::uint64_t>(f, t.n_steps);
  put<std::uint64_t>(f, t.n_cols);
  for (double v : t.data) put<double>(f, v);
  finish(f, path);
}

void write_paths_binary(const fs::path& path, const PathBundle& b) {
  BinaryTable t;
  t.n_steps = b.grid.n_steps;
  t.n_cols = 4;
  t.data.reserve(b.grid.n_points() * 4);
  for (std::size_t i = 0; i < b.grid.n_points(); ++i) {
    t.data.insert(t.data.end(), {b.grid.time(i), b.s[i], b.x[i], b.y[i]});
  }
  write_binary_table(path, t);
}

BinaryTable read_binary_table(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, kBinaryMagic, 8) != 0)
    throw Error(ErrorCode::Io, "bad magic in " + path.string());
  if (get<std::uint32_t>(f, path) != kBinaryVersion) throw Error(ErrorCode::Io, "unsupported version");
  get<std::uint32_t>(f, path);
  BinaryTable t;
  t.n_steps = get<std::uint64_t>(f, path);
  t.n_cols = get<std::uint64_t>(f, path);
  t.data.resize((t.n_steps + 1) * t.n_cols);
  for (double& v : t.data) v = get<double>(f, path);
  return t;
}

// JSON ----------------------------------------------------------------------

Json to_json(const ModelParams& p) {
  Json corr = Json::array();
  for (const auto& row : p.corr.matrix) corr.push_back(Json(row));
  return Json{{"a1", p.external.a1},       {"b1", p.external.b1}, {"sigma1", p.external.sigma1},
              {"alpha1", p.external.alpha1}, {"x0", p.external.x0}, {"a2", p.internal.a2},
              {"b2", p.internal.b2},       {"sigma2", p.internal.sigma2}, {"alpha2", p.internal.alpha2},
              {"y0", p.internal.y0},       {"s0", p.s0},          {"corr", corr}};
}

namespace {

double read_number(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw Error(ErrorCode::Config, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

ModelParams model_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "model must be a JSON object");
  ModelParams p;
  const std::pair<const char*, double*> fields[] = {
      {"a1", &p.external.a1},     {"b1", &p.external.b1},         {"sigma1", &p.external.sigma1},
      {"alpha1", &p.external.alpha1}, {"x0", &p.external.x0},     {"a2", &p.internal.a2},
      {"b2", &p.internal.b2},     {"sigma2", &p.internal.sigma2}, {"alpha2", &p.internal.alpha2},
      {"y0", &p.internal.y0},     {"s0", &p.s0}};
  for (const auto& [key, slot] : fields) {
    if (j.contains(key)) *slot = read_number(j, key);
  }
  if (j.contains("corr")) {
    const auto& c = j.at("corr");
    if (!c.is_array() || c.size() != 3) throw Error(ErrorCode::Config, "'corr' must be a 3x3 array");
    for (std::size_t r = 0; r < 3; ++r) {
      if (!c[r].is_array() || c[r].size() != 3) throw Error(ErrorCode::Config, "'corr' must be a 3x3 array");
      for (std::size_t k = 0; k < 3; ++k) {
        if (!c[r][k].is_number()) throw Error(ErrorCode::Config, "'corr' entries must be numbers");
        p.corr.matrix[r][k] = c[r][k].get<double>();
      }
    }
  }
  for (const auto& [key, _] : j.items()) {
    bool known = key == "corr" || key == "m";
    for (const auto& f : fields) known = known || key == f.first;
    if (!known) throw Error(ErrorCode::Config, "unknown model key '" + key + "'");
  }
  return p;
}

Json to_json(const GridSpec& g) { return Json{{"t_end", g.t_end}, {"n_steps", g.n_steps}}; }

GridSpec grid_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "grid must be a JSON object");
  GridSpec g;
  if (j.contains("t_end")) g.t_end = read_number(j, "t_end");
  if (j.contains("n_steps")) {
    const auto& v = j.at("n_steps");
    if (!v.is_number_unsigned()) throw Error(ErrorCode::Config, "'n_steps' must be a non-negative integer");
    g.n_steps = v.get<std::size_t>();
  }
  return g;
}

Json to_json(const McEstimate& e) {
  return Json{{"value", num(e.value)},
              {"std_error", num(e.std_error)},
              {"n_paths", e.n_paths},
              {"n_steps", e.n_steps},
              {"seed", e.seed}};
}

Json to_json(const ValidationReport& r) {
  Json out = Json::array();
  for (const auto& v : r.violations) out.push_back(Json{{"field", v.field}, {"constraint", v.constraint}});
  return out;
}

Json to_json(const BoundaryClassification& c) {
  return Json{{"verdict", std::string(to_string(c.verdict))},
              {"strictly_positive", c.strictly_positive},
              {"s_at_zero", num(c.s_at_zero)},
              {"s_at_infinity", num(c.s_at_infinity)},
              {"numeric_agrees", c.numeric_agrees},
              {"covered_by_near_origin_theorems", c.covered_by_near_origin_theorems},
              {"rule", c.rule}};
}

namespace {

Json estimates(const std::vector<McEstimate>& v) {
  Json out = Json::array();
  for (const auto& e : v) out.push_back(to_json(e));
  return out;
}

}  // namespace

Json to_json(const PlateauReport& r) {
  return Json{{"times", r.times},
              {"second_moment", estimates(r.second_moment)},
              {"mixing_time", r.mixing_time},
              {"bound", num(r.bound)},
              {"pass", r.pass}};
}

Json to_json(const OccupancyReport& r) {
  return Json{{"epsilon", r.epsilon},
              {"horizon", r.horizon},
              {"n_paths", r.n_paths},
              {"fraction_visited", r.fraction_visited},
              {"fraction_x_hit_zero_with_y_small", opt(r.fraction_x_hit_zero_with_y_small)},
              {"mean_first_entry_time", opt(r.mean_first_entry_time)},
              {"regime_not_covered", r.regime_not_covered}};
}

Json to_json(const DensityFitReport& r) {
  return Json{{"regime", std::string(to_string(r.regime))},
              {"n_paths", r.n_paths},
              {"horizon", r.horizon},
              {"burn_in", r.burn_in},
              {"ks_statistic", r.ks_statistic},
              {"ks_threshold", r.ks_threshold},
              {"l1_distance", r.l1_distance},
              {"sample_mean", to_json(r.sample_mean)},
              {"stationary_mean", r.stationary_mean},
              {"normalizer", num(r.normalizer)},
              {"ks_pass", r.ks_pass},
              {"mean_pass", r.mean_pass},
              {"bin_edges", r.bin_edges},
              {"histogram", r.histogram},
              {"binned_pdf", r.binned_pdf}};
}

Json to_json(const ComparisonReport& r) {
  Json levels = Json::array();
  for (const auto& l : r.levels) {
    levels.push_back(Json{{"dt", l.dt}, {"violation_fraction", l.violation_fraction}, {"violations", l.violations}});
  }
  return Json{{"gap", r.gap},
              {"horizon", r.horizon},
              {"levels", levels},
              {"nonincreasing", r.nonincreasing},
              {"finest_below_threshold", r.finest_below_threshold},
              {"pass", r.pass}};
}

Json to_json(const ReflectedMeanReport& r) {
  Json curves = Json::array();
  for (const auto& c : r.curves) {
    curves.push_back(Json{{"m", c.m},
                          {"mean", estimates(c.mean)},
                          {"terminal", to_json(c.terminal)},
                          {"below_long_run_mean", c.below_long_run_mean},
                          {"terminal_within_3se", opt(c.terminal_within_3se)},
                          {"restricted_stationary_mean", opt(c.restricted_stationary_mean)},
                          {"flag", c.flag}});
  }
  return Json{{"times", r.times}, {"long_run_mean", r.long_run_mean}, {"curves", curves}, {"pass", r.pass}};
}

Json to_json(const SupMomentReport& r) {
  return Json{{"p_exp", r.p_exp},
              {"base", to_json(r.base)},
              {"doubled", to_json(r.doubled)},
              {"ratio", num(r.ratio)},
              {"stable", r.stable}};
}

Json to_json(const BoundaryEvidence& r) {
  return Json{{"verdict", std::string(to_string(r.verdict))},
              {"horizon", r.horizon},
              {"n_paths", r.n_paths},
              {"fraction_crossing_both", r.fraction_crossing_both},
              {"fraction_hit_zero", r.fraction_hit_zero},
              {"median_terminal", r.median_terminal},
              {"agrees", r.agrees}};
}

Json to_json(const PositivityReading& r) {
  return Json{{"m", r.m},
              {"a1", r.a1},
              {"sigma1", r.sigma1},
              {"level_reading_holds", r.level_reading_holds},
              {"drift_reading_holds", r.drift_reading_holds},
              {"fraction_x_hit_zero", r.fraction_x_hit_zero},
              {"mean_x_zero_hits", r.mean_x_zero_hits}};
}

Json to_json(const ScanReport& r) {
  return Json{{"k", r.k},
              {"radius", r.radius},
              {"points", r.points},
              {"max_value", num(r.max_value)},
              {"argmax_x", r.argmax_x},
              {"argmax_y", r.argmax_y},
              {"all_nonpositive", r.all_nonpositive},
              {"quadratic_part_negative", r.quadratic_part_negative},
              {"regime_covered", r.regime_covered}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace dmr
