#include "dmr/cli.h"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "dmr/analytics.h"
#include "dmr/error.h"
#include "dmr/experiments.h"
#include "dmr/parallel.h"
#include "dmr/sde.h"

#ifndef DMR_VERSION
#define DMR_VERSION "0.0.0"
#endif

namespace dmr {

namespace fs = std::filesystem;

// Config ----------------------------------------------------------------------

RunConfig config_from_json(const Json& in) {
  if (!in.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  const Json& j = in.contains("config") ? in.at("config") : in;
  static const char* known[] = {"model", "grid", "n_paths", "seed", "study", "study_args", "out_dir", "format"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (j.contains("model")) {
      c.model = model_from_json(j.at("model"));
      if (j.at("model").contains("m")) {
        const auto& m = j.at("model").at("m");
        if (!m.is_null()) c.reflection = ReflectionSpec{m.get<double>()};
      }
    }
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
    if (j.contains("n_paths")) c.n_paths = j.at("n_paths").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("study")) c.study = j.at("study").get<std::string>();
    if (j.contains("study_args")) {
      c.study_args = j.at("study_args");
      if (!c.study_args.is_object()) throw Error(ErrorCode::Config, "'study_args' must be an object");
    }
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("format")) c.format = j.at("format").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  if (c.format != "csv" && c.format != "binary") throw Error(ErrorCode::Config, "format must be csv or binary");
  return c;
}

Json to_json(const RunConfig& c) {
  Json model = to_json(c.model);
  if (c.reflection) model["m"] = c.reflection->m;
  return Json{{"model", model},     {"grid", to_json(c.grid)}, {"n_paths", c.n_paths},
              {"seed", c.seed},     {"study", c.study},        {"study_args", c.study_args},
              {"out_dir", c.out_dir}, {"format", c.format}};
}

namespace {

struct Context {
  RunConfig cfg;
  unsigned workers = 1;
  std::ostream& out;
};

fs::path out_path(const Context& ctx, const std::string& name) { return fs::path(ctx.cfg.out_dir) / name; }

void write_manifest(const Context& ctx, const std::string& command) {
  const Json manifest{{"command", command}, {"version", DMR_VERSION}, {"config", to_json(ctx.cfg)}};
  write_text(out_path(ctx, "manifest.json"), dump(manifest));
}

void require_model(const RunConfig& c) {
  ValidationReport r = validate(c.model);
  r.merge(validate(c.grid));
  if (c.reflection) r.merge(validate(*c.reflection, c.model.internal));
  require(r, "config");
}

// Study arguments -------------------------------------------------------------

double arg(const Json& a, const char* key, double fallback) {
  if (!a.contains(key)) return fallback;
  if (!a.at(key).is_number()) throw Error(ErrorCode::Config, std::string("study arg '") + key + "' must be a number");
  return a.at(key).get<double>();
}

std::vector<double> arg_list(const Json& a, const char* key, std::vector<double> fallback) {
  if (!a.contains(key)) return fallback;
  try {
    return a.at(key).get<std::vector<double>>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::Config, std::string("study arg '") + key + "' must be an array of numbers");
  }
}

struct StudyOutcome {
  Json args;
  Json result;
  bool pass = true;
};

using StudyFn = std::function<StudyOutcome(const Context&)>;

StudyOutcome study_moment(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto& p = c.model.internal;
  const std::string which = c.study_args.value("functional", std::string("y_T"));
  const bool squared = which == "y_T_squared";
  if (!squared && which != "y_T") throw Error(ErrorCode::Config, "functional must be y_T or y_T_squared");
  const auto est = estimate_moment(
      [squared](std::span<const double> y) { return squared ? y.back() * y.back() : y.back(); }, p, c.grid,
      c.n_paths, c.seed, ctx.workers);
  StudyOutcome o;
  o.args = Json{{"functional", which}};
  std::optional<double> target = squared ? second_moment_closed_form(p, c.grid.t_end)
                                         : std::optional<double>(mean_internal(p, c.grid.t_end));
  o.result = Json{{"estimate", to_json(est)}, {"closed_form", target ? Json(*target) : Json(nullptr)}};
  if (target) {
    o.pass = est.within(*target, 3.0);
  } else {
    o.result["notice"] = "no closed form; see moment_plateau_study";
  }
  return o;
}

StudyOutcome study_plateau(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto t_list = arg_list(c.study_args, "t_list", {1, 2, 5, 10, 20});
  const double dt = arg(c.study_args, "dt", c.grid.dt());
  const auto rep = moment_plateau_study(c.model.internal, t_list, dt, c.n_paths, c.seed, ctx.workers);
  return {Json{{"t_list", t_list}, {"dt", dt}}, to_json(rep), rep.pass};
}

StudyOutcome study_occupancy(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double eps = arg(c.study_args, "epsilon", 0.1);
  const double dt = arg(c.study_args, "dt", c.grid.dt());
  const auto horizons = arg_list(c.study_args, "horizons", {10, 25, 50});
  const auto reps = occupancy_near_origin(c.model, eps, dt, horizons, c.n_paths, c.seed, ctx.workers);
  Json list = Json::array();
  bool monotone = true;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    list.push_back(to_json(reps[i]));
    if (i > 0 && reps[i].fraction_visited < reps[i - 1].fraction_visited) monotone = false;
  }
  const bool flagged = !reps.empty() && reps.front().regime_not_covered;
  Json result{{"reports", list}, {"monotone", monotone}, {"regime_not_covered", flagged}};
  if (flagged) result["flag"] = "RegimeNotCovered";
  return {Json{{"epsilon", eps}, {"dt", dt}, {"horizons", horizons}}, result, monotone};
}

StudyOutcome study_density_fit(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double burn_in = arg(c.study_args, "burn_in", 10.0 / c.model.internal.b2);
  const auto rep = density_fit_study(c.model.internal, c.grid, c.n_paths, burn_in, c.seed, ctx.workers);
  return {Json{{"burn_in", burn_in}}, to_json(rep), rep.ks_pass};
}

StudyOutcome study_comparison(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double gap = arg(c.study_args, "gap", 1.0);
  const auto dts = arg_list(c.study_args, "dt_list", {1e-2, 5e-3, 2.5e-3});
  const auto rep = comparison_violation_study(c.model.external, gap, dts, c.grid.t_end, c.n_paths, c.seed, ctx.workers);
  return {Json{{"gap", gap}, {"dt_list", dts}}, to_json(rep), rep.pass};
}

StudyOutcome study_reflected_mean(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto m_list = arg_list(c.study_args, "m_list", {c.reflection ? c.reflection->m : 0.2});
  const auto t_list = arg_list(c.study_args, "t_list", {1, 2, 5, 10, 20});
  const double dt = arg(c.study_args, "dt", c.grid.dt());
  const auto rep = reflected_mean_reversion_study(c.model.internal, m_list, t_list, dt, c.n_paths, c.seed, ctx.workers);
  return {Json{{"m_list", m_list}, {"t_list", t_list}, {"dt", dt}}, to_json(rep), rep.pass};
}

StudyOutcome study_sup_moment(const Context& ctx) {
  const auto& c = ctx.cfg;
  const ReflectionSpec refl{arg(c.study_args, "m", c.reflection ? c.reflection->m : 0.1)};
  const double p_exp = arg(c.study_args, "p_exp", 2.0);
  if (!(p_exp > 0.0)) throw Error(ErrorCode::Config, "p_exp must be positive");
  const auto rep = reflected_sup_moment_check(c.model.internal, refl, c.grid, c.n_paths, c.seed, p_exp, ctx.workers);
  return {Json{{"m", refl.m}, {"p_exp", p_exp}}, to_json(rep), rep.stable};
}

StudyOutcome study_boundary(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double dt = arg(c.study_args, "dt", c.grid.dt());
  const auto cls = classify_boundary(c.model.internal);
  const auto ev = boundary_evidence(c.model.internal, dt, c.n_paths, c.seed, ctx.workers);
  return {Json{{"dt", dt}}, Json{{"classification", to_json(cls)}, {"evidence", to_json(ev)}}, ev.agrees};
}

StudyOutcome study_x_positivity(const Context& ctx) {
  const auto& c = ctx.cfg;
  const ReflectionSpec refl{arg(c.study_args, "m", c.reflection ? c.reflection->m : 0.1)};
  const auto r = x_positivity_readings(c.model, refl, c.grid, c.n_paths, c.seed, ctx.workers);
  return {Json{{"m", refl.m}}, to_json(r), true};
}

const std::map<std::string, StudyFn>& study_table() {
  static const std::map<std::string, StudyFn> table{
      {"boundary_evidence", study_boundary},
      {"comparison", study_comparison},
      {"density_fit", study_density_fit},
      {"moment", study_moment},
      {"occupancy", study_occupancy},
      {"plateau", study_plateau},
      {"reflected_mean", study_reflected_mean},
      {"reflected_sup_moment", study_sup_moment},
      {"x_positivity", study_x_positivity},
  };
  return table;
}

// Commands --------------------------------------------------------------------

int cmd_simulate(const Context& ctx) {
  const auto& c = ctx.cfg;
  require_model(c);
  const bool single = c.n_paths == 1;
  const auto name = [&](const char* stem, std::size_t k, const char* ext) {
    return single ? std::string(stem) + ext : std::string(stem) + "_" + std::to_string(k) + ext;
  };
  parallel_for(c.n_paths, ctx.workers, [&](std::size_t k) {
    const RngStream stream(c.seed, k);
    const PathBundle b =
        c.reflection ? simulate_system_reflected(c.model, *c.reflection, c.grid, stream) : simulate_system(c.model, c.grid, stream);
    if (c.format == "binary") {
      write_paths_binary(out_path(ctx, name("paths", k, ".bin")), b);
    } else {
      write_paths_csv(out_path(ctx, name("paths", k, ".csv")), b);
    }
    if (c.reflection) {
      write_reflected_csv(out_path(ctx, name("reflected", k, ".csv")),
                          simulate_reflected(c.model.internal, *c.reflection, c.grid, stream));
    }
  });
  write_manifest(ctx, "simulate");
  ctx.out << "wrote " << c.n_paths << " path(s) to " << c.out_dir << "\n";
  return kExitOk;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> x(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return x;
}

int cmd_analytics(const Context& ctx) {
  const auto& c = ctx.cfg;
  require_model(c);
  const auto& p = c.model.internal;
  Json notices = Json::array();
  Json summary{{"params", to_json(c.model)}};

  std::vector<double> times(c.grid.n_points());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = c.grid.time(i);
  const MomentCurve curve = moment_curve(p, times);
  if (!curve.second_moment) notices.push_back("second_moment: no closed form; see moment_plateau_study");
  write_moments_csv(out_path(ctx, "moments.csv"), curve);
  if (p.alpha2 == 0.5) summary["cir_limit_variance"] = cir_limit_variance(p);

  if (p.a2 > 0.0) {
    const StationaryDensity density = stationary_density(p);
    const double mean = p.long_run_mean();
    const auto x = log_grid(mean * 1e-8, mean * 1e4, 4001);
    std::vector<double> pdf(x.size());
    double table_mass = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) pdf[i] = density.pdf(x[i]);
    const double h = std::log(x[1] / x[0]);
    for (std::size_t i = 1; i < x.size(); ++i) table_mass += 0.5 * h * (pdf[i - 1] * x[i - 1] + pdf[i] * x[i]);
    write_density_csv(out_path(ctx, "density.csv"), x, pdf);
    summary["density"] = Json{{"regime", std::string(to_string(density.regime()))},
                              {"normalizer", density.normalizer()},
                              {"total_mass", density.total_mass()},
                              {"table_mass", table_mass}};
  } else {
    notices.push_back("density: a2 = 0 has no stationary law");
  }

  const auto xs = log_grid(1e-3, 1e3, 121);
  std::vector<double> s(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    try {
      s[i] = scale_function(p, 1.0, xs[i]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::QuadratureFailure) throw;
      s[i] = std::nan("");
    }
  }
  const std::vector<std::string> header{"x", "s"};
  const std::vector<std::vector<double>> cols{xs, s};
  write_text(out_path(ctx, "scale.csv"), csv_table(header, cols));

  const auto cls = classify_boundary(p);
  write_text(out_path(ctx, "classification.json"), dump(to_json(cls)));
  summary["classification"] = to_json(cls);

  const double k = arg(c.study_args, "k", 1.0);
  const auto search = find_lyapunov_radius(c.model, k, 1.0, 64);
  summary["lyapunov"] = Json{{"k", k},
                             {"r0", search.r0 ? Json(*search.r0) : Json(nullptr)},
                             {"last_scan", search.scans.empty() ? Json(nullptr) : to_json(search.scans.back())}};
  summary["notices"] = notices;
  write_text(out_path(ctx, "analytics.json"), dump(summary));
  write_manifest(ctx, "analytics");
  for (const auto& n : notices) ctx.out << "notice: " << n.get<std::string>() << "\n";
  ctx.out << "verdict: " << to_string(cls.verdict) << "\n";
  return kExitOk;
}

int cmd_study(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto& table = study_table();
  const auto it = table.find(c.study);
  if (it == table.end()) throw Error(ErrorCode::Config, "unknown study '" + c.study + "'");
  if (c.study == "comparison") {
    require(validate(c.model.external), "config");
  } else {
    require_model(c);
  }
  const StudyOutcome o = it->second(ctx);
  const Json report{{"study", c.study},   {"params", to_json(c.model)}, {"grid", to_json(c.grid)},
                    {"n_paths", c.n_paths}, {"seed", c.seed},           {"args", o.args},
                    {"result", o.result}, {"pass", o.pass}};
  write_text(out_path(ctx, "report.json"), dump(report));
  write_manifest(ctx, "study");
  ctx.out << c.study << ": " << (o.pass ? "PASS" : "FAIL") << "\n";
  return o.pass ? kExitOk : kExitCriterion;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return kExitIo;
    case ErrorCode::QuadratureFailure: return kExitFailure;
    default: return kExitConfig;
  }
}

}  // namespace

const std::vector<std::string>& registered_studies() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, _] : study_table()) v.push_back(name);
    return v;
  }();
  return names;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and analysis of the double mean-reverting model", "dmr"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_paths;
  std::optional<std::string> out_dir;
  unsigned workers = 0;
  std::string study_name;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config or manifest");
    sub->add_option("--seed", seed, "seed override (falls back to config, then DMR_SEED)");
    sub->add_option("--n-paths", n_paths, "number of paths");
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads (0 = hardware concurrency)");
  };
  auto* simulate = app.add_subcommand("simulate", "write sample paths");
  auto* analytics = app.add_subcommand("analytics", "write closed-form curves, densities and classification");
  auto* study = app.add_subcommand("study", "run a registered study");
  auto* list = app.add_subcommand("list-studies", "print registered studies");
  add_common(simulate);
  add_common(analytics);
  add_common(study);
  study->add_option("name", study_name, "study name (overrides config)");

  std::vector<const char*> argv{"dmr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (list->parsed()) {
    for (const auto& s : registered_studies()) out << s << "\n";
    return kExitOk;
  }

  try {
    Json raw = Json::object();
    bool seed_in_config = false;
    if (!config_path.empty()) {
      try {
        raw = Json::parse(read_text(config_path));
      } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Config, config_path + ": " + e.what());
      }
      const Json& body = raw.is_object() && raw.contains("config") ? raw.at("config") : raw;
      seed_in_config = body.is_object() && body.contains("seed");
    }
    Context ctx{config_from_json(raw), workers == 0 ? default_workers() : workers, out};
    if (seed) {
      ctx.cfg.seed = *seed;
    } else if (!seed_in_config) {
      if (const char* env = std::getenv("DMR_SEED")) {
        try {
          ctx.cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
          throw Error(ErrorCode::Config, "DMR_SEED must be an unsigned integer");
        }
      }
    }
    if (n_paths) ctx.cfg.n_paths = *n_paths;
    if (out_dir) ctx.cfg.out_dir = *out_dir;
    if (!study_name.empty()) ctx.cfg.study = study_name;

    if (simulate->parsed()) return cmd_simulate(ctx);
    if (analytics->parsed()) return cmd_analytics(ctx);
    return cmd_study(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace dmr
