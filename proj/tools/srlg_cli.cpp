// Command-line front end: score/simulate single models and run the
// conditioning experiments, with JSON config files mirrored by flags.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "srlg/experiments.hpp"
#include "srlg/model_json.hpp"

namespace {

using namespace srlg;

std::vector<double> parse_list(const std::string& text,
                               const std::string& what) {
  if (text.empty()) throw ConfigError(what + ": empty list");
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = comma == std::string::npos
                                 ? text.substr(pos)
                                 : text.substr(pos, comma - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty())
      throw ConfigError(what + ": cannot parse '" + item + "' as a number");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// One copy of the shared flag values; only the parsed subcommand fills it.
struct FlagVals {
  std::string config;
  std::string model;
  std::string model_file;
  std::string theta;
  std::string delta_list;
  std::string tau_grid;
  std::string z1;
  std::string out;
  std::string format;
  std::string method;
  double delta_t = 0.0;
  double delta = 0.0;
  double tau_star = 0.0;
  double mu_max = 0.0;
  int N = 0;
  std::uint64_t seed = 0;
  bool zero_noise = false;
};

void add_common_flags(CLI::App* sub, FlagVals& v) {
  sub->add_option("--config", v.config, "JSON config file, applied before flags");
  sub->add_option("--model", v.model, "example1, example3, or custom");
  sub->add_option("--model-file", v.model_file,
                  "JSON model description (with --model custom)");
  sub->add_option("--theta", v.theta, "evaluation point, comma separated");
  sub->add_option("--delta-t", v.delta_t, "example1 sampling interval");
  sub->add_option("--delta", v.delta, "example3 collinearity parameter");
  sub->add_option("--N", v.N, "number of time steps");
  sub->add_option("--seed", v.seed, "measurement generator seed");
  sub->add_option("--tau-star", v.tau_star,
                  "parameter the dataset is simulated at");
  sub->add_option("--delta-list", v.delta_list,
                  "delta values, comma separated");
  sub->add_option("--tau-grid", v.tau_grid, "tau grid, comma separated");
  sub->add_option("--z1", v.z1, "single-step measurement, comma separated");
  sub->add_option("--mu-max", v.mu_max, "profile curve endpoint");
  sub->add_option("--out", v.out, "output directory");
  sub->add_option("--format", v.format, "csv or md");
  sub->add_option("--method", v.method, "sqrt, conventional, or both");
  sub->add_flag("--zero-noise", v.zero_noise, "propagate without noise draws");
}

// Defaults, then config file, then whichever flags were actually given.
RunConfig resolve_config(const CLI::App* active, const FlagVals& v) {
  RunConfig cfg;
  if (active->count("--config")) apply_config_file(cfg, v.config);
  if (active->count("--model")) cfg.model = v.model;
  if (active->count("--model-file")) cfg.model_file = v.model_file;
  if (active->count("--theta")) cfg.theta = parse_list(v.theta, "--theta");
  if (active->count("--delta-t")) cfg.delta_t = v.delta_t;
  if (active->count("--delta")) cfg.delta = v.delta;
  if (active->count("--N")) cfg.N = v.N;
  if (active->count("--seed")) cfg.seed = v.seed;
  if (active->count("--tau-star")) cfg.tau_star = v.tau_star;
  if (active->count("--delta-list"))
    cfg.delta_list = parse_list(v.delta_list, "--delta-list");
  if (active->count("--tau-grid"))
    cfg.tau_grid = parse_list(v.tau_grid, "--tau-grid");
  if (active->count("--z1")) cfg.z1 = parse_list(v.z1, "--z1");
  if (active->count("--mu-max")) cfg.mu_max = v.mu_max;
  if (active->count("--out")) cfg.out = v.out;
  if (active->count("--format")) cfg.format = v.format;
  if (active->count("--method")) cfg.method = v.method;
  if (active->count("--zero-noise")) cfg.zero_noise = v.zero_noise;

  if (cfg.model != "example1" && cfg.model != "example3" &&
      cfg.model != "custom")
    throw ConfigError("config: model must be example1, example3, or custom");
  if (cfg.model == "custom" && cfg.model_file.empty())
    throw ConfigError("config: model custom requires model_file");
  if (cfg.model != "custom" && !cfg.model_file.empty())
    throw ConfigError("config: model_file is only valid with model custom");
  if (cfg.format != "csv" && cfg.format != "md")
    throw ConfigError("config: format must be csv or md");
  if (cfg.method != "sqrt" && cfg.method != "conventional" &&
      cfg.method != "both")
    throw ConfigError("config: method must be sqrt, conventional, or both");
  if (cfg.N < 1) throw ConfigError("config: N must be at least 1");
  if (!(cfg.mu_max >= 1.0)) throw ConfigError("config: mu_max must be >= 1");
  return cfg;
}

std::string ensure_out_dir(const RunConfig& cfg, const char* command) {
  if (cfg.out.empty())
    throw ConfigError(std::string(command) + ": --out is required");
  std::filesystem::create_directories(cfg.out);
  return cfg.out;
}

void write_effective_config(const RunConfig& cfg, const std::string& dir) {
  const std::string path = dir + "/effective_config.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << effective_config_json(cfg).dump(2) << "\n";
  std::printf("wrote %s\n", path.c_str());
}

Matrix<double> column_from(const std::vector<double>& v) {
  Matrix<double> col(static_cast<int>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i)
    col(static_cast<int>(i), 0) = v[i];
  return col;
}

struct ActiveModel {
  ModelSpec<double> spec;
  std::vector<double> theta;       // evaluation point
  std::vector<double> theta_true;  // dataset parameter
};

ActiveModel make_model(const RunConfig& cfg) {
  ActiveModel am;
  if (cfg.model == "example1") {
    am.spec = example1_model<double>(cfg.delta_t);
    am.theta = cfg.theta.empty() ? std::vector<double>{cfg.tau_star}
                                 : cfg.theta;
    am.theta_true = {cfg.tau_star};
  } else if (cfg.model == "example3") {
    if (!(cfg.delta > 0)) throw ConfigError("config: delta must be positive");
    am.spec = example3_model<double>(cfg.delta);
    am.theta = cfg.theta.empty() ? std::vector<double>{2.0} : cfg.theta;
    am.theta_true = am.theta;
  } else {
    am.spec = load_model_file(cfg.model_file);
    am.theta = cfg.theta.empty()
                   ? std::vector<double>(am.spec.dims.p, 0.0)
                   : cfg.theta;
    am.theta_true = am.theta;
  }
  return am;
}

// Dataset the score evaluates: the fixed single measurement for example3,
// a seeded simulation at theta_true otherwise.
std::vector<Matrix<double>> make_data(const RunConfig& cfg,
                                      const ActiveModel& am) {
  if (cfg.model == "example3") {
    if (static_cast<int>(cfg.z1.size()) != am.spec.dims.m)
      throw ConfigError("config: z1 must have " +
                        std::to_string(am.spec.dims.m) + " entries");
    return {column_from(cfg.z1)};
  }
  auto truth = evaluate(am.spec, am.theta_true);
  return simulate(truth, cfg.N, cfg.seed, cfg.zero_noise).z;
}

int report_method_failure(const char* method, int step,
                          const std::string& reason) {
  std::fprintf(stderr, "E_NUMERIC: %s failed at step %d: %s\n", method, step,
               reason.c_str());
  return 3;
}

void print_score(const char* method, const ScoreResult<double>& s) {
  std::printf("%s LogLF = %s\n", method, detail::render(s.loglik).c_str());
  std::string grad;
  for (std::size_t i = 0; i < s.gradient.size(); ++i) {
    if (i) grad += " ";
    grad += detail::render(s.gradient[i]);
  }
  std::printf("%s LogLG = %s\n", method, grad.c_str());
}

void append_score_row(std::string& csv, const char* method,
                      const ScoreResult<double>& s) {
  csv += method;
  csv += "," + detail::render(s.loglik);
  for (double g : s.gradient) csv += "," + detail::render(g);
  csv += "\n";
}

int run_score(const RunConfig& cfg) {
  auto am = make_model(cfg);
  auto z = make_data(cfg, am);
  auto mdl = evaluate(am.spec, am.theta);

  const bool want_sqrt = cfg.method != "conventional";
  const bool want_conv = cfg.method != "sqrt";

  std::string csv = "method,LogLF";
  for (int i = 0; i < am.spec.dims.p; ++i)
    csv += ",LogLG_" + std::to_string(i);
  csv += "\n";

  int rc = 0;
  if (want_sqrt) {
    auto s = sqrt_score(mdl, z);
    if (s.failed)
      rc = report_method_failure("sqrt", s.fail_step, s.fail_reason);
    else {
      print_score("sqrt", s);
      append_score_row(csv, "sqrt", s);
    }
  }
  if (want_conv) {
    auto s = kf_score(mdl, z);
    if (s.failed)
      rc = report_method_failure("conventional", s.fail_step, s.fail_reason);
    else {
      print_score("conventional", s);
      append_score_row(csv, "conventional", s);
    }
  }
  if (!cfg.out.empty()) {
    const std::string dir = ensure_out_dir(cfg, "score");
    const std::string path = dir + "/score.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << csv;
    std::printf("wrote %s\n", path.c_str());
    write_effective_config(cfg, dir);
  }
  return rc;
}

int run_simulate(const RunConfig& cfg) {
  auto am = make_model(cfg);
  auto truth = evaluate(am.spec, am.theta_true);
  auto traj = simulate(truth, cfg.N, cfg.seed, cfg.zero_noise);

  const std::string dir = ensure_out_dir(cfg, "simulate");
  const std::string path = dir + "/trajectory.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "k";
  for (int i = 0; i < am.spec.dims.n; ++i) out << ",x_" << i;
  for (int i = 0; i < am.spec.dims.m; ++i) out << ",z_" << i;
  out << "\n";
  for (std::size_t k = 0; k < traj.z.size(); ++k) {
    out << (k + 1);
    for (int i = 0; i < am.spec.dims.n; ++i)
      out << "," << detail::render(traj.x[k](i, 0));
    for (int i = 0; i < am.spec.dims.m; ++i)
      out << "," << detail::render(traj.z[k](i, 0));
    out << "\n";
  }
  out.close();
  std::printf("wrote %s\n", path.c_str());
  write_effective_config(cfg, dir);
  return 0;
}

double scalar_theta(const RunConfig& cfg) {
  if (cfg.theta.empty()) return 2.0;
  if (cfg.theta.size() != 1)
    throw ConfigError("config: this experiment takes a single theta");
  return cfg.theta[0];
}

Table1Config table1_config(const RunConfig& cfg) {
  if (cfg.z1.size() != 2)
    throw ConfigError("config: z1 must have 2 entries");
  Table1Config t1;
  t1.z1 = column_from(cfg.z1);
  return t1;
}

int run_table1_cmd(const RunConfig& cfg) {
  const auto& deltas =
      cfg.delta_list.empty() ? default_table1_deltas() : cfg.delta_list;
  auto rows = run_table1(deltas, scalar_theta(cfg), table1_config(cfg));

  const std::string dir = ensure_out_dir(cfg, "table1");
  const std::string path =
      dir + (cfg.format == "csv" ? "/table1.csv" : "/table1.md");
  if (cfg.format == "csv")
    write_table1_csv(rows, path);
  else
    write_table1_markdown(rows, path);
  std::printf("wrote %s (%zu rows)\n", path.c_str(), rows.size());
  write_effective_config(cfg, dir);
  return 0;
}

int run_sweep_cmd(const RunConfig& cfg) {
  SweepConfig sc;
  sc.delta_t = cfg.delta_t;
  sc.N = cfg.N;
  sc.tau_star = cfg.tau_star;
  sc.seed = cfg.seed;
  const auto grid =
      cfg.tau_grid.empty() ? default_tau_grid() : cfg.tau_grid;
  auto curve = run_example1_sweep(grid, sc);

  const std::string dir = ensure_out_dir(cfg, "example1-sweep");
  const std::string path =
      dir + (cfg.format == "csv" ? "/example1_sweep.csv" : "/example1_sweep.md");
  if (cfg.format == "csv")
    write_sweep_csv(curve, path);
  else
    write_sweep_markdown(curve, path);
  std::printf("wrote %s (%zu rows)\n", path.c_str(), curve.points.size());
  write_effective_config(cfg, dir);
  return 0;
}

int run_profile_cmd(const RunConfig& cfg) {
  const auto& deltas =
      cfg.delta_list.empty() ? default_profile_deltas() : cfg.delta_list;
  auto prof = run_performance_profile(deltas, scalar_theta(cfg), cfg.mu_max,
                                      table1_config(cfg));

  const std::string dir = ensure_out_dir(cfg, "perf-profile");
  if (cfg.format == "csv") {
    const std::string problems = dir + "/perf_profile_problems.csv";
    write_profile_problems_csv(prof, problems);
    std::printf("wrote %s\n", problems.c_str());
    for (int a = 0; a < 2; ++a) {
      const std::string curve =
          dir + "/perf_profile_" + prof.algorithms[a] + ".csv";
      write_profile_curve_csv(prof, a, curve);
      std::printf("wrote %s\n", curve.c_str());
    }
  } else {
    const std::string path = dir + "/perf_profile.md";
    write_profile_markdown(prof, path);
    std::printf("wrote %s\n", path.c_str());
  }
  write_effective_config(cfg, dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"square-root likelihood scoring and conditioning experiments"};
  app.require_subcommand(1);
  FlagVals v;

  auto* score = app.add_subcommand(
      "score", "evaluate log-likelihood and its parameter gradient");
  auto* simulate =
      app.add_subcommand("simulate", "draw a measurement trajectory");
  auto* experiment =
      app.add_subcommand("experiment", "run a study and write report files");
  experiment->require_subcommand(1);
  auto* sweep = experiment->add_subcommand(
      "example1-sweep", "likelihood and score across a tau grid");
  auto* table1 = experiment->add_subcommand(
      "table1", "accuracy of both methods as collinearity grows");
  auto* profile = experiment->add_subcommand(
      "perf-profile", "performance profile over the delta problem set");

  for (CLI::App* sub : {score, simulate, sweep, table1, profile})
    add_common_flags(sub, v);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "E_CONFIG: %s\n", e.what());
    return 2;
  }

  const CLI::App* active = score->parsed()       ? score
                           : simulate->parsed()  ? simulate
                           : sweep->parsed()     ? sweep
                           : table1->parsed()    ? table1
                                                 : profile;
  try {
    RunConfig cfg = resolve_config(active, v);
    if (score->parsed()) return run_score(cfg);
    if (simulate->parsed()) return run_simulate(cfg);
    if (sweep->parsed()) return run_sweep_cmd(cfg);
    if (table1->parsed()) return run_table1_cmd(cfg);
    return run_profile_cmd(cfg);
  } catch (const srlg::ConfigError& e) {
    std::fprintf(stderr, "E_CONFIG: %s\n", e.what());
    return 2;
  } catch (const srlg::DimensionError& e) {
    std::fprintf(stderr, "E_CONFIG: %s\n", e.what());
    return 2;
  } catch (const srlg::ThetaDomainError& e) {
    std::fprintf(stderr, "E_CONFIG: %s\n", e.what());
    return 2;
  } catch (const srlg::NumericalError& e) {
    std::fprintf(stderr, "E_NUMERIC: %s (index %d)\n", e.what(), e.index);
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "E_CONFIG: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "E_INTERNAL: %s\n", e.what());
    return 1;
  }
}
