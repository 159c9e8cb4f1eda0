#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include "reference.hpp"
#include "simulate.hpp"
#include "state_space.hpp"

namespace srlg {

// One row of the conditioning sweep: how both working-precision methods
// degrade against the reference as the measurement rows approach collinearity.
struct Table1Row {
  double delta = 0.0;
  double cond_re1 = 0.0;    // condition of the first innovation covariance,
                            // computed at reference precision; +inf if the
                            // exact matrix is singular
  bool singular_at_double = false;  // conditioning beyond 1/eps(double)
  bool oracle_failed = false;       // reference pass itself broke down
  ErrorReport report;
};

// Criterion values for both methods across a parameter grid, all computed on
// one shared dataset.
struct SweepMethodValue {
  double lf = std::numeric_limits<double>::quiet_NaN();
  double lg = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
};

struct SweepPoint {
  double tau = 0.0;
  SweepMethodValue square_root;
  SweepMethodValue conventional;
};

struct SweepConfig {
  double delta_t = 0.1;
  int N = 100;
  double tau_star = 5.0;  // parameter the dataset is simulated at
  std::uint64_t seed = 1;
};

struct SweepCurve {
  SweepConfig config;
  std::vector<SweepPoint> points;
};

struct ProfilePoint {
  double mu = 1.0;
  double phi = 0.0;
};

// Cumulative distribution of per-problem performance ratios: phi_a(mu) is the
// fraction of problems algorithm a solves within a factor mu of the best.
struct PerformanceProfile {
  std::vector<std::string> algorithms;
  std::vector<double> problems;                // delta per problem
  std::vector<std::vector<double>> measures;   // [algo][problem], NaN = failed
  std::vector<std::vector<double>> ratios;     // [algo][problem], inf = failed
  std::vector<std::vector<ProfilePoint>> curves;
  double mu_max = 1.0;
};

struct Table1Config {
  Matrix<double> z1{{1.0}, {1.0}};
};

namespace detail {

// Condition of the exactly-formed first innovation covariance, evaluated at
// reference precision so double-range saturation cannot hide the true value.
inline double reference_cond_re1(double delta, double theta) {
  auto mdl = evaluate(example3_model<OracleReal>(delta), {OracleReal(theta)});
  Matrix<OracleReal> re =
      mdl.H * mdl.Pi0 * mdl.H.transposed() + mdl.R;
  auto eig = symmetric_eigenvalues(re);
  std::sort(eig.begin(), eig.end());
  if (!(eig.front() > 0)) return std::numeric_limits<double>::infinity();
  return static_cast<double>(eig.back() / eig.front());
}

inline Table1Row table1_row(double delta, double theta,
                            const Table1Config& cfg) {
  Table1Row row;
  row.delta = delta;
  row.cond_re1 = reference_cond_re1(delta, theta);
  row.singular_at_double =
      !(row.cond_re1 < 1.0 / std::numeric_limits<double>::epsilon());
  try {
    row.report = error_report(
        evaluate(example3_model<double>(delta), {theta}),
        evaluate(example3_model<OracleReal>(delta), {OracleReal(theta)}),
        {cfg.z1});
  } catch (const NumericalError&) {
    row.oracle_failed = true;
  }
  return row;
}

}  // namespace detail

// Evaluates both methods' criterion and score over a parameter grid on one
// seeded dataset. Per-point numerical failures are recorded in the curve and
// the sweep continues.
inline SweepCurve run_example1_sweep(const std::vector<double>& tau_grid,
                                     const SweepConfig& cfg) {
  auto spec = example1_model<double>(cfg.delta_t);
  for (double tau : tau_grid)
    if (!(tau > 0))
      throw ThetaDomainError("sweep: tau grid must be positive");
  auto data =
      simulate(evaluate(spec, {cfg.tau_star}), cfg.N, cfg.seed).z;

  auto eval_point = [&spec, &data](double tau) {
    SweepPoint pt;
    pt.tau = tau;
    auto mdl = evaluate(spec, {tau});
    auto sq = sqrt_score(mdl, data);
    pt.square_root.failed = sq.failed;
    if (!sq.failed) {
      pt.square_root.lf = sq.loglik;
      pt.square_root.lg = sq.gradient[0];
    }
    auto kf = kf_score(mdl, data);
    pt.conventional.failed = kf.failed;
    if (!kf.failed) {
      pt.conventional.lf = kf.loglik;
      pt.conventional.lg = kf.gradient[0];
    }
    return pt;
  };

  std::vector<std::future<SweepPoint>> jobs;
  jobs.reserve(tau_grid.size());
  for (double tau : tau_grid)
    jobs.push_back(std::async(std::launch::async, eval_point, tau));

  SweepCurve curve;
  curve.config = cfg;
  curve.points.reserve(tau_grid.size());
  for (auto& job : jobs) curve.points.push_back(job.get());
  return curve;
}

// The conditioning sweep: one row per delta, assembled in input order.
inline std::vector<Table1Row> run_table1(const std::vector<double>& delta_list,
                                         double theta,
                                         const Table1Config& cfg) {
  for (double d : delta_list)
    if (!(d > 0)) throw ThetaDomainError("sweep: delta values must be positive");
  if (!(theta > 0)) throw ThetaDomainError("sweep: theta must be positive");

  std::vector<std::future<Table1Row>> jobs;
  jobs.reserve(delta_list.size());
  for (double d : delta_list)
    jobs.push_back(std::async(std::launch::async, [d, theta, &cfg] {
      return detail::table1_row(d, theta, cfg);
    }));
  std::vector<Table1Row> rows;
  rows.reserve(delta_list.size());
  for (auto& job : jobs) rows.push_back(job.get());
  return rows;
}

inline const std::vector<double>& default_table1_deltas() {
  static const std::vector<double> d{1e-2, 1e-4, 1e-6, 1e-8, 1e-9, 1e-10};
  return d;
}

inline const std::vector<double>& default_profile_deltas() {
  static const std::vector<double> d{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  return d;
}

// Fraction of problems the algorithm solved within a factor mu of the best.
inline double profile_phi(const PerformanceProfile& prof, int algo, double mu) {
  const auto& r = prof.ratios.at(algo);
  int within = 0;
  for (double v : r)
    if (v <= mu) ++within;
  return static_cast<double>(within) / static_cast<double>(r.size());
}

// Turns per-algorithm, per-problem error measures into ratios and step-point
// curves. A NaN measure marks a failed run and gets an infinite ratio, so it
// never counts as solved at any finite mu.
inline PerformanceProfile build_profile(
    std::vector<std::string> algorithms, std::vector<double> problems,
    std::vector<std::vector<double>> measures, double mu_max) {
  PerformanceProfile prof;
  prof.algorithms = std::move(algorithms);
  prof.problems = std::move(problems);
  prof.measures = std::move(measures);
  prof.mu_max = mu_max;
  const std::size_t na = prof.algorithms.size();
  if (prof.measures.size() != na)
    throw DimensionError("profile: one measure row per algorithm");
  for (const auto& row : prof.measures)
    if (row.size() != prof.problems.size())
      throw DimensionError("profile: one measure per problem");

  const double inf = std::numeric_limits<double>::infinity();
  prof.ratios.assign(na, std::vector<double>(prof.problems.size(), inf));
  for (std::size_t p = 0; p < prof.problems.size(); ++p) {
    double best = inf;
    for (std::size_t a = 0; a < na; ++a)
      if (std::isfinite(prof.measures[a][p]))
        best = std::min(best, prof.measures[a][p]);
    for (std::size_t a = 0; a < na; ++a) {
      const double t = prof.measures[a][p];
      if (!std::isfinite(t)) continue;
      // t == best covers the 0/0 tie; infinite best means nobody solved it.
      prof.ratios[a][p] = (t == best) ? 1.0 : t / best;
    }
  }

  for (std::size_t a = 0; a < na; ++a) {
    std::vector<double> finite;
    for (double r : prof.ratios[a])
      if (std::isfinite(r)) finite.push_back(r);
    std::sort(finite.begin(), finite.end());

    std::vector<ProfilePoint> curve;
    curve.push_back({1.0, profile_phi(prof, static_cast<int>(a), 1.0)});
    for (double r : finite)
      if (r > 1.0 && r != curve.back().mu)
        curve.push_back({r, profile_phi(prof, static_cast<int>(a), r)});
    if (curve.back().mu < mu_max)
      curve.push_back({mu_max, profile_phi(prof, static_cast<int>(a), mu_max)});
    prof.curves.push_back(std::move(curve));
  }
  return prof;
}

// Builds the ratio profile over the problem set. The per-problem measure is
// the score error against the reference.
inline PerformanceProfile run_performance_profile(
    const std::vector<double>& delta_list, double theta, double mu_max,
    const Table1Config& cfg) {
  std::vector<std::future<Table1Row>> jobs;
  jobs.reserve(delta_list.size());
  for (double d : delta_list)
    jobs.push_back(std::async(std::launch::async, [d, theta, &cfg] {
      return detail::table1_row(d, theta, cfg);
    }));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> t_sqrt, t_conv;
  for (auto& job : jobs) {
    Table1Row row = job.get();
    const bool oracle_ok = !row.oracle_failed;
    t_sqrt.push_back(oracle_ok && !row.report.square_root.failed
                         ? row.report.square_root.dLogLG
                         : nan);
    t_conv.push_back(oracle_ok && !row.report.conventional.failed
                         ? row.report.conventional.dLogLG
                         : nan);
  }
  return build_profile({"square_root", "conventional"}, delta_list,
                       {std::move(t_sqrt), std::move(t_conv)}, mu_max);
}

namespace detail {

// Full-precision decimal rendering: 17 significant digits round-trip binary64
// exactly. Failures render as the NaN literal.
inline std::string render(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_report(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report file: " + path);
  return out;
}

inline void render_method_cells(std::ofstream& out, const MethodErrors& e,
                                const char* sep) {
  out << sep << render(e.dP1) << sep << render(e.dP1_prime) << sep
      << render(e.dLogLF) << sep << render(e.dLogLG);
}

}  // namespace detail

inline void write_table1_csv(const std::vector<Table1Row>& rows,
                             const std::string& path) {
  auto out = detail::open_report(path);
  out << "delta,K_Re1,conv_dP1,conv_dP1_prime,conv_dLogLF,conv_dLogLG,"
         "sqrt_dP1,sqrt_dP1_prime,sqrt_dLogLF,sqrt_dLogLG\n";
  for (const auto& r : rows) {
    out << detail::render(r.delta) << "," << detail::render(r.cond_re1);
    detail::render_method_cells(out, r.report.conventional, ",");
    detail::render_method_cells(out, r.report.square_root, ",");
    out << "\n";
  }
}

inline void write_table1_markdown(const std::vector<Table1Row>& rows,
                                  const std::string& path) {
  auto out = detail::open_report(path);
  out << "| delta | K(Re1) | conv dP1 | conv dP1' | conv dLogLF | conv dLogLG "
         "| sqrt dP1 | sqrt dP1' | sqrt dLogLF | sqrt dLogLG |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << detail::render(r.delta) << " | "
        << detail::render(r.cond_re1);
    detail::render_method_cells(out, r.report.conventional, " | ");
    detail::render_method_cells(out, r.report.square_root, " | ");
    out << " |\n";
  }
}

inline void write_sweep_csv(const SweepCurve& curve, const std::string& path) {
  auto out = detail::open_report(path);
  out << "tau,sqrt_LogLF,sqrt_LogLG,conv_LogLF,conv_LogLG\n";
  for (const auto& pt : curve.points) {
    out << detail::render(pt.tau) << "," << detail::render(pt.square_root.lf)
        << "," << detail::render(pt.square_root.lg) << ","
        << detail::render(pt.conventional.lf) << ","
        << detail::render(pt.conventional.lg) << "\n";
  }
}

inline void write_sweep_markdown(const SweepCurve& curve,
                                 const std::string& path) {
  auto out = detail::open_report(path);
  out << "| tau | sqrt LogLF | sqrt LogLG | conv LogLF | conv LogLG |\n";
  out << "|---|---|---|---|---|\n";
  for (const auto& pt : curve.points) {
    out << "| " << detail::render(pt.tau) << " | "
        << detail::render(pt.square_root.lf) << " | "
        << detail::render(pt.square_root.lg) << " | "
        << detail::render(pt.conventional.lf) << " | "
        << detail::render(pt.conventional.lg) << " |\n";
  }
}

inline void write_profile_problems_csv(const PerformanceProfile& prof,
                                       const std::string& path) {
  auto out = detail::open_report(path);
  out << "delta,sqrt_dLogLG,conv_dLogLG,sqrt_ratio,conv_ratio\n";
  for (std::size_t p = 0; p < prof.problems.size(); ++p) {
    out << detail::render(prof.problems[p]) << ","
        << detail::render(prof.measures[0][p]) << ","
        << detail::render(prof.measures[1][p]) << ","
        << detail::render(prof.ratios[0][p]) << ","
        << detail::render(prof.ratios[1][p]) << "\n";
  }
}

// Step-function point list for one algorithm, two columns for plotting.
inline void write_profile_curve_csv(const PerformanceProfile& prof, int algo,
                                    const std::string& path) {
  auto out = detail::open_report(path);
  out << "mu,phi\n";
  for (const auto& pt : prof.curves.at(algo))
    out << detail::render(pt.mu) << "," << detail::render(pt.phi) << "\n";
}

inline void write_profile_markdown(const PerformanceProfile& prof,
                                   const std::string& path) {
  auto out = detail::open_report(path);
  out << "| delta | sqrt dLogLG | conv dLogLG | sqrt ratio | conv ratio |\n";
  out << "|---|---|---|---|---|\n";
  for (std::size_t p = 0; p < prof.problems.size(); ++p) {
    out << "| " << detail::render(prof.problems[p]) << " | "
        << detail::render(prof.measures[0][p]) << " | "
        << detail::render(prof.measures[1][p]) << " | "
        << detail::render(prof.ratios[0][p]) << " | "
        << detail::render(prof.ratios[1][p]) << " |\n";
  }
  for (int a = 0; a < 2; ++a) {
    out << "\n| mu (" << prof.algorithms[a] << ") | phi |\n|---|---|\n";
    for (const auto& pt : prof.curves.at(a))
      out << "| " << detail::render(pt.mu) << " | " << detail::render(pt.phi)
          << " |\n";
  }
}

}  // namespace srlg
