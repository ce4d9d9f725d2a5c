#include "cli.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "ihoc/benchmarks.h"

namespace ihoc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void RequireKeys(const json& obj, const std::string& where,
                 const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double Number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

int Integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<int>();
}

Vector VectorOf(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) {
    throw ConfigError(where + ": expected a non-empty array of at most " +
                      std::to_string(kMaxDim) + " numbers");
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = Number(v[i], where + "[" + std::to_string(i) + "]");
  }
  return out;
}

std::vector<double> Doubles(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(Number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Matrix MatrixOf(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected an array of rows");
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < v.size(); ++i) {
    rows.push_back(VectorOf(v[i], where + "[" + std::to_string(i) + "]"));
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != out.cols()) throw ConfigError(where + ": ragged rows");
    out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return out;
}

ControlSet ControlSetOf(const json& v, const std::string& where) {
  RequireKeys(v, where, {"box", "finite"});
  if (v.contains("box") == v.contains("finite")) {
    throw ConfigError(where + ": give exactly one of 'box' or 'finite'");
  }
  if (v.contains("box")) {
    const json& box = v["box"];
    RequireKeys(box, where + ".box", {"lower", "upper", "grid"});
    for (const char* key : {"lower", "upper", "grid"}) {
      if (!box.contains(key)) throw ConfigError(where + ".box: missing '" + key + "'");
    }
    const int grid = Integer(box["grid"], where + ".box.grid");
    if (grid < 1) throw ConfigError(where + ".box.grid: must be positive");
    ControlSet set = ControlSet::Box(VectorOf(box["lower"], where + ".box.lower"),
                                     VectorOf(box["upper"], where + ".box.upper"), grid);
    const auto problems = set.InvariantViolations();
    if (!problems.empty()) throw ConfigError(where + ": " + problems.front());
    return set;
  }
  const json& finite = v["finite"];
  if (!finite.is_array() || finite.empty()) {
    throw ConfigError(where + ".finite: expected a non-empty array of points");
  }
  std::vector<Vector> points;
  for (std::size_t i = 0; i < finite.size(); ++i) {
    points.push_back(VectorOf(finite[i], where + ".finite[" + std::to_string(i) + "]"));
  }
  try {
    return ControlSet::Finite(std::move(points));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

ControlProblem LinearQuadraticOf(const json& v, const std::string& where) {
  RequireKeys(v, where, {"a", "b", "c", "q", "r", "rho", "x0", "control_set", "label"});
  for (const char* key : {"a", "b", "x0", "control_set"}) {
    if (!v.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  }
  LinearQuadraticSpec spec;
  spec.x0 = VectorOf(v["x0"], where + ".x0");
  spec.control_set = ControlSetOf(v["control_set"], where + ".control_set");
  const Eigen::Index m = spec.x0.size();
  const Eigen::Index p = spec.control_set.dim();
  spec.a = MatrixOf(v["a"], where + ".a");
  spec.b = MatrixOf(v["b"], where + ".b");
  spec.c = v.contains("c") ? VectorOf(v["c"], where + ".c") : Vector(Vector::Zero(m));
  spec.q = v.contains("q") ? MatrixOf(v["q"], where + ".q") : Matrix(Matrix::Zero(m, m));
  spec.r = v.contains("r") ? MatrixOf(v["r"], where + ".r") : Matrix(Matrix::Zero(p, p));
  if (v.contains("rho")) spec.rho = Number(v["rho"], where + ".rho");
  if (v.contains("label")) {
    if (!v["label"].is_string()) throw ConfigError(where + ".label: expected a string");
    spec.label = v["label"].get<std::string>();
  }
  return LinearQuadratic(spec);
}

void ParseProblem(const json& v, RunConfig& config) {
  if (v.is_string()) {
    config.problem_name = v.get<std::string>();
    config.problem = BuiltinProblem(*config.problem_name);
    return;
  }
  RequireKeys(v, "problem", {"builtin", "x0", "control_grid", "linear_quadratic"});
  if (v.contains("builtin") == v.contains("linear_quadratic")) {
    throw ConfigError("problem: give exactly one of 'builtin' or 'linear_quadratic'");
  }
  if (v.contains("linear_quadratic")) {
    if (v.contains("x0") || v.contains("control_grid")) {
      throw ConfigError("problem: 'x0' and 'control_grid' apply to builtin problems only");
    }
    config.problem = LinearQuadraticOf(v["linear_quadratic"], "problem.linear_quadratic");
    config.problem_name = config.problem->label;
    return;
  }
  if (!v["builtin"].is_string()) throw ConfigError("problem.builtin: expected a string");
  config.problem_name = v["builtin"].get<std::string>();
  ControlProblem p = BuiltinProblem(*config.problem_name);
  if (v.contains("x0")) {
    p.x0 = VectorOf(v["x0"], "problem.x0");
    if (p.x0.size() != p.state_dim) throw ConfigError("problem.x0: wrong dimension");
  }
  if (v.contains("control_grid")) {
    const int grid = Integer(v["control_grid"], "problem.control_grid");
    if (grid < 1) throw ConfigError("problem.control_grid: must be positive");
    if (!p.control_set.is_box()) {
      throw ConfigError("problem.control_grid: control set is not a box");
    }
    p.control_set = p.control_set.WithGrid(grid);
  }
  config.problem = std::move(p);
}

void ParseSolver(const json& v, SolveOptions& opts) {
  RequireKeys(v, "solver", {"max_iters", "damping", "tol_gap", "grid_steps_per_unit_time"});
  if (v.contains("max_iters")) opts.max_iters = Integer(v["max_iters"], "solver.max_iters");
  if (v.contains("damping")) opts.damping = Number(v["damping"], "solver.damping");
  if (v.contains("tol_gap")) opts.tol_gap = Number(v["tol_gap"], "solver.tol_gap");
  if (v.contains("grid_steps_per_unit_time")) {
    opts.grid_steps_per_unit_time =
        Integer(v["grid_steps_per_unit_time"], "solver.grid_steps_per_unit_time");
  }
  if (opts.max_iters < 1) throw ConfigError("solver.max_iters: must be >= 1");
  if (!(opts.damping > 0 && opts.damping <= 1)) throw ConfigError("solver.damping: must lie in (0, 1]");
  if (opts.tol_gap && !(*opts.tol_gap >= 0)) throw ConfigError("solver.tol_gap: must be >= 0");
  if (opts.grid_steps_per_unit_time < 1) {
    throw ConfigError("solver.grid_steps_per_unit_time: must be >= 1");
  }
}

bool Boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
  return v.get<bool>();
}

const ControlProblem& RequireProblem(const RunConfig& config) {
  if (!config.problem) throw ConfigError("config: 'problem' is required for this command");
  return *config.problem;
}

HorizonSchedule RequireSchedule(const RunConfig& config) {
  if (config.horizons.size() < 2) {
    throw ConfigError("horizons: a sweep needs at least two horizons");
  }
  return HorizonSchedule(config.horizons);
}

double RequireHorizon(const RunConfig& config) {
  if (config.horizons.empty()) throw ConfigError("horizons: at least one horizon is required");
  return config.horizons.back();
}

SweepOptions SweepOptionsOf(const RunConfig& config) {
  SweepOptions opts;
  opts.solve = config.solve;
  opts.cauchy_tol = config.cauchy_tol;
  opts.independent = config.independent;
  return opts;
}

std::string Join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

void LogDiagnostics(const ControlProblem& problem) {
  for (const auto& d : ValidateProblem(problem)) {
    spdlog::warn("validate_problem: {} at {} (magnitude {})", d.check, d.location, d.magnitude);
  }
}

void WriteLimitOrLast(const fs::path& out_dir, const ControlProblem& problem,
                      const TruncationReport& report) {
  WriteCsv(out_dir / "limit_extremal.csv",
           ExtremalTable(problem, report.limit ? *report.limit : report.last()));
}

}  // namespace

RunConfig ParseConfig(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RequireKeys(doc, "config",
              {"problem", "horizons", "solver", "cauchy_tol", "independent", "relaxed",
               "sample_times", "probe", "penalty", "bench", "seed"});
  RunConfig config;
  if (doc.contains("problem")) ParseProblem(doc["problem"], config);
  if (doc.contains("horizons")) {
    config.horizons = Doubles(doc["horizons"], "horizons");
    for (std::size_t i = 0; i < config.horizons.size(); ++i) {
      if (!(config.horizons[i] > 0) || (i && !(config.horizons[i] > config.horizons[i - 1]))) {
        throw ConfigError("horizons: must be positive and strictly increasing");
      }
    }
  }
  if (doc.contains("solver")) ParseSolver(doc["solver"], config.solve);
  if (doc.contains("cauchy_tol")) config.cauchy_tol = Number(doc["cauchy_tol"], "cauchy_tol");
  if (doc.contains("independent")) config.independent = Boolean(doc["independent"], "independent");
  if (doc.contains("relaxed")) config.relaxed = Boolean(doc["relaxed"], "relaxed");
  if (doc.contains("sample_times")) {
    config.sample_times = Doubles(doc["sample_times"], "sample_times");
  }
  if (doc.contains("probe")) {
    const json& probe = doc["probe"];
    RequireKeys(probe, "probe", {"t", "delta", "n_directions"});
    if (probe.contains("t")) config.probe.t = Number(probe["t"], "probe.t");
    if (probe.contains("delta")) config.probe.delta = Number(probe["delta"], "probe.delta");
    if (probe.contains("n_directions")) {
      config.probe.n_directions = Integer(probe["n_directions"], "probe.n_directions");
      if (*config.probe.n_directions < 1) throw ConfigError("probe.n_directions: must be >= 1");
    }
    if (!(config.probe.delta >= 0)) throw ConfigError("probe.delta: must be >= 0");
  }
  if (doc.contains("penalty")) {
    const json& penalty = doc["penalty"];
    RequireKeys(penalty, "penalty", {"n_list", "reference"});
    PenaltyConfig pc;
    if (!penalty.contains("n_list") || !penalty["n_list"].is_array() || penalty["n_list"].empty()) {
      throw ConfigError("penalty.n_list: expected a non-empty array of integers");
    }
    for (const auto& n : penalty["n_list"]) {
      pc.n_list.push_back(Integer(n, "penalty.n_list"));
      if (pc.n_list.back() < 1) throw ConfigError("penalty.n_list: entries must be >= 1");
    }
    if (penalty.contains("reference")) {
      if (!penalty["reference"].is_string()) throw ConfigError("penalty.reference: expected a string");
      pc.reference = penalty["reference"].get<std::string>();
      if (pc.reference != "limit" && pc.reference != "zero") {
        throw ConfigError("penalty.reference: expected 'limit' or 'zero'");
      }
    }
    config.penalty = std::move(pc);
  }
  if (doc.contains("bench")) {
    const json& bench = doc["bench"];
    RequireKeys(bench, "bench", {"problems"});
    if (bench.contains("problems")) {
      if (!bench["problems"].is_array()) throw ConfigError("bench.problems: expected an array");
      for (const auto& name : bench["problems"]) {
        if (!name.is_string()) throw ConfigError("bench.problems: expected names");
        BuiltinProblem(name.get<std::string>());
        config.bench_problems.push_back(name.get<std::string>());
      }
    }
  }
  if (doc.contains("seed")) {
    const int seed = Integer(doc["seed"], "seed");
    if (seed < 0) throw ConfigError("seed: must be >= 0");
    config.seed = static_cast<unsigned>(seed);
  }
  return config;
}

RunConfig LoadConfig(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str());
}

std::string FormatDouble(double v) {
  if (v == 0) v = 0.0;  // no "-0" in output
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void WriteTextAtomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void WriteCsv(const fs::path& path, const CsvTable& table) {
  std::string text = Join(table.header);
  std::vector<std::string> cells;
  for (const auto& row : table.rows) {
    cells.clear();
    for (double v : row) cells.push_back(FormatDouble(v));
    text += Join(cells);
  }
  WriteTextAtomic(path, text);
}

CsvTable ReadCsv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw Error(path.string() + ": missing header");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw Error(path.string() + ": non-numeric cell '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.header.size()) throw Error(path.string() + ": ragged row");
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

std::vector<std::string> TraceHeader(int m, int p) {
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= m; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= p; ++i) header.push_back("u" + std::to_string(i));
  for (int i = 1; i <= m; ++i) header.push_back("psi" + std::to_string(i));
  header.push_back("H");
  header.push_back("gap");
  return header;
}

std::vector<double> TraceRow(double t, const Vector& x, const Vector& u, const Vector& psi,
                             double h, double gap) {
  std::vector<double> row{t};
  for (Eigen::Index i = 0; i < x.size(); ++i) row.push_back(x[i]);
  for (Eigen::Index i = 0; i < u.size(); ++i) row.push_back(u[i]);
  for (Eigen::Index i = 0; i < psi.size(); ++i) row.push_back(psi[i]);
  row.push_back(h);
  row.push_back(gap);
  return row;
}

}  // namespace

CsvTable ExtremalTable(const ControlProblem& problem, const Extremal& e) {
  CsvTable table{TraceHeader(problem.state_dim, problem.control_dim), {}};
  const TimeGrid& grid = e.x.grid();
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const double t = grid.node(k);
    const Vector& u = e.u[std::min(k, grid.n_steps() - 1)];
    const double h = EvalHamiltonian(problem, e.x[k], t, u, e.lambda, e.psi[k]);
    const ArgmaxResult best = ArgmaxHamiltonian(problem, e.x[k], t, e.lambda, e.psi[k]);
    table.rows.push_back(TraceRow(t, e.x[k], u, e.psi[k], h, std::max(0.0, best.value - h)));
  }
  return table;
}

CsvTable RelaxedTable(const ControlProblem& problem, const RelaxedSolve& s) {
  CsvTable table{TraceHeader(problem.state_dim, problem.control_dim), {}};
  const TimeGrid& grid = s.x.grid();
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const double t = grid.node(k);
    const auto& atoms = s.control[std::min(k, grid.n_steps() - 1)];
    Vector mean = Vector::Zero(problem.control_dim);
    double h = 0;
    for (const auto& a : atoms) {
      mean += a.w * a.u;
      h += a.w * EvalHamiltonian(problem, s.x[k], t, a.u, s.lambda, s.psi[k]);
    }
    const ArgmaxResult best = ArgmaxHamiltonian(problem, s.x[k], t, s.lambda, s.psi[k]);
    table.rows.push_back(TraceRow(t, s.x[k], mean, s.psi[k], h, std::max(0.0, best.value - h)));
  }
  return table;
}

CsvTable SweepTable(const TruncationReport& report) {
  CsvTable table{{"tau", "J_tau", "terminal_psi_norm", "cauchy_to_last", "tail_psi_norm"}, {}};
  const std::size_t n = report.per_horizon.size();
  const Extremal& last = report.last();
  for (std::size_t i = 0; i < n; ++i) {
    const HorizonSolve& h = report.per_horizon[i];
    table.rows.push_back({h.horizon, h.extremal.payoff, h.extremal.residual.terminal_psi_norm,
                          report.cauchy_table[i][n - 1], last.psi.Sample(h.horizon).norm()});
  }
  return table;
}

int CmdSolve(const RunConfig& config, const fs::path& out_dir) {
  const ControlProblem& problem = RequireProblem(config);
  const double horizon = RequireHorizon(config);
  LogDiagnostics(problem);
  fs::create_directories(out_dir);
  if (config.relaxed) {
    const RelaxedSolve s = SolveRelaxed(problem, horizon, config.solve);
    WriteCsv(out_dir / "extremal.csv", RelaxedTable(problem, s));
    spdlog::info("relaxed solve T={} J={} gap={} iterations={} converged={}", horizon,
                 s.payoff, s.max_gap, s.iterations, s.converged);
    return s.converged ? kExitOk : kExitFlagged;
  }
  const Extremal e = SolveFreeEndpoint(problem, horizon, config.solve);
  WriteCsv(out_dir / "extremal.csv", ExtremalTable(problem, e));
  spdlog::info("solve T={} J={} gap={} iterations={} converged={}", horizon, e.payoff,
               e.residual.max_gap, e.iterations, e.converged);
  return e.converged ? kExitOk : kExitFlagged;
}

int CmdSweep(const RunConfig& config, const fs::path& out_dir) {
  const ControlProblem& problem = RequireProblem(config);
  const HorizonSchedule schedule = RequireSchedule(config);
  const SweepOptions opts = SweepOptionsOf(config);
  LogDiagnostics(problem);
  fs::create_directories(out_dir);
  TruncationReport report;
  try {
    report = RunTruncationSweep(problem, schedule, opts);
  } catch (const SweepAbortedError& e) {
    if (!e.partial().per_horizon.empty()) WriteCsv(out_dir / "sweep.csv", SweepTable(e.partial()));
    throw;
  }
  WriteCsv(out_dir / "sweep.csv", SweepTable(report));
  WriteLimitOrLast(out_dir, problem, report);
  bool ok = report.limit.has_value();
  spdlog::info("sweep over {} horizons: limit {}", schedule.size(),
               ok ? "certified" : "not certified");

  if (config.penalty) {
    const ControlSignal& limit_u = report.last().u;
    const ControlSignal u_ref =
        config.penalty->reference == "zero"
            ? ControlSignal::Constant(limit_u.grid(), Vector::Zero(problem.control_dim))
            : limit_u;
    const auto reports =
        RunPenalizedSweep(problem, u_ref, config.penalty->n_list, schedule, opts);
    CsvTable table{{"n", "tau", "J_tau", "terminal_psi_norm", "cauchy_to_last",
                    "control_distance_to_unpenalized"},
                   {}};
    for (std::size_t j = 0; j < reports.size(); ++j) {
      const TruncationReport& r = reports[j];
      const std::size_t n = r.per_horizon.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Extremal& e = r.per_horizon[i].extremal;
        table.rows.push_back({static_cast<double>(config.penalty->n_list[j]),
                              r.per_horizon[i].horizon, e.payoff,
                              e.residual.terminal_psi_norm, r.cauchy_table[i][n - 1],
                              ControlDistance(e.u, report.per_horizon[i].extremal.u)});
      }
      ok = ok && r.limit.has_value();
    }
    WriteCsv(out_dir / "penalized.csv", table);
  }
  return ok ? kExitOk : kExitFlagged;
}

int CmdDiagnose(const RunConfig& config, const fs::path& out_dir) {
  const ControlProblem& problem = RequireProblem(config);
  const HorizonSchedule schedule = RequireSchedule(config);
  LogDiagnostics(problem);
  const TruncationReport report = RunTruncationSweep(problem, schedule, SweepOptionsOf(config));
  const Extremal& e = report.limit ? *report.limit : report.last();
  const std::vector<double> times = config.sample_times ? *config.sample_times : report.sample_times;
  for (double t : times) {
    if (t < 0 || t > e.horizon) {
      throw RangeError("sample time " + FormatDouble(t) + " outside [0, " +
                       FormatDouble(e.horizon) + "]");
    }
  }
  const TransversalityReport tr = TransversalityDiagnostics(e, times);
  const double probe_t = config.probe.t ? *config.probe.t : 0.5 * schedule.front();
  const int n_dirs = config.probe.n_directions.value_or(problem.state_dim);
  const StabilityProbeReport probe =
      ProbeAdjointStability(problem, e, probe_t, config.probe.delta, n_dirs, config.seed);

  fs::create_directories(out_dir);
  CsvTable transversality{{"t", "psi_norm", "product_residual"}, {}};
  for (std::size_t i = 0; i < times.size(); ++i) {
    transversality.rows.push_back({times[i], tr.psi_norms[i], tr.product_residuals[i]});
  }
  WriteCsv(out_dir / "transversality.csv", transversality);
  CsvTable stability{{"direction", "deviation"}, {}};
  for (std::size_t i = 0; i < probe.deviations.size(); ++i) {
    stability.rows.push_back({static_cast<double>(i), probe.deviations[i]});
  }
  WriteCsv(out_dir / "stability.csv", stability);
  spdlog::info("stability probe at t={} delta={}: modulus {}", probe.probe_time, probe.delta,
               probe.modulus);
  return report.limit ? kExitOk : kExitFlagged;
}

int CmdBench(const RunConfig& config, const fs::path& out_dir) {
  std::vector<std::string> names = config.bench_problems;
  if (names.empty()) names = BuiltinProblemNames();
  std::string text = Join({"problem", "metric", "solver", "oracle", "error", "tolerance",
                           "converged", "pass"});
  bool all_pass = true;
  const auto row = [&](const std::string& problem, const std::string& metric, double solver,
                       double oracle, double error, double tol, bool converged) {
    const bool pass = converged && error <= tol;
    all_pass = all_pass && pass;
    text += Join({problem, metric, FormatDouble(solver), FormatDouble(oracle),
                  FormatDouble(error), FormatDouble(tol), converged ? "1" : "0",
                  pass ? "1" : "0"});
    spdlog::info("bench {} {}: solver {} oracle {} error {} (tol {}) {}", problem, metric,
                 solver, oracle, error, tol, pass ? "pass" : "FAIL");
  };
  for (const auto& name : names) {
    if (name == "lqr1d") {
      const ControlProblem problem = Lqr1d(1.0, 1.0, 1001);
      const LqrOracle oracle = OracleLqr(1.0, 1.0);
      const Extremal e = SolveFreeEndpoint(problem, 20.0);
      double psi_err = 0;
      for (std::size_t k = 0; k < e.psi.grid().node_count(); ++k) {
        const double t = e.psi.grid().node(k);
        if (t <= 10.0) psi_err = std::max(psi_err, std::abs(e.psi[k][0] - oracle.psi(t)));
      }
      row(name, "J", e.payoff, oracle.j_star, std::abs(e.payoff - oracle.j_star), 1e-3,
          e.converged);
      row(name, "psi_sup_0_10", psi_err, 0.0, psi_err, 5e-3, e.converged);
    } else if (name == "absvalue") {
      const RelaxedSolve s = SolveRelaxed(AbsValue(), 10.0);
      const double oracle = -std::exp(-1.0);
      row(name, "J_relaxed", s.payoff, oracle, std::abs(s.payoff - oracle), 1e-2, s.converged);
    } else if (name == "ramsey") {
      SolveOptions opts;
      opts.grid_steps_per_unit_time = 10;
      const Extremal e = SolveFreeEndpoint(Ramsey(), 100.0, opts);
      const double x_mid = e.x.Sample(50.0)[0];
      const double x_star = RamseySteadyState();
      row(name, "x_at_half_horizon", x_mid, x_star, std::abs(x_mid - x_star) / x_star, 0.05,
          e.converged);
    }
  }
  fs::create_directories(out_dir);
  WriteTextAtomic(out_dir / "bench.csv", text);
  return all_pass ? kExitOk : kExitFlagged;
}

int Main(int argc, char** argv) {
  auto logger = spdlog::get("ihoc");
  if (!logger) {
    logger = spdlog::stderr_logger_mt("ihoc");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("IHOC_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }

  CLI::App app{"Infinite-horizon optimal control: truncation sweeps and diagnostics"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  const auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON configuration")->required();
    sub->add_option("--out", out_dir, "Output directory")->required();
    return sub;
  };
  CLI::App* solve = add("solve", "Free-endpoint extremal at the largest horizon");
  CLI::App* sweep = add("sweep", "Truncation sweep and limit certification");
  CLI::App* diagnose = add("diagnose", "Transversality and costate stability diagnostics");
  CLI::App* bench = add("bench", "Builtin problems against closed-form oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    const RunConfig config = LoadConfig(config_path);
    if (solve->parsed()) return CmdSolve(config, out_dir);
    if (sweep->parsed()) return CmdSweep(config, out_dir);
    if (diagnose->parsed()) return CmdDiagnose(config, out_dir);
    if (bench->parsed()) return CmdBench(config, out_dir);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitError;
}

}  // namespace ihoc::cli
