#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ihoc/horizon_limits.h"
#include "ihoc/relaxed.h"

namespace ihoc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFlagged = 2;

struct ProbeConfig {
  std::optional<double> t;  // default: half the first horizon
  double delta = 1e-3;
  std::optional<int> n_directions;  // default: state dimension
};

struct PenaltyConfig {
  std::vector<int> n_list;
  std::string reference = "limit";  // "limit" or "zero"
};

/// Parsed configuration document. Every command reads the same schema and
/// ignores the parts it does not use; unknown keys are rejected.
struct RunConfig {
  std::optional<std::string> problem_name;
  std::optional<ControlProblem> problem;
  std::vector<double> horizons;
  SolveOptions solve;
  double cauchy_tol = 1e-2;
  bool independent = false;
  bool relaxed = false;
  std::optional<std::vector<double>> sample_times;
  ProbeConfig probe;
  std::optional<PenaltyConfig> penalty;
  std::vector<std::string> bench_problems;
  unsigned seed = 0;
};

/// Throws ConfigError with the offending key path.
RunConfig ParseConfig(const std::string& json_text);
RunConfig LoadConfig(const std::filesystem::path& path);

/// Plain numeric table: header plus rows of doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Shortest text that reads back to the same double ("%.17g").
std::string FormatDouble(double v);

/// Writes via a temporary file in the same directory, then renames.
void WriteTextAtomic(const std::filesystem::path& path, const std::string& text);
void WriteCsv(const std::filesystem::path& path, const CsvTable& table);
CsvTable ReadCsv(const std::filesystem::path& path);

/// One row per grid node: t, x, u, psi, H, gap. The last node repeats the
/// last cell's control.
CsvTable ExtremalTable(const ControlProblem& problem, const Extremal& extremal);

/// Same layout for a relaxed solve; u is the atom-weighted mean control and
/// H the weighted Hamiltonian.
CsvTable RelaxedTable(const ControlProblem& problem, const RelaxedSolve& solve);

/// Per horizon: tau, J_tau, terminal_psi_norm, cauchy_to_last, tail_psi_norm.
CsvTable SweepTable(const TruncationReport& report);

int CmdSolve(const RunConfig& config, const std::filesystem::path& out_dir);
int CmdSweep(const RunConfig& config, const std::filesystem::path& out_dir);
int CmdDiagnose(const RunConfig& config, const std::filesystem::path& out_dir);
int CmdBench(const RunConfig& config, const std::filesystem::path& out_dir);

/// Full command line entry point; never returns anything but 0, 1 or 2.
int Main(int argc, char** argv);

}  // namespace ihoc::cli
