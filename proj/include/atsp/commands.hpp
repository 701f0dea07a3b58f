#pragma once

// Subcommand implementations behind the `atsp` executable. Each returns a
// process exit code:
//   0  success (verify: every applicable bound holds)
//   1  usage, parse or internal error
//   2  radius validation failed
//   3  verify: an applicable attention bound is violated

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "atsp/attention.hpp"
#include "atsp/io.hpp"
#include "atsp/sketch.hpp"
#include "atsp/sparsifier.hpp"

namespace atsp {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitRadius = 2, kExitBound = 3 };

inline constexpr int kReportSchema = 1;

struct RunConfig {
  Method method = Method::randomized;
  double eps = 0.5;
  double delta = 0.05;
  double eps_sigma = 0.5;
  std::optional<double> delta_sigma;  // default delta / 2
  std::optional<double> r;
  std::uint64_t seed = 0;
  double c_chernoff = 4.0;
  double c_bss = 9.0;
  double c_s1 = 8.0;
  double c_s2 = 32.0;
  SketchKind jl_kind = SketchKind::gaussian;
  bool validate_radius = true;
  std::size_t threads = 1;
  std::size_t trials = 1;

  /// Throws ContractViolation when a parameter leaves its admissible range.
  void validate() const;
  RandomizedConfig randomized() const;
  BssConfig bss() const;
};

nlohmann::json to_json(const RunConfig& c);
nlohmann::json to_json(const AttentionErrorReport& r);

/// Runs the configured pipeline and attention verification on one input.
struct PipelineRun {
  ReducedMatrix reduced;
  AttentionErrorReport attention;
  StageTimings stages;
  double attention_ms = 0.0;
  double verify_ms = 0.0;
};

PipelineRun run_pipeline(const InputMatrix& x, const RunConfig& config, std::uint64_t seed);

struct GenOptions {
  std::size_t n = 0;
  std::size_t d = 0;
  double r = 0.05;
  double density = 1.0;
  std::uint64_t seed = 0;
  FileFormat format = FileFormat::binary;
  std::filesystem::path output;
};

int run_gen(const GenOptions& opt, std::ostream& out, std::ostream& err);

struct IoPaths {
  std::filesystem::path input;
  FileFormat format = FileFormat::binary;
  std::filesystem::path output;  // sparsify: Y (binary); leverage: scores csv
  std::filesystem::path reduced;  // verify: Y (binary)
  std::optional<std::filesystem::path> report;  // JSON destination, stdout otherwise
};

int run_sparsify(const RunConfig& config, const IoPaths& io, std::ostream& out, std::ostream& err);
int run_verify(const RunConfig& config, const IoPaths& io, std::ostream& out, std::ostream& err);
int run_leverage(const RunConfig& config, const IoPaths& io, bool exact, std::ostream& out, std::ostream& err);

struct AffineFit {
  std::string method;
  std::size_t n = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of y = a x + b with its coefficient of determination.
AffineFit fit_affine(const std::vector<double>& x, const std::vector<double>& y);

struct BenchSummary {
  std::size_t rows = 0;
  std::size_t failures = 0;
  std::vector<AffineFit> fits;  // total time against nnz, per (method, n)
};

/// Sweep file: JSON object whose list-valued keys form a grid, e.g.
///   {"methods": ["rand", "det"], "n": [32], "d": [4096, 8192],
///    "density": [1.0], "r": 0.05, "eps": 0.5, "delta": 0.05,
///    "seed": 1, "repeats": 3}
BenchSummary run_bench_sweep(const nlohmann::json& sweep, const std::filesystem::path& csv_path, std::ostream& log);
int run_bench(const std::filesystem::path& sweep_path, const std::filesystem::path& csv_path, std::ostream& out,
              std::ostream& err);

}  // namespace atsp
