#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "atsp/commands.hpp"
#include "atsp/parallel.hpp"

namespace {

const std::map<std::string, atsp::FileFormat> kFormats = {
    {"mm", atsp::FileFormat::matrix_market}, {"csv", atsp::FileFormat::csv}, {"bin", atsp::FileFormat::binary}};
const std::map<std::string, atsp::Method> kMethods = {{"rand", atsp::Method::randomized},
                                                      {"det", atsp::Method::deterministic}};

struct Shared {
  atsp::RunConfig config;
  atsp::IoPaths io;
  double r = 0.0;
  double delta_sigma = 0.0;
};

void add_run_flags(CLI::App* cmd, Shared& s) {
  cmd->add_option("--method", s.config.method, "rand | det")
      ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
  cmd->add_option("--eps", s.config.eps, "target spectral factor");
  cmd->add_option("--delta", s.config.delta, "failure probability");
  cmd->add_option("--eps-sigma", s.config.eps_sigma, "leverage approximation factor");
  cmd->add_option("--delta-sigma", s.delta_sigma, "leverage failure probability (default delta/2)");
  cmd->add_option("--r", s.r, "radius bound on ||XX^T||_inf");
  cmd->add_option("--seed", s.config.seed, "master seed");
  cmd->add_option("--c-chernoff", s.config.c_chernoff, "sample-count constant");
  cmd->add_option("--c-bss", s.config.c_bss, "barrier step constant");
  cmd->add_flag("!--no-validate-radius", s.config.validate_radius, "skip the ||XX^T||_inf check");
  cmd->add_option("--trials", s.config.trials, "repeat with derived seeds and summarize");
}

void add_input(CLI::App* cmd, Shared& s) {
  cmd->add_option("-i,--input", s.io.input, "input matrix")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", s.io.format, "mm | csv | bin")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
  cmd->add_option("--report", s.io.report, "write the JSON report here instead of stdout");
}

void finish(CLI::App* cmd, Shared& s) {
  if (cmd->count("--r") > 0) s.config.r = s.r;
  if (cmd->count("--delta-sigma") > 0) s.config.delta_sigma = s.delta_sigma;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention sparsification: reduce X (n x d) to Y (n x m) preserving softmax attention"};
  app.require_subcommand(1);
  app.fallthrough();

  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (env ATSP_THREADS)")->envname("ATSP_THREADS");

  atsp::GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a random instance with ||XX^T||_inf = r");
  gen_cmd->add_option("--n", gen.n, "rows")->required();
  gen_cmd->add_option("--d", gen.d, "columns")->required();
  gen_cmd->add_option("--r", gen.r, "target radius");
  gen_cmd->add_option("--density", gen.density, "fraction of nonzero entries");
  gen_cmd->add_option("--seed", gen.seed, "seed");
  gen_cmd->add_option("--format", gen.format, "mm | csv | bin")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
  gen_cmd->add_option("-o,--output", gen.output, "output file")->required();

  Shared sp;
  auto* sparsify_cmd = app.add_subcommand("sparsify", "compute Y and report attention error");
  add_run_flags(sparsify_cmd, sp);
  add_input(sparsify_cmd, sp);
  sparsify_cmd->add_option("-o,--output", sp.io.output, "Y destination (binary)")->required();

  Shared vf;
  auto* verify_cmd = app.add_subcommand("verify", "certify attention bounds for a given Y");
  add_run_flags(verify_cmd, vf);
  add_input(verify_cmd, vf);
  verify_cmd->add_option("--reduced", vf.io.reduced, "Y (binary)")->required()->check(CLI::ExistingFile);

  std::filesystem::path sweep, bench_csv;
  auto* bench_cmd = app.add_subcommand("bench", "run a parameter sweep into CSV");
  bench_cmd->add_option("--sweep", sweep, "sweep JSON")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("-o,--output", bench_csv, "CSV destination")->required();

  Shared lv;
  bool exact = false;
  auto* leverage_cmd = app.add_subcommand("leverage", "dump per-column leverage scores as CSV");
  add_run_flags(leverage_cmd, lv);
  add_input(leverage_cmd, lv);
  leverage_cmd->add_option("-o,--output", lv.io.output, "CSV destination")->required();
  leverage_cmd->add_flag("--exact", exact, "use the eigendecomposition oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? atsp::kExitOk : atsp::kExitError;
  }

  if (threads > 0) atsp::set_num_threads(threads);

  if (*gen_cmd) return atsp::run_gen(gen, std::cout, std::cerr);
  if (*sparsify_cmd) {
    finish(sparsify_cmd, sp);
    return atsp::run_sparsify(sp.config, sp.io, std::cout, std::cerr);
  }
  if (*verify_cmd) {
    finish(verify_cmd, vf);
    return atsp::run_verify(vf.config, vf.io, std::cout, std::cerr);
  }
  if (*bench_cmd) return atsp::run_bench(sweep, bench_csv, std::cout, std::cerr);
  finish(leverage_cmd, lv);
  return atsp::run_leverage(lv.config, lv.io, exact, std::cout, std::cerr);
}
