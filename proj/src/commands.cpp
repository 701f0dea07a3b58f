#include "atsp/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "atsp/leverage.hpp"
#include "atsp/matcore.hpp"
#include "atsp/rng.hpp"

namespace atsp {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit_report(const json& report, const std::optional<std::filesystem::path>& path, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (path) {
    std::ofstream os(*path, std::ios::trunc);
    if (!os) throw ContractViolation("cannot write report '" + path->string() + "'");
    os << text;
  } else {
    out << text;
  }
}

json input_stats(const InputMatrix& x, const IoPaths& io) {
  return {{"path", io.input.string()},
          {"format", to_string(io.format)},
          {"n", x.n()},
          {"d", x.d()},
          {"nnz", nnz_of(x.data)},
          {"r_measured", inf_norm(gram(x.data))}};
}

std::size_t count_nonzero(const std::vector<double>& w) {
  return static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v != 0.0; }));
}

// Shared error handling: maps exceptions onto the documented exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const RadiusViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitRadius;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace

void RunConfig::validate() const {
  require(eps > 0.0 && eps < 1.0, "--eps must lie in (0, 1)");
  require(delta > 0.0 && delta < 0.1, "--delta must lie in (0, 0.1)");
  require(eps_sigma > 0.0 && eps_sigma < 1.0, "--eps-sigma must lie in (0, 1)");
  if (delta_sigma) require(*delta_sigma > 0.0 && *delta_sigma <= 0.1, "--delta-sigma must lie in (0, 0.1]");
  if (r) require(*r > 0.0 && *r < 0.1, "--r must lie in (0, 0.1)");
  require(c_chernoff > 0.0 && c_bss > 0.0 && c_s1 > 0.0 && c_s2 > 0.0, "constants must be positive");
  require(threads >= 1, "--threads must be positive");
  require(trials >= 1, "--trials must be positive");
}

RandomizedConfig RunConfig::randomized() const {
  RandomizedConfig rc;
  rc.eps_sigma = eps_sigma;
  rc.delta_sigma = delta_sigma;
  rc.c_chernoff = c_chernoff;
  rc.leverage.c_s1 = c_s1;
  rc.leverage.c_s2 = c_s2;
  rc.leverage.jl_kind = jl_kind;
  return rc;
}

BssConfig RunConfig::bss() const {
  BssConfig bc;
  bc.c_bss = c_bss;
  return bc;
}

json to_json(const RunConfig& c) {
  return {{"method", to_string(c.method)},
          {"eps", c.eps},
          {"delta", c.delta},
          {"eps_sigma", c.eps_sigma},
          {"delta_sigma", c.delta_sigma.value_or(c.delta / 2.0)},
          {"r", c.r ? json(*c.r) : json(nullptr)},
          {"seed", c.seed},
          {"c_chernoff", c.c_chernoff},
          {"c_bss", c.c_bss},
          {"c_s1", c.c_s1},
          {"c_s2", c.c_s2},
          {"jl", to_string(c.jl_kind)},
          {"validate_radius", c.validate_radius},
          {"trials", c.trials}};
}

json to_json(const AttentionErrorReport& r) {
  return {{"eps", r.eps},
          {"r_measured", r.r_measured},
          {"sandwich_holds", r.sandwich_holds},
          {"eps_star", finite_or_null(r.eps_star)},
          {"entry_bound_ok", r.entry_bound_ok},
          {"entry_bound_flagged", r.entry_bound_flagged},
          {"exp_rel_err", r.exp_rel_err},
          {"exp_bound", r.exp_bound},
          {"rowsum_rel_err", r.rowsum_rel_err},
          {"rowsum_bound", r.rowsum_bound},
          {"attention_inf_err", r.attention_inf_err},
          {"attention_bound", r.attention_bound},
          {"c1", r.c1},
          {"c2", r.c2},
          {"bounds_applicable", r.bounds_applicable},
          {"bounds_ok", r.bounds_ok}};
}

PipelineRun run_pipeline(const InputMatrix& x, const RunConfig& config, std::uint64_t seed) {
  PipelineRun run;
  if (config.method == Method::randomized) {
    run.reduced = sparsify_randomized(x, config.eps, config.delta, seed, config.randomized(), &run.stages);
  } else {
    run.reduced = sparsify_deterministic(x, config.eps, config.bss(), &run.stages);
  }
  auto start = Clock::now();
  const AttentionPair px = attention_matrix(x.data);
  const AttentionPair py = attention_matrix(AnyMatrix{run.reduced.data});
  run.attention_ms = elapsed_ms(start);
  start = Clock::now();
  run.attention = verify_pairs(px, py, config.eps);
  run.verify_ms = elapsed_ms(start);
  return run;
}

int run_gen(const GenOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const InputMatrix x = generate(opt.n, opt.d, opt.r, opt.density, opt.seed);
    write_matrix(opt.output, x.data, opt.format);
    const json summary = {{"schema", kReportSchema},
                          {"command", "gen"},
                          {"n", x.n()},
                          {"d", x.d()},
                          {"nnz", nnz_of(x.data)},
                          {"density", opt.density},
                          {"r_target", opt.r},
                          {"r_measured", inf_norm(gram(x.data))},
                          {"seed", opt.seed},
                          {"format", to_string(opt.format)}};
    out << summary.dump(2) << "\n";
    return kExitOk;
  });
}

int run_sparsify(const RunConfig& config, const IoPaths& io, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const auto t0 = Clock::now();
    const InputMatrix x = ingest(io.input, io.format, config.r, config.validate_radius);

    PipelineRun first = run_pipeline(x, config, config.seed);
    write_matrix(io.output, first.reduced.data, FileFormat::binary);

    json report = {{"schema", kReportSchema}, {"command", "sparsify"}, {"config", to_json(config)}};
    report["input"] = input_stats(x, io);
    report["output"] = {{"m", first.reduced.m()},
                        {"nonzero_weights", count_nonzero(first.reduced.weights)},
                        {"distinct_columns", [&] {
                           auto idx = first.reduced.selected_indices;
                           std::sort(idx.begin(), idx.end());
                           return static_cast<std::size_t>(std::unique(idx.begin(), idx.end()) - idx.begin());
                         }()},
                        {"method", to_string(first.reduced.method)},
                        {"seed", first.reduced.seed ? json(*first.reduced.seed) : json(nullptr)},
                        {"selected_indices", first.reduced.selected_indices},
                        {"weights", first.reduced.weights}};
    report["attention"] = to_json(first.attention);

    if (config.trials > 1) {
      std::size_t holds = 0, violations = 0;
      double worst_err = first.attention.attention_inf_err;
      double worst_eps = first.attention.eps_star;
      holds += first.attention.sandwich_holds ? 1 : 0;
      violations += first.attention.bounds_ok ? 0 : 1;
      for (std::size_t t = 1; t < config.trials; ++t) {
        const PipelineRun run = run_pipeline(x, config, derive_seed(config.seed, static_cast<std::uint64_t>(t)));
        holds += run.attention.sandwich_holds ? 1 : 0;
        violations += run.attention.bounds_ok ? 0 : 1;
        worst_err = std::max(worst_err, run.attention.attention_inf_err);
        worst_eps = std::max(worst_eps, run.attention.eps_star);
      }
      report["trials"] = {{"count", config.trials},
                          {"sandwich_holds", holds},
                          {"bound_violations", violations},
                          {"max_attention_inf_err", worst_err},
                          {"max_eps_star", finite_or_null(worst_eps)}};
    }

    report["timing_ms"] = {{"leverage", first.stages.leverage_ms},
                           {"selection", first.stages.selection_ms},
                           {"attention", first.attention_ms},
                           {"verify", first.verify_ms},
                           {"total", elapsed_ms(t0)}};
    emit_report(report, io.report, out);
    return kExitOk;
  });
}

int run_verify(const RunConfig& config, const IoPaths& io, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(config.eps > 0.0, "--eps must be positive");
    const auto t0 = Clock::now();
    const InputMatrix x = ingest(io.input, io.format, config.r, config.validate_radius);
    const AnyMatrix y_any = read_matrix(io.reduced, FileFormat::binary);
    const DenseMatrix& y = std::get<DenseMatrix>(y_any);
    require(y.rows() == x.n(), "reduced matrix has " + std::to_string(y.rows()) + " rows, input has " +
                                   std::to_string(x.n()));

    auto start = Clock::now();
    const AttentionPair px = attention_matrix(x.data);
    const AttentionPair py = attention_matrix(y_any);
    const double attention_ms = elapsed_ms(start);
    start = Clock::now();
    const AttentionErrorReport rep = verify_pairs(px, py, config.eps);
    const double verify_ms = elapsed_ms(start);

    json report = {{"schema", kReportSchema}, {"command", "verify"}, {"config", to_json(config)}};
    report["input"] = input_stats(x, io);
    report["output"] = {{"m", y.cols()}};
    report["attention"] = to_json(rep);
    report["timing_ms"] = {{"attention", attention_ms}, {"verify", verify_ms}, {"total", elapsed_ms(t0)}};
    emit_report(report, io.report, out);
    return rep.bounds_ok ? kExitOk : kExitBound;
  });
}

int run_leverage(const RunConfig& config, const IoPaths& io, bool exact, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const InputMatrix x = ingest(io.input, io.format, config.r, config.validate_radius);
    const AnyMatrix a_rows = transpose(x.data);
    const auto start = Clock::now();
    const LeverageConfig lc = config.randomized().leverage;
    const LeverageScores scores =
        exact ? exact_leverage(a_rows)
              : approx_leverage(a_rows, config.eps_sigma, config.delta_sigma.value_or(config.delta / 2.0),
                                derive_seed(config.seed, "leverage"), lc);
    const double ms = elapsed_ms(start);

    std::ofstream os(io.output, std::ios::trunc);
    if (!os) throw ContractViolation("cannot write '" + io.output.string() + "'");
    os << "index,score\n" << std::setprecision(17);
    double total = 0.0;
    for (std::size_t j = 0; j < scores.scores.size(); ++j) {
      os << j << ',' << scores.scores[j] << '\n';
      total += scores.scores[j];
    }
    json report = {{"schema", kReportSchema},
                   {"command", "leverage"},
                   {"config", to_json(config)},
                   {"input", input_stats(x, io)},
                   {"scores", {{"count", scores.scores.size()},
                               {"exact", scores.exact},
                               {"sum", total},
                               {"eps_sigma", scores.eps_sigma},
                               {"delta_sigma", scores.delta_sigma}}},
                   {"timing_ms", {{"leverage", ms}}}};
    emit_report(report, io.report, out);
    return kExitOk;
  });
}

AffineFit fit_affine(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_affine: need at least two points");
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, "fit_affine: x values are all equal");
  AffineFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

namespace {

template <typename T>
std::vector<T> grid_values(const json& sweep, const char* key, T fallback) {
  if (!sweep.contains(key)) return {fallback};
  const json& v = sweep.at(key);
  if (v.is_array()) {
    require(!v.empty(), std::string("sweep: '") + key + "' is empty");
    return v.get<std::vector<T>>();
  }
  return {v.get<T>()};
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

BenchSummary run_bench_sweep(const json& sweep, const std::filesystem::path& csv_path, std::ostream& log) {
  require(sweep.is_object(), "sweep: top level must be a JSON object");
  const auto methods = grid_values<std::string>(sweep, "methods", "rand");
  const auto ns = grid_values<std::size_t>(sweep, "n", 32);
  const auto ds = grid_values<std::size_t>(sweep, "d", 4096);
  const auto densities = grid_values<double>(sweep, "density", 1.0);
  const auto rs = grid_values<double>(sweep, "r", 0.05);
  const double eps = sweep.value("eps", 0.5);
  const double delta = sweep.value("delta", 0.05);
  const std::uint64_t seed = sweep.value("seed", std::uint64_t{0});
  const std::size_t repeats = std::max<std::size_t>(1, sweep.value("repeats", std::size_t{1}));
  for (const auto& m : methods) require(m == "rand" || m == "det", "sweep: unknown method '" + m + "'");

  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw ContractViolation("cannot write '" + csv_path.string() + "'");
  csv << "method,n,d,density,r,nnz,m,nonzero_weights,leverage_ms,selection_ms,attention_ms,verify_ms,total_ms,"
         "sandwich_holds,eps_star,exp_rel_err,rowsum_rel_err,attention_inf_err,status\n";
  csv << std::setprecision(10);

  BenchSummary summary;
  std::map<std::pair<std::string, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> groups;

  for (const auto& method : methods) {
    for (std::size_t n : ns) {
      for (std::size_t d : ds) {
        for (double density : densities) {
          for (double r : rs) {
            ++summary.rows;
            csv << method << ',' << n << ',' << d << ',' << density << ',' << r << ',';
            try {
              const InputMatrix x = generate(n, d, r, density, seed);
              RunConfig config;
              config.method = method == "rand" ? Method::randomized : Method::deterministic;
              config.eps = eps;
              config.delta = delta;
              config.seed = seed;
              config.validate();
              std::vector<double> totals;
              PipelineRun run;
              for (std::size_t k = 0; k < repeats; ++k) {
                run = run_pipeline(x, config, seed);
                totals.push_back(run.stages.leverage_ms + run.stages.selection_ms);
              }
              std::sort(totals.begin(), totals.end());
              const double total = totals[totals.size() / 2];
              const std::size_t nnz = nnz_of(x.data);
              csv << nnz << ',' << run.reduced.m() << ',' << count_nonzero(run.reduced.weights) << ','
                  << run.stages.leverage_ms << ',' << run.stages.selection_ms << ',' << run.attention_ms << ','
                  << run.verify_ms << ',' << total << ',' << (run.attention.sandwich_holds ? 1 : 0) << ','
                  << run.attention.eps_star << ',' << run.attention.exp_rel_err << ','
                  << run.attention.rowsum_rel_err << ',' << run.attention.attention_inf_err << ",ok\n";
              auto& g = groups[{method, n}];
              g.first.push_back(static_cast<double>(nnz));
              g.second.push_back(total);
            } catch (const std::exception& e) {
              ++summary.failures;
              csv << ",,,,,,,,,,,,," << csv_quote(std::string("error: ") + e.what()) << '\n';
            }
          }
        }
      }
    }
  }

  for (const auto& [key, pts] : groups) {
    const auto& xs = pts.first;
    if (xs.size() < 2 || std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs.front(); })) continue;
    AffineFit fit = fit_affine(pts.first, pts.second);
    fit.method = key.first;
    fit.n = key.second;
    log << "fit " << fit.method << " n=" << fit.n << ": total_ms = " << fit.slope << " * nnz + " << fit.intercept
        << "  (R^2 = " << fit.r_squared << ", " << fit.points << " points)\n";
    summary.fits.push_back(fit);
  }
  log << summary.rows << " rows, " << summary.failures << " failed\n";
  return summary;
}

int run_bench(const std::filesystem::path& sweep_path, const std::filesystem::path& csv_path, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream is(sweep_path);
    if (!is) throw ParseError("cannot open '" + sweep_path.string() + "'");
    json sweep;
    try {
      sweep = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ParseError("sweep file: " + std::string(e.what()));
    }
    run_bench_sweep(sweep, csv_path, out);
    return kExitOk;
  });
}

}  // namespace atsp
