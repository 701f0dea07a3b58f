#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atsp/error.hpp"
#include "atsp/leverage.hpp"
#include "atsp/matcore.hpp"
#include "atsp/matrix.hpp"

namespace atsp {

/// X in R^{n x d} with the radius bound ||X X^T||_inf <= r.
struct InputMatrix {
  AnyMatrix data;
  std::optional<double> radius;

  std::size_t n() const { return rows_of(data); }
  std::size_t d() const { return cols_of(data); }
};

/// Thrown by radius validation; carries the offending Gram entry.
class RadiusViolation : public ContractViolation {
 public:
  RadiusViolation(std::size_t i, std::size_t j, double value, double bound);
  std::size_t i;
  std::size_t j;
  double value;
  double bound;
};

/// Checks the shape invariant d >= n >= 1 and, when validate is set,
/// ||X X^T||_inf <= radius (or < 0.1 without an explicit radius).
InputMatrix make_input(AnyMatrix data, std::optional<double> radius, bool validate);
void validate_radius(const InputMatrix& x);

enum class Method { randomized, deterministic };
const char* to_string(Method m);

struct ReducedMatrix {
  DenseMatrix data;  // n x m
  std::vector<std::size_t> selected_indices;
  std::vector<double> weights;  // column t = weights[t] * X[:, selected_indices[t]]
  Method method = Method::randomized;
  std::optional<std::uint64_t> seed;

  std::size_t m() const { return data.cols(); }
  friend bool operator==(const ReducedMatrix&, const ReducedMatrix&) = default;
};

/// Column t of the result is weights[t] times column indices[t] of x.
DenseMatrix gather_columns(const AnyMatrix& x, const std::vector<std::size_t>& indices,
                           const std::vector<double>& weights);

struct StageTimings {
  double leverage_ms = 0.0;
  double selection_ms = 0.0;
};

struct RandomizedConfig {
  double eps_sigma = 0.5;
  std::optional<double> delta_sigma;  // defaults to delta / 2
  double c_chernoff = 4.0;
  LeverageConfig leverage;
};

ReducedMatrix sparsify_randomized(const InputMatrix& x, double eps, double delta, std::uint64_t seed,
                                  const RandomizedConfig& config = {}, StageTimings* timings = nullptr);

struct Whitened {
  DenseMatrix vectors;  // d x k, row i is Lambda^{-1/2} V^T x_i
  SymEig basis;         // eigendecomposition of X X^T
  std::vector<std::size_t> range;  // eigenpairs kept (above the rank threshold)
};

Whitened whiten(const InputMatrix& x);

struct BssConfig {
  double steps_factor = 9.0;  // d' = ceil(steps_factor / eps^2) steps per dimension
  double c_bss = 9.0;         // reported bound: nonzeros <= c_bss * ceil(eps^-2) * n
  bool stop_early = true;     // stop once the running sum already meets the sandwich
};

struct BssResult {
  std::vector<double> weights;  // length d, mostly zero
  std::size_t steps = 0;
  double lambda_min = 0.0;  // of the rescaled weighted sum
  double lambda_max = 0.0;
};

/// Deterministic two-barrier selection over isotropic vectors (rows of
/// `vectors`, summing to the identity). Weights are rescaled so that
/// (1 - eps) I <= sum w_i v_i v_i^T <= (1 + eps) I.
BssResult bss_select(const DenseMatrix& vectors, double eps, const BssConfig& config = {});

std::size_t bss_nonzero_bound(double eps, std::size_t n, const BssConfig& config = {});

ReducedMatrix sparsify_deterministic(const InputMatrix& x, double eps, const BssConfig& config = {},
                                     StageTimings* timings = nullptr);

}  // namespace atsp
