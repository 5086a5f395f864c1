#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "toxfair/rng.hpp"

namespace toxfair {

/// Row-major dense matrix of doubles. A vector is a 1 x n or n x 1 matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Nested-list construction for tests and small fixtures.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  void set_zero() noexcept;
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Compressed sparse rows; the input side of TF-IDF x dense products.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  /// Appends a row given as (column, value) pairs sorted by column.
  void append_row(std::span<const std::uint32_t> cols_of_row, std::span<const double> vals);
  std::size_t row_nnz(std::size_t r) const noexcept { return row_offsets[r + 1] - row_offsets[r]; }
  /// Rows `picked` in the given order.
  CsrMatrix select_rows(std::span<const std::size_t> picked) const;
  Matrix to_dense() const;
};

Matrix select_rows(const Matrix& m, std::span<const std::size_t> picked);

// ---------------------------------------------------------------------------
// Products. All accumulate in a fixed order: row-major over the output, the
// inner dimension ascending.

/// out = x * w + b (b broadcast over rows; may be empty for no bias).
Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b);
Matrix affine(const CsrMatrix& x, const Matrix& w, std::span<const double> b);

/// out += a * b
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a^T * b
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_tn_acc(const CsrMatrix& a, const Matrix& b, Matrix& out);
/// out += a * b^T
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out[j] += sum_i m(i, j)
void column_sums_acc(const Matrix& m, std::span<double> out);

// ---------------------------------------------------------------------------
// Activations

double sigmoid(double x) noexcept;
Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);
Matrix tanh(const Matrix& x);
/// Row-wise softmax, stabilized by subtracting each row's maximum.
Matrix softmax_rows(const Matrix& x);

// ---------------------------------------------------------------------------
// Losses

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

inline constexpr double kProbClamp = 1e-12;

/// Mean binary cross-entropy over probabilities p (clamped to
/// [kProbClamp, 1 - kProbClamp]) and targets y in {0,1}. grad is dL/dp.
LossGrad bce_loss(std::span<const double> p, std::span<const double> y);

/// Mean BCE expressed on logits; grad is dL/dz = (sigmoid(z) - y) / n.
LossGrad bce_with_logits(std::span<const double> z, std::span<const double> y);

/// Mean softmax cross-entropy over score rows and integer class targets.
/// Returns the loss and fills dscores (same shape as scores).
double softmax_cross_entropy(const Matrix& scores, std::span<const int> targets, Matrix& dscores);

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Owns the moment buffers for one parameter set. Exclusively owned by one
/// training loop.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// Applies one update in place. Moment buffers are sized on the first call
  /// and must keep matching the parameter shapes afterwards.
  void step(std::span<Matrix> params, std::span<const Matrix> grads);

  std::uint64_t step_count() const noexcept { return steps_; }
  const OptimizerConfig& config() const noexcept { return config_; }

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
};

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

// ---------------------------------------------------------------------------
// Gradient checking

/// Scalar objective over a flat parameter vector. When `grad` is non-null
/// the callee writes the analytic gradient into it.
using Objective = std::function<double(std::span<const double> theta, std::vector<double>* grad)>;

/// Max over coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
/// with central differences of step h. Throws DomainError on a non-finite value.
double grad_check(const Objective& f, std::span<const double> theta, double h);

// ---------------------------------------------------------------------------
// Initialization and serialization

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Versioned binary layout: magic "TXFP", u32 version, u64 count, then per
/// tensor u64 rows, u64 cols, rows*cols little-endian float64 values.
void write_tensors(std::ostream& out, std::span<const Matrix> tensors);
std::vector<Matrix> read_tensors(std::istream& in);

}  // namespace toxfair
