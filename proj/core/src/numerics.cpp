#include "toxfair/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "toxfair/error.hpp"

namespace toxfair {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::set_zero() noexcept { std::fill(data_.begin(), data_.end(), 0.0); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void CsrMatrix::append_row(std::span<const std::uint32_t> cols_of_row, std::span<const double> vals) {
  if (cols_of_row.size() != vals.size()) throw ShapeError("sparse row index/value length mismatch");
  for (auto c : cols_of_row) {
    if (c >= cols) throw ShapeError("sparse column " + std::to_string(c) + " out of range");
  }
  indices.insert(indices.end(), cols_of_row.begin(), cols_of_row.end());
  values.insert(values.end(), vals.begin(), vals.end());
  row_offsets.push_back(indices.size());
  ++rows;
}

CsrMatrix CsrMatrix::select_rows(std::span<const std::size_t> picked) const {
  CsrMatrix out;
  out.cols = cols;
  for (auto r : picked) {
    const auto begin = row_offsets[r];
    const auto end = row_offsets[r + 1];
    out.indices.insert(out.indices.end(), indices.begin() + begin, indices.begin() + end);
    out.values.insert(out.values.end(), values.begin() + begin, values.begin() + end);
    out.row_offsets.push_back(out.indices.size());
    ++out.rows;
  }
  return out;
}

Matrix CsrMatrix::to_dense() const {
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto k = row_offsets[r]; k < row_offsets[r + 1]; ++k) out(r, indices[k]) = values[k];
  }
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> picked) {
  Matrix out(picked.size(), m.cols());
  for (std::size_t i = 0; i < picked.size(); ++i) {
    auto src = m.row(picked[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

namespace {

[[noreturn]] void shape_mismatch(const char* op, const std::string& a, const std::string& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a + " and " + b);
}

void add_bias(Matrix& out, std::span<const double> b) {
  if (b.empty()) return;
  if (b.size() != out.cols()) {
    shape_mismatch("affine bias", out.shape_string(), "1x" + std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < out.cols(); ++j) o[j] += b[j];
  }
}

}  // namespace

void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) shape_mismatch("gemm", a.shape_string(), b.shape_string());
  if (out.rows() != a.rows() || out.cols() != b.cols()) {
    shape_mismatch("gemm output", out.shape_string(), a.shape_string());
  }
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    const double* ai = a.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double av = ai[k];
      if (av == 0.0) continue;
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += av * bk[j];
    }
  }
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) shape_mismatch("gemm_tn", a.shape_string(), b.shape_string());
  if (out.rows() != a.cols() || out.cols() != b.cols()) {
    shape_mismatch("gemm_tn output", out.shape_string(), a.shape_string());
  }
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* ar = a.row(r).data();
    const double* br = b.row(r).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

void gemm_tn_acc(const CsrMatrix& a, const Matrix& b, Matrix& out) {
  if (a.rows != b.rows()) {
    shape_mismatch("gemm_tn", std::to_string(a.rows) + "x" + std::to_string(a.cols), b.shape_string());
  }
  if (out.rows() != a.cols || out.cols() != b.cols()) {
    shape_mismatch("gemm_tn output", out.shape_string(), b.shape_string());
  }
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* br = b.row(r).data();
    for (auto k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) {
      const double av = a.values[k];
      double* o = out.row(a.indices[k]).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) shape_mismatch("gemm_nt", a.shape_string(), b.shape_string());
  if (out.rows() != a.rows() || out.cols() != b.rows()) {
    shape_mismatch("gemm_nt output", out.shape_string(), a.shape_string());
  }
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ai[k] * bj[k];
      o[j] += s;
    }
  }
}

void column_sums_acc(const Matrix& m, std::span<double> out) {
  if (out.size() != m.cols()) shape_mismatch("column_sums", m.shape_string(), std::to_string(out.size()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i).data();
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += r[j];
  }
}

Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b) {
  if (x.cols() != w.rows()) shape_mismatch("affine", x.shape_string(), w.shape_string());
  Matrix out(x.rows(), w.cols());
  gemm_acc(x, w, out);
  add_bias(out, b);
  return out;
}

Matrix affine(const CsrMatrix& x, const Matrix& w, std::span<const double> b) {
  if (x.cols != w.rows()) {
    shape_mismatch("affine", std::to_string(x.rows) + "x" + std::to_string(x.cols), w.shape_string());
  }
  Matrix out(x.rows, w.cols());
  const std::size_t n = w.cols();
  for (std::size_t i = 0; i < x.rows; ++i) {
    double* o = out.row(i).data();
    for (auto k = x.row_offsets[i]; k < x.row_offsets[i + 1]; ++k) {
      const double av = x.values[k];
      const double* wk = w.row(x.indices[k]).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += av * wk[j];
    }
  }
  add_bias(out, b);
  return out;
}

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {
template <typename F>
Matrix map(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  auto in = x.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
  return out;
}
}  // namespace

Matrix relu(const Matrix& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}
Matrix sigmoid(const Matrix& x) {
  return map(x, [](double v) { return sigmoid(v); });
}
Matrix tanh(const Matrix& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto o = out.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (auto& v : o) v /= total;
  }
  return out;
}

LossGrad bce_loss(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size()) {
    throw ShapeError("bce_loss: " + std::to_string(p.size()) + " probabilities vs " +
                     std::to_string(y.size()) + " targets");
  }
  LossGrad out;
  out.grad.resize(p.size());
  if (p.empty()) return out;
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    out.loss -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
    out.grad[i] = (-y[i] / q + (1.0 - y[i]) / (1.0 - q)) / n;
  }
  out.loss /= n;
  return out;
}

LossGrad bce_with_logits(std::span<const double> z, std::span<const double> y) {
  if (z.size() != y.size()) {
    throw ShapeError("bce_with_logits: " + std::to_string(z.size()) + " logits vs " +
                     std::to_string(y.size()) + " targets");
  }
  LossGrad out;
  out.grad.resize(z.size());
  if (z.empty()) return out;
  const double n = static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    // log(1 + exp(-|z|)) + max(z, 0) - y z
    const double v = z[i];
    out.loss += std::log1p(std::exp(-std::abs(v))) + std::max(v, 0.0) - y[i] * v;
    out.grad[i] = (sigmoid(v) - y[i]) / n;
  }
  out.loss /= n;
  return out;
}

double softmax_cross_entropy(const Matrix& scores, std::span<const int> targets, Matrix& dscores) {
  if (scores.rows() != targets.size()) {
    throw ShapeError("softmax_cross_entropy: " + scores.shape_string() + " scores vs " +
                     std::to_string(targets.size()) + " targets");
  }
  dscores = softmax_rows(scores);
  if (scores.rows() == 0) return 0.0;
  const double n = static_cast<double>(scores.rows());
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto t = static_cast<std::size_t>(targets[i]);
    if (t >= scores.cols()) throw ShapeError("softmax_cross_entropy: target out of range");
    loss -= std::log(std::max(dscores(i, t), kProbClamp));
    dscores(i, t) -= 1.0;
  }
  for (auto& v : dscores.values()) v /= n;
  return loss / n;
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

void Optimizer::step(std::span<Matrix> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) throw ShapeError("optimizer: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols()) {
      shape_mismatch("optimizer", params[i].shape_string(), grads[i].shape_string());
    }
  }
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i].values();
      auto g = grads[i].values();
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
    }
    return;
  }
  if (first_moment_.empty()) {
    for (const auto& p : params) {
      first_moment_.emplace_back(p.rows(), p.cols());
      second_moment_.emplace_back(p.rows(), p.cols());
    }
  } else if (first_moment_.size() != params.size()) {
    throw ShapeError("optimizer: parameter count changed between steps");
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (first_moment_[i].size() != params[i].size()) {
      shape_mismatch("optimizer moments", first_moment_[i].shape_string(), params[i].shape_string());
    }
    auto p = params[i].values();
    auto g = grads[i].values();
    auto m = first_moment_[i].values();
    auto v = second_moment_[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

double grad_check(const Objective& f, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw DomainError("grad_check: step must be positive");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> analytic(point.size(), 0.0);
  const double base = f(point, &analytic);
  if (!std::isfinite(base)) throw DomainError("grad_check: objective is not finite at theta");
  if (analytic.size() != point.size()) throw ShapeError("grad_check: gradient length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point, nullptr);
    point[i] = saved - h;
    const double down = f(point, nullptr);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw DomainError("grad_check: objective is not finite near coordinate " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

void glorot_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : m.values()) v = rng.uniform(-limit, limit);
}

namespace {

constexpr char kTensorMagic[4] = {'T', 'X', 'F', 'P'};
constexpr std::uint32_t kTensorVersion = 1;

static_assert(std::endian::native == std::endian::little, "tensor files assume little-endian hosts");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError("truncated tensor file");
  return value;
}

}  // namespace

void write_tensors(std::ostream& out, std::span<const Matrix> tensors) {
  out.write(kTensorMagic, 4);
  put<std::uint32_t>(out, kTensorVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& t : tensors) {
    put<std::uint64_t>(out, t.rows());
    put<std::uint64_t>(out, t.cols());
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing tensors");
}

std::vector<Matrix> read_tensors(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw DataError("not a tensor file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kTensorVersion) {
    throw DataError("unsupported tensor file version " + std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in);
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    Matrix m(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw DataError("truncated tensor payload");
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace toxfair
