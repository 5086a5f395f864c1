#include <cmath>
#include <sstream>

#include "doctest.h"
#include "toxfair/error.hpp"
#include "toxfair/numerics.hpp"

using namespace toxfair;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Textbook triple loop, kept deliberately naive.
Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void check_close(const Matrix& a, const Matrix& b, double tol = 1e-12) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(tol));
}

CsrMatrix sparse_from(const Matrix& dense) {
  CsrMatrix csr;
  csr.cols = dense.cols();
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      if (dense(r, c) != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(c));
        val.push_back(dense(r, c));
      }
    }
    csr.append_row(idx, val);
  }
  return csr;
}

}  // namespace

TEST_CASE("affine matches a naive product plus broadcast bias") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.below(6), d = 1 + rng.below(7), k = 1 + rng.below(5);
    const Matrix x = random_matrix(n, d, rng);
    const Matrix w = random_matrix(d, k, rng);
    const Matrix b = random_matrix(1, k, rng);
    Matrix expect = naive_product(x, w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) expect(i, j) += b(0, j);
    check_close(affine(x, w, b.values()), expect);
    check_close(affine(x, w, {}), naive_product(x, w));
  }
}

TEST_CASE("sparse affine agrees with the dense path") {
  Rng rng(5);
  Matrix x = random_matrix(5, 8, rng);
  for (auto& v : x.values())
    if (rng.bernoulli(0.6)) v = 0.0;
  const Matrix w = random_matrix(8, 3, rng);
  const Matrix b = random_matrix(1, 3, rng);
  const CsrMatrix csr = sparse_from(x);
  check_close(affine(csr, w, b.values()), affine(x, w, b.values()));
  check_close(csr.to_dense(), x);

  const std::size_t picked[] = {4, 0, 4};
  const Matrix picked_dense = csr.select_rows(picked).to_dense();
  CHECK(picked_dense.rows() == 3);
  for (std::size_t c = 0; c < 8; ++c) {
    CHECK(picked_dense(0, c) == x(4, c));
    CHECK(picked_dense(1, c) == x(0, c));
  }
}

TEST_CASE("accumulating gemm variants") {
  Rng rng(11);
  const Matrix a = random_matrix(4, 3, rng);
  const Matrix b = random_matrix(4, 5, rng);
  const Matrix c = random_matrix(5, 3, rng);

  Matrix out(3, 5, 1.0);
  gemm_tn_acc(a, b, out);
  Matrix expect = naive_product(transpose(a), b);
  for (auto& v : expect.values()) v += 1.0;
  check_close(out, expect);

  Matrix out_sparse(3, 5, 1.0);
  gemm_tn_acc(sparse_from(a), b, out_sparse);
  check_close(out_sparse, expect);

  Matrix nt(4, 5);
  gemm_nt_acc(a, c, nt);
  check_close(nt, naive_product(a, transpose(c)));

  Matrix plain(4, 3);
  gemm_acc(b, c, plain);
  check_close(plain, naive_product(b, c));

  std::vector<double> sums(3, 0.5);
  column_sums_acc(a, sums);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.5;
    for (std::size_t i = 0; i < 4; ++i) s += a(i, j);
    CHECK(sums[j] == doctest::Approx(s));
  }
}

TEST_CASE("shape mismatches throw ShapeError") {
  const Matrix x(2, 3), w(4, 2);
  CHECK_THROWS_AS(affine(x, w, {}), ShapeError);
  const Matrix w_ok(3, 2);
  const std::vector<double> bad_bias(3, 0.0);
  CHECK_THROWS_AS(affine(x, w_ok, bad_bias), ShapeError);
  Matrix out(5, 5);
  CHECK_THROWS_AS(gemm_acc(x, w_ok, out), ShapeError);
}

TEST_CASE("activations") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
  CHECK(sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));

  const Matrix m{{-1.0, 0.0, 2.0}};
  CHECK(relu(m) == Matrix{{0.0, 0.0, 2.0}});
  CHECK(tanh(m)(0, 2) == doctest::Approx(std::tanh(2.0)));

  const Matrix big{{1000.0, 1001.0}, {0.0, 0.0}};
  const Matrix s = softmax_rows(big);
  CHECK(s(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))));
  CHECK(s(0, 0) + s(0, 1) == doctest::Approx(1.0));
  CHECK(s(1, 0) == 0.5);
}

TEST_CASE("binary cross-entropy and its gradients") {
  const std::vector<double> p{0.9, 0.2, 0.5};
  const std::vector<double> y{1.0, 0.0, 1.0};
  const auto lg = bce_loss(p, y);
  const double expect = -(std::log(0.9) + std::log(0.8) + std::log(0.5)) / 3.0;
  CHECK(lg.loss == doctest::Approx(expect).epsilon(1e-14));
  CHECK(lg.grad[0] == doctest::Approx(-1.0 / (0.9 * 3.0)));
  CHECK(lg.grad[1] == doctest::Approx(1.0 / (0.8 * 3.0)));

  // Clamping keeps a hard miss finite.
  const std::vector<double> hard{0.0};
  const std::vector<double> one{1.0};
  CHECK(bce_loss(hard, one).loss == doctest::Approx(-std::log(kProbClamp)));

  const std::vector<double> z{2.0, -1.0, 0.0};
  const auto lz = bce_with_logits(z, y);
  double direct = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double q = 1.0 / (1.0 + std::exp(-z[i]));
    direct += -(y[i] * std::log(q) + (1 - y[i]) * std::log(1 - q));
  }
  CHECK(lz.loss == doctest::Approx(direct / 3.0).epsilon(1e-13));
  CHECK(lz.grad[1] == doctest::Approx((1.0 / (1.0 + std::exp(1.0))) / 3.0));

  // Extreme logits stay finite.
  const std::vector<double> zz{-1000.0};
  CHECK(bce_with_logits(zz, one).loss == doctest::Approx(1000.0));

  const std::vector<double> short_y{1.0};
  CHECK_THROWS_AS(bce_loss(p, short_y), ShapeError);
}

TEST_CASE("softmax cross-entropy loss and gradient") {
  const Matrix scores{{1.0, 2.0}, {0.5, -0.5}};
  const std::vector<int> targets{1, 0};
  Matrix d;
  const double loss = softmax_cross_entropy(scores, targets, d);
  const double l0 = -std::log(std::exp(2.0) / (std::exp(1.0) + std::exp(2.0)));
  const double l1 = -std::log(std::exp(0.5) / (std::exp(0.5) + std::exp(-0.5)));
  CHECK(loss == doctest::Approx((l0 + l1) / 2.0));
  CHECK(d(0, 0) + d(0, 1) == doctest::Approx(0.0));
  CHECK(d(0, 1) == doctest::Approx((std::exp(2.0) / (std::exp(1.0) + std::exp(2.0)) - 1.0) / 2.0));
}

TEST_CASE("sgd and adam updates follow the textbook recurrences") {
  std::vector<Matrix> params{Matrix{{1.0, -2.0}}};
  const std::vector<Matrix> grads{Matrix{{0.5, -0.25}}};

  Optimizer sgd({OptimizerKind::kSgd, 0.1});
  sgd.step(params, grads);
  CHECK(params[0](0, 0) == doctest::Approx(0.95));
  CHECK(params[0](0, 1) == doctest::Approx(-1.975));

  params = {Matrix{{1.0, -2.0}}};
  Optimizer adam({OptimizerKind::kAdam, 0.01});
  double m = 0, v = 0, theta = 1.0;
  for (int t = 1; t <= 3; ++t) {
    adam.step(params, grads);
    m = 0.9 * m + 0.1 * 0.5;
    v = 0.999 * v + 0.001 * 0.25;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.999, t));
    theta -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(params[0](0, 0) == doctest::Approx(theta).epsilon(1e-14));
  }
  CHECK(adam.step_count() == 3);

  std::vector<Matrix> wrong{Matrix(2, 2)};
  CHECK_THROWS_AS(adam.step(wrong, grads), ShapeError);
}

TEST_CASE("optimizer names round-trip") {
  CHECK(parse_optimizer_kind("adam") == OptimizerKind::kAdam);
  CHECK(parse_optimizer_kind(to_string(OptimizerKind::kSgd)) == OptimizerKind::kSgd);
  CHECK_THROWS_AS(parse_optimizer_kind("rmsprop"), ConfigError);
}

TEST_CASE("grad_check accepts a right gradient and flags a wrong one") {
  const Objective good = [](std::span<const double> t, std::vector<double>* g) {
    if (g) *g = {2 * t[0] * t[1], t[0] * t[0] + std::cos(t[1])};
    return t[0] * t[0] * t[1] + std::sin(t[1]);
  };
  const std::vector<double> theta{0.7, -1.3};
  CHECK(grad_check(good, theta, 1e-5) < 1e-8);

  const Objective bad = [](std::span<const double> t, std::vector<double>* g) {
    if (g) *g = {2 * t[0], 0.0};
    return t[0] * t[0] + t[1];
  };
  CHECK(grad_check(bad, theta, 1e-5) > 0.5);

  const Objective nan_objective = [](std::span<const double>, std::vector<double>* g) {
    if (g) *g = {0.0, 0.0};
    return std::nan("");
  };
  CHECK_THROWS_AS(grad_check(nan_objective, theta, 1e-5), DomainError);
  CHECK_THROWS_AS(grad_check(good, theta, 0.0), DomainError);
}

TEST_CASE("glorot bounds and determinism") {
  Matrix a(30, 20), b(30, 20);
  Rng r1(9), r2(9);
  glorot_uniform(a, 30, 20, r1);
  glorot_uniform(b, 30, 20, r2);
  CHECK(a == b);
  const double limit = std::sqrt(6.0 / 50.0);
  for (double v : a.values()) CHECK(std::abs(v) <= limit);
}

TEST_CASE("tensor blobs round-trip bit-exactly") {
  Rng rng(1);
  std::vector<Matrix> tensors{random_matrix(3, 4, rng), Matrix(0, 0), Matrix{{1e-300, -0.0, 1e300}}};
  std::stringstream blob;
  write_tensors(blob, tensors);
  const auto back = read_tensors(blob);
  REQUIRE(back.size() == 3);
  CHECK(back[0] == tensors[0]);
  CHECK(back[2](0, 0) == 1e-300);
  CHECK(std::signbit(back[2](0, 1)));

  std::stringstream junk("NOPE");
  CHECK_THROWS_AS(read_tensors(junk), DataError);

  std::string truncated = blob.str().substr(0, 30);
  std::stringstream cut(truncated);
  CHECK_THROWS_AS(read_tensors(cut), DataError);
}
