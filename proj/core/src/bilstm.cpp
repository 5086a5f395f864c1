// Bidirectional LSTM classifier: spatial dropout, stacked bidirectional
// layers over packed (unpadded) sequences, max+mean pooling over valid
// timesteps, dense ReLU head and sigmoid output. All gradients are derived by
// hand; tests check them against central differences.

#include <algorithm>
#include <cmath>

#include "toxfair/error.hpp"
#include "toxfair/models.hpp"

namespace toxfair {

void BiLstmConfig::validate() const {
  if (embed_dim == 0 || max_len == 0 || hidden_units == 0 || layers == 0 || batch_size == 0 || head_hidden == 0) {
    throw ConfigError("BiLSTM dimensions must be positive");
  }
  if (!(spatial_dropout >= 0.0 && spatial_dropout < 1.0)) throw ConfigError("spatial_dropout must lie in [0,1)");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

namespace {

constexpr std::size_t kTensorsPerDirection = 3;

std::size_t layer_input_dim(const BiLstmConfig& c, std::size_t layer) {
  return layer == 0 ? c.embed_dim : c.layer_output_dim();
}

std::size_t direction_base(std::size_t layer, std::size_t direction) {
  return (layer * 2 + direction) * kTensorsPerDirection;
}

std::size_t head_base(const BiLstmConfig& c) { return c.layers * 2 * kTensorsPerDirection; }

// Cached state for one recurrence step over the examples still active.
struct StepCache {
  std::vector<std::size_t> examples;
  std::vector<std::size_t> positions;
  Matrix x;
  Matrix h_prev;
  Matrix c_prev;
  Matrix gates;  // activated i, f, g, o
  Matrix c;
  Matrix tanh_c;
};

struct DirectionParams {
  const Matrix& w;
  const Matrix& u;
  const Matrix& b;
};

// Runs one direction over a batch of variable-length sequences. inputs[e] has
// at least lengths[e] rows; hidden states land in outputs[e] starting at
// column `offset`.
std::vector<StepCache> run_direction(const DirectionParams& p, std::span<const Matrix> inputs,
                                     std::span<const std::size_t> lengths, bool reverse, std::vector<Matrix>& outputs,
                                     std::size_t offset) {
  const std::size_t hidden = p.u.rows();
  const std::size_t in_dim = p.w.rows();
  const std::size_t batch = inputs.size();
  const std::size_t steps = lengths.empty() ? 0 : *std::max_element(lengths.begin(), lengths.end());

  Matrix h_state(batch, hidden);
  Matrix c_state(batch, hidden);
  std::vector<StepCache> trace;
  trace.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    StepCache step;
    for (std::size_t e = 0; e < batch; ++e) {
      if (lengths[e] > s) {
        step.examples.push_back(e);
        step.positions.push_back(reverse ? lengths[e] - 1 - s : s);
      }
    }
    const std::size_t active = step.examples.size();
    step.x = Matrix(active, in_dim);
    step.h_prev = Matrix(active, hidden);
    step.c_prev = Matrix(active, hidden);
    for (std::size_t r = 0; r < active; ++r) {
      const std::size_t e = step.examples[r];
      auto src = inputs[e].row(step.positions[r]);
      std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(in_dim), step.x.row(r).begin());
      auto hs = h_state.row(e);
      auto cs = c_state.row(e);
      std::copy(hs.begin(), hs.end(), step.h_prev.row(r).begin());
      std::copy(cs.begin(), cs.end(), step.c_prev.row(r).begin());
    }

    Matrix z = affine(step.x, p.w, p.b.values());
    gemm_acc(step.h_prev, p.u, z);
    step.gates = Matrix(active, 4 * hidden);
    step.c = Matrix(active, hidden);
    step.tanh_c = Matrix(active, hidden);
    for (std::size_t r = 0; r < active; ++r) {
      const double* zr = z.row(r).data();
      double* g = step.gates.row(r).data();
      for (std::size_t k = 0; k < hidden; ++k) {
        g[k] = sigmoid(zr[k]);
        g[hidden + k] = sigmoid(zr[hidden + k]);
        g[2 * hidden + k] = std::tanh(zr[2 * hidden + k]);
        g[3 * hidden + k] = sigmoid(zr[3 * hidden + k]);
      }
      const std::size_t e = step.examples[r];
      double* out = outputs[e].row(step.positions[r]).data() + offset;
      for (std::size_t k = 0; k < hidden; ++k) {
        const double c = g[hidden + k] * step.c_prev(r, k) + g[k] * g[2 * hidden + k];
        const double tc = std::tanh(c);
        const double h = g[3 * hidden + k] * tc;
        step.c(r, k) = c;
        step.tanh_c(r, k) = tc;
        c_state(e, k) = c;
        h_state(e, k) = h;
        out[k] = h;
      }
    }
    trace.push_back(std::move(step));
  }
  return trace;
}

// Backpropagation through time for one direction. d_outputs[e] holds dL/dh
// at column `offset`; input gradients accumulate into d_inputs[e] when
// d_inputs is non-empty.
void backprop_direction(const DirectionParams& p, const std::vector<StepCache>& trace,
                        std::span<const Matrix> d_outputs, std::size_t offset, std::vector<Matrix>* d_inputs,
                        Matrix& dw, Matrix& du, Matrix& db) {
  const std::size_t hidden = p.u.rows();
  const std::size_t batch = d_outputs.size();
  Matrix dh_next(batch, hidden);
  Matrix dc_next(batch, hidden);
  for (std::size_t s = trace.size(); s-- > 0;) {
    const StepCache& step = trace[s];
    const std::size_t active = step.examples.size();
    Matrix dz(active, 4 * hidden);
    for (std::size_t r = 0; r < active; ++r) {
      const std::size_t e = step.examples[r];
      const double* dout = d_outputs[e].row(step.positions[r]).data() + offset;
      const double* g = step.gates.row(r).data();
      double* dzr = dz.row(r).data();
      for (std::size_t k = 0; k < hidden; ++k) {
        const double i = g[k];
        const double f = g[hidden + k];
        const double cand = g[2 * hidden + k];
        const double o = g[3 * hidden + k];
        const double tc = step.tanh_c(r, k);
        const double dh = dout[k] + dh_next(e, k);
        const double dc = dc_next(e, k) + dh * o * (1.0 - tc * tc);
        dzr[k] = dc * cand * i * (1.0 - i);
        dzr[hidden + k] = dc * step.c_prev(r, k) * f * (1.0 - f);
        dzr[2 * hidden + k] = dc * i * (1.0 - cand * cand);
        dzr[3 * hidden + k] = dh * tc * o * (1.0 - o);
        dc_next(e, k) = dc * f;
      }
    }
    gemm_tn_acc(step.x, dz, dw);
    gemm_tn_acc(step.h_prev, dz, du);
    column_sums_acc(dz, db.values());

    Matrix dh_prev(active, hidden);
    gemm_nt_acc(dz, p.u, dh_prev);
    for (std::size_t r = 0; r < active; ++r) {
      const std::size_t e = step.examples[r];
      auto src = dh_prev.row(r);
      std::copy(src.begin(), src.end(), dh_next.row(e).begin());
    }
    if (d_inputs) {
      Matrix dx(active, p.w.rows());
      gemm_nt_acc(dz, p.w, dx);
      for (std::size_t r = 0; r < active; ++r) {
        const std::size_t e = step.examples[r];
        double* dst = (*d_inputs)[e].row(step.positions[r]).data();
        const double* src = dx.row(r).data();
        for (std::size_t k = 0; k < dx.cols(); ++k) dst[k] += src[k];
      }
    }
  }
}

struct ForwardState {
  std::vector<std::size_t> lengths;
  std::vector<std::vector<Matrix>> layer_inputs;  // [layer][example]
  std::vector<std::array<std::vector<StepCache>, 2>> traces;
  std::vector<Matrix> top;  // last layer outputs per example
  Matrix pooled;
  std::vector<std::size_t> argmax;  // example * 2H + feature
  Matrix head_pre;
  Matrix head_act;
  std::vector<double> logits;
};

void check_batch(const BiLstmConfig& config, std::span<const Matrix> params, std::span<const SequenceFeature> batch) {
  if (params.size() != bilstm_param_count(config)) {
    throw ShapeError("BiLSTM expects " + std::to_string(bilstm_param_count(config)) + " tensors, got " +
                     std::to_string(params.size()));
  }
  for (const auto& seq : batch) {
    if (seq.matrix.rows() != config.max_len || seq.matrix.cols() != config.embed_dim) {
      throw ShapeError("BiLSTM input " + seq.matrix.shape_string() + " does not match " +
                       std::to_string(config.max_len) + "x" + std::to_string(config.embed_dim));
    }
    if (seq.true_length > seq.matrix.rows()) throw ShapeError("sequence true_length exceeds its rows");
  }
}

ForwardState forward(const BiLstmConfig& config, std::span<const Matrix> params, std::span<const SequenceFeature> batch,
                     bool train_mode, std::uint64_t dropout_seed) {
  check_batch(config, params, batch);
  const std::size_t n = batch.size();
  const std::size_t hidden = config.hidden_units;
  const std::size_t width = config.layer_output_dim();
  ForwardState st;
  st.lengths.resize(n);
  for (std::size_t e = 0; e < n; ++e) st.lengths[e] = batch[e].true_length;

  // Spatial dropout: one keep/drop draw per example and embedding channel,
  // shared across every timestep.
  std::vector<Matrix> inputs(n);
  const bool dropout = train_mode && config.spatial_dropout > 0.0;
  Rng rng(dropout_seed);
  const double keep_scale = 1.0 / (1.0 - config.spatial_dropout);
  std::vector<double> mask(config.embed_dim, 1.0);
  for (std::size_t e = 0; e < n; ++e) {
    if (dropout) {
      for (auto& m : mask) m = rng.uniform() < config.spatial_dropout ? 0.0 : keep_scale;
    }
    inputs[e] = Matrix(st.lengths[e], config.embed_dim);
    for (std::size_t t = 0; t < st.lengths[e]; ++t) {
      auto src = batch[e].matrix.row(t);
      auto dst = inputs[e].row(t);
      for (std::size_t k = 0; k < config.embed_dim; ++k) dst[k] = src[k] * mask[k];
    }
  }

  st.layer_inputs.push_back(std::move(inputs));
  for (std::size_t l = 0; l < config.layers; ++l) {
    std::vector<Matrix> outputs(n);
    for (std::size_t e = 0; e < n; ++e) outputs[e] = Matrix(st.lengths[e], width);
    std::array<std::vector<StepCache>, 2> traces;
    for (std::size_t d = 0; d < 2; ++d) {
      const std::size_t base = direction_base(l, d);
      const DirectionParams p{params[base], params[base + 1], params[base + 2]};
      traces[d] = run_direction(p, st.layer_inputs[l], st.lengths, d == 1, outputs, d * hidden);
    }
    st.traces.push_back(std::move(traces));
    if (l + 1 < config.layers) {
      st.layer_inputs.push_back(std::move(outputs));
    } else {
      st.top = std::move(outputs);
    }
  }

  // Max and mean pooling over valid timesteps only.
  st.pooled = Matrix(n, 2 * width);
  st.argmax.assign(n * width, 0);
  for (std::size_t e = 0; e < n; ++e) {
    const std::size_t len = st.lengths[e];
    if (len == 0) continue;
    const Matrix& y = st.top[e];
    for (std::size_t j = 0; j < width; ++j) {
      double best = y(0, j);
      std::size_t best_t = 0;
      double sum = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const double v = y(t, j);
        sum += v;
        if (v > best) {
          best = v;
          best_t = t;
        }
      }
      st.pooled(e, j) = best;
      st.argmax[e * width + j] = best_t;
      st.pooled(e, width + j) = sum / static_cast<double>(len);
    }
  }

  const std::size_t hb = head_base(config);
  st.head_pre = affine(st.pooled, params[hb], params[hb + 1].values());
  st.head_act = relu(st.head_pre);
  const Matrix out = affine(st.head_act, params[hb + 2], params[hb + 3].values());
  st.logits.assign(out.values().begin(), out.values().end());
  return st;
}

}  // namespace

std::size_t bilstm_param_count(const BiLstmConfig& config) { return config.layers * 2 * kTensorsPerDirection + 4; }

std::vector<Matrix> init_bilstm_params(const BiLstmConfig& config, Rng& rng) {
  config.validate();
  const std::size_t hidden = config.hidden_units;
  std::vector<Matrix> params;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::size_t in = layer_input_dim(config, l);
    for (std::size_t d = 0; d < 2; ++d) {
      Matrix w(in, 4 * hidden);
      glorot_uniform(w, in, 4 * hidden, rng);
      Matrix u(hidden, 4 * hidden);
      glorot_uniform(u, hidden, 4 * hidden, rng);
      Matrix b(1, 4 * hidden);
      for (std::size_t k = 0; k < hidden; ++k) b(0, hidden + k) = 1.0;  // forget gate
      params.push_back(std::move(w));
      params.push_back(std::move(u));
      params.push_back(std::move(b));
    }
  }
  Matrix w1(config.pooled_dim(), config.head_hidden);
  glorot_uniform(w1, config.pooled_dim(), config.head_hidden, rng);
  Matrix w2(config.head_hidden, 1);
  glorot_uniform(w2, config.head_hidden, 1, rng);
  params.push_back(std::move(w1));
  params.emplace_back(1, config.head_hidden);
  params.push_back(std::move(w2));
  params.emplace_back(1, 1);
  return params;
}

std::vector<double> bilstm_forward(const BiLstmConfig& config, std::span<const Matrix> params,
                                   std::span<const SequenceFeature> batch, bool train_mode,
                                   std::uint64_t dropout_seed) {
  const ForwardState st = forward(config, params, batch, train_mode, dropout_seed);
  std::vector<double> p(st.logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(st.logits[i]);
  return p;
}

double bilstm_loss(const BiLstmConfig& config, std::span<const Matrix> params, std::span<const SequenceFeature> batch,
                   std::span<const int> labels, bool train_mode, std::uint64_t dropout_seed,
                   std::vector<Matrix>* grads) {
  if (labels.size() != batch.size()) throw ShapeError("bilstm_loss: sequences and labels differ in length");
  const ForwardState st = forward(config, params, batch, train_mode, dropout_seed);
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels[i] != 0 ? 1.0 : 0.0;
  auto lg = bce_with_logits(st.logits, y);
  if (!grads) return lg.loss;

  const std::size_t n = batch.size();
  const std::size_t hidden = config.hidden_units;
  const std::size_t width = config.layer_output_dim();
  grads->clear();
  for (const auto& p : params) grads->emplace_back(p.rows(), p.cols());

  // Head.
  const std::size_t hb = head_base(config);
  const Matrix dlogit(n, 1, std::move(lg.grad));
  gemm_tn_acc(st.head_act, dlogit, (*grads)[hb + 2]);
  column_sums_acc(dlogit, (*grads)[hb + 3].values());
  Matrix dhead(n, config.head_hidden);
  gemm_nt_acc(dlogit, params[hb + 2], dhead);
  for (std::size_t k = 0; k < dhead.size(); ++k) {
    if (!(st.head_pre.values()[k] > 0.0)) dhead.values()[k] = 0.0;
  }
  gemm_tn_acc(st.pooled, dhead, (*grads)[hb]);
  column_sums_acc(dhead, (*grads)[hb + 1].values());
  Matrix dpooled(n, 2 * width);
  gemm_nt_acc(dhead, params[hb], dpooled);

  // Pools.
  std::vector<Matrix> d_out(n);
  for (std::size_t e = 0; e < n; ++e) {
    const std::size_t len = st.lengths[e];
    d_out[e] = Matrix(len, width);
    if (len == 0) continue;
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t j = 0; j < width; ++j) {
      d_out[e](st.argmax[e * width + j], j) += dpooled(e, j);
      const double dm = dpooled(e, width + j) * inv;
      for (std::size_t t = 0; t < len; ++t) d_out[e](t, j) += dm;
    }
  }

  // Layers, top down.
  for (std::size_t l = config.layers; l-- > 0;) {
    std::vector<Matrix> d_in;
    if (l > 0) {
      d_in.resize(n);
      for (std::size_t e = 0; e < n; ++e) d_in[e] = Matrix(st.lengths[e], layer_input_dim(config, l));
    }
    for (std::size_t d = 0; d < 2; ++d) {
      const std::size_t base = direction_base(l, d);
      const DirectionParams p{params[base], params[base + 1], params[base + 2]};
      backprop_direction(p, st.traces[l][d], d_out, d * hidden, l > 0 ? &d_in : nullptr, (*grads)[base],
                         (*grads)[base + 1], (*grads)[base + 2]);
    }
    if (l > 0) d_out = std::move(d_in);
  }
  return lg.loss;
}

Matrix lstm_direction(const Matrix& w, const Matrix& u, const Matrix& b, const Matrix& x, std::size_t length,
                      bool reverse) {
  if (u.cols() != 4 * u.rows() || w.cols() != u.cols() || b.size() != u.cols()) {
    throw ShapeError("lstm_direction: inconsistent gate shapes " + w.shape_string() + ", " + u.shape_string() + ", " +
                     b.shape_string());
  }
  if (x.cols() != w.rows() || length > x.rows()) {
    throw ShapeError("lstm_direction: input " + x.shape_string() + " does not fit " + w.shape_string());
  }
  std::vector<Matrix> outputs(1, Matrix(length, u.rows()));
  const std::size_t lengths[] = {length};
  run_direction(DirectionParams{w, u, b}, std::span<const Matrix>(&x, 1), lengths, reverse, outputs, 0);
  return std::move(outputs.front());
}

}  // namespace toxfair
