// Copyright 2026 The GCBR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Two-layer graph convolution with hand-written gradients, softmax
// cross-entropy and Adam. Everything is templated on the scalar type; the
// library itself instantiates double.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcbr/random.hpp"
#include "gcbr/types.hpp"

namespace gcbr {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Activation { None, Relu, SoftmaxRows };

template <typename Scalar>
struct GcnParams {
  Matrix<Scalar> w0;      // in_dim x hidden
  Matrix<Scalar> w1;      // hidden x out_dim
  Matrix<Scalar> head_w;  // out_dim x 1, empty when there is no scoring head
  Matrix<Scalar> head_b;  // 1 x 1, empty when there is no scoring head

  bool has_head() const { return head_w.size() > 0; }
  Eigen::Index in_dim() const { return w0.rows(); }
  Eigen::Index hidden_dim() const { return w0.cols(); }
  Eigen::Index out_dim() const { return w1.cols(); }

  template <typename F>
  void visit(F&& f) {
    f("w0", w0);
    f("w1", w1);
    if (has_head()) {
      f("head_w", head_w);
      f("head_b", head_b);
    }
  }
  template <typename F>
  void visit(F&& f) const {
    f("w0", w0);
    f("w1", w1);
    if (has_head()) {
      f("head_w", head_w);
      f("head_b", head_b);
    }
  }

  /// Same shapes, all zeros.
  GcnParams zeros_like() const {
    GcnParams z;
    z.w0 = Matrix<Scalar>::Zero(w0.rows(), w0.cols());
    z.w1 = Matrix<Scalar>::Zero(w1.rows(), w1.cols());
    z.head_w = Matrix<Scalar>::Zero(head_w.rows(), head_w.cols());
    z.head_b = Matrix<Scalar>::Zero(head_b.rows(), head_b.cols());
    return z;
  }

  void validate() const {
    if (w0.cols() != w1.rows()) {
      throw ShapeError("gcn params: w0 is " + std::to_string(w0.rows()) + "x" + std::to_string(w0.cols()) +
                       " but w1 is " + std::to_string(w1.rows()) + "x" + std::to_string(w1.cols()));
    }
    if (has_head() && (head_w.rows() != w1.cols() || head_w.cols() != 1 || head_b.size() != 1)) {
      throw ShapeError("gcn params: head must be " + std::to_string(w1.cols()) + "x1 with a scalar bias");
    }
  }
};

template <typename Scalar>
Matrix<Scalar> glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix<Scalar> w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return w;
}

/// Glorot-uniform weights; the optional head starts with zero bias.
template <typename Scalar>
GcnParams<Scalar> init_gcn(Eigen::Index in_dim, Eigen::Index hidden, Eigen::Index out_dim, bool with_head,
                           Rng& rng) {
  GcnParams<Scalar> p;
  p.w0 = glorot_uniform<Scalar>(in_dim, hidden, rng);
  p.w1 = glorot_uniform<Scalar>(hidden, out_dim, rng);
  if (with_head) {
    p.head_w = glorot_uniform<Scalar>(out_dim, 1, rng);
    p.head_b = Matrix<Scalar>::Zero(1, 1);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

/// Intermediate values of one forward pass, kept for the backward pass.
template <typename Scalar>
struct GcnForward {
  Matrix<Scalar> propagated_input;  // A * input
  Matrix<Scalar> pre_hidden;        // A * input * w0
  Matrix<Scalar> hidden;            // relu(pre_hidden)
  Matrix<Scalar> propagated_hidden; // A * hidden
  Matrix<Scalar> logits;            // A * hidden * w1
  Matrix<Scalar> output;            // activation(logits)
  Activation activation = Activation::None;
};

template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Scalar mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> apply_activation(const Matrix<Scalar>& x, Activation act) {
  switch (act) {
    case Activation::Relu:
      return x.cwiseMax(Scalar(0));
    case Activation::SoftmaxRows:
      return softmax_rows(x);
    case Activation::None:
      break;
  }
  return x;
}

/// Forward pass when `A * input` is already known (e.g. fixed node features).
template <typename Scalar>
GcnForward<Scalar> gcn_forward_propagated(const Sparse<Scalar>& norm_adj, Matrix<Scalar> propagated_input,
                                          const GcnParams<Scalar>& params, Activation final_activation) {
  params.validate();
  if (propagated_input.cols() != params.in_dim()) {
    throw ShapeError("gcn_forward: input has " + std::to_string(propagated_input.cols()) +
                     " columns but w0 expects " + std::to_string(params.in_dim()));
  }
  if (norm_adj.cols() != propagated_input.rows()) {
    throw ShapeError("gcn_forward: adjacency is " + std::to_string(norm_adj.rows()) + "x" +
                     std::to_string(norm_adj.cols()) + " but input has " +
                     std::to_string(propagated_input.rows()) + " rows");
  }
  GcnForward<Scalar> f;
  f.activation = final_activation;
  f.propagated_input = std::move(propagated_input);
  f.pre_hidden = f.propagated_input * params.w0;
  f.hidden = f.pre_hidden.cwiseMax(Scalar(0));
  f.propagated_hidden = norm_adj * f.hidden;
  f.logits = f.propagated_hidden * params.w1;
  f.output = apply_activation(f.logits, final_activation);
  return f;
}

/// hidden = relu(A X W0); output = act(A hidden W1).
template <typename Scalar>
GcnForward<Scalar> gcn_forward(const Sparse<Scalar>& norm_adj, const Matrix<Scalar>& input,
                               const GcnParams<Scalar>& params, Activation final_activation) {
  if (norm_adj.rows() != norm_adj.cols() || norm_adj.cols() != input.rows()) {
    throw ShapeError("gcn_forward: adjacency is " + std::to_string(norm_adj.rows()) + "x" +
                     std::to_string(norm_adj.cols()) + " but input has " + std::to_string(input.rows()) +
                     " rows");
  }
  return gcn_forward_propagated<Scalar>(norm_adj, norm_adj * input, params, final_activation);
}

/// Gradients of w0 and w1 given d(loss)/d(output). The returned params carry no
/// head. A ReLU at exactly zero passes no gradient.
template <typename Scalar>
GcnParams<Scalar> gcn_backward(const Sparse<Scalar>& norm_adj, const GcnForward<Scalar>& cache,
                               const GcnParams<Scalar>& params, const Matrix<Scalar>& grad_output) {
  if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols()) {
    throw ShapeError("gcn_backward: grad_output is " + std::to_string(grad_output.rows()) + "x" +
                     std::to_string(grad_output.cols()) + " but output is " +
                     std::to_string(cache.output.rows()) + "x" + std::to_string(cache.output.cols()));
  }
  Matrix<Scalar> grad_logits;
  switch (cache.activation) {
    case Activation::None:
      grad_logits = grad_output;
      break;
    case Activation::Relu:
      grad_logits = (cache.logits.array() > Scalar(0)).select(grad_output.array(), Scalar(0)).matrix();
      break;
    case Activation::SoftmaxRows: {
      const ColVector<Scalar> dots = grad_output.cwiseProduct(cache.output).rowwise().sum();
      grad_logits = cache.output.cwiseProduct(grad_output - dots.replicate(1, grad_output.cols()));
      break;
    }
  }
  GcnParams<Scalar> grads;
  grads.w1 = cache.propagated_hidden.transpose() * grad_logits;
  const Matrix<Scalar> grad_prop_hidden = grad_logits * params.w1.transpose();
  const Matrix<Scalar> grad_hidden = norm_adj.transpose() * grad_prop_hidden;
  const Matrix<Scalar> grad_pre_hidden =
      (cache.pre_hidden.array() > Scalar(0)).select(grad_hidden.array(), Scalar(0)).matrix();
  grads.w0 = cache.propagated_input.transpose() * grad_pre_hidden;
  return grads;
}

// ---------------------------------------------------------------------------
// Loss

template <typename Scalar>
struct LossAndGrad {
  Scalar loss{};
  Matrix<Scalar> grad;
};

/// Mean over masked rows of -log softmax(logits)[label]. Rows outside the mask
/// get zero gradient.
template <typename Scalar>
LossAndGrad<Scalar> softmax_cross_entropy(const Matrix<Scalar>& logits, std::span<const int> labels,
                                          std::span<const int> row_mask) {
  if (row_mask.empty()) throw std::invalid_argument("softmax_cross_entropy: empty row mask");
  LossAndGrad<Scalar> out;
  out.grad = Matrix<Scalar>::Zero(logits.rows(), logits.cols());
  const Scalar inv_count = Scalar(1) / static_cast<Scalar>(row_mask.size());
  Scalar total(0);
  for (int r : row_mask) {
    if (r < 0 || r >= logits.rows()) throw std::out_of_range("softmax_cross_entropy: row outside logits");
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= logits.cols()) throw std::out_of_range("softmax_cross_entropy: label out of range");
    const Scalar mx = logits.row(r).maxCoeff();
    const auto shifted = (logits.row(r).array() - mx).eval();
    const Scalar log_z = std::log(shifted.exp().sum());
    total += log_z - shifted(y);
    out.grad.row(r) = (shifted - log_z).exp().matrix() * inv_count;
    out.grad(r, y) -= inv_count;
  }
  out.loss = total * inv_count;
  return out;
}

// ---------------------------------------------------------------------------
// Adam

template <typename Scalar>
struct AdamState {
  std::vector<Matrix<Scalar>> first_moment;
  std::vector<Matrix<Scalar>> second_moment;
  std::int64_t step_count = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState for_params(const GcnParams<Scalar>& params) {
    AdamState s;
    params.visit([&](const char*, const Matrix<Scalar>& t) {
      s.first_moment.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
      s.second_moment.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
    });
    return s;
  }
};

/// One bias-corrected Adam update. `grads` must have the shapes of `params`
/// (a head-less gradient is accepted for a head-less parameter set only).
template <typename Scalar>
void adam_step(GcnParams<Scalar>& params, const GcnParams<Scalar>& grads, AdamState<Scalar>& state, Scalar lr) {
  std::vector<const Matrix<Scalar>*> g;
  grads.visit([&](const char*, const Matrix<Scalar>& t) { g.push_back(&t); });
  std::size_t n_params = 0;
  params.visit([&](const char*, const Matrix<Scalar>&) { ++n_params; });
  if (g.size() != n_params || state.first_moment.size() != n_params) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  ++state.step_count;
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step_count));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step_count));
  std::size_t k = 0;
  params.visit([&](const char* name, Matrix<Scalar>& p) {
    const Matrix<Scalar>& gk = *g[k];
    if (gk.rows() != p.rows() || gk.cols() != p.cols()) {
      throw ShapeError(std::string("adam_step: gradient shape mismatch for ") + name);
    }
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    m = state.beta1 * m + (Scalar(1) - state.beta1) * gk;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * gk.cwiseProduct(gk);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
    ++k;
  });
}

template <typename Scalar>
void accumulate(GcnParams<Scalar>& into, const GcnParams<Scalar>& add, Scalar scale = Scalar(1)) {
  std::vector<const Matrix<Scalar>*> src;
  add.visit([&](const char*, const Matrix<Scalar>& t) { src.push_back(&t); });
  std::size_t k = 0;
  into.visit([&](const char*, Matrix<Scalar>& t) { t += scale * *src[k++]; });
}

// ---------------------------------------------------------------------------
// Checkpoints: {"w0": {"shape": [r, c], "data": [...]}, ...}

template <typename Scalar>
nlohmann::json matrix_to_json(const Matrix<Scalar>& m) {
  std::vector<Scalar> data(m.data(), m.data() + m.size());
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

template <typename Scalar>
Matrix<Scalar> matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<Scalar>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ShapeError("checkpoint: array data does not match its shape");
  }
  Matrix<Scalar> m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

template <typename Scalar>
nlohmann::json params_to_json(const GcnParams<Scalar>& p) {
  nlohmann::json j = nlohmann::json::object();
  p.visit([&](const char* name, const Matrix<Scalar>& t) { j[name] = matrix_to_json(t); });
  return j;
}

template <typename Scalar>
GcnParams<Scalar> params_from_json(const nlohmann::json& j) {
  GcnParams<Scalar> p;
  p.w0 = matrix_from_json<Scalar>(j.at("w0"));
  p.w1 = matrix_from_json<Scalar>(j.at("w1"));
  if (j.contains("head_w")) {
    p.head_w = matrix_from_json<Scalar>(j.at("head_w"));
    p.head_b = matrix_from_json<Scalar>(j.at("head_b"));
  }
  p.validate();
  return p;
}

}  // namespace gcbr
