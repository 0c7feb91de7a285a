#pragma once

// Dense layers with hand-written backward passes, row-softmax, Adam.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace cf {

enum class Activation { identity, relu, tanh };

struct DenseLayer {
  Matrix w;  // in x out
  std::vector<double> b;
  Activation act = Activation::identity;

  int in_dim() const { return w.rows; }
  int out_dim() const { return w.cols; }
};

// Glorot-uniform weights, zero biases.
inline DenseLayer make_dense(int in, int out, Activation act, Rng& rng) {
  DenseLayer l;
  l.w = Matrix(in, out);
  l.b.assign(static_cast<size_t>(out), 0.0);
  l.act = act;
  double bound = std::sqrt(6.0 / (in + out));
  for (double& v : l.w.data) v = rng.uniform(-bound, bound);
  return l;
}

inline void apply_activation(Activation act, std::span<double> y) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (double& v : y)
        if (v < 0.0) v = 0.0;
      break;
    case Activation::tanh:
      for (double& v : y) v = std::tanh(v);
      break;
  }
}

// Derivative of the activation expressed through its output value.
inline double activation_slope(Activation act, double y) {
  switch (act) {
    case Activation::relu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - y * y;
    default:
      return 1.0;
  }
}

inline void dense_forward_row(const DenseLayer& l, std::span<const double> x,
                              std::span<double> y) {
  if (static_cast<int>(x.size()) != l.in_dim() || static_cast<int>(y.size()) != l.out_dim())
    throw std::invalid_argument("dense_forward_row: shape mismatch");
  for (int j = 0; j < l.out_dim(); ++j) y[j] = l.b[static_cast<size_t>(j)];
  for (int k = 0; k < l.in_dim(); ++k) {
    double xk = x[static_cast<size_t>(k)];
    if (xk == 0.0) continue;
    const double* wrow = l.w.data.data() + static_cast<size_t>(k) * l.w.cols;
    for (int j = 0; j < l.out_dim(); ++j) y[j] += xk * wrow[j];
  }
  apply_activation(l.act, y);
}

// Accumulates into dx and grads; scratch must hold out_dim values.
inline void dense_backward_row(const DenseLayer& l, std::span<const double> x,
                               std::span<const double> y, std::span<const double> dy,
                               std::span<double> dx, DenseLayer& grads,
                               std::span<double> scratch) {
  for (int j = 0; j < l.out_dim(); ++j)
    scratch[j] = dy[static_cast<size_t>(j)] * activation_slope(l.act, y[static_cast<size_t>(j)]);
  for (int j = 0; j < l.out_dim(); ++j) grads.b[static_cast<size_t>(j)] += scratch[j];
  for (int k = 0; k < l.in_dim(); ++k) {
    double xk = x[static_cast<size_t>(k)];
    const double* wrow = l.w.data.data() + static_cast<size_t>(k) * l.w.cols;
    double* grow = grads.w.data.data() + static_cast<size_t>(k) * grads.w.cols;
    double acc = 0.0;
    for (int j = 0; j < l.out_dim(); ++j) {
      grow[j] += xk * scratch[j];
      acc += scratch[j] * wrow[j];
    }
    dx[static_cast<size_t>(k)] += acc;
  }
}

inline Matrix dense_forward(const DenseLayer& l, const Matrix& x) {
  if (x.cols != l.in_dim()) throw std::invalid_argument("dense_forward: shape mismatch");
  Matrix y(x.rows, l.out_dim());
  for (int i = 0; i < x.rows; ++i) dense_forward_row(l, x.row(i), y.row(i));
  return y;
}

inline DenseLayer zero_like(const DenseLayer& l) {
  DenseLayer g;
  g.w = Matrix(l.w.rows, l.w.cols);
  g.b.assign(l.b.size(), 0.0);
  g.act = l.act;
  return g;
}

// Returns dx; x and y are the values from the forward pass.
inline Matrix dense_backward(const DenseLayer& l, const Matrix& x, const Matrix& y,
                             const Matrix& dy, DenseLayer& grads) {
  if (dy.rows != x.rows || dy.cols != l.out_dim())
    throw std::invalid_argument("dense_backward: shape mismatch");
  Matrix dx(x.rows, x.cols);
  std::vector<double> scratch(static_cast<size_t>(l.out_dim()));
  for (int i = 0; i < x.rows; ++i)
    dense_backward_row(l, x.row(i), y.row(i), dy.row(i), dx.row(i), grads, scratch);
  return dx;
}

inline void softmax_row(std::span<double> row) {
  double m = row[0];
  for (double v : row)
    if (v > m) m = v;
  double s = 0.0;
  for (double& v : row) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : row) v /= s;
}

inline void softmax_rows(Matrix& m) {
  for (int i = 0; i < m.rows; ++i) softmax_row(m.row(i));
}

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Descent step: params -= lr * mhat / (sqrt(vhat) + eps).
inline void adam_step(std::span<double> params, std::span<const double> grad,
                      AdamState& st, double lr) {
  if (params.size() != grad.size() || params.size() != st.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  ++st.step;
  double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    double g = grad[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    params[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
  }
}

}  // namespace cf
