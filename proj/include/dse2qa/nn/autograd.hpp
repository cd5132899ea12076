#pragma once

// Minimal reverse-mode automatic differentiation over dense Eigen matrices.
// A Tape records one forward pass (typically one example); backward() walks
// the nodes in reverse creation order. Parameter gradients are accumulated
// straight into Parameter::grad, so several tapes can contribute to one
// optimizer step.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dse2qa/errors.hpp"
#include "dse2qa/random.hpp"

namespace dse2qa::nn {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;  // subject to weight decay

  Index size() const { return value.size(); }
};

class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(std::string name, Index rows, Index cols, bool decay = true) {
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->value = Matrix::Zero(rows, cols);
    p->grad = Matrix::Zero(rows, cols);
    p->decay = decay;
    params_.push_back(std::move(p));
    return *params_.back();
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->size());
    return n;
  }

  std::vector<Matrix> snapshot() const {
    std::vector<Matrix> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
  }

  void restore(const std::vector<Matrix>& values) {
    if (values.size() != params_.size()) throw ValidationError("parameter snapshot size mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i]->value = values[i];
  }

  Parameter* find(const std::string& name) const {
    for (const auto& p : params_) {
      if (p->name == name) return p.get();
    }
    return nullptr;
  }

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad)>;

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Matrix m) {
    Node n;
    n.value = std::move(m);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  // Leaf bound to a parameter: reads its value in place and sends gradient
  // to Parameter::grad.
  Var param(Parameter& p) {
    Node n;
    n.ref = &p.value;
    n.sink = &p.grad;
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  Var push(Matrix value, bool needs_grad, Backward back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  const Matrix& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.value;
  }

  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }

  template <typename Expr>
  void accumulate(const Var& v, const Expr& delta) {
    Node& n = nodes_[v.id()];
    if (!n.needs_grad) return;
    if (n.sink) {
      *n.sink += delta;
    } else if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad += delta;
    }
  }

  // Seeds d(root)/d(root) = scale (root must be 1x1) and propagates.
  void backward(const Var& root, double scale = 1.0) {
    if (root.rows() != 1 || root.cols() != 1) throw ValidationError("backward root must be a scalar");
    Node& r = nodes_[root.id()];
    r.grad = Matrix::Constant(1, 1, scale);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.back || n.grad.size() == 0) continue;
      Matrix g = std::move(n.grad);
      n.grad.resize(0, 0);
      n.back(*this, g);
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    const Matrix* ref = nullptr;
    Matrix* sink = nullptr;
    bool needs_grad = false;
    Backward back;
  };

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// ---------------------------------------------------------------------------
// Operations

inline Var matmul(Var a, Var b) {
  Tape& t = *a.tape();
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.push(a.value() * b.value(), ng, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

// a * b^T
inline Var matmul_nt(Var a, Var b) {
  Tape& t = *a.tape();
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.push(a.value() * b.value().transpose(), ng, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value());
    if (t.needs_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

inline Var add(Var a, Var b) {
  Tape& t = *a.tape();
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.push(a.value() + b.value(), ng, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

// a (n x m) + broadcast row b (1 x m)
inline Var add_bias(Var a, Var b) {
  Tape& t = *a.tape();
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  Matrix v = a.value();
  v.rowwise() += b.value().row(0);
  return t.push(std::move(v), ng, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(b)) t.accumulate(b, g.colwise().sum());
  });
}

inline Var mul(Var a, Var b) {
  Tape& t = *a.tape();
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.push(a.value().cwiseProduct(b.value()), ng, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

inline Var scale(Var a, double s) {
  Tape& t = *a.tape();
  return t.push(a.value() * s, t.needs_grad(a), [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

inline Var relu(Var a) {
  Tape& t = *a.tape();
  return t.push(a.value().cwiseMax(0.0), t.needs_grad(a), [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((a.value().array() > 0.0).cast<double>().matrix()));
  });
}

// tanh approximation of GELU.
inline Var gelu(Var a) {
  Tape& t = *a.tape();
  static constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  static constexpr double c = 0.044715;
  const auto& x = a.value().array();
  Eigen::ArrayXXd inner = k * (x + c * x.cube());
  Eigen::ArrayXXd th = inner.tanh();
  Matrix v = (0.5 * x * (1.0 + th)).matrix();
  return t.push(std::move(v), t.needs_grad(a), [a, th](Tape& t, const Matrix& g) {
    const auto& x = a.value().array();
    Eigen::ArrayXXd d = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th.square()) * k * (1.0 + 3.0 * c * x.square());
    t.accumulate(a, (g.array() * d).matrix());
  });
}

inline Var tanh(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value().array().tanh().matrix();
  return t.push(y, t.needs_grad(a), [a, y](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

inline Matrix sigmoid_value(const Matrix& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

inline Var sigmoid(Var a) {
  Tape& t = *a.tape();
  Matrix y = sigmoid_value(a.value());
  return t.push(y, t.needs_grad(a), [a, y](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

inline Matrix softmax_rows_value(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

inline Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  Matrix y = softmax_rows_value(a.value());
  return t.push(y, t.needs_grad(a), [a, y](Tape& t, const Matrix& g) {
    Matrix gy = g.cwiseProduct(y);
    Eigen::VectorXd s = gy.rowwise().sum();
    Matrix d = gy - (y.array().colwise() * s.array()).matrix();
    t.accumulate(a, d);
  });
}

// Row-wise layer normalisation with learned gain (1 x n) and bias (1 x n).
inline Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5) {
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const Index n = xv.cols();
  Eigen::VectorXd inv_std(xv.rows());
  Matrix xhat(xv.rows(), n);
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix y = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  y.rowwise() += beta.value().row(0);
  const bool ng = t.needs_grad(x) || t.needs_grad(gamma) || t.needs_grad(beta);
  return t.push(std::move(y), ng, [x, gamma, beta, xhat, inv_std](Tape& t, const Matrix& g) {
    if (t.needs_grad(gamma)) t.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
    if (t.needs_grad(beta)) t.accumulate(beta, g.colwise().sum());
    if (t.needs_grad(x)) {
      Matrix dxhat = (g.array().rowwise() * gamma.value().row(0).array()).matrix();
      const double n = static_cast<double>(g.cols());
      Matrix dx(g.rows(), g.cols());
      for (Index r = 0; r < g.rows(); ++r) {
        const double m1 = dxhat.row(r).sum() / n;
        const double m2 = dxhat.row(r).dot(xhat.row(r)) / n;
        dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
      }
      t.accumulate(x, dx);
    }
  });
}

inline Var concat_cols(std::span<const Var> parts) {
  Tape& t = *parts.front().tape();
  Index cols = 0;
  bool ng = false;
  const Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ValidationError("concat_cols: row mismatch");
    cols += p.cols();
    ng = ng || t.needs_grad(p);
  }
  Matrix v(rows, cols);
  Index off = 0;
  for (const auto& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.push(std::move(v), ng, [ps](Tape& t, const Matrix& g) {
    Index off = 0;
    for (const auto& p : ps) {
      t.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var concat_rows(std::span<const Var> parts) {
  Tape& t = *parts.front().tape();
  Index rows = 0;
  bool ng = false;
  const Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ValidationError("concat_rows: column mismatch");
    rows += p.rows();
    ng = ng || t.needs_grad(p);
  }
  Matrix v(rows, cols);
  Index off = 0;
  for (const auto& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.push(std::move(v), ng, [ps](Tape& t, const Matrix& g) {
    Index off = 0;
    for (const auto& p : ps) {
      t.accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

inline Var slice_cols(Var a, Index start, Index n) {
  Tape& t = *a.tape();
  return t.push(a.value().middleCols(start, n), t.needs_grad(a), [a, start, n](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(start, n) = g;
    t.accumulate(a, full);
  });
}

inline Var slice_rows(Var a, Index start, Index n) {
  Tape& t = *a.tape();
  return t.push(a.value().middleRows(start, n), t.needs_grad(a), [a, start, n](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleRows(start, n) = g;
    t.accumulate(a, full);
  });
}

inline Var row(Var a, Index r) { return slice_rows(a, r, 1); }

// Embedding lookup: one output row per id. Gradient is scattered into the
// table's rows.
inline Var gather_rows(Tape& t, Parameter& table, std::span<const int> ids) {
  Matrix v(static_cast<Index>(ids.size()), table.value.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) v.row(static_cast<Index>(k)) = table.value.row(ids[k]);
  std::vector<int> idv(ids.begin(), ids.end());
  Parameter* p = &table;
  return t.push(std::move(v), true, [p, idv](Tape&, const Matrix& g) {
    for (std::size_t k = 0; k < idv.size(); ++k) p->grad.row(idv[k]) += g.row(static_cast<Index>(k));
  });
}

// Mean of the selected table rows (1 x width); a zero constant when `ids`
// is empty.
inline Var mean_of_rows(Tape& t, Parameter& table, std::span<const int> ids) {
  if (ids.empty()) return t.constant(Matrix::Zero(1, table.value.cols()));
  Matrix v = Matrix::Zero(1, table.value.cols());
  for (int id : ids) v += table.value.row(id);
  const double inv = 1.0 / static_cast<double>(ids.size());
  v *= inv;
  std::vector<int> idv(ids.begin(), ids.end());
  Parameter* p = &table;
  return t.push(std::move(v), true, [p, idv, inv](Tape&, const Matrix& g) {
    for (int id : idv) p->grad.row(id) += inv * g.row(0);
  });
}

// Inverted dropout. Identity when rate == 0.
inline Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  Tape& t = *a.tape();
  const double keep = 1.0 - rate;
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform_unit(rng) < keep ? 1.0 / keep : 0.0;
  return t.push(a.value().cwiseProduct(mask), t.needs_grad(a), [a, mask](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(mask));
  });
}

// Categorical cross-entropy of a 1 x K logit row against class `target`.
inline Var cross_entropy(Var logits, int target) {
  Tape& t = *logits.tape();
  const Matrix& z = logits.value();
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  Matrix loss = Matrix::Constant(1, 1, lse - z(0, target));
  return t.push(std::move(loss), t.needs_grad(logits), [logits, target](Tape& t, const Matrix& g) {
    Matrix d = softmax_rows_value(logits.value());
    d(0, target) -= 1.0;
    t.accumulate(logits, d * g(0, 0));
  });
}

// Binary cross-entropy on a single logit, computed stably.
inline Var bce_with_logits(Var logit, double target) {
  Tape& t = *logit.tape();
  const double z = logit.value()(0, 0);
  const double loss = std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
  return t.push(Matrix::Constant(1, 1, loss), t.needs_grad(logit), [logit, target](Tape& t, const Matrix& g) {
    const double s = sigmoid_value(logit.value())(0, 0);
    t.accumulate(logit, Matrix::Constant(1, 1, (s - target) * g(0, 0)));
  });
}

}  // namespace dse2qa::nn
