#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dse2qa/nn/autograd.hpp"

namespace dse2qa::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;  // AdamW when true
};

// Adam, or AdamW with decoupled weight decay. Parameters flagged
// decay=false (biases, norms, embeddings) are never decayed.
class Adam {
 public:
  Adam(ParameterSet& params, AdamOptions opts) : params_(params), opts_(opts) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
      v_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter& p = params_[i];
      Matrix g = p.grad;
      if (!opts_.decoupled && opts_.weight_decay > 0.0 && p.decay) g += opts_.weight_decay * p.value;
      m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
      v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g.cwiseProduct(g);
      if (opts_.decoupled && opts_.weight_decay > 0.0 && p.decay) p.value *= (1.0 - lr * opts_.weight_decay);
      p.value.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + opts_.epsilon);
    }
  }

  const AdamOptions& options() const { return opts_; }
  long steps() const { return t_; }

 private:
  ParameterSet& params_;
  AdamOptions opts_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

// Linear warmup over the first `warmup` steps, then linear decay to zero at
// `total`. With warmup == 0 and decay disabled the rate is constant.
struct LinearSchedule {
  double base = 1e-3;
  long warmup = 0;
  long total = 0;
  bool decay = false;

  double at(long step) const {
    if (warmup > 0 && step < warmup) return base * static_cast<double>(step + 1) / static_cast<double>(warmup);
    if (!decay || total <= warmup) return base;
    const double frac = static_cast<double>(total - step) / static_cast<double>(total - warmup);
    return base * std::max(0.0, frac);
  }
};

}  // namespace dse2qa::nn
