#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dse2qa/nn/autograd.hpp"
#include "dse2qa/random.hpp"

namespace dse2qa::nn {

inline void init_uniform(Parameter& p, double limit, Rng& rng) {
  for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = uniform_real(rng, -limit, limit);
}

inline void init_normal(Parameter& p, double stddev, Rng& rng) {
  for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = normal(rng, 0.0, stddev);
}

inline void init_xavier(Parameter& p, Rng& rng) {
  init_uniform(p, std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols())), rng);
}

// y = x W + b, with W stored (in x out).
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Linear() = default;
  Linear(ParameterSet& ps, const std::string& name, Index in, Index out, Rng& rng) {
    weight = &ps.add(name + ".weight", in, out);
    bias = &ps.add(name + ".bias", 1, out, /*decay=*/false);
    init_xavier(*weight, rng);
  }

  Var operator()(Tape& t, Var x) const { return add_bias(matmul(x, t.param(*weight)), t.param(*bias)); }
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* shift = nullptr;

  LayerNorm() = default;
  LayerNorm(ParameterSet& ps, const std::string& name, Index width) {
    gain = &ps.add(name + ".gain", 1, width, /*decay=*/false);
    shift = &ps.add(name + ".shift", 1, width, /*decay=*/false);
    gain->value.setOnes();
  }

  Var operator()(Tape& t, Var x) const { return layer_norm(x, t.param(*gain), t.param(*shift)); }
};

// Single-direction LSTM; gate order (input, forget, cell, output).
struct Lstm {
  Parameter* w_input = nullptr;  // in x 4H
  Parameter* w_hidden = nullptr; // H x 4H
  Parameter* bias = nullptr;     // 1 x 4H
  Index hidden = 0;

  Lstm() = default;
  Lstm(ParameterSet& ps, const std::string& name, Index in, Index hidden_width, Rng& rng)
      : hidden(hidden_width) {
    w_input = &ps.add(name + ".w_input", in, 4 * hidden);
    w_hidden = &ps.add(name + ".w_hidden", hidden, 4 * hidden);
    bias = &ps.add(name + ".bias", 1, 4 * hidden, /*decay=*/false);
    init_xavier(*w_input, rng);
    init_xavier(*w_hidden, rng);
    bias->value.middleCols(hidden, hidden).setOnes();  // forget-gate bias
  }

  // Returns the hidden state at every position (T x H), in input order.
  Var run(Tape& t, Var inputs, bool reverse) const {
    const Index steps = inputs.rows();
    Var projected = add_bias(matmul(inputs, t.param(*w_input)), t.param(*bias));
    Var wh = t.param(*w_hidden);
    Var h = t.constant(Matrix::Zero(1, hidden));
    Var c = t.constant(Matrix::Zero(1, hidden));
    std::vector<Var> outputs(static_cast<std::size_t>(steps));
    for (Index k = 0; k < steps; ++k) {
      const Index pos = reverse ? steps - 1 - k : k;
      Var gates = add(row(projected, pos), matmul(h, wh));
      Var i = sigmoid(slice_cols(gates, 0, hidden));
      Var f = sigmoid(slice_cols(gates, hidden, hidden));
      Var g = nn::tanh(slice_cols(gates, 2 * hidden, hidden));
      Var o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
      c = add(mul(f, c), mul(i, g));
      h = mul(o, nn::tanh(c));
      outputs[static_cast<std::size_t>(pos)] = h;
    }
    return concat_rows(outputs);
  }
};

struct BiLstm {
  Lstm forward;
  Lstm backward;

  BiLstm() = default;
  BiLstm(ParameterSet& ps, const std::string& name, Index in, Index hidden, Rng& rng)
      : forward(ps, name + ".fwd", in, hidden, rng), backward(ps, name + ".bwd", in, hidden, rng) {}

  // T x 2H: forward and backward states side by side.
  Var operator()(Tape& t, Var inputs) const {
    return concat_cols({forward.run(t, inputs, false), backward.run(t, inputs, true)});
  }
};

struct MultiHeadAttention {
  Linear query, key, value, out;
  Index heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet& ps, const std::string& name, Index width, Index n_heads, Rng& rng)
      : query(ps, name + ".query", width, width, rng),
        key(ps, name + ".key", width, width, rng),
        value(ps, name + ".value", width, width, rng),
        out(ps, name + ".out", width, width, rng),
        heads(n_heads) {}

  Var operator()(Tape& t, Var x, double dropout_rate, bool training, Rng& rng) const {
    const Index width = x.cols();
    const Index dh = width / heads;
    Var q = query(t, x), k = key(t, x), v = value(t, x);
    const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> parts;
    parts.reserve(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
      Var qh = slice_cols(q, h * dh, dh);
      Var kh = slice_cols(k, h * dh, dh);
      Var vh = slice_cols(v, h * dh, dh);
      Var attn = softmax_rows(scale(matmul_nt(qh, kh), scale_factor));
      if (training) attn = dropout(attn, dropout_rate, rng);
      parts.push_back(matmul(attn, vh));
    }
    return out(t, heads == 1 ? parts.front() : concat_cols(parts));
  }
};

// Pre-norm encoder block with a GELU feed-forward.
struct TransformerBlock {
  MultiHeadAttention attention;
  LayerNorm norm1, norm2;
  Linear ffn_in, ffn_out;

  TransformerBlock() = default;
  TransformerBlock(ParameterSet& ps, const std::string& name, Index width, Index heads, Index ffn,
                   Rng& rng)
      : attention(ps, name + ".attn", width, heads, rng),
        norm1(ps, name + ".norm1", width),
        norm2(ps, name + ".norm2", width),
        ffn_in(ps, name + ".ffn_in", width, ffn, rng),
        ffn_out(ps, name + ".ffn_out", ffn, width, rng) {}

  Var operator()(Tape& t, Var x, double dropout_rate, bool training, Rng& rng) const {
    Var a = attention(t, norm1(t, x), dropout_rate, training, rng);
    if (training) a = dropout(a, dropout_rate, rng);
    x = add(x, a);
    Var f = ffn_out(t, gelu(ffn_in(t, norm2(t, x))));
    if (training) f = dropout(f, dropout_rate, rng);
    return add(x, f);
  }
};

struct TransformerShape {
  Index vocab = 0;
  Index width = 32;
  Index layers = 2;
  Index heads = 2;
  Index ffn = 64;
  Index max_positions = 128;
};

// Token + position + segment embeddings followed by a stack of blocks.
struct TransformerEncoder {
  Parameter* tokens = nullptr;
  Parameter* positions = nullptr;
  Parameter* segments = nullptr;
  LayerNorm embed_norm;
  std::vector<TransformerBlock> blocks;
  LayerNorm final_norm;
  TransformerShape shape;

  TransformerEncoder() = default;
  TransformerEncoder(ParameterSet& ps, const std::string& name, const TransformerShape& s, Rng& rng)
      : shape(s) {
    if (s.width % s.heads != 0) throw ValidationError("transformer width must be divisible by heads");
    tokens = &ps.add(name + ".tokens", s.vocab, s.width, /*decay=*/false);
    positions = &ps.add(name + ".positions", s.max_positions, s.width, /*decay=*/false);
    segments = &ps.add(name + ".segments", 2, s.width, /*decay=*/false);
    init_normal(*tokens, 0.1, rng);
    init_normal(*positions, 0.1, rng);
    init_normal(*segments, 0.1, rng);
    embed_norm = LayerNorm(ps, name + ".embed_norm", s.width);
    for (Index l = 0; l < s.layers; ++l) {
      blocks.emplace_back(ps, name + ".block" + std::to_string(l), s.width, s.heads, s.ffn, rng);
    }
    final_norm = LayerNorm(ps, name + ".final_norm", s.width);
  }

  // ids and segment ids have equal length <= max_positions. Returns T x width.
  Var operator()(Tape& t, std::span<const int> ids, std::span<const int> segment_ids, double dropout_rate,
                 bool training, Rng& rng) const {
    const auto n = ids.size();
    std::vector<int> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<int>(i);
    Var x = add(add(gather_rows(t, *tokens, ids), gather_rows(t, *positions, pos)),
                gather_rows(t, *segments, segment_ids));
    x = embed_norm(t, x);
    if (training) x = dropout(x, dropout_rate, rng);
    for (const auto& b : blocks) x = b(t, x, dropout_rate, training, rng);
    return final_norm(t, x);
  }
};

}  // namespace dse2qa::nn
