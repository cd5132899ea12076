#include <catch_amalgamated.hpp>

#include "dse2qa/nn/layers.hpp"
#include "dse2qa/nn/optim.hpp"
#include "gradcheck.hpp"

using namespace dse2qa;
using namespace dse2qa::nn;

namespace {

constexpr double kTol = 1e-4;

Parameter& randn(ParameterSet& ps, const std::string& name, Index r, Index c, Rng& rng) {
  auto& p = ps.add(name, r, c);
  init_normal(p, 1.0, rng);
  return p;
}

// Reduces any matrix to a scalar with fixed, uneven weights so that every
// output entry matters.
Var weighted_sum(Tape& t, Var x) {
  Matrix w(x.cols(), 1);
  for (Index i = 0; i < w.rows(); ++i) w(i, 0) = 0.3 + 0.17 * static_cast<double>(i);
  Var col = matmul(x, t.constant(w));
  Matrix ones = Matrix::Ones(1, x.rows());
  return matmul(t.constant(ones), col);
}

}  // namespace

TEST_CASE("primitive ops pass gradient checks") {
  Rng rng = make_rng(1, "gradcheck");
  ParameterSet ps;
  auto& a = randn(ps, "a", 3, 4, rng);
  auto& b = randn(ps, "b", 4, 5, rng);
  auto& c = randn(ps, "c", 3, 5, rng);
  auto& d = randn(ps, "d", 2, 4, rng);
  auto& bias = randn(ps, "bias", 1, 5, rng);
  auto& gamma = randn(ps, "gamma", 1, 5, rng);
  auto& beta = randn(ps, "beta", 1, 5, rng);

  const std::vector<std::pair<std::string, std::function<Var(Tape&)>>> cases = {
      {"matmul", [&](Tape& t) { return weighted_sum(t, matmul(t.param(a), t.param(b))); }},
      {"matmul_nt", [&](Tape& t) { return weighted_sum(t, matmul_nt(t.param(a), t.param(d))); }},
      {"add_bias+mul", [&](Tape& t) { return weighted_sum(t, mul(add_bias(t.param(c), t.param(bias)), t.param(c))); }},
      {"tanh", [&](Tape& t) { return weighted_sum(t, nn::tanh(t.param(c))); }},
      {"sigmoid", [&](Tape& t) { return weighted_sum(t, sigmoid(t.param(c))); }},
      {"gelu", [&](Tape& t) { return weighted_sum(t, gelu(t.param(c))); }},
      {"relu", [&](Tape& t) { return weighted_sum(t, relu(t.param(c))); }},
      {"softmax_rows", [&](Tape& t) { return weighted_sum(t, softmax_rows(t.param(c))); }},
      {"layer_norm", [&](Tape& t) { return weighted_sum(t, layer_norm(t.param(c), t.param(gamma), t.param(beta))); }},
      {"concat/slice", [&](Tape& t) {
         Var x = concat_cols({t.param(a), t.param(c)});
         Var y = concat_rows(std::vector<Var>{slice_cols(x, 2, 5), row(t.param(c), 1)});
         return weighted_sum(t, scale(y, -1.5));
       }},
      {"cross_entropy", [&](Tape& t) { return cross_entropy(row(t.param(c), 2), 3); }},
      {"bce", [&](Tape& t) {
         Var z = slice_cols(row(t.param(c), 0), 1, 1);
         return add(bce_with_logits(z, 1.0), bce_with_logits(scale(z, 3.0), 0.0));
       }},
  };
  for (const auto& [name, f] : cases) {
    INFO(name);
    const auto r = gradcheck::check(ps, f);
    CHECK(r.worst < kTol);
  }
}

TEST_CASE("embedding lookups pass gradient checks") {
  Rng rng = make_rng(2, "gradcheck");
  ParameterSet ps;
  auto& table = randn(ps, "table", 6, 4, rng);
  const std::vector<int> ids = {1, 3, 3, 0};
  const std::vector<int> empty;
  auto r = gradcheck::check(ps, [&](Tape& t) { return weighted_sum(t, gather_rows(t, table, ids)); });
  CHECK(r.worst < kTol);
  r = gradcheck::check(ps, [&](Tape& t) {
    return weighted_sum(t, concat_cols({mean_of_rows(t, table, ids), mean_of_rows(t, table, empty)}));
  });
  CHECK(r.worst < kTol);
}

TEST_CASE("layers pass gradient checks at width 8") {
  Rng rng = make_rng(3, "gradcheck");
  Rng drop(0);
  ParameterSet ps;
  auto& x = randn(ps, "x", 5, 8, rng);
  SECTION("lstm") {
    BiLstm lstm(ps, "bilstm", 8, 8, rng);
    CHECK(gradcheck::check(ps, [&](Tape& t) { return weighted_sum(t, lstm(t, t.param(x))); }).worst < kTol);
  }
  SECTION("attention block") {
    TransformerBlock block(ps, "block", 8, 2, 8, rng);
    CHECK(gradcheck::check(ps, [&](Tape& t) { return weighted_sum(t, block(t, t.param(x), 0.0, false, drop)); }).worst < kTol);
  }
}

TEST_CASE("every model head passes a full gradient check at width 8") {
  for (auto kind : {models::ModelKind::kEntityPrior, models::ModelKind::kContext, models::ModelKind::kCombined,
                    models::ModelKind::kTransformerCls, models::ModelKind::kDse2qa}) {
    INFO(models::to_string(kind));
    const auto r = gradcheck::check_model(kind);
    INFO("worst " << r.worst << " at " << r.where);
    CHECK(r.scalars > 0);
    CHECK(r.worst < kTol);
  }
}

TEST_CASE("dropout is identity at rate zero and unbiased otherwise") {
  Tape t;
  Rng rng = make_rng(4, "dropout");
  Var x = t.constant(Matrix::Ones(200, 50));
  CHECK(dropout(x, 0.0, rng).value() == x.value());
  const double mean = dropout(x, 0.3, rng).value().mean();
  CHECK(mean == Catch::Approx(1.0).margin(0.03));
}

TEST_CASE("gradient check report", "[.report]") {
  for (auto kind : {models::ModelKind::kEntityPrior, models::ModelKind::kContext, models::ModelKind::kCombined,
                    models::ModelKind::kTransformerCls, models::ModelKind::kDse2qa}) {
    const auto r = gradcheck::check_model(kind);
    std::cout << models::to_string(kind) << " " << r.worst << " " << r.where << " " << r.scalars << "\n";
  }
}
