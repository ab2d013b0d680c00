#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hcm/autodiff/grad_check.hpp"
#include "hcm/nn/attention.hpp"
#include "hcm/nn/lstm.hpp"
#include "hcm/nn/optim.hpp"
#include "hcm/nn/tbptt.hpp"
#include "hcm/nn/transformer.hpp"
#include "block_cases.hpp"

using namespace hcm;
using namespace hcm::nn;
using ad::Shape;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

using Matrix = std::vector<std::vector<double>>;

Matrix to_matrix(std::span<const double> flat, std::size_t rows, std::size_t cols) {
  Matrix m(rows, std::vector<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = flat[i * cols + j];
  return m;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t p = 0; p < b.size(); ++p) c[i][j] += a[i][p] * b[p][j];
  return c;
}

// Plain loop version of multi-head attention, written independently of the
// graph code.
Matrix naive_attention(const Matrix& q, const Matrix& k, const Matrix& v, const MultiHeadAttentionParams& p) {
  const std::size_t d = p.d_model, dk = p.d_k;
  Matrix joined(q.size(), std::vector<double>(p.heads * dk, 0.0));
  for (std::size_t h = 0; h < p.heads; ++h) {
    const Matrix qh = naive_matmul(q, to_matrix(p.w_query[h]->value(), d, dk));
    const Matrix kh = naive_matmul(k, to_matrix(p.w_key[h]->value(), d, dk));
    const Matrix vh = naive_matmul(v, to_matrix(p.w_value[h]->value(), d, dk));
    for (std::size_t i = 0; i < q.size(); ++i) {
      std::vector<double> score(k.size());
      double mx = -1e300;
      for (std::size_t j = 0; j < k.size(); ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dk; ++c) s += qh[i][c] * kh[j][c];
        score[j] = s / std::sqrt(static_cast<double>(dk));
        mx = std::max(mx, score[j]);
      }
      double z = 0.0;
      for (auto& s : score) z += (s = std::exp(s - mx));
      for (std::size_t j = 0; j < k.size(); ++j)
        for (std::size_t c = 0; c < dk; ++c) joined[i][h * dk + c] += score[j] / z * vh[j][c];
    }
  }
  return naive_matmul(joined, to_matrix(p.w_out->value(), p.heads * dk, d));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("attention requires divisible head count") {
  ParameterStore store;
  SplitMix64 rng(1);
  CHECK_THROWS_AS(MultiHeadAttentionParams(store, "bad", 10, 4, rng), ConfigError);
  MultiHeadAttentionParams ok(store, "ok", 256, 4, rng);
  CHECK(ok.d_k == 64);
}

TEST_CASE("attention with a single key ignores the queries") {
  ParameterStore store;
  SplitMix64 rng(2);
  MultiHeadAttentionParams p(store, "mha", 8, 2, rng);
  Graph g;
  Tensor kv = g.constant({1, 8}, random_values(8, 3));
  Tensor out_a = multi_head_attention(g, g.constant({2, 8}, random_values(16, 4)), kv, kv, p);
  Tensor out_b = multi_head_attention(g, g.constant({2, 8}, random_values(16, 5, -9, 9)), kv, kv, p);
  const Matrix expected = naive_attention(to_matrix(random_values(16, 4), 2, 8), to_matrix(kv.data(), 1, 8),
                                          to_matrix(kv.data(), 1, 8), p);
  for (std::size_t i = 0; i < out_a.size(); ++i) {
    CHECK(std::abs(out_a[i] - out_b[i]) < 1e-12);
    CHECK(std::abs(out_a[i] - expected[i / 8][i % 8]) < 1e-12);
  }
}

TEST_CASE("identical keys receive uniform weights") {
  ParameterStore store;
  SplitMix64 rng(3);
  MultiHeadAttentionParams p(store, "mha", 8, 4, rng);
  Graph g;
  const auto row = random_values(8, 6);
  std::vector<double> kv;
  for (int i = 0; i < 5; ++i) kv.insert(kv.end(), row.begin(), row.end());
  std::vector<Tensor> weights;
  Tensor keys = g.constant({5, 8}, kv);
  multi_head_attention(g, g.constant({3, 8}, random_values(24, 7)), keys, keys, p, &weights);
  REQUIRE(weights.size() == 4);
  for (const auto& w : weights)
    for (double v : w.data()) CHECK(std::abs(v - 0.2) < 1e-12);
}

TEST_CASE("attention matches a brute-force loop on a 2-query/3-key case") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ParameterStore store;
    SplitMix64 rng(seed);
    MultiHeadAttentionParams p(store, "mha", 8, 4, rng);
    const auto q = random_values(16, seed + 10), k = random_values(24, seed + 11), v = random_values(24, seed + 12);
    Graph g;
    std::vector<Tensor> weights;
    Tensor out = multi_head_attention(g, g.constant({2, 8}, q), g.constant({3, 8}, k), g.constant({3, 8}, v), p,
                                      &weights);
    const Matrix expected = naive_attention(to_matrix(q, 2, 8), to_matrix(k, 3, 8), to_matrix(v, 3, 8), p);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(out[i * 8 + j] - expected[i][j]) < 1e-10);
    for (const auto& w : weights)
      for (std::size_t r = 0; r < 2; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < 3; ++c) total += w[r * 3 + c];
        CHECK(std::abs(total - 1.0) < 1e-9);
      }
  }
}

TEST_CASE("cross-attend: degenerate feed-forward keeps a finite [1xd] context") {
  ParameterStore store;
  SplitMix64 rng(4);
  CrossModalEncoder enc(store, "rgb", 1, 8, 4, 16, rng);
  for (auto* prm : {enc.blocks[0].ff_in.weight, enc.blocks[0].ff_in.bias, enc.blocks[0].ff_out.weight,
                    enc.blocks[0].ff_out.bias})
    std::fill(prm->value().begin(), prm->value().end(), 0.0);
  Graph g;
  const auto v = random_values(8, 9);
  std::vector<double> grid;
  for (int i = 0; i < 49; ++i) grid.insert(grid.end(), v.begin(), v.end());
  Tensor ctx = transformer_cross_attend(g, g.constant({5, 8}, random_values(40, 10)), g.constant({49, 8}, grid), enc);
  CHECK(ctx.shape() == Shape{1, 8});
  for (double x : ctx.data()) CHECK(std::isfinite(x));
}

TEST_CASE("cross-attend is invariant to swapping identical key positions") {
  ParameterStore store;
  SplitMix64 rng(5);
  CrossModalEncoder enc(store, "rgb", 1, 8, 4, 16, rng);
  auto grid = random_values(49 * 8, 11);
  // rows 3 and 17 carry equal content
  std::copy_n(grid.begin() + 3 * 8, 8, grid.begin() + 17 * 8);
  auto swapped = grid;
  for (std::size_t j = 0; j < 8; ++j) std::swap(swapped[3 * 8 + j], swapped[17 * 8 + j]);
  auto swapped_other = grid;  // swap 3 and 17 after also swapping 0 and 5 contents
  Graph g;
  const auto q = random_values(6 * 8, 12);
  Tensor a = transformer_cross_attend(g, g.constant({6, 8}, q), g.constant({49, 8}, grid), enc);
  Tensor b = transformer_cross_attend(g, g.constant({6, 8}, q), g.constant({49, 8}, swapped), enc);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-10);
  // keys are a set: any permutation leaves the pooled context unchanged
  for (std::size_t j = 0; j < 8; ++j) std::swap(swapped_other[0 * 8 + j], swapped_other[48 * 8 + j]);
  Tensor c = transformer_cross_attend(g, g.constant({6, 8}, q), g.constant({49, 8}, swapped_other), enc);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(a[i] - c[i]) < 1e-10);
}

TEST_CASE("cross-attend equals its sublayers composed by hand") {
  ParameterStore store;
  SplitMix64 rng(6);
  CrossModalEncoder enc(store, "depth", 1, 8, 2, 12, rng);
  const auto& blk = enc.blocks[0];
  Graph g;
  Tensor q = g.constant({4, 8}, random_values(32, 13));
  Tensor kv = g.constant({49, 8}, random_values(49 * 8, 14));
  Tensor ctx = transformer_cross_attend(g, q, kv, enc);

  Tensor att = multi_head_attention(g, q, kv, kv, blk.attention);
  Tensor z1 = ad::layer_norm(ad::add(q, att), g.param(*blk.norm_attention.gain), g.param(*blk.norm_attention.bias));
  Tensor hidden = ad::relu(ad::linear(z1, g.param(*blk.ff_in.weight), g.param(*blk.ff_in.bias)));
  Tensor ff = ad::linear(hidden, g.param(*blk.ff_out.weight), g.param(*blk.ff_out.bias));
  Tensor z2 = ad::layer_norm(ad::add(z1, ff), g.param(*blk.norm_ff.gain), g.param(*blk.norm_ff.bias));
  for (std::size_t j = 0; j < 8; ++j) {
    double m = 0.0;
    for (std::size_t r = 0; r < 4; ++r) m += z2[r * 8 + j];
    CHECK(std::abs(ctx[j] - m / 4.0) < 1e-12);
  }

  // precomputed query projection gives the same result
  auto projected = project_queries(g, q, blk.attention);
  Tensor ctx2 = transformer_cross_attend(g, q, kv, enc, &projected);
  for (std::size_t j = 0; j < 8; ++j) CHECK(ctx2[j] == ctx[j]);
}

TEST_CASE("positional encoding") {
  const auto pe = positional_encoding(24, 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(pe[i] == (i % 2 == 0 ? 0.0 : 1.0));
  for (double v : pe) CHECK(std::abs(v) <= 1.0);
  CHECK(pe[16] == doctest::Approx(0.841471).epsilon(1e-6));
  CHECK(pe[16] == std::sin(1.0));
  CHECK_THROWS_AS(positional_encoding(4, 7), ConfigError);
}

TEST_CASE("lstm: zero parameters give zero output") {
  ParameterStore store;
  SplitMix64 rng(7);
  LstmParams p(store, "lstm", 3, 4, rng, 0.0);
  for (auto* prm : store.all()) std::fill(prm->value().begin(), prm->value().end(), 0.0);
  Graph g;
  LstmState s = lstm_step(g, g.constant({1, 3}, {0.3, -2.0, 1.0}), zero_state(g, 4), p);
  for (double v : s.hidden.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm: saturated forget gate preserves the cell") {
  ParameterStore store;
  SplitMix64 rng(8);
  LstmParams p(store, "lstm", 3, 4, rng);
  for (auto* prm : store.all()) std::fill(prm->value().begin(), prm->value().end(), 0.0);
  for (std::size_t j = 4; j < 8; ++j) p.bias->value()[j] = 40.0;
  Graph g;
  const std::vector<double> c0{0.5, -1.5, 2.0, 0.1};
  LstmState s{g.constant({1, 4}, {0.1, 0.2, 0.3, 0.4}), g.constant({1, 4}, c0)};
  for (int t = 0; t < 20; ++t) s = lstm_step(g, g.constant({1, 3}, random_values(3, static_cast<std::uint64_t>(t))), s, p);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(s.cell[j] - c0[j]) < 1e-6);
}

TEST_CASE("lstm step matches a gate-by-gate computation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParameterStore store;
    SplitMix64 rng(seed + 20);
    LstmParams p(store, "lstm", 3, 4, rng);
    const auto x = random_values(3, seed), h0 = random_values(4, seed + 1), c0 = random_values(4, seed + 2);
    Graph g;
    LstmState s = lstm_step(g, g.constant({1, 3}, x), {g.constant({1, 4}, h0), g.constant({1, 4}, c0)}, p);
    const auto& wi = p.w_input->value();
    const auto& wh = p.w_hidden->value();
    const auto& b = p.bias->value();
    for (std::size_t j = 0; j < 4; ++j) {
      auto pre = [&](std::size_t gate) {
        const std::size_t col = gate * 4 + j;
        double z = b[col];
        for (std::size_t k = 0; k < 3; ++k) z += x[k] * wi[k * 16 + col];
        for (std::size_t k = 0; k < 4; ++k) z += h0[k] * wh[k * 16 + col];
        return z;
      };
      const double i = sigmoid(pre(0)), f = sigmoid(pre(1)), cand = std::tanh(pre(2)), o = sigmoid(pre(3));
      const double c = f * c0[j] + i * cand;
      CHECK(std::abs(s.cell[j] - c) < 1e-10);
      CHECK(std::abs(s.hidden[j] - o * std::tanh(c)) < 1e-10);
    }
  }
}

TEST_CASE("blocks pass parameter gradient checks") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    INFO("seed " << seed);
    CHECK(reference::block_gradient_error(seed) < 1e-4);
  }
}

TEST_CASE("optimizer updates") {
  ParameterStore store;
  ad::Parameter& p = store.create_constant("p", {3}, 1.0);
  SUBCASE("zero gradient leaves parameters unchanged") {
    Adam adam;
    adam.step(store);
    for (double v : p.value()) CHECK(v == 1.0);
    sgd_step(store, 0.5);
    for (double v : p.value()) CHECK(v == 1.0);
  }
  SUBCASE("sgd with lr 1 subtracts the gradient") {
    p.grad() = {0.5, -1.0, 2.0};
    sgd_step(store, 1.0);
    CHECK(p.value() == std::vector<double>{0.5, 2.0, -1.0});
    for (double g : p.grad()) CHECK(g == 0.0);
  }
  SUBCASE("first adam step follows the bias-corrected formula") {
    ad::Parameter& s = store.create_constant("s", {1}, 2.0);
    s.grad() = {1.0};
    Adam adam;
    adam.step(store);
    const double m_hat = (0.1 * 1.0) / (1.0 - 0.9);
    const double v_hat = (0.001 * 1.0) / (1.0 - 0.999);
    CHECK(s.value()[0] == doctest::Approx(2.0 - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-15));
    CHECK(std::abs(s.value()[0] - (2.0 - 1e-3 / (1.0 + 1e-8))) < 1e-15);
  }
  SUBCASE("non-finite gradient aborts with the parameter name") {
    p.grad()[1] = std::numeric_limits<double>::quiet_NaN();
    Adam adam;
    try {
      adam.step(store);
      FAIL("expected NonFiniteGradient");
    } catch (const NonFiniteGradient& e) {
      CHECK(std::string(e.what()).find("'p'") != std::string::npos);
    }
  }
}

namespace {

// Toy recurrence h_t = tanh(x_t·W + h_{t-1}·U + a_t·k) where the injection
// parameter k is used at step 0 only; loss_t = Σ h_t ⊙ c from `first_loss` on.
struct ToyRnn {
  ParameterStore store;
  ad::Parameter* w;
  ad::Parameter* u;
  ad::Parameter* k;
  std::vector<std::vector<double>> inputs;
  std::vector<double> readout;
  std::size_t first_loss = 0;

  explicit ToyRnn(std::size_t steps, std::uint64_t seed) {
    SplitMix64 rng(seed);
    w = &store.create_uniform("w", {3, 4}, rng);
    u = &store.create_uniform("u", {4, 4}, rng);
    k = &store.create_uniform("k", {1, 4}, rng);
    for (std::size_t t = 0; t < steps; ++t) inputs.push_back(random_values(3, seed + t + 1));
    readout = random_values(4, seed + 99);
  }

  Tensor advance(Graph& g, std::size_t t, Tensor h) const {
    Tensor pre = ad::add(ad::matmul(g.constant({1, 3}, inputs[t]), g.param(*w)), ad::matmul(h, g.param(*u)));
    if (t == 0) pre = ad::add(pre, g.param(*k));
    return ad::tanh(pre);
  }

  Tensor loss_at(Graph& g, std::size_t t, Tensor h) const {
    if (t < first_loss) return {};
    return ad::sum(ad::mul(h, g.constant({1, 4}, readout)));
  }

  std::vector<double> tbptt_grads(std::size_t truncation) {
    store.zero_grad();
    CarriedState init{{{1, 4}}, {std::vector<double>(4, 0.0)}};
    TbpttHooks hooks;
    hooks.step = [&](Graph& g, std::size_t t, std::vector<Tensor>& state) {
      state[0] = advance(g, t, state[0]);
      return loss_at(g, t, state[0]);
    };
    tbptt_train(inputs.size(), truncation, init, hooks);
    return flat_grads();
  }

  std::vector<double> flat_grads() const {
    std::vector<double> out;
    for (const auto* p : store.all()) out.insert(out.end(), p->grad().begin(), p->grad().end());
    return out;
  }
};

}  // namespace

TEST_CASE("tbptt without truncation equals full backpropagation") {
  ToyRnn rnn(6, 3);
  const auto truncated = rnn.tbptt_grads(100);
  rnn.store.zero_grad();
  {
    Graph g;
    Tensor h = g.constant({1, 4}, std::vector<double>(4, 0.0));
    Tensor total;
    for (std::size_t t = 0; t < 6; ++t) {
      h = rnn.advance(g, t, h);
      Tensor l = rnn.loss_at(g, t, h);
      total = total.valid() ? ad::add(total, l) : l;
    }
    g.backward(total);
    g.accumulate_parameter_grads();
  }
  const auto full = rnn.flat_grads();
  CHECK(ad::max_relative_error(truncated, full) < 1e-8);
}

TEST_CASE("tbptt with truncation 1 cuts the gradient to earlier steps") {
  ToyRnn rnn(2, 4);
  rnn.first_loss = 1;  // only step 2 carries loss
  rnn.tbptt_grads(1);
  for (double v : rnn.k->grad()) CHECK(v == 0.0);
  rnn.tbptt_grads(2);
  double mag = 0.0;
  for (double v : rnn.k->grad()) mag += std::abs(v);
  CHECK(mag > 1e-6);
}

TEST_CASE("tbptt gradient equals the sum of independently replayed windows") {
  ToyRnn rnn(5, 5);
  const auto truncated = rnn.tbptt_grads(2);
  rnn.store.zero_grad();
  const std::vector<std::pair<std::size_t, std::size_t>> windows{{0, 2}, {2, 4}, {4, 5}};
  for (auto [begin, end] : windows) {
    // replay the prefix without recording gradients
    std::vector<double> h0(4, 0.0);
    for (std::size_t t = 0; t < begin; ++t) {
      Graph scratch;
      Tensor h = rnn.advance(scratch, t, scratch.constant({1, 4}, h0));
      h0.assign(h.data().begin(), h.data().end());
    }
    Graph g;
    Tensor h = g.constant({1, 4}, h0);
    Tensor total;
    for (std::size_t t = begin; t < end; ++t) {
      h = rnn.advance(g, t, h);
      Tensor l = rnn.loss_at(g, t, h);
      total = total.valid() ? ad::add(total, l) : l;
    }
    g.backward(total);
    g.accumulate_parameter_grads();
  }
  CHECK(ad::max_relative_error(truncated, rnn.flat_grads()) < 1e-12);
  CHECK_THROWS_AS(tbptt_train(3, 0, {}, {}), ad::ContractError);
}
