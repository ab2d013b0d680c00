#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "hcm/autodiff/grad_check.hpp"
#include "hcm/policy/train.hpp"
#include "model_cases.hpp"

using namespace hcm;
using namespace hcm::policy;
using world::HighAction;
using reference::Fixture;
using reference::make_fixture;
using reference::tiny_config;

namespace {

world::Observation random_observation(SplitMix64& rng) {
  world::Observation o;
  o.channels = 10;
  o.rgb_like.assign(world::kGridCells * 10, 0.0);
  o.depth_like.resize(world::kGridCells);
  for (std::size_t i = 0; i < world::kGridCells; ++i) {
    o.rgb_like[i * 10 + rng.below(10)] = 1.0;
    o.depth_like[i] = rng.uniform();
  }
  return o;
}

void zero(ad::Parameter* p) {
  for (double& v : p->value()) v = 0.0;
}

}  // namespace

TEST_CASE("variant names round-trip") {
  for (Variant v : all_variants()) CHECK(parse_variant(to_string(v)) == v);
  CHECK(all_variants().size() == 7);
  CHECK_THROWS_AS(parse_variant("hcm_plus"), nn::ConfigError);
}

TEST_CASE("instruction encoding pads, names unknown tokens and is pure") {
  Model m(Variant::Hcm, tiny_config(), 3);
  ad::Graph g;
  const Tensor pads = m.encode_instruction(g, {});
  REQUIRE(pads.shape() == ad::Shape{24, 8});
  const auto& table = m.parts().tokens.table->value();
  for (std::size_t r = 0; r < 24; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(pads[r * 8 + c] == table[c]);
  const Tensor a = m.encode_instruction(g, {5, 7, 9});
  const Tensor b = m.encode_instruction(g, {5, 7, 9});
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  try {
    m.encode_instruction(g, {3, 99});
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
  // longer inputs are truncated to 24
  CHECK(m.encode_instruction(g, std::vector<int>(30, 2)).shape() == ad::Shape{24, 8});
}

TEST_CASE("instruction gradient reaches exactly the looked-up rows") {
  Model m(Variant::Hcm, tiny_config(), 4);
  const std::vector<int> tokens{4, 4, 11, 30};
  SplitMix64 rng(9);
  std::vector<double> w(24 * 8);
  for (double& v : w) v = rng.uniform(-1, 1);
  auto loss = [&](ad::Graph& g) {
    const Tensor e = m.encode_instruction(g, tokens);
    return ad::sum(ad::mul(ad::tanh(e), g.constant({24, 8}, w)));
  };
  ad::Graph g;
  g.backward(loss(g));
  g.accumulate_parameter_grads();
  const auto& grad = m.parts().tokens.table->grad();
  for (std::size_t row = 0; row < 43; ++row) {
    double norm = 0.0;
    for (std::size_t c = 0; c < 8; ++c) norm += std::abs(grad[row * 8 + c]);
    const bool used = row == 0 || row == 4 || row == 11 || row == 30;
    CHECK((norm > 0.0) == used);
  }
  m.store().zero_grad();
  CHECK(ad::grad_check_parameters(m.store(), loss) < 1e-6);
}

TEST_CASE("high-level probabilities sum to one and zero head is uniform") {
  SplitMix64 rng(2);
  for (Variant v : {Variant::Hcm, Variant::HcmEarlyFusion, Variant::HcmNoVision, Variant::HcmFlattened}) {
    Model m(v, tiny_config(), 5);
    ad::Graph g;
    const auto ctx = m.prepare(g, {1, 2, 3});
    auto state = m.initial_state(g);
    const StepOutput out = m.step(g, ctx, random_observation(rng), {}, state);
    REQUIRE(out.high_probs.valid());
    double s = 0.0;
    for (double p : out.high_probs.data()) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));

    zero(m.parts().action_head.weight);
    zero(m.parts().action_head.bias);
    ad::Graph g2;
    const auto ctx2 = m.prepare(g2, {1, 2, 3});
    auto state2 = m.initial_state(g2);
    const StepOutput flat = m.step(g2, ctx2, random_observation(rng), {}, state2);
    for (double p : flat.high_probs.data()) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("zero low-level heads give the neutral command") {
  SplitMix64 rng(8);
  for (Variant v : all_variants()) {
    Model m(v, tiny_config(), 6);
    for (auto* p : {m.parts().velocity_head.weight, m.parts().velocity_head.bias, m.parts().stop_head.weight,
                    m.parts().stop_head.bias})
      zero(p);
    ad::Graph g;
    const auto ctx = m.prepare(g, {7});
    auto state = m.initial_state(g);
    const StepOutput out = m.step(g, ctx, random_observation(rng), {}, state);
    CHECK(out.velocity[0] == 0.0);
    CHECK(out.velocity[1] == 0.0);
    CHECK(out.stop.item() == 0.5);
  }
}

TEST_CASE("outputs stay in range for random parameters") {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const Variant v = all_variants()[static_cast<std::size_t>(trial) % 7];
    Model m(v, tiny_config(), static_cast<std::uint64_t>(trial));
    const double spread = rng.uniform(0.1, 20.0);
    for (auto* p : m.store().all())
      for (double& x : p->value()) x = rng.uniform(-spread, spread);
    ad::Graph g;
    const auto ctx = m.prepare(g, {1, 5, 9});
    auto state = m.initial_state(g);
    StepInput in;
    in.prev_low = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const StepOutput out = m.step(g, ctx, random_observation(rng), in, state);
    for (double x : out.velocity.data()) {
      CHECK(x >= -1.0);
      CHECK(x <= 1.0);
    }
    CHECK(out.stop.item() >= 0.0);
    CHECK(out.stop.item() <= 1.0);
    if (out.high_probs.valid()) {
      double s = 0.0;
      for (double p : out.high_probs.data()) {
        CHECK(p >= 0.0);
        s += p;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    if (out.progress.valid()) CHECK((out.progress.item() >= 0.0 && out.progress.item() <= 1.0));
  }
}

TEST_CASE("velocity scaling maps the head range onto the limits") {
  const auto lo = denormalize_action(-1.0, -1.0, 0.5, 2.0);
  const auto hi = denormalize_action(1.0, 1.0, 0.5, 2.0);
  CHECK(lo.v == 0.0);
  CHECK(lo.omega == -2.0);
  CHECK(hi.v == 0.5);
  CHECK(hi.omega == 2.0);
  const auto n = normalize_action({0.2, -0.5}, 0.5, 2.0);
  const auto back = denormalize_action(n[0], n[1], 0.5, 2.0);
  CHECK(back.v == doctest::Approx(0.2));
  CHECK(back.omega == doctest::Approx(-0.5));
}

TEST_CASE("joint loss hand cases") {
  ad::Graph g;
  StepOutput out;
  out.high_probs = g.constant({1, 4}, std::vector<double>{0.5, 0.2, 0.2, 0.1});
  out.velocity = g.constant({1, 2}, std::vector<double>{0.3, -0.2});
  out.stop = g.constant({1, 1}, std::vector<double>{0.5});
  StepTarget y;
  y.high = HighAction::Forward;
  y.velocity = {0.2, -0.2};
  y.stop = 0.0;
  const double expected = 0.5 * -std::log(0.5) + 0.5 * (0.01 + -std::log(0.5));
  CHECK(joint_loss({out}, {y}, 0.5).item() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.6981).epsilon(1e-4));

  // λ = 1 ignores every low-level target
  StepTarget other = y;
  other.velocity = {-1.0, 1.0};
  other.stop = 1.0;
  CHECK(joint_loss({out}, {y}, 1.0).item() == joint_loss({out}, {other}, 1.0).item());

  StepOutput perfect;
  perfect.high_probs = g.constant({1, 4}, std::vector<double>{1.0, 0.0, 0.0, 0.0});
  perfect.velocity = g.constant({1, 2}, std::vector<double>{0.2, -0.2});
  perfect.stop = g.constant({1, 1}, std::vector<double>{0.0});
  CHECK(joint_loss({perfect, perfect}, {y, y}, 0.5).item() < 1e-6);

  CHECK_THROWS_AS(joint_loss({out}, {y}, 1.5), nn::ConfigError);
  CHECK_THROWS_AS(joint_loss({out}, {y}, -0.1), nn::ConfigError);
}

TEST_CASE("progress head adds half the low-level weight") {
  ad::Graph g;
  StepOutput out;
  out.velocity = g.constant({1, 2}, std::vector<double>{0.0, 0.0});
  out.stop = g.constant({1, 1}, std::vector<double>{0.5});
  StepTarget y;
  y.velocity = {0.0, 0.0};
  y.stop = 1.0;
  y.progress = 0.5;
  const double base = step_loss(out, y, 0.2).item();
  out.progress = g.constant({1, 1}, std::vector<double>{0.9});
  CHECK(step_loss(out, y, 0.2).item() == doctest::Approx(base + 0.5 * 0.8 * 0.16).epsilon(1e-12));
}

TEST_CASE("end-to-end gradient over a two-step episode matches finite differences") {
  for (Variant v : all_variants())
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const double err = reference::model_gradient_error(v, seed);
      CHECK_MESSAGE(err < 1e-4, to_string(v) << " seed " << seed << " rel err " << err);
    }
}

TEST_CASE("sub-goal embedding is the only path from high to low policy") {
  SplitMix64 rng(4);
  Model m(Variant::Hcm, tiny_config(), 12);
  zero(m.parts().subgoal.table);
  const auto obs = random_observation(rng);
  auto run = [&] {
    ad::Graph g;
    const auto ctx = m.prepare(g, {3, 4});
    auto state = m.initial_state(g);
    std::vector<double> out;
    for (int t = 0; t < 3; ++t) {
      const StepOutput o = m.step(g, ctx, obs, {}, state);  // inference hand-off: argmax sub-goal
      out.insert(out.end(), o.velocity.data().begin(), o.velocity.data().end());
      out.push_back(o.stop.item());
    }
    return out;
  };
  const auto before = run();
  std::vector<ad::Parameter*> high{m.parts().tokens.table, m.parts().prev_action.table, m.parts().high_lstm.w_input,
                                   m.parts().high_lstm.w_hidden, m.parts().high_lstm.bias,
                                   m.parts().action_head.weight, m.parts().action_head.bias,
                                   m.parts().rgb_proj.weight, m.parts().depth_proj.weight};
  for (auto* p : high)
    for (double& x : p->value()) x += rng.uniform(-2.0, 2.0);
  CHECK(run() == before);
}

TEST_CASE("closed-loop driver is deterministic and survives a checkpoint round trip") {
  const Fixture f = make_fixture(3, 2);
  Model m(Variant::Hcm, tiny_config(), 77);
  ModelPolicy a(m);
  const world::EpisodeLimits limits{60, {}};
  const auto t1 = world::run_episode(f.w, a, f.e.start, f.e.instruction_tokens(), limits, 5);
  const auto t2 = world::run_episode(f.w, a, f.e.start, f.e.instruction_tokens(), limits, 5);
  REQUIRE(t1.poses.size() == t2.poses.size());
  for (std::size_t i = 0; i < t1.poses.size(); ++i) {
    CHECK(t1.poses[i].x == t2.poses[i].x);
    CHECK(t1.poses[i].theta == t2.poses[i].theta);
  }

  const auto dir = std::filesystem::temp_directory_path() / "hcm_policy_ckpt";
  std::filesystem::remove_all(dir);
  CheckpointInfo info;
  info.kind = Variant::Hcm;
  info.model = tiny_config();
  info.curve.push_back({1, 0.5, 0.1, 0.05, 2.0});
  save_model(m, info, dir);
  const LoadedModel loaded = load_model(dir);
  CHECK(loaded.info.config_hash() == info.config_hash());
  CHECK(loaded.info.curve.size() == 1);
  ModelPolicy b(*loaded.model);
  const auto t3 = world::run_episode(f.w, b, f.e.start, f.e.instruction_tokens(), limits, 5);
  REQUIRE(t3.poses.size() == t1.poses.size());
  for (std::size_t i = 0; i < t1.poses.size(); ++i) CHECK(t3.poses[i].y == t1.poses[i].y);
  std::filesystem::remove_all(dir);
}

TEST_CASE("teacher forcing feeds ground-truth previous actions") {
  const Fixture f = make_fixture(2, 4);
  const ModelConfig c = tiny_config();
  const StepInput first = teacher_input(f.e, 0, c);
  CHECK(first.prev_high == kStartAction);
  CHECK(first.prev_low[0] == -1.0);
  const StepInput third = teacher_input(f.e, 2, c);
  CHECK(third.prev_high == static_cast<std::size_t>(f.e.high_actions[1]));
  CHECK(*third.subgoal == f.e.high_actions[2]);
  CHECK(third.prev_low[1] == doctest::Approx(f.e.low_actions[1].omega / c.omega_max));
}

TEST_CASE("previous-action dropout is range checked and zero keeps plain teacher forcing") {
  oracle::DatasetConfig dc;
  dc.world_seed_last = 10;
  dc.train_episodes = 2;
  dc.val_seen_episodes = 1;
  dc.val_unseen_episodes = 1;
  const oracle::Dataset d = oracle::generate_dataset(dc);
  const auto eps = d.split("train");
  const auto run = [&](double p) {
    TrainConfig tc;
    tc.prev_action_dropout = p;
    Model m(Variant::Hcm, tiny_config(), 4);
    nn::Adam adam;
    return train_epoch(m, adam, d, eps, tc, 0);
  };
  const double plain = run(0.0);
  CHECK(plain == run(0.0));
  CHECK(run(1.0) != plain);
  CHECK_THROWS_AS(run(1.5), nn::ConfigError);
  CHECK_THROWS_AS(run(-0.1), nn::ConfigError);
}
