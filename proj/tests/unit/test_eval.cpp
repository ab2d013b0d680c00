#include <cmath>
#include <functional>
#include <limits>

#include "doctest.h"
#include "hcm/eval/evaluate.hpp"
#include "reference.hpp"

using namespace hcm;
using namespace hcm::eval;

namespace {

std::vector<Point2> random_path(SplitMix64& rng, std::size_t n) {
  std::vector<Point2> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)});
  return p;
}

oracle::DatasetConfig small_config() {
  oracle::DatasetConfig c;
  c.world_seed_first = 1;
  c.world_seed_last = 20;
  c.train_episodes = 40;
  c.val_seen_episodes = 20;
  c.val_unseen_episodes = 20;
  return c;
}

const oracle::Dataset& small_dataset() {
  static const oracle::Dataset d = oracle::generate_dataset(small_config());
  return d;
}

}  // namespace

TEST_CASE("navigation error hand cases") {
  world::Trajectory t;
  t.poses = {{1.0, 1.0, 0.0}, {3.0, 4.0, 0.0}};
  CHECK(nav_error(t, {0.0, 0.0}) == 5.0);
  CHECK(nav_error(t, {3.0, 4.0}) == 0.0);
  CHECK_THROWS_AS(nav_error(world::Trajectory{}, {0.0, 0.0}), MetricsError);
}

TEST_CASE("SPL hand cases") {
  CHECK(spl({{true, 10.0, 10.0}}) == 1.0);
  CHECK(spl({{true, 10.0, 20.0}}) == 0.5);
  CHECK(spl({{false, 10.0, 10.0}}) == 0.0);
  CHECK(spl({{false, 3.0, 1.0}, {true, 4.0, 8.0}}) == 0.25);
  // shorter than the geodesic still counts as 1
  CHECK(spl({{true, 10.0, 5.0}}) == 1.0);
  CHECK_THROWS_AS(spl({{true, 0.0, 1.0}}), MetricsError);
}

TEST_CASE("SPL never exceeds SR") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SplTerm> eps;
    double sr = 0.0;
    const std::size_t n = 1 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) {
      eps.push_back({rng.bernoulli(0.5), rng.uniform(0.1, 10.0), rng.uniform(0.0, 20.0)});
      sr += eps.back().success ? 1.0 : 0.0;
    }
    CHECK(spl(eps) <= sr / static_cast<double>(n) + 1e-15);
  }
}

TEST_CASE("NDTW hand cases") {
  const std::vector<Point2> path{{0, 0}, {1, 0}, {2, 1}};
  CHECK(ndtw(path, path, 3.0) == 1.0);
  CHECK(ndtw({{0.0, 0.5}}, {{0.0, 0.0}}, 2.0) == doctest::Approx(std::exp(-0.25)).epsilon(1e-15));
  CHECK_THROWS_AS(ndtw({}, path, 1.0), MetricsError);
  CHECK_THROWS_AS(ndtw(path, {}, 1.0), MetricsError);
}

TEST_CASE("DTW dynamic program equals exhaustive alignment") {
  SplitMix64 rng(11);
  for (std::size_t n = 1; n <= 8; ++n)
    for (std::size_t m = 1; m <= 8; ++m) {
      const auto r = random_path(rng, n);
      const auto q = random_path(rng, m);
      CHECK(std::abs(dtw(q, r) - reference::brute_dtw(q, r)) < 1e-9);
    }
}

TEST_CASE("NDTW is translation invariant and monotone in the threshold") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = random_path(rng, 1 + rng.below(10));
    auto r = random_path(rng, 1 + rng.below(10));
    const double base = ndtw(q, r, 2.0);
    const double dx = rng.uniform(-5, 5), dy = rng.uniform(-5, 5);
    auto qs = q, rs = r;
    for (auto& p : qs) p = {p.x + dx, p.y + dy};
    for (auto& p : rs) p = {p.x + dx, p.y + dy};
    CHECK(std::abs(ndtw(qs, rs, 2.0) - base) < 1e-12);
    CHECK(ndtw(q, r, 3.0) >= base);
    CHECK(ndtw(q, r, 1.0) <= base);
    CHECK(base > 0.0);
    CHECK(base <= 1.0);
  }
}

TEST_CASE("resampling keeps spacing and endpoints") {
  const std::vector<Point2> path{{0, 0}, {1, 0}, {1, 0.6}};
  const auto pts = resample_path(path, 0.25);
  REQUIRE(pts.size() == 8);  // 0, .25, .5, .75, 1, 1.25, 1.5 of arc, then the end at 1.6
  CHECK(pts[4].x == doctest::Approx(1.0));
  CHECK(pts[5].y == doctest::Approx(0.25));
  CHECK(pts.back().y == doctest::Approx(0.6));
  CHECK(resample_path({{2, 2}, {2, 2}}, 0.25).size() == 1);
}

TEST_CASE("trajectory length ignores rotation") {
  CHECK(path_length({{0, 0, 0}, {0, 0, 1}, {3, 4, 1}, {3, 4, -2}}) == 5.0);
}

TEST_CASE("oracle replay succeeds on every split") {
  const auto& d = small_dataset();
  OracleReplayPolicy oracle_policy;
  for (const auto& split : oracle::kSplitNames) {
    const MetricsReport r = evaluate(d, split, oracle_policy);
    CHECK(r.episodes > 0);
    CHECK(r.sr == 1.0);
    CHECK(r.ndtw > 0.95);
    CHECK(r.spl <= r.sr);
    // replay retraces the stored trace exactly
    for (const auto& e : r.per_episode) CHECK(e.collisions == 0);
  }
}

TEST_CASE("stationary policy stays at the start") {
  const auto& d = small_dataset();
  StationaryPolicy still;
  const MetricsReport r = evaluate(d, "val_seen", still);
  CHECK(r.tl == 0.0);
  double expected = 0.0;
  for (const auto* e : d.split("val_seen")) expected += std::hypot(e->start.x - e->goal.x, e->start.y - e->goal.y);
  CHECK(r.ne == doctest::Approx(expected / static_cast<double>(r.episodes)));
}

TEST_CASE("evaluation is reproducible and reports round-trip") {
  const auto& d = small_dataset();
  RandomPolicy a(d.manifest.action_histogram, d.config.rollout.kinematics);
  RandomPolicy b(d.manifest.action_histogram, d.config.rollout.kinematics);
  const auto ra = evaluate(d, "val_unseen", a);
  const auto rb = evaluate(d, "val_unseen", b);
  CHECK(io::dump_exact(ra.to_json()) == io::dump_exact(rb.to_json()));
  CHECK(io::dump_exact(MetricsReport::from_json(ra.to_json()).to_json()) == io::dump_exact(ra.to_json()));
  CHECK(ra.sr >= 0.0);
  CHECK(ra.sr <= 1.0);
  CHECK(ra.spl <= ra.sr);
  CHECK_THROWS_AS(evaluate(d, "test", a), oracle::DatasetError);
}
