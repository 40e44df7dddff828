#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "dmf/errors.hpp"
#include "dmf/synthetic.hpp"
#include "dmf/view_select.hpp"
#include "test_support.hpp"

using namespace dmf;

namespace {

CoverageMask mask_range(std::size_t n, std::size_t begin, std::size_t end) {
  CoverageMask m(n);
  for (std::size_t i = begin; i < end; ++i) m.set(i);
  return m;
}

// Re-scans every step of a plan against plain boolean vectors.
void expect_greedy_steps(const std::vector<std::vector<bool>>& sets, const std::vector<int>& ids,
                         const CoveragePlan& plan, double threshold) {
  const std::size_t n = sets.empty() ? 0 : sets[0].size();
  std::vector<bool> covered(n, false);
  std::vector<bool> used(sets.size(), false);
  std::size_t count = 0;
  for (std::size_t step = 0; step < plan.selected.size(); ++step) {
    std::size_t best_gain = 0;
    int best_id = 0;
    for (std::size_t f = 0; f < sets.size(); ++f) {
      if (used[f]) continue;
      std::size_t g = 0;
      for (std::size_t i = 0; i < n; ++i) g += sets[f][i] && !covered[i];
      if (g > best_gain || (g == best_gain && g > 0 && ids[f] < best_id)) {
        best_gain = g;
        best_id = ids[f];
      }
    }
    ASSERT_GT(best_gain, 0u);
    EXPECT_EQ(plan.selected[step], best_id) << "step " << step;
    EXPECT_EQ(plan.gain[step], best_gain);
    const std::size_t f = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), best_id) - ids.begin());
    used[f] = true;
    for (std::size_t i = 0; i < n; ++i) covered[i] = covered[i] || sets[f][i];
    count += best_gain;
    EXPECT_EQ(plan.coverage_after[step], static_cast<double>(count) / static_cast<double>(n));
    if (step > 0) { EXPECT_GT(plan.coverage_after[step], plan.coverage_after[step - 1]); }
    if (step + 1 < plan.selected.size()) { EXPECT_LT(plan.coverage_after[step], threshold); }
  }
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(plan.covered_mask.test(i), covered[i]);
}

std::vector<std::vector<bool>> to_bools(const std::vector<CoverageMask>& masks) {
  std::vector<std::vector<bool>> out;
  for (const auto& m : masks) {
    std::vector<bool> b(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) b[i] = m.test(i);
    out.push_back(b);
  }
  return out;
}

}  // namespace

TEST(Greedy, SingleFrameAboveThreshold) {
  const std::vector<CoverageMask> masks = {mask_range(100, 0, 40), mask_range(100, 3, 98), mask_range(100, 50, 100)};
  const std::vector<int> ids = {0, 1, 2};
  const auto plan = select_greedy(masks, ids, 100, {});
  EXPECT_EQ(plan.selected, std::vector<int>{1});
  EXPECT_EQ(plan.coverage_after, std::vector<double>{0.95});
  EXPECT_EQ(plan.termination, Termination::kThresholdMet);
}

TEST(Greedy, OverlappingHalvesLargerFirst) {
  // 60% and 55% with 20% overlap: union 95%.
  const std::vector<CoverageMask> masks = {mask_range(100, 40, 95), mask_range(100, 0, 60)};
  const std::vector<int> ids = {3, 8};
  const auto plan = select_greedy(masks, ids, 100, {});
  EXPECT_EQ(plan.selected, (std::vector<int>{8, 3}));
  EXPECT_EQ(plan.gain, (std::vector<std::size_t>{60, 35}));
  EXPECT_EQ(plan.termination, Termination::kThresholdMet);
  // Exhaustive oracle: no single frame reaches 90%, so two is optimal.
  for (const auto& m : masks) EXPECT_LT(m.count(), 90u);
}

TEST(Greedy, TiesGoToLowestFrameId) {
  const std::vector<CoverageMask> masks = {mask_range(10, 0, 5), mask_range(10, 5, 10), mask_range(10, 0, 5)};
  const std::vector<int> ids = {7, 4, 2};
  CoverageParams p;
  p.threshold = 1.0;
  const auto plan = select_greedy(masks, ids, 10, p);
  EXPECT_EQ(plan.selected, (std::vector<int>{2, 4}));
}

TEST(Greedy, ExhaustedAndCapped) {
  const std::vector<CoverageMask> masks = {mask_range(10, 0, 3), mask_range(10, 0, 3), mask_range(10, 3, 5),
                                           CoverageMask(10)};
  const std::vector<int> ids = {0, 1, 2, 3};
  const auto plan = select_greedy(masks, ids, 10, {});
  EXPECT_EQ(plan.selected, (std::vector<int>{0, 2}));
  EXPECT_EQ(plan.termination, Termination::kExhausted);
  for (auto g : plan.gain) EXPECT_GT(g, 0u);

  CoverageParams capped;
  capped.max_views = 1;
  const auto c = select_greedy(masks, ids, 10, capped);
  EXPECT_EQ(c.selected.size(), 1u);
  EXPECT_EQ(c.termination, Termination::kCapped);

  const std::vector<CoverageMask> empty = {CoverageMask(10)};
  const auto none = select_greedy(empty, std::vector<int>{0}, 10, {});
  EXPECT_TRUE(none.selected.empty());
  EXPECT_EQ(none.termination, Termination::kExhausted);
}

TEST(Greedy, RandomInstancesMatchRescan) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    const std::size_t frames = 1 + rng() % 12;
    std::vector<CoverageMask> masks;
    std::vector<int> ids;
    for (std::size_t f = 0; f < frames; ++f) {
      CoverageMask m(n);
      const double density = static_cast<double>(rng() % 100) / 100.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<double>(rng() % 1000) / 1000.0 < density) m.set(i);
      }
      masks.push_back(m);
      ids.push_back(static_cast<int>(f * 3 % 17));
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    masks.resize(ids.size());
    std::shuffle(ids.begin(), ids.end(), rng);
    CoverageParams p;
    p.threshold = 0.5 + static_cast<double>(rng() % 50) / 100.0;
    const auto plan = select_greedy(masks, ids, n, p);
    expect_greedy_steps(to_bools(masks), ids, plan, p.threshold);
    if (plan.termination == Termination::kThresholdMet) { EXPECT_GE(plan.coverage_after.back(), p.threshold); }
  }
}

TEST(Greedy, InputErrors) {
  const std::vector<CoverageMask> masks = {mask_range(10, 0, 3)};
  EXPECT_THROW(select_greedy({}, {}, 10, {}), InputError);
  EXPECT_THROW(select_greedy(masks, std::vector<int>{0}, 11, {}), DimensionError);
  CoverageParams bad;
  bad.threshold = 0.0;
  EXPECT_THROW(select_greedy(masks, std::vector<int>{0}, 10, bad), InputError);
  bad.threshold = 1.5;
  EXPECT_THROW(bad.validate(), InputError);
  CoverageParams tol;
  tol.depth_tolerance = 0.0;
  EXPECT_THROW(tol.validate(), InputError);
}

namespace {

// One unit cube seen from straight above; the top face's edges fall on
// half-pixel boundaries so every top-face point has an on-cube nearest pixel.
SyntheticSpec top_view_cube() {
  SyntheticSpec s;
  s.scene_id = "top";
  s.objects = {dmf::testing::box({0, 0, 0}, 1.0, 0, {100, 100, 100})};
  s.orbit.count = 0;
  s.cameras = {{{0, 0, 4.0}, {0, 0, 0}}};
  s.image = {81, 61, 59.5, 59.5};
  s.point_density = 2000;
  return s;
}

}  // namespace

TEST(FrameCovers, ZeroDepthCoversNothing) {
  Scene scene = generate_synthetic_scene(top_view_cube(), 1);
  CameraFrame f = scene.frames[0];
  std::fill(f.depth.values.begin(), f.depth.values.end(), 0.0f);
  EXPECT_EQ(frame_covers(scene.points, f, {}).count(), 0u);
}

TEST(FrameCovers, OnlyVisibleFaceFromAbove) {
  const SyntheticSpec spec = top_view_cube();
  const Scene scene = generate_synthetic_scene(spec, 1);
  CoverageParams p;
  p.depth_tolerance = 0.01;
  const CoverageMask m = frame_covers(scene.points, scene.frames[0], p);
  std::size_t top = 0;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const Eigen::Vector3d& q = scene.points.positions[i];
    // Ray-cast visibility: the exact ray through the projection stops at q.
    const auto pr = project_point(scene.frames[0].intrinsics, scene.frames[0].pose, q);
    ASSERT_TRUE(pr);
    const auto hit = cast_depth(spec, scene.frames[0].intrinsics, scene.frames[0].pose, pr->pixel);
    const bool visible = hit && std::abs(*hit - pr->depth) < 1e-9;
    EXPECT_EQ(visible, q.z() == 0.5);
    if (q.z() < 0.5 - p.depth_tolerance) { EXPECT_FALSE(m.test(i)); }
    if (visible) {
      EXPECT_TRUE(m.test(i));
      ++top;
    }
  }
  EXPECT_GT(top, 1000u);
}

TEST(FrameCovers, ToleranceMonotone) {
  const Scene scene = generate_synthetic_scene(dmf::testing::color_height_spec(), 2);
  for (const auto& f : scene.frames) {
    CoverageMask prev(scene.points.size());
    for (double tol : {0.001, 0.01, 0.05, 0.2, 1.0}) {
      CoverageParams p;
      p.depth_tolerance = tol;
      const CoverageMask m = frame_covers(scene.points, f, p);
      EXPECT_TRUE(prev.is_subset_of(m));
      prev = m;
    }
  }
}

TEST(SelectViews, DeterministicAndThreadIndependent) {
  const Scene scene = generate_synthetic_scene(dmf::testing::color_height_spec(), 3);
  CoverageParams one, many;
  one.threads = 1;
  many.threads = 4;
  const auto a = select_views(scene, one);
  const auto b = select_views(scene, many);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.covered_mask, b.covered_mask);
  EXPECT_EQ(a.params.threshold, 0.90);
  EXPECT_EQ(a.to_json().dump(), select_views(scene, one).to_json().dump());

  // Union of selected frame masks equals the plan's mask.
  CoverageMask u(scene.points.size());
  for (int id : a.selected) u |= frame_covers(scene.points, *scene.find_frame(id), one);
  EXPECT_EQ(u, a.covered_mask);
  EXPECT_EQ(u.count(), std::accumulate(a.gain.begin(), a.gain.end(), std::size_t{0}));

  Scene empty = scene;
  empty.frames.clear();
  EXPECT_THROW(select_views(empty, one), InputError);
}

TEST(PlanJson, RoundTripAndStrictness) {
  const std::vector<CoverageMask> masks = {mask_range(7, 0, 3), mask_range(7, 2, 7)};
  auto plan = select_greedy(masks, std::vector<int>{5, 9}, 7, {});
  plan.scene_id = "s";
  const Json j = plan.to_json();
  for (const char* key : {"scene_id", "params", "num_points", "selected", "gains", "coverage_after", "termination"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const CoveragePlan back = CoveragePlan::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  EXPECT_EQ(back.selected, plan.selected);
  EXPECT_EQ(back.coverage_after, plan.coverage_after);

  Json extra = j;
  extra["surprise"] = 1;
  EXPECT_THROW(CoveragePlan::from_json(extra), FormatError);
  Json ragged = j;
  ragged["gains"].push_back(1);
  EXPECT_THROW(CoveragePlan::from_json(ragged), FormatError);
  EXPECT_THROW(termination_from_string("done"), FormatError);
}
