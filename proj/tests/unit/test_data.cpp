/**
 * Copyright 2026 The himrae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "himrae/batch.hpp"
#include "himrae/data.hpp"
#include "himrae/errors.hpp"

using namespace himrae;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "himrae_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

SyntheticConfig small_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.n_scenes = 10;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("normalizer maps the range onto [-1, 1]") {
  const Normalizer n{-4.0, 6.0, 10.0, 12.0};
  CHECK(n.normalize_x(1.0) == 0.0);
  CHECK(n.normalize_y(11.0) == 0.0);
  CHECK(n.normalize_x(-4.0) == -1.0);
  CHECK(n.normalize_x(6.0) == 1.0);
  CHECK(n.normalize_y(10.0) == -1.0);
  CHECK(n.normalize_y(12.0) == 1.0);
  CHECK(n.denormalize_x(n.normalize_x(2.5)) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("normalizer rejects a degenerate range") {
  const Normalizer n{1.0, 1.0, 0.0, 2.0};
  CHECK_THROWS_AS(n.validate(), ConfigError);
}

TEST_CASE("normalize refuses points outside the bounds") {
  const auto raw = generate_raw(small_config(1));
  Normalizer n = Normalizer::fit(raw);
  n.max_x -= 1e-3;
  auto all = [&] {
    for (const auto& s : raw) normalize(s, n);
  };
  CHECK_THROWS_AS(all(), DataError);
}

TEST_CASE("normalize and denormalize round trip") {
  const auto raw = generate_raw(small_config(2));
  const Normalizer n = Normalizer::fit(raw).widened(0.25);
  const Scene back = denormalize(normalize(raw[3], n), n);
  for (std::size_t k = 0; k < back.positions.size(); ++k) {
    CHECK(back.positions[k] == doctest::Approx(raw[3].positions[k]).epsilon(1e-13));
  }
}

TEST_CASE("normalizer sidecar round trip is exact") {
  const Normalizer n{-1.0 / 3.0, 7.123456789012345, -2e-7, 1e5};
  const auto p = temp_file("norm.txt");
  n.save(p);
  const Normalizer m = Normalizer::load(p);
  CHECK(m.min_x == n.min_x);
  CHECK(m.max_x == n.max_x);
  CHECK(m.min_y == n.min_y);
  CHECK(m.max_y == n.max_y);
}

TEST_CASE("window plans") {
  const auto a = plan_windows(5, 10, 5);
  CHECK(a.windows == 3);
  CHECK(a.residual == 0);
  const auto b = plan_windows(8, 12, 4);
  CHECK(b.windows == 5);
  CHECK(b.residual == 0);
  const auto c = plan_windows(5, 12, 5);
  CHECK(c.windows == 3);
  CHECK(c.residual == 2);
  CHECK_THROWS_AS(plan_windows(5, 10, 6), ConfigError);
  CHECK_THROWS_AS(plan_windows(5, 10, 0), ConfigError);
}

TEST_CASE("each step is driven by the previous window's graph") {
  const auto p = plan_windows(5, 10, 5);
  for (std::size_t t = 1; t < 5; ++t) CHECK(p.graph_for_step(t) == 0);
  for (std::size_t t = 5; t < 10; ++t) CHECK(p.graph_for_step(t) == 0);
  for (std::size_t t = 10; t < 15; ++t) CHECK(p.graph_for_step(t) == 1);
  const auto r = plan_windows(5, 12, 5);
  CHECK(r.graph_for_step(16) == 2);
}

TEST_CASE("csv: empty file after the header gives no scenes") {
  const auto p = temp_file("empty.csv");
  write_text(p, "scene_id,agent_id,category,t,x,y\n");
  CHECK(load_csv(p, 3).empty());
}

TEST_CASE("csv: save then load returns equal scenes") {
  const auto raw = generate_raw(small_config(3));
  const auto p = temp_file("round.csv");
  save_csv(raw, p);
  auto back = load_csv(p, 3);
  REQUIRE(back.size() == raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    Scene expected = raw[k];
    expected.truth_graph.reset();
    CHECK(back[k] == expected);
  }
}

TEST_CASE("csv: a missing timestep is malformed data") {
  const auto p = temp_file("gap.csv");
  std::string text = "scene_id,agent_id,category,t,x,y\n";
  for (int a = 0; a < 2; ++a)
    for (int t = 0; t < 5; ++t) {
      if (a == 1 && t == 3) continue;
      text += "s0," + std::to_string(a) + ",0," + std::to_string(t) + ",0.1,0.2\n";
    }
  write_text(p, text);
  CHECK_THROWS_AS(load_csv(p, 3), DataError);
}

TEST_CASE("csv: unknown category is a config error") {
  const auto p = temp_file("cat.csv");
  write_text(p, "scene_id,agent_id,category,t,x,y\ns0,0,3,0,0,0\ns0,1,0,0,0,0\n");
  CHECK_THROWS_AS(load_csv(p, 3), ConfigError);
}

TEST_CASE("truth graph edge list round trip") {
  const auto raw = generate_raw(small_config(4));
  const auto p = temp_file("graphs.csv");
  save_truth_graphs(raw, p);
  auto back = raw;
  for (auto& s : back) s.truth_graph.reset();
  load_truth_graphs(back, p);
  for (std::size_t k = 0; k < raw.size(); ++k) CHECK(back[k].truth_graph == raw[k].truth_graph);
}

TEST_CASE("synthetic: no edges gives straight damped lines") {
  SyntheticConfig c = small_config(5);
  c.edge_probability = 0.0;
  for (const auto& s : generate_raw(c)) {
    for (auto e : *s.truth_graph) CHECK(e == 0);
    for (std::size_t i = 0; i < s.num_agents(); ++i) {
      const double dx0 = s.x(i, 1) - s.x(i, 0), dy0 = s.y(i, 1) - s.y(i, 0);
      for (std::size_t t = 1; t + 1 < s.steps; ++t) {
        const double dx = s.x(i, t + 1) - s.x(i, t), dy = s.y(i, t + 1) - s.y(i, t);
        CHECK(std::abs(dx0 * dy - dy0 * dx) < 1e-12);
        CHECK(dx * dx + dy * dy <= dx0 * dx0 + dy0 * dy0 + 1e-15);
      }
    }
  }
}

TEST_CASE("synthetic: symmetric coupling without damping conserves momentum") {
  SyntheticConfig c;
  c.categories = 2;
  c.coupling = {0.7, 1.3, 1.3, 0.4};
  c.damping = {0.0, 0.0};
  c.finalize();
  RngStream rng(6, 0);
  const Scene s = simulate_scene(c, "m", {0, 1}, {0, 1, 1, 0}, rng);
  // Sum of per-frame displacements is dt * substeps * total velocity.
  auto total = [&](std::size_t t, bool x) {
    double v = 0.0;
    for (std::size_t i = 0; i < 2; ++i) v += x ? s.x(i, t + 1) - s.x(i, t) : s.y(i, t + 1) - s.y(i, t);
    return v;
  };
  for (std::size_t t = 1; t + 1 < s.steps; ++t) {
    CHECK(std::abs(total(t, true) - total(0, true)) < 1e-9);
    CHECK(std::abs(total(t, false) - total(0, false)) < 1e-9);
  }
}

TEST_CASE("synthetic: same seed gives identical scenes") {
  CHECK(generate_raw(small_config(7)) == generate_raw(small_config(7)));
  CHECK_FALSE(generate_raw(small_config(7)) == generate_raw(small_config(8)));
}

TEST_CASE("synthetic: unstable settings raise a numerical error") {
  SyntheticConfig c = small_config(9);
  c.coupling = std::vector<double>(9, 5000.0);
  c.edge_probability = 1.0;
  c.dt = 1.0;
  CHECK_THROWS_AS(generate_raw(c), NumericalError);
}

TEST_CASE("split sizes follow the ratios and cover every scene once") {
  SyntheticConfig c = small_config(10);
  c.n_scenes = 200;
  const auto raw = generate_raw(c);
  const auto split = split_dataset(raw, 0.65, 0.10, 1);
  CHECK(split.train.size() == 130);
  CHECK(split.val.size() == 20);
  CHECK(split.test.size() == 50);
  std::vector<std::string> ids;
  for (const auto* part : {&split.train, &split.val, &split.test})
    for (const auto& s : *part) ids.push_back(s.scene_id);
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
  CHECK(ids.size() == 200);
}

TEST_CASE("batch stacking") {
  const auto raw = generate_raw(small_config(11));
  const Batch b = Batch::from_scenes({&raw[0], &raw[1]}, 3);
  CHECK(b.num_nodes() == raw[0].num_agents() + raw[1].num_agents());
  CHECK(b.truth.size() == raw[0].steps);
  const std::size_t n0 = raw[0].num_agents();
  CHECK(b.truth[4].at(n0 + 1, 1) == raw[1].y(1, 4));
  std::size_t rows = 0;
  for (const auto& r : b.category_rows) rows += r.size();
  CHECK(rows == b.num_nodes());
  CHECK_THROWS_AS(Batch::from_scene(raw[0], 1), ConfigError);
}
