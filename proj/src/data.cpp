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

#include "himrae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "himrae/errors.hpp"

namespace himrae {

void Scene::validate() const {
  const std::size_t n = num_agents();
  if (n < 2) throw DataError("scene " + scene_id + ": needs at least 2 agents");
  if (positions.size() != n * steps * 2) throw DataError("scene " + scene_id + ": position array size mismatch");
  if (truth_graph && truth_graph->size() != n * n) throw DataError("scene " + scene_id + ": truth graph size mismatch");
}

bool operator==(const Scene& a, const Scene& b) {
  return a.scene_id == b.scene_id && a.categories == b.categories && a.steps == b.steps &&
         a.positions == b.positions && a.truth_graph == b.truth_graph;
}

void Normalizer::validate() const {
  if (!(max_x > min_x) || !(max_y > min_y)) {
    throw ConfigError("normalizer: degenerate range (max must exceed min on both axes)");
  }
}

Normalizer Normalizer::fit(const std::vector<Scene>& scenes) {
  Normalizer n{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : scenes)
    for (std::size_t i = 0; i < s.num_agents(); ++i)
      for (std::size_t t = 0; t < s.steps; ++t) {
        n.min_x = std::min(n.min_x, s.x(i, t));
        n.max_x = std::max(n.max_x, s.x(i, t));
        n.min_y = std::min(n.min_y, s.y(i, t));
        n.max_y = std::max(n.max_y, s.y(i, t));
      }
  n.validate();
  return n;
}

void Normalizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "min_x = " << min_x << "\nmax_x = " << max_x << "\nmin_y = " << min_y << "\nmax_y = " << max_y << "\n";
}

Normalizer Normalizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open normalization file " + path.string());
  std::map<std::string, double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    try {
      values[key] = std::stod(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw DataError("normalization file: bad value for " + key);
    }
  }
  Normalizer n;
  for (auto [key, field] : {std::pair{"min_x", &n.min_x}, std::pair{"max_x", &n.max_x},
                            std::pair{"min_y", &n.min_y}, std::pair{"max_y", &n.max_y}}) {
    auto it = values.find(key);
    if (it == values.end()) throw DataError(std::string("normalization file: missing ") + key);
    *field = it->second;
  }
  n.validate();
  return n;
}

Scene normalize(const Scene& raw, const Normalizer& normalizer) {
  normalizer.validate();
  Scene out = raw;
  const double tol_x = 1e-12 * (normalizer.max_x - normalizer.min_x);
  const double tol_y = 1e-12 * (normalizer.max_y - normalizer.min_y);
  for (std::size_t i = 0; i < raw.num_agents(); ++i)
    for (std::size_t t = 0; t < raw.steps; ++t) {
      const double x = raw.x(i, t), y = raw.y(i, t);
      if (x < normalizer.min_x - tol_x || x > normalizer.max_x + tol_x || y < normalizer.min_y - tol_y ||
          y > normalizer.max_y + tol_y) {
        throw DataError("scene " + raw.scene_id + ": position outside normalization bounds");
      }
      out.x(i, t) = normalizer.normalize_x(x);
      out.y(i, t) = normalizer.normalize_y(y);
    }
  return out;
}

Scene denormalize(const Scene& scene, const Normalizer& normalizer) {
  normalizer.validate();
  Scene out = scene;
  for (std::size_t i = 0; i < scene.num_agents(); ++i)
    for (std::size_t t = 0; t < scene.steps; ++t) {
      out.x(i, t) = normalizer.denormalize_x(scene.x(i, t));
      out.y(i, t) = normalizer.denormalize_y(scene.y(i, t));
    }
  return out;
}

std::size_t WindowPlan::graph_for_step(std::size_t t) const {
  const std::size_t w = window_of(t);
  return w == 0 ? 0 : std::min(w - 1, windows - 1);
}

WindowPlan plan_windows(std::size_t history, std::size_t future, std::size_t tau) {
  if (tau == 0) throw ConfigError("window size tau must be at least 1");
  if (tau > history) {
    throw ConfigError("window size tau=" + std::to_string(tau) + " exceeds history length " +
                      std::to_string(history) + "; the encoder needs one full historical window");
  }
  WindowPlan plan;
  plan.history = history;
  plan.future = future;
  plan.tau = tau;
  plan.windows = (history + future) / tau;
  plan.residual = history + future - plan.windows * tau;
  return plan;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_field(const std::string& s, const char* what, std::size_t line_no) {
  T value{};
  auto trimmed = s;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) trimmed.pop_back();
  const auto* begin = trimmed.data();
  const auto* end = trimmed.data() + trimmed.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
  return value;
}

}  // namespace

std::vector<Scene> load_csv(const std::filesystem::path& path, int num_categories) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "scene_id,agent_id,category,t,x,y") throw DataError(path.string() + ": unexpected header '" + line + "'");

  struct AgentRows {
    int category = -1;
    std::map<long, std::pair<double, double>> points;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::map<long, AgentRows>> grouped;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    const std::string& sid = f[0];
    const long agent = parse_field<long>(f[1], "agent_id", line_no);
    const int category = parse_field<int>(f[2], "category", line_no);
    const long t = parse_field<long>(f[3], "t", line_no);
    const double x = parse_field<double>(f[4], "x", line_no);
    const double y = parse_field<double>(f[5], "y", line_no);
    if (category < 0 || category >= num_categories) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": category " + std::to_string(category) +
                        " outside [0, " + std::to_string(num_categories) + ")");
    }
    if (t < 0) throw DataError(path.string() + ":" + std::to_string(line_no) + ": negative t");
    if (!grouped.count(sid)) order.push_back(sid);
    auto& rows = grouped[sid][agent];
    if (rows.category >= 0 && rows.category != category) {
      throw DataError("scene " + sid + " agent " + std::to_string(agent) + ": category changes over time");
    }
    rows.category = category;
    if (!rows.points.emplace(t, std::pair{x, y}).second) {
      throw DataError("scene " + sid + " agent " + std::to_string(agent) + ": duplicate t=" + std::to_string(t));
    }
  }

  std::vector<Scene> scenes;
  for (const auto& sid : order) {
    const auto& agents = grouped[sid];
    long max_t = -1;
    for (const auto& [id, rows] : agents) max_t = std::max(max_t, rows.points.rbegin()->first);
    Scene s;
    s.scene_id = sid;
    s.steps = static_cast<std::size_t>(max_t + 1);
    for (const auto& [id, rows] : agents) {
      for (long t = 0; t <= max_t; ++t) {
        auto it = rows.points.find(t);
        if (it == rows.points.end()) {
          throw DataError("scene " + sid + " agent " + std::to_string(id) + ": missing timestep t=" + std::to_string(t));
        }
        s.positions.push_back(it->second.first);
        s.positions.push_back(it->second.second);
      }
      s.categories.push_back(rows.category);
    }
    s.validate();
    scenes.push_back(std::move(s));
  }
  return scenes;
}

void save_csv(const std::vector<Scene>& scenes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "scene_id,agent_id,category,t,x,y\n";
  for (const auto& s : scenes) {
    for (std::size_t i = 0; i < s.num_agents(); ++i)
      for (std::size_t t = 0; t < s.steps; ++t)
        out << s.scene_id << ',' << i << ',' << s.categories[i] << ',' << t << ',' << s.x(i, t) << ','
            << s.y(i, t) << '\n';
  }
  if (!out) throw DataError("short write to " + path.string());
}

void save_truth_graphs(const std::vector<Scene>& scenes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "scene_id,src,dst\n";
  for (const auto& s : scenes) {
    if (!s.truth_graph) continue;
    const std::size_t n = s.num_agents();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if ((*s.truth_graph)[i * n + j]) out << s.scene_id << ',' << i << ',' << j << '\n';
  }
}

void load_truth_graphs(std::vector<Scene>& scenes, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::unordered_map<std::string, Scene*> by_id;
  for (auto& s : scenes) {
    s.truth_graph = std::vector<std::uint8_t>(s.num_agents() * s.num_agents(), 0);
    by_id[s.scene_id] = &s;
  }
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    auto it = by_id.find(f[0]);
    if (it == by_id.end()) continue;
    const auto src = parse_field<std::size_t>(f[1], "src", line_no);
    const auto dst = parse_field<std::size_t>(f[2], "dst", line_no);
    const std::size_t n = it->second->num_agents();
    if (src >= n || dst >= n || src == dst) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad edge");
    (*it->second->truth_graph)[src * n + dst] = 1;
  }
}

void SyntheticConfig::finalize() {
  if (categories < 1) throw ConfigError("synthetic: categories must be >= 1");
  const auto C = static_cast<std::size_t>(categories);
  if (coupling.empty()) {
    // Distinct rows and columns per category so category-aware modules have
    // something to pick up; cycles for C > 3.
    static constexpr double kBase[3][3] = {{0.2, 0.8, 0.4}, {1.0, 0.3, 0.6}, {0.5, 1.2, 0.2}};
    coupling.resize(C * C);
    for (std::size_t a = 0; a < C; ++a)
      for (std::size_t b = 0; b < C; ++b) coupling[a * C + b] = kBase[a % 3][b % 3];
  }
  if (damping.empty()) {
    static constexpr double kDamping[3] = {0.05, 0.3, 0.8};
    for (std::size_t c = 0; c < C; ++c) damping.push_back(kDamping[c % 3]);
  }
  if (coupling.size() != C * C) throw ConfigError("synthetic: coupling matrix must be C x C");
  if (damping.size() != C) throw ConfigError("synthetic: damping must have C entries");
  if (min_agents < 2 || max_agents < min_agents) throw ConfigError("synthetic: need 2 <= min_agents <= max_agents");
  if (history == 0 || future == 0) throw ConfigError("synthetic: history and future must be positive");
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) throw ConfigError("synthetic: edge probability in [0,1]");
  if (!(dt > 0.0) || substeps == 0) throw ConfigError("synthetic: dt and substeps must be positive");
  if (n_scenes == 0) throw ConfigError("synthetic: n_scenes must be positive");
}

Scene simulate_scene(const SyntheticConfig& config, const std::string& scene_id, const std::vector<int>& categories,
                     const std::vector<std::uint8_t>& graph, RngStream& rng) {
  const std::size_t n = categories.size();
  const auto C = static_cast<std::size_t>(config.categories);
  Scene s;
  s.scene_id = scene_id;
  s.categories = categories;
  s.steps = config.history + config.future;
  s.positions.assign(n * s.steps * 2, 0.0);
  s.truth_graph = graph;

  std::vector<double> px(n), py(n), vx(n), vy(n);
  for (std::size_t i = 0; i < n; ++i) {
    px[i] = rng.uniform(-config.box, config.box);
    py[i] = rng.uniform(-config.box, config.box);
    vx[i] = config.speed * rng.normal();
    vy[i] = config.speed * rng.normal();
  }
  std::vector<double> ax(n), ay(n);
  for (std::size_t t = 0; t < s.steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(px[i]) > 1e6 || std::abs(py[i]) > 1e6 || !std::isfinite(px[i]) || !std::isfinite(py[i])) {
        throw NumericalError("synthetic simulation diverged in scene " + scene_id +
                             "; lower dt or the coupling strengths");
      }
      s.x(i, t) = px[i];
      s.y(i, t) = py[i];
    }
    if (t + 1 == s.steps) break;
    for (std::size_t k = 0; k < config.substeps; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto cj = static_cast<std::size_t>(categories[j]);
        ax[j] = -config.damping[cj] * vx[j];
        ay[j] = -config.damping[cj] * vy[j];
        for (std::size_t i = 0; i < n; ++i) {
          if (i == j || !graph[i * n + j]) continue;
          const double k_ij = config.coupling[static_cast<std::size_t>(categories[i]) * C + cj];
          ax[j] += k_ij * (px[i] - px[j]);
          ay[j] += k_ij * (py[i] - py[j]);
        }
      }
      // Semi-implicit Euler: velocity first, then position with the new velocity.
      for (std::size_t j = 0; j < n; ++j) {
        vx[j] += config.dt * ax[j];
        vy[j] += config.dt * ay[j];
        px[j] += config.dt * vx[j];
        py[j] += config.dt * vy[j];
      }
    }
  }
  return s;
}

std::vector<Scene> generate_raw(SyntheticConfig config) {
  config.finalize();
  const RngStream root(config.seed, 0x5ce9e);
  std::vector<Scene> raw;
  raw.reserve(config.n_scenes);
  for (std::size_t k = 0; k < config.n_scenes; ++k) {
    RngStream rng = root.derive(k);
    const std::size_t n = config.min_agents + rng.uniform_int(config.max_agents - config.min_agents + 1);
    std::vector<int> categories(n);
    // The first agent cycles through categories so every category appears
    // once n_scenes >= C.
    categories[0] = static_cast<int>(k % static_cast<std::size_t>(config.categories));
    for (std::size_t i = 1; i < n; ++i) {
      categories[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.categories)));
    }
    std::vector<std::uint8_t> graph(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && rng.bernoulli(config.edge_probability)) graph[i * n + j] = 1;
    raw.push_back(simulate_scene(config, "s" + std::to_string(k), categories, graph, rng));
  }
  return raw;
}

SyntheticDataset generate_synthetic(SyntheticConfig config) {
  const std::vector<Scene> raw = generate_raw(std::move(config));
  SyntheticDataset out;
  out.normalizer = Normalizer::fit(raw);
  for (const auto& s : raw) out.scenes.push_back(normalize(s, out.normalizer));
  return out;
}

Normalizer Normalizer::widened(double fraction) const {
  if (!(fraction >= 0.0)) throw ConfigError("normalizer margin must be non-negative");
  const double mx = fraction * (max_x - min_x), my = fraction * (max_y - min_y);
  Normalizer n{min_x - mx, max_x + mx, min_y - my, max_y + my};
  n.validate();
  return n;
}

DatasetSplit split_dataset(const std::vector<Scene>& scenes, double train_ratio, double val_ratio,
                           std::uint64_t seed) {
  if (!(train_ratio >= 0.0 && val_ratio >= 0.0 && train_ratio + val_ratio <= 1.0 + 1e-12)) {
    throw ConfigError("split ratios must be non-negative and sum to at most 1");
  }
  std::vector<std::size_t> order(scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream rng(seed, 0x5b11);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
  const auto n = static_cast<double>(scenes.size());
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * n));
  const auto n_val = std::min(scenes.size() - n_train, static_cast<std::size_t>(std::llround(val_ratio * n)));
  DatasetSplit out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dst = k < n_train ? out.train : (k < n_train + n_val ? out.val : out.test);
    dst.push_back(scenes[order[k]]);
  }
  return out;
}

}  // namespace himrae
