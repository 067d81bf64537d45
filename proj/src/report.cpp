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

#include "himrae/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "himrae/errors.hpp"
#include "himrae/graph_complexity.hpp"

namespace himrae {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

}  // namespace

void write_graph_stats_csv(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                           const std::vector<ScenePrediction>& predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << kGraphStatsHeader << '\n';
  for (const auto& p : predictions) {
    const Scene& s = scenes.at(p.scene);
    const std::size_t n = s.num_agents();
    for (std::size_t w = 0; w < p.graphs.size(); ++w) {
      const auto dist = degree_distribution(p.graphs[w], n);
      const double max_deg = *std::max_element(dist.degrees.begin(), dist.degrees.end());
      out << s.scene_id << ',' << p.sample << ',' << w << ',' << n << ',' << num(dist.edges) << ','
          << num(graph_entropy(p.graphs[w], n)) << ',' << num(r_density(p.graphs[w], n)) << ',' << num(max_deg)
          << '\n';
    }
  }
}

std::string trajectory_svg(const Scene& scene, const std::vector<const ScenePrediction*>& samples,
                           std::size_t history) {
  constexpr double kSize = 400.0, kPad = 20.0;
  // Normalised [-1, 1] with a small allowance for predictions drifting out.
  auto px = [&](double x) { return kPad + (std::clamp(x, -1.2, 1.2) + 1.2) / 2.4 * (kSize - 2 * kPad); };
  auto py = [&](double y) { return kSize - kPad - (std::clamp(y, -1.2, 1.2) + 1.2) / 2.4 * (kSize - 2 * kPad); };
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n"
      << "<title>scene " << scene.scene_id << "</title>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::size_t future = scene.steps - history;
  for (std::size_t i = 0; i < scene.num_agents(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    auto polyline = [&](std::size_t from, std::size_t to, const char* extra) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" " << extra << " points=\"";
      for (std::size_t t = from; t < to; ++t) svg << coord(px(scene.x(i, t))) << ',' << coord(py(scene.y(i, t))) << ' ';
      svg << "\"/>\n";
    };
    polyline(0, history, "stroke-width=\"2\"");
    polyline(history - 1, scene.steps, "stroke-width=\"2\" stroke-dasharray=\"4 3\"");
    for (const ScenePrediction* p : samples) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.7\" stroke-opacity=\"0.6\" points=\""
          << coord(px(scene.x(i, history - 1))) << ',' << coord(py(scene.y(i, history - 1))) << ' ';
      for (std::size_t f = 0; f < future; ++f) {
        svg << coord(px(p->future[(i * future + f) * 2])) << ',' << coord(py(p->future[(i * future + f) * 2 + 1]))
            << ' ';
      }
      svg << "\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace himrae
