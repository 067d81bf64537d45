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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "himrae/checkpoint.hpp"
#include "himrae/data.hpp"
#include "himrae/errors.hpp"
#include "himrae/evaluation.hpp"
#include "himrae/graph_complexity.hpp"
#include "himrae/theory.hpp"

namespace py = pybind11;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

std::size_t square_side(const Array& a, const char* name) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw py::value_error(std::string(name) + " must be a square matrix");
  return static_cast<std::size_t>(a.shape(0));
}

std::span<const double> view(const Array& a) { return {a.data(), static_cast<std::size_t>(a.size())}; }

Array to_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Heterogeneous interaction model with relational inference, native core.";

  py::register_exception<himrae::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<himrae::DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<himrae::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<himrae::ContractError>(m, "ContractError", PyExc_ValueError);

  m.def(
      "graph_entropy",
      [](const Array& z) {
        const std::size_t n = square_side(z, "z");
        return himrae::graph_entropy(view(z), n);
      },
      py::arg("z"), "Normalised in-degree entropy of an N x N relation matrix.");

  m.def("min_graph_entropy", &himrae::min_graph_entropy, py::arg("n"), py::arg("edges"));
  m.def("brute_force_min_entropy", &himrae::brute_force_min_entropy, py::arg("n"), py::arg("edges"));

  m.def(
      "entropy_minimizer_table",
      [](std::size_t max_n) {
        py::list rows;
        for (const auto& r : himrae::entropy_minimizer_table(max_n))
          rows.append(py::make_tuple(r.n, r.edges, r.closed_form, r.brute_force, r.match));
        return rows;
      },
      py::arg("max_n") = 6);

  m.def(
      "error_bounds",
      [](double lipschitz, double epsilon, std::size_t horizon, double gap) {
        const auto b = himrae::mixup_error_bounds({lipschitz, epsilon, horizon, gap});
        return py::make_tuple(b.b1, b.b2, b.b3);
      },
      py::arg("lipschitz"), py::arg("epsilon"), py::arg("horizon"), py::arg("gap"));

  m.def(
      "select_graph",
      [](const Array& probs, const std::string& heuristic, std::optional<Array> previous, double low, double high) {
        const std::size_t n = square_side(probs, "probs");
        std::span<const double> prev;
        if (previous) {
          if (square_side(*previous, "previous") != n) throw py::value_error("previous must match probs");
          prev = view(*previous);
        }
        const auto r = himrae::select_graph(view(probs), n, himrae::parse_heuristic(heuristic), prev, low, high);
        const auto side = static_cast<py::ssize_t>(n);
        return py::make_tuple(to_array(r.z, {side, side}), r.uncertain, r.exhaustive);
      },
      py::arg("probs"), py::arg("heuristic") = "entropy", py::arg("previous") = py::none(), py::arg("low") = 0.2,
      py::arg("high") = 0.8);

  m.def(
      "ade_fde",
      [](const Array& truth, const Array& predicted) {
        if (truth.ndim() != 3 || truth.shape(2) != 2) throw py::value_error("truth must have shape (agents, steps, 2)");
        for (py::ssize_t d = 0; d < 3; ++d)
          if (predicted.ndim() != 3 || predicted.shape(d) != truth.shape(d))
            throw py::value_error("predicted must match truth");
        const auto agents = static_cast<std::size_t>(truth.shape(0));
        const auto r = himrae::ade_fde(view(truth), view(predicted), agents, static_cast<std::size_t>(truth.shape(1)));
        const auto a = static_cast<py::ssize_t>(agents);
        return py::make_tuple(to_array(r.ade, {a}), to_array(r.fde, {a}));
      },
      py::arg("truth"), py::arg("predicted"));

  m.def(
      "generate_synthetic",
      [](std::size_t n_scenes, std::uint64_t seed, int categories, std::size_t min_agents, std::size_t max_agents) {
        himrae::SyntheticConfig c;
        c.n_scenes = n_scenes;
        c.seed = seed;
        c.categories = categories;
        c.min_agents = min_agents;
        c.max_agents = max_agents;
        const auto raw = himrae::generate_raw(c);
        py::list scenes;
        for (const auto& s : raw) {
          py::dict d;
          const auto n = static_cast<py::ssize_t>(s.num_agents());
          d["scene_id"] = s.scene_id;
          d["categories"] = s.categories;
          d["positions"] = to_array(s.positions, {n, static_cast<py::ssize_t>(s.steps), 2});
          if (s.truth_graph) {
            d["truth_graph"] = to_array(std::vector<double>(s.truth_graph->begin(), s.truth_graph->end()), {n, n});
          } else {
            d["truth_graph"] = py::none();
          }
          scenes.append(d);
        }
        return scenes;
      },
      py::arg("n_scenes") = 200, py::arg("seed") = 0, py::arg("categories") = 3, py::arg("min_agents") = 4,
      py::arg("max_agents") = 8, "Raw synthetic scenes in source units.");

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        py::dict out;
        for (const auto& [key, t] : himrae::load_checkpoint(path)) {
          std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
          out[py::str(key)] = to_array(std::vector<double>(t.values().begin(), t.values().end()), shape);
        }
        return out;
      },
      py::arg("path"), "Every record of a checkpoint file as a numpy array.");
}
