// Copyright 2026 The cfdrive Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cfdrive/pipeline.hpp"

namespace py = pybind11;
using namespace cfdrive;

namespace {

InfractionKind parse_kind(const std::string& name) {
  for (int k = 0; k < kInfractionKinds; ++k) {
    const auto kind = static_cast<InfractionKind>(k);
    if (infraction_name(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown infraction kind " + name);
}

EpisodeResult make_result(double completion, const std::vector<std::string>& kinds) {
  EpisodeResult r;
  r.route_completion = completion;
  for (const std::string& k : kinds) r.infractions.push_back({parse_kind(k), 0, -1});
  return r;
}

py::dict result_dict(const EpisodeResult& r, const PenaltyTable& p) {
  py::list events;
  for (const InfractionEvent& e : r.infractions)
    events.append(py::dict(py::arg("kind") = std::string(infraction_name(e.kind)), py::arg("time_step") = e.time_step,
                           py::arg("actor_id") = e.actor_id));
  return py::dict(py::arg("scenario") = std::string(template_name(static_cast<ScenarioTemplate>(r.scenario_id))),
                  py::arg("seed") = r.seed, py::arg("route_completion") = r.route_completion,
                  py::arg("steps_used") = r.steps_used, py::arg("timeout_steps") = r.timeout_steps,
                  py::arg("infractions") = events, py::arg("infraction_score") = infraction_score(r, p));
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict outcome_dict(const StageOutcome& o) {
  return py::dict(py::arg("manifest") = json_to_py(o.manifest), py::arg("warning") = o.warning,
                  py::arg("message") = o.message);
}

CFConfig cf_config(int population, int iters_per_lambda, double diversity_weight, double min_distance) {
  CFConfig c;
  c.population = population;
  c.iters_per_lambda = iters_per_lambda;
  c.diversity_weight = diversity_weight;
  c.min_diverse_distance = min_distance;
  return c;
}

}  // namespace

PYBIND11_MODULE(_cfdrive, m) {
  m.doc() = "Counterfactual data augmentation for imitation-learned driving";

  py::register_exception<Error>(m, "CfdriveError", PyExc_RuntimeError);

  m.def("templates", [] {
    std::vector<std::string> out;
    for (ScenarioTemplate t : kAllTemplates) out.emplace_back(template_name(t));
    return out;
  });

  m.def("run_expert_episode",
        [](const std::string& scenario, std::uint64_t seed, int max_steps) {
          SimConfig sim;
          ExpertPolicy expert(sim);
          const EpisodeResult r = run_episode(expert, parse_template(scenario), seed, max_steps, sim);
          return result_dict(r, PenaltyTable{});
        },
        py::arg("scenario"), py::arg("seed"), py::arg("max_steps") = 2000);

  m.def("infraction_score",
        [](const std::vector<std::string>& kinds) { return infraction_score(make_result(100.0, kinds)); },
        py::arg("infractions"), "Product of default penalty coefficients over the named events.");

  m.def("driving_score",
        [](const std::vector<std::pair<double, std::vector<std::string>>>& routes) {
          std::vector<EpisodeResult> rs;
          for (const auto& [completion, kinds] : routes) rs.push_back(make_result(completion, kinds));
          const EvalReport rep = driving_score(rs);
          return py::dict(py::arg("driving_score") = rep.driving_score,
                          py::arg("route_completion") = rep.route_completion_mean,
                          py::arg("infraction_score") = rep.infraction_score_mean);
        },
        py::arg("routes"), "routes: list of (completion percent, [infraction kind names]).");

  py::class_<TreeModel>(m, "TreeModel")
      .def_property_readonly("n_features", &TreeModel::n_features)
      .def_property_readonly("n_rounds", &TreeModel::n_rounds)
      .def("predict_proba",
           [](const TreeModel& t, const std::vector<double>& x) {
             const ClassProbs p = predict_proba(t, x);
             return std::vector<double>(p.begin(), p.end());
           })
      .def("predict_class", [](const TreeModel& t, const std::vector<double>& x) { return static_cast<int>(predict_class(t, x)); })
      .def("to_json", [](const TreeModel& t) { return t.to_json().dump(); })
      .def_static("from_json", [](const std::string& s) { return TreeModel::from_json(Json::parse(s)); });

  m.def("fit_trees",
        [](const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, int rounds, int max_depth,
           double learning_rate, int min_leaf, double l2) {
          if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "no rows");
          const int n_features = static_cast<int>(rows.front().size());
          std::vector<double> flat;
          for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != n_features) throw Error(ErrorCode::kShapeMismatch, "ragged rows");
            flat.insert(flat.end(), r.begin(), r.end());
          }
          return fit(flat, n_features, labels, TreeHyper{rounds, max_depth, learning_rate, min_leaf, l2});
        },
        py::arg("rows"), py::arg("labels"), py::arg("rounds") = 100, py::arg("max_depth") = 4,
        py::arg("learning_rate") = 0.1, py::arg("min_leaf") = 5, py::arg("l2") = 1.0);

  m.def("search_counterfactuals",
        [](const TreeModel& t, const std::vector<double>& x, int target, int m_diverse, std::uint64_t seed,
           int population, int iters_per_lambda, double diversity_weight, double min_distance) {
          const CFConfig cfg = cf_config(population, iters_per_lambda, diversity_weight, min_distance);
          const SearchSpace space = plain_space(static_cast<int>(x.size()), cfg);
          py::list out;
          for (const CFCandidate& c :
               search_counterfactuals(t, x, static_cast<ActionClass>(target), space, cfg, m_diverse, seed))
            out.append(py::dict(py::arg("x") = c.x, py::arg("distance") = c.distance,
                                py::arg("lambda_final") = c.lambda_final));
          return out;
        },
        py::arg("model"), py::arg("x"), py::arg("target"), py::arg("m") = 1, py::arg("seed") = 0,
        py::arg("population") = 40, py::arg("iters_per_lambda") = 15, py::arg("diversity_weight") = 0.5,
        py::arg("min_distance") = 0.3, "Unit-scale, unbounded search over every feature.");

  m.def("parse_config", [](const std::string& text) { return json_to_py(config_to_json(parse_config(text))); });
  m.def("sha256_hex", [](const std::string& bytes) { return sha256_hex(bytes); });

  m.def("collect", [](const std::string& cfg, const std::string& out) { return outcome_dict(stage_collect(load_config(cfg), out)); },
        py::arg("config"), py::arg("out"));
  m.def("distill",
        [](const std::string& cfg, const std::string& dataset, const std::string& out) {
          return outcome_dict(stage_distill(load_config(cfg), dataset, out));
        },
        py::arg("config"), py::arg("dataset"), py::arg("out"));
  m.def("augment",
        [](const std::string& cfg, const std::string& dataset, const std::string& model, const std::string& out) {
          return outcome_dict(stage_augment(load_config(cfg), dataset, model, out));
        },
        py::arg("config"), py::arg("dataset"), py::arg("model"), py::arg("out"));
  m.def("train",
        [](const std::string& cfg, const std::string& dataset, const std::string& out) {
          return outcome_dict(stage_train(load_config(cfg), dataset, out));
        },
        py::arg("config"), py::arg("dataset"), py::arg("out"));
  m.def("evaluate",
        [](const std::string& cfg, const std::string& policy, const std::string& out_prefix) {
          return outcome_dict(stage_evaluate(load_config(cfg), policy, out_prefix));
        },
        py::arg("config"), py::arg("policy"), py::arg("out_prefix"));
  m.def("verify_manifest", &verify_manifest, py::arg("path"));
}
