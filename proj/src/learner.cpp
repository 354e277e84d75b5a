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

#include "cfdrive/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cfdrive/rng.hpp"

namespace cfdrive {

namespace {

constexpr int kModelVersion = 1;
constexpr int kKindOneHot = 5;
constexpr int kPhaseOneHot = 4;
constexpr double kRelScale = 50.0;
constexpr double kSpeedScale = 10.0;
constexpr double kRouteScale = 10.0;
constexpr double kGradFloor = 1e-6;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

struct Forward {
  std::vector<Eigen::MatrixXd> activations;  // input, then each hidden layer
  Eigen::MatrixXd out;                       // output logits
};

Forward forward(const std::vector<Layer>& layers, const Eigen::MatrixXd& x) {
  Forward f;
  f.activations.push_back(x);
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].w * f.activations.back();
    z.colwise() += layers[l].b;
    f.activations.push_back(z.array().tanh().matrix());
  }
  f.out = layers.back().w * f.activations.back();
  f.out.colwise() += layers.back().b;
  return f;
}

Predictions split_heads(const Eigen::MatrixXd& out) {
  Predictions p;
  p.waypoints = out.topRows(kWaypointOutputs);
  p.grid = sigmoid(out.middleRows(kWaypointOutputs, kGridValues));
  p.flags = sigmoid(out.bottomRows(kFlagCount));
  return p;
}

void check_shapes(const Predictions& p, const Targets& t) {
  const auto same = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
  };
  if (!same(p.waypoints, t.waypoints) || !same(p.grid, t.grid) || !same(p.flags, t.flags) ||
      p.waypoints.rows() != kWaypointOutputs || p.grid.rows() != kGridValues || p.flags.rows() != kFlagCount)
    throw Error(ErrorCode::kShapeMismatch, "prediction and target shapes differ");
}

Json config_json(const TrainConfig& c) {
  return Json{{"lambda_pt", c.lambda_pt},   {"lambda_map", c.lambda_map},
              {"lambda_tf", c.lambda_tf},   {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size}, {"epochs", c.epochs},
              {"seed", c.seed},             {"hidden", c.hidden},
              {"beta1", c.beta1},           {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},     {"bce_clamp", c.bce_clamp}};
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.lambda_pt = j.at("lambda_pt").get<double>();
  c.lambda_map = j.at("lambda_map").get<double>();
  c.lambda_tf = j.at("lambda_tf").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.bce_clamp = j.at("bce_clamp").get<double>();
  return c;
}

}  // namespace

int input_dim(const SensorConfig& cfg) {
  return 1 + cfg.n_detections * (4 + kKindOneHot) + kPhaseOneHot + 2 * cfg.route_context;
}

Eigen::VectorXd encode_sensors(const SensorObs& x, const SimConfig& cfg) {
  const SensorConfig& s = cfg.sensor;
  if (static_cast<int>(x.detections.size()) != s.n_detections ||
      static_cast<int>(x.route_context.size()) != s.route_context)
    throw Error(ErrorCode::kShapeMismatch, "sensor observation does not match the sensor config");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(input_dim(s));
  int i = 0;
  v[i++] = x.ego_speed / cfg.physics.cruise_speed;
  for (const Detection& d : x.detections) {
    v[i++] = d.rel_x / kRelScale;
    v[i++] = d.rel_y / kRelScale;
    v[i++] = d.rel_heading / std::numbers::pi;
    v[i++] = d.speed / kSpeedScale;
    v[i + static_cast<int>(d.kind)] = 1.0;
    i += kKindOneHot;
  }
  v[i + static_cast<int>(x.visible_light_phase)] = 1.0;
  i += kPhaseOneHot;
  for (const Waypoint& w : x.route_context) {
    v[i++] = w.x / kRouteScale;
    v[i++] = w.y / kRouteScale;
  }
  return v;
}

LearnerModel::LearnerModel(int input_dim, const TrainConfig& cfg) : cfg_(cfg) {
  Rng rng(derive_seed(cfg.seed, 0x1A7E45ULL));
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(kOutputDim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    Layer layer;
    layer.w.resize(out, in);
    for (int c = 0; c < in; ++c)
      for (int r = 0; r < out; ++r) layer.w(r, c) = rng.uniform(-limit, limit);
    layer.b = Eigen::VectorXd::Zero(out);
    layers_.push_back(std::move(layer));
  }
}

Eigen::MatrixXd LearnerModel::logits(const Eigen::MatrixXd& x) const { return forward(layers_, x).out; }

bool LearnerModel::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const Layer& l) { return l.w.allFinite() && l.b.allFinite(); });
}

std::size_t LearnerModel::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

Json LearnerModel::to_json() const {
  Json layers = Json::array();
  for (const Layer& l : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.w.size()));
    for (int r = 0; r < l.w.rows(); ++r)
      for (int c = 0; c < l.w.cols(); ++c) w.push_back(l.w(r, c));
    layers.push_back(Json{{"rows", l.w.rows()},
                          {"cols", l.w.cols()},
                          {"w", w},
                          {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())}});
  }
  Json curve = Json::array();
  for (const EpochLoss& e : loss_curve_) {
    curve.push_back(Json{{"epoch", e.epoch},
                         {"l_pt", e.terms.l_pt},
                         {"l_map", e.terms.l_map},
                         {"l_tf", e.terms.l_tf},
                         {"total", e.terms.total}});
  }
  return Json{{"format", "cfdrive.learner"}, {"version", kModelVersion},
              {"config", config_json(cfg_)},  {"input_dim", input_dim()},
              {"output_dim", kOutputDim},     {"layers", layers},
              {"loss_curve", curve}};
}

LearnerModel LearnerModel::from_json(const Json& j) {
  try {
    if (j.at("version").get<int>() != kModelVersion) throw Error(ErrorCode::kParse, "unsupported learner version");
    if (j.at("output_dim").get<int>() != kOutputDim) throw Error(ErrorCode::kParse, "learner output size mismatch");
    LearnerModel m;
    m.cfg_ = config_from_json(j.at("config"));
    for (const Json& lj : j.at("layers")) {
      const int rows = lj.at("rows").get<int>(), cols = lj.at("cols").get<int>();
      const auto w = lj.at("w").get<std::vector<double>>();
      const auto b = lj.at("b").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
          b.size() != static_cast<std::size_t>(rows))
        throw Error(ErrorCode::kParse, "learner layer size mismatch");
      Layer l;
      l.w.resize(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) l.w(r, c) = w[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
      l.b = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
      if (!m.layers_.empty() && m.layers_.back().w.rows() != cols)
        throw Error(ErrorCode::kParse, "learner layers do not chain");
      m.layers_.push_back(std::move(l));
    }
    if (m.layers_.empty() || m.layers_.back().w.rows() != kOutputDim)
      throw Error(ErrorCode::kParse, "learner has no output layer");
    if (!m.all_finite()) throw Error(ErrorCode::kParse, "learner has non-finite parameters");
    for (const Json& e : j.value("loss_curve", Json::array())) {
      m.loss_curve_.push_back({e.at("epoch").get<int>(),
                               {e.at("total").get<double>(), e.at("l_pt").get<double>(), e.at("l_map").get<double>(),
                                e.at("l_tf").get<double>()}});
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed learner checkpoint: ") + e.what());
  }
}

bool operator==(const LearnerModel& a, const LearnerModel& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].w.rows() != b.layers_[l].w.rows() || a.layers_[l].w.cols() != b.layers_[l].w.cols()) return false;
    if (a.layers_[l].w != b.layers_[l].w || a.layers_[l].b != b.layers_[l].b) return false;
  }
  return true;
}

Predictions predict(const LearnerModel& model, const Eigen::MatrixXd& x) {
  if (!model.trained()) throw Error(ErrorCode::kUnfittedModel, "learner has no parameters");
  if (x.rows() != model.input_dim()) throw Error(ErrorCode::kShapeMismatch, "learner input size mismatch");
  return split_heads(model.logits(x));
}

LossTerms loss(const Predictions& p, const Targets& t, const TrainConfig& cfg) {
  check_shapes(p, t);
  const double batch = static_cast<double>(p.waypoints.cols());
  LossTerms r;
  r.l_pt = (p.waypoints - t.waypoints).cwiseAbs().sum() / (kWaypointOutputs * batch);
  r.l_map = (p.grid - t.grid).squaredNorm() / (kGridValues * batch);
  const double eps = cfg.bce_clamp;
  double bce = 0.0;
  for (int c = 0; c < p.flags.cols(); ++c) {
    for (int k = 0; k < kFlagCount; ++k) {
      const double q = std::clamp(p.flags(k, c), eps, 1.0 - eps);
      const double y = t.flags(k, c);
      bce -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
    }
  }
  r.l_tf = bce / (kFlagCount * batch);
  r.total = cfg.lambda_pt * r.l_pt + cfg.lambda_map * r.l_map + cfg.lambda_tf * r.l_tf;
  return r;
}

LossTerms loss_and_gradients(const LearnerModel& model, const Eigen::MatrixXd& x, const Targets& target,
                             Gradients& grads) {
  const std::vector<Layer>& layers = model.layers();
  const TrainConfig& cfg = model.config();
  const Forward f = forward(layers, x);
  const Predictions p = split_heads(f.out);
  const LossTerms terms = loss(p, target, cfg);
  const double batch = static_cast<double>(x.cols());

  Eigen::MatrixXd delta(kOutputDim, x.cols());
  delta.topRows(kWaypointOutputs) =
      (p.waypoints - target.waypoints).unaryExpr([](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }) *
      (cfg.lambda_pt / (kWaypointOutputs * batch));
  delta.middleRows(kWaypointOutputs, kGridValues) =
      ((p.grid - target.grid).array() * p.grid.array() * (1.0 - p.grid.array())).matrix() *
      (2.0 * cfg.lambda_map / (kGridValues * batch));
  const double eps = cfg.bce_clamp;
  for (int c = 0; c < x.cols(); ++c) {
    for (int k = 0; k < kFlagCount; ++k) {
      const double q = p.flags(k, c);
      const bool clamped = q < eps || q > 1.0 - eps;
      delta(kWaypointOutputs + kGridValues + k, c) =
          clamped ? 0.0 : (q - target.flags(k, c)) * cfg.lambda_tf / (kFlagCount * batch);
    }
  }

  grads.layers.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& a_in = f.activations[l];
    grads.layers[l].w = delta * a_in.transpose();
    grads.layers[l].b = delta.rowwise().sum();
    if (l == 0) break;
    delta = ((layers[l].w.transpose() * delta).array() * (1.0 - a_in.array().square())).matrix();
  }
  return terms;
}

TrainingBatch make_batch(std::span<const DemoRecord> records, const SimConfig& sim) {
  const auto n = static_cast<Eigen::Index>(records.size());
  TrainingBatch b;
  b.x.resize(input_dim(sim.sensor), n);
  b.targets.waypoints.resize(kWaypointOutputs, n);
  b.targets.grid.resize(kGridValues, n);
  b.targets.flags.resize(kFlagCount, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const DemoRecord& r = records[static_cast<std::size_t>(c)];
    b.x.col(c) = encode_sensors(r.sensor_obs, sim);
    for (int k = 0; k < kHorizon; ++k) {
      b.targets.waypoints(2 * k, c) = r.action.waypoints[k].x;
      b.targets.waypoints(2 * k + 1, c) = r.action.waypoints[k].y;
    }
    for (int k = 0; k < kGridValues; ++k) b.targets.grid(k, c) = r.aux.grid[static_cast<std::size_t>(k)];
    for (int k = 0; k < kFlagCount; ++k) b.targets.flags(k, c) = r.aux.flags[static_cast<std::size_t>(k)];
  }
  return b;
}

LearnerModel train(std::span<const DemoRecord> records, const TrainConfig& cfg, const SimConfig& sim) {
  if (records.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot train the learner on an empty dataset");
  if (cfg.lambda_pt < 0 || cfg.lambda_map < 0 || cfg.lambda_tf < 0)
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be non-negative");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw Error(ErrorCode::kInvalidArgument, "invalid batch size or epochs");
  const TrainingBatch all = make_batch(records, sim);
  LearnerModel model(static_cast<int>(all.x.rows()), cfg);
  std::vector<Layer>& params = model.layers();

  std::vector<Layer> m1(params.size()), m2(params.size());
  for (std::size_t l = 0; l < params.size(); ++l) {
    m1[l] = {Eigen::MatrixXd::Zero(params[l].w.rows(), params[l].w.cols()), Eigen::VectorXd::Zero(params[l].b.size())};
    m2[l] = m1[l];
  }
  const auto n = static_cast<Eigen::Index>(records.size());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Gradients grads;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xBA7C4ULL));
    rng.shuffle(order);
    LossTerms sum;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd x(all.x.rows(), len);
      Targets t{Eigen::MatrixXd(kWaypointOutputs, len), Eigen::MatrixXd(kGridValues, len),
                Eigen::MatrixXd(kFlagCount, len)};
      for (Eigen::Index c = 0; c < len; ++c) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + c)];
        x.col(c) = all.x.col(src);
        t.waypoints.col(c) = all.targets.waypoints.col(src);
        t.grid.col(c) = all.targets.grid.col(src);
        t.flags.col(c) = all.targets.flags.col(src);
      }
      const LossTerms terms = loss_and_gradients(model, x, t, grads);
      if (!std::isfinite(terms.total))
        throw Error(ErrorCode::kDivergedLoss, "non-finite loss in epoch " + std::to_string(epoch));
      const double w = static_cast<double>(len);
      sum.total += w * terms.total;
      sum.l_pt += w * terms.l_pt;
      sum.l_map += w * terms.l_map;
      sum.l_tf += w * terms.l_tf;

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const double lr = cfg.learning_rate;
      const auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
      };
      for (std::size_t l = 0; l < params.size(); ++l) {
        update(params[l].w, m1[l].w, m2[l].w, grads.layers[l].w);
        update(params[l].b, m1[l].b, m2[l].b, grads.layers[l].b);
      }
    }
    const double nn = static_cast<double>(n);
    model.loss_curve().push_back({epoch, {sum.total / nn, sum.l_pt / nn, sum.l_map / nn, sum.l_tf / nn}});
    if (!model.all_finite())
      throw Error(ErrorCode::kDivergedLoss, "non-finite parameters after epoch " + std::to_string(epoch));
  }
  return model;
}

Action decode_action(const Eigen::VectorXd& waypoints, double stop_probability, double ego_speed,
                     const SimConfig& sim) {
  const PhysicsConfig& p = sim.physics;
  const double max_step = p.v_max * p.dt;
  Action a;
  Vec2 prev{0.0, 0.0};
  for (int k = 0; k < kHorizon; ++k) {
    Vec2 w{waypoints[2 * k], waypoints[2 * k + 1]};
    if (!std::isfinite(w.x) || !std::isfinite(w.y)) w = prev;
    const Vec2 d = w - prev;
    const double len = d.norm();
    if (len > max_step) w = prev + (max_step / len) * d;
    a.waypoints[k] = w;
    prev = w;
  }
  a.brake = stop_probability > 0.5 ? 1 : 0;
  a.accel = a.brake ? (ego_speed > 0.0 ? -p.a_max : 0.0)
                    : std::clamp(a.target_speed(p.dt) - ego_speed, -p.a_max, p.a_max);
  a.class_hint = discretize_action(a, sim);
  return a;
}

Action learner_act(const LearnerModel& model, const SensorObs& x, const SimConfig& sim) {
  const Eigen::MatrixXd in = encode_sensors(x, sim);
  const Predictions p = predict(model, in);
  return decode_action(p.waypoints.col(0), p.flags(static_cast<int>(TrafficFlag::kStopRequired), 0), x.ego_speed,
                       sim);
}

Action LearnerPolicy::act(const WorldState&, const SensorObs* sensors) {
  if (sensors == nullptr) throw Error(ErrorCode::kInvalidArgument, "learner policy needs sensor input");
  return learner_act(model_, *sensors, sim_);
}

std::string loss_curve_csv(const LearnerModel& model) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,l_pt,l_map,l_tf,total\n";
  for (const EpochLoss& e : model.loss_curve()) {
    os << e.epoch << ',' << e.terms.l_pt << ',' << e.terms.l_map << ',' << e.terms.l_tf << ',' << e.terms.total
       << '\n';
  }
  return os.str();
}

GradCheckResult gradient_check(const LearnerModel& model, const Eigen::MatrixXd& x, const Targets& target,
                               int samples_per_layer, std::uint64_t seed, double step) {
  Gradients grads;
  loss_and_gradients(model, x, target, grads);
  LearnerModel probe = model;
  Rng rng(seed);
  GradCheckResult result;
  const auto total_loss = [&]() { return loss(split_heads(probe.logits(x)), target, model.config()).total; };
  const auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double up = total_loss();
    param = saved - step;
    const double down = total_loss();
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
    ++result.checked;
  };
  std::vector<Layer>& layers = probe.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Layer& layer = layers[l];
    const bool output = l + 1 == layers.size();
    for (int s = 0; s < samples_per_layer; ++s) {
      Eigen::Index row = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(layer.w.rows())));
      if (output) {
        // Cycle through the waypoint, grid and flag heads.
        const int head = s % 3;
        const int lo = head == 0 ? 0 : (head == 1 ? kWaypointOutputs : kWaypointOutputs + kGridValues);
        const int width = head == 0 ? kWaypointOutputs : (head == 1 ? kGridValues : kFlagCount);
        row = lo + static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(width)));
      }
      const auto col = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(layer.w.cols())));
      check(layer.w(row, col), grads.layers[l].w(row, col));
      check(layer.b(row), grads.layers[l].b(row));
    }
  }
  return result;
}

}  // namespace cfdrive
