#include "movingout/bass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "movingout/errors.hpp"

namespace movingout {

using obs_layout::kAgentBlock;
using obs_layout::kItemBlock;
using obs_layout::kItems;

// ---------------------------------------------------------------------------
// Augmentation

SpliceKey splice_key(const WorldState& state, int agent) {
  const AgentBody& a = state.agents.at(static_cast<std::size_t>(agent));
  Cell c = cell_of(a.position);
  c.x = std::clamp(c.x, 0, kGridSize - 1);
  c.y = std::clamp(c.y, 0, kGridSize - 1);
  return {c.y * kGridSize + c.x, a.hold.has_value()};
}

Trajectory perturb_partner(const Trajectory& traj, const PerturbOptions& options, Rng& rng) {
  if (!(options.sigma >= 0.0)) throw Error(ErrorKind::kUsage, "sigma must be non-negative");
  if (options.ego < 0 || options.ego >= kAgentCount) throw Error(ErrorKind::kUsage, "ego must be 0 or 1");
  Trajectory out = traj;
  const auto partner = static_cast<std::size_t>(1 - options.ego);
  if (options.sigma == 0.0) {
    out.header.provenance = Provenance{"perturb", {traj.header.id}, std::nullopt, 0.0, options.ego};
    return out;
  }
  std::normal_distribution<double> noise(0.0, options.sigma);
  for (TrajectoryStep& s : out.steps) {
    AgentBody& a = s.state.agents[partner];
    a.position.x += noise(rng);
    a.position.y += noise(rng);
    if (options.perturb_heading) a.facing = unit_from_angle(a.heading() + noise(rng));
  }
  out.header.provenance = Provenance{"perturb", {traj.header.id}, std::nullopt, options.sigma, options.ego};
  return out;
}

Trajectory splice(const Trajectory& base, const Trajectory& donor, int t1, int t2, int ego) {
  if (t1 < 0 || t2 < t1 || static_cast<std::size_t>(t2) >= base.steps.size() ||
      static_cast<std::size_t>(t2) >= donor.steps.size()) {
    throw Error(ErrorKind::kUsage, "splice window out of range");
  }
  const auto partner = static_cast<std::size_t>(1 - ego);
  Trajectory out = base;
  for (int t = t1; t <= t2; ++t) {
    TrajectoryStep& s = out.steps[static_cast<std::size_t>(t)];
    const TrajectoryStep& d = donor.steps[static_cast<std::size_t>(t)];
    s.state.agents[partner] = d.state.agents[partner];
    if (t < t2 && s.action && d.action) (*s.action)[partner] = (*d.action)[partner];
  }
  out.header.id = base.header.id + "+" + donor.header.id + "@" + std::to_string(t1) + "-" + std::to_string(t2);
  out.header.provenance = Provenance{"recombine", {base.header.id, donor.header.id}, std::make_pair(t1, t2), 0.0, ego};
  return out;
}

bool spliced_states_valid(const Trajectory& traj, int t1, int t2, double penetration_limit) {
  const PhysicsParams params;
  for (int t = t1; t <= t2; ++t) {
    const WorldState& s = traj.steps.at(static_cast<std::size_t>(t)).state;
    if (check_collisions(s, penetration_limit).entries.size() > 0) return false;
    for (const AgentBody& a : s.agents) {
      if (!a.hold) continue;
      if (*a.hold < 0 || *a.hold >= static_cast<int>(s.items.size())) return false;
      if (grasp_gap(a, s.items[static_cast<std::size_t>(*a.hold)]) > params.grab_radius + penetration_limit) return false;
    }
  }
  return true;
}

namespace {

bool partner_differs(const Trajectory& a, const Trajectory& b, int t1, int t2, int ego) {
  const auto partner = static_cast<std::size_t>(1 - ego);
  for (int t = t1; t <= t2; ++t) {
    const auto& sa = a.steps[static_cast<std::size_t>(t)];
    const auto& sb = b.steps[static_cast<std::size_t>(t)];
    if (!(sa.state.agents[partner] == sb.state.agents[partner])) return true;
    if (t < t2 && sa.action && sb.action && !((*sa.action)[partner] == (*sb.action)[partner])) return true;
  }
  return false;
}

}  // namespace

std::vector<Trajectory> recombine(const std::vector<Trajectory>& dataset, const RecombineOptions& options) {
  if (options.ego < 0 || options.ego >= kAgentCount) throw Error(ErrorKind::kUsage, "ego must be 0 or 1");
  // Keys per trajectory, built once.
  std::vector<std::vector<SpliceKey>> keys(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (const TrajectoryStep& s : dataset[i].steps) keys[i].push_back(splice_key(s.state, options.ego));
  }
  std::vector<Trajectory> out;
  for (std::size_t a = 0; a < dataset.size(); ++a) {
    for (std::size_t b = a + 1; b < dataset.size(); ++b) {
      if (map_hash(dataset[a].header.map) != map_hash(dataset[b].header.map)) continue;
      const std::size_t len = std::min(keys[a].size(), keys[b].size());
      std::vector<int> matches;
      for (std::size_t t = 0; t < len; ++t) {
        if (keys[a][t] == keys[b][t]) matches.push_back(static_cast<int>(t));
      }
      for (std::size_t m = 0; m + 1 < matches.size(); ++m) {
        const int t1 = matches[m];
        const int t2 = matches[m + 1];
        if (t2 - t1 < options.min_window) continue;
        if (!partner_differs(dataset[a], dataset[b], t1, t2, options.ego)) continue;
        for (auto [base, donor] : {std::pair{a, b}, std::pair{b, a}}) {
          Trajectory t = splice(dataset[base], dataset[donor], t1, t2, options.ego);
          if (options.validate && !spliced_states_valid(t, t1, t2, options.penetration_limit)) continue;
          out.push_back(std::move(t));
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Latent dynamics

namespace {

using nn::Activation;
using nn::Matrix;
using nn::Vector;

constexpr double kMinScale = 1e-6;

void fit_standardizer(const Matrix& m, std::vector<double>& mean, std::vector<double>& scale) {
  const Vector mu = m.rowwise().mean();
  const Vector var = (m.colwise() - mu).array().square().rowwise().mean();
  mean.resize(static_cast<std::size_t>(m.rows()));
  scale.resize(mean.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    mean[static_cast<std::size_t>(i)] = mu(i);
    const double sd = std::sqrt(var(i));
    scale[static_cast<std::size_t>(i)] = sd > kMinScale ? sd : 1.0;
  }
}

Matrix standardize(const Matrix& m, const std::vector<double>& mean, const std::vector<double>& scale) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.row(i) = (out.row(i).array() - mean[static_cast<std::size_t>(i)]) / scale[static_cast<std::size_t>(i)];
  }
  return out;
}

Matrix column(std::span<const double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

nn::DenseNet coder(int in, int hidden, int out, std::uint64_t seed) {
  return nn::DenseNet({in, hidden, out}, {Activation::kRelu, Activation::kIdentity}, seed);
}

/// Latent prediction for standardized inputs (columns are samples).
Matrix transition_input(const Matrix& z, const Matrix& actions) {
  Matrix in(z.rows() + actions.rows(), z.cols());
  in << z, actions;
  return in;
}

Matrix stacked_actions(const Matrix& a, const Matrix& ap) {
  Matrix m(a.rows() + ap.rows(), a.cols());
  m << a, ap;
  return m;
}

/// Decoded change in raw units, zero on entries that never changed.
std::vector<double> change_to_raw(const LatentDynamics& m, const Matrix& standardized_change) {
  std::vector<double> out(m.state_width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = standardized_change(static_cast<Eigen::Index>(i), 0) * m.change_scale[i] + m.change_mean[i];
    out[i] = m.dynamic_mask[i] > 0.5 ? v : 0.0;
  }
  return out;
}

}  // namespace

LatentDynamics::LatentDynamics(std::size_t state_width, const DynamicsConfig& config) {
  const int w = static_cast<int>(state_width);
  const int a = 2 * static_cast<int>(obs_layout::kActionWidth);
  enc_state = coder(w, config.hidden, config.latent, config.seed * 8 + 1);
  dec_state = coder(config.latent, config.hidden, w, config.seed * 8 + 2);
  enc_change = coder(w, config.hidden, config.latent, config.seed * 8 + 3);
  dec_change = coder(config.latent, config.hidden, w, config.seed * 8 + 4);
  transition = nn::DenseNet({config.latent + a, config.hidden, config.hidden, config.latent},
                            {Activation::kRelu, Activation::kRelu, Activation::kIdentity}, config.seed * 8 + 5);
  state_mean.assign(state_width, 0.0);
  state_scale.assign(state_width, 1.0);
  change_mean.assign(state_width, 0.0);
  change_scale.assign(state_width, 1.0);
  dynamic_mask.assign(state_width, 1.0);
  action_mean.assign(static_cast<std::size_t>(a), 0.0);
  action_scale.assign(static_cast<std::size_t>(a), 1.0);
}

int LatentDynamics::latent_width() const { return enc_state.output_size(); }

std::vector<double> LatentDynamics::predict_raw(std::span<const double> state, std::span<const double> action,
                                                std::span<const double> partner_action) const {
  if (state.size() != state_width()) {
    throw Error(ErrorKind::kShapeMismatch, "state width " + std::to_string(state.size()) + ", model expects " +
                                               std::to_string(state_width()));
  }
  if (action.size() != obs_layout::kActionWidth || partner_action.size() != obs_layout::kActionWidth) {
    throw Error(ErrorKind::kShapeMismatch, "actions must have 4 entries");
  }
  std::vector<double> acts(action.begin(), action.end());
  acts.insert(acts.end(), partner_action.begin(), partner_action.end());
  const Matrix z = enc_state.forward(standardize(column(state), state_mean, state_scale));
  const Matrix zn = transition.forward(transition_input(z, standardize(column(acts), action_mean, action_scale)));
  const std::vector<double> change = change_to_raw(*this, dec_change.forward(zn));
  std::vector<double> out(state.begin(), state.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += change[i];
  return out;
}

nn::Bundle LatentDynamics::to_bundle() const {
  nn::Bundle b;
  b.put("kind", std::string("latent-dynamics"));
  b.put("enc_state", enc_state);
  b.put("dec_state", dec_state);
  b.put("enc_change", enc_change);
  b.put("dec_change", dec_change);
  b.put("transition", transition);
  b.put("state_mean", state_mean);
  b.put("state_scale", state_scale);
  b.put("action_mean", action_mean);
  b.put("action_scale", action_scale);
  b.put("change_mean", change_mean);
  b.put("change_scale", change_scale);
  b.put("dynamic_mask", dynamic_mask);
  return b;
}

LatentDynamics LatentDynamics::from_bundle(const nn::Bundle& b) {
  if (!b.contains("kind") || b.text("kind") != "latent-dynamics") {
    throw Error(ErrorKind::kSchemaVersion, "model file does not hold a latent dynamics model");
  }
  LatentDynamics m;
  m.enc_state = b.net("enc_state");
  m.dec_state = b.net("dec_state");
  m.enc_change = b.net("enc_change");
  m.dec_change = b.net("dec_change");
  m.transition = b.net("transition");
  m.state_mean = b.vec("state_mean");
  m.state_scale = b.vec("state_scale");
  m.action_mean = b.vec("action_mean");
  m.action_scale = b.vec("action_scale");
  m.change_mean = b.vec("change_mean");
  m.change_scale = b.vec("change_scale");
  m.dynamic_mask = b.vec("dynamic_mask");
  const auto w = static_cast<int>(m.state_mean.size());
  if (m.enc_state.input_size() != w || m.dec_change.output_size() != w || m.state_scale.size() != m.state_mean.size() ||
      m.change_mean.size() != m.state_mean.size() || m.dynamic_mask.size() != m.state_mean.size()) {
    throw Error(ErrorKind::kShapeMismatch, "latent dynamics parts disagree on the state width");
  }
  return m;
}

void LatentDynamics::save(const std::filesystem::path& path) const { nn::save_bundle(to_bundle(), path); }

LatentDynamics LatentDynamics::load(const std::filesystem::path& path) { return from_bundle(nn::load_bundle(path)); }

DynamicsTrainResult train_latent_dynamics(const TransitionSet& data, const DynamicsConfig& config) {
  if (data.size() == 0) throw Error(ErrorKind::kEmptyDataset, "no transitions");
  const Eigen::Index w = data.state.rows();
  if (data.next_state.rows() != w || data.action.rows() != 4 || data.partner_action.rows() != 4 ||
      data.next_state.cols() != data.state.cols() || data.action.cols() != data.state.cols() ||
      data.partner_action.cols() != data.state.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "transition matrices disagree");
  }
  DynamicsTrainResult result;
  LatentDynamics& m = result.model;
  m = LatentDynamics(static_cast<std::size_t>(w), config);
  if (config.epochs == 0) return result;

  const Matrix change = data.next_state - data.state;
  const Matrix acts = stacked_actions(data.action, data.partner_action);
  fit_standardizer(data.state, m.state_mean, m.state_scale);
  fit_standardizer(change, m.change_mean, m.change_scale);
  fit_standardizer(acts, m.action_mean, m.action_scale);
  for (Eigen::Index i = 0; i < w; ++i) {
    m.dynamic_mask[static_cast<std::size_t>(i)] = change.row(i).cwiseAbs().maxCoeff() > 0.0 ? 1.0 : 0.0;
  }
  const Matrix xs = standardize(data.state, m.state_mean, m.state_scale);
  const Matrix ys = standardize(change, m.change_mean, m.change_scale);
  const Matrix as = standardize(acts, m.action_mean, m.action_scale);

  nn::AdamConfig ac;
  ac.lr = config.learning_rate;
  nn::Adam opt_es(m.enc_state, ac), opt_ds(m.dec_state, ac), opt_ec(m.enc_change, ac), opt_dc(m.dec_change, ac),
      opt_f(m.transition, ac);
  const Eigen::Index latent = config.latent;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    const auto batches = nn::epoch_batches(data.size(), config.batch_size, config.seed, epoch);
    for (const auto& idx : batches) {
      const Matrix x = nn::gather_columns(xs, idx);
      const Matrix y = nn::gather_columns(ys, idx);
      const Matrix a = nn::gather_columns(as, idx);

      const nn::Tape t_es = m.enc_state.forward_tape(x);
      const nn::Tape t_ds = m.dec_state.forward_tape(t_es.output);
      const nn::Tape t_ec = m.enc_change.forward_tape(y);
      const nn::Tape t_dc = m.dec_change.forward_tape(t_ec.output);
      const nn::Tape t_f = m.transition.forward_tape(transition_input(t_es.output, a));
      const nn::Tape t_dp = m.dec_change.forward_tape(t_f.output);

      const nn::LossValue l_state = nn::mse_loss(t_ds.output, x);
      const nn::LossValue l_change = nn::mse_loss(t_dc.output, y);
      const nn::LossValue l_latent = nn::mse_loss(t_f.output, t_ec.output);
      const nn::LossValue l_pred = nn::mse_loss(t_dp.output, y);
      const double loss = l_state.value + l_change.value + l_latent.value + l_pred.value;
      if (!std::isfinite(loss)) throw Error(ErrorKind::kNonFiniteLoss, "epoch " + std::to_string(epoch));

      nn::Gradients g_ds = m.dec_state.backward(t_ds, l_state.grad);
      nn::Gradients g_dc = m.dec_change.backward(t_dc, l_change.grad);
      const nn::Gradients g_dp = m.dec_change.backward(t_dp, l_pred.grad);
      const Matrix dz_pred = l_latent.grad + g_dp.input;
      nn::Gradients g_f = m.transition.backward(t_f, dz_pred);
      const Matrix dz_state = g_f.input.topRows(latent) + g_ds.input;
      nn::Gradients g_es = m.enc_state.backward(t_es, dz_state);
      const Matrix dz_change = -l_latent.grad + g_dc.input;
      nn::Gradients g_ec = m.enc_change.backward(t_ec, dz_change);
      g_dc += g_dp;

      opt_es.step(m.enc_state, g_es);
      opt_ds.step(m.dec_state, g_ds);
      opt_ec.step(m.enc_change, g_ec);
      opt_dc.step(m.dec_change, g_dc);
      opt_f.step(m.transition, g_f);
      total += loss * static_cast<double>(idx.size());
    }
    result.loss_curve.push_back(total / static_cast<double>(data.size()));
  }
  return result;
}

namespace {

void postprocess_state(std::vector<double>& s) {
  auto unit = [&](std::size_t o) {
    const double n = std::hypot(s[o], s[o + 1]);
    if (n > 1e-12) {
      s[o] /= n;
      s[o + 1] /= n;
    } else {
      s[o] = 1.0;
      s[o + 1] = 0.0;
    }
  };
  for (std::size_t k = 0; k < kAgentCount; ++k) {
    const std::size_t o = k * kAgentBlock;
    unit(o + 2);
    s[o + 4] = s[o + 4] >= 0.5 ? 1.0 : 0.0;
  }
  for (std::size_t o = kItems; o + kItemBlock <= s.size(); o += kItemBlock) unit(o + 2);
}

}  // namespace

std::vector<double> predict_next_state(const LatentDynamics& model, std::span<const double> state,
                                       std::span<const double> action, std::span<const double> partner_action) {
  std::vector<double> s = model.predict_raw(state, action, partner_action);
  postprocess_state(s);
  return s;
}

OneStepError one_step_error(const LatentDynamics& model, const TransitionSet& data) {
  OneStepError e;
  if (data.size() == 0) throw Error(ErrorKind::kEmptyDataset, "no transitions");
  const auto w = static_cast<std::size_t>(data.state.rows());
  if (w != model.state_width()) throw Error(ErrorKind::kShapeMismatch, "transition width differs from the model");
  std::vector<double> s(w), a(4), ap(4);
  for (Eigen::Index c = 0; c < data.state.cols(); ++c) {
    for (std::size_t i = 0; i < w; ++i) s[i] = data.state(static_cast<Eigen::Index>(i), c);
    for (std::size_t i = 0; i < 4; ++i) {
      a[i] = data.action(static_cast<Eigen::Index>(i), c);
      ap[i] = data.partner_action(static_cast<Eigen::Index>(i), c);
    }
    const std::vector<double> pred = predict_next_state(model, s, a, ap);
    double model_sq = 0.0;
    double persist_sq = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
      const double truth = data.next_state(static_cast<Eigen::Index>(i), c);
      model_sq += (pred[i] - truth) * (pred[i] - truth);
      persist_sq += (s[i] - truth) * (s[i] - truth);
    }
    e.model_mse += model_sq / static_cast<double>(w);
    e.persistence_mse += persist_sq / static_cast<double>(w);
    e.ego_position_error +=
        std::hypot(pred[0] - data.next_state(0, c), pred[1] - data.next_state(1, c));
  }
  const auto n = static_cast<double>(data.size());
  e.model_mse /= n;
  e.persistence_mse /= n;
  e.ego_position_error /= n;
  return e;
}

// ---------------------------------------------------------------------------
// Selection

double progress_reward(const WorldState& state, const DistanceField& field) {
  double sum = 0.0;
  for (const ItemBody& it : state.items) sum += field.at(it.position);
  return -sum;
}

double progress_reward(std::span<const double> obs, std::size_t item_count, const DistanceField& field) {
  if (obs.size() < kItems + item_count * kItemBlock) throw Error(ErrorKind::kShapeMismatch, "observation too short");
  double sum = 0.0;
  for (std::size_t i = 0; i < item_count; ++i) {
    const std::size_t o = kItems + i * kItemBlock;
    sum += field.at({obs[o], obs[o + 1]});
  }
  return -sum;
}

ProgressField::ProgressField(const Arena& arena, std::span<const double> item_radii)
    : plain_(DistanceField::build(arena)) {
  for (double r : item_radii) {
    const OccupancyGrid grid = OccupancyGrid::from_arena(arena, r);
    const std::vector<Cell> sources = goal_cells(arena, grid);
    fields_.push_back(sources.empty() ? plain_ : DistanceField::from_sources(grid, sources));
  }
}

namespace {

std::vector<double> radii_of(const WorldState& state) {
  std::vector<double> r;
  for (const ItemBody& it : state.items) r.push_back(it.footprint_radius);
  return r;
}

}  // namespace

ProgressField::ProgressField(const WorldState& state) : ProgressField(state.geometry(), radii_of(state)) {}

double ProgressField::distance(std::size_t item, Vec2 p, bool inflated) const {
  return inflated ? fields_.at(item).at(p) : plain_.at(p);
}

std::vector<bool> ProgressField::usable(const WorldState& state) const {
  std::vector<bool> out(fields_.size(), false);
  for (std::size_t i = 0; i < out.size() && i < state.items.size(); ++i) {
    out[i] = std::isfinite(fields_[i].at(state.items[i].position));
  }
  return out;
}

double ProgressField::reward(const WorldState& state, const std::vector<bool>& usable) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < state.items.size(); ++i) sum += distance(i, state.items[i].position, usable.at(i));
  return -sum;
}

double ProgressField::reward(std::span<const double> obs, const std::vector<bool>& usable) const {
  if (obs.size() < kItems + fields_.size() * kItemBlock) throw Error(ErrorKind::kShapeMismatch, "observation too short");
  double sum = 0.0;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const std::size_t o = kItems + i * kItemBlock;
    sum += distance(i, {obs[o], obs[o + 1]}, usable.at(i));
  }
  return -sum;
}

std::vector<ActionCommand> generate_candidates(const ActionCommand& base, int n, double heading_jitter, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::kUsage, "candidate count must be at least 1");
  std::vector<ActionCommand> out{base};
  if (n >= 2) {
    ActionCommand flip = base;
    flip.grasp = !base.grasp;
    out.push_back(flip);
  }
  std::normal_distribution<double> jitter(0.0, heading_jitter);
  for (int k = 2; k < n; ++k) {
    ActionCommand c = base;
    c.heading = unit_from_angle(base.heading.x == 0.0 && base.heading.y == 0.0 ? 0.0 : angle_of(base.heading) +
                                                                                        jitter(rng));
    c.move = base.move * (k % 2 == 0 ? 1.0 : 0.5);
    out.push_back(c);
  }
  return out;
}

std::size_t argmax_first(std::span<const double> rewards) {
  if (rewards.empty()) throw Error(ErrorKind::kUsage, "no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rewards.size(); ++i) {
    if (rewards[i] > rewards[best]) best = i;
  }
  return best;
}

const char* to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::kRaw: return "raw";
    case SelectionMode::kBassModel: return "bass-model";
    case SelectionMode::kBassOracle: return "bass-oracle";
  }
  return "?";
}

SelectionMode selection_mode_from_string(const std::string& s) {
  for (auto m : {SelectionMode::kRaw, SelectionMode::kBassModel, SelectionMode::kBassOracle}) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorKind::kUsage, "unknown mode '" + s + "' (raw, bass-model, bass-oracle)");
}

std::vector<double> score_candidates(const WorldState& state, int agent, std::span<const ActionCommand> candidates,
                                     const ActionCommand& partner, const LatentDynamics* model,
                                     const ProgressField& field, const PhysicsParams& physics) {
  const std::vector<bool> usable = field.usable(state);
  const Observation obs = model ? encode_observation(state, agent) : Observation{};
  const auto partner_vec = encode_action(partner);
  std::vector<double> rewards;
  rewards.reserve(candidates.size());
  for (const ActionCommand& c : candidates) {
    if (model) {
      const auto own = encode_action(c);
      rewards.push_back(field.reward(predict_next_state(*model, obs, own, partner_vec), usable));
    } else {
      JointAction ja;
      ja[static_cast<std::size_t>(agent)] = c;
      ja[static_cast<std::size_t>(1 - agent)] = partner;
      rewards.push_back(field.reward(step(state, ja, physics), usable));
    }
  }
  return rewards;
}

ActionCommand select_action(const WorldState& state, int agent, const Policy& policy, const ActionCommand& proposal,
                            const LatentDynamics* model, const ProgressField& field, const SelectionConfig& config,
                            Rng& rng, CandidateSet* candidates) {
  CandidateSet set;
  set.actions = generate_candidates(proposal, config.n, config.heading_jitter, rng);
  if (set.actions.size() == 1) {
    set.rewards = {0.0};
    if (candidates) *candidates = std::move(set);
    return proposal;
  }
  const ActionCommand partner = predict_partner_action(policy, encode_observation(state, agent));
  set.rewards = score_candidates(state, agent, set.actions, partner, model, field, config.physics);
  const ActionCommand chosen = set.actions[argmax_first(set.rewards)];
  if (candidates) *candidates = std::move(set);
  return chosen;
}

ActionFilter make_bass_filter(std::array<PolicyPtr, kAgentCount> policies, std::array<bool, kAgentCount> agents,
                              std::shared_ptr<const LatentDynamics> model, std::shared_ptr<const ProgressField> field,
                              const SelectionConfig& config, std::uint64_t seed) {
  auto rngs = std::make_shared<std::array<Rng, kAgentCount>>(
      std::array<Rng, kAgentCount>{make_rng(seed, 100), make_rng(seed, 101)});
  return [=](const WorldState& state, const std::array<Observation, kAgentCount>&, const JointAction& proposal, int) {
    JointAction out = proposal;
    for (int k = 0; k < kAgentCount; ++k) {
      if (!agents[k]) continue;
      out[k] = select_action(state, k, *policies[k], proposal[k], model.get(), *field, config, (*rngs)[k]);
    }
    return out;
  };
}

}  // namespace movingout
