#include "movingout/metrics.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "json_util.hpp"
#include "movingout/errors.hpp"

namespace movingout {

AcDenominator ac_denominator_from_string(const std::string& s) {
  if (s == "joint") return AcDenominator::kJoint;
  if (s == "total") return AcDenominator::kTotal;
  throw Error(ErrorKind::kUsage, "--ac-denominator must be 'joint' or 'total', got '" + s + "'");
}

double tcr_weight(SizeClass s) { return s == SizeClass::kSmall ? 1.0 : 2.0; }

double tcr(std::span<const SizeClass> sizes, std::span<const bool> delivered) {
  if (sizes.size() != delivered.size()) throw std::invalid_argument("tcr: size/delivered length differ");
  if (sizes.empty()) return 1.0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double w = tcr_weight(sizes[i]);
    den += w;
    if (delivered[i]) num += w;
  }
  return num / den;
}

double tcr(const Trajectory& traj) {
  const WorldState& s = traj.final();
  const std::size_t n = s.items.size();
  std::vector<SizeClass> sizes(n);
  auto delivered = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) {
    sizes[i] = s.items[i].size;
    delivered[i] = item_in_goal(s.items[i], s.geometry());
  }
  return tcr(sizes, std::span<const bool>(delivered.get(), n));
}

double nfd(std::span<const double> initial, std::span<const double> final) {
  if (initial.size() != final.size()) throw std::invalid_argument("nfd: initial/final length differ");
  double a = 0.0;
  double b = 0.0;
  for (double d : initial) a += d;
  for (double d : final) b += d;
  if (!(a > 0.0)) throw Error(ErrorKind::kDegenerateEpisode, "every item starts inside a goal region");
  return 1.0 - b / a;
}

namespace {

/// Field lookup at the item center; 0 for delivered items. Items stranded
/// beyond the field take the largest reachable distance plus one cell.
double item_distance(const ItemBody& item, const Arena& arena, const DistanceField& field) {
  if (item_in_goal(item, arena)) return 0.0;
  const double d = field.at(item.position);
  if (std::isfinite(d)) return d;
  int worst = 0;
  for (int s : field.raw()) worst = std::max(worst, s);
  return (worst + 1) * kCellSize;
}

std::vector<double> item_distances(const WorldState& s, const DistanceField& field) {
  std::vector<double> out;
  out.reserve(s.items.size());
  for (const ItemBody& it : s.items) out.push_back(item_distance(it, s.geometry(), field));
  return out;
}

bool needs_help(SizeClass s) { return s != SizeClass::kSmall; }

}  // namespace

double nfd(const Trajectory& traj, const DistanceField& field) {
  const auto a = item_distances(traj.initial(), field);
  const auto b = item_distances(traj.final(), field);
  return nfd(a, b);
}

double waiting_time(const Trajectory& traj, double dt) {
  int steps = 0;
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
    const WorldState& s = traj.steps[t].state;
    const WorldState& n = traj.steps[t + 1].state;
    for (int k = 0; k < kAgentCount; ++k) {
      const auto& hold = s.agents[k].hold;
      if (!hold) continue;
      const ItemBody& item = s.items[static_cast<std::size_t>(*hold)];
      if (!needs_help(item.size)) continue;
      if (s.agents[1 - k].hold == hold) continue;
      if (norm(n.items[static_cast<std::size_t>(*hold)].position - item.position) < 1e-4) ++steps;
    }
  }
  return steps * dt;
}

double action_consistency_term(Vec2 f1, Vec2 f2, Vec2 d) {
  const double den = norm(f1) + norm(f2);
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::abs(dot(f1 + f2, d)) / den;
}

double action_consistency(const Trajectory& traj, AcDenominator denominator) {
  double sum = 0.0;
  int joint = 0;
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
    const TrajectoryStep& rec = traj.steps[t];
    if (!rec.action) continue;
    const WorldState& s = rec.state;
    const auto& h0 = s.agents[0].hold;
    if (!h0 || s.agents[1].hold != h0) continue;
    if (!needs_help(s.items[static_cast<std::size_t>(*h0)].size)) continue;
    const Vec2 f1 = (*rec.action)[0].heading * (*rec.action)[0].move;
    const Vec2 f2 = (*rec.action)[1].heading * (*rec.action)[1].move;
    const double term = action_consistency_term(f1, f2, normalized(s.agents[1].position - s.agents[0].position));
    if (std::isnan(term)) continue;
    sum += term;
    ++joint;
  }
  if (joint == 0) return 1.0;
  if (denominator == AcDenominator::kTotal) return sum / static_cast<double>(traj.length());
  return sum / joint;
}

MetricsReport evaluate_metrics(const Trajectory& traj, const DistanceField& field, AcDenominator denominator,
                               double dt) {
  MetricsReport r;
  const WorldState& first = traj.initial();
  const WorldState& last = traj.final();
  const auto a = item_distances(first, field);
  const auto b = item_distances(last, field);
  for (std::size_t i = 0; i < last.items.size(); ++i) {
    r.per_item.push_back({static_cast<int>(i), last.items[i].size, item_in_goal(last.items[i], last.geometry()), a[i],
                          b[i]});
  }
  r.tcr = tcr(traj);
  try {
    r.nfd = nfd(a, b);
  } catch (const Error&) {
    r.nfd = std::numeric_limits<double>::quiet_NaN();
  }
  r.wt_seconds = waiting_time(traj, dt);
  r.ac = action_consistency(traj, denominator);
  return r;
}

std::string metrics_to_json(const MetricsReport& report, int indent) {
  using detail::json;
  json items = json::array();
  for (const ItemDelivery& d : report.per_item) {
    items.push_back({{"item", d.item},
                     {"size", to_string(d.size)},
                     {"delivered", d.delivered},
                     {"initial_distance", d.initial_distance},
                     {"final_distance", d.final_distance}});
  }
  json j = {{"tcr", report.tcr},
            {"nfd", std::isfinite(report.nfd) ? json(report.nfd) : json(nullptr)},
            {"wt_seconds", report.wt_seconds},
            {"ac", report.ac},
            {"per_item", items}};
  return j.dump(indent);
}

}  // namespace movingout
