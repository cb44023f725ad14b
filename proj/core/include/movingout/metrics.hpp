#pragma once

#include <span>
#include <string>
#include <vector>

#include "movingout/distance_field.hpp"
#include "movingout/trajectory.hpp"

namespace movingout {

enum class AcDenominator { kJoint, kTotal };
AcDenominator ac_denominator_from_string(const std::string& s);

struct ItemDelivery {
  int item = 0;
  SizeClass size = SizeClass::kSmall;
  bool delivered = false;
  double initial_distance = 0.0;
  double final_distance = 0.0;
};

struct MetricsReport {
  double tcr = 0.0;
  /// NaN when every item started delivered.
  double nfd = 0.0;
  double wt_seconds = 0.0;
  double ac = 1.0;
  std::vector<ItemDelivery> per_item;
};

/// Size weight: 1 for small items, 2 for medium and large.
double tcr_weight(SizeClass s);

double tcr(const Trajectory& traj);
double tcr(std::span<const SizeClass> sizes, std::span<const bool> delivered);

/// 1 - sum(final) / sum(initial). Throws DegenerateEpisode when sum(initial) is 0.
double nfd(const Trajectory& traj, const DistanceField& field);
double nfd(std::span<const double> initial, std::span<const double> final);

/// Seconds during which an agent holds a medium/large item alone while it
/// does not move (displacement below 1e-4 per step).
double waiting_time(const Trajectory& traj, double dt = 0.1);

/// One joint-carry step's alignment |(f1 + f2) . d| / (|f1| + |f2|).
double action_consistency_term(Vec2 f1, Vec2 f2, Vec2 d);

/// Mean alignment over joint-carry steps of medium/large items; 1 when the
/// episode has none. kTotal divides by the episode length instead.
double action_consistency(const Trajectory& traj, AcDenominator denominator = AcDenominator::kJoint);

MetricsReport evaluate_metrics(const Trajectory& traj, const DistanceField& field,
                               AcDenominator denominator = AcDenominator::kJoint, double dt = 0.1);

/// {"tcr", "nfd", "wt_seconds", "ac", "per_item"} as a JSON object string.
std::string metrics_to_json(const MetricsReport& report, int indent = -1);

}  // namespace movingout
