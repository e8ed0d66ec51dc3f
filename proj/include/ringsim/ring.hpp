#pragma once

#include <span>
#include <vector>

#include "ringsim/types.hpp"

namespace ringsim {

// Index of the vehicle ahead of vehicle i. Vehicle count-1 wraps to vehicle 0.
inline int lead_index(int i, int count) { return (i + 1) % count; }

inline bool wraps(int i, int count) { return i == count - 1; }

// Bumper-to-bumper gap between a follower and its leader. Positions are
// cumulative distances; the ring enters only through the wrap term.
inline double gap(double x_follower, double x_leader, double length,
                  double perimeter, bool wrap) {
  return x_leader + (wrap ? perimeter : 0.0) - x_follower - length;
}

inline double gap_of(std::span<const VehicleState> states, int i, double length,
                     double perimeter) {
  const int n = static_cast<int>(states.size());
  return gap(states[static_cast<size_t>(i)].x,
             states[static_cast<size_t>(lead_index(i, n))].x, length, perimeter,
             wraps(i, n));
}

// Sum of all gaps around the ring; equals perimeter - count*length identically.
inline double total_gap_sum(std::span<const VehicleState> states, double length,
                            double perimeter) {
  double sum = 0.0;
  const int n = static_cast<int>(states.size());
  for (int i = 0; i < n; ++i) sum += gap_of(states, i, length, perimeter);
  return sum;
}

// Positions implied by a first position and the gaps to each vehicle ahead.
inline std::vector<double> positions_from_gaps(double x_first,
                                               std::span<const double> gaps,
                                               double length) {
  std::vector<double> x;
  x.reserve(gaps.size() + 1);
  x.push_back(x_first);
  for (double g : gaps) x.push_back(x.back() + length + g);
  return x;
}

}  // namespace ringsim
