#pragma once

#include <random>
#include <string>
#include <vector>

#include "tscale/dynamics.hpp"
#include "tscale/expr.hpp"
#include "tscale/timescale.hpp"

namespace testing {

using namespace tscale;

inline std::string scenario_path(const std::string& name) {
  return std::string(TSCALE_SOURCE_DIR) + "/scenarios/" + name;
}

inline TimeScale points(const std::vector<double>& ts) {
  std::vector<Segment> segs;
  for (double t : ts) segs.push_back({t, t});
  return TimeScale::make(segs);
}

// {0, h, 2h, ..., count*h}
inline TimeScale h_lattice(double h, int count) {
  std::vector<double> ts;
  for (int k = 0; k <= count; ++k) ts.push_back(k * h);
  return points(ts);
}

inline ControlSystem coupled_system(Mode mode = Mode::Nabla) {
  return ControlSystem::make(
      mode, 2,
      {parse_expr("2*t^5*y1 + cos(t*y2) + y2^8 + v1"), parse_expr("2*t^6*y2 + cos(t*y1) + y1^7 + v2")},
      ControlSet::ball(2, 1.0));
}

inline FixedDynamics coupled_dynamics() { return fix_control(coupled_system(), {0.5, 0.5}); }

// Scalar system y' = rhs(t, y1) with a unit-ball control that the rhs may ignore.
inline FixedDynamics scalar(Mode mode, const char* rhs) {
  return fix_control(ControlSystem::make(mode, 1, {parse_expr(rhs)}, ControlSet::ball(1, 1.0)), {0.0});
}

// Random finite scale whose endpoints are multiples of 1/den.
inline TimeScale random_scale(std::mt19937& rng, int den = 8) {
  std::uniform_int_distribution<int> pieces(1, 6), gap(1, 3 * den), len(1, 2 * den), kind(0, 2);
  std::vector<Segment> segs;
  double at = std::uniform_int_distribution<int>(-5 * den, 5 * den)(rng) / static_cast<double>(den);
  for (int k = pieces(rng); k > 0; --k) {
    const double width = kind(rng) == 0 ? 0.0 : len(rng) / static_cast<double>(den);
    segs.push_back({at, at + width});
    at += width + gap(rng) / static_cast<double>(den);
  }
  return TimeScale::make(segs);
}

// Endpoints, quarter points and midpoints of every segment.
inline std::vector<double> sample_points(const TimeScale& ts) {
  std::vector<double> out;
  for (const Segment& s : ts.segments()) {
    out.push_back(s.lo);
    if (!s.degenerate()) {
      const double w = s.hi - s.lo;
      out.push_back(s.lo + w / 4);
      out.push_back(s.lo + w / 2);
      out.push_back(s.hi - w / 4);
      out.push_back(s.hi);
    }
  }
  return out;
}

}  // namespace testing
