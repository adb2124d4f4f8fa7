#include "tscale/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tscale/error.hpp"

namespace tscale {

namespace {

std::string fmt_time(double t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}

// Mesh of the closed piece [a, b]. Points in the lower half are measured from
// a, points in the upper half from b, and the midpoint is symmetric, so the
// mesh of [-b, -a] is the exact negation of this one.
void append_mesh(double a, double b, double h, std::vector<double>& out) {
  if (a == b) {
    out.push_back(a);
    return;
  }
  const double len = b - a;
  const auto steps = static_cast<long long>(std::max(1.0, std::ceil(len / h * (1.0 - 1e-12))));
  for (long long k = 0; k <= steps; ++k) {
    if (k == 0) {
      out.push_back(a);
    } else if (k == steps) {
      out.push_back(b);
    } else if (2 * k < steps) {
      out.push_back(a + len * (static_cast<double>(k) / static_cast<double>(steps)));
    } else if (2 * k > steps) {
      out.push_back(b - len * (static_cast<double>(steps - k) / static_cast<double>(steps)));
    } else {
      out.push_back(0.5 * a + 0.5 * b);
    }
  }
}

}  // namespace

TimeScale TimeScale::make(std::vector<Segment> segments) {
  if (segments.empty()) throw Error(ErrorCode::EmptyScale, "time scale needs at least one segment");
  for (const auto& s : segments) {
    if (!std::isfinite(s.lo) || !std::isfinite(s.hi))
      throw Error(ErrorCode::NonFinite, "segment endpoint is not finite");
    if (s.lo > s.hi)
      throw Error(ErrorCode::InvalidArgument,
                  "segment [" + fmt_time(s.lo) + ", " + fmt_time(s.hi) + "] is reversed");
  }
  std::sort(segments.begin(), segments.end(),
            [](const Segment& x, const Segment& y) { return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi); });
  std::vector<Segment> merged;
  merged.reserve(segments.size());
  for (const auto& s : segments) {
    if (!merged.empty() && s.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, s.hi);
    } else {
      merged.push_back(s);
    }
  }
  return TimeScale(std::move(merged));
}

std::optional<std::size_t> TimeScale::segment_index(double t, double tol) const {
  if (!std::isfinite(t)) return std::nullopt;
  // First segment whose upper end is not below t - tol.
  auto it = std::lower_bound(segments_.begin(), segments_.end(), t - tol,
                             [](const Segment& s, double v) { return s.hi < v; });
  if (it == segments_.end() || it->lo - tol > t) return std::nullopt;
  return static_cast<std::size_t>(it - segments_.begin());
}

bool TimeScale::contains(double t, double tol) const { return segment_index(t, tol).has_value(); }

PointInfo TimeScale::classify(double t) const {
  auto idx = segment_index(t);
  if (!idx) throw Error(ErrorCode::NotMember, "t = " + fmt_time(t) + " is not in the time scale");
  const std::size_t k = *idx;
  const Segment& seg = segments_[k];

  PointInfo p;
  p.t = t;
  p.sigma = t;
  p.rho = t;
  if (std::abs(t - seg.hi) <= kMemberTol && k + 1 < segments_.size()) p.sigma = segments_[k + 1].lo;
  if (std::abs(t - seg.lo) <= kMemberTol && k > 0) p.rho = segments_[k - 1].hi;
  p.mu = p.sigma - t;
  p.nu = t - p.rho;
  return p;
}

TimeScale TimeScale::dual() const {
  std::vector<Segment> out;
  out.reserve(segments_.size());
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) out.push_back({-it->hi, -it->lo});
  return TimeScale(std::move(out));
}

TimeScale TimeScale::trim_kappa(KappaSide side) const {
  std::vector<Segment> out = segments_;
  if (side == KappaSide::Upper) {
    if (classify(sup()).left_scattered()) out.pop_back();
  } else {
    if (classify(inf()).right_scattered()) out.erase(out.begin());
  }
  if (out.empty()) throw Error(ErrorCode::DegenerateScale, "kappa trim leaves an empty scale");
  return TimeScale(std::move(out));
}

TimeScale TimeScale::restrict(double a, double b) const {
  std::vector<Segment> out;
  for (const auto& s : segments_) {
    const double lo = std::max(s.lo, a);
    const double hi = std::min(s.hi, b);
    if (lo <= hi) out.push_back({lo, hi});
  }
  if (out.empty())
    throw Error(ErrorCode::BadWindow, "[" + fmt_time(a) + ", " + fmt_time(b) + "] misses the scale");
  return TimeScale(std::move(out));
}

std::vector<double> TimeScale::grid(double t0, double t1, double h_dense) const {
  if (!(h_dense > 0.0) || !std::isfinite(h_dense))
    throw Error(ErrorCode::InvalidArgument, "h_dense must be positive");
  if (!(t0 < t1))
    throw Error(ErrorCode::BadWindow, "window start " + fmt_time(t0) + " is not below end " + fmt_time(t1));
  auto i0 = segment_index(t0);
  auto i1 = segment_index(t1);
  if (!i0 || !i1) throw Error(ErrorCode::BadWindow, "window endpoints must be members of the time scale");

  std::vector<double> out;
  for (std::size_t k = *i0; k <= *i1; ++k) {
    const Segment& s = segments_[k];
    // Window ends within tolerance of a segment endpoint snap onto it.
    auto snap = [&s](double t) {
      if (std::abs(t - s.lo) <= kMemberTol) return s.lo;
      if (std::abs(t - s.hi) <= kMemberTol) return s.hi;
      return std::clamp(t, s.lo, s.hi);
    };
    const double lo = k == *i0 ? snap(t0) : s.lo;
    const double hi = k == *i1 ? snap(t1) : s.hi;
    if (lo > hi) throw Error(ErrorCode::BadWindow, "window collapses inside a single point");
    append_mesh(lo, hi, h_dense, out);
  }
  return out;
}

}  // namespace tscale
