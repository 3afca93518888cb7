#include "ndf/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ndf/error.hpp"

namespace ndf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool near_duplicate(double a, double b) {
  return b - a <= PiecewiseLinear::kMergeTolerance * std::max(1.0, std::abs(a));
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string("piecewise linear: non-finite ") + what);
}

}  // namespace

PiecewiseLinear::PiecewiseLinear() : slopes_{0.0} {}

PiecewiseLinear PiecewiseLinear::linear(double slope, double anchor) {
  require_finite(slope, "slope");
  require_finite(anchor, "anchor");
  PiecewiseLinear p;
  p.slopes_ = {slope};
  p.anchor_ = anchor;
  return p;
}

PiecewiseLinear PiecewiseLinear::from_slopes(std::vector<double> breakpoints,
                                             std::vector<double> slopes, double anchor) {
  if (slopes.size() != breakpoints.size() + 1) {
    throw InvalidArgument("piecewise linear: need exactly one slope per segment");
  }
  for (double b : breakpoints) require_finite(b, "breakpoint");
  for (double s : slopes) require_finite(s, "slope");
  require_finite(anchor, "anchor");
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    if (breakpoints[k] < breakpoints[k - 1]) {
      throw InvalidArgument("piecewise linear: breakpoints must be increasing");
    }
  }

  // Drop zero-width segments before integrating.
  std::vector<double> bps;
  std::vector<double> sl{slopes[0]};
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    if (!bps.empty() && breakpoints[k] == bps.back()) {
      sl.back() = slopes[k + 1];
      continue;
    }
    bps.push_back(breakpoints[k]);
    sl.push_back(slopes[k + 1]);
  }

  // Integrate knot values outward from the segment containing 0.
  const std::size_t n = bps.size();
  std::vector<double> knots(n);
  const auto z = static_cast<std::size_t>(std::upper_bound(bps.begin(), bps.end(), 0.0) - bps.begin());
  for (std::size_t j = z; j < n; ++j) {
    knots[j] = j == z ? anchor + sl[z] * bps[z] : knots[j - 1] + sl[j] * (bps[j] - bps[j - 1]);
  }
  for (std::size_t j = z; j-- > 0;) {
    knots[j] = j + 1 == z ? anchor + sl[z] * bps[j] : knots[j + 1] - sl[j + 1] * (bps[j + 1] - bps[j]);
  }
  return from_knots(std::move(bps), std::move(sl), std::move(knots), anchor);
}

PiecewiseLinear PiecewiseLinear::from_knots(std::vector<double> breakpoints,
                                            std::vector<double> slopes, std::vector<double> knots,
                                            double anchor) {
  PiecewiseLinear p;
  p.breakpoints_ = std::move(breakpoints);
  p.slopes_ = std::move(slopes);
  p.knots_ = std::move(knots);
  p.anchor_ = anchor;
  p.canonicalize();
  return p;
}

void PiecewiseLinear::canonicalize() {
  // Collapse near-coincident breakpoints, keeping the first knot.
  std::vector<double> bps;
  std::vector<double> kn;
  std::vector<double> sl{slopes_.front()};
  bps.reserve(breakpoints_.size());
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    if (!bps.empty() && near_duplicate(bps.back(), breakpoints_[k])) {
      sl.back() = slopes_[k + 1];
      continue;
    }
    bps.push_back(breakpoints_[k]);
    kn.push_back(knots_[k]);
    sl.push_back(slopes_[k + 1]);
  }

  // Merge segments whose slopes agree to rounding level.
  breakpoints_.clear();
  knots_.clear();
  slopes_.assign(1, sl.front());
  for (std::size_t k = 0; k < bps.size(); ++k) {
    const double next = sl[k + 1];
    if (std::abs(next - slopes_.back()) <= 1e-15 * std::max(1.0, std::abs(next))) continue;
    breakpoints_.push_back(bps[k]);
    knots_.push_back(kn[k]);
    slopes_.push_back(next);
  }
}

std::size_t PiecewiseLinear::segment_of(double t) const {
  return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) -
                                  breakpoints_.begin());
}

double PiecewiseLinear::eval(double t) const {
  const std::size_t n = breakpoints_.size();
  const std::size_t k = segment_of(t);
  const double left = k == 0 ? -kInf : breakpoints_[k - 1];
  const double right = k == n ? kInf : breakpoints_[k];
  if (left <= 0.0 && 0.0 < right) return anchor_ + slopes_[k] * t;
  if (t > 0.0) return knots_[k - 1] + slopes_[k] * (t - left);
  return knots_[k] + slopes_[k] * (t - right);
}

double PiecewiseLinear::min_slope() const { return *std::min_element(slopes_.begin(), slopes_.end()); }
double PiecewiseLinear::max_slope() const { return *std::max_element(slopes_.begin(), slopes_.end()); }

double PiecewiseLinear::continuity_defect() const {
  double defect = 0.0;
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    const double reached = knots_[k - 1] + slopes_[k] * (breakpoints_[k] - breakpoints_[k - 1]);
    defect = std::max(defect, std::abs(reached - knots_[k]));
  }
  // The anchor must sit on the segment through 0.
  if (!breakpoints_.empty()) defect = std::max(defect, std::abs(eval(breakpoints_[0]) - knots_[0]));
  return defect;
}

bool PiecewiseLinear::approx_equal(const PiecewiseLinear& other, double tol) const {
  if (breakpoints_.size() != other.breakpoints_.size()) return false;
  if (std::abs(anchor_ - other.anchor_) > tol) return false;
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    const double scale = std::max(1.0, std::abs(breakpoints_[k]));
    if (std::abs(breakpoints_[k] - other.breakpoints_[k]) > tol * scale) return false;
  }
  for (std::size_t k = 0; k < slopes_.size(); ++k) {
    if (std::abs(slopes_[k] - other.slopes_[k]) > tol) return false;
  }
  return true;
}

PiecewiseLinear PiecewiseLinear::operator-() const { return -1.0 * *this; }

PiecewiseLinear operator*(double s, const PiecewiseLinear& a) {
  std::vector<double> sl(a.slopes_);
  std::vector<double> kn(a.knots_);
  for (double& v : sl) v *= s;
  for (double& v : kn) v *= s;
  return PiecewiseLinear::from_knots(a.breakpoints_, std::move(sl), std::move(kn), s * a.anchor_);
}

PiecewiseLinear operator+(const PiecewiseLinear& a, const PiecewiseLinear& b) {
  std::vector<double> bps;
  bps.reserve(a.breakpoints_.size() + b.breakpoints_.size());
  std::set_union(a.breakpoints_.begin(), a.breakpoints_.end(), b.breakpoints_.begin(),
                 b.breakpoints_.end(), std::back_inserter(bps));
  std::vector<double> sl(bps.size() + 1);
  std::vector<double> kn(bps.size());
  sl[0] = a.slopes_.front() + b.slopes_.front();
  for (std::size_t k = 0; k < bps.size(); ++k) {
    sl[k + 1] = a.slopes_[a.segment_of(bps[k])] + b.slopes_[b.segment_of(bps[k])];
    kn[k] = a.eval(bps[k]) + b.eval(bps[k]);
  }
  return PiecewiseLinear::from_knots(std::move(bps), std::move(sl), std::move(kn),
                                     a.anchor_ + b.anchor_);
}

PiecewiseLinear operator-(const PiecewiseLinear& a, const PiecewiseLinear& b) { return a + (-b); }

PiecewiseLinear precompose_affine(const PiecewiseLinear& c, double scale, double shift) {
  require_finite(scale, "scale");
  require_finite(shift, "shift");
  if (scale == 0.0) return PiecewiseLinear::linear(0.0, c.eval(shift));
  const auto& cb = c.breakpoints();
  const auto& cs = c.slopes();
  const auto ck = c.knot_values();
  const std::size_t n = cb.size();
  std::vector<double> bps(n), kn(n), sl(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = scale > 0.0 ? k : n - 1 - k;
    bps[k] = (cb[src] - shift) / scale;
    kn[k] = ck[src];
  }
  for (std::size_t k = 0; k <= n; ++k) sl[k] = scale * cs[scale > 0.0 ? k : n - k];
  return PiecewiseLinear::from_knots(std::move(bps), std::move(sl), std::move(kn), c.eval(shift));
}

PiecewiseLinear compose(const PiecewiseLinear& outer, const PiecewiseLinear& inner) {
  const auto& ib = inner.breakpoints();
  const auto& is = inner.slopes();
  const auto ik = inner.knot_values();
  const auto& ob = outer.breakpoints();
  const auto& os = outer.slopes();
  const auto ok = outer.knot_values();
  const std::size_t n = ib.size();

  std::vector<double> bps, sl, kn;
  bps.reserve(2 * n + ob.size());

  for (std::size_t j = 0; j <= n; ++j) {
    const double s = is[j];
    const double left = j == 0 ? -kInf : ib[j - 1];
    const double right = j == n ? kInf : ib[j];
    // A finite reference point of this segment and its image.
    double xr = 0.0;
    double vr = inner.anchor();
    if (j > 0) {
      xr = ib[j - 1];
      vr = ik[j - 1];
    } else if (n > 0) {
      xr = ib[0];
      vr = ik[0];
    }
    const double v_left = j > 0 ? ik[j - 1] : (s > 0 ? -kInf : s < 0 ? kInf : vr);
    const double v_right = j < n ? ik[j] : (s > 0 ? kInf : s < 0 ? -kInf : vr);

    if (s == 0.0) {
      sl.push_back(0.0);
    } else {
      const double lo = std::min(v_left, v_right);
      const double hi = std::max(v_left, v_right);
      const auto first = std::upper_bound(ob.begin(), ob.end(), lo) - ob.begin();
      const auto last = std::lower_bound(ob.begin(), ob.end(), hi) - ob.begin();
      if (s > 0) {
        auto seg = static_cast<std::size_t>(first);
        sl.push_back(s * os[seg]);
        for (auto c = first; c < last; ++c) {
          double t = xr + (ob[c] - vr) / s;
          t = std::clamp(t, bps.empty() ? left : std::max(left, bps.back()), right);
          bps.push_back(t);
          kn.push_back(ok[c]);
          sl.push_back(s * os[++seg]);
        }
      } else {
        auto seg = static_cast<std::size_t>(last);
        sl.push_back(s * os[seg]);
        for (auto c = last; c-- > first;) {
          double t = xr + (ob[c] - vr) / s;
          t = std::clamp(t, bps.empty() ? left : std::max(left, bps.back()), right);
          bps.push_back(t);
          kn.push_back(ok[c]);
          sl.push_back(s * os[--seg]);
        }
      }
    }
    if (j < n) {
      bps.push_back(ib[j]);
      kn.push_back(outer.eval(ik[j]));
    }
  }
  return PiecewiseLinear::from_knots(std::move(bps), std::move(sl), std::move(kn),
                                     outer.eval(inner.anchor()));
}

}  // namespace ndf
