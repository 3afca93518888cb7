#include "ndf/edge_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ndf/error.hpp"

namespace ndf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign(double t) { return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0); }

void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument("edge function: " + msg);
}

// Smallest t in [lo, hi] with h(t) >= 0 for nondecreasing h.
template <class H>
double bisect_increasing(H&& h, double lo, double hi) {
  if (h(lo) >= 0) return lo;
  for (int it = 0; it < 200 && lo < hi; ++it) {
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    (h(mid) >= 0 ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

EdgeFunction EdgeFunction::power(double p) {
  require(std::isfinite(p) && p >= 1.0, "power exponent must be >= 1");
  return {Kind::power, p};
}

EdgeFunction EdgeFunction::huber(double delta) {
  require(std::isfinite(delta) && delta > 0.0, "huber delta must be > 0");
  return {Kind::huber, delta};
}

EdgeFunction EdgeFunction::interval_indicator(double c) {
  require(std::isfinite(c) && c >= 0.0, "indicator half-width must be finite and >= 0");
  return {Kind::interval_indicator, c};
}

EdgeFunction EdgeFunction::quadratic_weighted(double w) {
  require(std::isfinite(w) && w >= 0.0, "quadratic weight must be finite and >= 0");
  return {Kind::quadratic_weighted, w};
}

EdgeFunction EdgeFunction::truncated_abs(double cap) {
  require(std::isfinite(cap) && cap > 0.0, "truncation level must be > 0");
  return {Kind::truncated_abs, cap};
}

EdgeFunction EdgeFunction::pwl_convex(PiecewiseLinear b) {
  require(b.anchor() == 0.0, "piecewise-linear edge must vanish at 0");
  const auto& bp = b.breakpoints();
  const auto& sl = b.slopes();
  for (std::size_t k = 1; k < sl.size(); ++k) {
    require(sl[k] >= sl[k - 1], "piecewise-linear edge slopes must be nondecreasing (convexity)");
  }
  const std::size_t n = bp.size();
  for (std::size_t k = 0; k < n; ++k) {
    require(std::abs(bp[k] + bp[n - 1 - k]) <= 1e-12 * std::max(1.0, std::abs(bp[k])),
            "piecewise-linear edge must be symmetric");
  }
  for (std::size_t k = 0; k <= n; ++k) {
    require(std::abs(sl[k] + sl[n - k]) <= 1e-12 * std::max(1.0, std::abs(sl[k])),
            "piecewise-linear edge must be symmetric");
  }
  EdgeFunction e(Kind::pwl_convex, 0.0);
  e.pwl_ = std::make_shared<const PiecewiseLinear>(std::move(b));
  return e;
}

EdgeFunction EdgeFunction::shifted(double c) const {
  if (!std::isfinite(c)) throw InvalidArgument("edge shift: offset must be finite");
  if (!std::isfinite(value(c))) throw ImproperCenter("edge shift: b(c) is infinite at c = " + std::to_string(c));
  EdgeFunction e(Kind::shifted, c);
  e.base_ = std::make_shared<const EdgeFunction>(*this);
  return e;
}

double EdgeFunction::value(double t) const {
  const double a = std::abs(t);
  switch (kind_) {
    case Kind::power:
      if (param_ == 1.0) return a;
      if (param_ == 2.0) return t * t;
      return std::pow(a, param_);
    case Kind::huber:
      return a <= param_ ? 0.5 * t * t : param_ * (a - 0.5 * param_);
    case Kind::interval_indicator:
      return a <= param_ ? 0.0 : kInf;
    case Kind::quadratic_weighted:
      return param_ * t * t;
    case Kind::pwl_convex:
      return pwl_->eval(t);
    case Kind::truncated_abs:
      return std::min(a, param_);
    case Kind::shifted: {
      const double plus = base_->value(param_ + t);
      const double minus = base_->value(param_ - t);
      if (!std::isfinite(plus) || !std::isfinite(minus)) return kInf;
      const double v = 0.5 * (plus + minus) - base_->value(param_);
      return base_->is_convex() ? std::max(v, 0.0) : v;
    }
  }
  return kInf;
}

double EdgeFunction::right_derivative(double t) const {
  switch (kind_) {
    case Kind::power:
      if (param_ == 1.0) return t >= 0 ? 1.0 : -1.0;
      return param_ * std::pow(std::abs(t), param_ - 1.0) * sign(t);
    case Kind::huber:
      return std::clamp(t, -param_, param_);
    case Kind::interval_indicator:
      if (t < -param_) return -kInf;
      return t < param_ ? 0.0 : kInf;
    case Kind::quadratic_weighted:
      return 2.0 * param_ * t;
    case Kind::pwl_convex:
      return pwl_->slopes()[pwl_->segment_of(t)];
    case Kind::truncated_abs:
      if (std::abs(t) >= param_) return 0.0;
      return t >= 0 ? 1.0 : -1.0;
    case Kind::shifted:
      return 0.5 * (base_->right_derivative(param_ + t) - base_->left_derivative(param_ - t));
  }
  return 0.0;
}

double EdgeFunction::left_derivative(double t) const {
  switch (kind_) {
    case Kind::power:
      if (param_ == 1.0) return t > 0 ? 1.0 : -1.0;
      return right_derivative(t);
    case Kind::interval_indicator:
      if (t <= -param_) return -kInf;
      return t <= param_ ? 0.0 : kInf;
    case Kind::pwl_convex: {
      const auto& bp = pwl_->breakpoints();
      const auto k = std::lower_bound(bp.begin(), bp.end(), t) - bp.begin();
      return pwl_->slopes()[static_cast<std::size_t>(k)];
    }
    case Kind::truncated_abs:
      if (std::abs(t) > param_) return 0.0;
      if (std::abs(t) == param_) return t > 0 ? 1.0 : 0.0;
      return t > 0 ? 1.0 : -1.0;
    case Kind::shifted:
      return 0.5 * (base_->left_derivative(param_ + t) - base_->right_derivative(param_ - t));
    default:
      return right_derivative(t);
  }
}

double EdgeFunction::second_derivative(double t) const {
  switch (kind_) {
    case Kind::power:
      if (param_ == 2.0) return 2.0;
      if (param_ == 1.0) return 0.0;
      return param_ * (param_ - 1.0) * std::pow(std::abs(t), param_ - 2.0);
    case Kind::huber:
      return std::abs(t) <= param_ ? 1.0 : 0.0;
    case Kind::quadratic_weighted:
      return 2.0 * param_;
    case Kind::shifted:
      return 0.5 * (base_->second_derivative(param_ + t) + base_->second_derivative(param_ - t));
    default:
      return 0.0;
  }
}

bool EdgeFunction::is_convex() const {
  if (kind_ == Kind::truncated_abs) return false;
  if (kind_ == Kind::shifted) return base_->is_convex();
  return true;
}

bool EdgeFunction::is_smooth() const {
  switch (kind_) {
    case Kind::power:
      return param_ >= 2.0;
    case Kind::huber:
    case Kind::quadratic_weighted:
      return true;
    case Kind::shifted:
      return base_->is_smooth();
    default:
      return false;
  }
}

double EdgeFunction::domain_radius() const {
  if (kind_ == Kind::interval_indicator) return param_;
  if (kind_ == Kind::shifted) return base_->domain_radius() - std::abs(param_);
  return kInf;
}

bool EdgeFunction::is_homogeneous(double p) const {
  switch (kind_) {
    case Kind::power:
      return param_ == p;
    case Kind::quadratic_weighted:
      return p == 2.0;
    case Kind::interval_indicator:
      return param_ == 0.0;
    case Kind::pwl_convex:
      return p == 1.0 && (pwl_->breakpoints().empty() ||
                          (pwl_->breakpoints().size() == 1 && pwl_->breakpoints()[0] == 0.0));
    case Kind::shifted:
      return param_ == 0.0 && base_->is_homogeneous(p);
    default:
      return false;
  }
}

double EdgeFunction::prox(double z, double scale) const {
  if (!(scale > 0.0)) throw InvalidArgument("edge prox: scale must be > 0");
  const double a = std::abs(z);
  switch (kind_) {
    case Kind::power: {
      const double p = param_;
      if (p == 1.0) return sign(z) * std::max(a - scale, 0.0);
      if (p == 2.0) return z / (1.0 + 2.0 * scale);
      // Solve t + scale p t^(p-1) = |z| on [0, |z|] by safeguarded Newton.
      double lo = 0.0, hi = a, t = a;
      for (int it = 0; it < 100; ++it) {
        const double h = t + scale * p * std::pow(t, p - 1.0) - a;
        if (h > 0) hi = t; else lo = t;
        if (h == 0.0 || hi - lo <= 1e-16 * std::max(1.0, a)) break;
        const double dh = 1.0 + scale * p * (p - 1.0) * std::pow(t, p - 2.0);
        double next = t - h / dh;
        if (!(next > lo && next < hi)) next = lo + (hi - lo) / 2;
        if (next == t) break;
        t = next;
      }
      return sign(z) * t;
    }
    case Kind::huber:
      if (a <= param_ * (1.0 + scale)) return z / (1.0 + scale);
      return z - scale * param_ * sign(z);
    case Kind::interval_indicator:
      return std::clamp(z, -param_, param_);
    case Kind::quadratic_weighted:
      return z / (1.0 + 2.0 * scale * param_);
    case Kind::pwl_convex: {
      // 0 in scale * db(t) + t - z: scan segments and knots left to right.
      const auto& bp = pwl_->breakpoints();
      const auto& sl = pwl_->slopes();
      for (std::size_t k = 0; k < bp.size(); ++k) {
        const double t = z - scale * sl[k];
        if (t < bp[k]) return t;
        if (z <= bp[k] + scale * sl[k + 1]) return bp[k];
      }
      return z - scale * sl.back();
    }
    case Kind::truncated_abs:
      throw InvalidArgument("edge prox: truncated_abs is nonconvex");
    case Kind::shifted: {
      const double lo = std::min(0.0, z), hi = std::max(0.0, z);
      return bisect_increasing(
          [&](double t) { return t - z + scale * right_derivative(t); }, lo, hi);
    }
  }
  return z;
}

std::string EdgeFunction::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::power: os << "power(p=" << param_ << ")"; break;
    case Kind::huber: os << "huber(delta=" << param_ << ")"; break;
    case Kind::interval_indicator: os << "interval_indicator(c=" << param_ << ")"; break;
    case Kind::quadratic_weighted: os << "quadratic_weighted(w=" << param_ << ")"; break;
    case Kind::pwl_convex: os << "pwl_convex(" << pwl_->breakpoints().size() << " breakpoints)"; break;
    case Kind::truncated_abs: os << "truncated_abs(cap=" << param_ << ")"; break;
    case Kind::shifted: os << "shifted(" << base_->describe() << ", c=" << param_ << ")"; break;
  }
  return os.str();
}

}  // namespace ndf
