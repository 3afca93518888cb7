#include "ndf/measure_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ndf/error.hpp"

namespace ndf {

FiniteMeasureSpace::FiniteMeasureSpace(std::vector<std::string> point_ids,
                                       std::vector<double> weights)
    : ids_(std::move(point_ids)), weights_(std::move(weights)) {
  if (ids_.size() != weights_.size()) {
    throw InvalidArgument("measure space: " + std::to_string(ids_.size()) + " points but " +
                          std::to_string(weights_.size()) + " weights");
  }
  for (double w : weights_) {
    if (!std::isfinite(w) || w <= 0.0) {
      throw InvalidArgument("measure space: weights must be finite and strictly positive");
    }
  }
  std::set<std::string> seen(ids_.begin(), ids_.end());
  if (seen.size() != ids_.size()) throw InvalidArgument("measure space: duplicate point id");
}

SpacePtr FiniteMeasureSpace::make(std::vector<std::string> point_ids, std::vector<double> weights) {
  return std::make_shared<const FiniteMeasureSpace>(std::move(point_ids), std::move(weights));
}

SpacePtr FiniteMeasureSpace::counting(std::size_t n) {
  return weighted(std::vector<double>(n, 1.0));
}

SpacePtr FiniteMeasureSpace::weighted(std::vector<double> weights) {
  std::vector<std::string> ids(weights.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
  return make(std::move(ids), std::move(weights));
}

double FiniteMeasureSpace::min_weight() const {
  return weights_.empty() ? 1.0 : *std::min_element(weights_.begin(), weights_.end());
}

double FiniteMeasureSpace::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Fn::Fn(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw InvalidArgument("function without a space");
  if (values_.size() != space_->size()) {
    throw DomainMismatch("function has " + std::to_string(values_.size()) +
                         " values on a space of " + std::to_string(space_->size()) + " points");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("function values must be finite");
  }
}

Fn Fn::zero(SpacePtr space) { return constant(std::move(space), 0.0); }

Fn Fn::constant(SpacePtr space, double c) {
  const std::size_t n = space ? space->size() : 0;
  return Fn(std::move(space), std::vector<double>(n, c));
}

bool same_space(const SpacePtr& a, const SpacePtr& b) { return a == b || (a && b && *a == *b); }

void require_same_space(const Fn& a, const Fn& b) {
  if (!same_space(a.space(), b.space())) throw DomainMismatch("functions live on different spaces");
}

namespace {

template <class Op>
Fn zip(const Fn& a, const Fn& b, Op op) {
  require_same_space(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i], b[i]);
  return Fn(a.space(), std::move(out));
}

}  // namespace

Fn Fn::operator-() const {
  return map([](double v) { return -v; });
}

Fn operator+(const Fn& a, const Fn& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}

Fn operator-(const Fn& a, const Fn& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}

Fn operator*(double s, const Fn& a) {
  return a.map([s](double v) { return s * v; });
}

Fn operator/(const Fn& a, double s) {
  return a.map([s](double v) { return v / s; });
}

bool Fn::operator==(const Fn& other) const {
  return same_space(space_, other.space_) && values_ == other.values_;
}

double inner(const Fn& f, const Fn& g) {
  require_same_space(f, g);
  const auto w = f.space()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * g[i];
  return s;
}

double norm(const Fn& f) { return std::sqrt(inner(f, f)); }

double sup_norm(const Fn& f) {
  double s = 0.0;
  for (double v : f.values()) s = std::max(s, std::abs(v));
  return s;
}

double max_abs_difference(const Fn& f, const Fn& g) {
  require_same_space(f, g);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s = std::max(s, std::abs(f[i] - g[i]));
  return s;
}

Fn pointwise_lattice(const Fn& f, const Fn& g, LatticeOp op) {
  if (op == LatticeOp::vee) return zip(f, g, [](double x, double y) { return std::max(x, y); });
  return zip(f, g, [](double x, double y) { return std::min(x, y); });
}

Fn median_clamp(const Fn& f, const Fn& lower, const Fn& upper) {
  require_same_space(f, lower);
  require_same_space(f, upper);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (lower[i] > upper[i]) {
      throw InvalidBand("median_clamp: lower bound exceeds upper bound at point " +
                        f.space()->point_ids()[i]);
    }
    out[i] = std::max(lower[i], std::min(f[i], upper[i]));
  }
  return Fn(f.space(), std::move(out));
}

Fn band_clamp(const Fn& f, const Fn& g, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("band_clamp: alpha must be nonnegative");
  return median_clamp(f, g.map([alpha](double v) { return v - alpha; }),
                      g.map([alpha](double v) { return v + alpha; }));
}

Fn positive_part(const Fn& f) {
  return f.map([](double v) { return std::max(v, 0.0); });
}

Fn abs(const Fn& f) {
  return f.map([](double v) { return std::abs(v); });
}

}  // namespace ndf
