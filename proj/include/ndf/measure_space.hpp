#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ndf {

/// A finite point set with strictly positive point masses.
class FiniteMeasureSpace {
 public:
  FiniteMeasureSpace(std::vector<std::string> point_ids, std::vector<double> weights);

  static std::shared_ptr<const FiniteMeasureSpace> make(std::vector<std::string> point_ids,
                                                        std::vector<double> weights);
  /// Points named "0".."n-1", each of mass one.
  static std::shared_ptr<const FiniteMeasureSpace> counting(std::size_t n);
  static std::shared_ptr<const FiniteMeasureSpace> weighted(std::vector<double> weights);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& point_ids() const { return ids_; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  double min_weight() const;
  double total_mass() const;

  bool operator==(const FiniteMeasureSpace&) const = default;

 private:
  std::vector<std::string> ids_;
  std::vector<double> weights_;
};

using SpacePtr = std::shared_ptr<const FiniteMeasureSpace>;

/// An element of L^2(X, m) for a finite space X. Immutable.
class Fn {
 public:
  Fn(SpacePtr space, std::vector<double> values);

  static Fn zero(SpacePtr space);
  static Fn constant(SpacePtr space, double c);

  const SpacePtr& space() const { return space_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  template <class Op>
  Fn map(Op&& op) const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = op(values_[i]);
    return Fn(space_, std::move(out));
  }

  Fn operator-() const;
  friend Fn operator+(const Fn& a, const Fn& b);
  friend Fn operator-(const Fn& a, const Fn& b);
  friend Fn operator*(double s, const Fn& a);
  friend Fn operator*(const Fn& a, double s) { return s * a; }
  friend Fn operator/(const Fn& a, double s);

  /// Exact value equality on the same space.
  bool operator==(const Fn& other) const;

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

bool same_space(const SpacePtr& a, const SpacePtr& b);
void require_same_space(const Fn& a, const Fn& b);

/// Weighted pairing sum_x m_x f(x) g(x).
double inner(const Fn& f, const Fn& g);
/// L^2(m) norm.
double norm(const Fn& f);
double sup_norm(const Fn& f);
double max_abs_difference(const Fn& f, const Fn& g);

enum class LatticeOp { vee, wedge };

Fn pointwise_lattice(const Fn& f, const Fn& g, LatticeOp op);
inline Fn vee(const Fn& f, const Fn& g) { return pointwise_lattice(f, g, LatticeOp::vee); }
inline Fn wedge(const Fn& f, const Fn& g) { return pointwise_lattice(f, g, LatticeOp::wedge); }

/// Pointwise max(lower, min(f, upper)). Throws InvalidBand if lower > upper anywhere.
Fn median_clamp(const Fn& f, const Fn& lower, const Fn& upper);

/// H_alpha(f, g): f clamped into the band [g - alpha, g + alpha].
Fn band_clamp(const Fn& f, const Fn& g, double alpha);

Fn positive_part(const Fn& f);
Fn abs(const Fn& f);

}  // namespace ndf
