#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "ndf/edge_function.hpp"
#include "ndf/ext_real.hpp"
#include "ndf/measure_space.hpp"

namespace ndf {

/// Ordered edge (from, to) carrying b_{from,to}; the term is b(f(from) - f(to)).
struct Edge {
  std::size_t from;
  std::size_t to;
  EdgeFunction b;
};

/// Immutable extended-value functional on the functions of one space.
class EnergyFunctional {
 public:
  enum class Kind { zero, quadratic, mixed, fshift };

  Kind kind() const;
  const SpacePtr& space() const;

  ExtReal eval(const Fn& f) const;

  /// quadratic: E(g) = g^T A g.
  const Eigen::MatrixXd& matrix() const;
  /// mixed: the edge list.
  const std::vector<Edge>& edges() const;
  /// fshift: base functional, center and the cached finite E(center).
  const EnergyFunctional& base() const;
  const Fn& center() const;
  double base_at_center() const;

  /// False only for negative-control energies with nonconvex edges.
  bool is_convex() const;
  std::string describe() const;

  struct Impl;

 private:
  explicit EnergyFunctional(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;

  friend EnergyFunctional make_zero_energy(SpacePtr space);
  friend EnergyFunctional make_quadratic_form(SpacePtr space, Eigen::MatrixXd matrix);
  friend EnergyFunctional make_negative_control_energy(SpacePtr space, std::vector<Edge> edges);
  friend EnergyFunctional f_shift(const EnergyFunctional& e, const Fn& center);
};

EnergyFunctional make_zero_energy(SpacePtr space);
/// Symmetric positive semidefinite matrix; checked to relative 1e-12.
EnergyFunctional make_quadratic_form(SpacePtr space, Eigen::MatrixXd matrix);
/// Convex edge functions only. An empty edge list gives the zero functional.
EnergyFunctional make_mixed_energy(SpacePtr space, std::vector<Edge> edges);
/// Like make_mixed_energy but admits nonconvex edges.
EnergyFunctional make_negative_control_energy(SpacePtr space, std::vector<Edge> edges);

/// g -> (E(f+g) + E(f-g)) / 2 - E(f). Throws ImproperCenter if E(f) = inf.
EnergyFunctional f_shift(const EnergyFunctional& e, const Fn& center);

/// The f-shift written in the base's own class: shifted edges for mixed
/// energies, the same matrix for quadratic forms, zero for zero.
/// Shifts of shifts fall back to f_shift.
EnergyFunctional explicit_shift(const EnergyFunctional& e, const Fn& center);

/// Flattens nested shifts of mixed, quadratic and zero functionals into one
/// explicit functional. Other functionals are returned unchanged.
EnergyFunctional explicit_form(const EnergyFunctional& e);

inline ExtReal eval(const EnergyFunctional& e, const Fn& f) { return e.eval(f); }

/// Sufficient structural test for E(a g) = a^p E(g), a > 0.
bool is_positively_homogeneous(const EnergyFunctional& e, double p);

}  // namespace ndf
