#include "ndf/functional.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "ndf/error.hpp"

namespace ndf {

struct EnergyFunctional::Impl {
  Kind kind = Kind::zero;
  SpacePtr space;
  Eigen::MatrixXd matrix;
  std::vector<Edge> edges;
  std::optional<EnergyFunctional> base;
  std::optional<Fn> center;
  double base_at_center = 0.0;
  bool convex = true;
};

namespace {

void check_space(const SpacePtr& space, const Fn& f) {
  if (!same_space(space, f.space())) throw DomainMismatch("functional evaluated on a function of another space");
}

void check_edges(const SpacePtr& space, const std::vector<Edge>& edges) {
  for (const Edge& e : edges) {
    if (e.from >= space->size() || e.to >= space->size()) {
      throw InvalidArgument("mixed energy: edge endpoint out of range");
    }
  }
}

}  // namespace

EnergyFunctional::Kind EnergyFunctional::kind() const { return impl_->kind; }
const SpacePtr& EnergyFunctional::space() const { return impl_->space; }
bool EnergyFunctional::is_convex() const { return impl_->convex; }

const Eigen::MatrixXd& EnergyFunctional::matrix() const {
  if (impl_->kind != Kind::quadratic) throw InvalidArgument("matrix(): not a quadratic form");
  return impl_->matrix;
}

const std::vector<Edge>& EnergyFunctional::edges() const {
  if (impl_->kind != Kind::mixed) throw InvalidArgument("edges(): not a mixed energy");
  return impl_->edges;
}

const EnergyFunctional& EnergyFunctional::base() const {
  if (impl_->kind != Kind::fshift) throw InvalidArgument("base(): not an f-shift");
  return *impl_->base;
}

const Fn& EnergyFunctional::center() const {
  if (impl_->kind != Kind::fshift) throw InvalidArgument("center(): not an f-shift");
  return *impl_->center;
}

double EnergyFunctional::base_at_center() const {
  if (impl_->kind != Kind::fshift) throw InvalidArgument("base_at_center(): not an f-shift");
  return impl_->base_at_center;
}

ExtReal EnergyFunctional::eval(const Fn& f) const {
  check_space(impl_->space, f);
  switch (impl_->kind) {
    case Kind::zero:
      return 0.0;
    case Kind::quadratic: {
      const Eigen::Map<const Eigen::VectorXd> v(f.values().data(), static_cast<Eigen::Index>(f.size()));
      return std::max(0.0, v.dot(impl_->matrix * v));
    }
    case Kind::mixed: {
      double sum = 0.0;
      for (const Edge& e : impl_->edges) {
        const double term = e.b.value(f[e.from] - f[e.to]);
        if (!std::isfinite(term)) return ExtReal::infinity();
        sum += term;
      }
      return sum;
    }
    case Kind::fshift: {
      const Fn& c = *impl_->center;
      const ExtReal plus = impl_->base->eval(c + f);
      const ExtReal minus = impl_->base->eval(c - f);
      if (plus.is_infinite() || minus.is_infinite()) return ExtReal::infinity();
      const double v = 0.5 * (plus.value() + minus.value()) - impl_->base_at_center;
      return impl_->convex ? std::max(v, 0.0) : v;
    }
  }
  return ExtReal::infinity();
}

std::string EnergyFunctional::describe() const {
  std::ostringstream os;
  switch (impl_->kind) {
    case Kind::zero:
      os << "zero";
      break;
    case Kind::quadratic:
      os << "quadratic(" << impl_->matrix.rows() << "x" << impl_->matrix.cols() << ")";
      break;
    case Kind::mixed:
      os << (impl_->convex ? "mixed" : "negative_control") << "(" << impl_->edges.size() << " edges)";
      break;
    case Kind::fshift:
      os << "fshift(" << impl_->base->describe() << ")";
      break;
  }
  return os.str();
}

EnergyFunctional make_zero_energy(SpacePtr space) {
  if (!space) throw InvalidArgument("functional: null space");
  auto impl = std::make_shared<EnergyFunctional::Impl>();
  impl->space = std::move(space);
  return EnergyFunctional(std::move(impl));
}

EnergyFunctional make_quadratic_form(SpacePtr space, Eigen::MatrixXd matrix) {
  if (!space) throw InvalidArgument("functional: null space");
  const auto n = static_cast<Eigen::Index>(space->size());
  if (matrix.rows() != n || matrix.cols() != n) throw DomainMismatch("quadratic form: matrix size differs from space size");
  if (!matrix.allFinite()) throw InvalidArgument("quadratic form: matrix entries must be finite");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("quadratic form: matrix is not symmetric");
  }
  Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale * static_cast<double>(n)) {
    throw InvalidArgument("quadratic form: matrix is not positive semidefinite");
  }
  auto impl = std::make_shared<EnergyFunctional::Impl>();
  impl->kind = EnergyFunctional::Kind::quadratic;
  impl->space = std::move(space);
  impl->matrix = std::move(sym);
  return EnergyFunctional(std::move(impl));
}

EnergyFunctional make_negative_control_energy(SpacePtr space, std::vector<Edge> edges) {
  if (!space) throw InvalidArgument("functional: null space");
  check_edges(space, edges);
  auto impl = std::make_shared<EnergyFunctional::Impl>();
  impl->kind = EnergyFunctional::Kind::mixed;
  impl->space = std::move(space);
  for (const Edge& e : edges) impl->convex = impl->convex && e.b.is_convex();
  impl->edges = std::move(edges);
  return EnergyFunctional(std::move(impl));
}

EnergyFunctional make_mixed_energy(SpacePtr space, std::vector<Edge> edges) {
  for (const Edge& e : edges) {
    if (!e.b.is_convex()) throw InvalidArgument("mixed energy: edge function " + e.b.describe() + " is not convex");
  }
  if (edges.empty()) return make_zero_energy(std::move(space));
  return make_negative_control_energy(std::move(space), std::move(edges));
}

EnergyFunctional f_shift(const EnergyFunctional& e, const Fn& center) {
  const ExtReal at_center = e.eval(center);
  if (at_center.is_infinite()) throw ImproperCenter("f_shift: the functional is infinite at the center");
  auto impl = std::make_shared<EnergyFunctional::Impl>();
  impl->kind = EnergyFunctional::Kind::fshift;
  impl->space = e.space();
  impl->base = e;
  impl->center = center;
  impl->base_at_center = at_center.value();
  impl->convex = e.is_convex();
  return EnergyFunctional(std::move(impl));
}

EnergyFunctional explicit_shift(const EnergyFunctional& e, const Fn& center) {
  if (e.eval(center).is_infinite()) throw ImproperCenter("explicit_shift: the functional is infinite at the center");
  switch (e.kind()) {
    case EnergyFunctional::Kind::zero:
    case EnergyFunctional::Kind::quadratic:
      return e;
    case EnergyFunctional::Kind::mixed: {
      std::vector<Edge> shifted;
      shifted.reserve(e.edges().size());
      for (const Edge& edge : e.edges()) {
        shifted.push_back({edge.from, edge.to, edge.b.shifted(center[edge.from] - center[edge.to])});
      }
      return make_negative_control_energy(e.space(), std::move(shifted));
    }
    case EnergyFunctional::Kind::fshift:
      break;
  }
  return f_shift(e, center);
}

EnergyFunctional explicit_form(const EnergyFunctional& e) {
  if (e.kind() != EnergyFunctional::Kind::fshift) return e;
  const EnergyFunctional inner = explicit_form(e.base());
  if (inner.kind() == EnergyFunctional::Kind::fshift) return e;
  return explicit_shift(inner, e.center());
}

bool is_positively_homogeneous(const EnergyFunctional& e, double p) {
  switch (e.kind()) {
    case EnergyFunctional::Kind::zero:
      return true;
    case EnergyFunctional::Kind::quadratic:
      return p == 2.0;
    case EnergyFunctional::Kind::mixed:
      for (const Edge& edge : e.edges()) {
        if (!edge.b.is_homogeneous(p)) return false;
      }
      return true;
    case EnergyFunctional::Kind::fshift:
      return sup_norm(e.center()) == 0.0 && is_positively_homogeneous(e.base(), p);
  }
  return false;
}

}  // namespace ndf
