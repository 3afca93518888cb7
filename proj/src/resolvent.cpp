#include "ndf/resolvent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <tuple>

#include "ndf/error.hpp"

namespace ndf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Kind = EnergyFunctional::Kind;

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd to_vec(const Fn& f) {
  VectorXd v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) v[static_cast<Eigen::Index>(i)] = f[i];
  return v;
}

Fn to_fn(const SpacePtr& space, const VectorXd& v) { return Fn(space, std::vector<double>(v.data(), v.data() + v.size())); }

// Prox problem min E(g) + |g - f|_m^2 / (2 lambda) on a flattened functional.
struct Problem {
  EnergyFunctional e;
  SpacePtr space;
  VectorXd m;
  VectorXd f;
  double lambda;

  Kind kind() const { return e.kind(); }
  const std::vector<Edge>& edges() const { return e.edges(); }

  double fit(const VectorXd& g) const { return (g - f).cwiseAbs2().dot(m) / (2.0 * lambda); }

  double energy(const VectorXd& g) const {
    switch (kind()) {
      case Kind::zero:
        return 0.0;
      case Kind::quadratic:
        return std::max(0.0, g.dot(e.matrix() * g));
      default: {
        double sum = 0.0;
        for (const Edge& ed : edges()) {
          sum += ed.b.value(g[static_cast<Eigen::Index>(ed.from)] - g[static_cast<Eigen::Index>(ed.to)]);
        }
        return sum;
      }
    }
  }

  double objective(const VectorXd& g) const { return energy(g) + fit(g); }

  VectorXd energy_gradient(const VectorXd& g) const {
    switch (kind()) {
      case Kind::zero:
        return VectorXd::Zero(g.size());
      case Kind::quadratic:
        return 2.0 * (e.matrix() * g);
      default: {
        VectorXd out = VectorXd::Zero(g.size());
        for (const Edge& ed : edges()) {
          const auto x = static_cast<Eigen::Index>(ed.from);
          const auto y = static_cast<Eigen::Index>(ed.to);
          const double d = g[x] - g[y];
          const double s = 0.5 * (ed.b.right_derivative(d) + ed.b.left_derivative(d));
          out[x] += s;
          out[y] -= s;
        }
        return out;
      }
    }
  }

  MatrixXd energy_hessian(const VectorXd& g) const {
    const auto n = g.size();
    switch (kind()) {
      case Kind::zero:
        return MatrixXd::Zero(n, n);
      case Kind::quadratic:
        return 2.0 * e.matrix();
      default: {
        MatrixXd h = MatrixXd::Zero(n, n);
        for (const Edge& ed : edges()) {
          const auto x = static_cast<Eigen::Index>(ed.from);
          const auto y = static_cast<Eigen::Index>(ed.to);
          const double c = ed.b.second_derivative(g[x] - g[y]);
          h(x, x) += c;
          h(y, y) += c;
          h(x, y) -= c;
          h(y, x) -= c;
        }
        return h;
      }
    }
  }

  // Euclidean gradient of the objective.
  VectorXd gradient(const VectorXd& g) const { return energy_gradient(g) + m.cwiseProduct(g - f) / lambda; }

  // |m^{-1} grad|_m
  double residual_of(const VectorXd& grad) const { return std::sqrt(grad.cwiseAbs2().cwiseQuotient(m).sum()); }

  bool smooth() const {
    if (kind() != Kind::mixed) return true;
    return std::all_of(edges().begin(), edges().end(), [](const Edge& ed) { return ed.b.is_smooth(); });
  }

  bool forced_equality_only() const {
    if (kind() == Kind::zero) return true;
    if (kind() != Kind::mixed) return false;
    return std::all_of(edges().begin(), edges().end(), [](const Edge& ed) { return ed.b.domain_radius() == 0.0; });
  }

  bool finite_everywhere() const {
    if (kind() != Kind::mixed) return true;
    return std::all_of(edges().begin(), edges().end(),
                       [](const Edge& ed) { return std::isinf(ed.b.domain_radius()); });
  }
};

ResolventResult finish(const Problem& pr, const VectorXd& g, double residual, int iterations, double tol,
                       SolverStrategy s) {
  ResolventResult r{to_fn(pr.space, g), pr.objective(g), residual, iterations, residual <= tol, s};
  return r;
}

ResolventResult solve_exact_indicators(const Problem& pr) {
  const auto n = static_cast<std::size_t>(pr.f.size());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  if (pr.kind() == Kind::mixed) {
    for (const Edge& ed : pr.edges()) parent[find(ed.from)] = find(ed.to);
  }
  std::vector<double> mass(n, 0.0);
  std::vector<double> moment(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    mass[find(i)] += pr.m[k];
    moment[find(i)] += pr.m[k] * pr.f[k];
  }
  VectorXd g(pr.f.size());
  for (std::size_t i = 0; i < n; ++i) g[static_cast<Eigen::Index>(i)] = moment[find(i)] / mass[find(i)];
  ResolventResult r{to_fn(pr.space, g), pr.fit(g), 0.0, 1, true, SolverStrategy::projected_exact_for_indicators};
  return r;
}

ResolventResult solve_newton(const Problem& pr, const SolverConfig& cfg) {
  VectorXd g = pr.f;
  VectorXd grad = pr.gradient(g);
  double res = pr.residual_of(grad);
  double phi = pr.objective(g);
  const MatrixXd mass = pr.m.asDiagonal();
  int it = 0;
  while (res > cfg.tolerance && it < cfg.max_iterations) {
    ++it;
    const MatrixXd h = pr.energy_hessian(g) + mass / pr.lambda;
    const VectorXd step = -h.ldlt().solve(grad);
    const double slope = grad.dot(step);
    double t = 1.0;
    VectorXd next = g + t * step;
    double phi_next = pr.objective(next);
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      if (phi_next <= phi + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      // Near the optimum the decrease is below rounding; a full step that
      // shrinks the gradient is still progress.
      if (k == 0 && pr.residual_of(pr.gradient(next)) < res) {
        accepted = true;
        break;
      }
      t *= 0.5;
      next = g + t * step;
      phi_next = pr.objective(next);
    }
    if (!accepted) break;
    g = next;
    phi = phi_next;
    grad = pr.gradient(g);
    res = pr.residual_of(grad);
  }
  return finish(pr, g, res, it, cfg.tolerance, SolverStrategy::newton_backtracking);
}

ResolventResult solve_prox_gradient(const Problem& pr, const SolverConfig& cfg) {
  VectorXd x = pr.f;
  VectorXd y = x;
  double tau = pr.lambda;
  double momentum = 1.0;
  VectorXd grad_x = pr.energy_gradient(x);
  double res = pr.residual_of(grad_x + pr.m.cwiseProduct(x - pr.f) / pr.lambda);
  int it = 0;
  while (res > cfg.tolerance && it < cfg.max_iterations) {
    ++it;
    const VectorXd grad_y = pr.energy_gradient(y);
    const double ey = pr.energy(y);
    const VectorXd direction = grad_y.cwiseQuotient(pr.m);
    VectorXd next;
    for (int k = 0; k < 80; ++k) {
      next = (pr.lambda * (y - tau * direction) + tau * pr.f) / (pr.lambda + tau);
      const VectorXd dy = next - y;
      const double model = ey + grad_y.dot(dy) + dy.cwiseAbs2().dot(pr.m) / (2.0 * tau);
      if (pr.energy(next) <= model + 1e-15 * std::max(1.0, std::abs(ey))) break;
      tau *= 0.5;
    }
    // Adaptive restart when the step opposes the momentum direction.
    const bool restart = (y - next).cwiseProduct(pr.m).dot(next - x) > 0.0;
    const double following = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = restart ? next : VectorXd(next + ((momentum - 1.0) / following) * (next - x));
    momentum = following;
    x = next;
    grad_x = pr.energy_gradient(x);
    res = pr.residual_of(grad_x + pr.m.cwiseProduct(x - pr.f) / pr.lambda);
    tau *= 1.1;
  }
  return finish(pr, x, res, it, cfg.tolerance, SolverStrategy::proximal_gradient_backtracking);
}

// Edge-wise dual: y_e pairs with (Dg)_e, g(y) = f - lambda m^{-1} D^T y.
struct Dual {
  const Problem& pr;
  MatrixXd d;

  explicit Dual(const Problem& p) : pr(p), d(MatrixXd::Zero(static_cast<Eigen::Index>(p.edges().size()), p.f.size())) {
    for (std::size_t k = 0; k < p.edges().size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      d(row, static_cast<Eigen::Index>(p.edges()[k].from)) += 1.0;
      d(row, static_cast<Eigen::Index>(p.edges()[k].to)) -= 1.0;
    }
  }

  VectorXd primal(const VectorXd& y) const { return pr.f - pr.lambda * (d.transpose() * y).cwiseQuotient(pr.m); }

  double lipschitz() const {
    const VectorXd s = pr.m.cwiseSqrt().cwiseInverse();
    const MatrixXd k = s.asDiagonal() * (d.transpose() * d) * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k, Eigen::EigenvaluesOnly);
    return pr.lambda * std::max(eig.eigenvalues().maxCoeff(), 0.0);
  }

  // mean + theta (g - mean) for the largest theta in [0, 1] with finite energy
  // (to rounding).
  VectorXd feasible(const VectorXd& g) const {
    if (std::isfinite(pr.energy(g))) return g;
    const VectorXd dg = d * g;
    double theta = 1.0;
    for (std::size_t k = 0; k < pr.edges().size(); ++k) {
      const double r = pr.edges()[k].b.domain_radius();
      const double a = std::abs(dg[static_cast<Eigen::Index>(k)]);
      if (a > r) theta = std::min(theta, r / a);
    }
    const double mean = pr.m.dot(g) / pr.m.sum();
    const VectorXd centre = VectorXd::Constant(g.size(), mean);
    auto at = [&](double th) -> VectorXd { return centre + th * (g - centre); };
    double hi = 1.0;
    double shrink = 4.0 * std::numeric_limits<double>::epsilon();
    for (int k = 0; k < 60 && !std::isfinite(pr.energy(at(theta))); ++k, shrink *= 2.0) {
      hi = theta;
      theta *= 1.0 - shrink;
    }
    for (int k = 0; k < 40 && hi - theta > std::numeric_limits<double>::epsilon(); ++k) {
      const double mid = 0.5 * (theta + hi);
      if (std::isfinite(pr.energy(at(mid)))) {
        theta = mid;
      } else {
        hi = mid;
      }
    }
    return at(theta);
  }

  // Phi(gh) - Psi(y), written as per-edge Fenchel-Young terms plus a fit correction.
  double gap(const VectorXd& y, const VectorXd& t, const VectorXd& g, const VectorXd& gh) const {
    const VectorXd dg = d * g;
    const VectorXd dgh = d * gh;
    double sum = 0.0;
    for (std::size_t k = 0; k < pr.edges().size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      const EdgeFunction& b = pr.edges()[k].b;
      sum += b.value(dgh[i]) - b.value(t[i]) - y[i] * (dg[i] - t[i]);
    }
    sum += (gh - g).cwiseProduct(gh + g - 2.0 * pr.f).dot(pr.m) / (2.0 * pr.lambda);
    return sum;
  }
};

std::vector<double> kinks_of(const EdgeFunction& b) {
  switch (b.kind()) {
    case EdgeFunction::Kind::power:
      return b.parameter() < 2.0 ? std::vector<double>{0.0} : std::vector<double>{};
    case EdgeFunction::Kind::interval_indicator:
      return {-b.parameter(), b.parameter()};
    case EdgeFunction::Kind::pwl_convex:
      return b.pwl().breakpoints();
    case EdgeFunction::Kind::shifted: {
      std::vector<double> out;
      for (double k : kinks_of(b.base())) {
        out.push_back(k - b.parameter());
        out.push_back(b.parameter() - k);
      }
      return out;
    }
    default:
      return {};
  }
}

// Points where b' jumps or b'' blows up.
std::vector<double> true_kinks(const EdgeFunction& b) {
  std::vector<double> out;
  for (double k : kinks_of(b)) {
    if (std::abs(k) > b.domain_radius()) continue;
    if (b.right_derivative(k) > b.left_derivative(k) || !std::isfinite(b.second_derivative(k))) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double snap_radius(double a, double b) {
  return 32.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(a), std::abs(b)});
}

struct Kinks {
  std::vector<std::vector<double>> at;
  // The subset where b' jumps.
  std::vector<std::vector<double>> jumps;

  explicit Kinks(const Problem& pr) {
    for (const Edge& ed : pr.edges()) {
      at.push_back(true_kinks(ed.b));
      jumps.emplace_back();
      for (double k : at.back()) {
        if (ed.b.right_derivative(k) > ed.b.left_derivative(k)) jumps.back().push_back(k);
      }
    }
  }

  // Nearest kink of edge k within radius of t.
  std::optional<double> near(std::size_t k, double t, double radius) const {
    std::optional<double> best;
    for (double kink : at[k]) {
      if (std::abs(kink - t) <= radius && (!best || std::abs(kink - t) < std::abs(*best - t))) best = kink;
    }
    return best;
  }
};

// Subgradients of b over the rounding neighbourhood [t - r, t + r].
std::pair<double, double> subgradient_hull(const EdgeFunction& b, double t, double r) {
  return {b.left_derivative(t - r), b.right_derivative(t + r)};
}

// |m^{-1} s|_m for s = D^T y + m (g - f) / lambda, minimized over y_e in the
// subgradients of b_e near (Dg)_e by projected coordinate descent from the
// hint. The difference is only known up to a few ulps, so kinks within that
// distance count as reached.
double subgradient_certificate(const Problem& pr, const Dual& dual, const VectorXd& g, const VectorXd& hint) {
  const VectorXd dg = dual.d * g;
  const auto ne = dg.size();
  VectorXd y(ne);
  VectorXd lo(ne);
  VectorXd hi(ne);
  for (Eigen::Index i = 0; i < ne; ++i) {
    const Edge& ed = pr.edges()[static_cast<std::size_t>(i)];
    if (!std::isfinite(ed.b.value(dg[i]))) return kInf;
    const double radius =
        snap_radius(g[static_cast<Eigen::Index>(ed.from)], g[static_cast<Eigen::Index>(ed.to)]);
    std::tie(lo[i], hi[i]) = subgradient_hull(ed.b, dg[i], radius);
    double start = hint[i];
    if (!std::isfinite(start)) start = std::isfinite(lo[i] + hi[i]) ? 0.5 * (lo[i] + hi[i]) : 0.0;
    y[i] = std::clamp(start, lo[i], hi[i]);
    if (!std::isfinite(y[i])) return kInf;
  }
  const VectorXd inv_m = pr.m.cwiseInverse();
  VectorXd s = dual.d.transpose() * y + pr.m.cwiseProduct(g - pr.f) / pr.lambda;
  double res = pr.residual_of(s);
  for (int sweep = 0; sweep < 100 && res > 0.0; ++sweep) {
    for (Eigen::Index i = 0; i < ne; ++i) {
      if (lo[i] == hi[i]) continue;
      const auto row = dual.d.row(i);
      const double curvature = row.cwiseAbs2().dot(inv_m.transpose());
      const double next = std::clamp(y[i] - row.dot(s.cwiseProduct(inv_m)) / curvature, lo[i], hi[i]);
      s += (next - y[i]) * row.transpose();
      y[i] = next;
    }
    const double updated = pr.residual_of(s);
    if (updated > 0.999 * res) {
      res = std::min(res, updated);
      break;
    }
    res = updated;
  }
  return pr.residual_of(dual.d.transpose() * y + pr.m.cwiseProduct(g - pr.f) / pr.lambda);
}

struct Polished {
  VectorXd g;
  double residual = kInf;
};

// Active-set Newton: edges whose difference sits on a kink are held there by a
// multiplier, the others follow their local second-order model. Returns the
// best certified round.
Polished polish(const Problem& pr, const Dual& dual, const Kinks& kinks, const VectorXd& start,
                const VectorXd& witness, double radius) {
  const auto n = pr.f.size();
  const std::size_t ne = pr.edges().size();
  std::vector<std::optional<double>> active(ne);
  for (std::size_t k = 0; k < ne; ++k) {
    const double t = witness[static_cast<Eigen::Index>(k)];
    active[k] = kinks.near(k, t, std::max(radius, snap_radius(t, 0.0)));
  }
  VectorXd g = start;
  VectorXd y = VectorXd::Zero(static_cast<Eigen::Index>(ne));
  Polished best{start, kInf};
  for (int round = 0; round < 10; ++round) {
    const VectorXd d_start = dual.d * g;
    // Independent subset of the active rows, widest subgradient range first;
    // the dropped rows are implied by the kept ones or inconsistent with them.
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < ne; ++k) {
      if (active[k]) order.push_back(k);
    }
    auto width = [&](std::size_t k) {
      const auto [lo, hi] = subgradient_hull(pr.edges()[k].b, *active[k], snap_radius(*active[k], 1.0));
      return hi - lo;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return width(a) > width(b); });
    std::vector<std::size_t> rows;
    std::vector<VectorXd> basis;
    for (std::size_t k : order) {
      VectorXd r = dual.d.row(static_cast<Eigen::Index>(k)).transpose();
      for (const VectorXd& q : basis) r -= q.dot(r) * q;
      if (r.norm() > 1e-9) {
        basis.push_back(r / r.norm());
        rows.push_back(k);
      }
    }
    const auto na = static_cast<Eigen::Index>(rows.size());
    VectorXd mu = VectorXd::Zero(na);
    // Free edges plus the fit; active edges are constant on the constraint set.
    auto reduced = [&](const VectorXd& x) {
      const VectorXd dx = dual.d * x;
      double sum = pr.fit(x);
      for (std::size_t k = 0; k < ne; ++k) {
        if (!active[k]) sum += pr.edges()[k].b.value(dx[static_cast<Eigen::Index>(k)]);
      }
      return sum;
    };
    for (int it = 0; it < 60; ++it) {
      VectorXd grad = pr.m.cwiseProduct(g - pr.f) / pr.lambda;
      MatrixXd kkt = MatrixXd::Zero(n + na, n + na);
      kkt.topLeftCorner(n, n).diagonal() = pr.m / pr.lambda;
      const VectorXd dg = dual.d * g;
      for (std::size_t k = 0; k < ne; ++k) {
        if (active[k]) continue;
        const auto i = static_cast<Eigen::Index>(k);
        const EdgeFunction& b = pr.edges()[k].b;
        const double slope = 0.5 * (b.left_derivative(dg[i]) + b.right_derivative(dg[i]));
        double curv = b.second_derivative(dg[i]);
        if (!std::isfinite(curv) || curv > 1e12) curv = 1e12;
        grad += slope * dual.d.row(i).transpose();
        kkt.topLeftCorner(n, n) += curv * dual.d.row(i).transpose() * dual.d.row(i);
      }
      if (!grad.allFinite()) break;
      VectorXd rhs(n + na);
      rhs.head(n) = -grad;
      for (Eigen::Index r = 0; r < na; ++r) {
        const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
        kkt.block(n + r, 0, 1, n) = dual.d.row(i);
        kkt.block(0, n + r, n, 1) = dual.d.row(i).transpose();
        rhs[n + r] = *active[rows[static_cast<std::size_t>(r)]] - dg[i];
      }
      const VectorXd sol = kkt.partialPivLu().solve(rhs);
      if (!sol.allFinite()) break;
      const VectorXd step = sol.head(n);
      double t = 1.0;
      // The first step lands on the constraint set; later ones are damped.
      if (it > 0) {
        const double base = reduced(g);
        const double slope = grad.dot(step);
        while (t > 1e-12 && !(reduced(g + t * step) <= base + 1e-4 * t * slope)) t *= 0.5;
        if (t <= 1e-12) break;
      }
      g += t * step;
      mu = sol.tail(na);
      if (t * step.norm() <= 1e-15 * (1.0 + g.norm())) break;
    }
    for (std::size_t k = 0; k < ne; ++k) y[static_cast<Eigen::Index>(k)] = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index r = 0; r < na; ++r) y[static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)])] = mu[r];

    const VectorXd gh = dual.feasible(g);
    const double res = subgradient_certificate(pr, dual, gh, y);
    if (res < best.residual) best = {gh, res};
    if (res <= 1e-13 * (1.0 + pr.f.cwiseAbs().maxCoeff() / pr.lambda)) break;

    bool changed = false;
    const VectorXd d_end = dual.d * g;
    for (std::size_t k = 0; k < ne; ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      const EdgeFunction& b = pr.edges()[k].b;
      if (active[k]) {
        const double scale = 1e-9 * (1.0 + std::abs(y[i]));
        const auto [lo, hi] = subgradient_hull(b, *active[k], snap_radius(*active[k], 1.0));
        if (y[i] < lo - scale || y[i] > hi + scale) {
          active[k].reset();
          changed = true;
        }
        continue;
      }
      // A free edge whose difference crossed a kink is pinned at the first one.
      const double lo = std::min(d_start[i], d_end[i]);
      const double hi = std::max(d_start[i], d_end[i]);
      std::optional<double> crossed;
      for (double kink : kinks.jumps[k]) {
        if (kink > lo && kink < hi &&
            (!crossed || std::abs(kink - d_start[i]) < std::abs(*crossed - d_start[i]))) {
          crossed = kink;
        }
      }
      if (crossed) {
        active[k] = crossed;
        changed = true;
      }
    }
    if (!changed) break;
    g = start;
  }
  return best;
}

ResolventResult solve_dual_fista(const Problem& pr, const SolverConfig& cfg) {
  const Dual dual(pr);
  const Kinks kinks(pr);
  const double lip = dual.lipschitz();
  const auto ne = static_cast<Eigen::Index>(pr.edges().size());
  if (lip == 0.0) return finish(pr, pr.f, 0.0, 0, cfg.tolerance, SolverStrategy::dual_fista);
  const double tau = 1.0 / lip;
  const double pointwise = pr.lambda / std::sqrt(pr.m.minCoeff());

  VectorXd y = VectorXd::Zero(ne);
  VectorXd w = y;
  VectorXd t = VectorXd::Zero(ne);
  double momentum = 1.0;
  double psi_prev = -kInf;

  VectorXd best = pr.f;
  double best_res = kInf;
  int it = 0;

  auto consider = [&](const VectorXd& g, double res) {
    if (res < best_res) {
      best_res = res;
      best = g;
    }
  };

  auto certify = [&](const VectorXd& yk, const VectorXd& tk) {
    const VectorXd g = dual.primal(yk);
    const VectorXd gh = dual.feasible(g);
    consider(gh, std::sqrt(2.0 * std::max(dual.gap(yk, tk, g, gh), 0.0) / pr.lambda));
    if (best_res <= cfg.tolerance) return;
    const double radius = std::isfinite(best_res) ? 2.0 * pointwise * best_res : 0.0;
    const Polished p = polish(pr, dual, kinks, g, tk, radius);
    consider(p.g, p.residual);
  };

  while (it < cfg.max_iterations) {
    ++it;
    const VectorXd z = w + tau * (dual.d * dual.primal(w));
    VectorXd y_next(ne);
    for (Eigen::Index k = 0; k < ne; ++k) {
      const EdgeFunction& b = pr.edges()[static_cast<std::size_t>(k)].b;
      t[k] = b.prox(z[k] / tau, 1.0 / tau);
      y_next[k] = z[k] - tau * t[k];
    }
    // Dual value Psi(y); momentum restarts when it drops.
    const VectorXd gy = dual.primal(y_next);
    double psi = y_next.dot(dual.d * gy) + pr.fit(gy);
    for (Eigen::Index k = 0; k < ne; ++k) {
      const EdgeFunction& b = pr.edges()[static_cast<std::size_t>(k)].b;
      psi -= y_next[k] * t[k] - b.value(t[k]);
    }
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    if (psi < psi_prev) {
      momentum = 1.0;
      w = y_next;
    } else {
      w = y_next + ((momentum - 1.0) / next_momentum) * (y_next - y);
      momentum = next_momentum;
    }
    psi_prev = psi;
    y = y_next;
    if (it % 10 == 0 || it == cfg.max_iterations) {
      certify(y, t);
      if (best_res <= cfg.tolerance) break;
    }
  }
  return finish(pr, best, best_res, it, cfg.tolerance, SolverStrategy::dual_fista);
}

// Best-effort residual for a nonsmooth point: the midpoint subgradient on each edge.
ResolventResult solve_subgradient(const Problem& pr, const SolverConfig& cfg) {
  if (!pr.finite_everywhere()) {
    throw InvalidArgument("resolvent: subgradient_diminishing needs finite-valued edge functions");
  }
  VectorXd g = pr.f;
  VectorXd best = g;
  double best_phi = pr.objective(g);
  double res = pr.residual_of(pr.gradient(g));
  double best_res = res;
  int it = 0;
  const double scale = pr.lambda;
  while (best_res > cfg.tolerance && it < cfg.max_iterations) {
    ++it;
    const VectorXd grad = pr.gradient(g);
    res = pr.residual_of(grad);
    if (res == 0.0) break;
    g -= (scale / std::sqrt(static_cast<double>(it))) * grad.cwiseQuotient(pr.m);
    const double phi = pr.objective(g);
    if (phi < best_phi) {
      best_phi = phi;
      best = g;
      best_res = pr.residual_of(pr.gradient(g));
    }
  }
  return finish(pr, best, best_res, it, cfg.tolerance, SolverStrategy::subgradient_diminishing);
}

ResolventResult solve(const Problem& pr, SolverStrategy s, const SolverConfig& cfg);

Problem make_problem(const EnergyFunctional& e, double lambda, const Fn& f) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("resolvent: lambda must be positive and finite");
  if (!same_space(e.space(), f.space())) throw DomainMismatch("resolvent: f lives on another space");
  if (!e.is_convex()) throw InvalidArgument("resolvent: the functional is not convex");
  const EnergyFunctional flat = explicit_form(e);
  if (flat.kind() == Kind::fshift) throw InvalidArgument("resolvent: unsupported nested f-shift");
  const auto w = f.space()->weights();
  return Problem{flat, f.space(), Eigen::Map<const VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                 to_vec(f), lambda};
}

}  // namespace

std::string_view strategy_name(SolverStrategy s) {
  switch (s) {
    case SolverStrategy::automatic:
      return "automatic";
    case SolverStrategy::proximal_gradient_backtracking:
      return "proximal_gradient_backtracking";
    case SolverStrategy::newton_backtracking:
      return "newton_backtracking";
    case SolverStrategy::dual_fista:
      return "dual_fista";
    case SolverStrategy::subgradient_diminishing:
      return "subgradient_diminishing";
    case SolverStrategy::projected_exact_for_indicators:
      return "projected_exact_for_indicators";
  }
  return "automatic";
}

SolverStrategy strategy_from_name(std::string_view name) {
  for (auto s : {SolverStrategy::automatic, SolverStrategy::proximal_gradient_backtracking,
                 SolverStrategy::newton_backtracking, SolverStrategy::dual_fista,
                 SolverStrategy::subgradient_diminishing, SolverStrategy::projected_exact_for_indicators}) {
    if (strategy_name(s) == name) return s;
  }
  throw ConfigError("unknown solver strategy: " + std::string(name));
}

ExtReal prox_objective(const EnergyFunctional& e, double lambda, const Fn& f, const Fn& g) {
  const ExtReal en = e.eval(g);
  if (en.is_infinite()) return en;
  const Fn diff = f - g;
  return en.value() + inner(diff, diff) / (2.0 * lambda);
}

ResolventResult resolvent(const EnergyFunctional& e, double lambda, const Fn& f, const SolverConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw InvalidArgument("resolvent: tolerance must be positive");
  if (cfg.max_iterations < 1) throw InvalidArgument("resolvent: max_iterations must be at least 1");
  const Problem pr = make_problem(e, lambda, f);

  if (pr.kind() == Kind::zero) return ResolventResult{f, 0.0, 0.0, 0, true, SolverStrategy::automatic};

  SolverStrategy s = cfg.strategy;
  if (s == SolverStrategy::automatic) {
    if (pr.forced_equality_only()) {
      s = SolverStrategy::projected_exact_for_indicators;
    } else if (pr.smooth()) {
      s = SolverStrategy::newton_backtracking;
    } else {
      s = SolverStrategy::dual_fista;
    }
  }
  ResolventResult r = solve(pr, s, cfg);
  if (e.kind() == Kind::fshift && e.eval(r.minimizer).is_infinite()) {
    // The flattened form can accept boundary points the nested form rounds out.
    const Fn mean = Fn::constant(f.space(), inner(r.minimizer, Fn::constant(f.space(), 1.0)) / f.space()->total_mass());
    double theta = 1.0;
    double shrink = 4.0 * std::numeric_limits<double>::epsilon();
    Fn g = r.minimizer;
    for (int k = 0; k < 60 && e.eval(g).is_infinite(); ++k, shrink *= 2.0) {
      theta *= 1.0 - shrink;
      g = mean + theta * (r.minimizer - mean);
    }
    r.optimality_residual += norm(g - r.minimizer) / lambda;
    r.converged = r.optimality_residual <= cfg.tolerance;
    r.minimizer = g;
  }
  const ExtReal objective = prox_objective(e, lambda, f, r.minimizer);
  if (objective.is_finite()) r.objective = objective.value();
  return r;
}

namespace {

ResolventResult solve(const Problem& pr, SolverStrategy s, const SolverConfig& cfg) {
  switch (s) {
    case SolverStrategy::projected_exact_for_indicators:
      if (!pr.forced_equality_only()) {
        throw InvalidArgument("resolvent: exact averaging needs every edge to force equality");
      }
      return solve_exact_indicators(pr);
    case SolverStrategy::newton_backtracking:
    case SolverStrategy::proximal_gradient_backtracking:
      if (!pr.smooth()) throw InvalidArgument("resolvent: " + std::string(strategy_name(s)) + " needs smooth edges");
      return s == SolverStrategy::newton_backtracking ? solve_newton(pr, cfg) : solve_prox_gradient(pr, cfg);
    case SolverStrategy::dual_fista:
      if (pr.kind() != Kind::mixed) return solve_newton(pr, cfg);
      return solve_dual_fista(pr, cfg);
    case SolverStrategy::subgradient_diminishing:
      return solve_subgradient(pr, cfg);
    case SolverStrategy::automatic:
      break;
  }
  throw InvalidArgument("resolvent: no strategy");
}

}  // namespace

std::pair<Fn, Fn> band_projection(const Fn& u, const Fn& v, double a, double b) {
  require_same_space(u, v);
  if (std::isnan(a) || std::isnan(b) || a > 0.0 || b < 0.0) {
    throw InvalidBand("band_projection: need a <= 0 <= b");
  }
  std::vector<double> pu(u.size());
  std::vector<double> pv(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double mid = 0.5 * (u[i] + v[i]);
    const double half = 0.5 * (u[i] - v[i]);
    const double c = std::clamp(half, a, b);
    if (c == half) {
      pu[i] = u[i];
      pv[i] = v[i];
    } else {
      pu[i] = mid + c;
      pv[i] = mid - c;
    }
  }
  return {Fn(u.space(), std::move(pu)), Fn(u.space(), std::move(pv))};
}

EvolveResult evolve(const EnergyFunctional& e, double t, int steps, const Fn& f, const SolverConfig& cfg) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolve: t must be finite and non-negative");
  if (steps < 1) throw InvalidArgument("evolve: steps must be positive");
  EvolveResult out{f, true, 0.0, {}};
  const ExtReal e0 = e.eval(f);
  out.energies.push_back(e0.is_infinite() ? kInf : e0.value());
  if (t == 0.0) return out;
  const double lambda = t / steps;
  for (int k = 0; k < steps; ++k) {
    const ResolventResult r = resolvent(e, lambda, out.state, cfg);
    out.state = r.minimizer;
    out.converged = out.converged && r.converged;
    out.max_residual = std::max(out.max_residual, r.optimality_residual);
    const ExtReal ek = e.eval(out.state);
    out.energies.push_back(ek.is_infinite() ? kInf : ek.value());
  }
  return out;
}

std::string_view property_name(ResolventProperty p) {
  switch (p) {
    case ResolventProperty::nonexpansive:
      return "nonexpansive";
    case ResolventProperty::order_preserving:
      return "order_preserving";
    case ResolventProperty::linfty_band:
      return "linfty_band";
    case ResolventProperty::invariance_0_alpha:
      return "invariance_0_alpha";
  }
  return "nonexpansive";
}

ResolventProperty property_from_name(std::string_view name) {
  for (auto p : {ResolventProperty::nonexpansive, ResolventProperty::order_preserving, ResolventProperty::linfty_band,
                 ResolventProperty::invariance_0_alpha}) {
    if (property_name(p) == name) return p;
  }
  throw ConfigError("unknown resolvent property: " + std::string(name));
}

namespace {

bool property_hypothesis(ResolventProperty kind, const Fn& u, const Fn& v, double alpha) {
  const Fn diff = u - v;
  double lo = kInf;
  double hi = -kInf;
  for (double d : diff.values()) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  switch (kind) {
    case ResolventProperty::nonexpansive:
      return true;
    case ResolventProperty::order_preserving:
      return lo >= 0.0;
    case ResolventProperty::linfty_band:
      return hi <= alpha;
    case ResolventProperty::invariance_0_alpha:
      return lo >= 0.0 && hi <= alpha;
  }
  return false;
}

}  // namespace

Residual resolvent_property_residual(ResolventProperty kind, double lambda, const Fn& u, const Fn& v, double alpha,
                                     const ResolventResult& ju, const ResolventResult& jv, const Tolerance& tol) {
  require_same_space(u, v);
  require_same_space(u, ju.minimizer);
  require_same_space(v, jv.minimizer);
  if (!property_hypothesis(kind, u, v, alpha)) return inequality_residual(0.0, ExtReal::infinity(), tol);
  const double solver = 2.0 * lambda * (ju.optimality_residual + jv.optimality_residual);
  const double pointwise = solver / std::sqrt(u.space()->min_weight());
  const Fn jd = ju.minimizer - jv.minimizer;
  double jlo = kInf;
  double jhi = -kInf;
  for (double d : jd.values()) {
    jlo = std::min(jlo, d);
    jhi = std::max(jhi, d);
  }
  switch (kind) {
    case ResolventProperty::nonexpansive:
      return inequality_residual(norm(jd), norm(u - v) + solver, tol);
    case ResolventProperty::order_preserving:
      return inequality_residual(-jlo, pointwise, tol);
    case ResolventProperty::linfty_band:
      return inequality_residual(jhi, alpha + pointwise, tol);
    case ResolventProperty::invariance_0_alpha:
      return inequality_residual(std::max(-jlo, jhi - alpha), pointwise, tol);
  }
  return inequality_residual(0.0, ExtReal::infinity(), tol);
}

Residual resolvent_property_check(ResolventProperty kind, const EnergyFunctional& e, double lambda, const Fn& u,
                                  const Fn& v, double alpha, const SolverConfig& cfg, const Tolerance& tol) {
  require_same_space(u, v);
  if (!property_hypothesis(kind, u, v, alpha)) return inequality_residual(0.0, ExtReal::infinity(), tol);
  return resolvent_property_residual(kind, lambda, u, v, alpha, resolvent(e, lambda, u, cfg),
                                     resolvent(e, lambda, v, cfg), tol);
}

}  // namespace ndf
