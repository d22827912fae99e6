#include "sgrom/steihaug_toint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgrom {

namespace {

// Positive root of |z + tau d| = delta.
double to_boundary(const Vector& z, const Vector& d, double delta) {
  const double a = d.squaredNorm();
  const double b = 2.0 * z.dot(d);
  const double c = z.squaredNorm() - delta * delta;
  const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  // Stable form of (-b + disc) / (2a).
  return b >= 0.0 ? (-2.0 * c) / (b + disc) : (-b + disc) / (2.0 * a);
}

}  // namespace

SubproblemStep steihaug_toint(const Vector& gradient, const std::function<Vector(const Vector&)>& hessvec,
                              double delta, double kappa_s, double rel_tol, int max_iters) {
  if (!(delta > 0.0)) throw std::invalid_argument("steihaug_toint: delta must be positive");
  if (!gradient.allFinite()) throw std::invalid_argument("steihaug_toint: non-finite gradient");
  const Eigen::Index n = gradient.size();
  if (max_iters < 0) max_iters = static_cast<int>(2 * n + 10);

  SubproblemStep out;
  out.step = Vector::Zero(n);
  const double gnorm = gradient.norm();
  if (gnorm == 0.0) {
    out.exit = "zero-gradient";
    return out;
  }

  Vector z = Vector::Zero(n);
  Vector hz = Vector::Zero(n);
  Vector r = gradient;
  Vector d = -r;
  double max_rayleigh = 0.0;
  out.exit = "max-iters";

  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it + 1;
    const Vector hd = hessvec(d);
    const double dhd = d.dot(hd);
    max_rayleigh = std::max(max_rayleigh, std::abs(dhd) / d.squaredNorm());
    if (dhd <= 0.0) {
      const double tau = to_boundary(z, d, delta);
      z += tau * d;
      hz += tau * hd;
      out.exit = "negative-curvature";
      break;
    }
    const double alpha = r.squaredNorm() / dhd;
    if ((z + alpha * d).norm() >= delta) {
      const double tau = to_boundary(z, d, delta);
      z += tau * d;
      hz += tau * hd;
      out.exit = "boundary";
      break;
    }
    z += alpha * d;
    hz += alpha * hd;
    const Vector r_next = r + alpha * hd;
    if (r_next.norm() <= rel_tol * gnorm) {
      out.exit = "interior";
      break;
    }
    const double beta = r_next.squaredNorm() / r.squaredNorm();
    r = r_next;
    d = -r + beta * d;
  }

  out.step = z;
  out.decrease = -(gradient.dot(z) + 0.5 * z.dot(hz));
  out.curvature = 1.0 + max_rayleigh;
  out.cauchy_bound = kappa_s * gnorm * std::min(gnorm / out.curvature, delta);
  return out;
}

}  // namespace sgrom
