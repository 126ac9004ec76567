#include "ltc/env/stability.hpp"

#include <cmath>
#include <limits>

namespace ltc::env {

double stability_oracle_step(double x, double k, double alpha, double dt) {
  check(k > 0.0 && alpha > 0.0 && alpha < 1.0 && dt > 0.0,
        "stability_oracle_step: need k > 0, alpha in (0,1), dt > 0");
  if (x == 0.0) return 0.0;
  const double mag = std::abs(x);
  const double deriv = -0.5 * k * std::copysign(std::pow(mag, 2.0 * alpha - 1.0), x);
  double next = x + dt * deriv;
  // Euler can overshoot through the origin near convergence; the true flow
  // stops there, so pin it instead of oscillating.
  if (next * x < 0.0) next = 0.0;
  return next;
}

double stability_closed_form_v(double v0, double k, double alpha, double t) {
  check(v0 >= 0.0 && k > 0.0 && alpha > 0.0 && alpha < 1.0 && t >= 0.0,
        "stability_closed_form_v: bad arguments");
  const double base = std::pow(v0, 1.0 - alpha) - k * (1.0 - alpha) * t;
  if (base <= 0.0) return 0.0;
  return std::pow(base, 1.0 / (1.0 - alpha));
}

double finite_time_bound(double v0, double k, double alpha) {
  check(v0 >= 0.0 && k > 0.0 && alpha > 0.0 && alpha < 1.0, "finite_time_bound: bad arguments");
  return std::pow(v0, 1.0 - alpha) / (k * (1.0 - alpha));
}

double stability_convergence_time(double x0, double k, double alpha, double dt, double eps,
                                  long max_steps) {
  double x = x0;
  for (long i = 0; i < max_steps; ++i) {
    if (x * x <= eps) return static_cast<double>(i) * dt;
    x = stability_oracle_step(x, k, alpha, dt);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace ltc::env
