#pragma once

#include "ltc/common.hpp"

namespace ltc::env {

// Scalar test system x' = -(k/2) sign(x) |x|^(2a-1). With V(x) = x^2 this
// gives dV/dt = -k V^a exactly, so V reaches zero in finite time no later
// than V0^(1-a) / (k (1-a)).

double stability_oracle_step(double x, double k, double alpha, double dt);

// V(t) under dV/dt = -k V^a, i.e. (V0^(1-a) - k (1-a) t)^(1/(1-a)) until it
// hits zero, zero afterwards.
double stability_closed_form_v(double v0, double k, double alpha, double t);

double finite_time_bound(double v0, double k, double alpha);

// Euler-integrates from x0 until V = x^2 <= eps; returns the elapsed time,
// or +inf if max_steps expires first.
double stability_convergence_time(double x0, double k, double alpha, double dt, double eps,
                                  long max_steps);

}  // namespace ltc::env
