#pragma once

#include <optional>
#include <span>
#include <vector>

#include "eventsnn/types.hpp"

namespace eventsnn::lif {

// Dynamics between events (normalized units, v_rest = 0):
//   dV/dt = -V / tau_mem + I,   dI/dt = -I / tau_syn.

struct Point {
  double v;
  double i;
};

/// Closed-form advance of one neuron by dt >= 0 without thresholding.
Point propagate(Point s, const LifParams& p, double dt);

/// Advances every neuron by dt. Throws NegativeDt.
NeuronState propagate(const NeuronState& state, const LifParams& p, double dt);

/// dV/dt at the given state.
inline double vdot(double v, double i, const LifParams& p) { return -v / p.tau_mem + i; }

/// Time until the next upward crossing of v_th, relative to the current state;
/// nullopt when V never reaches threshold. A state already at or above
/// threshold crosses immediately (0).
struct CrossingResult {
  std::optional<double> time;

  bool has_value() const { return time.has_value(); }
  double value_or_inf() const { return time.value_or(kInf); }
};

/// tau_mem = 2 tau_syn. With x = exp(-dt / tau_mem) the threshold condition is
/// the quadratic a x^2 + b x + c = 0, a = -2 tau_syn i0, b = v0 + 2 tau_syn i0,
/// c = -v_th. The earliest crossing is the largest root in (0, 1].
CrossingResult next_crossing_double_tau(double v0, double i0, const LifParams& p);

/// tau_mem = tau_syn = tau. Solves v_th = (v0 + i0 dt) exp(-dt / tau) with the
/// principal branch of Lambert W.
CrossingResult next_crossing_equal_tau(double v0, double i0, const LifParams& p);

/// Dispatches on the tau ratio. Throws UnsupportedTauRatio otherwise.
CrossingResult next_crossing(double v0, double i0, const LifParams& p);

/// Elementwise crossing times with +inf for "no crossing". Every branch is
/// evaluated with guarded arithmetic so no NaN can reach the output.
std::vector<double> next_crossing_safe(std::span<const double> v0, std::span<const double> i0,
                                       const LifParams& p);

/// Principal branch W0(z) for z >= -1/e, refined by Halley iteration until
/// |w e^w - z| <= 1e-12 (relative). Returns NaN below the branch point.
double lambert_w0(double z);

}  // namespace eventsnn::lif
