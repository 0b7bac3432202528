#include "eventsnn/lif.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eventsnn::lif {

namespace {

// The kernels below return +inf for "no crossing" and never produce NaN for
// finite inputs: every square root and logarithm sees a guarded argument and
// the branch is selected afterwards.

double crossing_double_tau(double v0, double i0, const LifParams& p) {
  if (!std::isfinite(v0) || !std::isfinite(i0)) return kInf;
  if (v0 >= p.v_th) return 0.0;
  const double two_ts_i = 2.0 * p.tau_syn * i0;
  const double b = v0 + two_ts_i;
  const double disc = b * b - 4.0 * two_ts_i * p.v_th;  // b^2 - 4ac with a = -2ts*i0, c = -v_th
  const bool rising = i0 > 0.0;
  const double denom = rising ? 2.0 * two_ts_i : 1.0;
  const double x = (b + std::sqrt(disc > 0.0 ? disc : 0.0)) / denom;
  const bool real_root = rising && disc >= 0.0 && b > 0.0 && x > 0.0 && std::isfinite(x);
  // Both roots beyond x = 1 means the crossing lies in the past; a rising
  // membrane can only land there through rounding when v0 is at threshold.
  const bool imminent = real_root && x > 1.0 && vdot(v0, i0, p) > 0.0;
  const bool valid = real_root && x <= 1.0;
  const double dt = -p.tau_mem * std::log(valid ? x : 1.0);
  return valid ? dt : (imminent ? 0.0 : kInf);
}

double crossing_equal_tau(double v0, double i0, const LifParams& p) {
  if (!std::isfinite(v0) || !std::isfinite(i0)) return kInf;
  if (v0 >= p.v_th) return 0.0;
  const double tau = p.tau_mem;
  const bool rising = i0 > 0.0;
  const double safe_i = rising ? i0 : 1.0;
  const double z = -(p.v_th / (safe_i * tau)) * std::exp(-v0 / (safe_i * tau));
  const bool in_domain = rising && std::isfinite(z) && z >= -1.0 / std::numbers::e;
  const double w = lambert_w0(in_domain ? z : 0.0);
  const double dt = -tau * w - v0 / safe_i;
  const bool valid = in_domain && std::isfinite(dt) && dt >= 0.0;
  const bool imminent = in_domain && std::isfinite(dt) && dt < 0.0 && vdot(v0, i0, p) > 0.0;
  return valid ? dt : (imminent ? 0.0 : kInf);
}

CrossingResult wrap(double dt) {
  if (std::isinf(dt)) return {};
  return {dt};
}

}  // namespace

Point propagate(Point s, const LifParams& p, double dt) {
  const double es = std::exp(-dt / p.tau_syn);
  if (tau_ratio(p) == TauRatio::equal) {
    return {(s.v + s.i * dt) * es, s.i * es};
  }
  const double em = std::exp(-dt / p.tau_mem);
  const double rate = 1.0 / p.tau_mem - 1.0 / p.tau_syn;
  // es - em = em * expm1(-dt * (1/ts - 1/tm)), avoids cancellation at small dt
  const double kernel = em * std::expm1(dt * rate) / rate;
  return {s.v * em + s.i * kernel, s.i * es};
}

NeuronState propagate(const NeuronState& state, const LifParams& p, double dt) {
  if (dt < 0.0) throw Error(ErrorCode::NegativeDt, "dt = " + std::to_string(dt));
  NeuronState out = state;
  for (Eigen::Index k = 0; k < state.v.size(); ++k) {
    const Point q = propagate(Point{state.v[k], state.i[k]}, p, dt);
    out.v[k] = q.v;
    out.i[k] = q.i;
  }
  out.t = state.t + dt;
  return out;
}

CrossingResult next_crossing_double_tau(double v0, double i0, const LifParams& p) {
  return wrap(crossing_double_tau(v0, i0, p));
}

CrossingResult next_crossing_equal_tau(double v0, double i0, const LifParams& p) {
  return wrap(crossing_equal_tau(v0, i0, p));
}

CrossingResult next_crossing(double v0, double i0, const LifParams& p) {
  switch (tau_ratio(p)) {
    case TauRatio::double_: return next_crossing_double_tau(v0, i0, p);
    case TauRatio::equal: return next_crossing_equal_tau(v0, i0, p);
    case TauRatio::other: break;
  }
  throw Error(ErrorCode::UnsupportedTauRatio, "no closed-form crossing for this tau ratio");
}

std::vector<double> next_crossing_safe(std::span<const double> v0, std::span<const double> i0,
                                       const LifParams& p) {
  if (v0.size() != i0.size()) throw Error(ErrorCode::ShapeMismatch, "v0 and i0 lengths differ");
  const TauRatio ratio = tau_ratio(p);
  if (ratio == TauRatio::other) {
    throw Error(ErrorCode::UnsupportedTauRatio, "no closed-form crossing for this tau ratio");
  }
  std::vector<double> out(v0.size());
  for (std::size_t k = 0; k < v0.size(); ++k) {
    const double dt = ratio == TauRatio::double_ ? crossing_double_tau(v0[k], i0[k], p)
                                                 : crossing_equal_tau(v0[k], i0[k], p);
    out[k] = std::isnan(dt) ? kInf : dt;
  }
  return out;
}

double lambert_w0(double z) {
  constexpr double branch = -1.0 / std::numbers::e;
  if (std::isnan(z) || z < branch) return std::nan("");
  if (z == branch) return -1.0;
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return kInf;

  double w;
  if (z < -0.25) {
    // series around the branch point
    const double q = std::sqrt(2.0 * (std::numbers::e * z + 1.0));
    w = -1.0 + q - q * q / 3.0 + 11.0 / 72.0 * q * q * q;
  } else if (z < 3.0) {
    w = std::log1p(z);
    if (z > 0.0) w *= 0.75;
  } else {
    const double lz = std::log(z);
    w = lz - std::log(lz);
  }

  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    if (std::abs(f) <= 1e-12 * std::max(1.0, std::abs(z))) break;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(w))) break;
  }
  return w < -1.0 ? -1.0 : w;
}

}  // namespace eventsnn::lif
