#include "eventsnn/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eventsnn {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnsupportedTauRatio: return "UnsupportedTauRatio";
    case ErrorCode::NonpositiveTimeConstant: return "NonpositiveTimeConstant";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::NegativeDt: return "NegativeDt";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::InvalidBudget: return "InvalidBudget";
    case ErrorCode::DegenerateCrossing: return "DegenerateCrossing";
    case ErrorCode::NoSpike: return "NoSpike";
    case ErrorCode::MultipleSpikes: return "MultipleSpikes";
    case ErrorCode::ReplayShapeMismatch: return "ReplayShapeMismatch";
    case ErrorCode::ReplayUnsorted: return "ReplayUnsorted";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

TauRatio tau_ratio(const LifParams& p) {
  constexpr double rel = 1e-12;
  if (std::abs(p.tau_mem - p.tau_syn) <= rel * p.tau_syn) return TauRatio::equal;
  if (std::abs(p.tau_mem - 2.0 * p.tau_syn) <= rel * p.tau_syn) return TauRatio::double_;
  return TauRatio::other;
}

int EventTrace::count_real() const {
  return static_cast<int>(std::count_if(spikes.begin(), spikes.end(),
                                        [](const Spike& s) { return !s.is_dummy(); }));
}

std::vector<Spike> EventTrace::recorded(const Network& net) const {
  std::vector<Spike> out;
  for (const auto& s : spikes) {
    if (s.kind != SpikeKind::internal) continue;
    if (net.record_set.empty() ||
        std::find(net.record_set.begin(), net.record_set.end(), s.neuron) != net.record_set.end()) {
      out.push_back(s);
    }
  }
  return out;
}

namespace {

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

}  // namespace

void validate_network(const Network& net, bool analytic_solver) {
  const auto n = static_cast<Eigen::Index>(net.n_total);
  require_shape(net.n_total > 0, "n_total must be positive");
  std::ostringstream msg;
  msg << "weights are " << net.weights.rows() << "x" << net.weights.cols() << ", n_total=" << n;
  require_shape(net.weights.rows() == n && net.weights.cols() == n, msg.str());
  require_shape(net.input_weights.cols() == n, "input_weights must have n_total columns");
  require_shape(net.weight_mask.size() == 0 ||
                    (net.weight_mask.rows() == n && net.weight_mask.cols() == n),
                "weight_mask shape");
  require_shape(net.input_mask.size() == 0 || (net.input_mask.rows() == net.input_weights.rows() &&
                                               net.input_mask.cols() == n),
                "input_mask shape");
  for (int k : net.output_set) require_shape(k >= 0 && k < net.n_total, "output index out of range");
  for (int k : net.record_set) require_shape(k >= 0 && k < net.n_total, "record index out of range");

  const auto& p = net.params;
  if (!(p.tau_mem > 0.0) || !(p.tau_syn > 0.0)) {
    throw Error(ErrorCode::NonpositiveTimeConstant, "tau_mem and tau_syn must be > 0");
  }
  if (!(p.v_th > p.v_rest) || !(p.v_reset < p.v_th) || p.v_rest != 0.0) {
    throw Error(ErrorCode::InvalidThreshold, "require v_rest = 0 < v_th and v_reset < v_th");
  }
  if (analytic_solver && tau_ratio(p) == TauRatio::other) {
    std::ostringstream r;
    r << "tau_mem/tau_syn = " << p.tau_mem / p.tau_syn << ", analytic solvers need 1 or 2";
    throw Error(ErrorCode::UnsupportedTauRatio, r.str());
  }
}

}  // namespace eventsnn
