#include "eventsnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "eventsnn/backend.hpp"
#include "eventsnn/sim.hpp"
#include "eventsnn/spike_io.hpp"

namespace eventsnn {

namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void shuffle(std::vector<int>& idx, std::mt19937_64& rng) {
  for (int k = static_cast<int>(idx.size()) - 1; k > 0; --k) {
    const int j = static_cast<int>(unit(rng) * (k + 1));
    std::swap(idx[k], idx[j]);
  }
}

// Raises the incoming weights of neurons silent on too many batch samples.
bool bump_silent(Network& net, const ExperimentConfig& cfg, const std::vector<int>& silent, int batch) {
  const double bump = cfg.train.weight_bump;
  if (bump <= 0.0) return false;
  const auto& outs = net.output_set;
  bool bumped = false;
  for (int n = 0; n < net.n_total; ++n) {
    const bool is_output = std::find(outs.begin(), outs.end(), n) != outs.end();
    const double allowed = is_output ? cfg.train.max_silent_output : cfg.train.max_silent_hidden;
    if (static_cast<double>(silent[n]) <= allowed * batch) continue;
    bumped = true;
    for (int j = 0; j < net.n_total; ++j) {
      if (net.connected(j, n)) net.weights(j, n) += bump;
    }
    for (int c = 0; c < net.n_inputs(); ++c) {
      if (net.input_connected(c, n)) net.input_weights(c, n) += bump;
    }
  }
  return bumped;
}

}  // namespace

LossResult ttfs_loss(const EventTrace& trace, std::span<const int> output_set, int label, const TtfsLoss& cfg) {
  const int n_out = static_cast<int>(output_set.size());
  if (n_out == 0) throw Error(ErrorCode::ShapeMismatch, "output_set is empty");
  if (label < 0 || label >= n_out) throw Error(ErrorCode::ShapeMismatch, "label out of range");

  LossResult r;
  r.loss_grads.assign(trace.spikes.size(), 0.0);
  r.first_times.assign(n_out, kInf);
  std::vector<int> first_slot(n_out, -1);
  for (int s = 0; s < trace.size(); ++s) {
    const Spike& sp = trace.spikes[s];
    if (sp.kind != SpikeKind::internal) continue;
    for (int k = 0; k < n_out; ++k) {
      if (output_set[k] == sp.neuron && first_slot[k] < 0) {
        first_slot[k] = s;
        r.first_times[k] = sp.time;
      }
    }
  }

  std::vector<double> t(n_out);
  for (int k = 0; k < n_out; ++k) t[k] = first_slot[k] >= 0 ? r.first_times[k] : cfg.t_none;
  // loss = t_label / xi + log sum exp(-t_k / xi), stabilized by the minimum time
  const double t_min = *std::min_element(t.begin(), t.end());
  const int k_min = static_cast<int>(std::min_element(t.begin(), t.end()) - t.begin());
  double rest = 0.0;  // z - 1, kept apart so that log1p stays accurate near zero loss
  std::vector<double> e(n_out);
  for (int k = 0; k < n_out; ++k) {
    e[k] = std::exp(-(t[k] - t_min) / cfg.xi);
    if (k != k_min) rest += e[k];
  }
  const double z = 1.0 + rest;
  r.loss = (t[label] - t_min) / cfg.xi + std::log1p(rest);
  for (int k = 0; k < n_out; ++k) {
    if (first_slot[k] < 0) continue;
    const double p = e[k] / z;
    double g = ((k == label ? 1.0 : 0.0) - p) / cfg.xi;
    if (k == label) g += cfg.alpha;
    r.loss_grads[first_slot[k]] = g;
  }
  if (first_slot[label] >= 0) r.loss += cfg.alpha * t[label];
  r.predicted = predict(trace, output_set);
  return r;
}

int predict(const EventTrace& trace, std::span<const int> output_set) {
  for (const auto& sp : trace.spikes) {
    if (sp.kind != SpikeKind::internal) continue;
    for (int k = 0; k < static_cast<int>(output_set.size()); ++k) {
      if (output_set[k] == sp.neuron) return k;
    }
  }
  return -1;
}

void adam_step(Matrix& params, const Matrix& grads, AdamState& state, const AdamConfig& cfg) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter and gradient shapes differ");
  }
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(params.rows(), params.cols());
    state.v = Matrix::Zero(params.rows(), params.cols());
  } else if (state.m.rows() != params.rows() || state.m.cols() != params.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state shape differs from parameters");
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= cfg.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
}

Network make_network(const ExperimentConfig& cfg, int n_inputs) {
  const int h = cfg.network.n_hidden;
  const int o = cfg.network.n_outputs;
  Network net;
  net.n_total = h + o;
  net.params.tau_syn = 1.0;
  net.params.tau_mem = cfg.network.tau_mem_ratio;
  net.params.v_th = cfg.network.v_th;
  net.params.v_reset = cfg.network.v_reset;
  net.weights = Matrix::Zero(net.n_total, net.n_total);
  net.input_weights = Matrix::Zero(n_inputs, net.n_total);
  net.weight_mask = Mask::Zero(net.n_total, net.n_total);
  net.weight_mask.block(0, h, h, o).setOnes();
  net.input_mask = Mask::Zero(n_inputs, net.n_total);
  net.input_mask.block(0, 0, n_inputs, h).setOnes();
  for (int k = 0; k < o; ++k) net.output_set.push_back(h + k);
  return net;
}

void init_weights(Network& net, const ExperimentConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int h = cfg.network.n_hidden;
  const int o = cfg.network.n_outputs;
  const int n_in = net.n_inputs();
  const double in_std = cfg.network.hidden_scale / std::sqrt(static_cast<double>(n_in));
  const double out_std = cfg.network.output_scale / std::sqrt(static_cast<double>(h));
  for (int c = 0; c < n_in; ++c) {
    for (int k = 0; k < h; ++k) net.input_weights(c, k) = cfg.network.hidden_mean + in_std * gaussian(rng);
  }
  for (int j = 0; j < h; ++j) {
    for (int k = 0; k < o; ++k) net.weights(j, h + k) = cfg.network.output_mean + out_std * gaussian(rng);
  }
}

std::vector<Sample> encode_all(const std::vector<data::YinYangPoint>& points, const DatasetConfig& cfg) {
  const data::EncodingConfig enc{cfg.t_early, cfg.t_late, cfg.t_bias, cfg.bias_enabled};
  std::vector<Sample> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    auto e = data::encode(p, enc);
    out.push_back({std::move(e.spikes), static_cast<int>(e.label)});
  }
  return out;
}

DataSplit make_data(const DatasetConfig& cfg) {
  const data::YinYangGeometry geo{0.5, cfg.r_small};
  DataSplit d;
  d.train_points = data::generate(cfg.seed, cfg.n_train, geo);
  d.test_points = data::generate(mix(cfg.seed), cfg.n_test, geo);
  d.train = encode_all(d.train_points, cfg);
  d.test = encode_all(d.test_points, cfg);
  return d;
}

Network initial_network(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  Network net = make_network(cfg, data::encoded_channels({d.t_early, d.t_late, d.t_bias, d.bias_enabled}));
  init_weights(net, cfg, mix(cfg.train.seed ^ 0x5eedULL));
  validate_network(net);
  return net;
}

int budget_for(const ExperimentConfig& cfg, const Network& net) {
  if (cfg.sim.m > 0) return cfg.sim.m;
  return default_budget(net.n_inputs(), net.n_total);
}

double hidden_activity(const Network& net, const ExperimentConfig& cfg, std::span<const Sample> samples) {
  const int h = cfg.network.n_hidden;
  std::vector<char> fired(h, 0);
  const int m = budget_for(cfg, net);
  for (const auto& s : samples) {
    const auto trace = simulate(net, s.inputs, m, cfg.sim.t_max);
    for (const auto& sp : trace.spikes) {
      if (sp.kind == SpikeKind::internal && sp.neuron < h) fired[sp.neuron] = 1;
    }
  }
  return static_cast<double>(std::count(fired.begin(), fired.end(), 1)) / h;
}

double evaluate(const Network& net, const ExperimentConfig& cfg, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  if (cfg.backend.kind == BackendKind::replay) {
    throw Error(ErrorCode::ConfigError, "evaluation runs forward passes; the replay backend has none");
  }
  const int m = budget_for(cfg, net);
  int correct = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto trace = forward(cfg.backend, net, samples[k].inputs, m, cfg.sim.t_max, mix(0xe7a1ULL + k));
    if (predict(trace, net.output_set) == samples[k].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

SampleResult trace_gradient(const EventTrace& trace, const Network& net, const ExperimentConfig& cfg, int label) {
  const TtfsLoss loss_cfg{cfg.train.xi, cfg.sim.t_max, cfg.train.alpha};
  SampleResult r;
  r.loss = ttfs_loss(trace, net.output_set, label, loss_cfg);
  r.fired.assign(net.n_total, 0);
  for (const auto& sp : trace.spikes) {
    if (sp.kind == SpikeKind::internal) r.fired[sp.neuron] = 1;
  }
  if (cfg.train.estimator == GradientEstimator::fud) {
    r.grads = fud_backward(trace, net, r.loss.loss_grads);
  } else {
    r.grads = eventprop_backward(trace, net, r.loss.loss_grads, {CrossingGuard::skip, cfg.train.min_vdot});
  }
  return r;
}

SampleResult sample_gradient(const Network& net, const ExperimentConfig& cfg, const Sample& sample,
                             std::uint64_t seed) {
  const int m = budget_for(cfg, net);
  const auto trace = forward(cfg.backend, net, sample.inputs, m, cfg.sim.t_max, seed);
  return trace_gradient(trace, net, cfg, sample.label);
}

TrainResult train(const ExperimentConfig& cfg, const EpochCallback& on_epoch) {
  validate_config(cfg);
  if (cfg.backend.kind == BackendKind::replay) {
    throw Error(ErrorCode::ConfigError, "training runs forward passes; use replay-train for replayed traces");
  }
  const DataSplit data = make_data(cfg.dataset);
  const auto& train_set = data.train;
  const auto& test_set = data.test;
  Network net = initial_network(cfg);

  // The mock quantizer ranges are frozen at the initial weights unless configured.
  ExperimentConfig run = cfg;
  if (run.backend.kind == BackendKind::mock) {
    auto& mock = run.backend.mock;
    if (mock.weight_clip <= 0.0) mock.weight_clip = net.weights.cwiseAbs().maxCoeff();
    if (mock.input_weight_clip <= 0.0) mock.input_weight_clip = net.input_weights.cwiseAbs().maxCoeff();
  }

  TrainResult result;
  result.initial = net;
  result.best = net;
  AdamState adam_w, adam_in;
  AdamConfig adam{cfg.train.lr, cfg.train.beta1, cfg.train.beta2, cfg.train.eps};
  std::mt19937_64 order_rng(mix(cfg.train.seed ^ 0x0dd5ULL));
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  {
    EpochMetrics m0;
    m0.test_acc = evaluate(net, run, test_set);
    result.best_test_acc = m0.test_acc;
    result.history.push_back(m0);
    if (on_epoch) on_epoch(m0);
  }

  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle(order, order_rng);
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.train.batch) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.train.batch);
      Gradients acc = Gradients::zeros_like(net);
      std::vector<int> silent(net.n_total, 0);
      for (std::size_t k = b0; k < b1; ++k) {
        const int idx = order[k];
        const std::uint64_t seed = mix(cfg.train.seed ^ mix(static_cast<std::uint64_t>(epoch) << 32 | idx));
        const auto r = sample_gradient(net, run, train_set[idx], seed);
        loss_sum += r.loss.loss;
        if (r.loss.predicted == train_set[idx].label) ++correct;
        acc += r.grads;
        for (int n = 0; n < net.n_total; ++n) silent[n] += !r.fired[n];
        // an output only counts as silent on samples it should have answered
        for (int k = 0; k < static_cast<int>(net.output_set.size()); ++k) {
          if (k != train_set[idx].label) silent[net.output_set[k]] -= !r.fired[net.output_set[k]];
        }
      }
      if (!bump_silent(net, cfg, silent, static_cast<int>(b1 - b0))) {
        acc *= 1.0 / static_cast<double>(b1 - b0);
        adam_step(net.weights, acc.weights, adam_w, adam);
        adam_step(net.input_weights, acc.input_weights, adam_in, adam);
      }
      // keep the trained weights inside the range the mock can represent
      if (run.backend.kind == BackendKind::mock) {
        const double wc = run.backend.mock.weight_clip, ic = run.backend.mock.input_weight_clip;
        net.weights = net.weights.cwiseMax(-wc).cwiseMin(wc);
        net.input_weights = net.input_weights.cwiseMax(-ic).cwiseMin(ic);
      }
    }
    adam.lr *= cfg.train.lr_decay;

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / static_cast<double>(train_set.size());
    em.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    em.test_acc = evaluate(net, run, test_set);
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(em);
    if (on_epoch) on_epoch(em);

    if (em.test_acc > result.best_test_acc) {
      result.best_test_acc = em.test_acc;
      result.best = net;
      since_best = 0;
    } else if (cfg.train.patience > 0 && ++since_best >= cfg.train.patience) {
      break;
    }
  }
  result.final_net = net;
  return result;
}

void write_checkpoint(std::ostream& os, const Network& net) {
  os << "eventsnn-checkpoint 1\n";
  os << "n_total " << net.n_total << " n_inputs " << net.n_inputs() << '\n';
  os << "tau_mem " << format_time(net.params.tau_mem) << " tau_syn " << format_time(net.params.tau_syn)
     << " v_th " << format_time(net.params.v_th) << " v_reset " << format_time(net.params.v_reset) << '\n';
  os << "outputs " << net.output_set.size();
  for (int k : net.output_set) os << ' ' << k;
  os << '\n';
  auto dump = [&](const char* name, const auto& m, auto cell) {
    os << name << ' ' << (m.size() == 0 ? "none" : "dense") << '\n';
    if (m.size() == 0) return;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << cell(m(r, c));
      os << '\n';
    }
  };
  auto real = [](double x) { return format_time(x); };
  auto flag = [](std::uint8_t x) { return std::to_string(static_cast<int>(x)); };
  dump("weights", net.weights, real);
  dump("input_weights", net.input_weights, real);
  dump("weight_mask", net.weight_mask, flag);
  dump("input_mask", net.input_mask, flag);
}

Network read_checkpoint(std::istream& is) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ParseError, "checkpoint: " + what); };
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "eventsnn-checkpoint") fail("missing version tag");
  if (version != 1) fail("unsupported version " + std::to_string(version));
  Network net;
  std::string key;
  int n_in = 0;
  auto expect = [&](const char* want) {
    if (!(is >> key) || key != want) fail(std::string("expected '") + want + "'");
  };
  expect("n_total");
  is >> net.n_total;
  expect("n_inputs");
  is >> n_in;
  auto read_real = [&](double& x) {
    std::string tok;
    is >> tok;
    x = std::strtod(tok.c_str(), nullptr);
  };
  expect("tau_mem");
  read_real(net.params.tau_mem);
  expect("tau_syn");
  read_real(net.params.tau_syn);
  expect("v_th");
  read_real(net.params.v_th);
  expect("v_reset");
  read_real(net.params.v_reset);
  expect("outputs");
  std::size_t n_out = 0;
  is >> n_out;
  net.output_set.resize(n_out);
  for (auto& k : net.output_set) is >> k;
  if (!is || net.n_total <= 0 || n_in < 0) fail("bad header");

  auto load = [&](const char* name, auto& m, Eigen::Index rows, Eigen::Index cols, auto parse) {
    expect(name);
    std::string layout;
    is >> layout;
    if (layout == "none") return;
    if (layout != "dense") fail("bad layout for " + std::string(name));
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string tok;
        if (!(is >> tok)) fail("truncated " + std::string(name));
        m(r, c) = parse(tok);
      }
    }
  };
  auto real = [](const std::string& t) { return std::strtod(t.c_str(), nullptr); };
  auto flag = [](const std::string& t) { return static_cast<std::uint8_t>(std::stoi(t)); };
  load("weights", net.weights, net.n_total, net.n_total, real);
  load("input_weights", net.input_weights, n_in, net.n_total, real);
  load("weight_mask", net.weight_mask, net.n_total, net.n_total, flag);
  load("input_mask", net.input_mask, n_in, net.n_total, flag);
  if (net.input_weights.size() == 0) net.input_weights = Matrix::Zero(n_in, net.n_total);
  return net;
}

void write_metrics_row(std::ostream& os, const EpochMetrics& m) {
  os << m.epoch << ',' << format_time(m.train_loss) << ',' << format_time(m.train_acc) << ','
     << format_time(m.test_acc) << ',' << format_time(m.seconds) << '\n';
}

void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& history) {
  os << kMetricsHeader << '\n';
  for (const auto& m : history) write_metrics_row(os, m);
}

}  // namespace eventsnn
