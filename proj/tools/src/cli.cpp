#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "eventsnn/backend.hpp"
#include "eventsnn/config.hpp"
#include "eventsnn/data.hpp"
#include "eventsnn/sim.hpp"
#include "eventsnn/spike_io.hpp"
#include "eventsnn/train.hpp"

namespace eventsnn::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::string out_dir;
};

struct Extra {
  std::string checkpoint;
  std::string traces;
  std::string metrics;
  std::string dataset;
  int samples = 10;
  bool encoded = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out = true) {
  cmd->add_option("--config", c.config_path, "flat `key = value` config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset_name, "start from a named preset (eventprop-sim, fud-sim, mock, smoke)");
  cmd->add_option("--set", c.overrides, "override one key, e.g. --set train.epochs=5");
  cmd->add_option("--seed", c.seed, "train.seed (dataset.seed for generate)");
  cmd->add_option("--backend", c.backend, "numeric, mock or replay")
      ->check(CLI::IsMember({"numeric", "mock", "replay"}));
  auto* out = cmd->add_option("--out", c.out_dir, "output directory");
  if (needs_out) out->required();
}

// Preset, then config file, then --set, then the dedicated flags.
ExperimentConfig resolve(const Common& c, bool seed_is_dataset) {
  ExperimentConfig cfg = c.preset_name.empty() ? preset("eventprop-sim") : preset(c.preset_name);
  if (!c.config_path.empty()) cfg = load_config(c.config_path, cfg);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) (seed_is_dataset ? cfg.dataset.seed : cfg.train.seed) = *c.seed;
  if (c.backend) cfg.backend.kind = parse_backend_kind(*c.backend);
  validate_config(cfg);
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  return is;
}

fs::path prepare_out(const std::string& dir, const ExperimentConfig& cfg) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  auto os = open_out(out / "config.txt");
  write_config(os, cfg);
  return out;
}

Network load_network(const std::string& checkpoint, const ExperimentConfig& cfg) {
  if (checkpoint.empty()) return initial_network(cfg);
  auto is = open_in(checkpoint);
  Network net = read_checkpoint(is);
  validate_network(net);
  const Network shape = make_network(cfg, net.n_inputs());
  if (net.n_total != shape.n_total || net.output_set != shape.output_set) {
    throw Error(ErrorCode::ConfigError, "checkpoint does not match network.n_hidden / network.n_outputs");
  }
  return net;
}

int cmd_generate(const Common& c, const Extra& x, std::ostream& out) {
  const auto cfg = resolve(c, true);
  const auto dir = prepare_out(c.out_dir, cfg);
  const auto split = make_data(cfg.dataset);
  {
    auto os = open_out(dir / "train.csv");
    data::write_dataset(os, split.train_points);
  }
  {
    auto os = open_out(dir / "test.csv");
    data::write_dataset(os, split.test_points);
  }
  if (x.encoded) {
    const data::EncodingConfig enc{cfg.dataset.t_early, cfg.dataset.t_late, cfg.dataset.t_bias,
                                   cfg.dataset.bias_enabled};
    for (const auto& [name, points] : {std::pair{"train_spikes.txt", &split.train_points},
                                       std::pair{"test_spikes.txt", &split.test_points}}) {
      std::vector<data::EncodedSample> encoded;
      for (const auto& p : *points) encoded.push_back(data::encode(p, enc));
      auto os = open_out(dir / name);
      data::write_encoded(os, encoded);
    }
  }
  out << "wrote " << split.train_points.size() << " train and " << split.test_points.size() << " test samples to "
      << dir.string() << '\n';
  return kOk;
}

int cmd_train(const Common& c, std::ostream& out) {
  const auto cfg = resolve(c, false);
  const auto dir = prepare_out(c.out_dir, cfg);
  auto metrics = open_out(dir / "metrics.csv");
  metrics << kMetricsHeader << '\n';
  const auto result = train(cfg, [&](const EpochMetrics& m) {
    write_metrics_row(metrics, m);
    metrics.flush();
    out << "epoch " << m.epoch << "  loss " << std::fixed << std::setprecision(4) << m.train_loss << "  train "
        << m.train_acc << "  test " << m.test_acc << "  (" << std::setprecision(1) << m.seconds << " s)\n"
        << std::defaultfloat << std::flush;
  });
  {
    auto os = open_out(dir / "checkpoint.txt");
    write_checkpoint(os, result.final_net);
  }
  {
    auto os = open_out(dir / "best_checkpoint.txt");
    write_checkpoint(os, result.best);
  }
  out << "final test accuracy " << result.history.back().test_acc << ", best " << result.best_test_acc << '\n';
  return kOk;
}

int cmd_eval(const Common& c, const Extra& x, std::ostream& out) {
  const auto cfg = resolve(c, false);
  const auto dir = prepare_out(c.out_dir, cfg);
  const Network net = load_network(x.checkpoint, cfg);
  const auto split = make_data(cfg.dataset);
  const double train_acc = evaluate(net, cfg, split.train);
  const double test_acc = evaluate(net, cfg, split.test);
  auto os = open_out(dir / "eval.csv");
  os << "split,samples,accuracy\n";
  os << "train," << split.train.size() << ',' << format_time(train_acc) << '\n';
  os << "test," << split.test.size() << ',' << format_time(test_acc) << '\n';
  out << "train accuracy " << train_acc << ", test accuracy " << test_acc << '\n';
  return kOk;
}

int cmd_export(const Common& c, const Extra& x, std::ostream& out) {
  const auto cfg = resolve(c, false);
  if (cfg.backend.kind == BackendKind::replay) {
    throw Error(ErrorCode::ConfigError, "export-traces needs a forward backend (numeric or mock)");
  }
  if (x.samples <= 0) throw Error(ErrorCode::ConfigError, "--samples must be positive");
  const auto dir = prepare_out(c.out_dir, cfg);
  const Network net = load_network(x.checkpoint, cfg);
  const auto split = make_data(cfg.dataset);
  const int n = std::min<int>(x.samples, static_cast<int>(split.train.size()));
  ReplayManifest manifest;
  manifest.m = budget_for(cfg, net);
  manifest.t_max = cfg.sim.t_max;
  for (int k = 0; k < n; ++k) {
    const auto trace = forward(cfg.backend, net, split.train[k].inputs, manifest.m, cfg.sim.t_max,
                               cfg.train.seed * 1000003ULL + static_cast<std::uint64_t>(k));
    manifest.samples.push_back({k, trace.spikes});
  }
  {
    auto os = open_out(dir / "traces.txt");
    write_manifest(os, manifest, net.n_total);
  }
  {
    auto os = open_out(dir / "checkpoint.txt");
    write_checkpoint(os, net);
  }
  out << "exported " << n << " traces (m=" << manifest.m << ") to " << (dir / "traces.txt").string() << '\n';
  return kOk;
}

int cmd_replay_train(const Common& c, const Extra& x, std::ostream& out) {
  auto cfg = resolve(c, false);
  const std::string traces = x.traces.empty() ? cfg.backend.replay.trace_path : x.traces;
  if (traces.empty()) throw Error(ErrorCode::ConfigError, "replay-train needs --traces or backend.replay.trace_path");
  cfg.backend.kind = BackendKind::replay;
  cfg.backend.replay.trace_path = traces;
  const auto dir = prepare_out(c.out_dir, cfg);
  Network net = load_network(x.checkpoint, cfg);
  const auto split = make_data(cfg.dataset);
  const auto manifest = load_manifest(traces, net.n_total);
  const int m = budget_for(cfg, net);
  if (manifest.m != m) {
    throw Error(ErrorCode::ReplayShapeMismatch,
                "manifest m=" + std::to_string(manifest.m) + " differs from configured m=" + std::to_string(m));
  }
  if (manifest.samples.empty()) throw Error(ErrorCode::ReplayShapeMismatch, "manifest has no samples");

  std::vector<GradientRecord> records;
  Gradients mean = Gradients::zeros_like(net);
  double loss = 0.0;
  for (const auto& s : manifest.samples) {
    if (s.id < 0 || s.id >= static_cast<int>(split.train.size())) {
      throw Error(ErrorCode::ReplayShapeMismatch, "sample id " + std::to_string(s.id) + " outside the training set");
    }
    const auto trace = replay_trace(s, net, m, cfg.sim.t_max);
    const auto r = trace_gradient(trace, net, cfg, split.train[s.id].label);
    loss += r.loss.loss;
    mean += r.grads;
    records.push_back({s.id, r.grads});
  }
  mean *= 1.0 / static_cast<double>(manifest.samples.size());
  records.push_back({-1, mean});

  AdamState adam_w, adam_in;
  const AdamConfig adam{cfg.train.lr, cfg.train.beta1, cfg.train.beta2, cfg.train.eps};
  adam_step(net.weights, mean.weights, adam_w, adam);
  adam_step(net.input_weights, mean.input_weights, adam_in, adam);
  {
    auto os = open_out(dir / "gradients.txt");
    write_gradients(os, records);
  }
  {
    auto os = open_out(dir / "checkpoint.txt");
    write_checkpoint(os, net);
  }
  out << "replayed " << manifest.samples.size() << " traces, mean loss "
      << loss / static_cast<double>(manifest.samples.size()) << '\n';
  return kOk;
}

int cmd_plot(const Common& c, const Extra& x, std::ostream& out) {
  if (x.metrics.empty() == x.dataset.empty()) {
    throw Error(ErrorCode::ConfigError, "plot needs exactly one of --metrics or --dataset");
  }
  const auto cfg = resolve(c, false);
  const auto dir = prepare_out(c.out_dir, cfg);
  if (!x.dataset.empty()) {
    auto is = open_in(x.dataset);
    const auto points = data::read_dataset(is);
    if (points.empty()) throw Error(ErrorCode::IoError, "dataset " + x.dataset + " is empty");
    auto os = open_out(dir / "dataset_plot.csv");
    os << "class,x,y\n";
    std::map<int, int> counts;
    for (int k = 0; k < 3; ++k) {
      for (const auto& p : points) {
        if (static_cast<int>(p.label) != k) continue;
        os << data::class_name(p.label) << ',' << format_time(p.x) << ',' << format_time(p.y) << '\n';
        ++counts[k];
      }
    }
    for (const auto& [k, n] : counts) {
      out << data::class_name(static_cast<data::YinYangClass>(k)) << ": " << n << '\n';
    }
    return kOk;
  }
  auto is = open_in(x.metrics);
  std::string header;
  if (!std::getline(is, header) || header != kMetricsHeader) {
    throw Error(ErrorCode::ParseError, "metrics file " + x.metrics + " lacks the metrics header");
  }
  std::vector<std::string> rows;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    if (std::count(line.begin(), line.end(), ',') != 4) throw Error(ErrorCode::ParseError, "bad metrics row: " + line);
    rows.push_back(line);
  }
  if (rows.empty()) throw Error(ErrorCode::IoError, "metrics file " + x.metrics + " has no rows");
  // long format, one row per (series, epoch)
  auto os = open_out(dir / "metrics_plot.csv");
  os << "series,epoch,value\n";
  const char* names[] = {"train_loss", "train_acc", "test_acc", "seconds"};
  for (int col = 0; col < 4; ++col) {
    for (const auto& row : rows) {
      std::stringstream ss(row);
      std::string cell, epoch;
      std::getline(ss, epoch, ',');
      for (int k = 0; k <= col; ++k) std::getline(ss, cell, ',');
      os << names[col] << ',' << epoch << ',' << cell << '\n';
    }
  }
  out << "wrote " << rows.size() << " epochs to " << (dir / "metrics_plot.csv").string() << '\n';
  return kOk;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << format_time(m(r, c));
    os << '\n';
  }
}

Matrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      if (!(is >> tok)) throw Error(ErrorCode::ParseError, "gradient file truncated");
      m(r, c) = std::strtod(tok.c_str(), nullptr);
    }
  }
  return m;
}

}  // namespace

void write_gradients(std::ostream& os, const std::vector<GradientRecord>& records) {
  os << "eventsnn-gradients 1 records " << records.size() << '\n';
  for (const auto& r : records) {
    os << "sample " << r.sample << " weights " << r.grads.weights.rows() << ' ' << r.grads.weights.cols()
       << " input_weights " << r.grads.input_weights.rows() << ' ' << r.grads.input_weights.cols() << '\n';
    write_matrix(os, r.grads.weights);
    write_matrix(os, r.grads.input_weights);
  }
}

std::vector<GradientRecord> read_gradients(std::istream& is) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ParseError, "gradient file: " + what); };
  std::string tag, key;
  int version = 0;
  std::size_t n = 0;
  if (!(is >> tag >> version >> key >> n) || tag != "eventsnn-gradients" || key != "records") fail("bad header");
  if (version != 1) fail("unsupported version");
  std::vector<GradientRecord> out(n);
  for (auto& r : out) {
    std::string k1, k2, k3;
    Eigen::Index wr = 0, wc = 0, ir = 0, ic = 0;
    if (!(is >> k1 >> r.sample >> k2 >> wr >> wc >> k3 >> ir >> ic) || k1 != "sample" || k2 != "weights" ||
        k3 != "input_weights") {
      fail("bad record header");
    }
    r.grads.weights = read_matrix(is, wr, wc);
    r.grads.input_weights = read_matrix(is, ir, ic);
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-driven spiking network training on the Yin-Yang task", "eventsnn"};
  app.require_subcommand(1);
  Common common;
  Extra extra;

  auto* gen = app.add_subcommand("generate", "write the Yin-Yang train/test splits");
  add_common(gen, common);
  gen->add_flag("--encoded", extra.encoded, "also write the encoded input spikes");

  auto* tr = app.add_subcommand("train", "train a network, writing metrics.csv and checkpoints");
  add_common(tr, common);

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on both splits");
  add_common(ev, common);
  ev->add_option("--checkpoint", extra.checkpoint, "checkpoint file (default: untrained init)")
      ->check(CLI::ExistingFile);

  auto* ex = app.add_subcommand("export-traces", "run forward passes and dump them as a replay manifest");
  add_common(ex, common);
  ex->add_option("--checkpoint", extra.checkpoint, "checkpoint file (default: untrained init)")
      ->check(CLI::ExistingFile);
  ex->add_option("--samples", extra.samples, "number of training samples to export");

  auto* rt = app.add_subcommand("replay-train", "one optimizer step from replayed traces");
  add_common(rt, common);
  rt->add_option("--checkpoint", extra.checkpoint, "checkpoint file (default: untrained init)")
      ->check(CLI::ExistingFile);
  rt->add_option("--traces", extra.traces, "replay manifest (default: backend.replay.trace_path)");

  auto* pl = app.add_subcommand("plot", "emit plot-ready CSV for a dataset or a metrics file");
  add_common(pl, common);
  pl->add_option("--metrics", extra.metrics, "metrics.csv from train");
  pl->add_option("--dataset", extra.dataset, "train.csv or test.csv from generate");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate(common, extra, out);
    if (*tr) return cmd_train(common, out);
    if (*ev) return cmd_eval(common, extra, out);
    if (*ex) return cmd_export(common, extra, out);
    if (*rt) return cmd_replay_train(common, extra, out);
    if (*pl) return cmd_plot(common, extra, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace eventsnn::cli
