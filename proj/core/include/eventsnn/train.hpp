#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "eventsnn/config.hpp"
#include "eventsnn/data.hpp"
#include "eventsnn/grad.hpp"

namespace eventsnn {

/// First-spike softmax cross-entropy. Silent outputs are treated as spiking
/// at t_none; `alpha` adds alpha * t_label to favour early correct spikes.
struct TtfsLoss {
  double xi = 0.5;
  double t_none = 6.0;
  double alpha = 0.0;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> loss_grads;    // per trace slot
  std::vector<double> first_times;   // per output, +inf when silent
  int predicted = -1;                // earliest output, -1 when all are silent
};

LossResult ttfs_loss(const EventTrace& trace, std::span<const int> output_set, int label, const TtfsLoss& cfg);

/// Index into output_set of the earliest first spike (lowest index on ties),
/// -1 when no output spiked.
int predict(const EventTrace& trace, std::span<const int> output_set);

struct AdamConfig {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

/// One bias-corrected Adam update of `params`. Throws ShapeMismatch.
void adam_step(Matrix& params, const Matrix& grads, AdamState& state, const AdamConfig& cfg);

/// 5 -> n_hidden -> n_outputs feed-forward network laid out in one population:
/// hidden neurons [0, n_hidden), outputs after them. Masks restrict weights to
/// input->hidden and hidden->output.
Network make_network(const ExperimentConfig& cfg, int n_inputs);
void init_weights(Network& net, const ExperimentConfig& cfg, std::uint64_t seed);

struct Sample {
  std::vector<Spike> inputs;
  int label = 0;
};

std::vector<Sample> encode_all(const std::vector<data::YinYangPoint>& points, const DatasetConfig& cfg);

/// Train and test splits drawn from independent streams of dataset.seed.
struct DataSplit {
  std::vector<data::YinYangPoint> train_points;
  std::vector<data::YinYangPoint> test_points;
  std::vector<Sample> train;
  std::vector<Sample> test;
};
DataSplit make_data(const DatasetConfig& cfg);

/// Network of make_network with init_weights drawn from train.seed.
Network initial_network(const ExperimentConfig& cfg);

int budget_for(const ExperimentConfig& cfg, const Network& net);

/// Fraction of hidden neurons that spike on at least one of `samples`.
double hidden_activity(const Network& net, const ExperimentConfig& cfg, std::span<const Sample> samples);

/// Test accuracy of the earliest-output prediction, forward passes through
/// cfg.backend (replay has no forward pass and is rejected).
double evaluate(const Network& net, const ExperimentConfig& cfg, std::span<const Sample> samples);

/// Per-sample forward, loss and gradient; the gradient path follows
/// cfg.train.estimator.
struct SampleResult {
  LossResult loss;
  Gradients grads;
  std::vector<std::uint8_t> fired;  // per neuron: spiked at least once
};
/// Loss and gradient of an already computed (or replayed) trace.
SampleResult trace_gradient(const EventTrace& trace, const Network& net, const ExperimentConfig& cfg, int label);
SampleResult sample_gradient(const Network& net, const ExperimentConfig& cfg, const Sample& sample,
                             std::uint64_t seed);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  Network initial;
  Network final_net;
  Network best;
  double best_test_acc = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Generates the dataset, initializes and trains. Deterministic in the config
/// seeds. Epoch 0 in the history is the untrained network.
TrainResult train(const ExperimentConfig& cfg, const EpochCallback& on_epoch = {});

/// Text checkpoint, first line `eventsnn-checkpoint 1`.
void write_checkpoint(std::ostream& os, const Network& net);
Network read_checkpoint(std::istream& is);

inline constexpr const char* kMetricsHeader = "epoch,train_loss,train_acc,test_acc,seconds";
void write_metrics_row(std::ostream& os, const EpochMetrics& m);
void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& history);

}  // namespace eventsnn
