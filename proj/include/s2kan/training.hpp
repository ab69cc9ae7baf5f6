#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2kan/network.hpp"

namespace s2kan {

// Row-major supervised dataset.
struct Dataset {
  int n = 0;
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> X;  // n x in_dim
  std::vector<double> Y;  // n x out_dim

  void validate() const;  // throws std::invalid_argument
};

struct TrainConfig {
  double beta = 0.0;
  int epochs = 1000;
  int batch_size = 128;
  int warmup_epochs = 200;  // penalty off (beta treated as 0) before this
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Epochs at which grid_update runs (besides the initial placement pass).
  std::vector<int> grid_update_epochs;
  bool early_stop = true;
  double decisiveness_threshold = 0.99;
  // Consecutive epochs above the threshold before stopping; <= 0 picks
  // min(500, 5% of epochs).
  int patience = 0;
  std::uint64_t seed = 0;

  int resolved_patience() const;
  void validate() const;
};

// Ten updates evenly spread over the first 50 epochs (clipped to the run
// length); empty for runs shorter than 5 epochs.
std::vector<int> default_grid_schedule(int epochs);

// MDL/BIC penalty arithmetic: beta * k * ln(n) / (2n).
double mdl_penalty(double k_weighted, double beta, int n_train);

struct EpochRecord {
  int epoch = 0;
  double mse_train = 0.0;
  double penalty = 0.0;
  double k = 0.0;
  double k_weighted = 0.0;
  double entropy_bits = 0.0;
  double decisiveness = 0.0;
  double p_symbolic_mean = 0.0;
  double p_spline_mean = 0.0;
  double p_fourier_mean = 0.0;
  double p_chebyshev_mean = 0.0;
  std::vector<double> p_layer_mean;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int epochs_run = 0;
  bool early_stopped = false;
  double final_mse = 0.0;
};

// Minibatch Adam on the gated network. Deterministic for a fixed seed:
// shuffling, gate noise and nothing else consume the stream. Performs one
// range-collection pass plus grid_update before the first epoch, then the
// scheduled updates. Throws numeric_error (with epoch/batch coordinates) if
// the loss goes non-finite.
TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg);

struct EvalMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;  // NaN when the targets have zero variance
  int n = 0;
};

// Deterministic-gate evaluation (thresholded gates, no mutation).
EvalMetrics evaluate(Network& net, const Dataset& data);

// History CSV: fixed column header, %.17g doubles (byte-identical across
// runs with equal seeds).
void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history);
std::vector<EpochRecord> read_history_csv(const std::string& path);

}  // namespace s2kan
