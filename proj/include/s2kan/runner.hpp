#pragma once

#include <string>
#include <utility>
#include <vector>

#include "s2kan/benchmarks.hpp"
#include "s2kan/network.hpp"
#include "s2kan/symbolify.hpp"
#include "s2kan/toml.hpp"
#include "s2kan/training.hpp"

namespace s2kan {

enum class RunMode { S2kan, Baseline, BaselineSymbolify };

const char* mode_name(RunMode m);
RunMode mode_from_name(const std::string& name);

// One experiment: task, architecture, dictionary, optimizer settings.
// Serializes to/from the TOML config format; every run directory keeps the
// fully resolved snapshot.
struct RunConfig {
  std::string preset;  // provenance note, may be empty
  std::string task = "sinc";
  RunMode mode = RunMode::S2kan;
  std::string shape = "[1,1]";
  std::uint64_t seed = 0;
  bool seed_set = false;  // run_train refuses to guess a seed
  std::string out_dir;    // empty = runs/<preset-or-task>-seed<seed>
  std::string data_path;  // tabular tasks

  int n_train = 1024;
  int n_test = 256;
  double sinc_lo = 1.0;
  double sinc_hi = 15.0;
  int dyn_points = 10000;
  int dyn_transient = 1000;
  int subsample = 0;

  DictionaryConfig dict;
  TrainConfig train;
  bool grid_updates_default = true;  // resolve the 10-in-50 schedule

  double symbolify_threshold = 0.95;

  void validate() const;
  std::vector<int> resolved_grid_updates() const;
};

RunConfig config_from_toml(const toml::Table& table);
RunConfig load_config(const std::string& path);
std::string config_to_toml(const RunConfig& cfg);  // resolved snapshot

// Benchmark presets (sinc, nguyen-F*-{S,L,LM}-*, ikeda-*, ecosystem-*,
// concrete-*, superconductor-*, gate-dynamics-*).
std::vector<std::pair<std::string, std::string>> list_presets();
RunConfig preset_config(const std::string& name);

// Data for one run; trajectory filled for the dynamical systems, the
// standardization scalars for tabular tasks.
struct TaskData {
  SplitDataset split;
  bool has_trajectory = false;
  TrajectoryData traj;
  double y_mean = 0.0;
  double y_std = 1.0;
  std::string meta;
};
TaskData make_task_data(const RunConfig& cfg);

// Per-system state labels ("x,y" / "N,P,Q") for trajectory files.
std::vector<std::string> state_labels(const std::string& task);

struct RunOutput {
  std::string run_dir;
  EvalMetrics train_metrics;
  EvalMetrics test_metrics;
  ModelSummary summary;
  TrainResult result;
  // Filled in baseline+symbolify mode:
  bool symbolified = false;
  EvalMetrics symbolified_test;
  SymbolifyReport symbolify_report;
};

// Trains per config and writes the run directory: config.toml (snapshot),
// train.csv/test.csv (cached data), checkpoint.json, history.csv,
// metrics.json, expression.txt; plus checkpoint_symbolified.json and
// metrics_symbolified.json in baseline+symbolify mode. Returns the network
// through `out` when non-null.
RunOutput run_train(RunConfig cfg, Network* out = nullptr);

// Re-evaluates a checkpoint on a cached dataset CSV.
EvalMetrics eval_checkpoint(const std::string& checkpoint_path,
                            const std::string& dataset_csv);

std::string metrics_to_json(const RunConfig& cfg, const RunOutput& out);

}  // namespace s2kan
