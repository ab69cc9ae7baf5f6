#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "s2kan/training.hpp"

namespace s2kan {

// --- Closed-form regression targets ------------------------------------

// y = sin(x)/x, inputs uniform on [lo, hi]. Train and test are drawn from
// one seeded stream (train first).
struct SincConfig {
  int n_train = 1024;
  int n_test = 256;
  double lo = 1.0;
  double hi = 15.0;
  std::uint64_t seed = 0;
};
struct SplitDataset {
  Dataset train;
  Dataset test;
};
SplitDataset gen_sinc(const SincConfig& cfg);

// Symbolic-regression suite F1..F10; 1-d problems sample [-1,1] except F7
// ([0,2]) and F8 ([0,4]); 2-d problems sample [-1,1]^2 except F10
// ([-pi,pi]^2).
struct NguyenConfig {
  int id = 1;  // 1..10
  int n_train = 1024;
  int n_test = 256;
  std::uint64_t seed = 0;
};
SplitDataset gen_nguyen(const NguyenConfig& cfg);
int nguyen_input_dim(int id);

// Synthetic 5-feature tabular stand-in (additive symbolic ground truth);
// used where the real-world CSVs cannot be shipped.
struct Synth5Config {
  int n_train = 1000;
  int n_test = 1000;
  std::uint64_t seed = 0;
};
SplitDataset gen_synth5(const Synth5Config& cfg);

// --- Dynamical systems --------------------------------------------------

struct IkedaConfig {
  double mu = 0.9;
  int n_points = 10000;  // trained pairs; n_points+1 states are generated
  int transient = 1000;
  double x0 = 0.1;
  double y0 = 0.1;
};
std::array<double, 2> ikeda_step(double x, double y, double mu = 0.9);

struct EcosystemConfig {
  double K = 0.98;
  double xp = 0.4;
  double yp = 2.009;
  double xq = 0.08;
  double yq = 2.876;
  double N0 = 0.16129;
  double P0 = 0.5;
  double dt = 0.1;
  int n_points = 10000;
  int transient = 1000;
  std::array<double, 3> init = {0.5, 0.5, 0.5};
};
// Analytic right-hand side of the three-species chain.
std::array<double, 3> ecosystem_rhs(const std::array<double, 3>& state,
                                    const EcosystemConfig& cfg = {});
// One RK4 step of the ecosystem flow.
std::array<double, 3> ecosystem_rk4(const std::array<double, 3>& state,
                                    double dt, const EcosystemConfig& cfg = {});

enum class DynamicalSystem { Ikeda, Ecosystem };

// Map tasks: pairs (state, next state). Flow tasks: pairs (state, analytic
// RHS). Contiguous 80/20 split; `trajectory` keeps every post-transient
// state for multi-step comparison (dim-major rows).
struct TrajectoryData {
  SplitDataset data;
  std::vector<double> trajectory;  // (n_states) x dim
  int dim = 0;
  int n_states = 0;
  int test_start = 0;  // index of the first test-pair state in `trajectory`
  double dt = 0.0;     // 0 for maps
};
TrajectoryData gen_ikeda(const IkedaConfig& cfg);
TrajectoryData gen_ecosystem(const EcosystemConfig& cfg);

// --- Multi-step rollout -------------------------------------------------

struct ForecastConfig {
  DynamicalSystem system = DynamicalSystem::Ikeda;
  int horizon = 100;
  double dt = 0.1;  // flows only
};
struct ForecastResult {
  // predictions[s] is the state after s steps (index 0 = initial state).
  std::vector<double> predictions;  // (steps+1) x dim
  int steps = 0;                    // finite steps actually taken
  bool diverged = false;
  int divergence_step = -1;
  double rmse = 0.0;  // vs reference over the finite prefix, steps 1..steps
};
// reference must hold horizon+1 states starting at the initial condition.
ForecastResult multistep_forecast(Network& net, const double* initial,
                                  const double* reference,
                                  const ForecastConfig& cfg);

// --- Tabular ingestion --------------------------------------------------

enum class TabularTask { Concrete, Superconductor };

struct TabularConfig {
  TabularTask task = TabularTask::Concrete;
  std::string csv_path;
  std::uint64_t seed = 0;
  int subsample = 0;  // 0 = all rows; superconductor uses 2000
};
struct TabularData {
  SplitDataset data;
  std::vector<std::string> feature_names;
  std::vector<double> x_mean, x_std;  // train-split standardization
  double y_mean = 0.0, y_std = 1.0;   // train-target stats, informational
};
// Concrete: 8 raw + 5 derived features (w/c, w/binder, binder, aggregate,
// log(age+1)), target strength. Superconductor: 5 named features, target
// critical temperature. Shuffled 80/20 split (subsample > 0: that many rows
// split 50/50). Inputs standardized by train statistics; targets stay in
// physical units (MPa / K). Throws on missing columns, non-numeric cells
// (with row numbers) and zero cement when deriving ratios.
TabularData load_tabular(const TabularConfig& cfg);

// --- Dataset cache files ------------------------------------------------

// CSV with a "# key=value ..." metadata line, x0..,y0.. header, %.17g cells.
void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& meta);
Dataset read_dataset_csv(const std::string& path, std::string* meta = nullptr);

}  // namespace s2kan
