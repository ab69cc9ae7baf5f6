#include "s2kan/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "s2kan/common.hpp"

namespace s2kan {

void Dataset::validate() const {
  if (n < 1 || in_dim < 1 || out_dim < 1) {
    throw std::invalid_argument("dataset: empty or dimensionless");
  }
  if (X.size() != static_cast<size_t>(n) * in_dim ||
      Y.size() != static_cast<size_t>(n) * out_dim) {
    throw std::invalid_argument("dataset: buffer sizes disagree with n/dims");
  }
}

int TrainConfig::resolved_patience() const {
  if (patience > 0) return patience;
  return std::min(500, std::max(1, epochs / 20));
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  if (warmup_epochs < 0) {
    throw std::invalid_argument("train: warmup_epochs must be >= 0");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("train: learning_rate must be positive");
  }
  if (beta < 0.0) throw std::invalid_argument("train: beta must be >= 0");
}

std::vector<int> default_grid_schedule(int epochs) {
  std::vector<int> out;
  for (int e = 5; e <= 50; e += 5) {
    if (e < epochs) out.push_back(e);
  }
  return out;
}

double mdl_penalty(double k_weighted, double beta, int n_train) {
  if (n_train < 1) throw std::invalid_argument("mdl_penalty: n_train < 1");
  return beta * k_weighted * std::log(static_cast<double>(n_train)) /
         (2.0 * n_train);
}

namespace {

struct ParamRef {
  double* value;
  double* grad;
};

std::vector<ParamRef> collect_params(Network& net) {
  std::vector<ParamRef> params;
  const bool learn_alphas = !net.gates_fixed_open;
  for (auto& layer : net.layers) {
    for (Edge& e : layer) {
      for (Term& t : e.terms) {
        if (t.kind == TermKind::Fitted) continue;
        if (t.kind == TermKind::Spline) {
          for (size_t i = 0; i < t.coeffs.size(); ++i) {
            params.push_back({&t.coeffs[i], &t.coeffs_grad[i]});
          }
        } else {
          params.push_back({&t.coeff, &t.coeff_grad});
        }
        if (learn_alphas) params.push_back({&t.alpha, &t.alpha_grad});
      }
    }
  }
  return params;
}

// Deterministic range-collection pass over the whole training set.
void collect_ranges(Network& net, const Dataset& data) {
  Tape tape;
  ForwardOptions opt;
  opt.track_range = true;
  const int chunk = 1024;
  for (int start = 0; start < data.n; start += chunk) {
    const int b = std::min(chunk, data.n - start);
    forward(net, data.X.data() + static_cast<size_t>(start) * data.in_dim, b,
            tape, opt);
  }
}

EpochRecord make_record(const Network& net, int epoch, double mse,
                        double beta_eff, int n_train) {
  EpochRecord rec;
  rec.epoch = epoch;
  rec.mse_train = mse;
  ExpectedTerms et = expected_active_terms(net);
  rec.k = et.k;
  rec.k_weighted = et.k_weighted;
  rec.penalty = mdl_penalty(et.k_weighted, beta_eff, n_train);
  ModelSummary s = active_summary(net);
  GateStats gs = gate_stats(s.gate_probs);
  rec.entropy_bits = gs.entropy_bits;
  rec.decisiveness = gs.decisiveness;
  rec.p_symbolic_mean = s.p_symbolic_mean;
  rec.p_spline_mean = s.p_spline_mean;
  rec.p_fourier_mean = s.p_fourier_mean;
  rec.p_chebyshev_mean = s.p_chebyshev_mean;
  rec.p_layer_mean = s.p_layer_mean;
  return rec;
}

}  // namespace

TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  cfg.validate();
  if (data.in_dim != net.spec.input_dim ||
      data.out_dim != net.spec.output_dim()) {
    throw std::invalid_argument(
        strf("train: dataset dims %dx%d do not match network %dx%d",
             data.in_dim, data.out_dim, net.spec.input_dim,
             net.spec.output_dim()));
  }

  std::mt19937_64 rng(cfg.seed);

  // Place grids over the actual data range before the first step; the
  // default [-1,1] grid may not even overlap the inputs.
  collect_ranges(net, data);
  grid_update(net);

  std::vector<int> schedule = cfg.grid_update_epochs;
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());

  std::vector<ParamRef> params = collect_params(net);
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  long step = 0;

  const int out_dim = data.out_dim;
  const double ln_n = std::log(static_cast<double>(data.n));
  const int patience = cfg.resolved_patience();
  const bool early_stop_active = cfg.early_stop && !net.gates_fixed_open;

  std::vector<int> perm(data.n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> Xb, Yb, dLdY;
  Tape tape;
  ForwardOptions fopt;
  fopt.stochastic = true;
  fopt.rng = &rng;
  fopt.track_range = true;

  TrainResult result;
  int streak = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (std::binary_search(schedule.begin(), schedule.end(), epoch) &&
        epoch > 0) {
      grid_update(net);
    }
    const double beta_eff = epoch < cfg.warmup_epochs ? 0.0 : cfg.beta;
    const double pen_coeff = beta_eff * ln_n / (2.0 * data.n);

    std::shuffle(perm.begin(), perm.end(), rng);
    double sse_epoch = 0.0;
    for (int start = 0; start < data.n; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, data.n - start);
      Xb.resize(static_cast<size_t>(bsz) * data.in_dim);
      Yb.resize(static_cast<size_t>(bsz) * out_dim);
      for (int b = 0; b < bsz; ++b) {
        const int idx = perm[start + b];
        std::copy_n(data.X.begin() + static_cast<size_t>(idx) * data.in_dim,
                    data.in_dim, Xb.begin() + static_cast<size_t>(b) * data.in_dim);
        std::copy_n(data.Y.begin() + static_cast<size_t>(idx) * out_dim,
                    out_dim, Yb.begin() + static_cast<size_t>(b) * out_dim);
      }

      forward(net, Xb.data(), bsz, tape, fopt);

      const double* yhat = tape.outputs();
      const double scale = 1.0 / (static_cast<double>(bsz) * out_dim);
      double sse = 0.0;
      dLdY.resize(Yb.size());
      for (size_t i = 0; i < Yb.size(); ++i) {
        const double r = yhat[i] - Yb[i];
        sse += r * r;
        dLdY[i] = 2.0 * r * scale;
      }
      if (!std::isfinite(sse)) {
        throw numeric_error(strf(
            "train: non-finite loss at epoch %d, batch starting at %d", epoch,
            start));
      }
      sse_epoch += sse;

      zero_grads(net);
      backward(net, tape, dLdY.data());
      penalty_backward(net, pen_coeff);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, step);
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, step);
      for (size_t p = 0; p < params.size(); ++p) {
        const double g = *params[p].grad;
        m[p] = cfg.adam_beta1 * m[p] + (1.0 - cfg.adam_beta1) * g;
        v[p] = cfg.adam_beta2 * v[p] + (1.0 - cfg.adam_beta2) * g * g;
        *params[p].value -=
            cfg.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + cfg.adam_eps);
      }
    }

    const double mse_epoch = sse_epoch / (static_cast<double>(data.n) * out_dim);
    result.history.push_back(make_record(net, epoch, mse_epoch, beta_eff, data.n));
    result.epochs_run = epoch + 1;
    result.final_mse = mse_epoch;

    if (early_stop_active && epoch >= cfg.warmup_epochs) {
      if (result.history.back().decisiveness > cfg.decisiveness_threshold) {
        if (++streak >= patience) {
          result.early_stopped = true;
          break;
        }
      } else {
        streak = 0;
      }
    }
  }
  return result;
}

EvalMetrics evaluate(Network& net, const Dataset& data) {
  data.validate();
  if (data.in_dim != net.spec.input_dim ||
      data.out_dim != net.spec.output_dim()) {
    throw std::invalid_argument("evaluate: dataset dims do not match network");
  }
  EvalMetrics out;
  out.n = data.n;
  const int od = data.out_dim;
  std::vector<double> mean(od, 0.0);
  for (int i = 0; i < data.n; ++i) {
    for (int d = 0; d < od; ++d) mean[d] += data.Y[static_cast<size_t>(i) * od + d];
  }
  for (double& mu : mean) mu /= data.n;

  Tape tape;
  double sse = 0.0, sst = 0.0;
  const int chunk = 1024;
  for (int start = 0; start < data.n; start += chunk) {
    const int b = std::min(chunk, data.n - start);
    forward(net, data.X.data() + static_cast<size_t>(start) * data.in_dim, b,
            tape);
    const double* yhat = tape.outputs();
    const double* y = data.Y.data() + static_cast<size_t>(start) * od;
    for (int i = 0; i < b; ++i) {
      for (int d = 0; d < od; ++d) {
        const double r = yhat[static_cast<size_t>(i) * od + d] -
                         y[static_cast<size_t>(i) * od + d];
        sse += r * r;
        const double c = y[static_cast<size_t>(i) * od + d] - mean[d];
        sst += c * c;
      }
    }
  }
  out.mse = sse / (static_cast<double>(data.n) * od);
  out.rmse = std::sqrt(out.mse);
  out.r2 = sst > 0.0 ? 1.0 - sse / sst
                     : std::numeric_limits<double>::quiet_NaN();
  return out;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
  const size_t n_layers = history.empty() ? 0 : history[0].p_layer_mean.size();
  out << "epoch,mse_train,penalty,k,k_weighted,entropy_bits,decisiveness,"
         "p_symbolic_mean,p_spline_mean,p_fourier_mean,p_chebyshev_mean";
  for (size_t l = 0; l < n_layers; ++l) out << ",p_layer" << l << "_mean";
  out << "\n";
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << ',' << buf;
  };
  for (const auto& r : history) {
    out << r.epoch;
    put(r.mse_train);
    put(r.penalty);
    put(r.k);
    put(r.k_weighted);
    put(r.entropy_bits);
    put(r.decisiveness);
    put(r.p_symbolic_mean);
    put(r.p_spline_mean);
    put(r.p_fourier_mean);
    put(r.p_chebyshev_mean);
    for (double v : r.p_layer_mean) put(v);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_history_csv: write failed");
}

std::vector<EpochRecord> read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_history_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_history_csv: empty file " + path);
  }
  size_t n_cols = std::count(line.begin(), line.end(), ',') + 1;
  if (n_cols < 11) {
    throw std::runtime_error("read_history_csv: unexpected header in " + path);
  }
  std::vector<EpochRecord> history;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != n_cols) {
      throw std::runtime_error("read_history_csv: ragged row in " + path);
    }
    EpochRecord r;
    r.epoch = static_cast<int>(vals[0]);
    r.mse_train = vals[1];
    r.penalty = vals[2];
    r.k = vals[3];
    r.k_weighted = vals[4];
    r.entropy_bits = vals[5];
    r.decisiveness = vals[6];
    r.p_symbolic_mean = vals[7];
    r.p_spline_mean = vals[8];
    r.p_fourier_mean = vals[9];
    r.p_chebyshev_mean = vals[10];
    r.p_layer_mean.assign(vals.begin() + 11, vals.end());
    history.push_back(std::move(r));
  }
  return history;
}

}  // namespace s2kan
