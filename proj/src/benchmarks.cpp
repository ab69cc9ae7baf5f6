#include "s2kan/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "s2kan/common.hpp"

namespace s2kan {

namespace {

double sinc(double x) { return std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x; }

Dataset make_dataset(std::vector<double> X, std::vector<double> Y, int in_dim,
                     int out_dim) {
  Dataset d;
  d.in_dim = in_dim;
  d.out_dim = out_dim;
  d.n = static_cast<int>(X.size()) / in_dim;
  d.X = std::move(X);
  d.Y = std::move(Y);
  d.validate();
  return d;
}

}  // namespace

SplitDataset gen_sinc(const SincConfig& cfg) {
  if (cfg.n_train < 1 || cfg.n_test < 1) {
    throw std::invalid_argument("gen_sinc: need positive sample counts");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(cfg.lo, cfg.hi);
  auto draw = [&](int n) {
    std::vector<double> X(n), Y(n);
    for (int i = 0; i < n; ++i) {
      X[i] = dist(rng);
      Y[i] = sinc(X[i]);
    }
    return make_dataset(std::move(X), std::move(Y), 1, 1);
  };
  SplitDataset out;
  out.train = draw(cfg.n_train);
  out.test = draw(cfg.n_test);
  return out;
}

int nguyen_input_dim(int id) {
  if (id < 1 || id > 10) {
    throw std::invalid_argument(strf("nguyen: id %d outside 1..10", id));
  }
  return id >= 9 ? 2 : 1;
}

SplitDataset gen_nguyen(const NguyenConfig& cfg) {
  const int dim = nguyen_input_dim(cfg.id);
  double lo = -1.0, hi = 1.0;
  if (cfg.id == 7) lo = 0.0, hi = 2.0;
  if (cfg.id == 8) lo = 0.0, hi = 4.0;
  if (cfg.id == 10) lo = -M_PI, hi = M_PI;
  auto f = [&](const double* x) {
    const double a = x[0];
    const double b = dim == 2 ? x[1] : 0.0;
    switch (cfg.id) {
      case 1: return a * a * a + a * a + a;
      case 2: return a * a * (a * a + a + 1) + a;
      case 3: return a * (a * a * (a * a + a + 1) + a + 1);
      case 4: return a * a * (a * a * (a * a + a + 1) + a + 1) + a;
      case 5: return std::sin(a * a) * std::cos(a) - 1.0;
      case 6: return std::sin(a) + std::sin(a + a * a);
      case 7: return std::log1p(a) + std::log(a * a + 1.0);
      case 8: return std::sqrt(a);
      case 9: return std::sin(a) + std::sin(b * b);
      case 10: return 2.0 * std::sin(a) * std::cos(b);
    }
    return 0.0;
  };
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  auto draw = [&](int n) {
    std::vector<double> X(static_cast<size_t>(n) * dim), Y(n);
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < dim; ++d) X[static_cast<size_t>(i) * dim + d] = dist(rng);
      Y[i] = f(&X[static_cast<size_t>(i) * dim]);
    }
    return make_dataset(std::move(X), std::move(Y), dim, 1);
  };
  SplitDataset out;
  out.train = draw(cfg.n_train);
  out.test = draw(cfg.n_test);
  return out;
}

SplitDataset gen_synth5(const Synth5Config& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  auto draw = [&](int n) {
    std::vector<double> X(static_cast<size_t>(n) * 5), Y(n);
    for (int i = 0; i < n; ++i) {
      double* x = &X[static_cast<size_t>(i) * 5];
      for (int d = 0; d < 5; ++d) x[d] = dist(rng);
      Y[i] = 1.5 * x[0] + x[1] * x[1] - 0.8 * std::sin(2.0 * x[2]) +
             0.3 * std::exp(x[3]) + 0.2 * x[4] * x[4] * x[4];
    }
    return make_dataset(std::move(X), std::move(Y), 5, 1);
  };
  SplitDataset out;
  out.train = draw(cfg.n_train);
  out.test = draw(cfg.n_test);
  return out;
}

std::array<double, 2> ikeda_step(double x, double y, double mu) {
  const double phi = 0.4 - 6.0 / (1.0 + x * x + y * y);
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  return {1.0 + mu * (x * c - y * s), mu * (x * s + y * c)};
}

std::array<double, 3> ecosystem_rhs(const std::array<double, 3>& st,
                                    const EcosystemConfig& cfg) {
  const double N = st[0], P = st[1], Q = st[2];
  const double fN = N / (N + cfg.N0);
  const double fP = P / (P + cfg.P0);
  return {
      N * (1.0 - N / cfg.K) - cfg.xp * cfg.yp * fN * P,
      cfg.xp * P * (cfg.yp * fN - 1.0) - cfg.xq * cfg.yq * fP * Q,
      cfg.xq * Q * (cfg.yq * fP - 1.0),
  };
}

std::array<double, 3> ecosystem_rk4(const std::array<double, 3>& st, double dt,
                                    const EcosystemConfig& cfg) {
  auto add = [](const std::array<double, 3>& a, const std::array<double, 3>& b,
                double s) {
    return std::array<double, 3>{a[0] + s * b[0], a[1] + s * b[1],
                                 a[2] + s * b[2]};
  };
  const auto k1 = ecosystem_rhs(st, cfg);
  const auto k2 = ecosystem_rhs(add(st, k1, dt / 2), cfg);
  const auto k3 = ecosystem_rhs(add(st, k2, dt / 2), cfg);
  const auto k4 = ecosystem_rhs(add(st, k3, dt), cfg);
  std::array<double, 3> out;
  for (int d = 0; d < 3; ++d) {
    out[d] = st[d] + dt / 6.0 * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d]);
  }
  return out;
}

TrajectoryData gen_ikeda(const IkedaConfig& cfg) {
  if (cfg.n_points < 10) {
    throw std::invalid_argument("gen_ikeda: n_points too small");
  }
  TrajectoryData out;
  out.dim = 2;
  out.dt = 0.0;
  double x = cfg.x0, y = cfg.y0;
  for (int i = 0; i < cfg.transient; ++i) {
    auto nx = ikeda_step(x, y, cfg.mu);
    x = nx[0];
    y = nx[1];
  }
  out.n_states = cfg.n_points + 1;
  out.trajectory.reserve(static_cast<size_t>(out.n_states) * 2);
  for (int i = 0; i < out.n_states; ++i) {
    out.trajectory.push_back(x);
    out.trajectory.push_back(y);
    auto nx = ikeda_step(x, y, cfg.mu);
    x = nx[0];
    y = nx[1];
  }
  const int n_pairs = cfg.n_points;
  const int n_train = static_cast<int>(0.8 * n_pairs);
  auto slice = [&](int first, int count) {
    std::vector<double> X, Y;
    X.reserve(static_cast<size_t>(count) * 2);
    Y.reserve(static_cast<size_t>(count) * 2);
    for (int i = first; i < first + count; ++i) {
      X.push_back(out.trajectory[2 * i]);
      X.push_back(out.trajectory[2 * i + 1]);
      Y.push_back(out.trajectory[2 * (i + 1)]);
      Y.push_back(out.trajectory[2 * (i + 1) + 1]);
    }
    return make_dataset(std::move(X), std::move(Y), 2, 2);
  };
  out.data.train = slice(0, n_train);
  out.data.test = slice(n_train, n_pairs - n_train);
  out.test_start = n_train;
  return out;
}

TrajectoryData gen_ecosystem(const EcosystemConfig& cfg) {
  if (cfg.n_points < 10) {
    throw std::invalid_argument("gen_ecosystem: n_points too small");
  }
  TrajectoryData out;
  out.dim = 3;
  out.dt = cfg.dt;
  std::array<double, 3> st = cfg.init;
  for (int i = 0; i < cfg.transient; ++i) st = ecosystem_rk4(st, cfg.dt, cfg);
  out.n_states = cfg.n_points;
  out.trajectory.reserve(static_cast<size_t>(cfg.n_points) * 3);
  std::vector<double> X, Y;
  X.reserve(static_cast<size_t>(cfg.n_points) * 3);
  Y.reserve(static_cast<size_t>(cfg.n_points) * 3);
  for (int i = 0; i < cfg.n_points; ++i) {
    const auto rhs = ecosystem_rhs(st, cfg);
    for (int d = 0; d < 3; ++d) {
      out.trajectory.push_back(st[d]);
      X.push_back(st[d]);
      Y.push_back(rhs[d]);
    }
    st = ecosystem_rk4(st, cfg.dt, cfg);
  }
  const int n_train = static_cast<int>(0.8 * cfg.n_points);
  auto slice = [&](int first, int count) {
    std::vector<double> xs(X.begin() + static_cast<size_t>(first) * 3,
                           X.begin() + static_cast<size_t>(first + count) * 3);
    std::vector<double> ys(Y.begin() + static_cast<size_t>(first) * 3,
                           Y.begin() + static_cast<size_t>(first + count) * 3);
    return make_dataset(std::move(xs), std::move(ys), 3, 3);
  };
  out.data.train = slice(0, n_train);
  out.data.test = slice(n_train, cfg.n_points - n_train);
  out.test_start = n_train;
  return out;
}

ForecastResult multistep_forecast(Network& net, const double* initial,
                                  const double* reference,
                                  const ForecastConfig& cfg) {
  const int dim = cfg.system == DynamicalSystem::Ikeda ? 2 : 3;
  if (net.spec.input_dim != dim || net.spec.output_dim() != dim) {
    throw std::invalid_argument(
        strf("multistep_forecast: network is %dx%d but the system needs "
             "%dx%d",
             net.spec.input_dim, net.spec.output_dim(), dim, dim));
  }
  if (cfg.horizon < 1) {
    throw std::invalid_argument("multistep_forecast: horizon must be >= 1");
  }

  Tape tape;
  std::vector<double> state(initial, initial + dim);
  auto net_eval = [&](const std::vector<double>& in) {
    forward(net, in.data(), 1, tape);
    return std::vector<double>(tape.outputs(), tape.outputs() + dim);
  };

  ForecastResult res;
  res.predictions.assign(state.begin(), state.end());
  std::vector<double> k1, k2, k3, k4, tmp(dim);
  for (int s = 1; s <= cfg.horizon; ++s) {
    std::vector<double> next(dim);
    bool finite = true;
    try {
      if (cfg.system == DynamicalSystem::Ikeda) {
        next = net_eval(state);
      } else {
        k1 = net_eval(state);
        for (int d = 0; d < dim; ++d) tmp[d] = state[d] + cfg.dt / 2 * k1[d];
        k2 = net_eval(tmp);
        for (int d = 0; d < dim; ++d) tmp[d] = state[d] + cfg.dt / 2 * k2[d];
        k3 = net_eval(tmp);
        for (int d = 0; d < dim; ++d) tmp[d] = state[d] + cfg.dt * k3[d];
        k4 = net_eval(tmp);
        for (int d = 0; d < dim; ++d) {
          next[d] = state[d] +
                    cfg.dt / 6.0 * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d]);
        }
      }
    } catch (const numeric_error&) {
      finite = false;
    }
    for (int d = 0; finite && d < dim; ++d) {
      if (!std::isfinite(next[d]) || std::abs(next[d]) > 1e6) finite = false;
    }
    if (!finite) {
      res.diverged = true;
      res.divergence_step = s;
      break;
    }
    res.predictions.insert(res.predictions.end(), next.begin(), next.end());
    state = next;
    res.steps = s;
  }

  double sse = 0.0;
  long count = 0;
  for (int s = 1; s <= res.steps; ++s) {
    for (int d = 0; d < dim; ++d) {
      const double r = res.predictions[static_cast<size_t>(s) * dim + d] -
                       reference[static_cast<size_t>(s) * dim + d];
      sse += r * r;
      ++count;
    }
  }
  res.rmse = count > 0 ? std::sqrt(sse / count)
                       : std::numeric_limits<double>::quiet_NaN();
  return res;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n\"");
  size_t b = s.find_last_not_of(" \t\r\n\"");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

CsvTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_tabular: cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_tabular: empty file " + path);
  }
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(trim(cell));
  }
  std::vector<int> bad_rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        std::string c = trim(cell);
        row.push_back(std::stod(c, &used));
        if (used != c.size()) ok = false;
      } catch (const std::exception&) {
        ok = false;
        row.push_back(0.0);
      }
    }
    if (!ok || row.size() != t.columns.size()) {
      bad_rows.push_back(row_no);
      continue;
    }
    t.rows.push_back(std::move(row));
  }
  if (!bad_rows.empty()) {
    std::string list;
    for (size_t i = 0; i < bad_rows.size() && i < 10; ++i) {
      list += (i ? ", " : "") + std::to_string(bad_rows[i]);
    }
    if (bad_rows.size() > 10) list += ", ...";
    throw std::runtime_error(
        strf("load_tabular: non-numeric or ragged rows in %s (lines %s)",
             path.c_str(), list.c_str()));
  }
  return t;
}

int find_column(const CsvTable& t, const std::string& name) {
  const std::string want = lower(name);
  for (size_t i = 0; i < t.columns.size(); ++i) {
    if (lower(t.columns[i]) == want) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TabularData load_tabular(const TabularConfig& cfg) {
  CsvTable table = read_numeric_csv(cfg.csv_path);
  TabularData out;
  std::vector<int> cols;
  int target_col = -1;

  auto require = [&](const std::string& name) {
    int c = find_column(table, name);
    if (c < 0) {
      throw std::runtime_error("load_tabular: missing column \"" + name +
                               "\" in " + cfg.csv_path);
    }
    return c;
  };

  std::vector<std::vector<double>> feat;  // per-row feature vectors
  std::vector<double> target;

  if (cfg.task == TabularTask::Concrete) {
    const std::vector<std::string> raw = {
        "cement",          "blast_furnace_slag", "fly_ash",
        "water",           "superplasticizer",   "coarse_aggregate",
        "fine_aggregate",  "age"};
    for (const auto& r : raw) cols.push_back(require(r));
    target_col = require("strength");
    out.feature_names = raw;
    out.feature_names.insert(out.feature_names.end(),
                             {"w_c_ratio", "w_binder_ratio", "binder",
                              "total_aggregate", "log_age"});
    std::vector<int> zero_cement;
    for (size_t i = 0; i < table.rows.size(); ++i) {
      if (table.rows[i][cols[0]] == 0.0) {
        zero_cement.push_back(static_cast<int>(i) + 2);  // csv line number
      }
    }
    if (!zero_cement.empty()) {
      std::string list;
      for (size_t i = 0; i < zero_cement.size() && i < 10; ++i) {
        list += (i ? ", " : "") + std::to_string(zero_cement[i]);
      }
      throw std::runtime_error(
          strf("load_tabular: cement is zero on lines %s; cannot derive "
               "water/cement ratio",
               list.c_str()));
    }
    for (const auto& row : table.rows) {
      const double cement = row[cols[0]];
      const double slag = row[cols[1]];
      const double fly = row[cols[2]];
      const double water = row[cols[3]];
      const double coarse = row[cols[5]];
      const double fine = row[cols[6]];
      const double age = row[cols[7]];
      std::vector<double> f;
      for (int c : cols) f.push_back(row[c]);
      const double binder = cement + slag + fly;
      f.push_back(water / cement);
      f.push_back(water / binder);
      f.push_back(binder);
      f.push_back(coarse + fine);
      f.push_back(std::log1p(age));
      feat.push_back(std::move(f));
      target.push_back(row[target_col]);
    }
  } else {
    const std::vector<std::string> names = {
        "number_of_elements", "wtd_mean_Valence", "wtd_mean_fie",
        "mean_ElectronAffinity", "entropy_Valence"};
    for (const auto& nme : names) cols.push_back(require(nme));
    target_col = require("critical_temp");
    out.feature_names = names;
    for (const auto& row : table.rows) {
      std::vector<double> f;
      for (int c : cols) f.push_back(row[c]);
      feat.push_back(std::move(f));
      target.push_back(row[target_col]);
    }
  }

  const int n_all = static_cast<int>(feat.size());
  if (n_all < 10) {
    throw std::runtime_error("load_tabular: too few usable rows");
  }
  std::vector<int> order(n_all);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  int n_use = n_all;
  double train_frac = 0.8;
  if (cfg.subsample > 0 && cfg.subsample < n_all) {
    n_use = cfg.subsample;
    train_frac = 0.5;
  }
  const int n_train = static_cast<int>(train_frac * n_use);
  const int dim = static_cast<int>(feat[0].size());

  out.x_mean.assign(dim, 0.0);
  out.x_std.assign(dim, 0.0);
  double ymu = 0.0, ysd = 0.0;
  for (int i = 0; i < n_train; ++i) {
    const auto& f = feat[order[i]];
    for (int d = 0; d < dim; ++d) out.x_mean[d] += f[d];
    ymu += target[order[i]];
  }
  for (int d = 0; d < dim; ++d) out.x_mean[d] /= n_train;
  ymu /= n_train;
  for (int i = 0; i < n_train; ++i) {
    const auto& f = feat[order[i]];
    for (int d = 0; d < dim; ++d) {
      const double c = f[d] - out.x_mean[d];
      out.x_std[d] += c * c;
    }
    const double c = target[order[i]] - ymu;
    ysd += c * c;
  }
  for (int d = 0; d < dim; ++d) {
    out.x_std[d] = std::sqrt(out.x_std[d] / n_train);
    if (out.x_std[d] < 1e-12) out.x_std[d] = 1.0;
  }
  ysd = std::sqrt(ysd / n_train);
  if (ysd < 1e-12) ysd = 1.0;
  out.y_mean = ymu;
  out.y_std = ysd;

  auto build = [&](int first, int count) {
    std::vector<double> X(static_cast<size_t>(count) * dim), Y(count);
    for (int i = 0; i < count; ++i) {
      const auto& f = feat[order[first + i]];
      for (int d = 0; d < dim; ++d) {
        X[static_cast<size_t>(i) * dim + d] = (f[d] - out.x_mean[d]) / out.x_std[d];
      }
      // Targets stay in physical units (MPa / K); y_mean and y_std are
      // recorded for reference only.
      Y[i] = target[order[first + i]];
    }
    return make_dataset(std::move(X), std::move(Y), dim, 1);
  };
  out.data.train = build(0, n_train);
  out.data.test = build(n_train, n_use - n_train);
  return out;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& meta) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  out << "# " << meta << "\n";
  for (int d = 0; d < data.in_dim; ++d) out << (d ? "," : "") << "x" << d;
  for (int d = 0; d < data.out_dim; ++d) out << ",y" << d;
  out << "\n";
  char buf[32];
  for (int i = 0; i < data.n; ++i) {
    for (int d = 0; d < data.in_dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g",
                    data.X[static_cast<size_t>(i) * data.in_dim + d]);
      out << (d ? "," : "") << buf;
    }
    for (int d = 0; d < data.out_dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g",
                    data.Y[static_cast<size_t>(i) * data.out_dim + d]);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_dataset_csv: write failed");
}

Dataset read_dataset_csv(const std::string& path, std::string* meta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.size() < 2 || line[0] != '#') {
    throw std::runtime_error("read_dataset_csv: missing metadata line in " +
                             path);
  }
  if (meta) *meta = trim(line.substr(1));
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_dataset_csv: missing header in " + path);
  }
  int in_dim = 0, out_dim = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = trim(cell);
      if (cell.rfind('x', 0) == 0) ++in_dim;
      if (cell.rfind('y', 0) == 0) ++out_dim;
    }
  }
  if (in_dim < 1 || out_dim < 1) {
    throw std::runtime_error("read_dataset_csv: bad header in " + path);
  }
  std::vector<double> X, Y;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      const double v = std::stod(cell);
      if (col < in_dim) {
        X.push_back(v);
      } else {
        Y.push_back(v);
      }
      ++col;
    }
    if (col != in_dim + out_dim) {
      throw std::runtime_error("read_dataset_csv: ragged row in " + path);
    }
  }
  return make_dataset(std::move(X), std::move(Y), in_dim, out_dim);
}

}  // namespace s2kan
