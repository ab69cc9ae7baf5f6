#include "s2kan/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "s2kan/common.hpp"

namespace s2kan {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::S2kan: return "s2kan";
    case RunMode::Baseline: return "baseline";
    case RunMode::BaselineSymbolify: return "baseline+symbolify";
  }
  return "?";
}

RunMode mode_from_name(const std::string& name) {
  if (name == "s2kan") return RunMode::S2kan;
  if (name == "baseline") return RunMode::Baseline;
  if (name == "baseline+symbolify") return RunMode::BaselineSymbolify;
  throw std::invalid_argument(
      "config: mode must be s2kan, baseline or baseline+symbolify, got '" +
      name + "'");
}

namespace {

// 0 when the task is not a Nguyen problem.
int nguyen_task_id(const std::string& task) {
  const std::string prefix = "nguyen-F";
  if (task.rfind(prefix, 0) != 0) return 0;
  const std::string rest = task.substr(prefix.size());
  if (rest.empty() || rest.size() > 2 ||
      rest.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("config: bad Nguyen task '" + task +
                                "' (expected nguyen-F1 .. nguyen-F10)");
  }
  const int id = std::stoi(rest);
  if (id < 1 || id > 10) {
    throw std::invalid_argument("config: bad Nguyen task '" + task +
                                "' (expected nguyen-F1 .. nguyen-F10)");
  }
  return id;
}

bool known_task(const std::string& task) {
  if (task == "sinc" || task == "synth5" || task == "ikeda" ||
      task == "ecosystem" || task == "concrete" || task == "superconductor") {
    return true;
  }
  return nguyen_task_id(task) > 0;
}

// Reads typed values out of a parsed table and remembers which keys were
// touched so leftovers can be reported as unknown.
struct TomlReader {
  const toml::Table& table;
  std::set<std::string> used;

  const toml::Value* find(const std::string& key) {
    auto it = table.find(key);
    if (it == table.end()) return nullptr;
    used.insert(key);
    return &it->second;
  }

  [[noreturn]] static void type_error(const std::string& key,
                                      const char* want) {
    throw std::invalid_argument("config: key '" + key + "' must be " + want);
  }

  std::string str(const std::string& key, const std::string& def) {
    const toml::Value* v = find(key);
    if (!v) return def;
    if (v->type != toml::Value::Type::String) type_error(key, "a string");
    return v->str;
  }
  double num(const std::string& key, double def) {
    const toml::Value* v = find(key);
    if (!v) return def;
    if (v->type != toml::Value::Type::Number) type_error(key, "a number");
    return v->num;
  }
  long long integer(const std::string& key, long long def) {
    const toml::Value* v = find(key);
    if (!v) return def;
    if (v->type != toml::Value::Type::Number) type_error(key, "a number");
    const double x = v->num;
    if (!std::isfinite(x) || x != std::floor(x) || std::fabs(x) > 9e15) {
      type_error(key, "an integer");
    }
    return static_cast<long long>(x);
  }
  bool flag(const std::string& key, bool def) {
    const toml::Value* v = find(key);
    if (!v) return def;
    if (v->type != toml::Value::Type::Bool) type_error(key, "a boolean");
    return v->boolean;
  }
  bool num_array(const std::string& key, std::vector<double>& out) {
    const toml::Value* v = find(key);
    if (!v) return false;
    if (v->type != toml::Value::Type::NumberArray) {
      type_error(key, "an array of numbers");
    }
    out = v->nums;
    return true;
  }
  bool str_array(const std::string& key, std::vector<std::string>& out) {
    const toml::Value* v = find(key);
    if (!v) return false;
    if (v->type != toml::Value::Type::StringArray &&
        !(v->type == toml::Value::Type::NumberArray && v->nums.empty())) {
      type_error(key, "an array of strings");
    }
    out = v->strs;
    return true;
  }

  void finish() const {
    for (const auto& [key, value] : table) {
      (void)value;
      if (!used.count(key)) {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    }
  }
};

std::string fmt_double(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    return strf("%.1f", v);  // keep a decimal point so round-trips stay typed
  }
  return strf("%.17g", v);
}

void put_str(std::string& out, const char* key, const std::string& v) {
  out += key;
  out += " = ";
  out += toml::escape(v);
  out += "\n";
}
void put_num(std::string& out, const char* key, double v) {
  out += key;
  out += " = ";
  out += fmt_double(v);
  out += "\n";
}
void put_int(std::string& out, const char* key, long long v) {
  out += strf("%s = %lld\n", key, v);
}
void put_bool(std::string& out, const char* key, bool v) {
  out += strf("%s = %s\n", key, v ? "true" : "false");
}

DictionaryConfig spline_only_dict(const DictionaryConfig& like) {
  DictionaryConfig d;
  d.symbolic.clear();
  d.chebyshev_degree = -1;
  d.fourier_modes = 0;
  d.spline = true;
  d.spline_grid = like.spline_grid;
  d.spline_degree = like.spline_degree;
  d.gate_tau = like.gate_tau;
  d.gate_gamma = like.gate_gamma;
  d.gate_zeta = like.gate_zeta;
  return d;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace

void RunConfig::validate() const {
  if (!known_task(task)) {
    throw std::invalid_argument(
        "config: unknown task '" + task +
        "' (sinc, nguyen-F1..F10, synth5, ikeda, ecosystem, concrete, "
        "superconductor)");
  }
  if (shape.empty()) throw std::invalid_argument("config: shape is empty");
  if (n_train <= 0 || n_test <= 0) {
    throw std::invalid_argument("config: n_train and n_test must be positive");
  }
  if (!(sinc_lo < sinc_hi)) {
    throw std::invalid_argument("config: task lo must be below hi");
  }
  if (dyn_points < 10 || dyn_transient < 0) {
    throw std::invalid_argument("config: bad trajectory sizes");
  }
  if (subsample < 0) throw std::invalid_argument("config: subsample < 0");
  if (!(symbolify_threshold > 0.0 && symbolify_threshold <= 1.0)) {
    throw std::invalid_argument("config: symbolify threshold must be in (0,1]");
  }
  dict.validate();
  train.validate();
}

std::vector<int> RunConfig::resolved_grid_updates() const {
  if (grid_updates_default) return default_grid_schedule(train.epochs);
  return train.grid_update_epochs;
}

RunConfig config_from_toml(const toml::Table& table) {
  TomlReader r{table, {}};
  RunConfig cfg;

  cfg.preset = r.str("preset", "");
  cfg.task = r.str("task", cfg.task);
  cfg.mode = mode_from_name(r.str("mode", "s2kan"));
  cfg.shape = r.str("shape", cfg.shape);
  cfg.seed_set = table.count("seed") > 0;
  cfg.seed = static_cast<std::uint64_t>(r.integer("seed", 0));
  cfg.out_dir = r.str("out_dir", "");
  cfg.data_path = r.str("data_path", "");

  cfg.n_train = static_cast<int>(r.integer("task.n_train", cfg.n_train));
  cfg.n_test = static_cast<int>(r.integer("task.n_test", cfg.n_test));
  cfg.sinc_lo = r.num("task.lo", cfg.sinc_lo);
  cfg.sinc_hi = r.num("task.hi", cfg.sinc_hi);
  cfg.dyn_points = static_cast<int>(r.integer("task.points", cfg.dyn_points));
  cfg.dyn_transient =
      static_cast<int>(r.integer("task.transient", cfg.dyn_transient));
  cfg.subsample = static_cast<int>(r.integer("task.subsample", cfg.subsample));

  std::vector<std::string> prim_names;
  if (r.str_array("dictionary.symbolic", prim_names)) {
    cfg.dict.symbolic.clear();
    for (const auto& nm : prim_names) {
      auto p = primitive_from_name(nm);
      if (!p) {
        throw std::invalid_argument("config: unknown primitive '" + nm +
                                    "' in dictionary.symbolic");
      }
      cfg.dict.symbolic.push_back(*p);
    }
  }
  cfg.dict.chebyshev_degree = static_cast<int>(
      r.integer("dictionary.chebyshev_degree", cfg.dict.chebyshev_degree));
  cfg.dict.fourier_modes = static_cast<int>(
      r.integer("dictionary.fourier_modes", cfg.dict.fourier_modes));
  cfg.dict.spline = r.flag("dictionary.spline", cfg.dict.spline);
  cfg.dict.spline_grid = static_cast<int>(
      r.integer("dictionary.spline_grid", cfg.dict.spline_grid));
  cfg.dict.spline_degree = static_cast<int>(
      r.integer("dictionary.spline_degree", cfg.dict.spline_degree));
  cfg.dict.gate_tau = r.num("dictionary.gate_tau", cfg.dict.gate_tau);
  cfg.dict.gate_gamma = r.num("dictionary.gate_gamma", cfg.dict.gate_gamma);
  cfg.dict.gate_zeta = r.num("dictionary.gate_zeta", cfg.dict.gate_zeta);
  r.num_array("dictionary.complexity_weights", cfg.dict.complexity_weights);

  cfg.train.beta = r.num("train.beta", cfg.train.beta);
  cfg.train.epochs =
      static_cast<int>(r.integer("train.epochs", cfg.train.epochs));
  cfg.train.batch_size =
      static_cast<int>(r.integer("train.batch_size", cfg.train.batch_size));
  cfg.train.warmup_epochs = static_cast<int>(
      r.integer("train.warmup_epochs", cfg.train.warmup_epochs));
  cfg.train.learning_rate =
      r.num("train.learning_rate", cfg.train.learning_rate);
  cfg.train.adam_beta1 = r.num("train.adam_beta1", cfg.train.adam_beta1);
  cfg.train.adam_beta2 = r.num("train.adam_beta2", cfg.train.adam_beta2);
  cfg.train.adam_eps = r.num("train.adam_eps", cfg.train.adam_eps);
  std::vector<double> grid;
  if (r.num_array("train.grid_updates", grid)) {
    cfg.grid_updates_default = false;
    cfg.train.grid_update_epochs.clear();
    for (double g : grid) {
      if (g != std::floor(g) || g < 0) {
        throw std::invalid_argument(
            "config: train.grid_updates must hold non-negative integers");
      }
      cfg.train.grid_update_epochs.push_back(static_cast<int>(g));
    }
    std::sort(cfg.train.grid_update_epochs.begin(),
              cfg.train.grid_update_epochs.end());
    cfg.train.grid_update_epochs.erase(
        std::unique(cfg.train.grid_update_epochs.begin(),
                    cfg.train.grid_update_epochs.end()),
        cfg.train.grid_update_epochs.end());
  }
  cfg.train.early_stop = r.flag("train.early_stop", cfg.train.early_stop);
  cfg.train.decisiveness_threshold = r.num("train.decisiveness_threshold",
                                           cfg.train.decisiveness_threshold);
  cfg.train.patience =
      static_cast<int>(r.integer("train.patience", cfg.train.patience));

  cfg.symbolify_threshold =
      r.num("symbolify.threshold", cfg.symbolify_threshold);

  r.finish();
  cfg.train.seed = cfg.seed + 2;  // dataset uses seed, init seed+1
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return config_from_toml(toml::parse_file(path));
}

std::string config_to_toml(const RunConfig& cfg) {
  const int nguyen = nguyen_task_id(cfg.task);
  const bool dynamical = cfg.task == "ikeda" || cfg.task == "ecosystem";
  const bool tabular = cfg.task == "concrete" || cfg.task == "superconductor";

  std::string out;
  if (!cfg.preset.empty()) put_str(out, "preset", cfg.preset);
  put_str(out, "task", cfg.task);
  put_str(out, "mode", mode_name(cfg.mode));
  put_str(out, "shape", cfg.shape);
  put_int(out, "seed", static_cast<long long>(cfg.seed));
  if (!cfg.out_dir.empty()) put_str(out, "out_dir", cfg.out_dir);
  if (!cfg.data_path.empty()) put_str(out, "data_path", cfg.data_path);

  if (!dynamical && !tabular) {
    out += "\n[task]\n";
    put_int(out, "n_train", cfg.n_train);
    put_int(out, "n_test", cfg.n_test);
    if (cfg.task == "sinc") {
      put_num(out, "lo", cfg.sinc_lo);
      put_num(out, "hi", cfg.sinc_hi);
    }
  } else if (dynamical) {
    out += "\n[task]\n";
    put_int(out, "points", cfg.dyn_points);
    put_int(out, "transient", cfg.dyn_transient);
  } else {
    out += "\n[task]\n";
    put_int(out, "subsample", cfg.subsample);
  }
  (void)nguyen;

  out += "\n[dictionary]\n";
  out += "symbolic = [";
  for (size_t i = 0; i < cfg.dict.symbolic.size(); ++i) {
    out += (i ? ", " : "");
    out += toml::escape(primitive_name(cfg.dict.symbolic[i]));
  }
  out += "]\n";
  put_int(out, "chebyshev_degree", cfg.dict.chebyshev_degree);
  put_int(out, "fourier_modes", cfg.dict.fourier_modes);
  put_bool(out, "spline", cfg.dict.spline);
  put_int(out, "spline_grid", cfg.dict.spline_grid);
  put_int(out, "spline_degree", cfg.dict.spline_degree);
  put_num(out, "gate_tau", cfg.dict.gate_tau);
  put_num(out, "gate_gamma", cfg.dict.gate_gamma);
  put_num(out, "gate_zeta", cfg.dict.gate_zeta);
  if (!cfg.dict.complexity_weights.empty()) {
    out += "complexity_weights = [";
    for (size_t i = 0; i < cfg.dict.complexity_weights.size(); ++i) {
      out += (i ? ", " : "");
      out += fmt_double(cfg.dict.complexity_weights[i]);
    }
    out += "]\n";
  }

  out += "\n[train]\n";
  put_num(out, "beta", cfg.train.beta);
  put_int(out, "epochs", cfg.train.epochs);
  put_int(out, "batch_size", cfg.train.batch_size);
  put_int(out, "warmup_epochs", cfg.train.warmup_epochs);
  put_num(out, "learning_rate", cfg.train.learning_rate);
  const std::vector<int> grid = cfg.resolved_grid_updates();
  out += "grid_updates = [";
  for (size_t i = 0; i < grid.size(); ++i) {
    out += (i ? ", " : "");
    out += strf("%d", grid[i]);
  }
  out += "]\n";
  put_bool(out, "early_stop", cfg.train.early_stop);
  put_num(out, "decisiveness_threshold", cfg.train.decisiveness_threshold);
  put_int(out, "patience", cfg.train.patience);

  out += "\n[symbolify]\n";
  put_num(out, "threshold", cfg.symbolify_threshold);
  return out;
}

// --- Presets --------------------------------------------------------------

namespace {

struct PresetDef {
  std::string name;
  std::string desc;
  RunConfig cfg;
};

const std::vector<PresetDef>& preset_table() {
  static const std::vector<PresetDef> defs = [] {
    std::vector<PresetDef> v;
    auto add = [&v](std::string name, std::string desc, RunConfig cfg) {
      cfg.preset = name;
      v.push_back({std::move(name), std::move(desc), std::move(cfg)});
    };

    {  // sinc, shape [1,(0,1)]: one product node, no hidden layer
      RunConfig c;
      c.task = "sinc";
      c.shape = "[1,(0,1)]";
      c.train.epochs = 2000;
      c.train.batch_size = 32;
      c.train.warmup_epochs = 100;
      c.train.early_stop = false;
      RunConfig b = c;
      b.mode = RunMode::Baseline;
      b.dict = spline_only_dict(b.dict);
      add("sinc-baseline", "sinc(x) on [1,15], dense spline baseline", b);
      c.dict.symbolic = {Primitive::Reciprocal};
      c.dict.chebyshev_degree = 6;
      c.dict.fourier_modes = 4;
      c.train.beta = 1.0;
      add("sinc-s2kan", "sinc(x) on [1,15], gated dictionary, beta=1", c);
    }

    for (int id = 1; id <= 10; ++id) {  // Nguyen F1..F10
      const int d = nguyen_input_dim(id);
      const struct {
        const char* tag;
        const char* blurb;
        std::string shape;
      } shapes[] = {
          {"S", "no hidden layer", strf("[%d,1]", d)},
          {"L", "one hidden layer", strf("[%d,3,1]", d)},
          {"LM", "hidden layer with a product node", strf("[%d,(3,1),1]", d)},
      };
      for (const auto& sh : shapes) {
        for (double beta : {-1.0, 0.1, 1.0, 10.0}) {  // -1 marks baseline
          RunConfig c;
          c.task = strf("nguyen-F%d", id);
          c.shape = sh.shape;
          c.train.epochs = 10000;
          c.train.batch_size = 128;
          c.train.warmup_epochs = 200;
          c.train.early_stop = true;
          std::string name = strf("nguyen-F%d-%s-", id, sh.tag);
          if (beta < 0) {
            c.mode = RunMode::Baseline;
            c.dict = spline_only_dict(c.dict);
            name += "baseline";
          } else {
            c.dict.symbolic = {Primitive::One, Primitive::Identity,
                               Primitive::Square, Primitive::Sin,
                               Primitive::Cos};
            c.dict.chebyshev_degree = 11;
            c.dict.fourier_modes = 6;
            c.train.beta = beta;
            name += strf("beta%g", beta);
          }
          add(name,
              strf("Nguyen F%d, %s, %s", id, sh.blurb,
                   beta < 0 ? "spline baseline" : strf("beta=%g", beta).c_str()),
              c);
        }
      }
    }

    {  // Ikeda map
      RunConfig c;
      c.task = "ikeda";
      c.shape = "[2,4,4,4,2]";
      c.dict.symbolic = {Primitive::Sqrt, Primitive::Bell};
      c.dict.chebyshev_degree = 4;
      c.dict.fourier_modes = 4;
      c.train.batch_size = 128;
      c.train.warmup_epochs = 200;
      c.train.early_stop = false;
      c.grid_updates_default = false;  // no grid updates on dynamical systems
      RunConfig b = c;
      b.mode = RunMode::Baseline;
      b.dict = spline_only_dict(b.dict);
      b.train.epochs = 4000;
      add("ikeda-baseline", "Ikeda map one-step, spline baseline, 4k epochs",
          b);
      c.train.beta = 0.1;
      c.train.epochs = 4000;
      add("ikeda-beta0.1", "Ikeda map one-step, beta=0.1, 4k epochs", c);
      c.train.beta = 0.0;
      c.train.epochs = 20000;
      add("ikeda-beta0", "Ikeda map one-step, unregularized, 20k epochs", c);
    }

    {  // three-species ecosystem flow
      RunConfig c;
      c.task = "ecosystem";
      c.shape = "[3,3,3,3]";
      c.dict.symbolic = {Primitive::One, Primitive::Identity,
                         Primitive::Square, Primitive::ReciprocalShifted};
      c.dict.chebyshev_degree = 4;
      c.dict.fourier_modes = 4;
      c.train.batch_size = 128;
      c.train.warmup_epochs = 200;
      c.train.early_stop = false;
      c.grid_updates_default = false;
      RunConfig b = c;
      b.mode = RunMode::Baseline;
      b.dict = spline_only_dict(b.dict);
      b.train.epochs = 10000;
      add("ecosystem-baseline",
          "ecosystem vector field, spline baseline, 10k epochs", b);
      c.train.beta = 0.1;
      c.train.epochs = 10000;
      add("ecosystem-beta0.1", "ecosystem vector field, beta=0.1, 10k epochs",
          c);
      c.train.beta = 0.0;
      c.train.epochs = 15000;
      add("ecosystem-beta0",
          "ecosystem vector field, unregularized, 15k epochs", c);
    }

    const auto tabular_dict = [](bool superconductor) {
      DictionaryConfig d;
      d.symbolic = {Primitive::One, Primitive::Identity, Primitive::Square,
                    Primitive::Sqrt, Primitive::Log1p};
      if (superconductor) {
        d.symbolic.insert(d.symbolic.begin() + 3, Primitive::Cube);
        d.symbolic.push_back(Primitive::Exp);
      }
      d.chebyshev_degree = -1;
      d.fourier_modes = 2;
      return d;
    };
    const auto tabular_train = [](RunConfig& c) {
      c.train.epochs = 5000;
      c.train.batch_size = 64;
      c.train.warmup_epochs = 500;
      c.train.early_stop = false;
    };

    {  // concrete compressive strength (needs --data)
      RunConfig c;
      c.task = "concrete";
      c.shape = "[13,32,1]";
      c.dict = tabular_dict(false);
      tabular_train(c);
      RunConfig b = c;
      b.mode = RunMode::Baseline;
      b.dict = spline_only_dict(b.dict);
      add("concrete-baseline",
          "concrete strength, spline baseline (needs --data)", b);
      for (double beta : {0.1, 0.5}) {
        c.train.beta = beta;
        add(strf("concrete-beta%g", beta),
            strf("concrete strength, beta=%g (needs --data)", beta), c);
      }
    }

    {  // superconductor critical temperature (needs --data)
      RunConfig c;
      c.task = "superconductor";
      c.shape = "[5,5,1]";
      c.subsample = 2000;  // 1000 train / 1000 test
      c.dict = tabular_dict(true);
      tabular_train(c);
      RunConfig b = c;
      b.mode = RunMode::Baseline;
      b.dict = spline_only_dict(b.dict);
      add("superconductor-baseline",
          "superconductor Tc, spline baseline (needs --data)", b);
      for (double beta : {0.1, 0.5}) {
        c.train.beta = beta;
        add(strf("superconductor-beta%g", beta),
            strf("superconductor Tc, beta=%g (needs --data)", beta), c);
      }
    }

    {  // gate-dynamics diagnostics: beta=0.5, early stopping on
      const struct {
        const char* name;
        const char* task;
        const char* shape;
        const char* desc;
      } rows[] = {
          {"gate-dynamics-shallow", "superconductor", "[5,5,1]",
           "gate statistics, shallow net on superconductor (needs --data)"},
          {"gate-dynamics-deep", "superconductor", "[5,5,5,1]",
           "gate statistics, deep net on superconductor (needs --data)"},
          {"gate-dynamics-shallow-synth", "synth5", "[5,5,1]",
           "gate statistics, shallow net on the synthetic surrogate"},
          {"gate-dynamics-deep-synth", "synth5", "[5,5,5,1]",
           "gate statistics, deep net on the synthetic surrogate"},
      };
      for (const auto& row : rows) {
        RunConfig c;
        c.task = row.task;
        c.shape = row.shape;
        if (c.task == "superconductor") c.subsample = 2000;
        c.dict = tabular_dict(true);
        tabular_train(c);
        c.train.early_stop = true;
        c.train.beta = 0.5;
        add(row.name, row.desc, c);
      }
    }

    return v;
  }();
  return defs;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> list_presets() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& def : preset_table()) out.emplace_back(def.name, def.desc);
  return out;
}

RunConfig preset_config(const std::string& name) {
  for (const auto& def : preset_table()) {
    if (def.name == name) {
      RunConfig cfg = def.cfg;
      cfg.train.seed = cfg.seed + 2;
      return cfg;
    }
  }
  throw std::invalid_argument("unknown preset '" + name +
                              "' (see list-presets)");
}

// --- Data dispatch --------------------------------------------------------

std::vector<std::string> state_labels(const std::string& task) {
  if (task == "ikeda") return {"x", "y"};
  if (task == "ecosystem") return {"N", "P", "Q"};
  return {};
}

TaskData make_task_data(const RunConfig& cfg) {
  TaskData td;
  const std::string& t = cfg.task;
  const unsigned long long seed = cfg.seed;
  if (t == "sinc") {
    td.split = gen_sinc({cfg.n_train, cfg.n_test, cfg.sinc_lo, cfg.sinc_hi,
                         cfg.seed});
    td.meta = strf("task=sinc n_train=%d n_test=%d lo=%.17g hi=%.17g seed=%llu",
                   cfg.n_train, cfg.n_test, cfg.sinc_lo, cfg.sinc_hi, seed);
  } else if (int id = nguyen_task_id(t); id > 0) {
    td.split = gen_nguyen({id, cfg.n_train, cfg.n_test, cfg.seed});
    td.meta = strf("task=nguyen-F%d n_train=%d n_test=%d seed=%llu", id,
                   cfg.n_train, cfg.n_test, seed);
  } else if (t == "synth5") {
    td.split = gen_synth5({cfg.n_train, cfg.n_test, cfg.seed});
    td.meta = strf("task=synth5 n_train=%d n_test=%d seed=%llu", cfg.n_train,
                   cfg.n_test, seed);
  } else if (t == "ikeda") {
    IkedaConfig ic;
    ic.n_points = cfg.dyn_points;
    ic.transient = cfg.dyn_transient;
    td.traj = gen_ikeda(ic);
    td.split = td.traj.data;
    td.has_trajectory = true;
    td.meta = strf("task=ikeda points=%d transient=%d", cfg.dyn_points,
                   cfg.dyn_transient);
  } else if (t == "ecosystem") {
    EcosystemConfig ec;
    ec.n_points = cfg.dyn_points;
    ec.transient = cfg.dyn_transient;
    td.traj = gen_ecosystem(ec);
    td.split = td.traj.data;
    td.has_trajectory = true;
    td.meta = strf("task=ecosystem points=%d transient=%d", cfg.dyn_points,
                   cfg.dyn_transient);
  } else if (t == "concrete" || t == "superconductor") {
    if (cfg.data_path.empty()) {
      throw std::invalid_argument(
          "task '" + t +
          "' needs a dataset CSV (--data or data_path in the config)");
    }
    TabularConfig tc;
    tc.task =
        t == "concrete" ? TabularTask::Concrete : TabularTask::Superconductor;
    tc.csv_path = cfg.data_path;
    tc.seed = cfg.seed;
    tc.subsample = cfg.subsample;
    TabularData tab = load_tabular(tc);
    td.split = std::move(tab.data);
    td.y_mean = tab.y_mean;
    td.y_std = tab.y_std;
    td.meta = strf("task=%s subsample=%d seed=%llu", t.c_str(), cfg.subsample,
                   seed);
  } else {
    throw std::invalid_argument("config: unknown task '" + t + "'");
  }
  return td;
}

// --- Training driver ------------------------------------------------------

RunOutput run_train(RunConfig cfg, Network* net_out) {
  if (!cfg.seed_set) {
    throw std::invalid_argument(
        "config: seed is required (set seed = N in the config or pass "
        "--seed)");
  }
  if (cfg.mode != RunMode::S2kan) {
    if (!cfg.dict.spline) {
      throw std::invalid_argument(
          "config: baseline mode needs the spline term enabled");
    }
    cfg.dict = spline_only_dict(cfg.dict);
    cfg.train.beta = 0.0;
  }
  cfg.train.seed = cfg.seed + 2;
  cfg.train.grid_update_epochs = cfg.resolved_grid_updates();
  cfg.grid_updates_default = false;
  cfg.validate();

  RunOutput ro;
  if (cfg.out_dir.empty()) {
    std::string stem = cfg.preset.empty()
                           ? cfg.task + "-" + mode_name(cfg.mode)
                           : cfg.preset;
    std::replace(stem.begin(), stem.end(), '+', '-');
    cfg.out_dir = strf("runs/%s-seed%llu", stem.c_str(),
                       static_cast<unsigned long long>(cfg.seed));
  }
  ro.run_dir = cfg.out_dir;
  fs::create_directories(ro.run_dir);

  TaskData data = make_task_data(cfg);
  const Dataset& dtrain = data.split.train;
  const Dataset& dtest = data.split.test;

  NetworkSpec spec = parse_shape(cfg.shape, cfg.dict);
  if (spec.input_dim != dtrain.in_dim || spec.output_dim() != dtrain.out_dim) {
    throw std::invalid_argument(strf(
        "config: shape %s maps %d -> %d but task %s provides %d -> %d",
        cfg.shape.c_str(), spec.input_dim, spec.output_dim(),
        cfg.task.c_str(), dtrain.in_dim, dtrain.out_dim));
  }

  write_text(ro.run_dir + "/config.toml", config_to_toml(cfg));
  write_dataset_csv(ro.run_dir + "/train.csv", dtrain,
                    data.meta + " split=train");
  write_dataset_csv(ro.run_dir + "/test.csv", dtest, data.meta + " split=test");

  std::mt19937_64 init_rng(cfg.seed + 1);
  Network net =
      init_network(spec, init_rng, /*gates_fixed_open=*/cfg.mode != RunMode::S2kan);

  ro.result = train(net, dtrain, cfg.train);
  write_history_csv(ro.run_dir + "/history.csv", ro.result.history);
  serialize(net, ro.run_dir + "/checkpoint.json");
  ro.train_metrics = evaluate(net, dtrain);
  ro.test_metrics = evaluate(net, dtest);
  ro.summary = active_summary(net);
  write_text(ro.run_dir + "/expression.txt", extract_expression(net) + "\n");

  if (cfg.mode == RunMode::BaselineSymbolify) {
    ro.symbolify_report = symbolify_network(net, cfg.symbolify_threshold);
    ro.symbolified = true;
    ro.symbolified_test = evaluate(net, dtest);
    serialize(net, ro.run_dir + "/checkpoint_symbolified.json");
    write_text(ro.run_dir + "/expression_symbolified.txt",
               extract_expression(net) + "\n");
  }
  write_text(ro.run_dir + "/metrics.json", metrics_to_json(cfg, ro));
  if (net_out) *net_out = std::move(net);
  return ro;
}

EvalMetrics eval_checkpoint(const std::string& checkpoint_path,
                            const std::string& dataset_csv) {
  Network net = deserialize(checkpoint_path);
  Dataset data = read_dataset_csv(dataset_csv);
  return evaluate(net, data);
}

std::string metrics_to_json(const RunConfig& cfg, const RunOutput& out) {
  const auto metric_block = [](const EvalMetrics& m) {
    return ordered_json{
        {"n", m.n}, {"mse", m.mse}, {"rmse", m.rmse}, {"r2", m.r2}};
  };
  ordered_json j;
  j["run"] = cfg.preset.empty() ? cfg.task : cfg.preset;
  j["task"] = cfg.task;
  j["mode"] = mode_name(cfg.mode);
  j["shape"] = cfg.shape;
  j["seed"] = cfg.seed;
  j["beta"] = cfg.train.beta;
  j["train"] = metric_block(out.train_metrics);
  j["test"] = metric_block(out.test_metrics);
  j["model"] = ordered_json{{"total_edges", out.summary.total_edges},
                            {"active_functions", out.summary.active_functions},
                            {"active_terms", out.summary.active_terms},
                            {"k_active", out.summary.k_active},
                            {"k_expected", out.summary.k_expected},
                            {"percent_symbolic", out.summary.percent_symbolic}};
  j["training"] = ordered_json{{"epochs_run", out.result.epochs_run},
                               {"early_stopped", out.result.early_stopped},
                               {"final_train_mse", out.result.final_mse}};
  if (out.symbolified) {
    j["symbolified"] =
        ordered_json{{"threshold", cfg.symbolify_threshold},
                     {"replaced", out.symbolify_report.replaced},
                     {"kept_dense", out.symbolify_report.kept_dense},
                     {"test", metric_block(out.symbolified_test)}};
  }
  return j.dump(2) + "\n";
}

}  // namespace s2kan
