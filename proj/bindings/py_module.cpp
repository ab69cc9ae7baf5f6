// pybind11 surface: network construction, training, evaluation,
// symbolification and the benchmark generators, enough to drive the library
// from python without the CLI.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <random>
#include <stdexcept>

#include "s2kan/benchmarks.hpp"
#include "s2kan/gates.hpp"
#include "s2kan/runner.hpp"
#include "s2kan/symbolify.hpp"

namespace py = pybind11;
using namespace s2kan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Dataset to_dataset(const Array& X, const Array& Y) {
  if (X.ndim() < 1 || X.ndim() > 2 || Y.ndim() < 1 || Y.ndim() > 2) {
    throw std::invalid_argument("X and Y must be 1-d or 2-d arrays");
  }
  Dataset d;
  d.n = static_cast<int>(X.shape(0));
  d.in_dim = X.ndim() == 2 ? static_cast<int>(X.shape(1)) : 1;
  d.out_dim = Y.ndim() == 2 ? static_cast<int>(Y.shape(1)) : 1;
  d.X.assign(X.data(), X.data() + X.size());
  d.Y.assign(Y.data(), Y.data() + Y.size());
  d.validate();
  return d;
}

py::array dataset_x(const Dataset& d) {
  Array a({static_cast<py::ssize_t>(d.n), static_cast<py::ssize_t>(d.in_dim)});
  std::memcpy(a.mutable_data(), d.X.data(), d.X.size() * sizeof(double));
  return a;
}
py::array dataset_y(const Dataset& d) {
  Array a({static_cast<py::ssize_t>(d.n), static_cast<py::ssize_t>(d.out_dim)});
  std::memcpy(a.mutable_data(), d.Y.data(), d.Y.size() * sizeof(double));
  return a;
}

py::dict split_dict(const SplitDataset& s) {
  py::dict d;
  d["x_train"] = dataset_x(s.train);
  d["y_train"] = dataset_y(s.train);
  d["x_test"] = dataset_x(s.test);
  d["y_test"] = dataset_y(s.test);
  return d;
}

Primitive prim_from(const std::string& name) {
  auto p = primitive_from_name(name);
  if (!p) throw std::invalid_argument("unknown primitive '" + name + "'");
  return *p;
}

std::vector<Primitive> prims_from(const std::vector<std::string>& names) {
  std::vector<Primitive> out;
  for (const auto& n : names) out.push_back(prim_from(n));
  return out;
}

py::dict metrics_dict(const EvalMetrics& m) {
  py::dict d;
  d["n"] = m.n;
  d["mse"] = m.mse;
  d["rmse"] = m.rmse;
  d["r2"] = m.r2;
  return d;
}

py::dict summary_dict(const ModelSummary& s) {
  py::dict d;
  d["total_edges"] = s.total_edges;
  d["active_functions"] = s.active_functions;
  d["active_terms"] = s.active_terms;
  d["k_active"] = s.k_active;
  d["k_expected"] = s.k_expected;
  d["percent_symbolic"] = s.percent_symbolic;
  d["gate_probs"] = s.gate_probs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "gated activation-dictionary KAN core";

  // --- primitives and gates ----------------------------------------------
  m.def(
      "eval_symbolic",
      [](const std::string& prim, double x, bool protect) {
        ValueDeriv vd = eval_symbolic(prim_from(prim), x, protect);
        return py::make_tuple(vd.value, vd.deriv);
      },
      py::arg("primitive"), py::arg("x"), py::arg("protect") = true,
      "evaluate one symbolic primitive, returning (value, derivative)");
  m.def("primitive_names", [] {
    std::vector<std::string> names;
    for (int i = 0; i < kPrimitiveCount; ++i) {
      names.push_back(primitive_name(static_cast<Primitive>(i)));
    }
    return names;
  });

  m.def(
      "sample_gate",
      [](double alpha, double u, double tau, double gamma, double zeta) {
        GateSample s = sample_gate({alpha, tau, gamma, zeta}, u);
        return py::make_tuple(s.z, s.dz_dalpha);
      },
      py::arg("alpha"), py::arg("u"), py::arg("tau") = 2.0 / 3.0,
      py::arg("gamma") = -0.1, py::arg("zeta") = 1.1);
  m.def(
      "expected_gate",
      [](double alpha, double tau, double gamma, double zeta) {
        return expected_gate({alpha, tau, gamma, zeta});
      },
      py::arg("alpha"), py::arg("tau") = 2.0 / 3.0, py::arg("gamma") = -0.1,
      py::arg("zeta") = 1.1);
  m.def(
      "threshold_gate",
      [](double alpha, double tau, double gamma, double zeta) {
        return threshold_gate({alpha, tau, gamma, zeta});
      },
      py::arg("alpha"), py::arg("tau") = 2.0 / 3.0, py::arg("gamma") = -0.1,
      py::arg("zeta") = 1.1);
  m.def(
      "gate_threshold_alpha",
      [](double tau, double gamma, double zeta) {
        return gate_threshold_alpha({0.0, tau, gamma, zeta});
      },
      py::arg("tau") = 2.0 / 3.0, py::arg("gamma") = -0.1,
      py::arg("zeta") = 1.1);

  // --- network -------------------------------------------------------------
  py::class_<Network>(m, "Network")
      .def_property_readonly("shape",
                             [](const Network& n) { return format_shape(n.spec); })
      .def_property_readonly(
          "fixed_open", [](const Network& n) { return n.gates_fixed_open; })
      .def("forward",
           [](Network& net, const Array& X) {
             if (X.ndim() != 2 ||
                 static_cast<int>(X.shape(1)) != net.spec.input_dim) {
               throw std::invalid_argument("X must be (n, input_dim)");
             }
             const int n = static_cast<int>(X.shape(0));
             Tape tape;
             forward(net, X.data(), n, tape);
             Array out({static_cast<py::ssize_t>(n),
                        static_cast<py::ssize_t>(net.spec.output_dim())});
             std::memcpy(out.mutable_data(), tape.outputs(),
                         static_cast<size_t>(n) * net.spec.output_dim() *
                             sizeof(double));
             return out;
           })
      .def("summary", [](const Network& n) { return summary_dict(active_summary(n)); })
      .def("expression", [](const Network& n) { return extract_expression(n); })
      .def("to_json", [](const Network& n) { return serialize_to_string(n); })
      .def("save", [](const Network& n, const std::string& path) {
        serialize(n, path);
      });

  m.def(
      "build_network",
      [](const std::string& shape, const std::vector<std::string>& symbolic,
         int chebyshev_degree, int fourier_modes, bool spline, int spline_grid,
         int spline_degree, std::uint64_t seed, bool fixed_open) {
        DictionaryConfig dict;
        dict.symbolic = prims_from(symbolic);
        dict.chebyshev_degree = chebyshev_degree;
        dict.fourier_modes = fourier_modes;
        dict.spline = spline;
        dict.spline_grid = spline_grid;
        dict.spline_degree = spline_degree;
        NetworkSpec spec = parse_shape(shape, dict);
        std::mt19937_64 rng(seed);
        return init_network(spec, rng, fixed_open);
      },
      py::arg("shape"), py::arg("symbolic") = std::vector<std::string>{},
      py::arg("chebyshev_degree") = -1, py::arg("fourier_modes") = 0,
      py::arg("spline") = true, py::arg("spline_grid") = 10,
      py::arg("spline_degree") = 3, py::arg("seed") = 0,
      py::arg("fixed_open") = false);
  m.def("load_network", [](const std::string& path) { return deserialize(path); });
  m.def("network_from_json",
        [](const std::string& text) { return deserialize_from_string(text); });

  m.def(
      "train_network",
      [](Network& net, const Array& X, const Array& Y, double beta, int epochs,
         int batch_size, int warmup_epochs, double learning_rate,
         std::uint64_t seed, bool early_stop,
         std::optional<std::vector<int>> grid_updates) {
        Dataset data = to_dataset(X, Y);
        TrainConfig cfg;
        cfg.beta = beta;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.warmup_epochs = warmup_epochs;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        cfg.early_stop = early_stop;
        cfg.grid_update_epochs =
            grid_updates ? *grid_updates : default_grid_schedule(epochs);
        TrainResult res = train(net, data, cfg);
        py::dict out;
        out["final_mse"] = res.final_mse;
        out["epochs_run"] = res.epochs_run;
        out["early_stopped"] = res.early_stopped;
        std::vector<double> mse, k, entropy, decisiveness;
        for (const auto& rec : res.history) {
          mse.push_back(rec.mse_train);
          k.push_back(rec.k);
          entropy.push_back(rec.entropy_bits);
          decisiveness.push_back(rec.decisiveness);
        }
        out["mse"] = mse;
        out["k"] = k;
        out["entropy_bits"] = entropy;
        out["decisiveness"] = decisiveness;
        return out;
      },
      py::arg("net"), py::arg("X"), py::arg("Y"), py::arg("beta") = 0.0,
      py::arg("epochs") = 100, py::arg("batch_size") = 128,
      py::arg("warmup_epochs") = 0, py::arg("learning_rate") = 1e-3,
      py::arg("seed") = 0, py::arg("early_stop") = false,
      py::arg("grid_updates") = py::none());

  m.def("evaluate", [](Network& net, const Array& X, const Array& Y) {
    Dataset d = to_dataset(X, Y);
    return metrics_dict(evaluate(net, d));
  });

  m.def(
      "symbolify",
      [](Network& net, double threshold, const std::vector<std::string>& library) {
        SymbolifyReport rep =
            symbolify_network(net, threshold, prims_from(library));
        py::dict d;
        d["replaced"] = rep.replaced;
        d["kept_dense"] = rep.kept_dense;
        py::list edges;
        for (const auto& e : rep.edges) {
          py::dict ed;
          ed["layer"] = e.layer;
          ed["input"] = e.input;
          ed["slot"] = e.slot;
          ed["replaced"] = e.replaced;
          ed["best_r2"] = e.best_r2;
          if (e.replaced) {
            ed["primitive"] = primitive_name(e.fit.prim);
            ed["a"] = e.fit.a;
            ed["b"] = e.fit.b;
            ed["c"] = e.fit.c;
            ed["d"] = e.fit.d;
            ed["r2"] = e.fit.r2;
          }
          edges.append(ed);
        }
        d["edges"] = edges;
        return d;
      },
      py::arg("net"), py::arg("threshold") = 0.95,
      py::arg("library") = std::vector<std::string>{});

  m.def(
      "fit_candidate",
      [](const Array& x, const Array& y, const std::string& prim) {
        std::vector<double> xs(x.data(), x.data() + x.size());
        std::vector<double> ys(y.data(), y.data() + y.size());
        CandidateFit f = fit_candidate(xs, ys, prim_from(prim));
        py::dict d;
        d["a"] = f.a;
        d["b"] = f.b;
        d["c"] = f.c;
        d["d"] = f.d;
        d["r2"] = f.r2;
        d["score"] = f.score;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("primitive"));

  // --- benchmark data ------------------------------------------------------
  m.def(
      "gen_sinc",
      [](int n_train, int n_test, double lo, double hi, std::uint64_t seed) {
        return split_dict(gen_sinc({n_train, n_test, lo, hi, seed}));
      },
      py::arg("n_train") = 1024, py::arg("n_test") = 256, py::arg("lo") = 1.0,
      py::arg("hi") = 15.0, py::arg("seed") = 0);
  m.def(
      "gen_nguyen",
      [](int id, int n_train, int n_test, std::uint64_t seed) {
        return split_dict(gen_nguyen({id, n_train, n_test, seed}));
      },
      py::arg("id"), py::arg("n_train") = 1024, py::arg("n_test") = 256,
      py::arg("seed") = 0);
  m.def(
      "gen_ikeda",
      [](int n_points, int transient) {
        IkedaConfig cfg;
        cfg.n_points = n_points;
        cfg.transient = transient;
        TrajectoryData t = gen_ikeda(cfg);
        py::dict d = split_dict(t.data);
        Array traj({static_cast<py::ssize_t>(t.n_states),
                    static_cast<py::ssize_t>(t.dim)});
        std::memcpy(traj.mutable_data(), t.trajectory.data(),
                    t.trajectory.size() * sizeof(double));
        d["trajectory"] = traj;
        d["test_start"] = t.test_start;
        return d;
      },
      py::arg("n_points") = 10000, py::arg("transient") = 1000);
  m.def(
      "ikeda_step",
      [](double x, double y, double mu) {
        auto s = ikeda_step(x, y, mu);
        return py::make_tuple(s[0], s[1]);
      },
      py::arg("x"), py::arg("y"), py::arg("mu") = 0.9);

  m.def(
      "multistep_forecast",
      [](Network& net, const Array& initial, const Array& reference,
         const std::string& system, int horizon, double dt) {
        DynamicalSystem sys;
        if (system == "ikeda") {
          sys = DynamicalSystem::Ikeda;
        } else if (system == "ecosystem") {
          sys = DynamicalSystem::Ecosystem;
        } else {
          throw std::invalid_argument("system must be ikeda or ecosystem");
        }
        const int dim = static_cast<int>(initial.size());
        if (reference.size() < static_cast<py::ssize_t>(horizon + 1) * dim) {
          throw std::invalid_argument("reference needs horizon+1 states");
        }
        ForecastResult res = multistep_forecast(net, initial.data(),
                                                reference.data(),
                                                {sys, horizon, dt});
        py::dict d;
        d["rmse"] = res.rmse;
        d["steps"] = res.steps;
        d["diverged"] = res.diverged;
        Array preds({static_cast<py::ssize_t>(res.steps + 1),
                     static_cast<py::ssize_t>(dim)});
        std::memcpy(preds.mutable_data(), res.predictions.data(),
                    static_cast<size_t>(res.steps + 1) * dim * sizeof(double));
        d["predictions"] = preds;
        return d;
      },
      py::arg("net"), py::arg("initial"), py::arg("reference"),
      py::arg("system"), py::arg("horizon"), py::arg("dt") = 0.1);

  // --- experiment runner ---------------------------------------------------
  m.def("list_presets", [] { return list_presets(); });
  m.def(
      "run_preset",
      [](const std::string& name, std::uint64_t seed, const std::string& out_dir,
         const std::string& data_path) {
        RunConfig cfg = preset_config(name);
        cfg.seed = seed;
        cfg.seed_set = true;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!data_path.empty()) cfg.data_path = data_path;
        RunOutput out = run_train(cfg);
        py::dict d;
        d["run_dir"] = out.run_dir;
        d["train"] = metrics_dict(out.train_metrics);
        d["test"] = metrics_dict(out.test_metrics);
        d["summary"] = summary_dict(out.summary);
        d["epochs_run"] = out.result.epochs_run;
        d["early_stopped"] = out.result.early_stopped;
        return d;
      },
      py::arg("name"), py::arg("seed"), py::arg("out_dir") = std::string(),
      py::arg("data_path") = std::string());
}
