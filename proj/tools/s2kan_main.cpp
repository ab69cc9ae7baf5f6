// Command-line front end: train runs from configs/presets, evaluate and
// forecast with checkpoints, post-hoc symbolification, metric tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "s2kan/common.hpp"
#include "s2kan/runner.hpp"
#include "s2kan/symbolify.hpp"

namespace fs = std::filesystem;
using s2kan::strf;

namespace {

struct TrainArgs {
  std::string config;
  std::string preset;
  std::int64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string data;
};

s2kan::RunConfig resolve_config(const TrainArgs& a) {
  if (a.config.empty() == a.preset.empty()) {
    throw std::invalid_argument("pass exactly one of --config or --preset");
  }
  s2kan::RunConfig cfg = a.config.empty() ? s2kan::preset_config(a.preset)
                                          : s2kan::load_config(a.config);
  if (a.seed_given) {
    cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.seed_set = true;
  }
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.data.empty()) cfg.data_path = a.data;
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  s2kan::RunConfig cfg = resolve_config(a);
  s2kan::RunOutput out = s2kan::run_train(cfg);
  std::printf("run directory  %s\n", out.run_dir.c_str());
  std::printf("epochs run     %d%s\n", out.result.epochs_run,
              out.result.early_stopped ? "  (early stop)" : "");
  std::printf("train mse      %.6g\n", out.train_metrics.mse);
  std::printf("test mse       %.6g   rmse %.6g   R2 %.4f\n",
              out.test_metrics.mse, out.test_metrics.rmse,
              out.test_metrics.r2);
  std::printf("active funcs   %d / %d\n", out.summary.active_functions,
              out.summary.total_edges);
  std::printf("k              %.6g (expected %.6g)\n", out.summary.k_active,
              out.summary.k_expected);
  std::printf("%% symbolic     %.1f\n", out.summary.percent_symbolic);
  if (out.symbolified) {
    std::printf("symbolified    %d replaced, %d dense; test R2 %.4f\n",
                out.symbolify_report.replaced, out.symbolify_report.kept_dense,
                out.symbolified_test.r2);
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data,
             const std::string& format, std::string out_path) {
  s2kan::EvalMetrics m = s2kan::eval_checkpoint(checkpoint, data);
  std::string text;
  if (format == "csv") {
    text = strf("n,mse,rmse,r2\n%d,%.17g,%.17g,%.17g\n", m.n, m.mse, m.rmse,
                m.r2);
  } else {
    nlohmann::ordered_json j{
        {"n", m.n}, {"mse", m.mse}, {"rmse", m.rmse}, {"r2", m.r2}};
    text = j.dump(2) + "\n";
  }
  std::fputs(text.c_str(), stdout);
  if (out_path.empty()) {
    const fs::path dir = fs::path(checkpoint).parent_path();
    out_path = (dir / ("eval_metrics." + (format == "csv" ? std::string("csv")
                                                          : std::string("json"))))
                   .string();
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
  f << text;
  return 0;
}

int cmd_forecast(const std::string& run_dir, std::string checkpoint, int steps,
                 double horizon_frac, std::string out_path) {
  s2kan::RunConfig cfg = s2kan::load_config(run_dir + "/config.toml");
  const std::vector<std::string> labels = s2kan::state_labels(cfg.task);
  if (labels.empty()) {
    throw std::invalid_argument("forecast: task '" + cfg.task +
                                "' is not a dynamical system");
  }
  s2kan::TaskData data = s2kan::make_task_data(cfg);
  const s2kan::TrajectoryData& traj = data.traj;
  const int dim = traj.dim;
  const int avail = traj.n_states - 1 - traj.test_start;
  if (steps <= 0 || steps > avail) steps = avail;

  if (checkpoint.empty()) checkpoint = run_dir + "/checkpoint.json";
  s2kan::Network net = s2kan::deserialize(checkpoint);

  const double* initial = &traj.trajectory[static_cast<size_t>(traj.test_start) * dim];
  s2kan::ForecastConfig fcfg;
  fcfg.system = cfg.task == "ikeda" ? s2kan::DynamicalSystem::Ikeda
                                    : s2kan::DynamicalSystem::Ecosystem;
  fcfg.horizon = steps;
  fcfg.dt = traj.dt;
  s2kan::ForecastResult res =
      s2kan::multistep_forecast(net, initial, initial, fcfg);

  // Variability of the reference slice: pooled standard deviation across
  // steps and components.
  std::vector<double> mean(dim, 0.0);
  for (int s = 0; s <= steps; ++s) {
    for (int d = 0; d < dim; ++d) mean[d] += initial[s * dim + d];
  }
  for (int d = 0; d < dim; ++d) mean[d] /= steps + 1;
  double var = 0.0;
  for (int s = 0; s <= steps; ++s) {
    for (int d = 0; d < dim; ++d) {
      const double c = initial[s * dim + d] - mean[d];
      var += c * c;
    }
  }
  const double sigma = std::sqrt(var / ((steps + 1) * dim));
  const double tol = horizon_frac * sigma;

  int accuracy_horizon = res.steps;
  std::vector<double> errs(res.steps + 1, 0.0);
  for (int s = 1; s <= res.steps; ++s) {
    double e2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double c = res.predictions[static_cast<size_t>(s) * dim + d] -
                       initial[s * dim + d];
      e2 += c * c;
    }
    errs[s] = std::sqrt(e2 / dim);
    if (errs[s] > tol && accuracy_horizon == res.steps) {
      accuracy_horizon = s - 1;
    }
  }

  if (out_path.empty()) out_path = run_dir + "/forecast.csv";
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
  f << strf("# rmse=%.17g accuracy_horizon=%d horizon_frac=%.17g diverged=%d\n",
            res.rmse, accuracy_horizon, horizon_frac, res.diverged ? 1 : 0);
  f << "step";
  for (const auto& l : labels) f << ",pred_" << l;
  for (const auto& l : labels) f << ",ref_" << l;
  f << ",abs_err\n";
  for (int s = 0; s <= res.steps; ++s) {
    f << s;
    for (int d = 0; d < dim; ++d) {
      f << strf(",%.17g", res.predictions[static_cast<size_t>(s) * dim + d]);
    }
    for (int d = 0; d < dim; ++d) f << strf(",%.17g", initial[s * dim + d]);
    f << strf(",%.17g\n", errs[s]);
  }
  f.close();

  std::printf("forecast steps    %d of %d requested\n", res.steps, steps);
  std::printf("rollout rmse      %.6g\n", res.rmse);
  std::printf("accuracy horizon  %d steps (error <= %.3g = %.2g of sigma)\n",
              accuracy_horizon, tol, horizon_frac);
  if (res.diverged) {
    std::fprintf(stderr, "warning: forecast diverged at step %d; %s truncated\n",
                 res.divergence_step, out_path.c_str());
  }
  std::printf("trajectory file   %s\n", out_path.c_str());
  return 0;
}

int cmd_symbolify(const std::string& checkpoint, double threshold,
                  const std::string& library_csv, std::string out_path,
                  const std::string& data_csv) {
  s2kan::Network net = s2kan::deserialize(checkpoint);
  if (!net.gates_fixed_open) {
    // Gated checkpoint: already softly symbolified, print its closed form.
    std::fputs(s2kan::extract_expression(net).c_str(), stdout);
    std::fputs("\n", stdout);
    return 0;
  }

  std::vector<s2kan::Primitive> library;
  if (!library_csv.empty()) {
    std::string name;
    std::istringstream ss(library_csv);
    while (std::getline(ss, name, ',')) {
      auto p = s2kan::primitive_from_name(name);
      if (!p) throw std::invalid_argument("unknown primitive '" + name + "'");
      library.push_back(*p);
    }
  }

  s2kan::EvalMetrics before{}, after{};
  s2kan::Dataset data;
  if (!data_csv.empty()) {
    data = s2kan::read_dataset_csv(data_csv);
    before = s2kan::evaluate(net, data);
  }
  s2kan::SymbolifyReport rep =
      s2kan::symbolify_network(net, threshold, library);
  if (!data_csv.empty()) after = s2kan::evaluate(net, data);

  if (out_path.empty()) {
    fs::path p(checkpoint);
    out_path = (p.parent_path() / (p.stem().string() + "_symbolified.json"))
                   .string();
  }
  s2kan::serialize(net, out_path);

  std::printf("threshold %.3g: %d edges replaced, %d kept dense\n", threshold,
              rep.replaced, rep.kept_dense);
  for (const auto& e : rep.edges) {
    if (e.replaced) {
      std::printf("  L%d %d->%d  %s  R2=%.5f  a=%.4g b=%.4g c=%.4g d=%.4g\n",
                  e.layer, e.input, e.slot,
                  s2kan::primitive_name(e.fit.prim), e.fit.r2, e.fit.a,
                  e.fit.b, e.fit.c, e.fit.d);
    } else {
      std::printf("  L%d %d->%d  dense (best R2=%.5f)\n", e.layer, e.input,
                  e.slot, e.best_r2);
    }
  }
  if (!data_csv.empty()) {
    std::printf("R2 before %.5f -> after %.5f on %s\n", before.r2, after.r2,
                data_csv.c_str());
  }
  std::printf("wrote %s\n", out_path.c_str());
  std::fputs(s2kan::extract_expression(net).c_str(), stdout);
  std::fputs("\n", stdout);
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& format) {
  struct Row {
    std::string run, task, mode;
    double beta, r2, rmse, k, psym;
    int active, edges;
  };
  std::vector<Row> rows;
  for (const auto& dir : run_dirs) {
    const std::string path = dir + "/metrics.json";
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    Row r;
    r.run = j.value("run", dir);
    r.task = j.value("task", "?");
    r.mode = j.value("mode", "?");
    r.beta = j.value("beta", 0.0);
    r.r2 = j["test"].value("r2", 0.0);
    r.rmse = j["test"].value("rmse", 0.0);
    r.active = j["model"].value("active_functions", 0);
    r.edges = j["model"].value("total_edges", 0);
    r.k = j["model"].value("k_active", 0.0);
    r.psym = j["model"].value("percent_symbolic", 0.0);
    rows.push_back(std::move(r));
  }
  if (format == "csv") {
    std::printf("run,task,mode,beta,test_r2,test_rmse,active,edges,k,percent_symbolic\n");
    for (const auto& r : rows) {
      std::printf("%s,%s,%s,%g,%.6g,%.6g,%d,%d,%.6g,%.4g\n", r.run.c_str(),
                  r.task.c_str(), r.mode.c_str(), r.beta, r.r2, r.rmse,
                  r.active, r.edges, r.k, r.psym);
    }
  } else {
    std::printf("| run | task | mode | beta | test R2 | test RMSE | active | k | %% symb |\n");
    std::printf("|---|---|---|---|---|---|---|---|---|\n");
    for (const auto& r : rows) {
      std::printf("| %s | %s | %s | %g | %.4f | %.4g | %d/%d | %.5g | %.1f |\n",
                  r.run.c_str(), r.task.c_str(), r.mode.c_str(), r.beta, r.r2,
                  r.rmse, r.active, r.edges, r.k, r.psym);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gated activation-dictionary KAN trainer"};
  app.require_subcommand(1);

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "train a run from a config or preset");
  train->add_option("-c,--config", ta.config, "TOML run config");
  train->add_option("-p,--preset", ta.preset, "preset name (see list-presets)");
  CLI::Option* seed_opt =
      train->add_option("-s,--seed", ta.seed, "run seed (required with --preset)");
  train->add_option("-o,--out", ta.out, "run directory override");
  train->add_option("--data", ta.data, "dataset CSV for tabular tasks");

  std::string ev_ckpt, ev_data, ev_format = "json", ev_out;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset CSV");
  eval->add_option("checkpoint", ev_ckpt, "checkpoint.json path")->required();
  eval->add_option("--data", ev_data, "dataset CSV (train.csv/test.csv format)")
      ->required();
  eval->add_option("-f,--format", ev_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  eval->add_option("-o,--out", ev_out, "metrics file (default beside checkpoint)");

  std::string fc_run, fc_ckpt, fc_out;
  int fc_steps = 0;
  double fc_frac = 0.1;
  CLI::App* fc = app.add_subcommand("forecast", "autonomous rollout against the reference trajectory");
  fc->add_option("run", fc_run, "run directory (config.toml + checkpoint.json)")
      ->required();
  fc->add_option("--checkpoint", fc_ckpt, "checkpoint override");
  fc->add_option("-n,--steps", fc_steps, "horizon (default: whole test span)");
  fc->add_option("--horizon-frac", fc_frac,
                 "accuracy-horizon threshold as a fraction of trajectory sigma");
  fc->add_option("-o,--out", fc_out, "trajectory CSV (default run/forecast.csv)");

  std::string sy_ckpt, sy_lib, sy_out, sy_data;
  double sy_threshold = 0.95;
  CLI::App* sy = app.add_subcommand("symbolify", "replace dense edges with fitted primitives");
  sy->add_option("checkpoint", sy_ckpt, "checkpoint.json path")->required();
  sy->add_option("-t,--threshold", sy_threshold, "acceptance R2 threshold");
  sy->add_option("--library", sy_lib, "comma-separated primitive names");
  sy->add_option("-o,--out", sy_out, "output checkpoint path");
  sy->add_option("--data", sy_data, "dataset CSV for before/after metrics");

  std::vector<std::string> rp_dirs;
  std::string rp_format = "md";
  CLI::App* rp = app.add_subcommand("report", "metric table over run directories");
  rp->add_option("runs", rp_dirs, "run directories")->required();
  rp->add_option("-f,--format", rp_format, "md or csv")
      ->check(CLI::IsMember({"md", "csv"}));

  CLI::App* lp = app.add_subcommand("list-presets", "show the preset catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      ta.seed_given = seed_opt->count() > 0;
      return cmd_train(ta);
    }
    if (eval->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_format, ev_out);
    if (fc->parsed())
      return cmd_forecast(fc_run, fc_ckpt, fc_steps, fc_frac, fc_out);
    if (sy->parsed())
      return cmd_symbolify(sy_ckpt, sy_threshold, sy_lib, sy_out, sy_data);
    if (rp->parsed()) return cmd_report(rp_dirs, rp_format);
    if (lp->parsed()) {
      for (const auto& [name, desc] : s2kan::list_presets()) {
        std::printf("%-32s %s\n", name.c_str(), desc.c_str());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
