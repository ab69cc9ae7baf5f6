// Acceptance gate. Every test case covers one numbered criterion and prints a
// single [PASS]/[FAIL] line with the measured numbers; the ctest entries
// acceptance_c1..c11 run them individually.

#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "s2kan/common.hpp"
#include "s2kan/runner.hpp"

using namespace s2kan;

namespace {

bool report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s (%s)\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  return ok;
}

double frac(double v) { return v - std::floor(v); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunOutput run_preset(std::string preset, std::uint64_t seed,
                     const std::string& out_dir, int epochs = -1,
                     Network* net = nullptr) {
  RunConfig cfg = preset_config(std::move(preset));
  cfg.seed = seed;
  cfg.seed_set = true;
  cfg.out_dir = "acceptance-runs/" + out_dir;
  if (epochs > 0) cfg.train.epochs = epochs;
  return run_train(cfg, net);
}

// ---- criterion 1 helpers --------------------------------------------------

// Noise in (0.3, 0.7) plus gate locations in (-0.5, 0.4) keeps every sampled
// z strictly between the clip boundaries, so no finite-difference probe can
// cross a kink.
std::vector<double> gate_noise(int n) {
  std::vector<double> u(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    u[static_cast<size_t>(i)] = 0.3 + 0.4 * frac(0.6180339887498949 * (i + 1));
  }
  return u;
}

double loss_weight(int sample, int j) {
  return 0.5 + 0.25 * ((sample + 2 * j) % 4);
}

double run_loss(Network& net, const std::vector<double>& X, int batch,
                const std::vector<double>& u, Tape& tape) {
  ForwardOptions opt;
  opt.stochastic = true;
  opt.noise = &u;
  forward(net, X.data(), batch, tape, opt);
  const auto& Y = tape.nodes.back();
  const int od = net.spec.output_dim();
  double L = 0.0;
  for (int s = 0; s < batch; ++s) {
    for (int j = 0; j < od; ++j) {
      L += loss_weight(s, j) * Y[static_cast<size_t>(s) * od + j];
    }
  }
  return L;
}

struct ParamRef {
  double* value;
  const double* grad;
};

std::vector<ParamRef> collect_params(Network& net) {
  std::vector<ParamRef> out;
  for (auto& layer : net.layers) {
    for (auto& e : layer) {
      for (auto& t : e.terms) {
        if (t.kind == TermKind::Spline) {
          for (size_t i = 0; i < t.coeffs.size(); ++i) {
            out.push_back({&t.coeffs[i], &t.coeffs_grad[i]});
          }
        } else {
          out.push_back({&t.coeff, &t.coeff_grad});
        }
        if (!net.gates_fixed_open && t.kind != TermKind::Fitted) {
          out.push_back({&t.alpha, &t.alpha_grad});
        }
      }
    }
  }
  return out;
}

struct GradcheckStats {
  double max_rel = 0.0;       // scaled deviation, max over params and inputs
  bool z_interior = true;     // every sampled gate strictly inside (0,1)
  bool nodes_bounded = true;  // every node value inside the basis domains
};

void gradcheck(Network& net, std::vector<double> X, int batch,
               GradcheckStats& st) {
  const std::vector<double> u = gate_noise(count_gates(net));
  Tape tape;
  zero_grads(net);
  std::vector<ParamRef> params = collect_params(net);
  run_loss(net, X, batch, u, tape);

  for (const auto& zl : tape.z) {
    for (double z : zl) {
      if (!(z > 0.0 && z < 1.0)) st.z_interior = false;
    }
  }
  for (const auto& nl : tape.nodes) {
    for (double v : nl) {
      if (!(std::abs(v) < 0.98)) st.nodes_bounded = false;
    }
  }

  const int od = net.spec.output_dim();
  std::vector<double> dLdY(static_cast<size_t>(batch) * od);
  for (int s = 0; s < batch; ++s) {
    for (int j = 0; j < od; ++j) {
      dLdY[static_cast<size_t>(s) * od + j] = loss_weight(s, j);
    }
  }
  backward(net, tape, dLdY.data());

  std::vector<double> analytic(params.size());
  for (size_t i = 0; i < params.size(); ++i) analytic[i] = *params[i].grad;
  const std::vector<double> input_grad = tape.input_grad;

  const auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
  };
  Tape scratch;
  const auto fd = [&](double& p) {
    const double saved = p;
    const double h = 1e-5 * std::max(1.0, std::abs(saved));
    p = saved + h;
    const double up = run_loss(net, X, batch, u, scratch);
    p = saved - h;
    const double dn = run_loss(net, X, batch, u, scratch);
    p = saved;
    return (up - dn) / (2.0 * h);
  };
  for (size_t i = 0; i < params.size(); ++i) {
    st.max_rel = std::max(st.max_rel, rel(analytic[i], fd(*params[i].value)));
  }
  for (size_t i = 0; i < X.size(); ++i) {
    st.max_rel = std::max(st.max_rel, rel(input_grad[i], fd(X[i])));
  }
}

// One random architecture per index, cycling through the four families.
Network random_net(int index) {
  std::mt19937_64 rng(9000 + static_cast<std::uint64_t>(index));
  const auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  const int family = index % 4;

  NetworkSpec spec;
  spec.input_dim = 1 + pick(3);
  const int depth = 1 + pick(2);
  for (int l = 0; l < depth - 1; ++l) spec.layers.push_back({1 + pick(2), 0});
  spec.layers.push_back({1 + pick(2), 0});
  if (family == 3) spec.layers.front().mult = 1;

  // Primitives whose protected forms stay smooth for any node value the
  // coefficient scaling below allows (|x| < 0.98).
  const std::vector<Primitive> smooth = {
      Primitive::One, Primitive::Identity, Primitive::Square, Primitive::Cube,
      Primitive::Sin, Primitive::Cos,      Primitive::Bell};
  // Extra primitives that are smooth only on the positive inputs fed to a
  // single-layer net.
  const std::vector<Primitive> positive_only = {
      Primitive::Reciprocal, Primitive::Sqrt, Primitive::Log1p,
      Primitive::Exp};

  DictionaryConfig& d = spec.dict;
  d.spline = false;
  bool protected_prims = false;
  if (family == 0) {
    for (int k = 0; k < 4; ++k) {
      d.symbolic.push_back(smooth[static_cast<size_t>(pick(
          static_cast<int>(smooth.size())))]);
    }
    if (depth == 1) {
      d.symbolic.push_back(positive_only[static_cast<size_t>(
          pick(static_cast<int>(positive_only.size())))]);
      protected_prims = true;
    }
  } else if (family == 1) {
    d.spline = true;
  } else {
    d.symbolic = {smooth[static_cast<size_t>(pick(3))],
                  smooth[3 + static_cast<size_t>(pick(4))]};
    d.chebyshev_degree = 1 + pick(3);
    d.fourier_modes = 1 + pick(2);
    d.spline = true;
  }
  spec.validate();

  Network net = init_network(spec, rng);

  // Gate locations spread inside (-0.5, 0.4); coefficients scaled so no node
  // can leave the Chebyshev/spline domain (amplified primitives reach |psi|
  // up to 4 on the allowed inputs).
  int i = 0;
  for (int l = 0; l < net.n_layers(); ++l) {
    const int fan_in = net.spec.width(l);
    const int terms = net.spec.dict.terms_per_edge();
    const double amp = (protected_prims && l == 0) ? 4.0 : 1.0;
    const double c0 = 0.85 / (fan_in * terms * amp);
    for (int e = 0; e < net.spec.edge_count(l); ++e) {
      for (Term& t : net.layers[static_cast<size_t>(l)][static_cast<size_t>(e)]
                         .terms) {
        t.alpha = -0.5 + 0.9 * frac(0.7548776662466927 * (++i));
        if (t.kind == TermKind::Spline) {
          t.coeffs[0] = c0 * (0.3 + 0.4 * frac(0.4142135623730951 * (++i)));
          for (size_t j = 1; j < t.coeffs.size(); ++j) {
            t.coeffs[j] =
                c0 * (-0.8 + 1.6 * frac(0.3183098861837907 * (++i)));
          }
        } else {
          const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
          t.coeff = sgn * c0 * (0.2 + 0.8 * frac(0.3183098861837907 * (++i)));
        }
      }
    }
  }
  return net;
}

// ---- criterion 3 helpers --------------------------------------------------

double indep_silu(double x) { return x / (1.0 + std::exp(-x)); }

// Full-triangle Cox-de Boor recursion over every basis function, seeded from
// the degree-0 indicators. Deliberately a different algorithm from the
// library's windowed evaluation.
std::vector<double> indep_basis(const SplineBasis& sb, double x) {
  const auto& U = sb.knots;
  const double xc = std::clamp(x, sb.lo, sb.hi);
  std::vector<double> N(U.size() - 1, 0.0);
  if (xc >= sb.hi) {
    N[static_cast<size_t>(sb.degree + sb.grid - 1)] = 1.0;
  } else {
    for (size_t j = 0; j + 1 < U.size(); ++j) {
      if (U[j] <= xc && xc < U[j + 1]) N[j] = 1.0;
    }
  }
  for (int k = 1; k <= sb.degree; ++k) {
    for (size_t j = 0; j + static_cast<size_t>(k) + 1 < U.size(); ++j) {
      const double den1 = U[j + static_cast<size_t>(k)] - U[j];
      const double den2 = U[j + static_cast<size_t>(k) + 1] - U[j + 1];
      double v = 0.0;
      if (den1 > 0.0) v += (xc - U[j]) / den1 * N[j];
      if (den2 > 0.0) {
        v += (U[j + static_cast<size_t>(k) + 1] - xc) / den2 * N[j + 1];
      }
      N[j] = v;
    }
  }
  N.resize(static_cast<size_t>(sb.basis_count()));
  return N;
}

double indep_edge(const Edge& e, double x) {
  const Term& t = e.terms[static_cast<size_t>(e.spline_term)];
  double v = t.coeffs[0] * indep_silu(x);
  const std::vector<double> N = indep_basis(e.spline, x);
  for (size_t j = 0; j < N.size(); ++j) v += t.coeffs[j + 1] * N[j];
  return v;
}

// Plain KAN forward over a spline-only network: sum incoming edges per slot,
// multiply slot pairs at product nodes.
std::vector<double> indep_forward(const Network& net,
                                  const std::vector<double>& x0) {
  std::vector<double> cur = x0;
  for (int l = 0; l < net.n_layers(); ++l) {
    const LayerSpec& ls = net.spec.layers[static_cast<size_t>(l)];
    const int W = net.spec.width(l);
    std::vector<double> pre(static_cast<size_t>(ls.pre_width()), 0.0);
    for (int s = 0; s < ls.pre_width(); ++s) {
      for (int i = 0; i < W; ++i) {
        pre[static_cast<size_t>(s)] +=
            indep_edge(net.edge(l, i, s), cur[static_cast<size_t>(i)]);
      }
    }
    std::vector<double> nxt(static_cast<size_t>(ls.width()));
    for (int j = 0; j < ls.sum; ++j) nxt[static_cast<size_t>(j)] = pre[static_cast<size_t>(j)];
    for (int m = 0; m < ls.mult; ++m) {
      nxt[static_cast<size_t>(ls.sum + m)] =
          pre[static_cast<size_t>(ls.sum + 2 * m)] *
          pre[static_cast<size_t>(ls.sum + 2 * m + 1)];
    }
    cur = std::move(nxt);
  }
  return cur;
}

DictionaryConfig spline_dict() {
  DictionaryConfig d;
  d.chebyshev_degree = -1;
  d.fourier_modes = 0;
  d.spline = true;
  return d;
}

double median3(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

}  // namespace

TEST_CASE("criterion 1: gradients match finite differences on random nets") {
  GradcheckStats st;
  for (int i = 0; i < 20; ++i) {
    Network net = random_net(i);
    const int batch = 3;
    std::vector<double> X(static_cast<size_t>(batch) * net.spec.input_dim);
    for (size_t j = 0; j < X.size(); ++j) {
      X[j] = 0.25 + 0.6 * frac(0.9170000769 * (static_cast<double>(j) + 1.0) *
                               (i + 1));
    }
    gradcheck(net, X, batch, st);
  }
  const bool ok = st.max_rel < 1e-4 && st.z_interior && st.nodes_bounded;
  CHECK(report("criterion 1: gradient correctness", ok,
               strf("20 nets, max rel err %.2e, gates interior %d, nodes "
                    "bounded %d",
                    st.max_rel, st.z_interior ? 1 : 0,
                    st.nodes_bounded ? 1 : 0)));
}

TEST_CASE("criterion 2: hard concrete sampler matches the closed form") {
  GateParams g;
  std::mt19937_64 rng(424242);
  const int n = 1000000;
  double max_dev = 0.0;
  for (double alpha : {-3.0, -1.6, 0.0, 1.6, 3.0}) {
    g.alpha = alpha;
    // The closed form is the probability that the clipped draw is nonzero,
    // so the Monte-Carlo side counts nonzero draws rather than averaging z.
    int open = 0;
    for (int i = 0; i < n; ++i) {
      const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
      if (sample_gate(g, u).z > 0.0) ++open;
    }
    const double mc = static_cast<double>(open) / n;
    max_dev = std::max(max_dev, std::abs(mc - expected_gate(g)));
  }

  g.alpha = gate_threshold_alpha(g);
  const bool at_threshold_closed = !threshold_gate(g);
  GateParams g2 = g;
  g2.alpha = std::nextafter(g.alpha, 1.0);
  const bool above_threshold_open = threshold_gate(g2);
  const double alpha_star = -1.598596848532247;  // (2/3)*log(0.1/1.1)
  const bool threshold_value_ok = std::abs(g.alpha - alpha_star) < 1e-12;

  const bool ok = max_dev < 2e-3 && at_threshold_closed &&
                  above_threshold_open && threshold_value_ok;
  CHECK(report("criterion 2: hard concrete consistency", ok,
               strf("max |MC - closed| %.2e over 5 alphas, flip at %.12f", max_dev,
                    g.alpha)));
}

TEST_CASE("criterion 3: degraded mode equals an independent spline KAN") {
  // Forward equivalence on a deep shape with a product node.
  NetworkSpec spec = parse_shape("[2,3,(1,1),2]", spline_dict());
  std::mt19937_64 rng(515151);
  Network net = init_network(spec, rng, /*gates_fixed_open=*/true);
  int i = 0;
  for (auto& layer : net.layers) {
    for (Edge& e : layer) {
      Term& t = e.terms[static_cast<size_t>(e.spline_term)];
      t.coeffs[0] = 0.4 + 0.5 * frac(0.7071067811865476 * (++i));
      for (size_t j = 1; j < t.coeffs.size(); ++j) {
        t.coeffs[j] = -0.8 + 1.6 * frac(0.5772156649015329 * (++i));
      }
    }
  }
  const int batch = 64;
  std::vector<double> X(static_cast<size_t>(batch) * 2);
  for (size_t j = 0; j < X.size(); ++j) {
    X[j] = -1.4 + 2.8 * frac(0.8413447460685429 * (static_cast<double>(j) + 1.0));
  }
  Tape tape;
  forward(net, X.data(), batch, tape);
  double max_diff = 0.0;
  for (int s = 0; s < batch; ++s) {
    const std::vector<double> ref = indep_forward(
        net, {X[static_cast<size_t>(s) * 2], X[static_cast<size_t>(s) * 2 + 1]});
    for (int j = 0; j < 2; ++j) {
      max_diff = std::max(
          max_diff,
          std::abs(ref[static_cast<size_t>(j)] -
                   tape.outputs()[static_cast<size_t>(s) * 2 + j]));
    }
  }

  // Co-training on sinc: same initial state, same Adam recipe, full batch.
  SplitDataset sd = gen_sinc({256, 64, 1.0, 15.0, 21});
  NetworkSpec tspec = parse_shape("[1,1]", spline_dict());
  std::mt19937_64 trng(313131);
  Network tnet = init_network(tspec, trng, /*gates_fixed_open=*/true);

  Network placed = tnet;  // replicate the initial grid placement train() does
  {
    Tape rt;
    ForwardOptions opt;
    opt.track_range = true;
    forward(placed, sd.train.X.data(), sd.train.n, rt, opt);
    grid_update(placed);
  }
  const Edge& pe = placed.edge(0, 0, 0);
  std::vector<double> w = pe.terms[static_cast<size_t>(pe.spline_term)].coeffs;

  const int n = sd.train.n;
  const int dim = static_cast<int>(w.size());
  std::vector<double> B(static_cast<size_t>(n) * dim);  // design matrix
  for (int s = 0; s < n; ++s) {
    const double x = sd.train.X[static_cast<size_t>(s)];
    B[static_cast<size_t>(s) * dim] = indep_silu(x);
    const std::vector<double> bx = indep_basis(pe.spline, x);
    for (int j = 1; j < dim; ++j) {
      B[static_cast<size_t>(s) * dim + j] = bx[static_cast<size_t>(j - 1)];
    }
  }

  TrainConfig tc;
  tc.beta = 0.0;
  tc.epochs = 500;
  tc.batch_size = n;
  tc.warmup_epochs = 0;
  tc.learning_rate = 5e-3;
  tc.early_stop = false;
  tc.seed = 77;

  std::vector<double> m(static_cast<size_t>(dim), 0.0),
      v(static_cast<size_t>(dim), 0.0), grad(static_cast<size_t>(dim));
  double indep_mse = 0.0;
  for (int step = 1; step <= tc.epochs; ++step) {
    double sse = 0.0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int s = 0; s < n; ++s) {
      double pred = 0.0;
      for (int j = 0; j < dim; ++j) {
        pred += w[static_cast<size_t>(j)] * B[static_cast<size_t>(s) * dim + j];
      }
      const double r = pred - sd.train.Y[static_cast<size_t>(s)];
      sse += r * r;
      const double g = 2.0 * r / n;
      for (int j = 0; j < dim; ++j) {
        grad[static_cast<size_t>(j)] += g * B[static_cast<size_t>(s) * dim + j];
      }
    }
    indep_mse = sse / n;
    const double c1 = 1.0 - std::pow(tc.adam_beta1, step);
    const double c2 = 1.0 - std::pow(tc.adam_beta2, step);
    for (int j = 0; j < dim; ++j) {
      m[static_cast<size_t>(j)] = tc.adam_beta1 * m[static_cast<size_t>(j)] +
                                  (1.0 - tc.adam_beta1) * grad[static_cast<size_t>(j)];
      v[static_cast<size_t>(j)] = tc.adam_beta2 * v[static_cast<size_t>(j)] +
                                  (1.0 - tc.adam_beta2) * grad[static_cast<size_t>(j)] *
                                      grad[static_cast<size_t>(j)];
      w[static_cast<size_t>(j)] -= tc.learning_rate *
                                   (m[static_cast<size_t>(j)] / c1) /
                                   (std::sqrt(v[static_cast<size_t>(j)] / c2) +
                                    tc.adam_eps);
    }
  }

  TrainResult res = train(tnet, sd.train, tc);
  const double lib_mse = res.final_mse;
  const double gap =
      std::abs(lib_mse - indep_mse) / std::max(lib_mse, indep_mse);

  const bool ok = max_diff < 1e-12 && gap < 0.05;
  CHECK(report(
      "criterion 3: graceful-degradation equivalence", ok,
      strf("forward max |diff| %.2e; 500-epoch sinc mse %.4e vs %.4e, gap %.1f%%",
           max_diff, lib_mse, indep_mse, 100.0 * gap)));
}

TEST_CASE("criterion 4: sinc reproduction") {
  RunOutput rb = run_preset("sinc-baseline", 3, "c4-baseline");
  const bool base_ok = rb.test_metrics.mse < 1e-4 && rb.summary.k_active == 30.0;

  RunOutput rs = run_preset("sinc-s2kan", 3, "c4-s2kan");
  const std::string expr = slurp(rs.run_dir + "/expression.txt");
  const bool factors = expr.find("1/(") != std::string::npos &&
                       (expr.find("sin(") != std::string::npos ||
                        expr.find("cos(") != std::string::npos);
  const bool s2_ok = rs.test_metrics.mse < 1e-3 &&
                     rs.summary.percent_symbolic == 100.0 &&
                     rs.summary.active_terms >= 1 && factors;

  CHECK(report("criterion 4: sinc reproduction", base_ok && s2_ok,
               strf("baseline mse %.2e k %.0f; s2kan mse %.2e, %.0f%% symbolic, "
                    "k %.0f, factors %d",
                    rb.test_metrics.mse, rb.summary.k_active,
                    rs.test_metrics.mse, rs.summary.percent_symbolic,
                    rs.summary.k_active, factors ? 1 : 0)));
}

TEST_CASE("criterion 5: nguyen slice and symbolification fragility") {
  const int epochs = -1;  // preset length; runs are cheap enough at full scale
  std::string detail;
  bool ok = true;
  bool relaxed = false;
  for (int id : {1, 6, 8}) {
    RunOutput rs = run_preset(strf("nguyen-F%d-S-beta0.1", id), 3,
                              strf("c5-F%d-s2kan", id), epochs);
    RunOutput rb = run_preset(strf("nguyen-F%d-S-baseline", id), 3,
                              strf("c5-F%d-baseline", id), epochs);
    const double r2s = rs.test_metrics.r2;
    const double r2b = rb.test_metrics.r2;
    // 0.995 is the target; 0.99 is the documented reduced-scale floor.
    if (!(r2s >= 0.995)) relaxed = true;
    ok = ok && r2s >= 0.99 && rs.summary.percent_symbolic == 100.0 &&
         r2b >= 0.999;
    detail += strf("F%d r2 %.4f/%.4f sym %.0f%%; ", id, r2s, r2b,
                   rs.summary.percent_symbolic);
  }

  RunConfig sym = preset_config("nguyen-F8-S-baseline");
  sym.mode = RunMode::BaselineSymbolify;
  if (epochs > 0) sym.train.epochs = epochs;
  sym.seed = 3;
  sym.seed_set = true;
  sym.out_dir = "acceptance-runs/c5-F8-symbolify";
  RunOutput rsym = run_train(sym);
  ok = ok && rsym.symbolified && rsym.symbolified_test.r2 < 0.0;
  detail += strf("F8 post-hoc r2 %.2f", rsym.symbolified_test.r2);
  if (relaxed) detail += " [0.99 floor used]";

  CHECK(report("criterion 5: nguyen desk-scale slice", ok, detail));
}

TEST_CASE("criterion 6: ikeda sparsity and forecast trend") {
  Network bnet, snet;
  RunOutput rb = run_preset("ikeda-baseline", 3, "c6-baseline", -1, &bnet);
  RunOutput rs = run_preset("ikeda-beta0.1", 3, "c6-s2kan", -1, &snet);

  const bool base_ok = rb.test_metrics.rmse < 0.02 &&
                       rb.summary.k_active == 720.0;
  const bool sparse_ok = rs.summary.k_active < 200.0;

  RunConfig data_cfg = preset_config("ikeda-baseline");
  data_cfg.seed = 3;
  data_cfg.seed_set = true;
  TaskData td = make_task_data(data_cfg);
  ForecastConfig fc;
  fc.system = DynamicalSystem::Ikeda;
  fc.horizon = 20;
  double sum_b = 0.0, sum_s = 0.0;
  const int starts = 5;
  for (int k = 0; k < starts; ++k) {
    const int idx = td.traj.test_start + 380 * k;
    REQUIRE(idx + fc.horizon < td.traj.n_states);
    const double* ref = td.traj.trajectory.data() + static_cast<size_t>(idx) * 2;
    sum_b += multistep_forecast(bnet, ref, ref, fc).rmse;
    sum_s += multistep_forecast(snet, ref, ref, fc).rmse;
  }
  const double ms_b = sum_b / starts;
  const double ms_s = sum_s / starts;
  const bool forecast_ok = ms_s <= 1.25 * ms_b;

  CHECK(report("criterion 6: ikeda trend reproduction",
               base_ok && sparse_ok && forecast_ok,
               strf("baseline rmse %.4f k %.0f; s2kan k %.1f; 20-step rmse "
                    "%.3f vs %.3f",
                    rb.test_metrics.rmse, rb.summary.k_active,
                    rs.summary.k_active, ms_s, ms_b)));
}

TEST_CASE("criterion 7: ecosystem self-sparsification at beta 0") {
  std::array<std::vector<double>, 3> traces;
  for (int s = 0; s < 3; ++s) {
    RunOutput ro = run_preset("ecosystem-beta0", static_cast<std::uint64_t>(s + 1),
                              strf("c7-seed%d", s + 1), 3000);
    for (const auto& rec : ro.result.history) {
      traces[static_cast<size_t>(s)].push_back(rec.k);
    }
  }
  REQUIRE(traces[0].size() == traces[1].size());
  REQUIRE(traces[0].size() == traces[2].size());

  std::vector<double> med(traces[0].size());
  for (size_t i = 0; i < med.size(); ++i) {
    med[i] = median3(traces[0][i], traces[1][i], traces[2][i]);
  }
  const double k0 = med.front();
  const size_t peak = static_cast<size_t>(
      std::max_element(med.begin(), med.end()) - med.begin());
  const double k_peak = med[peak];
  const double k_late = *std::min_element(med.begin() + static_cast<long>(peak),
                                          med.end());
  const bool ok = k_peak > k0 && k_late < k0;

  CHECK(report("criterion 7: self-sparsification", ok,
               strf("median k: start %.1f, peak %.1f (epoch %zu), later min %.1f",
                    k0, k_peak, peak, k_late)));
}

TEST_CASE("criterion 8: gate entropy decays and early stop triggers") {
  RunOutput ro = run_preset("gate-dynamics-shallow-synth", 3, "c8");
  const auto& hist = ro.result.history;
  const int warmup = preset_config("gate-dynamics-shallow-synth").train.warmup_epochs;
  REQUIRE(static_cast<int>(hist.size()) > warmup);

  double peak = 0.0;
  for (size_t i = static_cast<size_t>(warmup); i < hist.size(); ++i) {
    peak = std::max(peak, hist[i].entropy_bits);
  }
  const bool rises = peak > hist[static_cast<size_t>(warmup)].entropy_bits;

  // Mean entropy over successive 500-epoch windows after warmup must fall
  // monotonically (1%-of-peak slack) once past the peak window.
  std::vector<double> win;
  for (size_t start = static_cast<size_t>(warmup); start < hist.size();
       start += 500) {
    const size_t end = std::min(start + 500, hist.size());
    if (end - start < 100) break;  // ignore a tiny tail window
    double acc = 0.0;
    for (size_t i = start; i < end; ++i) acc += hist[i].entropy_bits;
    win.push_back(acc / static_cast<double>(end - start));
  }
  REQUIRE(win.size() >= 2);
  const size_t wpeak = static_cast<size_t>(
      std::max_element(win.begin(), win.end()) - win.begin());
  bool monotone = true;
  for (size_t j = wpeak; j + 1 < win.size(); ++j) {
    if (win[j + 1] > win[j] + 0.01 * peak) monotone = false;
  }
  const bool decayed = win.back() < 0.10 * peak;

  double max_dec = 0.0;
  for (const auto& rec : hist) max_dec = std::max(max_dec, rec.decisiveness);
  const bool stopped = ro.result.early_stopped && max_dec > 0.99;

  CHECK(report("criterion 8: gate-dynamics diagnostics",
               rises && monotone && decayed && stopped,
               strf("entropy peak %.1f bits, last window %.1f, windows %zu; "
                    "decisiveness %.3f, early stop at epoch %d",
                    peak, win.back(), win.size(), max_dec,
                    ro.result.epochs_run)));
}

TEST_CASE("criterion 9: mdl penalty arithmetic") {
  std::mt19937_64 rng(717171);
  double max_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double beta = 5.0 * frac(0.6180339887498949 * (i + 1));
    const double k = 1000.0 * frac(0.7548776662466927 * (i + 1));
    const int n = 1 + static_cast<int>(rng() % 1000000);
    const double want = beta * k * std::log(static_cast<double>(n)) / (2.0 * n);
    const double got = mdl_penalty(k, beta, n);
    max_dev = std::max(max_dev,
                       std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  const double frozen = 0.03384507717577858;  // 10*ln(1024)/2048
  const bool example_ok = std::abs(mdl_penalty(10.0, 1.0, 1024) - frozen) < 1e-15;

  CHECK(report("criterion 9: mdl arithmetic", max_dev <= 1e-12 && example_ok,
               strf("max dev %.1e over 100 triples, worked example ok %d",
                    max_dev, example_ok ? 1 : 0)));
}

TEST_CASE("criterion 10: basis identities and system oracles") {
  bool unity = true;
  for (int grid : {1, 3, 7, 12}) {
    for (int degree : {1, 2, 3, 5, 7}) {
      const double lo = -0.7 + 0.3 * grid;
      const double hi = lo + 0.9 + 0.1 * degree;
      SplineBasis sb = SplineBasis::make(grid, degree, lo, hi);
      for (int t = 0; t <= 40; ++t) {
        const double x = lo + (hi - lo) * t / 40.0;
        SplineWindow w = eval_spline_basis(sb, x);
        double sv = 0.0, sd = 0.0;
        for (int r = 0; r <= degree; ++r) {
          sv += w.value[static_cast<size_t>(r)];
          sd += w.deriv[static_cast<size_t>(r)];
        }
        if (std::abs(sv - 1.0) > 1e-10 || std::abs(sd) > 1e-9) unity = false;
      }
    }
  }

  bool cheb = true;
  {
    ChebyshevBasis cb{8, -0.4, 2.2};
    std::vector<double> vals(9), ders(9);
    for (int t = 1; t < 40; ++t) {
      const double x = cb.lo + (cb.hi - cb.lo) * t / 40.0;
      eval_chebyshev(cb, x, vals, ders);
      const double u = 2.0 * (x - cb.lo) / (cb.hi - cb.lo) - 1.0;
      for (int p = 0; p <= 8; ++p) {
        if (std::abs(vals[static_cast<size_t>(p)] -
                     std::cos(p * std::acos(u))) > 1e-9) {
          cheb = false;
        }
      }
    }
  }

  bool four = true;
  {
    FourierBasis fb{4};
    std::vector<double> vals(8), ders(8);
    for (int t = 0; t < 25; ++t) {
      const double x = -3.0 + 6.0 * frac(0.6180339887498949 * (t + 1));
      eval_fourier(fb, x, vals, ders);
      for (int q = 1; q <= 4; ++q) {
        const size_t si = static_cast<size_t>(2 * (q - 1));
        if (std::abs(vals[si] - std::sin(q * x)) > 1e-9 ||
            std::abs(vals[si + 1] - std::cos(q * x)) > 1e-9 ||
            std::abs(ders[si] - q * std::cos(q * x)) > 1e-9 ||
            std::abs(ders[si + 1] + q * std::sin(q * x)) > 1e-9) {
          four = false;
        }
      }
    }
  }

  const std::array<double, 2> ik = ikeda_step(0.0, 0.0);
  const bool ikeda_ok = ik[0] == 1.0 && ik[1] == 0.0;
  EcosystemConfig ec;
  const std::array<double, 3> f0 = ecosystem_rhs({0.0, 0.0, 0.0}, ec);
  const std::array<double, 3> fK = ecosystem_rhs({ec.K, 0.0, 0.0}, ec);
  const bool eco_ok = f0[0] == 0.0 && f0[1] == 0.0 && f0[2] == 0.0 &&
                      fK[0] == 0.0 && fK[1] == 0.0 && fK[2] == 0.0;

  CHECK(report("criterion 10: basis identities", unity && cheb && four &&
                                                     ikeda_ok && eco_ok,
               strf("unity %d chebyshev %d fourier %d ikeda %d ecosystem %d",
                    unity ? 1 : 0, cheb ? 1 : 0, four ? 1 : 0, ikeda_ok ? 1 : 0,
                    eco_ok ? 1 : 0)));
}

TEST_CASE("criterion 11: equal seeds reproduce histories byte for byte") {
  RunOutput a = run_preset("sinc-baseline", 11, "c11-a");
  RunOutput b = run_preset("sinc-baseline", 11, "c11-b");
  const std::string ha = slurp(a.run_dir + "/history.csv");
  const std::string hb = slurp(b.run_dir + "/history.csv");
  const bool ok = !ha.empty() && ha == hb;
  CHECK(report("criterion 11: reproducibility", ok,
               strf("history files %zu bytes, identical %d", ha.size(),
                    ok ? 1 : 0)));
}
