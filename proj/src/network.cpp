#include "s2kan/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "s2kan/common.hpp"

namespace s2kan {

using json = nlohmann::ordered_json;

int DictionaryConfig::terms_per_edge() const {
  int n = static_cast<int>(symbolic.size());
  if (chebyshev_degree >= 0) n += chebyshev_degree + 1;
  n += 2 * fourier_modes;
  if (spline) n += 1;
  return n;
}

void DictionaryConfig::validate() const {
  if (chebyshev_degree < -1) {
    throw std::invalid_argument("dictionary: chebyshev_degree must be >= -1");
  }
  if (fourier_modes < 0) {
    throw std::invalid_argument("dictionary: fourier_modes must be >= 0");
  }
  if (spline) {
    if (spline_grid < 1) {
      throw std::invalid_argument("dictionary: spline_grid must be >= 1");
    }
    if (spline_degree < 1 || spline_degree > kMaxSplineDegree) {
      throw std::invalid_argument(
          strf("dictionary: spline_degree %d outside [1, %d]", spline_degree,
               kMaxSplineDegree));
    }
  }
  if (!(gate_tau > 0.0)) {
    throw std::invalid_argument("dictionary: gate_tau must be positive");
  }
  if (!(gate_gamma < 0.0 && gate_zeta > 1.0)) {
    throw std::invalid_argument(
        "dictionary: gate stretch requires gamma < 0 and zeta > 1");
  }
  if (terms_per_edge() < 1) {
    throw std::invalid_argument("dictionary: no term family enabled");
  }
  if (!complexity_weights.empty() &&
      static_cast<int>(complexity_weights.size()) != terms_per_edge()) {
    throw std::invalid_argument(
        strf("dictionary: %zu complexity weights for %d terms",
             complexity_weights.size(), terms_per_edge()));
  }
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("spec: input_dim must be >= 1");
  if (layers.empty()) throw std::invalid_argument("spec: no layers");
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    if (L.sum < 0 || L.mult < 0 || L.width() < 1) {
      throw std::invalid_argument(
          strf("spec: layer %zu has invalid node counts (%d sum, %d mult)", l,
               L.sum, L.mult));
    }
  }
  dict.validate();
}

NetworkSpec parse_shape(const std::string& shape, const DictionaryConfig& dict) {
  NetworkSpec spec;
  spec.dict = dict;
  std::string s;
  for (char c : shape) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw std::invalid_argument("shape: expected \"[...]\", got " + shape);
  }
  s = s.substr(1, s.size() - 2);
  std::vector<LayerSpec> items;
  size_t pos = 0;
  auto parse_int = [&](const char* what) {
    size_t end = pos;
    if (end < s.size() && (s[end] == '+' || s[end] == '-')) ++end;
    while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end])))
      ++end;
    if (end == pos) {
      throw std::invalid_argument(strf("shape: expected %s in \"%s\"", what,
                                       shape.c_str()));
    }
    int v = std::stoi(s.substr(pos, end - pos));
    pos = end;
    return v;
  };
  bool first_is_tuple = false;
  while (pos < s.size()) {
    LayerSpec item;
    if (s[pos] == '(') {
      ++pos;
      item.sum = parse_int("sum-node count");
      if (pos >= s.size() || s[pos] != ',') {
        throw std::invalid_argument("shape: malformed tuple in " + shape);
      }
      ++pos;
      item.mult = parse_int("product-node count");
      if (pos >= s.size() || s[pos] != ')') {
        throw std::invalid_argument("shape: malformed tuple in " + shape);
      }
      ++pos;
      if (items.empty()) first_is_tuple = true;
    } else {
      item.sum = parse_int("layer width");
    }
    items.push_back(item);
    if (pos < s.size()) {
      if (s[pos] != ',') {
        throw std::invalid_argument("shape: expected ',' in " + shape);
      }
      ++pos;
    }
  }
  if (items.size() < 2) {
    throw std::invalid_argument("shape: need an input width and >= 1 layer");
  }
  if (first_is_tuple) {
    throw std::invalid_argument("shape: input width cannot be a tuple");
  }
  spec.input_dim = items[0].sum;
  spec.layers.assign(items.begin() + 1, items.end());
  spec.validate();
  return spec;
}

std::string format_shape(const NetworkSpec& spec) {
  std::string out = "[" + std::to_string(spec.input_dim);
  for (const auto& L : spec.layers) {
    if (L.mult > 0) {
      out += strf(",(%d,%d)", L.sum, L.mult);
    } else {
      out += "," + std::to_string(L.sum);
    }
  }
  out += "]";
  return out;
}

namespace {

std::vector<Term> dictionary_terms(const DictionaryConfig& d) {
  std::vector<Term> terms;
  terms.reserve(d.terms_per_edge());
  for (Primitive p : d.symbolic) {
    Term t;
    t.kind = TermKind::Symbolic;
    t.prim = p;
    terms.push_back(t);
  }
  if (d.chebyshev_degree >= 0) {
    for (int deg = 0; deg <= d.chebyshev_degree; ++deg) {
      Term t;
      t.kind = TermKind::Chebyshev;
      t.index = deg;
      terms.push_back(t);
    }
  }
  for (int q = 1; q <= d.fourier_modes; ++q) {
    for (int sc = 0; sc < 2; ++sc) {
      Term t;
      t.kind = TermKind::Fourier;
      t.index = 2 * (q - 1) + sc;
      terms.push_back(t);
    }
  }
  if (d.spline) {
    Term t;
    t.kind = TermKind::Spline;
    t.coeffs.assign(static_cast<size_t>(d.spline_grid + d.spline_degree + 1),
                    0.0);
    terms.push_back(t);
  }
  for (size_t m = 0; m < terms.size(); ++m) {
    terms[m].weight =
        d.complexity_weights.empty() ? 1.0 : d.complexity_weights[m];
  }
  return terms;
}

}  // namespace

Network init_network(const NetworkSpec& spec, std::mt19937_64& rng,
                     bool gates_fixed_open) {
  spec.validate();
  Network net;
  net.spec = spec;
  net.gates_fixed_open = gates_fixed_open;
  net.layers.resize(spec.depth());
  std::uniform_real_distribution<double> coeff_dist(-0.05, 0.05);
  std::normal_distribution<double> alpha_dist(0.0, 0.1);
  const auto& d = spec.dict;
  const std::vector<Term> proto = dictionary_terms(d);
  for (int l = 0; l < spec.depth(); ++l) {
    net.layers[l].resize(static_cast<size_t>(spec.edge_count(l)));
    for (Edge& e : net.layers[l]) {
      e.terms = proto;
      e.lo = -1.0;
      e.hi = 1.0;
      if (d.spline) {
        e.spline = SplineBasis::make(d.spline_grid, d.spline_degree, -1.0, 1.0);
      }
      for (size_t m = 0; m < e.terms.size(); ++m) {
        Term& t = e.terms[m];
        if (t.kind == TermKind::Spline) {
          e.spline_term = static_cast<int>(m);
          t.coeffs[0] = 1.0;  // SiLU residual weight
          for (size_t b = 1; b < t.coeffs.size(); ++b) {
            t.coeffs[b] = coeff_dist(rng) / d.spline_grid;
          }
          t.coeffs_grad.assign(t.coeffs.size(), 0.0);
          t.alpha = -1.0;
        } else {
          t.coeff = coeff_dist(rng);
          t.alpha = alpha_dist(rng);
        }
      }
    }
  }
  return net;
}

int count_gates(const Network& net) {
  if (net.gates_fixed_open) return 0;
  int n = 0;
  for (const auto& layer : net.layers) {
    for (const Edge& e : layer) {
      for (const Term& t : e.terms) {
        if (t.kind != TermKind::Fitted) ++n;
      }
    }
  }
  return n;
}

namespace {

// Per-layer flat term offsets; rebuilt cheaply each forward call.
struct LayerLayout {
  std::vector<int> term_offset;  // per edge
  int total_terms = 0;
};

LayerLayout layer_layout(const Network& net, int l) {
  LayerLayout lay;
  lay.term_offset.resize(net.layers[l].size());
  int off = 0;
  for (size_t e = 0; e < net.layers[l].size(); ++e) {
    lay.term_offset[e] = off;
    off += static_cast<int>(net.layers[l][e].terms.size());
  }
  lay.total_terms = off;
  return lay;
}

[[noreturn]] void throw_nonfinite(int l, int input, int slot, int sample) {
  throw numeric_error(
      strf("forward: non-finite value at layer %d edge (in=%d, slot=%d), "
           "sample %d",
           l, input, slot, sample));
}

}  // namespace

void forward(Network& net, const double* X, int batch, Tape& tape,
             const ForwardOptions& opt) {
  const NetworkSpec& spec = net.spec;
  if (batch < 1) throw std::invalid_argument("forward: batch must be >= 1");
  if (X == nullptr) throw std::invalid_argument("forward: null input");
  if (opt.stochastic && !net.gates_fixed_open && !opt.rng && !opt.noise) {
    throw std::invalid_argument(
        "forward: stochastic mode needs an rng or a noise vector");
  }

  const int L = spec.depth();
  tape.batch = batch;
  tape.stochastic = opt.stochastic;
  tape.version = net.version;
  tape.nodes.resize(L + 1);
  tape.pre.resize(L);
  tape.z.resize(L);
  tape.dz.resize(L);
  tape.psi.resize(L);
  tape.dpsi.resize(L);
  tape.sp_silu.resize(L);
  tape.sp_first.resize(L);
  tape.sp_basis.resize(L);

  tape.nodes[0].assign(X, X + static_cast<size_t>(batch) * spec.input_dim);
  for (double v : tape.nodes[0]) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("forward: non-finite network input");
    }
  }

  size_t noise_idx = 0;
  const int P = spec.dict.chebyshev_degree;
  const int Q = spec.dict.fourier_modes;
  std::vector<double> cheb_v(P >= 0 ? P + 1 : 0), cheb_d(P >= 0 ? P + 1 : 0);
  std::vector<double> four_v(2 * Q), four_d(2 * Q);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int l = 0; l < L; ++l) {
    const int W = spec.width(l);
    const int PRE = spec.layers[l].pre_width();
    const int NODES = spec.layers[l].width();
    LayerLayout lay = layer_layout(net, l);
    auto& z = tape.z[l];
    auto& dz = tape.dz[l];
    auto& psi = tape.psi[l];
    auto& dpsi = tape.dpsi[l];
    z.assign(lay.total_terms, 0.0);
    dz.assign(lay.total_terms, 0.0);
    psi.resize(static_cast<size_t>(lay.total_terms) * batch);
    dpsi.resize(static_cast<size_t>(lay.total_terms) * batch);
    const int KD = spec.dict.spline ? spec.dict.spline_degree : 0;
    tape.sp_silu[l].resize(net.layers[l].size() * static_cast<size_t>(batch));
    tape.sp_first[l].resize(net.layers[l].size() * static_cast<size_t>(batch));
    tape.sp_basis[l].resize(net.layers[l].size() * static_cast<size_t>(batch) *
                            (KD + 1));
    auto& pre = tape.pre[l];
    pre.assign(static_cast<size_t>(batch) * PRE, 0.0);

    // Draw or threshold every gate of the layer up front (shared across the
    // batch).
    for (size_t e = 0; e < net.layers[l].size(); ++e) {
      const Edge& edge = net.layers[l][e];
      const int off = lay.term_offset[e];
      for (size_t m = 0; m < edge.terms.size(); ++m) {
        const Term& t = edge.terms[m];
        if (t.kind == TermKind::Fitted) {
          z[off + m] = 1.0;
          continue;
        }
        if (net.gates_fixed_open) {
          z[off + m] = 1.0;
          continue;
        }
        if (opt.stochastic) {
          double u;
          if (opt.noise) {
            if (noise_idx >= opt.noise->size()) {
              throw std::invalid_argument("forward: noise vector too short");
            }
            u = (*opt.noise)[noise_idx++];
          } else {
            u = unit(*opt.rng);
            u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
          }
          GateSample gs = sample_gate(net.gate(t), u);
          z[off + m] = gs.z;
          dz[off + m] = gs.dz_dalpha;
        } else {
          z[off + m] = threshold_gate(net.gate(t)) ? 1.0 : 0.0;
        }
      }
    }

    const double* nodes_in = tape.nodes[l].data();
    for (int slot = 0; slot < PRE; ++slot) {
      for (int input = 0; input < W; ++input) {
        const size_t ei = static_cast<size_t>(slot) * W + input;
        Edge& edge = net.layers[l][ei];
        const int off = lay.term_offset[ei];
        const int nt = static_cast<int>(edge.terms.size());
        double smin = edge.seen_lo;
        double smax = edge.seen_hi;
        ChebyshevBasis cb{P, edge.lo, edge.hi};
        FourierBasis fb{Q};

        for (int b = 0; b < batch; ++b) {
          const double x = nodes_in[static_cast<size_t>(b) * W + input];
          if (opt.track_range) {
            smin = std::min(smin, x);
            smax = std::max(smax, x);
          }
          bool cheb_done = false;
          bool four_done = false;
          double acc = 0.0;
          for (int m = 0; m < nt; ++m) {
            const Term& t = edge.terms[m];
            const double zg = z[off + m];
            if (zg == 0.0 && dz[off + m] == 0.0) continue;
            const size_t pi = static_cast<size_t>(off + m) * batch + b;
            switch (t.kind) {
              case TermKind::Symbolic: {
                ValueDeriv vd = eval_symbolic(t.prim, x, true);
                psi[pi] = vd.value;
                dpsi[pi] = vd.deriv;
                acc += zg * t.coeff * vd.value;
                break;
              }
              case TermKind::Chebyshev: {
                if (!cheb_done) {
                  eval_chebyshev(cb, x, cheb_v, cheb_d);
                  cheb_done = true;
                }
                psi[pi] = cheb_v[t.index];
                dpsi[pi] = cheb_d[t.index];
                acc += zg * t.coeff * cheb_v[t.index];
                break;
              }
              case TermKind::Fourier: {
                if (!four_done) {
                  eval_fourier(fb, x, four_v, four_d);
                  four_done = true;
                }
                psi[pi] = four_v[t.index];
                dpsi[pi] = four_d[t.index];
                acc += zg * t.coeff * four_v[t.index];
                break;
              }
              case TermKind::Spline: {
                ValueDeriv sl = silu(x);
                SplineWindow w = eval_spline_basis(edge.spline, x);
                double v = t.coeffs[0] * sl.value;
                double dv = t.coeffs[0] * sl.deriv;
                for (int r = 0; r <= edge.spline.degree; ++r) {
                  const double c = t.coeffs[1 + w.first + r];
                  v += c * w.value[r];
                  dv += c * w.deriv[r];
                }
                psi[pi] = v;
                dpsi[pi] = dv;
                const size_t si = ei * batch + b;
                tape.sp_silu[l][si] = sl.value;
                tape.sp_first[l][si] = w.first;
                for (int r = 0; r <= edge.spline.degree; ++r) {
                  tape.sp_basis[l][si * (KD + 1) + r] = w.value[r];
                }
                acc += zg * v;
                break;
              }
              case TermKind::Fitted: {
                ValueDeriv vd =
                    eval_symbolic(t.prim, t.fit_a * x + t.fit_b, true);
                psi[pi] = t.fit_c * vd.value + t.fit_d;
                dpsi[pi] = t.fit_c * vd.deriv * t.fit_a;
                acc += psi[pi];
                break;
              }
            }
          }
          if (!std::isfinite(acc)) throw_nonfinite(l, input, slot, b);
          pre[static_cast<size_t>(b) * PRE + slot] += acc;
        }
        if (opt.track_range) {
          edge.seen_lo = smin;
          edge.seen_hi = smax;
        }
      }
    }

    // Collapse incoming slots into node values: sum nodes pass through,
    // product nodes multiply their two slots.
    auto& nodes_out = tape.nodes[l + 1];
    nodes_out.resize(static_cast<size_t>(batch) * NODES);
    const int nsum = spec.layers[l].sum;
    for (int b = 0; b < batch; ++b) {
      const double* prow = &pre[static_cast<size_t>(b) * PRE];
      double* nrow = &nodes_out[static_cast<size_t>(b) * NODES];
      for (int j = 0; j < nsum; ++j) nrow[j] = prow[j];
      for (int t = 0; t < spec.layers[l].mult; ++t) {
        nrow[nsum + t] = prow[nsum + 2 * t] * prow[nsum + 2 * t + 1];
        if (!std::isfinite(nrow[nsum + t])) {
          throw numeric_error(
              strf("forward: non-finite product node %d at layer %d, sample %d",
                   nsum + t, l, b));
        }
      }
    }
  }

  if (opt.noise && noise_idx != opt.noise->size()) {
    throw std::invalid_argument(
        strf("forward: noise vector has %zu entries, consumed %zu",
             opt.noise->size(), noise_idx));
  }
}

void zero_grads(Network& net) {
  for (auto& layer : net.layers) {
    for (Edge& e : layer) {
      for (Term& t : e.terms) {
        t.alpha_grad = 0.0;
        t.coeff_grad = 0.0;
        if (!t.coeffs.empty()) {
          t.coeffs_grad.assign(t.coeffs.size(), 0.0);
        }
      }
    }
  }
}

void backward(Network& net, Tape& tape, const double* dLdY) {
  const NetworkSpec& spec = net.spec;
  if (tape.version != net.version) {
    throw std::logic_error(
        "backward: tape is stale (network structure changed since forward)");
  }
  if (tape.batch < 1 || tape.nodes.empty()) {
    throw std::logic_error("backward: tape has no forward pass");
  }
  const int L = spec.depth();
  const int batch = tape.batch;

  std::vector<double> dnode(
      tape.nodes[L].size());  // gradient wrt layer outputs
  std::copy(dLdY, dLdY + dnode.size(), dnode.begin());

  std::vector<double> dpre, dnode_prev;
  for (int l = L - 1; l >= 0; --l) {
    const int W = spec.width(l);
    const int PRE = spec.layers[l].pre_width();
    const int nsum = spec.layers[l].sum;
    const int KD = spec.dict.spline ? spec.dict.spline_degree : 0;
    LayerLayout lay = layer_layout(net, l);
    const auto& z = tape.z[l];
    const auto& dz = tape.dz[l];
    const auto& psi = tape.psi[l];
    const auto& dpsi = tape.dpsi[l];
    const auto& pre = tape.pre[l];

    dpre.assign(static_cast<size_t>(batch) * PRE, 0.0);
    for (int b = 0; b < batch; ++b) {
      const double* drow = &dnode[static_cast<size_t>(b) * spec.layers[l].width()];
      double* prow = &dpre[static_cast<size_t>(b) * PRE];
      const double* vrow = &pre[static_cast<size_t>(b) * PRE];
      for (int j = 0; j < nsum; ++j) prow[j] = drow[j];
      for (int t = 0; t < spec.layers[l].mult; ++t) {
        prow[nsum + 2 * t] = drow[nsum + t] * vrow[nsum + 2 * t + 1];
        prow[nsum + 2 * t + 1] = drow[nsum + t] * vrow[nsum + 2 * t];
      }
    }

    dnode_prev.assign(static_cast<size_t>(batch) * W, 0.0);
    for (int slot = 0; slot < PRE; ++slot) {
      for (int input = 0; input < W; ++input) {
        const size_t ei = static_cast<size_t>(slot) * W + input;
        Edge& edge = net.layers[l][ei];
        const int off = lay.term_offset[ei];
        const int nt = static_cast<int>(edge.terms.size());
        for (int m = 0; m < nt; ++m) {
          Term& t = edge.terms[m];
          const double zg = z[off + m];
          const double dzg = dz[off + m];
          if (zg == 0.0 && dzg == 0.0) continue;
          const size_t base = static_cast<size_t>(off + m) * batch;
          switch (t.kind) {
            case TermKind::Symbolic:
            case TermKind::Chebyshev:
            case TermKind::Fourier: {
              double cg = 0.0;
              double ag = 0.0;
              for (int b = 0; b < batch; ++b) {
                const double dout = dpre[static_cast<size_t>(b) * PRE + slot];
                if (dout == 0.0) continue;
                cg += dout * zg * psi[base + b];
                ag += dout * psi[base + b];
                dnode_prev[static_cast<size_t>(b) * W + input] +=
                    dout * zg * t.coeff * dpsi[base + b];
              }
              t.coeff_grad += cg;
              t.alpha_grad += dzg * t.coeff * ag;
              break;
            }
            case TermKind::Spline: {
              double ag = 0.0;
              for (int b = 0; b < batch; ++b) {
                const double dout = dpre[static_cast<size_t>(b) * PRE + slot];
                if (dout == 0.0) continue;
                const size_t si = ei * batch + b;
                ag += dout * psi[base + b];
                dnode_prev[static_cast<size_t>(b) * W + input] +=
                    dout * zg * dpsi[base + b];
                t.coeffs_grad[0] += dout * zg * tape.sp_silu[l][si];
                const int first = tape.sp_first[l][si];
                for (int r = 0; r <= edge.spline.degree; ++r) {
                  t.coeffs_grad[1 + first + r] +=
                      dout * zg * tape.sp_basis[l][si * (KD + 1) + r];
                }
              }
              t.alpha_grad += dzg * ag;
              break;
            }
            case TermKind::Fitted: {
              for (int b = 0; b < batch; ++b) {
                const double dout = dpre[static_cast<size_t>(b) * PRE + slot];
                dnode_prev[static_cast<size_t>(b) * W + input] +=
                    dout * dpsi[base + b];
              }
              break;
            }
          }
        }
      }
    }
    dnode.swap(dnode_prev);
  }
  tape.input_grad = dnode;
}

void penalty_backward(Network& net, double coeff) {
  if (net.gates_fixed_open || coeff == 0.0) return;
  for (auto& layer : net.layers) {
    for (Edge& e : layer) {
      for (Term& t : e.terms) {
        if (t.kind == TermKind::Fitted) continue;
        t.alpha_grad += coeff * t.weight * expected_gate_grad(net.gate(t));
      }
    }
  }
}

ExpectedTerms expected_active_terms(const Network& net) {
  ExpectedTerms out;
  for (const auto& layer : net.layers) {
    for (const Edge& e : layer) {
      for (const Term& t : e.terms) {
        double p = 1.0;
        if (!net.gates_fixed_open && t.kind != TermKind::Fitted) {
          p = expected_gate(net.gate(t));
        }
        out.k += p;
        out.k_weighted += t.weight * p;
      }
    }
  }
  return out;
}

double term_param_count(const Network& net, const Term& t) {
  switch (t.kind) {
    case TermKind::Spline:
      // Reference-KAN convention: G+K coefficients plus the two scale
      // weights, even though the merged form stores G+K+1 numbers.
      return net.spec.dict.spline_grid + net.spec.dict.spline_degree + 2;
    case TermKind::Fitted:
      return 4.0;  // a, b, c, d
    default:
      return 1.0;
  }
}

ModelSummary active_summary(const Network& net) {
  ModelSummary s;
  s.p_layer_mean.assign(net.layers.size(), 0.0);
  double sym_sum = 0, cheb_sum = 0, four_sum = 0, spl_sum = 0;
  int sym_n = 0, cheb_n = 0, four_n = 0, spl_n = 0;
  int open_symbolic_like = 0;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    double layer_sum = 0.0;
    int layer_n = 0;
    for (const Edge& e : net.layers[l]) {
      ++s.total_edges;
      bool any_open = false;
      for (const Term& t : e.terms) {
        double p = 1.0;
        if (!net.gates_fixed_open && t.kind != TermKind::Fitted) {
          p = expected_gate(net.gate(t));
        }
        s.gate_probs.push_back(p);
        layer_sum += p;
        ++layer_n;
        s.k_expected += p * term_param_count(net, t);
        switch (t.kind) {
          case TermKind::Symbolic:
          case TermKind::Fitted:
            sym_sum += p;
            ++sym_n;
            break;
          case TermKind::Chebyshev:
            cheb_sum += p;
            ++cheb_n;
            break;
          case TermKind::Fourier:
            four_sum += p;
            ++four_n;
            break;
          case TermKind::Spline:
            spl_sum += p;
            ++spl_n;
            break;
        }
        if (p > 0.5) {
          any_open = true;
          ++s.active_terms;
          s.k_active += term_param_count(net, t);
          if (t.kind != TermKind::Spline) ++open_symbolic_like;
        }
      }
      if (any_open) ++s.active_functions;
    }
    s.p_layer_mean[l] = layer_n > 0 ? layer_sum / layer_n : 0.0;
  }
  if (s.active_terms > 0) {
    s.percent_symbolic = 100.0 * open_symbolic_like / s.active_terms;
  }
  s.p_symbolic_mean = sym_n > 0 ? sym_sum / sym_n : 0.0;
  s.p_chebyshev_mean = cheb_n > 0 ? cheb_sum / cheb_n : 0.0;
  s.p_fourier_mean = four_n > 0 ? four_sum / four_n : 0.0;
  s.p_spline_mean = spl_n > 0 ? spl_sum / spl_n : 0.0;
  return s;
}

void grid_update(Network& net) {
  constexpr int kFitSamples = 512;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    for (size_t ei = 0; ei < net.layers[l].size(); ++ei) {
      Edge& e = net.layers[l][ei];
      const bool has_domain =
          e.spline_term >= 0 || net.spec.dict.chebyshev_degree >= 0;
      if (!has_domain) continue;
      if (!(e.seen_lo <= e.seen_hi)) {
        const int W = net.spec.width(static_cast<int>(l));
        throw std::runtime_error(
            strf("grid_update: edge (layer=%zu, in=%zu, slot=%zu) has no "
                 "recorded input range",
                 l, ei % W, ei / W));
      }
      double half = 0.05 * (e.seen_hi - e.seen_lo);
      if (half < 1e-6) half = 1e-3 * std::max(1.0, std::abs(e.seen_lo));
      const double nlo = e.seen_lo - half;
      const double nhi = e.seen_hi + half;

      if (e.spline_term >= 0) {
        Term& t = e.terms[e.spline_term];
        const SplineBasis old = e.spline;
        const SplineBasis nb = rebuild_knots(old, nlo, nhi);
        const int B = old.basis_count();
        // Sample the old spline part over the old domain and least-squares
        // fit the new basis to it (minimum-norm where columns vanish).
        Eigen::MatrixXd A(kFitSamples, B);
        Eigen::VectorXd y(kFitSamples);
        A.setZero();
        for (int i = 0; i < kFitSamples; ++i) {
          const double x =
              old.lo + (old.hi - old.lo) * i / (kFitSamples - 1.0);
          SplineWindow wo = eval_spline_basis(old, x);
          double v = 0.0;
          for (int r = 0; r <= old.degree; ++r) {
            v += t.coeffs[1 + wo.first + r] * wo.value[r];
          }
          y(i) = v;
          SplineWindow wn = eval_spline_basis(nb, x);
          for (int r = 0; r <= nb.degree; ++r) {
            A(i, wn.first + r) = wn.value[r];
          }
        }
        Eigen::VectorXd c =
            A.completeOrthogonalDecomposition().solve(y);
        for (int bidx = 0; bidx < B; ++bidx) t.coeffs[1 + bidx] = c(bidx);
        e.spline = nb;
      }
      e.lo = nlo;
      e.hi = nhi;
      e.seen_lo = std::numeric_limits<double>::infinity();
      e.seen_hi = -std::numeric_limits<double>::infinity();
    }
  }
  ++net.version;
}

namespace {

json dict_to_json(const DictionaryConfig& d) {
  json j;
  json syms = json::array();
  for (Primitive p : d.symbolic) syms.push_back(primitive_name(p));
  j["symbolic"] = syms;
  j["chebyshev_degree"] = d.chebyshev_degree;
  j["fourier_modes"] = d.fourier_modes;
  j["spline"] = d.spline;
  j["spline_grid"] = d.spline_grid;
  j["spline_degree"] = d.spline_degree;
  j["gate_tau"] = d.gate_tau;
  j["gate_gamma"] = d.gate_gamma;
  j["gate_zeta"] = d.gate_zeta;
  j["complexity_weights"] = d.complexity_weights;
  return j;
}

DictionaryConfig dict_from_json(const json& j) {
  DictionaryConfig d;
  for (const auto& name : j.at("symbolic")) {
    auto p = primitive_from_name(name.get<std::string>());
    if (!p) {
      throw std::runtime_error("checkpoint: unknown primitive \"" +
                               name.get<std::string>() + "\"");
    }
    d.symbolic.push_back(*p);
  }
  d.chebyshev_degree = j.at("chebyshev_degree").get<int>();
  d.fourier_modes = j.at("fourier_modes").get<int>();
  d.spline = j.at("spline").get<bool>();
  d.spline_grid = j.at("spline_grid").get<int>();
  d.spline_degree = j.at("spline_degree").get<int>();
  d.gate_tau = j.at("gate_tau").get<double>();
  d.gate_gamma = j.at("gate_gamma").get<double>();
  d.gate_zeta = j.at("gate_zeta").get<double>();
  d.complexity_weights =
      j.at("complexity_weights").get<std::vector<double>>();
  return d;
}

const char* kind_name(TermKind k) {
  switch (k) {
    case TermKind::Symbolic: return "symbolic";
    case TermKind::Chebyshev: return "chebyshev";
    case TermKind::Fourier: return "fourier";
    case TermKind::Spline: return "spline";
    case TermKind::Fitted: return "fitted";
  }
  return "?";
}

}  // namespace

std::string serialize_to_string(const Network& net) {
  json j;
  j["format"] = "s2kan-checkpoint";
  j["format_version"] = 1;
  j["gates_fixed_open"] = net.gates_fixed_open;
  json spec;
  spec["input_dim"] = net.spec.input_dim;
  json layers = json::array();
  for (const auto& L : net.spec.layers) {
    layers.push_back({{"sum", L.sum}, {"mult", L.mult}});
  }
  spec["layers"] = layers;
  spec["dictionary"] = dict_to_json(net.spec.dict);
  j["spec"] = spec;

  json jlayers = json::array();
  for (const auto& layer : net.layers) {
    json edges = json::array();
    for (const Edge& e : layer) {
      json je;
      je["lo"] = e.lo;
      je["hi"] = e.hi;
      json terms = json::array();
      for (const Term& t : e.terms) {
        json jt;
        jt["kind"] = kind_name(t.kind);
        switch (t.kind) {
          case TermKind::Symbolic:
            jt["prim"] = primitive_name(t.prim);
            jt["alpha"] = t.alpha;
            jt["coeff"] = t.coeff;
            break;
          case TermKind::Chebyshev:
          case TermKind::Fourier:
            jt["index"] = t.index;
            jt["alpha"] = t.alpha;
            jt["coeff"] = t.coeff;
            break;
          case TermKind::Spline:
            jt["alpha"] = t.alpha;
            jt["coeffs"] = t.coeffs;
            break;
          case TermKind::Fitted:
            jt["prim"] = primitive_name(t.prim);
            jt["a"] = t.fit_a;
            jt["b"] = t.fit_b;
            jt["c"] = t.fit_c;
            jt["d"] = t.fit_d;
            break;
        }
        jt["weight"] = t.weight;
        terms.push_back(jt);
      }
      je["terms"] = terms;
      edges.push_back(je);
    }
    jlayers.push_back({{"edges", edges}});
  }
  j["layers"] = jlayers;
  return j.dump(1);
}

void serialize(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("serialize: cannot open " + path);
  out << serialize_to_string(net) << "\n";
  if (!out) throw std::runtime_error("serialize: write failed for " + path);
}

Network deserialize_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw std::runtime_error(strf("checkpoint: malformed JSON (%s)", ex.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "s2kan-checkpoint") {
      throw std::runtime_error("checkpoint: not an s2kan checkpoint");
    }
    const int ver = j.at("format_version").get<int>();
    if (ver != 1) {
      throw std::runtime_error(
          strf("checkpoint: unsupported format_version %d", ver));
    }
    Network net;
    net.gates_fixed_open = j.at("gates_fixed_open").get<bool>();
    const json& spec = j.at("spec");
    net.spec.input_dim = spec.at("input_dim").get<int>();
    for (const auto& jl : spec.at("layers")) {
      net.spec.layers.push_back(
          {jl.at("sum").get<int>(), jl.at("mult").get<int>()});
    }
    net.spec.dict = dict_from_json(spec.at("dictionary"));
    net.spec.validate();

    const json& jlayers = j.at("layers");
    if (static_cast<int>(jlayers.size()) != net.spec.depth()) {
      throw std::runtime_error("checkpoint: layer count mismatch");
    }
    net.layers.resize(net.spec.depth());
    const auto proto = dictionary_terms(net.spec.dict);
    for (int l = 0; l < net.spec.depth(); ++l) {
      const json& edges = jlayers[l].at("edges");
      if (static_cast<int>(edges.size()) != net.spec.edge_count(l)) {
        throw std::runtime_error(
            strf("checkpoint: layer %d expects %d edges, found %zu", l,
                 net.spec.edge_count(l), edges.size()));
      }
      net.layers[l].resize(edges.size());
      for (size_t ei = 0; ei < edges.size(); ++ei) {
        const json& je = edges[ei];
        Edge& e = net.layers[l][ei];
        e.lo = je.at("lo").get<double>();
        e.hi = je.at("hi").get<double>();
        const json& terms = je.at("terms");
        const bool fitted_edge =
            terms.size() >= 1 &&
            terms[0].at("kind").get<std::string>() == "fitted";
        if (!fitted_edge &&
            static_cast<int>(terms.size()) != net.spec.dict.terms_per_edge()) {
          throw std::runtime_error(
              strf("checkpoint: edge %zu of layer %d has %zu terms, expected "
                   "%d",
                   ei, l, terms.size(), net.spec.dict.terms_per_edge()));
        }
        for (size_t m = 0; m < terms.size(); ++m) {
          const json& jt = terms[m];
          const std::string kind = jt.at("kind").get<std::string>();
          Term t;
          if (kind == "fitted") {
            t.kind = TermKind::Fitted;
            auto p = primitive_from_name(jt.at("prim").get<std::string>());
            if (!p) throw std::runtime_error("checkpoint: unknown primitive");
            t.prim = *p;
            t.fit_a = jt.at("a").get<double>();
            t.fit_b = jt.at("b").get<double>();
            t.fit_c = jt.at("c").get<double>();
            t.fit_d = jt.at("d").get<double>();
          } else {
            if (fitted_edge) {
              throw std::runtime_error(
                  "checkpoint: fitted edge mixes in dictionary terms");
            }
            const Term& want = proto[m];
            if (kind != kind_name(want.kind)) {
              throw std::runtime_error(
                  strf("checkpoint: term %zu of edge %zu should be %s, found "
                       "%s",
                       m, ei, kind_name(want.kind), kind.c_str()));
            }
            t.kind = want.kind;
            t.index = want.index;
            if (t.kind == TermKind::Symbolic) {
              auto p = primitive_from_name(jt.at("prim").get<std::string>());
              if (!p || *p != want.prim) {
                throw std::runtime_error("checkpoint: primitive mismatch");
              }
              t.prim = *p;
            }
            if (t.kind == TermKind::Chebyshev || t.kind == TermKind::Fourier) {
              if (jt.at("index").get<int>() != want.index) {
                throw std::runtime_error("checkpoint: term index mismatch");
              }
            }
            t.alpha = jt.at("alpha").get<double>();
            if (t.kind == TermKind::Spline) {
              t.coeffs = jt.at("coeffs").get<std::vector<double>>();
              const int want_n =
                  net.spec.dict.spline_grid + net.spec.dict.spline_degree + 1;
              if (static_cast<int>(t.coeffs.size()) != want_n) {
                throw std::runtime_error(
                    strf("checkpoint: spline term has %zu coefficients, "
                         "expected %d",
                         t.coeffs.size(), want_n));
              }
              t.coeffs_grad.assign(t.coeffs.size(), 0.0);
              e.spline_term = static_cast<int>(m);
            } else {
              t.coeff = jt.at("coeff").get<double>();
            }
          }
          t.weight = jt.at("weight").get<double>();
          e.terms.push_back(std::move(t));
        }
        if (e.spline_term >= 0) {
          e.spline = SplineBasis::make(net.spec.dict.spline_grid,
                                       net.spec.dict.spline_degree, e.lo, e.hi);
        }
      }
    }
    return net;
  } catch (const json::exception& ex) {
    throw std::runtime_error(strf("checkpoint: missing or mistyped field (%s)",
                                  ex.what()));
  }
}

Network deserialize(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("deserialize: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_from_string(ss.str());
}

}  // namespace s2kan
