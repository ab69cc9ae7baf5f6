#include "s2kan/symbolify.hpp"

#include <algorithm>
#include <cmath>

#include "s2kan/common.hpp"

namespace s2kan {

namespace {

struct LinFit {
  double c = 0.0, d = 0.0, sse = 0.0;
};

// Closed-form least squares of y ~ c*s + d.
LinFit solve_cd(std::span<const double> s, std::span<const double> y,
                double y_mean, double sst) {
  const size_t n = s.size();
  double s_mean = 0.0;
  for (double v : s) s_mean += v;
  s_mean /= n;
  double var_s = 0.0, cov = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double cs = s[i] - s_mean;
    var_s += cs * cs;
    cov += cs * (y[i] - y_mean);
  }
  LinFit f;
  if (var_s < 1e-14 * std::max(1.0, s_mean * s_mean) * n) {
    f.c = 0.0;
    f.d = y_mean;
    f.sse = sst;
    return f;
  }
  f.c = cov / var_s;
  f.d = y_mean - f.c * s_mean;
  f.sse = std::max(0.0, sst - f.c * cov);
  return f;
}

double candidate_sse(Primitive prim, double a, double b,
                     std::span<const double> xs, std::span<const double> ys,
                     double y_mean, double sst, std::vector<double>& scratch,
                     LinFit* out) {
  scratch.resize(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    scratch[i] = eval_symbolic(prim, a * xs[i] + b, true).value;
  }
  LinFit f = solve_cd(scratch, ys, y_mean, sst);
  if (out) *out = f;
  return f.sse;
}

}  // namespace

CandidateFit fit_candidate(std::span<const double> xs,
                           std::span<const double> ys, Primitive prim,
                           const FitOptions& opt) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("fit_candidate: size mismatch");
  }
  if (xs.size() < 10) {
    throw std::invalid_argument(
        strf("fit_candidate: need >= 10 samples, got %zu", xs.size()));
  }
  double x_lo = xs[0], x_hi = xs[0], x_mean = 0.0;
  for (double x : xs) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    x_mean += x;
  }
  x_mean /= xs.size();
  const double width = x_hi - x_lo;
  if (width < 1e-9 * std::max(1.0, std::abs(x_mean))) {
    throw std::invalid_argument(
        "fit_candidate: degenerate sample spread in x");
  }
  double y_mean = 0.0;
  for (double y : ys) y_mean += y;
  y_mean /= ys.size();
  double sst = 0.0;
  for (double y : ys) {
    const double c = y - y_mean;
    sst += c * c;
  }

  std::vector<double> scratch;
  double best_sse = std::numeric_limits<double>::infinity();
  double best_a = 1.0, best_b = 0.0;

  const int na = std::max(2, opt.grid_a);
  const int nb = std::max(2, opt.grid_b);
  const double b_lo = x_lo - width;
  const double b_hi = x_hi + width;
  for (int sign = 0; sign < 2; ++sign) {
    for (int ia = 0; ia < na; ++ia) {
      const double mag = std::pow(10.0, -1.0 + 2.0 * ia / (na - 1));
      const double a = sign ? -mag : mag;
      for (int ib = 0; ib < nb; ++ib) {
        const double b = b_lo + (b_hi - b_lo) * ib / (nb - 1);
        const double sse =
            candidate_sse(prim, a, b, xs, ys, y_mean, sst, scratch, nullptr);
        if (sse < best_sse) {
          best_sse = sse;
          best_a = a;
          best_b = b;
        }
      }
    }
  }

  // Coordinate-descent refinement: multiplicative steps in |a|, additive in
  // b, shrinking on failure.
  double step_log = 2.0 / (na - 1);             // log10 units
  double step_b = (b_hi - b_lo) / (nb - 1);
  for (int iter = 0; iter < opt.refine_max_iter; ++iter) {
    const double before = best_sse;
    const double trial_a[2] = {best_a * std::pow(10.0, step_log),
                               best_a * std::pow(10.0, -step_log)};
    for (double a : trial_a) {
      const double sse =
          candidate_sse(prim, a, best_b, xs, ys, y_mean, sst, scratch, nullptr);
      if (sse < best_sse) {
        best_sse = sse;
        best_a = a;
      }
    }
    const double trial_b[2] = {best_b + step_b, best_b - step_b};
    for (double b : trial_b) {
      const double sse =
          candidate_sse(prim, best_a, b, xs, ys, y_mean, sst, scratch, nullptr);
      if (sse < best_sse) {
        best_sse = sse;
        best_b = b;
      }
    }
    const double denom = std::max(before, 1e-30);
    if ((before - best_sse) / denom < opt.refine_rel_tol) {
      step_log *= 0.5;
      step_b *= 0.5;
      if (step_log < 1e-8 && step_b < 1e-8 * std::max(1.0, width)) break;
    }
  }

  LinFit fin;
  candidate_sse(prim, best_a, best_b, xs, ys, y_mean, sst, scratch, &fin);
  CandidateFit fit;
  fit.prim = prim;
  fit.a = best_a;
  fit.b = best_b;
  fit.c = fin.c;
  fit.d = fin.d;
  if (sst > 0.0) {
    fit.r2 = 1.0 - fin.sse / sst;
  } else {
    fit.r2 = fin.sse <= 1e-24 ? 1.0 : 0.0;
  }
  fit.complexity = primitive_complexity(prim);
  fit.score = fit.r2 - opt.score_weight * fit.complexity;
  return fit;
}

std::vector<Primitive> default_symbolify_library() {
  return {Primitive::One,  Primitive::Identity, Primitive::Square,
          Primitive::Cube, Primitive::Reciprocal, Primitive::Sin,
          Primitive::Cos,  Primitive::Exp,      Primitive::Log1p};
}

namespace {

// Deterministic (thresholded-gate) evaluation of one edge's activation.
double eval_edge(const Network& net, const Edge& edge, double x) {
  double acc = 0.0;
  const int P = net.spec.dict.chebyshev_degree;
  const int Q = net.spec.dict.fourier_modes;
  std::vector<double> cv(P >= 0 ? P + 1 : 0), cd(P >= 0 ? P + 1 : 0);
  std::vector<double> fv(2 * Q), fd(2 * Q);
  bool cheb_done = false, four_done = false;
  for (const Term& t : edge.terms) {
    const bool open = net.gates_fixed_open || t.kind == TermKind::Fitted ||
                      threshold_gate(net.gate(t));
    if (!open) continue;
    switch (t.kind) {
      case TermKind::Symbolic:
        acc += t.coeff * eval_symbolic(t.prim, x, true).value;
        break;
      case TermKind::Chebyshev: {
        if (!cheb_done) {
          eval_chebyshev({P, edge.lo, edge.hi}, x, cv, cd);
          cheb_done = true;
        }
        acc += t.coeff * cv[t.index];
        break;
      }
      case TermKind::Fourier: {
        if (!four_done) {
          eval_fourier({Q}, x, fv, fd);
          four_done = true;
        }
        acc += t.coeff * fv[t.index];
        break;
      }
      case TermKind::Spline:
        acc += eval_spline(edge.spline, t.coeffs, x).value;
        break;
      case TermKind::Fitted:
        acc += t.fit_c * eval_symbolic(t.prim, t.fit_a * x + t.fit_b, true).value +
               t.fit_d;
        break;
    }
  }
  return acc;
}

}  // namespace

SymbolifyReport symbolify_network(Network& net, double threshold,
                                  const std::vector<Primitive>& library,
                                  const FitOptions& opt) {
  const std::vector<Primitive> lib =
      library.empty() ? default_symbolify_library() : library;
  SymbolifyReport report;
  constexpr int kSamples = 201;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const int W = net.spec.width(static_cast<int>(l));
    for (size_t ei = 0; ei < net.layers[l].size(); ++ei) {
      Edge& edge = net.layers[l][ei];
      EdgeReplacement rec;
      rec.layer = static_cast<int>(l);
      rec.input = static_cast<int>(ei) % W;
      rec.slot = static_cast<int>(ei) / W;
      if (edge.terms.size() == 1 && edge.terms[0].kind == TermKind::Fitted) {
        report.edges.push_back(rec);  // already symbolic; leave it alone
        continue;
      }
      for (int i = 0; i < kSamples; ++i) {
        xs[i] = edge.lo + (edge.hi - edge.lo) * i / (kSamples - 1.0);
        ys[i] = eval_edge(net, edge, xs[i]);
      }
      bool have = false;
      CandidateFit best;
      for (Primitive p : lib) {
        CandidateFit f = fit_candidate(xs, ys, p, opt);
        rec.best_r2 = std::max(rec.best_r2, f.r2);
        if (f.r2 > threshold && (!have || f.score > best.score)) {
          best = f;
          have = true;
        }
      }
      if (have) {
        Term t;
        t.kind = TermKind::Fitted;
        t.prim = best.prim;
        t.fit_a = best.a;
        t.fit_b = best.b;
        t.fit_c = best.c;
        t.fit_d = best.d;
        t.weight = 1.0;
        edge.terms.assign(1, t);
        edge.spline_term = -1;
        rec.replaced = true;
        rec.fit = best;
        ++report.replaced;
      } else {
        ++report.kept_dense;
      }
      report.edges.push_back(rec);
    }
  }
  ++net.version;
  return report;
}

namespace {

std::string coef_str(double v) { return strf("%.4g", v); }

std::string apply_primitive(Primitive p, const std::string& u) {
  switch (p) {
    case Primitive::One: return "1";
    case Primitive::Identity: return u;
    case Primitive::Square: return "(" + u + ")^2";
    case Primitive::Cube: return "(" + u + ")^3";
    case Primitive::Reciprocal: return "1/(" + u + ")";
    case Primitive::Sqrt: return "sqrt(" + u + ")";
    case Primitive::Log1p: return "log(1+" + u + ")";
    case Primitive::Exp: return "exp(" + u + ")";
    case Primitive::Sin: return "sin(" + u + ")";
    case Primitive::Cos: return "cos(" + u + ")";
    case Primitive::ReciprocalShifted: return "1/(1+" + u + ")";
    case Primitive::Bell: return "1/(1+(" + u + ")^2)";
  }
  return "?";
}

void append_term(std::string& out, double coeff, const std::string& body) {
  if (body == "1") {
    if (!out.empty()) {
      out += coeff < 0 ? " - " : " + ";
      out += coef_str(std::abs(coeff));
    } else {
      out += coef_str(coeff);
    }
    return;
  }
  if (out.empty()) {
    out += coef_str(coeff) + "*" + body;
  } else {
    out += coeff < 0 ? " - " : " + ";
    out += coef_str(std::abs(coeff)) + "*" + body;
  }
}

std::string edge_expression(const Network& net, const Edge& edge,
                            const std::string& u) {
  std::string out;
  for (const Term& t : edge.terms) {
    const bool open = net.gates_fixed_open || t.kind == TermKind::Fitted ||
                      threshold_gate(net.gate(t));
    if (!open) continue;
    switch (t.kind) {
      case TermKind::Symbolic:
        append_term(out, t.coeff, apply_primitive(t.prim, u));
        break;
      case TermKind::Chebyshev:
        if (t.index == 0) {
          append_term(out, t.coeff, "1");
        } else if (t.index == 1) {
          append_term(out, t.coeff, strf("norm[%g,%g](%s)", edge.lo, edge.hi,
                                         u.c_str()));
        } else {
          append_term(out, t.coeff,
                      strf("T%d(norm[%g,%g](%s))", t.index, edge.lo, edge.hi,
                           u.c_str()));
        }
        break;
      case TermKind::Fourier: {
        const int q = t.index / 2 + 1;
        const char* fn = t.index % 2 == 0 ? "sin" : "cos";
        const std::string arg = q == 1 ? u : strf("%d*%s", q, u.c_str());
        append_term(out, t.coeff, strf("%s(%s)", fn, arg.c_str()));
        break;
      }
      case TermKind::Spline:
        append_term(out, 1.0, "spline(" + u + ")");
        break;
      case TermKind::Fitted: {
        std::string inner = strf("%.4g*%s", t.fit_a, u.c_str());
        if (t.fit_b != 0.0) inner += strf(" %c %.4g", t.fit_b < 0 ? '-' : '+',
                                          std::abs(t.fit_b));
        append_term(out, t.fit_c, apply_primitive(t.prim, inner));
        if (t.fit_d != 0.0) append_term(out, t.fit_d, "1");
        break;
      }
    }
  }
  return out.empty() ? "0" : out;
}

}  // namespace

std::string extract_expression(const Network& net) {
  const NetworkSpec& spec = net.spec;
  std::vector<std::string> names;  // current layer's node names
  for (int i = 0; i < spec.input_dim; ++i) {
    names.push_back("x" + std::to_string(i + 1));
  }
  std::string out;
  for (int l = 0; l < spec.depth(); ++l) {
    const int W = spec.width(l);
    const int PRE = spec.layers[l].pre_width();
    const int nsum = spec.layers[l].sum;
    std::vector<std::string> slot_expr(PRE);
    for (int slot = 0; slot < PRE; ++slot) {
      std::string sum;
      for (int input = 0; input < W; ++input) {
        const Edge& e = net.edge(l, input, slot);
        std::string part = edge_expression(net, e, names[input]);
        if (part == "0") continue;
        if (!sum.empty()) sum += " + ";
        sum += part;
      }
      slot_expr[slot] = sum.empty() ? "0" : sum;
    }
    std::vector<std::string> next;
    const bool last = l == spec.depth() - 1;
    for (int j = 0; j < spec.layers[l].width(); ++j) {
      std::string name = last ? "y" + std::to_string(j + 1)
                              : strf("h%d_%d", l + 1, j + 1);
      std::string body;
      if (j < nsum) {
        body = slot_expr[j];
      } else {
        const int t = j - nsum;
        body = "(" + slot_expr[nsum + 2 * t] + ") * (" +
               slot_expr[nsum + 2 * t + 1] + ")";
      }
      out += name + " = " + body + "\n";
      next.push_back(name);
    }
    names = next;
  }
  return out;
}

}  // namespace s2kan
