#include "s2kan/gates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "s2kan/common.hpp"

namespace s2kan {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

GateSample sample_gate(const GateParams& g, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument(
        strf("sample_gate: noise u=%.17g outside (0,1)", u));
  }
  const double logit = std::log(u) - std::log1p(-u);
  const double s = sigmoid((logit + g.alpha) / g.tau);
  const double stretched = s * (g.zeta - g.gamma) + g.gamma;
  GateSample out;
  if (stretched <= 0.0) {
    out.z = 0.0;
  } else if (stretched >= 1.0) {
    out.z = 1.0;
  } else {
    out.z = stretched;
    out.dz_dalpha = (g.zeta - g.gamma) * s * (1.0 - s) / g.tau;
  }
  return out;
}

double gate_threshold_alpha(const GateParams& g) {
  return g.tau * std::log(-g.gamma / g.zeta);
}

double expected_gate(const GateParams& g) {
  return sigmoid(g.alpha - gate_threshold_alpha(g));
}

double expected_gate_grad(const GateParams& g) {
  const double p = expected_gate(g);
  return p * (1.0 - p);
}

bool threshold_gate(const GateParams& g) { return expected_gate(g) > 0.5; }

GateStats gate_stats(std::span<const double> probs) {
  GateStats st;
  if (probs.empty()) {
    st.decisiveness = 1.0;
    return st;
  }
  const double inv_log2 = 1.0 / std::log(2.0);
  size_t decided = 0;
  for (double p : probs) {
    double h = 0.0;
    if (p > 0.0 && p < 1.0) {
      h = -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p)) * inv_log2;
    }
    st.entropy_bits += h;
    if (p < 0.01 || p > 0.99) ++decided;
  }
  st.decisiveness = static_cast<double>(decided) / probs.size();
  return st;
}

}  // namespace s2kan
