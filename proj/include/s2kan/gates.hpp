#pragma once

#include <span>

namespace s2kan {

// Hard Concrete gate. alpha is the learned location; tau/gamma/zeta are the
// temperature and stretch limits shared by every gate in a network.
struct GateParams {
  double alpha = 0.0;
  double tau = 2.0 / 3.0;
  double gamma = -0.1;
  double zeta = 1.1;
};

struct GateSample {
  double z = 0.0;          // clipped stretched sigmoid, in [0,1]
  double dz_dalpha = 0.0;  // pathwise derivative; 0 where the clip is active
};

// One stochastic relaxation draw from uniform noise u (strictly inside
// (0,1); boundary values violate the precondition and throw
// std::invalid_argument).
GateSample sample_gate(const GateParams& g, double u);

// Closed-form E[z] = sigmoid(alpha - tau*log(-gamma/zeta)); no sampling.
double expected_gate(const GateParams& g);

// dE[z]/dalpha = E(1-E); E is a pure sigmoid in alpha.
double expected_gate_grad(const GateParams& g);

// Deterministic inference gate: open iff E[z] > 1/2, i.e. alpha strictly
// above gate_threshold_alpha. At exact equality the gate is closed.
bool threshold_gate(const GateParams& g);
double gate_threshold_alpha(const GateParams& g);  // tau*log(-gamma/zeta)

struct GateStats {
  double entropy_bits = 0.0;   // sum of per-gate binary entropies
  double decisiveness = 0.0;   // fraction with p < 0.01 or p > 0.99
};

// Statistics over a vector of gate probabilities (0*log0 treated as 0).
// An empty input yields entropy 0 and decisiveness 1.
GateStats gate_stats(std::span<const double> probs);

}  // namespace s2kan
