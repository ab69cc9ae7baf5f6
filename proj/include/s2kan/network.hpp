#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "s2kan/basis.hpp"
#include "s2kan/gates.hpp"

namespace s2kan {

// Per-edge activation dictionary: symbolic primitives, Chebyshev degrees
// 0..P, Fourier modes 1..Q (sin and cos each), optional dense spline+SiLU
// term. chebyshev_degree = -1 disables the family entirely (distinct from
// degree 0, which keeps the constant T_0).
struct DictionaryConfig {
  std::vector<Primitive> symbolic;
  int chebyshev_degree = -1;
  int fourier_modes = 0;
  bool spline = true;
  int spline_grid = 10;
  int spline_degree = 3;
  double gate_tau = 2.0 / 3.0;
  double gate_gamma = -0.1;
  double gate_zeta = 1.1;
  // Optional per-term weights for the weighted complexity penalty, in term
  // order (symbolic, chebyshev, fourier, spline). Empty = all 1.
  std::vector<double> complexity_weights;

  int terms_per_edge() const;
  void validate() const;  // throws std::invalid_argument
};

struct LayerSpec {
  int sum = 0;
  int mult = 0;  // product nodes, arity 2: each consumes two incoming slots
  int width() const { return sum + mult; }
  int pre_width() const { return sum + 2 * mult; }
};

struct NetworkSpec {
  int input_dim = 1;
  std::vector<LayerSpec> layers;  // last entry is the output layer
  DictionaryConfig dict;

  int depth() const { return static_cast<int>(layers.size()); }
  int width(int l) const {  // node count feeding layer l's edges
    return l == 0 ? input_dim : layers[l - 1].width();
  }
  int output_dim() const { return layers.back().width(); }
  int edge_count(int l) const { return width(l) * layers[l].pre_width(); }
  void validate() const;  // throws std::invalid_argument
};

// "[2,(3,1),1]" -> input_dim 2, hidden layer 3 sum + 1 mult nodes, 1 output.
// Plain integers are sum-only layers.
NetworkSpec parse_shape(const std::string& shape, const DictionaryConfig& dict);
std::string format_shape(const NetworkSpec& spec);

enum class TermKind : std::uint8_t { Symbolic, Chebyshev, Fourier, Spline, Fitted };

struct Term {
  TermKind kind = TermKind::Symbolic;
  Primitive prim = Primitive::Identity;  // Symbolic / Fitted
  int index = 0;       // Chebyshev: degree; Fourier: 2*(mode-1) + (0 sin, 1 cos)
  double alpha = 0.0;  // gate location (ignored for Fitted: always open)
  double coeff = 0.0;  // scalar coefficient; unused for Spline/Fitted
  std::vector<double> coeffs;  // Spline: SiLU weight + basis_count coefficients
  double fit_a = 1.0, fit_b = 0.0, fit_c = 1.0, fit_d = 0.0;  // c*S(a x + b)+d
  double weight = 1.0;  // complexity weight in k_weighted / the penalty

  double alpha_grad = 0.0;
  double coeff_grad = 0.0;
  std::vector<double> coeffs_grad;
};

struct Edge {
  std::vector<Term> terms;
  double lo = -1.0;  // shared Chebyshev/spline domain
  double hi = 1.0;
  SplineBasis spline;   // meaningful only when the dictionary has the dense term
  int spline_term = -1; // index into terms, -1 if absent
  // Running input range, collected by range-tracking forwards, consumed
  // (and reset) by grid_update.
  double seen_lo = std::numeric_limits<double>::infinity();
  double seen_hi = -std::numeric_limits<double>::infinity();
};

struct Network {
  NetworkSpec spec;
  // layers[l][e] with e = slot * width(l) + input_index.
  std::vector<std::vector<Edge>> layers;
  bool gates_fixed_open = false;  // baseline mode: every gate is 1
  std::uint64_t version = 0;      // bumped by structural changes; stales tapes

  int n_layers() const { return spec.depth(); }
  Edge& edge(int l, int input, int slot) {
    return layers[l][static_cast<size_t>(slot) * spec.width(l) + input];
  }
  const Edge& edge(int l, int input, int slot) const {
    return layers[l][static_cast<size_t>(slot) * spec.width(l) + input];
  }
  GateParams gate(const Term& t) const {
    return {t.alpha, spec.dict.gate_tau, spec.dict.gate_gamma,
            spec.dict.gate_zeta};
  }
};

// Random initialization: scalar coefficients U(-0.05,0.05), gate locations
// N(0,0.1) except the spline gate at -1, spline SiLU weight 1 with small
// uniform noise on the basis coefficients.
Network init_network(const NetworkSpec& spec, std::mt19937_64& rng,
                     bool gates_fixed_open = false);

int count_gates(const Network& net);  // learnable gates (0 when fixed open)

struct Tape {
  int batch = 0;
  bool stochastic = false;
  std::uint64_t version = 0;
  // nodes[l]: values entering layer l's edges (nodes[0] = inputs); nodes[L]
  // are the network outputs. Row-major batch x width.
  std::vector<std::vector<double>> nodes;
  // pre[l]: incoming-slot sums of layer l, batch x pre_width.
  std::vector<std::vector<double>> pre;
  // Per layer, flat per (edge, term): gate value shared across the batch and
  // its pathwise derivative.
  std::vector<std::vector<double>> z, dz;
  // Per layer, per (edge, term, sample): term value psi (coefficient not
  // applied) and its x-derivative. For the spline term psi bundles the whole
  // dense value (SiLU weight and coefficients applied) since its coefficient
  // gradients go through the side arrays below.
  std::vector<std::vector<double>> psi, dpsi;
  // Spline side arrays, per (edge, sample): SiLU value, window start, window
  // basis values.
  std::vector<std::vector<double>> sp_silu;
  std::vector<std::vector<int>> sp_first;
  std::vector<std::vector<double>> sp_basis;  // (degree+1) per sample
  // Filled by backward: gradient of the loss wrt the inputs, batch x input_dim.
  std::vector<double> input_grad;

  const double* outputs() const { return nodes.back().data(); }
};

struct ForwardOptions {
  bool stochastic = false;          // sample gates (needs rng or noise)
  std::mt19937_64* rng = nullptr;   // draws one uniform per gate
  const std::vector<double>* noise = nullptr;  // pre-drawn, canonical order
  bool track_range = false;         // update edge running ranges
};

// Batched forward pass. X is row-major batch x input_dim; outputs end up in
// tape.nodes.back(). Deterministic mode thresholds gates; stochastic mode
// samples them once per gate, shared across the batch. Throws
// std::invalid_argument on shape mismatch and numeric_error (with edge
// coordinates) on non-finite intermediates.
void forward(Network& net, const double* X, int batch, Tape& tape,
             const ForwardOptions& opt = {});

// Reverse pass for the data term. dLdY is row-major batch x output_dim.
// Accumulates into the term gradient fields (zero them first via
// zero_grads) and fills tape.input_grad. Throws std::logic_error when the
// tape predates a structural change.
void backward(Network& net, Tape& tape, const double* dLdY);

void zero_grads(Network& net);

// Adds the expected-L0 penalty gradient: alpha_grad += coeff * weight * p(1-p)
// for every learnable gate. coeff is beta * ln(n) / (2n).
void penalty_backward(Network& net, double coeff);

struct ExpectedTerms {
  double k = 0.0;           // sum of gate probabilities
  double k_weighted = 0.0;  // complexity-weighted sum
};
ExpectedTerms expected_active_terms(const Network& net);

struct ModelSummary {
  int total_edges = 0;
  int active_functions = 0;   // edges with at least one open gate
  int active_terms = 0;       // open gates
  double k_active = 0.0;      // thresholded parameter count (spline = G+K+2)
  double k_expected = 0.0;    // probability-weighted parameter count
  double percent_symbolic = 0.0;  // open terms drawn from the symbolic/sparse
                                  // families, as a percentage
  std::vector<double> gate_probs;      // every gate's E[z], canonical order
  std::vector<double> p_layer_mean;    // mean gate probability per layer
  double p_symbolic_mean = 0.0;        // family means (0 when family absent)
  double p_chebyshev_mean = 0.0;
  double p_fourier_mean = 0.0;
  double p_spline_mean = 0.0;
};
ModelSummary active_summary(const Network& net);

double term_param_count(const Network& net, const Term& t);

// Moves every edge's Chebyshev/spline domain to its recorded input range
// padded by 5% on each side, refitting spline coefficients by least squares
// to preserve the activation shape on the old domain. Consumes the running
// ranges and invalidates existing tapes. Throws if an edge has no recorded
// range yet.
void grid_update(Network& net);

void serialize(const Network& net, const std::string& path);
Network deserialize(const std::string& path);
std::string serialize_to_string(const Network& net);
Network deserialize_from_string(const std::string& text);

}  // namespace s2kan
