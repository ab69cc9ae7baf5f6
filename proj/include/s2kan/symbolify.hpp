#pragma once

#include <span>
#include <string>
#include <vector>

#include "s2kan/network.hpp"

namespace s2kan {

// Affine-wrapped candidate fit y ~ c * S(a x + b) + d.
struct CandidateFit {
  Primitive prim = Primitive::Identity;
  double a = 1.0, b = 0.0, c = 1.0, d = 0.0;
  double r2 = 0.0;
  double complexity = 1.0;
  double score = 0.0;  // r2 - score_weight * complexity
};

struct FitOptions {
  int grid_a = 41;  // log-spaced magnitudes in [0.1, 10], both signs
  int grid_b = 41;  // linear over the sample range widened by one width
  double refine_rel_tol = 1e-6;
  int refine_max_iter = 200;
  double score_weight = 0.01;
};

// Least-squares affine fit of one primitive to samples: coarse (a,b) grid
// with closed-form (c,d) per point, then coordinate-descent refinement of
// (a,b) until the relative SSE improvement drops below refine_rel_tol.
// Needs >= 10 samples with non-degenerate x spread (throws
// std::invalid_argument otherwise).
CandidateFit fit_candidate(std::span<const double> xs,
                           std::span<const double> ys, Primitive prim,
                           const FitOptions& opt = {});

// Candidate set used when none is given: the simple closed-form family
// (constants through cubes, reciprocal, trig, exp, log).
std::vector<Primitive> default_symbolify_library();

struct EdgeReplacement {
  int layer = 0, input = 0, slot = 0;
  bool replaced = false;
  CandidateFit fit;       // best surviving candidate (when replaced)
  double best_r2 = 0.0;   // best fit R^2 across the library
};

struct SymbolifyReport {
  std::vector<EdgeReplacement> edges;
  int replaced = 0;
  int kept_dense = 0;
};

// Post-hoc symbolification of a dense (baseline) network: samples each
// edge's activation on 201 even points over its domain, fits every library
// candidate, keeps those with R^2 > threshold, and swaps in the best-scoring
// survivor. Edges with no survivor stay unchanged. Invalidates tapes.
SymbolifyReport symbolify_network(Network& net, double threshold,
                                  const std::vector<Primitive>& library = {},
                                  const FitOptions& opt = {});

// Closed-form printout of a network whose active terms are all symbolic
// (gates thresholded; spline terms render as "spline(x)" if still open).
std::string extract_expression(const Network& net);

}  // namespace s2kan
