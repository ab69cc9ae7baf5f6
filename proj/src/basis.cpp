#include "s2kan/basis.hpp"

#include <algorithm>
#include <cmath>

#include "s2kan/common.hpp"

namespace s2kan {

namespace {

struct PrimitiveInfo {
  Primitive p;
  const char* name;
  const char* display;
  double complexity;
};

constexpr PrimitiveInfo kPrimitives[kPrimitiveCount] = {
    {Primitive::One, "one", "1", 1.0},
    {Primitive::Identity, "identity", "x", 1.0},
    {Primitive::Square, "square", "x^2", 1.0},
    {Primitive::Cube, "cube", "x^3", 1.0},
    {Primitive::Reciprocal, "reciprocal", "1/x", 3.0},
    {Primitive::Sqrt, "sqrt", "sqrt(x)", 2.0},
    {Primitive::Log1p, "log1p", "log(1+x)", 2.0},
    {Primitive::Exp, "exp", "exp(x)", 2.0},
    {Primitive::Sin, "sin", "sin(x)", 2.0},
    {Primitive::Cos, "cos", "cos(x)", 2.0},
    {Primitive::ReciprocalShifted, "reciprocal_shifted", "1/(1+x)", 3.0},
    {Primitive::Bell, "bell", "1/(1+x^2)", 3.0},
};

const PrimitiveInfo& info(Primitive p) { return kPrimitives[static_cast<int>(p)]; }

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

const char* primitive_name(Primitive p) { return info(p).name; }
const char* primitive_display(Primitive p) { return info(p).display; }
double primitive_complexity(Primitive p) { return info(p).complexity; }

std::optional<Primitive> primitive_from_name(std::string_view name) {
  for (const auto& pi : kPrimitives) {
    if (name == pi.name || name == pi.display) return pi.p;
  }
  return std::nullopt;
}

domain_error::domain_error(Primitive p, double x)
    : std::runtime_error(strf("domain violation: %s undefined at x=%.17g",
                              primitive_name(p), x)),
      primitive(p),
      input(x) {}

ValueDeriv silu(double x) {
  double s = 1.0 / (1.0 + std::exp(-x));
  return {x * s, s * (1.0 + x * (1.0 - s))};
}

ValueDeriv eval_symbolic(Primitive p, double x, bool protect) {
  switch (p) {
    case Primitive::One:
      return {1.0, 0.0};
    case Primitive::Identity:
      return {x, 1.0};
    case Primitive::Square:
      return {x * x, 2.0 * x};
    case Primitive::Cube:
      return {x * x * x, 3.0 * x * x};
    case Primitive::Reciprocal: {
      if (!protect) {
        if (x == 0.0) throw domain_error(p, x);
        return {1.0 / x, -1.0 / (x * x)};
      }
      if (std::abs(x) >= kProtectionEps) return {1.0 / x, -1.0 / (x * x)};
      return {sign_of(x) / kProtectionEps, 0.0};
    }
    case Primitive::Sqrt: {
      if (!protect) {
        if (x < 0.0) throw domain_error(p, x);
        double r = std::sqrt(x);
        return {r, x == 0.0 ? HUGE_VAL : 0.5 / r};
      }
      double a = std::abs(x);
      if (a >= kProtectionEps) {
        double r = std::sqrt(a);
        return {r, sign_of(x) * 0.5 / r};
      }
      return {std::sqrt(kProtectionEps), 0.0};
    }
    case Primitive::Log1p: {
      if (!protect) {
        if (x <= -1.0) throw domain_error(p, x);
        return {std::log1p(x), 1.0 / (1.0 + x)};
      }
      if (x + 1.0 > kProtectionEps) return {std::log1p(x), 1.0 / (1.0 + x)};
      double a = std::abs(x) + kProtectionEps;
      return {std::log(a), sign_of(x) / a};
    }
    case Primitive::Exp: {
      if (!protect) {
        double e = std::exp(x);
        return {e, e};
      }
      if (x > kExpClamp) return {std::exp(kExpClamp), 0.0};
      if (x < -kExpClamp) return {std::exp(-kExpClamp), 0.0};
      double e = std::exp(x);
      return {e, e};
    }
    case Primitive::Sin:
      return {std::sin(x), std::cos(x)};
    case Primitive::Cos:
      return {std::cos(x), -std::sin(x)};
    case Primitive::ReciprocalShifted: {
      double d = 1.0 + x;
      if (!protect) {
        if (d == 0.0) throw domain_error(p, x);
        return {1.0 / d, -1.0 / (d * d)};
      }
      if (std::abs(d) >= kProtectionEps) return {1.0 / d, -1.0 / (d * d)};
      return {sign_of(d) / kProtectionEps, 0.0};
    }
    case Primitive::Bell: {
      double d = 1.0 + x * x;
      return {1.0 / d, -2.0 * x / (d * d)};
    }
  }
  throw std::logic_error("eval_symbolic: unknown primitive");
}

void eval_chebyshev(const ChebyshevBasis& basis, double x,
                    std::span<double> values, std::span<double> derivs) {
  const int n = basis.max_degree + 1;
  if (static_cast<int>(values.size()) != n ||
      static_cast<int>(derivs.size()) != n) {
    throw std::invalid_argument("eval_chebyshev: output size mismatch");
  }
  const double width = basis.hi - basis.lo;
  if (!(width >= 1e-12)) {
    throw std::invalid_argument(
        strf("eval_chebyshev: degenerate domain [%g, %g]", basis.lo, basis.hi));
  }
  double t = 2.0 * (x - basis.lo) / width - 1.0;
  double scale = 2.0 / width;  // dt/dx inside the domain
  if (t <= -1.0) {
    scale = (t < -1.0) ? 0.0 : scale;
    t = -1.0;
  } else if (t >= 1.0) {
    scale = (t > 1.0) ? 0.0 : scale;
    t = 1.0;
  }
  values[0] = 1.0;
  derivs[0] = 0.0;
  if (n == 1) return;
  values[1] = t;
  derivs[1] = scale;
  for (int k = 2; k < n; ++k) {
    values[k] = 2.0 * t * values[k - 1] - values[k - 2];
    derivs[k] = 2.0 * (scale * values[k - 1] + t * derivs[k - 1]) - derivs[k - 2];
  }
}

void eval_fourier(const FourierBasis& basis, double x, std::span<double> values,
                  std::span<double> derivs) {
  const int n = 2 * basis.max_mode;
  if (static_cast<int>(values.size()) != n ||
      static_cast<int>(derivs.size()) != n) {
    throw std::invalid_argument("eval_fourier: output size mismatch");
  }
  if (n == 0) return;
  const double s1 = std::sin(x);
  const double c1 = std::cos(x);
  double sq = s1;
  double cq = c1;
  for (int q = 1; q <= basis.max_mode; ++q) {
    if (q > 1) {
      double sn = sq * c1 + cq * s1;
      double cn = cq * c1 - sq * s1;
      sq = sn;
      cq = cn;
    }
    values[2 * (q - 1)] = sq;
    values[2 * (q - 1) + 1] = cq;
    derivs[2 * (q - 1)] = q * cq;
    derivs[2 * (q - 1) + 1] = -q * sq;
  }
}

SplineBasis SplineBasis::make(int grid, int degree, double lo, double hi) {
  if (grid < 1) throw std::invalid_argument("SplineBasis: grid must be >= 1");
  if (degree < 1 || degree > kMaxSplineDegree) {
    throw std::invalid_argument(
        strf("SplineBasis: degree %d outside supported range [1, %d]", degree,
             kMaxSplineDegree));
  }
  if (!(hi - lo >= 1e-12)) {
    throw std::invalid_argument(
        strf("SplineBasis: degenerate interval [%g, %g]", lo, hi));
  }
  SplineBasis b;
  b.grid = grid;
  b.degree = degree;
  b.lo = lo;
  b.hi = hi;
  b.knots.resize(static_cast<size_t>(grid + 2 * degree + 1));
  const double h = (hi - lo) / grid;
  for (int i = 0; i < degree; ++i) b.knots[i] = lo;
  for (int i = 0; i <= grid; ++i) b.knots[degree + i] = (i == grid) ? hi : lo + i * h;
  for (int i = 0; i < degree; ++i) b.knots[degree + grid + 1 + i] = hi;
  return b;
}

SplineBasis rebuild_knots(const SplineBasis& basis, double lo, double hi) {
  return SplineBasis::make(basis.grid, basis.degree, lo, hi);
}

SplineWindow eval_spline_basis(const SplineBasis& basis, double x) {
  const int K = basis.degree;
  const int G = basis.grid;
  const auto& U = basis.knots;
  const bool outside = x < basis.lo || x > basis.hi;
  const double xc = std::clamp(x, basis.lo, basis.hi);

  // Knot span s with U[s] <= xc < U[s+1], s in [K, K+G-1].
  int s = K;
  {
    const double h = (basis.hi - basis.lo) / G;
    int cell = static_cast<int>((xc - basis.lo) / h);
    s = K + std::clamp(cell, 0, G - 1);
    while (s > K && xc < U[s]) --s;
    while (s < K + G - 1 && xc >= U[s + 1]) ++s;
  }

  // Cox-de Boor triangle up to degree K, keeping the degree K-1 row for the
  // derivative formula.
  double left[kMaxSplineDegree + 1];
  double right[kMaxSplineDegree + 1];
  double N[kMaxSplineDegree + 1];
  double low[kMaxSplineDegree + 1] = {0};
  N[0] = 1.0;
  for (int j = 1; j <= K; ++j) {
    left[j] = xc - U[s + 1 - j];
    right[j] = U[s + j] - xc;
    if (j == K) {
      for (int r = 0; r < K; ++r) low[r] = N[r];
    }
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      double temp = N[r] / (right[r + 1] + left[j - r]);
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }

  SplineWindow w;
  w.first = s - K;
  for (int r = 0; r <= K; ++r) {
    w.value[r] = N[r];
    if (outside) {
      w.deriv[r] = 0.0;  // clamped region is constant
      continue;
    }
    const int i = s - K + r;
    double a = 0.0;
    double b = 0.0;
    if (r >= 1) {
      double den = U[i + K] - U[i];
      if (den > 0.0) a = low[r - 1] / den;
    }
    if (r <= K - 1) {
      double den = U[i + K + 1] - U[i + 1];
      if (den > 0.0) b = low[r] / den;
    }
    w.deriv[r] = K * (a - b);
  }
  return w;
}

ValueDeriv eval_spline(const SplineBasis& basis, std::span<const double> coeffs,
                       double x) {
  const int B = basis.basis_count();
  if (static_cast<int>(coeffs.size()) != B + 1) {
    throw std::invalid_argument(
        strf("eval_spline: expected %d coefficients, got %zu", B + 1,
             coeffs.size()));
  }
  ValueDeriv res = silu(x);
  double v = coeffs[0] * res.value;
  double d = coeffs[0] * res.deriv;
  SplineWindow w = eval_spline_basis(basis, x);
  for (int r = 0; r <= basis.degree; ++r) {
    const double c = coeffs[1 + w.first + r];
    v += c * w.value[r];
    d += c * w.deriv[r];
  }
  return {v, d};
}

}  // namespace s2kan
