#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace s2kan {

// Clamp applied by protected primitive evaluation (reciprocal magnitude
// floor, sqrt/log argument floor).
inline constexpr double kProtectionEps = 1e-8;
// Protected exp clamps its argument to [-kExpClamp, kExpClamp] so the value
// stays finite on any finite input.
inline constexpr double kExpClamp = 30.0;

enum class Primitive : std::uint8_t {
  One,
  Identity,
  Square,
  Cube,
  Reciprocal,
  Sqrt,
  Log1p,
  Exp,
  Sin,
  Cos,
  ReciprocalShifted,  // 1/(1+x)
  Bell,               // 1/(1+x^2)
};

inline constexpr int kPrimitiveCount = 12;

struct ValueDeriv {
  double value = 0.0;
  double deriv = 0.0;
};

// Identifier used in configs and checkpoints ("reciprocal_shifted", ...).
const char* primitive_name(Primitive p);
// Human form used in printed expressions ("1/(1+x)", ...).
const char* primitive_display(Primitive p);
// Accepts either the identifier or the display form.
std::optional<Primitive> primitive_from_name(std::string_view name);
// Default complexity score: 1 polynomial/constant, 2 smooth transcendental,
// 3 singular (reciprocal family).
double primitive_complexity(Primitive p);

// Thrown by unprotected evaluation outside the primitive's natural domain.
class domain_error : public std::runtime_error {
 public:
  domain_error(Primitive p, double x);
  Primitive primitive;
  double input;
};

// Value and derivative of one primitive. Protected mode is finite (value and
// derivative) for every finite input; unprotected mode is the mathematical
// function and throws domain_error outside its domain.
ValueDeriv eval_symbolic(Primitive p, double x, bool protect = true);

ValueDeriv silu(double x);  // x * sigmoid(x)

// --- Chebyshev ---------------------------------------------------------

struct ChebyshevBasis {
  int max_degree = 0;  // emits T_0..T_max_degree
  double lo = -1.0;
  double hi = 1.0;
};

// values/derivs must have size max_degree+1. Inputs outside [lo,hi] are
// clamped to the boundary first (derivatives are 0 there). Derivatives carry
// the 2/(hi-lo) rescaling factor. Throws std::invalid_argument on a
// degenerate domain (hi-lo < 1e-12).
void eval_chebyshev(const ChebyshevBasis& basis, double x,
                    std::span<double> values, std::span<double> derivs);

// --- Fourier -----------------------------------------------------------

struct FourierBasis {
  int max_mode = 0;  // emits sin(qx), cos(qx) for q = 1..max_mode
};

// Output order: sin(1x), cos(1x), sin(2x), cos(2x), ... (2*max_mode values).
void eval_fourier(const FourierBasis& basis, double x,
                  std::span<double> values, std::span<double> derivs);

// --- B-splines ---------------------------------------------------------

// Clamped uniform B-spline basis: `grid` interior intervals, degree K knots
// repeated K+1 times at each end, G+K basis functions.
struct SplineBasis {
  int grid = 10;
  int degree = 3;
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> knots;  // size grid + 2*degree + 1

  static SplineBasis make(int grid, int degree, double lo, double hi);
  int basis_count() const { return grid + degree; }
};

// Same grid count and degree over a new interval.
SplineBasis rebuild_knots(const SplineBasis& basis, double lo, double hi);

inline constexpr int kMaxSplineDegree = 7;

// Nonzero basis window at x: functions first .. first+degree (global
// indices). Inputs are clamped into [lo,hi]; for strictly exterior inputs
// the derivatives are 0 (the clamped spline is constant there).
struct SplineWindow {
  int first = 0;
  std::array<double, kMaxSplineDegree + 1> value{};
  std::array<double, kMaxSplineDegree + 1> deriv{};
};
SplineWindow eval_spline_basis(const SplineBasis& basis, double x);

// Dense-term evaluation: coeffs[0]*SiLU(x) + sum_i coeffs[1+i]*B_i(x).
// coeffs.size() must be basis_count()+1.
ValueDeriv eval_spline(const SplineBasis& basis, std::span<const double> coeffs,
                       double x);

}  // namespace s2kan
