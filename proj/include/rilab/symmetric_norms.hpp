#pragma once

// Rearrangement-invariant norms on step functions: L_p, Lorentz (q = 1) and
// Orlicz (Luxemburg), their Koethe duals, averaging projections and the
// two-cell monotonicity properties (P) and (P').

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rilab/dyadic_grid.hpp"

namespace rilab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LpNorm {
  double p = 2.0;  // may be +inf
};

/// sum_i f*_(i) W_i over level-L cells, weights split evenly on refinement.
struct LorentzNorm {
  int level = 0;
  std::vector<double> weights;  // nonincreasing, positive, sum 1
};

/// Luxemburg norm of a Young function given by a convex sample table,
/// interpolated linearly and extended past the last sample with the last slope.
struct OrliczNorm {
  std::vector<double> x;
  std::vector<double> phi;

  double operator()(double t) const;
  /// Right derivative.
  double slope(double t) const;
  /// Complementary function sup_x (xy - phi(x)); +inf past the last slope.
  double conjugate(double y) const;
  double max_slope() const;
};

class NormSpec {
 public:
  enum class Kind { kLp, kLorentz, kOrlicz };

  static NormSpec lp(double p);
  static NormSpec lorentz(int level, std::vector<double> weights);
  /// Rescales phi so that phi(1) = 1.
  static NormSpec orlicz(std::vector<double> x, std::vector<double> phi);

  /// `lp <p>` | `lp inf` | `lorentz <L> <W_1> ... <W_2^L>` | `orlicz <n> <x_1> <phi_1> ...`
  static NormSpec parse(std::string_view text);
  std::string to_string() const;

  Kind kind() const;
  bool is_lp() const { return kind() == Kind::kLp; }
  bool is_lp(double p) const { return is_lp() && lp_exponent() == p; }
  double lp_exponent() const { return std::get<LpNorm>(data_).p; }
  const LorentzNorm& lorentz() const { return std::get<LorentzNorm>(data_); }
  const OrliczNorm& orlicz() const { return std::get<OrliczNorm>(data_); }

  /// Finest level at which the norm formula is defined (Lorentz level, else 0).
  int min_level() const { return kind() == Kind::kLorentz ? lorentz().level : 0; }

 private:
  explicit NormSpec(std::variant<LpNorm, LorentzNorm, OrliczNorm> d) : data_(std::move(d)) {}
  std::variant<LpNorm, LorentzNorm, OrliczNorm> data_;
};

/// Norm of a function known only through its values and the measures of the
/// sets carrying them.
double eval_norm(const NormSpec& spec, std::span<const double> values, std::span<const double> measures);
double eval_norm(const NormSpec& spec, const StepFunction& f);
double eval_norm(const NormSpec& spec, const PiecewiseFunction<double>& f);

/// A subgradient of the norm with respect to the values (zero at f = 0).
std::vector<double> norm_gradient(const NormSpec& spec, std::span<const double> values,
                                  std::span<const double> measures);

/// Decreasing rearrangement of |f| on the same grid.
StepFunction decreasing_rearrangement(const StepFunction& f);

/// Averages of f over the level-N cells.
template <class T>
BasicStepFunction<T> conditional_expectation(const BasicStepFunction<T>& f, int level) {
  if (level > f.level()) throw std::invalid_argument("conditional_expectation: level above function level");
  if (level < 0) throw std::invalid_argument("conditional_expectation: negative level");
  const std::size_t block = std::size_t{1} << (f.level() - level);
  auto out = BasicStepFunction<T>::zero(level);
  const T inv = detail::as_scalar<T>(Rational(1, static_cast<long long>(block)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    T sum{};
    for (std::size_t j = 0; j < block; ++j) sum += f[i * block + j];
    out[i] = sum * inv;
  }
  return out;
}

struct DualNorm {
  double value = 0;
  double lower = 0;
  double upper = kInf;
  bool certified = false;
  std::string method;
};

/// sup { int f g : ||f|| <= 1 }. Closed forms for L_p and Lorentz, the
/// Amemiya formula for Orlicz.
DualNorm dual_norm(const NormSpec& spec, const StepFunction& g, double tol = 1e-10);

struct AscentOptions {
  int starts = 16;
  int steps = 500;
  double rel_tol = 1e-10;
  std::uint64_t seed = 1;
};

/// Lower bound for the dual norm by projected ascent over nonnegative
/// decreasing f aligned with the rearrangement of g.
DualNorm dual_norm_ascent(const NormSpec& spec, const StepFunction& g, const AscentOptions& opt = {});

struct PropertyCheck {
  bool holds = false;
  double worst_t = 0;
  double worst_margin = 0;
  std::vector<std::pair<double, double>> margins;  // (t, margin)
};

/// {2^-k : 0 <= k <= 10} u {1.5, 2, 4}
std::vector<double> default_t_grid();

/// ||e^1_1|| < ||e^1_1 + t e^1_2|| for every t on the grid, by more than margin_tol.
PropertyCheck check_property_P(const NormSpec& spec, std::span<const double> t_grid, double margin_tol = 1e-10);
PropertyCheck check_property_P_prime(const NormSpec& spec, std::span<const double> t_grid,
                                     double margin_tol = 1e-10);

/// ||chi_[0,t]|| for dyadic t in (0,1].
double fundamental_function(const NormSpec& spec, const Rational& t, int cap = kDefaultLevelCap);

/// Built-in specs used by the experiments: L_1, L_1.5, L_2, L_3, L_4, L_inf, the
/// level-2 Lorentz (0.4, 0.3, 0.2, 0.1) and a quadratic-tail Orlicz table.
std::vector<NormSpec> builtin_specs();
NormSpec reference_lorentz();

}  // namespace rilab
