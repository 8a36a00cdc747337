#pragma once

// Weighted composition operators Tf(s) = a(s) f(sigma(s)) and finite sums of
// them, their exact algebra, and numerical operator norms on the level-N
// step-function spaces.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rilab/dyadic_grid.hpp"
#include "rilab/symmetric_norms.hpp"

namespace rilab {

/// Tf(s) = a(s) f(sigma(s)) with a constant and nonzero on each src piece of sigma.
template <class T>
class BasicElementaryOperator {
 public:
  BasicElementaryOperator(MeasureMap map, std::vector<T> multipliers)
      : map_(std::move(map)), multipliers_(std::move(multipliers)) {
    if (multipliers_.size() != map_.size()) {
      throw std::invalid_argument("ElementaryOperator: need one multiplier per piece");
    }
    for (const T& a : multipliers_) {
      if (a == T{}) throw std::invalid_argument("ElementaryOperator: multipliers must be nonzero");
    }
  }

  static BasicElementaryOperator scaled_identity(T scale = T{1}) { return {MeasureMap::identity(), {scale}}; }

  const MeasureMap& map() const { return map_; }
  std::span<const T> multipliers() const { return multipliers_; }
  T multiplier_at(const Rational& s) const { return multipliers_[map_.piece_index(s)]; }

  /// a as a piecewise-constant function on the src partition.
  PiecewiseFunction<T> multiplier_function() const { return {map_.src_breaks(), multipliers_}; }

  /// Merge contiguous affine pieces that share a multiplier.
  BasicElementaryOperator simplified() const {
    std::vector<MapPiece> pieces;
    std::vector<T> mult;
    for (std::size_t i = 0; i < map_.size(); ++i) {
      const MapPiece& p = map_.piece(i);
      if (!pieces.empty()) {
        MapPiece& last = pieces.back();
        if (last.src.hi == p.src.lo && last.tgt.hi == p.tgt.lo && last.weight() == p.weight() &&
            mult.back() == multipliers_[i]) {
          last.src.hi = p.src.hi;
          last.tgt.hi = p.tgt.hi;
          continue;
        }
      }
      pieces.push_back(p);
      mult.push_back(multipliers_[i]);
    }
    return {MeasureMap(std::move(pieces)), std::move(mult)};
  }

  friend bool operator==(const BasicElementaryOperator&, const BasicElementaryOperator&) = default;

 private:
  MeasureMap map_;
  std::vector<T> multipliers_;
};

using ElementaryOperator = BasicElementaryOperator<double>;
using ExactElementaryOperator = BasicElementaryOperator<Rational>;

ElementaryOperator to_double(const ExactElementaryOperator& t);
/// Exact: every double is a dyadic rational.
ExactElementaryOperator to_exact(const ElementaryOperator& t);

/// Random map from random_measure_map with multipliers +-k/4, 1 <= k <= 8.
ExactElementaryOperator random_elementary_operator(int max_level, std::uint64_t seed);

template <class T>
PiecewiseFunction<T> apply_operator(const BasicElementaryOperator<T>& op, const PiecewiseFunction<T>& f,
                           int cap = kDefaultLevelCap) {
  auto pulled = pull_back(f, op.map(), cap);
  return combine(op.multiplier_function(), pulled, [](const T& a, const T& x) { return a * x; }).simplified();
}

/// Tf as a StepFunction; throws NonDyadicBreakpoint when Tf has no dyadic form.
template <class T>
BasicStepFunction<T> apply_operator(const BasicElementaryOperator<T>& op, const BasicStepFunction<T>& f,
                           int cap = kDefaultLevelCap) {
  return apply_operator(op, PiecewiseFunction<T>::from_step(f), cap).to_step(0, cap);
}

/// T^{-1}: map sigma^{-1}, multiplier 1/a on the image of each piece.
template <class T>
BasicElementaryOperator<T> invert(const BasicElementaryOperator<T>& op) {
  std::vector<std::pair<MapPiece, T>> rows;
  for (std::size_t i = 0; i < op.map().size(); ++i) {
    const MapPiece& p = op.map().piece(i);
    rows.push_back({MapPiece{p.tgt, p.src}, T{1} / op.multipliers()[i]});
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first.src.lo < b.first.src.lo; });
  std::vector<MapPiece> pieces;
  std::vector<T> mult;
  for (auto& [p, a] : rows) {
    pieces.push_back(std::move(p));
    mult.push_back(std::move(a));
  }
  return {MeasureMap(std::move(pieces)), std::move(mult)};
}

/// Koethe adjoint T'g = (a o sigma^{-1}) w (g o sigma^{-1}), w the Radon-Nikodym weight.
template <class T>
BasicElementaryOperator<T> adjoint(const BasicElementaryOperator<T>& op) {
  std::vector<std::pair<MapPiece, T>> rows;
  for (std::size_t i = 0; i < op.map().size(); ++i) {
    const MapPiece& p = op.map().piece(i);
    rows.push_back({MapPiece{p.tgt, p.src}, op.multipliers()[i] * detail::as_scalar<T>(p.weight())});
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first.src.lo < b.first.src.lo; });
  std::vector<MapPiece> pieces;
  std::vector<T> mult;
  for (auto& [p, a] : rows) {
    pieces.push_back(std::move(p));
    mult.push_back(std::move(a));
  }
  return {MeasureMap(std::move(pieces)), std::move(mult)};
}

/// (outer o inner) f = outer(inner(f)).
template <class T>
BasicElementaryOperator<T> compose(const BasicElementaryOperator<T>& outer, const BasicElementaryOperator<T>& inner,
                                   int cap = kDefaultLevelCap) {
  // (S T f)(s) = a_S(s) a_T(sigma_S s) f(sigma_T sigma_S s)
  std::vector<MapPiece> pieces;
  std::vector<T> mult;
  for (auto& c : compose_pieces(outer.map(), inner.map(), cap)) {
    pieces.push_back(std::move(c.piece));
    mult.push_back(outer.multipliers()[c.first] * inner.multipliers()[c.second]);
  }
  return BasicElementaryOperator<T>(MeasureMap(std::move(pieces)), std::move(mult)).simplified();
}

/// V_tau f = f o tau.
template <class T = double>
BasicElementaryOperator<T> composition_operator(const MeasureMap& tau) {
  return {tau, std::vector<T>(tau.size(), T{1})};
}

/// Finite sum of elementary operators whose maps differ almost everywhere.
template <class T>
class BasicPseudoIntegralOperator {
 public:
  BasicPseudoIntegralOperator() = default;
  explicit BasicPseudoIntegralOperator(std::vector<BasicElementaryOperator<T>> terms) : terms_(std::move(terms)) {
    check_distinct();
  }

  std::span<const BasicElementaryOperator<T>> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  /// Common refinement of the src partitions of all terms.
  std::vector<Rational> common_breaks() const {
    std::vector<Rational> breaks{Rational(0), Rational(1)};
    for (const auto& t : terms_) breaks = merge_breaks(breaks, t.map().src_breaks());
    return breaks;
  }

 private:
  void check_distinct() const {
    const auto breaks = common_breaks();
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const Rational mid = (breaks[k] + breaks[k + 1]) / 2;
      for (std::size_t m = 0; m < terms_.size(); ++m) {
        for (std::size_t n = m + 1; n < terms_.size(); ++n) {
          const MapPiece& pm = terms_[m].map().piece(terms_[m].map().piece_index(mid));
          const MapPiece& pn = terms_[n].map().piece(terms_[n].map().piece_index(mid));
          // Increasing affine maps that agree at two points agree everywhere.
          if (pm.forward(breaks[k]) == pn.forward(breaks[k]) && pm.forward(mid) == pn.forward(mid)) {
            throw std::invalid_argument("PseudoIntegralOperator: two terms share a map on a cell");
          }
        }
      }
    }
  }

  std::vector<BasicElementaryOperator<T>> terms_;
};

using PseudoIntegralOperator = BasicPseudoIntegralOperator<double>;
using ExactPseudoIntegralOperator = BasicPseudoIntegralOperator<Rational>;

template <class T>
PiecewiseFunction<T> apply_operator(const BasicPseudoIntegralOperator<T>& op, const PiecewiseFunction<T>& f,
                           int cap = kDefaultLevelCap) {
  PiecewiseFunction<T> sum({Rational(0), Rational(1)}, {T{}});
  for (const auto& t : op.terms()) sum = sum + apply_operator(t, f, cap);
  return sum.simplified();
}

template <class T>
BasicStepFunction<T> apply_operator(const BasicPseudoIntegralOperator<T>& op, const BasicStepFunction<T>& f,
                           int cap = kDefaultLevelCap) {
  return apply_operator(op, PiecewiseFunction<T>::from_step(f), cap).to_step(0, cap);
}

/// Linear operator from the level-N step functions into piecewise-constant
/// functions on a fixed output partition, stored by sparse columns.
class DiscreteOperator {
 public:
  using Column = std::vector<std::pair<std::size_t, double>>;

  DiscreteOperator(int domain_level, std::vector<double> out_measures, std::vector<Column> columns);

  int domain_level() const { return domain_level_; }
  std::size_t cols() const { return columns_.size(); }
  std::size_t rows() const { return out_measures_.size(); }
  std::span<const double> out_measures() const { return out_measures_; }
  std::span<const Column> columns() const { return columns_; }

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transpose(std::span<const double> y) const;

 private:
  int domain_level_;
  std::vector<double> out_measures_;
  std::vector<Column> columns_;
};

DiscreteOperator discretize(const ElementaryOperator& op, int level, int cap = kDefaultLevelCap);
DiscreteOperator discretize(const PseudoIntegralOperator& op, int level, int cap = kDefaultLevelCap);
DiscreteOperator identity_operator(int level, double scale = 1.0);
/// I - f (x) u on the level-N span: x -> x - (int f x) u.
DiscreteOperator rank_one_complement(const StepFunction& u, const StepFunction& f, int level);

/// D_s f(t) = f(t/s), f extended by 0 past 1.
struct DilationSpec {
  Rational s;
  explicit DilationSpec(Rational scale);
};

DiscreteOperator dilation_operator(const DilationSpec& s, int level);

enum class NormMethod { kExtremePoints, kMultistartAscent, kAuto };

struct OperatorNormOptions {
  NormMethod method = NormMethod::kAuto;
  int starts = 32;
  int steps = 300;
  double tol = 1e-10;
  std::uint64_t seed = 7;
  /// Largest vertex count enumerated before extreme points are refused.
  std::size_t max_vertices = 1u << 20;
};

struct OperatorNorm {
  double lower = 0;
  std::optional<double> upper;  // set only when certified
  StepFunction witness;
  bool certified = false;
  std::string method;
};

/// Unit-ball vertex enumeration is available for L_1, L_inf and Lorentz domains.
bool has_polytope_ball(const NormSpec& dom);

/// Norm of op as a map from X_N (dom norm) to the output space (cod norm).
OperatorNorm operator_norm(const NormSpec& dom, const NormSpec& cod, const DiscreteOperator& op,
                           const OperatorNormOptions& opt = {});

enum class IsometryVerdict { kCertifiedYes, kCertifiedNo, kNotRefuted };
std::string to_string(IsometryVerdict v);

struct IsometryCertificate {
  IsometryVerdict verdict = IsometryVerdict::kNotRefuted;
  bool exact = false;              // decided in rational arithmetic
  bool floating_fallback = false;  // decided at 1e-12 in floating point
  std::optional<PiecewiseFunction<double>> witness;
  double witness_norm = 0;   // ||f||
  double image_norm = 0;     // ||Tf||
  double discrepancy = 0;    // | ||Tf|| - ||f|| |
  std::size_t samples = 0;
};

struct IsometryOptions {
  double tol = 1e-9;
  int probe_level = 6;
  int random_probes = 64;
  std::uint64_t seed = 11;
};

/// L_p: the Lamperti condition |a|^p w = 1 piecewise (exact when p and a are
/// rational). Other norms: refutation search over cell indicators and random
/// sign combinations.
IsometryCertificate is_isometry(const NormSpec& spec, const ElementaryOperator& op, const IsometryOptions& opt = {});
IsometryCertificate is_isometry(const NormSpec& spec, const ExactElementaryOperator& op,
                                const IsometryOptions& opt = {});

/// a_i = sign_i w_i^{-1/p}.
ElementaryOperator lamperti_isometry(double p, const MeasureMap& sigma, std::span<const int> signs);
/// Rational multipliers when every w_i^{-1/p} is rational (p a positive integer).
std::optional<ExactElementaryOperator> lamperti_isometry_exact(int p, const MeasureMap& sigma,
                                                               std::span<const int> signs);

/// sum_i |a_i|^p length(src_i) in exact arithmetic.
Rational lamperti_integral_exact(const ExactElementaryOperator& op, int p);

/// Full-space L_r norm of an elementary operator: max_i |a_i| w_i^{1/r}.
double elementary_lr_norm(const ElementaryOperator& op, double r);

struct BoydEstimate {
  double p_index = 0;  // p_X, from s -> infinity
  double q_index = 0;  // q_X, from s -> 0
  double slope_large = 0;
  double slope_small = 0;
  std::vector<std::pair<double, double>> dilation_norms;  // (s, ||D_s||)
  bool certified = false;
};

BoydEstimate boyd_indices_estimate(const NormSpec& spec, std::span<const Rational> scales, int level,
                                   double tol = 1e-10);
std::vector<Rational> default_boyd_scales();

struct LrDominationCheck {
  double norm_lr = 0;          // certified full-space L_r norm
  double norm_x_lower = 0;     // lower bound for ||T||_X
  bool holds = false;
  std::optional<PiecewiseFunction<double>> witness;
};

/// ||T||_{L_r} <= ||T||_X + tol, comparing the exact L_r norm with a lower
/// bound for the X norm.
LrDominationCheck verify_lr_domination(const NormSpec& spec, const ElementaryOperator& op, double r, int level = 4,
                            double tol = 1e-8);

/// ratio of the largest to the smallest positive value; f >= 0, f != 0.
double distortion(const StepFunction& f);

struct DistortionRecurrence {
  std::vector<double> sequence;  // h_0 .. h_n
  double tail_max = 0;           // max of h_k for n <= k <= 2n
  double bound = 0;              // kappa^5
  double fixed_point = 0;        // kappa^2
  bool tail_below_bound = false;
};

/// h -> max(kappa sqrt(h), h / kappa).
DistortionRecurrence distortion_recurrence(double h0, double kappa, int n_steps);

}  // namespace rilab
