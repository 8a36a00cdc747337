#pragma once

// Exact dyadic geometry on [0,1]: cells, step functions, piecewise-constant
// functions on rational partitions, and invertible piecewise-affine maps.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rilab/rational.hpp"

namespace rilab {

inline constexpr int kDefaultLevelCap = 20;

/// A refinement would need breakpoints finer than the configured cap.
class RefinementCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A result has a breakpoint that is not a dyadic rational, so it has no
/// StepFunction representation.
class NonDyadicBreakpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The interval ((k-1)2^-m, k2^-m], closed at 0 for k = 1.
struct DyadicCell {
  int level = 0;
  std::int64_t index = 1;

  DyadicCell() = default;
  DyadicCell(int level, std::int64_t index);

  Rational lo() const { return dyadic(index - 1, level); }
  Rational hi() const { return dyadic(index, level); }
  Rational length() const { return pow2(-level); }

  /// other is a subset of this cell.
  bool contains(const DyadicCell& other) const;
  bool disjoint(const DyadicCell& other) const;

  friend bool operator==(const DyadicCell&, const DyadicCell&) = default;
};

/// Cell of the level-n grid that contains t (D(n,1) is closed at 0).
DyadicCell cell_containing(const Rational& t, int level);

struct Interval {
  Rational lo;
  Rational hi;

  static Interval of(const DyadicCell& c) { return {c.lo(), c.hi()}; }
  Rational length() const { return hi - lo; }
  std::optional<DyadicCell> as_cell() const;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Disjoint dyadic cells of total length one.
class DyadicPartition {
 public:
  explicit DyadicPartition(std::vector<DyadicCell> cells);
  std::span<const DyadicCell> cells() const { return cells_; }

 private:
  std::vector<DyadicCell> cells_;
};

namespace detail {
template <class T>
T as_scalar(const Rational& r) {
  if constexpr (std::is_same_v<T, Rational>) {
    return r;
  } else {
    return static_cast<T>(to_double(r));
  }
}

inline void check_level(int level) {
  if (level < 0 || level > 30) throw std::invalid_argument("level out of range [0, 30]");
}
}  // namespace detail

/// 2^N values, value i on cell (N, i+1).
template <class T>
class BasicStepFunction {
 public:
  BasicStepFunction() : values_(1, T{}) {}

  BasicStepFunction(int level, std::vector<T> values) : level_(level), values_(std::move(values)) {
    detail::check_level(level);
    if (values_.size() != (std::size_t{1} << level)) {
      throw std::invalid_argument("StepFunction: expected 2^level values");
    }
  }

  static BasicStepFunction zero(int level) {
    detail::check_level(level);
    return {level, std::vector<T>(std::size_t{1} << level, T{})};
  }
  static BasicStepFunction constant(int level, T value) {
    detail::check_level(level);
    return {level, std::vector<T>(std::size_t{1} << level, value)};
  }
  /// chi_cell sampled at `level` (cell.level <= level).
  static BasicStepFunction indicator(int level, const DyadicCell& cell) {
    if (cell.level > level) throw std::invalid_argument("indicator: cell finer than level");
    auto f = zero(level);
    const std::size_t span = std::size_t{1} << (level - cell.level);
    const std::size_t first = static_cast<std::size_t>(cell.index - 1) * span;
    for (std::size_t i = 0; i < span; ++i) f.values_[first + i] = T{1};
    return f;
  }
  /// e^N_i, 1-based.
  static BasicStepFunction basis(int level, std::int64_t i) { return indicator(level, DyadicCell(level, i)); }

  int level() const { return level_; }
  std::size_t size() const { return values_.size(); }
  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& operator[](std::size_t i) { return values_[i]; }
  Rational cell_length() const { return pow2(-level_); }

  friend bool operator==(const BasicStepFunction&, const BasicStepFunction&) = default;

 private:
  int level_ = 0;
  std::vector<T> values_;
};

using StepFunction = BasicStepFunction<double>;
using ExactStepFunction = BasicStepFunction<Rational>;

template <class T>
BasicStepFunction<T> refine(const BasicStepFunction<T>& f, int level) {
  if (level < f.level()) throw std::invalid_argument("refine: target level below function level");
  detail::check_level(level);
  const std::size_t rep = std::size_t{1} << (level - f.level());
  std::vector<T> out;
  out.reserve(f.size() * rep);
  for (const T& v : f.values()) out.insert(out.end(), rep, v);
  return {level, std::move(out)};
}

template <class T>
T integral(const BasicStepFunction<T>& f) {
  T sum{};
  for (const T& v : f.values()) sum += v;
  return sum * detail::as_scalar<T>(f.cell_length());
}

/// Refine both to the finer level.
template <class T>
std::pair<BasicStepFunction<T>, BasicStepFunction<T>> common_level(const BasicStepFunction<T>& a,
                                                                   const BasicStepFunction<T>& b) {
  const int level = std::max(a.level(), b.level());
  return {refine(a, level), refine(b, level)};
}

/// Integral of the product f*g.
template <class T>
T pairing(const BasicStepFunction<T>& f, const BasicStepFunction<T>& g) {
  auto [a, b] = common_level(f, g);
  T sum{};
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum * detail::as_scalar<T>(a.cell_length());
}

template <class T>
BasicStepFunction<T> operator+(const BasicStepFunction<T>& f, const BasicStepFunction<T>& g) {
  auto [a, b] = common_level(f, g);
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return {a.level(), std::move(out)};
}

template <class T>
BasicStepFunction<T> operator-(const BasicStepFunction<T>& f, const BasicStepFunction<T>& g) {
  auto [a, b] = common_level(f, g);
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return {a.level(), std::move(out)};
}

template <class T>
BasicStepFunction<T> operator*(const T& c, const BasicStepFunction<T>& f) {
  std::vector<T> out(f.values().begin(), f.values().end());
  for (T& v : out) v *= c;
  return {f.level(), std::move(out)};
}

/// Piecewise-constant function on a partition of [0,1] with rational
/// breakpoints 0 = b_0 < b_1 < ... < b_n = 1; value k on (b_k, b_{k+1}].
template <class T>
class PiecewiseFunction {
 public:
  PiecewiseFunction() : breaks_{Rational(0), Rational(1)}, values_{T{}} {}

  PiecewiseFunction(std::vector<Rational> breaks, std::vector<T> values)
      : breaks_(std::move(breaks)), values_(std::move(values)) {
    if (breaks_.size() != values_.size() + 1 || values_.empty()) {
      throw std::invalid_argument("PiecewiseFunction: need n+1 breakpoints for n values");
    }
    if (breaks_.front() != 0 || breaks_.back() != 1) {
      throw std::invalid_argument("PiecewiseFunction: breakpoints must span [0,1]");
    }
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
      if (!(breaks_[i] < breaks_[i + 1])) {
        throw std::invalid_argument("PiecewiseFunction: breakpoints must increase");
      }
    }
  }

  static PiecewiseFunction from_step(const BasicStepFunction<T>& f) {
    std::vector<Rational> breaks(f.size() + 1);
    const Rational h = f.cell_length();
    for (std::size_t i = 0; i <= f.size(); ++i) breaks[i] = h * static_cast<std::int64_t>(i);
    return {std::move(breaks), std::vector<T>(f.values().begin(), f.values().end())};
  }

  std::span<const Rational> breaks() const { return breaks_; }
  std::span<const T> values() const { return values_; }
  std::size_t pieces() const { return values_.size(); }
  Rational piece_length(std::size_t k) const { return breaks_[k + 1] - breaks_[k]; }

  /// Index of the piece containing s (half-open convention, s = 0 in piece 0).
  std::size_t piece_at(const Rational& s) const {
    if (s <= 0) return 0;
    auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end(), s);
    if (it == breaks_.end()) return values_.size() - 1;
    return static_cast<std::size_t>(it - breaks_.begin()) - 1;
  }

  T operator()(const Rational& s) const { return values_[piece_at(s)]; }

  /// Merge adjacent pieces with equal values.
  PiecewiseFunction simplified() const {
    std::vector<Rational> b{breaks_.front()};
    std::vector<T> v;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!v.empty() && v.back() == values_[k]) {
        b.back() = breaks_[k + 1];
      } else {
        v.push_back(values_[k]);
        b.push_back(breaks_[k + 1]);
      }
    }
    return {std::move(b), std::move(v)};
  }

  /// Finest dyadic level among the breakpoints; throws NonDyadicBreakpoint.
  int dyadic_level_needed() const {
    int level = 0;
    for (const Rational& b : breaks_) {
      auto l = dyadic_level(b);
      if (!l) throw NonDyadicBreakpoint("breakpoint " + to_string(b) + " is not dyadic");
      level = std::max(level, *l);
    }
    return level;
  }

  /// Exact StepFunction representation at the minimal sufficient level (at least min_level).
  BasicStepFunction<T> to_step(int min_level = 0, int cap = kDefaultLevelCap) const {
    const int level = std::max(min_level, dyadic_level_needed());
    if (level > cap) throw RefinementCapExceeded("step representation needs level " + std::to_string(level));
    auto out = BasicStepFunction<T>::zero(level);
    const Rational h = pow2(-level);
    std::size_t cell = 0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const Rational n_cells = (breaks_[k + 1] - breaks_[k]) / h;
      const auto count = static_cast<std::size_t>(boost::multiprecision::numerator(n_cells));
      for (std::size_t j = 0; j < count; ++j) out[cell++] = values_[k];
    }
    return out;
  }

  friend bool operator==(const PiecewiseFunction&, const PiecewiseFunction&) = default;

 private:
  std::vector<Rational> breaks_;
  std::vector<T> values_;
};

/// Sorted union of two breakpoint lists.
std::vector<Rational> merge_breaks(std::span<const Rational> a, std::span<const Rational> b);

/// Values of f on the pieces of a refinement given by `breaks`.
template <class T>
std::vector<T> sample_on(const PiecewiseFunction<T>& f, std::span<const Rational> breaks) {
  std::vector<T> out;
  out.reserve(breaks.size() - 1);
  std::size_t k = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    while (f.breaks()[k + 1] < breaks[i + 1]) ++k;
    out.push_back(f.values()[k]);
  }
  return out;
}

template <class T, class Op>
PiecewiseFunction<T> combine(const PiecewiseFunction<T>& f, const PiecewiseFunction<T>& g, Op op) {
  auto breaks = merge_breaks(f.breaks(), g.breaks());
  auto fv = sample_on(f, breaks);
  auto gv = sample_on(g, breaks);
  std::vector<T> out(fv.size());
  for (std::size_t i = 0; i < fv.size(); ++i) out[i] = op(fv[i], gv[i]);
  return {std::move(breaks), std::move(out)};
}

template <class T>
PiecewiseFunction<T> operator+(const PiecewiseFunction<T>& f, const PiecewiseFunction<T>& g) {
  return combine(f, g, [](const T& x, const T& y) { return x + y; });
}

template <class T>
T integral(const PiecewiseFunction<T>& f) {
  T sum{};
  for (std::size_t k = 0; k < f.pieces(); ++k) sum += f.values()[k] * detail::as_scalar<T>(f.piece_length(k));
  return sum;
}

template <class T>
T pairing(const PiecewiseFunction<T>& f, const PiecewiseFunction<T>& g) {
  return integral(combine(f, g, [](const T& x, const T& y) { return x * y; }));
}

/// One affine branch of a MeasureMap: the increasing affine bijection src -> tgt.
struct MapPiece {
  Interval src;
  Interval tgt;

  /// Radon-Nikodym weight length(src)/length(tgt).
  Rational weight() const { return src.length() / tgt.length(); }
  Rational forward(const Rational& s) const { return tgt.lo + (s - src.lo) * tgt.length() / src.length(); }
  Rational backward(const Rational& t) const { return src.lo + (t - tgt.lo) * src.length() / tgt.length(); }

  friend bool operator==(const MapPiece&, const MapPiece&) = default;
};

/// Invertible piecewise-affine map of [0,1]; src pieces and tgt pieces each
/// partition [0,1]. Pieces are kept sorted by src.
class MeasureMap {
 public:
  explicit MeasureMap(std::vector<MapPiece> pieces);

  static MeasureMap identity();
  static MeasureMap from_cells(const std::vector<std::pair<DyadicCell, DyadicCell>>& pairs);
  /// Level-N cell k (1-based) moves rigidly to cell perm[k-1].
  static MeasureMap cell_permutation(int level, std::span<const std::int64_t> perm);

  std::span<const MapPiece> pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  const MapPiece& piece(std::size_t i) const { return pieces_[i]; }

  /// Index of the piece whose src contains s.
  std::size_t piece_index(const Rational& s) const;
  Rational operator()(const Rational& s) const;

  /// src breakpoints 0 = b_0 < ... < b_n = 1.
  std::vector<Rational> src_breaks() const;

  /// Maximal affine pieces; two maps are equal iff their canonical forms are.
  MeasureMap canonical() const;
  bool same_map(const MeasureMap& other) const { return canonical() == other.canonical(); }

  friend bool operator==(const MeasureMap&, const MeasureMap&) = default;

 private:
  std::vector<MapPiece> pieces_;
};

/// One piece of the common refinement of `first` followed by `second`, with
/// the indices of the pieces it came from.
struct ComposedPiece {
  MapPiece piece;
  std::size_t first = 0;
  std::size_t second = 0;
};

/// Pieces of s -> second(first(s)), sorted by src.
std::vector<ComposedPiece> compose_pieces(const MeasureMap& first, const MeasureMap& second,
                                          int cap = kDefaultLevelCap);

/// s -> second(first(s)) on the common refinement; weights multiply.
MeasureMap compose_maps(const MeasureMap& first, const MeasureMap& second, int cap = kDefaultLevelCap);

MeasureMap invert_map(const MeasureMap& sigma);

bool is_measure_preserving(const MeasureMap& sigma);

/// Rotation by rotations[k] * 2^-finer inside each level-N cell after the
/// cell permutation perm (tau = gamma pi).
MeasureMap automorphism_from(int level, int finer, std::span<const std::int64_t> perm,
                             std::span<const std::int64_t> rotations);

/// Uniform sample from the discretized group Gamma * Pi_P at resolution `finer`.
MeasureMap random_automorphism(int level, int finer, std::uint64_t seed);

/// Random partition into `pieces` dyadic cells of level at most max_level.
DyadicPartition random_dyadic_partition(int max_level, std::size_t pieces, std::uint64_t seed);

/// Random MeasureMap pairing two random dyadic partitions with the same
/// number of cells (generally not measure-preserving).
MeasureMap random_measure_map(int max_level, std::uint64_t seed);

/// f o sigma.
template <class T>
PiecewiseFunction<T> pull_back(const PiecewiseFunction<T>& f, const MeasureMap& sigma, int cap = kDefaultLevelCap) {
  std::vector<Rational> breaks{Rational(0)};
  std::vector<T> values;
  for (const MapPiece& p : sigma.pieces()) {
    std::size_t k = f.piece_at(p.tgt.lo);
    if (f.breaks()[k + 1] <= p.tgt.lo) ++k;  // tgt.lo sits on a breakpoint
    while (true) {
      const Rational t_hi = std::min(f.breaks()[k + 1], p.tgt.hi);
      Rational s_hi = p.backward(t_hi);
      if (denominator_bits(s_hi) > cap + 1) {
        throw RefinementCapExceeded("pull_back: breakpoint " + to_string(s_hi) + " exceeds refinement cap");
      }
      values.push_back(f.values()[k]);
      breaks.push_back(std::move(s_hi));
      if (t_hi == p.tgt.hi) break;
      ++k;
    }
  }
  return PiecewiseFunction<T>(std::move(breaks), std::move(values)).simplified();
}

/// f o sigma as a StepFunction; throws NonDyadicBreakpoint when the result
/// has no dyadic representation.
template <class T>
BasicStepFunction<T> compose_with_map(const BasicStepFunction<T>& f, const MeasureMap& sigma,
                                      int cap = kDefaultLevelCap) {
  return pull_back(PiecewiseFunction<T>::from_step(f), sigma, cap).to_step(0, cap);
}

}  // namespace rilab
