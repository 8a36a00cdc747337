#include "rilab/dyadic_grid.hpp"

#include <numeric>

#include "rilab/random.hpp"

namespace rilab {

DyadicCell::DyadicCell(int level_, std::int64_t index_) : level(level_), index(index_) {
  detail::check_level(level);
  if (index < 1 || index > (std::int64_t{1} << level)) {
    throw std::invalid_argument("DyadicCell: index must lie in [1, 2^level]");
  }
}

bool DyadicCell::contains(const DyadicCell& other) const {
  if (other.level < level) return false;
  return ((other.index - 1) >> (other.level - level)) == index - 1;
}

bool DyadicCell::disjoint(const DyadicCell& other) const { return !contains(other) && !other.contains(*this); }

DyadicCell cell_containing(const Rational& t, int level) {
  if (t < 0 || t > 1) throw std::invalid_argument("cell_containing: point outside [0,1]");
  if (t == 0) return {level, 1};
  const Rational scaled = t * pow2(level);
  BigInt k = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
  if (Rational(k) != scaled) k += 1;  // ceil
  return {level, static_cast<std::int64_t>(k)};
}

std::optional<DyadicCell> Interval::as_cell() const {
  const Rational len = length();
  if (len <= 0) return std::nullopt;
  auto level = dyadic_level(len);
  if (!level || boost::multiprecision::numerator(len) != 1) return std::nullopt;
  const Rational k = lo / len;
  if (boost::multiprecision::denominator(k) != 1) return std::nullopt;
  return DyadicCell(*level, static_cast<std::int64_t>(boost::multiprecision::numerator(k)) + 1);
}

DyadicPartition::DyadicPartition(std::vector<DyadicCell> cells) : cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end(), [](const DyadicCell& a, const DyadicCell& b) { return a.lo() < b.lo(); });
  Rational end = 0;
  for (const auto& c : cells_) {
    if (c.lo() != end) throw std::invalid_argument("DyadicPartition: cells overlap or leave a gap");
    end = c.hi();
  }
  if (end != 1) throw std::invalid_argument("DyadicPartition: total length must be 1");
}

std::vector<Rational> merge_breaks(std::span<const Rational> a, std::span<const Rational> b) {
  std::vector<Rational> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

namespace {

void check_partition(std::vector<Interval> ivs, const char* what) {
  std::sort(ivs.begin(), ivs.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  Rational end = 0;
  for (const auto& iv : ivs) {
    if (!(iv.lo < iv.hi)) throw std::invalid_argument(std::string("MeasureMap: empty ") + what + " interval");
    if (iv.lo != end) throw std::invalid_argument(std::string("MeasureMap: ") + what + " intervals do not partition [0,1]");
    end = iv.hi;
  }
  if (end != 1) throw std::invalid_argument(std::string("MeasureMap: ") + what + " intervals do not cover [0,1]");
}

}  // namespace

MeasureMap::MeasureMap(std::vector<MapPiece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("MeasureMap: no pieces");
  std::sort(pieces_.begin(), pieces_.end(), [](const MapPiece& a, const MapPiece& b) { return a.src.lo < b.src.lo; });
  std::vector<Interval> src, tgt;
  for (const auto& p : pieces_) {
    src.push_back(p.src);
    tgt.push_back(p.tgt);
  }
  check_partition(std::move(src), "src");
  check_partition(std::move(tgt), "tgt");
}

MeasureMap MeasureMap::identity() { return MeasureMap({MapPiece{{0, 1}, {0, 1}}}); }

MeasureMap MeasureMap::from_cells(const std::vector<std::pair<DyadicCell, DyadicCell>>& pairs) {
  std::vector<MapPiece> pieces;
  pieces.reserve(pairs.size());
  for (const auto& [s, t] : pairs) pieces.push_back({Interval::of(s), Interval::of(t)});
  return MeasureMap(std::move(pieces));
}

MeasureMap MeasureMap::cell_permutation(int level, std::span<const std::int64_t> perm) {
  if (perm.size() != (std::size_t{1} << level)) throw std::invalid_argument("cell_permutation: wrong length");
  std::vector<std::pair<DyadicCell, DyadicCell>> pairs;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    pairs.emplace_back(DyadicCell(level, static_cast<std::int64_t>(k) + 1), DyadicCell(level, perm[k]));
  }
  return from_cells(pairs);
}

std::size_t MeasureMap::piece_index(const Rational& s) const {
  if (s <= 0) return 0;
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), s,
                             [](const MapPiece& p, const Rational& x) { return p.src.hi < x; });
  if (it == pieces_.end()) return pieces_.size() - 1;
  return static_cast<std::size_t>(it - pieces_.begin());
}

Rational MeasureMap::operator()(const Rational& s) const { return pieces_[piece_index(s)].forward(s); }

std::vector<Rational> MeasureMap::src_breaks() const {
  std::vector<Rational> out{Rational(0)};
  for (const auto& p : pieces_) out.push_back(p.src.hi);
  return out;
}

MeasureMap MeasureMap::canonical() const {
  std::vector<MapPiece> out;
  for (const auto& p : pieces_) {
    if (!out.empty()) {
      MapPiece& last = out.back();
      const bool contiguous = last.src.hi == p.src.lo && last.tgt.hi == p.tgt.lo;
      if (contiguous && last.weight() == p.weight()) {
        last.src.hi = p.src.hi;
        last.tgt.hi = p.tgt.hi;
        continue;
      }
    }
    out.push_back(p);
  }
  return MeasureMap(std::move(out));
}

std::vector<ComposedPiece> compose_pieces(const MeasureMap& first, const MeasureMap& second, int cap) {
  std::vector<ComposedPiece> out;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const MapPiece& p = first.piece(i);
    std::size_t j = second.piece_index(p.tgt.lo);
    if (second.piece(j).src.hi <= p.tgt.lo) ++j;
    while (j < second.size()) {
      const MapPiece& q = second.piece(j);
      const Rational lo = std::max(p.tgt.lo, q.src.lo);
      const Rational hi = std::min(p.tgt.hi, q.src.hi);
      if (lo < hi) {
        MapPiece piece{{p.backward(lo), p.backward(hi)}, {q.forward(lo), q.forward(hi)}};
        for (const Rational* r : {&piece.src.lo, &piece.src.hi, &piece.tgt.lo, &piece.tgt.hi}) {
          if (denominator_bits(*r) > cap + 1) {
            throw RefinementCapExceeded("compose_maps: endpoint " + to_string(*r) + " exceeds refinement cap");
          }
        }
        out.push_back({std::move(piece), i, j});
      }
      if (q.src.hi >= p.tgt.hi) break;
      ++j;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ComposedPiece& a, const ComposedPiece& b) { return a.piece.src.lo < b.piece.src.lo; });
  return out;
}

MeasureMap compose_maps(const MeasureMap& first, const MeasureMap& second, int cap) {
  std::vector<MapPiece> pieces;
  for (auto& c : compose_pieces(first, second, cap)) pieces.push_back(std::move(c.piece));
  return MeasureMap(std::move(pieces)).canonical();
}

MeasureMap invert_map(const MeasureMap& sigma) {
  std::vector<MapPiece> out;
  out.reserve(sigma.size());
  for (const auto& p : sigma.pieces()) out.push_back({p.tgt, p.src});
  return MeasureMap(std::move(out));
}

bool is_measure_preserving(const MeasureMap& sigma) {
  return std::all_of(sigma.pieces().begin(), sigma.pieces().end(),
                     [](const MapPiece& p) { return p.weight() == 1; });
}

MeasureMap automorphism_from(int level, int finer, std::span<const std::int64_t> perm,
                             std::span<const std::int64_t> rotations) {
  if (finer < level) throw std::invalid_argument("automorphism: finer resolution below level");
  const std::size_t cells = std::size_t{1} << level;
  if (perm.size() != cells || rotations.size() != cells) {
    throw std::invalid_argument("automorphism: need one permutation entry and one rotation per cell");
  }
  const std::int64_t steps = std::int64_t{1} << (finer - level);
  std::vector<MapPiece> gamma;
  for (std::size_t k = 0; k < cells; ++k) {
    const DyadicCell cell(level, static_cast<std::int64_t>(k) + 1);
    const std::int64_t j = rotations[k];
    if (j < 0 || j >= steps) throw std::invalid_argument("automorphism: rotation out of range");
    const Rational lo = cell.lo(), hi = cell.hi();
    if (j == 0) {
      gamma.push_back({{lo, hi}, {lo, hi}});
      continue;
    }
    const Rational shift = dyadic(j, finer);
    gamma.push_back({{lo, hi - shift}, {lo + shift, hi}});
    gamma.push_back({{hi - shift, hi}, {lo, lo + shift}});
  }
  const MeasureMap pi = MeasureMap::cell_permutation(level, perm);
  return compose_maps(pi, MeasureMap(std::move(gamma)), std::max(finer, kDefaultLevelCap));
}

MeasureMap random_automorphism(int level, int finer, std::uint64_t seed) {
  if (finer < level) throw std::invalid_argument("random_automorphism: finer must be >= level");
  Rng rng(seed);
  const std::size_t cells = std::size_t{1} << level;
  std::vector<std::int64_t> perm(cells);
  std::iota(perm.begin(), perm.end(), std::int64_t{1});
  for (std::size_t i = cells; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  std::vector<std::int64_t> rot(cells);
  const std::uint64_t steps = std::uint64_t{1} << (finer - level);
  for (auto& r : rot) r = static_cast<std::int64_t>(rng.index(steps));
  return automorphism_from(level, finer, perm, rot);
}

DyadicPartition random_dyadic_partition(int max_level, std::size_t pieces, std::uint64_t seed) {
  detail::check_level(max_level);
  if (pieces == 0 || pieces > (std::size_t{1} << max_level)) {
    throw std::invalid_argument("random_dyadic_partition: piece count out of range");
  }
  Rng rng(seed);
  std::vector<DyadicCell> cells{DyadicCell(0, 1)};
  while (cells.size() < pieces) {
    std::vector<std::size_t> splittable;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].level < max_level) splittable.push_back(i);
    }
    const DyadicCell c = cells[splittable[rng.index(splittable.size())]];
    std::erase(cells, c);
    cells.emplace_back(c.level + 1, 2 * c.index - 1);
    cells.emplace_back(c.level + 1, 2 * c.index);
  }
  return DyadicPartition(std::move(cells));
}

MeasureMap random_measure_map(int max_level, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t pieces = 1 + rng.index(std::size_t{1} << max_level);
  const auto src = random_dyadic_partition(max_level, pieces, derive_seed(seed, 1));
  const auto tgt = random_dyadic_partition(max_level, pieces, derive_seed(seed, 2));
  std::vector<std::size_t> perm(pieces);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = pieces; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  std::vector<std::pair<DyadicCell, DyadicCell>> pairs;
  for (std::size_t i = 0; i < pieces; ++i) pairs.emplace_back(src.cells()[i], tgt.cells()[perm[i]]);
  return MeasureMap::from_cells(pairs);
}

}  // namespace rilab
