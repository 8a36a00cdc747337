#include <doctest.h>

#include "rilab/dyadic_grid.hpp"
#include "rilab/random.hpp"

using namespace rilab;

namespace {

MeasureMap squeeze_map() {
  return MeasureMap({MapPiece{{0, Rational(1, 2)}, {0, Rational(1, 4)}},
                     MapPiece{{Rational(1, 2), 1}, {Rational(1, 4), 1}}});
}

MeasureMap half_swap() {
  const std::vector<std::int64_t> perm{2, 1};
  return MeasureMap::cell_permutation(1, perm);
}

}  // namespace

TEST_CASE("dyadic cells") {
  const DyadicCell c(2, 3);
  CHECK(c.lo() == Rational(1, 2));
  CHECK(c.hi() == Rational(3, 4));
  CHECK(c.length() == Rational(1, 4));
  CHECK(DyadicCell(1, 2).contains(c));
  CHECK(c.disjoint(DyadicCell(2, 4)));
  CHECK_THROWS_AS(DyadicCell(2, 5), std::invalid_argument);
  CHECK_THROWS_AS(DyadicCell(2, 0), std::invalid_argument);
  CHECK(cell_containing(0, 3) == DyadicCell(3, 1));
  CHECK(cell_containing(Rational(1, 4), 2) == DyadicCell(2, 1));
  CHECK(cell_containing(Rational(3, 10), 2) == DyadicCell(2, 2));
  CHECK(Interval{Rational(1, 4), Rational(1, 2)}.as_cell() == DyadicCell(2, 2));
  CHECK_FALSE(Interval{Rational(1, 4), Rational(3, 4)}.as_cell().has_value());
}

TEST_CASE("partitions must tile [0,1]") {
  CHECK_NOTHROW(DyadicPartition({DyadicCell(1, 2), DyadicCell(2, 1), DyadicCell(2, 2)}));
  CHECK_THROWS_AS(DyadicPartition({DyadicCell(1, 1), DyadicCell(2, 1)}), std::invalid_argument);
  CHECK_THROWS_AS(DyadicPartition({DyadicCell(2, 1), DyadicCell(1, 2)}), std::invalid_argument);
}

TEST_CASE("refine") {
  const StepFunction f(1, {1, 3});
  CHECK(refine(f, 2).values()[2] == 3);
  CHECK(refine(f, 2) == StepFunction(2, {1, 1, 3, 3}));
  CHECK(refine(f, 1) == f);
  CHECK(refine(StepFunction::basis(1, 1), 3) == StepFunction(3, {1, 1, 1, 1, 0, 0, 0, 0}));
  CHECK_THROWS_AS(refine(f, 0), std::invalid_argument);
}

TEST_CASE("compose_with_map") {
  const auto f = StepFunction::basis(2, 1);
  CHECK(compose_with_map(f, MeasureMap::identity()) == f);
  CHECK(compose_with_map(StepFunction::basis(1, 1), half_swap()) == StepFunction::basis(1, 2));
  // chi_[0,1/4] o sigma = chi_[0,1/2]
  const auto g = compose_with_map(f, squeeze_map());
  CHECK(g == StepFunction::basis(1, 1));
}

TEST_CASE("compose and invert maps") {
  const auto s = squeeze_map();
  CHECK(compose_maps(s, invert_map(s)).same_map(MeasureMap::identity()));
  CHECK(compose_maps(MeasureMap::identity(), s) == s);
  CHECK(compose_maps(half_swap(), half_swap()).same_map(MeasureMap::identity()));
  CHECK(invert_map(MeasureMap::identity()) == MeasureMap::identity());
  const auto inv = invert_map(s);
  CHECK(inv.piece(0).src == Interval{0, Rational(1, 4)});
  CHECK(inv.piece(0).tgt == Interval{0, Rational(1, 2)});
  CHECK(inv.piece(1).weight() == Rational(3, 2));
  CHECK(invert_map(inv) == s);
  // weights multiply along a composition
  const auto ss = compose_maps(s, s);
  CHECK(ss(Rational(1, 2)) == Rational(1, 8));
  CHECK(ss.piece(0).weight() == 4);
}

TEST_CASE("measure preservation") {
  CHECK(is_measure_preserving(MeasureMap::identity()));
  CHECK(is_measure_preserving(half_swap()));
  CHECK_FALSE(is_measure_preserving(squeeze_map()));
}

TEST_CASE("random automorphisms") {
  const std::vector<std::int64_t> id{1, 2}, zero{0, 0};
  CHECK(automorphism_from(1, 3, id, zero).same_map(MeasureMap::identity()));
  const auto a = random_automorphism(1, 2, 42);
  CHECK(a == random_automorphism(1, 2, 42));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = random_automorphism(2, 5, seed);
    CHECK(is_measure_preserving(t));
    // rearrangement: the distribution of f o t equals that of f
    Rng rng(seed);
    auto f = StepFunction::zero(5);
    for (auto& v : f.values()) v = static_cast<double>(rng.index(4));
    auto g = compose_with_map(f, t);
    auto a1 = std::vector<double>(f.values().begin(), f.values().end());
    auto a2 = std::vector<double>(g.values().begin(), g.values().end());
    std::sort(a1.begin(), a1.end());
    std::sort(a2.begin(), a2.end());
    CHECK(a1 == a2);
    CHECK(integral(g) == integral(f));
  }
  CHECK_THROWS_AS(random_automorphism(3, 2, 1), std::invalid_argument);
}

TEST_CASE("composition is associative") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = random_automorphism(2, 4, seed);
    const auto b = random_automorphism(1, 3, seed + 100);
    const auto c = compose_maps(squeeze_map(), random_automorphism(2, 3, seed + 200));
    CHECK(compose_maps(compose_maps(a, b), c) == compose_maps(a, compose_maps(b, c)));
  }
}

TEST_CASE("non-dyadic breakpoints are representable as piecewise functions only") {
  // rotate by 1/8, then squeeze: the preimage of [0,1/2] ends at 13/24
  const std::vector<std::int64_t> id{1};
  const std::vector<std::int64_t> rot{1};
  const auto gamma = automorphism_from(0, 3, id, rot);
  const auto m = compose_maps(gamma, squeeze_map());
  const auto pf = pull_back(PiecewiseFunction<Rational>::from_step(ExactStepFunction::basis(1, 1)), m);
  CHECK(pf.breaks()[1] == Rational(13, 24));
  CHECK_THROWS_AS(pf.dyadic_level_needed(), NonDyadicBreakpoint);
  CHECK(integral(pf) == Rational(2, 3));
}

TEST_CASE("refinement cap") {
  CHECK_THROWS_AS(compose_with_map(StepFunction::basis(10, 3), MeasureMap::identity(), 5), RefinementCapExceeded);
}
