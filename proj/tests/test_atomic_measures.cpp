#include <doctest.h>

#include <cmath>

#include "rilab/atomic_measures.hpp"
#include "rilab/random.hpp"

using namespace rilab;

namespace {

const Rational kQuarter(1, 4);

MeasureMap half_swap() {
  const std::vector<std::int64_t> perm{2, 1};
  return MeasureMap::cell_permutation(1, perm);
}

MeasureMap squeeze_map() {
  return MeasureMap({MapPiece{{0, Rational(1, 2)}, {0, kQuarter}}, MapPiece{{Rational(1, 2), 1}, {kQuarter, 1}}});
}

/// Midpoints of the pieces of the common refinement of a set of breakpoint lists.
std::vector<Rational> probe_points(std::vector<Rational> breaks, int level) {
  for (std::int64_t k = 0; k <= (std::int64_t{1} << level); ++k) breaks.push_back(dyadic(k, level));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<Rational> mids;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) mids.push_back((breaks[i] + breaks[i + 1]) / 2);
  return mids;
}

}  // namespace

TEST_CASE("p-variation") {
  const AtomicMeasure unit({{kQuarter, 1.0}});
  for (double p : {0.25, 0.5, 1.0}) CHECK(p_variation(unit, p) == 1.0);
  const AtomicMeasure two({{kQuarter, 0.5}, {Rational(3, 4), 0.5}});
  CHECK(p_variation(two, 1.0) == doctest::Approx(1.0));
  CHECK(p_variation(two, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(p_variation(two, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(p_variation(two, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(AtomicMeasure({{kQuarter, 1.0}, {kQuarter, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(AtomicMeasure({{kQuarter, 0.0}}), std::invalid_argument);
  // sorted by |a| nonincreasing
  const AtomicMeasure mixed({{kQuarter, 0.1}, {Rational(1, 2), -3.0}, {Rational(3, 4), 2.0}});
  CHECK(mixed.atoms()[0].weight == -3.0);
  CHECK(mixed.atoms()[2].weight == 0.1);
}

TEST_CASE("dyadic p-variation") {
  const AtomicMeasure two({{kQuarter, 0.5}, {Rational(3, 4), 0.5}});
  const auto a = dyadic_p_variation(two, 0.5, 3);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(separation_level(two) == 1);

  const AtomicMeasure close({{Rational(1, 8), 0.5}, {kQuarter, 0.5}});
  const auto b = dyadic_p_variation(close, 0.5, 4);
  CHECK(b[1] == doctest::Approx(1.0));
  CHECK(b[2] == doctest::Approx(1.0));
  CHECK(b[3] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(separation_level(close) == 3);

  const AtomicMeasure single({{Rational(3, 8), 1.0}});
  for (double v : dyadic_p_variation(single, 0.5, 5)) CHECK(v == 1.0);

  // cancellation inside a cell
  const AtomicMeasure cancel({{Rational(1, 8), 1.0}, {kQuarter, -1.0}});
  CHECK(dyadic_p_variation(cancel, 1.0, 3)[1] == 0.0);
}

TEST_CASE("dyadic p-variation reaches the atom formula exactly") {
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto mu = random_atomic_measure(8, 10, seed);
    const int sep = separation_level(mu);
    for (double p : {0.25, 0.5, 0.75, 1.0}) {
      const auto seq = dyadic_p_variation(mu, p, sep + 2);
      for (int n = 1; n <= sep + 2; ++n) {
        if (seq[static_cast<std::size_t>(n)] < seq[static_cast<std::size_t>(n - 1)]) ++violations;
      }
      const double pv = p_variation(mu, p);
      for (int n = sep; n <= sep + 2; ++n) {
        if (seq[static_cast<std::size_t>(n)] != pv) ++violations;
      }
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("representing kernels") {
  const ElementaryOperator t(squeeze_map(), {0.5, 2.0});
  const auto k = kernel_of(t);
  REQUIRE(k.cells.size() == 2);
  const auto nu = k.at(Rational(1, 4));
  REQUIRE(nu.size() == 1);
  CHECK(nu.atoms()[0].position == Rational(1, 8));
  CHECK(nu.atoms()[0].weight == 0.5);

  const PseudoIntegralOperator sum({ElementaryOperator::scaled_identity(1.0), composition_operator<double>(half_swap())});
  const auto ks = kernel_of(sum);
  const auto nus = ks.at(Rational(1, 8));
  REQUIRE(nus.size() == 2);
  CHECK(nus.atoms()[0].position == Rational(1, 8));
  CHECK(nus.atoms()[1].position == Rational(5, 8));
  CHECK(kernel_functional(ks, 1.0) == doctest::Approx(2.0));
  CHECK(kernel_functional(PseudoIntegralOperator(), 0.5) == 0.0);
  CHECK(kernel_functional(composition_operator<double>(half_swap()), 0.25) == doctest::Approx(1.0));
  CHECK(kernel_of(PseudoIntegralOperator()).at(Rational(1, 3)).empty());
}

TEST_CASE("kernels reproduce the operator") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = to_double(random_elementary_operator(3, seed));
    // swap has no fixed points, so the two maps differ everywhere
    const auto b = compose(a, composition_operator<double>(half_swap()));
    const PseudoIntegralOperator t({a, b});
    const auto k = kernel_of(t);
    for (std::int64_t i = 1; i <= 8; ++i) {
      const auto f = PiecewiseFunction<double>::from_step(StepFunction::basis(3, i));
      const auto tf = apply_operator(t, f);
      for (const Rational& s : probe_points(std::vector<Rational>(tf.breaks().begin(), tf.breaks().end()), 3)) {
        CHECK(k.integrate(f, s) == doctest::Approx(tf(s)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("kernel of a composition") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = to_double(random_elementary_operator(2, seed));
    const auto t = to_double(random_elementary_operator(2, seed + 50));
    const auto st = kernel_of(compose(s, t));
    const auto ks = kernel_of(s), kt = kernel_of(t);
    const auto comp = compose(s, t);
    std::vector<Rational> breaks(comp.map().src_breaks());
    for (const Rational& x : probe_points(breaks, 2)) {
      const auto direct = st.at(x);
      const auto formula = compose_kernels_at(ks, kt, x);
      REQUIRE(direct.size() == formula.size());
      for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(direct.atoms()[i].position == formula.atoms()[i].position);
        CHECK(direct.atoms()[i].weight == doctest::Approx(formula.atoms()[i].weight).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("basis p-sum functional collapses to ||a||") {
  const ElementaryOperator t(squeeze_map(), {0.5, 2.0});
  const auto l1 = NormSpec::lp(1);
  const PiecewiseFunction<double> abs_a({Rational(0), Rational(1, 2), Rational(1)}, {0.5, 2.0});
  for (double p : {0.5, 1.0}) {
    CHECK(basis_p_sum_functional(l1, PseudoIntegralOperator({t}), p, 4) == doctest::Approx(eval_norm(l1, abs_a)));
  }
}

TEST_CASE("K_p experiment") {
  const auto lorentz = reference_lorentz();
  const std::vector<std::int64_t> perm{3, 1, 4, 2};
  const auto pi = composition_operator<double>(MeasureMap::cell_permutation(2, perm));
  const auto r = kp_experiment(lorentz, pi, {.samples = 100});
  CHECK(r.samples == 100);
  CHECK(r.violations == 0);
  CHECK(r.refuted == 0);
  for (std::size_t i = 0; i < r.p_list.size(); ++i) {
    CHECK(r.min[i] == 1.0);
    CHECK(r.max[i] == 1.0);
  }
  CHECK(r.basis_functional == doctest::Approx(1.0));

  const std::vector<int> signs{1, 1};
  const auto lamperti = lamperti_isometry(2, squeeze_map(), signs);
  CHECK(kernel_functional(lamperti, 1.0) == doctest::Approx(0.5 / std::sqrt(2.0) + 0.5 / std::sqrt(2.0 / 3)).epsilon(1e-14));
  CHECK(kernel_functional(lamperti, 1.0) == doctest::Approx(0.9659).epsilon(1e-4));
  const auto l2 = kp_experiment(NormSpec::lp(2), lamperti, {.samples = 20, .p_list = {1.0}});
  CHECK(l2.violations == 0);
  CHECK(l2.refuted == 0);
  CHECK(l2.max[0] < 1);

  const ElementaryOperator not_iso(squeeze_map(), {1.0, 1.0});
  CHECK_THROWS_AS(kp_experiment(NormSpec::lp(2), not_iso), std::invalid_argument);
}
