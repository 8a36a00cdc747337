#include <doctest.h>

#include <cmath>

#include "rilab/operator_algebra.hpp"
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

using ExactFn = PiecewiseFunction<Rational>;

ExactFn exact_basis(int level, std::int64_t i) { return ExactFn::from_step(ExactStepFunction::basis(level, i)); }

}  // namespace

TEST_CASE("apply") {
  const auto f = StepFunction(2, {0.5, -1, 3, 2});
  CHECK(apply_operator(ElementaryOperator::scaled_identity(1.0), f) == f);
  const ElementaryOperator flip(half_swap(), {-1.0, -1.0});
  CHECK(apply_operator(flip, StepFunction::basis(1, 1)) == -1.0 * StepFunction::basis(1, 2));
  const ElementaryOperator t(squeeze_map(), {2.0, 1.0});
  CHECK(apply_operator(t, StepFunction::basis(2, 1)) == 2.0 * StepFunction::basis(1, 1));
  CHECK_THROWS_AS(ElementaryOperator(squeeze_map(), {2.0, 0.0}), std::invalid_argument);
}

TEST_CASE("invert") {
  const auto inv = invert(ExactElementaryOperator::scaled_identity(2));
  CHECK(inv.multipliers()[0] == Rational(1, 2));
  const ExactElementaryOperator t(half_swap(), {3, -1});
  const auto ti = invert(t);
  CHECK(ti.multipliers()[0] == -1);
  CHECK(ti.multipliers()[1] == Rational(1, 3));
  CHECK(compose(ti, t) == ExactElementaryOperator::scaled_identity(1));
  Rng rng(1);
  const auto tf = to_double(t);
  for (int k = 0; k < 50; ++k) {
    auto f = StepFunction::zero(3);
    for (auto& v : f.values()) v = static_cast<double>(static_cast<int>(rng.index(17)) - 8);
    CHECK(apply_operator(invert(tf), apply_operator(tf, f)) == f);
  }
}

TEST_CASE("adjoint") {
  const auto id = ExactElementaryOperator::scaled_identity(1);
  CHECK(adjoint(id) == id);
  const auto swap1 = composition_operator<Rational>(half_swap());
  CHECK(adjoint(swap1).map().same_map(invert_map(half_swap())));
  const ExactElementaryOperator t(squeeze_map(), {1, 1});
  const auto ta = adjoint(t);
  CHECK(ta.map() == invert_map(squeeze_map()));
  CHECK(ta.multipliers()[0] == 2);
  CHECK(ta.multipliers()[1] == Rational(2, 3));
  for (std::int64_t i = 1; i <= 4; ++i) {
    for (std::int64_t j = 1; j <= 4; ++j) {
      CHECK(pairing(apply_operator(t, exact_basis(2, i)), exact_basis(2, j)) ==
            pairing(exact_basis(2, i), apply_operator(ta, exact_basis(2, j))));
    }
  }
}

TEST_CASE("exact algebra on random operators") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_elementary_operator(3, seed);
    const auto t = random_elementary_operator(3, seed + 1000);
    CHECK(invert(compose(s, t)) == compose(invert(t), invert(s)));
    CHECK(compose(invert(s), s) == ExactElementaryOperator::scaled_identity(1));
    CHECK(adjoint(adjoint(s)).simplified() == s.simplified());
    const auto sa = adjoint(s);
    for (std::int64_t i = 1; i <= 8; ++i) {
      for (std::int64_t j = 1; j <= 8; ++j) {
        CHECK(pairing(apply_operator(s, exact_basis(3, i)), exact_basis(3, j)) ==
              pairing(exact_basis(3, i), apply_operator(sa, exact_basis(3, j))));
      }
    }
    // (S T) f = S (T f)
    const auto st = compose(s, t);
    for (std::int64_t i = 1; i <= 8; ++i) CHECK(apply_operator(st, exact_basis(3, i)) == apply_operator(s, apply_operator(t, exact_basis(3, i))));
  }
}

TEST_CASE("pseudo-integral operators") {
  const auto id = ElementaryOperator::scaled_identity(1.0);
  const ElementaryOperator sw(half_swap(), {1.0, 1.0});
  const PseudoIntegralOperator sum({id, sw});
  const auto out = apply_operator(sum, StepFunction::basis(1, 1));
  CHECK(out == StepFunction::constant(0, 1.0));
  CHECK_THROWS_AS(PseudoIntegralOperator({id, ElementaryOperator::scaled_identity(2.0)}), std::invalid_argument);
  const auto d = discretize(sum, 2);
  CHECK(d.apply(std::vector<double>{1, 0, 0, 0}) == std::vector<double>{1, 0, 1, 0});
}

TEST_CASE("discretize matches apply") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = to_double(random_elementary_operator(3, seed));
    const auto d = discretize(t, 3);
    for (std::int64_t i = 1; i <= 8; ++i) {
      const auto direct = apply_operator(t, PiecewiseFunction<double>::from_step(StepFunction::basis(3, i)));
      std::vector<double> x(8, 0.0);
      x[static_cast<std::size_t>(i - 1)] = 1;
      const auto y = d.apply(x);
      CHECK(eval_norm(NormSpec::lp(1.5), y, d.out_measures()) == doctest::Approx(eval_norm(NormSpec::lp(1.5), direct)));
    }
  }
}

TEST_CASE("operator norms") {
  for (const auto& spec : builtin_specs()) {
    CAPTURE(spec.to_string());
    const auto n = operator_norm(spec, spec, identity_operator(3));
    CHECK(n.lower == doctest::Approx(1.0).epsilon(1e-9));
  }
  const auto two = operator_norm(NormSpec::lp(1), NormSpec::lp(1), identity_operator(3, 2.0));
  CHECK(two.certified);
  CHECK(two.lower == doctest::Approx(2.0));
  const auto d2 = operator_norm(NormSpec::lp(2), NormSpec::lp(2), dilation_operator(DilationSpec(2), 6));
  CHECK(d2.lower == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK_THROWS_AS(operator_norm(NormSpec::lp(2), NormSpec::lp(2), identity_operator(2),
                                {.method = NormMethod::kExtremePoints}),
                  std::invalid_argument);
}

TEST_CASE("extreme points agree with ascent lower bounds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = discretize(to_double(random_elementary_operator(3, seed)), 3);
    for (const auto& spec : {NormSpec::lp(1), NormSpec::lp(kInf)}) {
      const auto exact = operator_norm(spec, spec, d, {.method = NormMethod::kExtremePoints});
      const auto ascent = operator_norm(spec, spec, d, {.method = NormMethod::kMultistartAscent});
      CHECK(exact.certified);
      CHECK(ascent.lower <= exact.lower + 1e-8);
      CHECK(ascent.lower >= exact.lower - 1e-8);
    }
  }
}

TEST_CASE("isometry certificates") {
  const std::vector<std::int64_t> perm{3, 1, 4, 2};
  const ElementaryOperator p(MeasureMap::cell_permutation(2, perm), {1.0, -1.0, -1.0, 1.0});
  for (const auto& spec : builtin_specs()) {
    CAPTURE(spec.to_string());
    const auto c = is_isometry(spec, p);
    CHECK(c.verdict != IsometryVerdict::kCertifiedNo);
    if (spec.is_lp()) {
      CHECK(c.verdict == IsometryVerdict::kCertifiedYes);
      CHECK(c.exact);
    }
  }
  const std::vector<int> signs{1, 1};
  const auto lam = lamperti_isometry(2, squeeze_map(), signs);
  CHECK(lam.multipliers()[0] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(lam.multipliers()[1] == doctest::Approx(1.22474).epsilon(1e-5));
  const auto c2 = is_isometry(NormSpec::lp(2), lam);
  CHECK(c2.verdict == IsometryVerdict::kCertifiedYes);
  CHECK(c2.floating_fallback);
  const auto cl = is_isometry(reference_lorentz(), lam);
  CHECK(cl.verdict == IsometryVerdict::kCertifiedNo);
  CHECK(cl.discrepancy > 1e-3);
  REQUIRE(cl.witness.has_value());
  CHECK(std::abs(eval_norm(reference_lorentz(), apply_operator(lam, *cl.witness)) - eval_norm(reference_lorentz(), *cl.witness)) ==
        doctest::Approx(cl.discrepancy));

  const auto one = lamperti_isometry_exact(1, squeeze_map(), signs);
  REQUIRE(one.has_value());
  CHECK(one->multipliers()[0] == Rational(1, 2));
  CHECK(one->multipliers()[1] == Rational(3, 2));
  CHECK(lamperti_integral_exact(*one, 1) == 1);
  CHECK(is_isometry(NormSpec::lp(1), *one).exact);
  CHECK_FALSE(lamperti_isometry_exact(2, squeeze_map(), signs).has_value());
  CHECK(is_isometry(NormSpec::lp(kInf), ElementaryOperator(squeeze_map(), {1.0, 2.0})).verdict ==
        IsometryVerdict::kCertifiedNo);
  const auto bad = is_isometry(NormSpec::lp(3), ElementaryOperator(squeeze_map(), {1.0, 1.0}));
  CHECK(bad.verdict == IsometryVerdict::kCertifiedNo);
  CHECK(bad.exact);
  CHECK(bad.discrepancy > 0.1);
}

TEST_CASE("dilations") {
  const auto d1 = dilation_operator(DilationSpec(1), 3);
  CHECK(d1.apply(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}) == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const auto d2 = dilation_operator(DilationSpec(2), 1);
  const auto y = d2.apply(std::vector<double>{1, 0});
  CHECK(eval_norm(NormSpec::lp(1), y, d2.out_measures()) == 1.0);
  const auto dh = dilation_operator(DilationSpec(Rational(1, 2)), 1);
  const auto z = dh.apply(std::vector<double>{1, 1});
  CHECK(eval_norm(NormSpec::lp(1), z, dh.out_measures()) == 0.5);
  CHECK(eval_norm(NormSpec::lp(kInf), z, dh.out_measures()) == 1.0);
  CHECK_THROWS_AS(DilationSpec(Rational(1, 3)), std::invalid_argument);
  CHECK_THROWS_AS(DilationSpec(0), std::invalid_argument);
  for (double p : {1.0, 2.0, 3.0}) {
    for (int k = -4; k <= 4; ++k) {
      const auto n = operator_norm(NormSpec::lp(p), NormSpec::lp(p), dilation_operator(DilationSpec(pow2(k)), 8));
      CHECK(n.lower == doctest::Approx(std::pow(std::ldexp(1.0, k), 1 / p)).epsilon(1e-6));
    }
  }
}

TEST_CASE("Boyd indices") {
  const auto scales = default_boyd_scales();
  const auto l3 = boyd_indices_estimate(NormSpec::lp(3), scales, 10);
  CHECK(l3.p_index == doctest::Approx(3.0).epsilon(0.02));
  CHECK(l3.q_index == doctest::Approx(3.0).epsilon(0.02));
  const auto linf = boyd_indices_estimate(NormSpec::lp(kInf), scales, 10);
  CHECK(std::isinf(linf.p_index));
  CHECK(std::isinf(linf.q_index));
  const auto l1 = boyd_indices_estimate(NormSpec::lp(1), scales, 10);
  CHECK(l1.p_index == doctest::Approx(1.0).epsilon(0.02));
  CHECK(l1.q_index == doctest::Approx(1.0).epsilon(0.02));
  const std::vector<Rational> few{2, 4, Rational(1, 2)};
  CHECK_THROWS_AS(boyd_indices_estimate(NormSpec::lp(2), few, 4), std::invalid_argument);
}

TEST_CASE("L_r norms are dominated by the X norm") {
  const std::vector<int> signs{1, 1};
  const auto lam = lamperti_isometry(2, squeeze_map(), signs);
  const auto iso = verify_lr_domination(NormSpec::lp(2), lam, 2);
  CHECK(iso.norm_lr == doctest::Approx(1.0));
  CHECK(iso.holds);
  const auto twice = verify_lr_domination(reference_lorentz(), ElementaryOperator::scaled_identity(2.0), 1);
  CHECK(twice.norm_lr == 2.0);
  CHECK(twice.norm_x_lower == doctest::Approx(2.0));
  CHECK(twice.holds);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = to_double(random_elementary_operator(3, seed));
    CHECK(verify_lr_domination(reference_lorentz(), t, 1).holds);
  }
}

TEST_CASE("distortion") {
  CHECK(distortion(StepFunction(2, {0, 1, 1, 0})) == 1);
  CHECK(distortion(StepFunction(2, {8, 2, 0, 0})) == 4);
  CHECK_THROWS_AS(distortion(StepFunction::zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(distortion(StepFunction(1, {1, -1})), std::invalid_argument);
  const auto r = distortion_recurrence(100, 1.2, 60);
  CHECK(r.tail_below_bound);
  CHECK(r.bound == doctest::Approx(2.48832));
  CHECK(r.fixed_point == doctest::Approx(1.44));
  CHECK(r.sequence.back() == doctest::Approx(1.44));
}
