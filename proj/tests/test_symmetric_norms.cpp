#include <doctest.h>

#include <cmath>

#include "rilab/random.hpp"
#include "rilab/symmetric_norms.hpp"

using namespace rilab;

namespace {

StepFunction random_step(Rng& rng, int level) {
  auto f = StepFunction::zero(level);
  for (auto& v : f.values()) v = rng.uniform(-2.0, 2.0);
  return f;
}

NormSpec test_orlicz() { return NormSpec::orlicz({0, 0.5, 1, 2, 4}, {0, 0.375, 1, 3, 10}); }

/// sup over the signed indicators sign * chi_A / ||chi_A||, the vertices of the Lorentz ball.
double lorentz_dual_by_vertices(const NormSpec& spec, const StepFunction& g) {
  const std::size_t n = g.size();
  double best = 0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    auto f = StepFunction::zero(g.level());
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1) f[i] = g[i] >= 0 ? 1.0 : -1.0;
    }
    best = std::max(best, pairing(f, g) / eval_norm(spec, f));
  }
  return best;
}

}  // namespace

TEST_CASE("norm values") {
  CHECK(eval_norm(NormSpec::lp(1), StepFunction::basis(1, 1)) == doctest::Approx(0.5));
  CHECK(eval_norm(NormSpec::lp(kInf), StepFunction::basis(2, 3)) == 1.0);
  CHECK(eval_norm(reference_lorentz(), StepFunction::basis(2, 3)) == doctest::Approx(0.4));
  CHECK(eval_norm(NormSpec::lp(2), StepFunction(1, {3, 4})) == doctest::Approx(std::sqrt(12.5)));
  // chi_A in the Luxemburg norm: 1 / phi^{-1}(1/|A|); phi^{-1}(2) = 1.5 on the test table
  CHECK(eval_norm(test_orlicz(), StepFunction::basis(1, 1)) == doctest::Approx(2.0 / 3).epsilon(1e-10));
}

TEST_CASE("normalization, invariance, lattice property") {
  Rng rng(5);
  for (const auto& spec : builtin_specs()) {
    CAPTURE(spec.to_string());
    CHECK(eval_norm(spec, StepFunction::constant(3, 1.0)) == doctest::Approx(1.0).epsilon(1e-10));
    for (int trial = 0; trial < 20; ++trial) {
      const auto f = random_step(rng, 3);
      const auto g = random_step(rng, 3);
      const double nf = eval_norm(spec, f);
      CHECK(eval_norm(spec, decreasing_rearrangement(f)) == doctest::Approx(nf).epsilon(1e-12));
      CHECK(eval_norm(spec, f + g) <= nf + eval_norm(spec, g) + 1e-12);
      CHECK(eval_norm(spec, -3.0 * f) == doctest::Approx(3 * nf).epsilon(1e-11));
      auto bigger = f;
      bigger[trial % 8] += bigger[trial % 8] >= 0 ? 0.5 : -0.5;
      CHECK(eval_norm(spec, bigger) >= nf - 1e-12);
    }
  }
}

TEST_CASE("decreasing rearrangement") {
  CHECK(decreasing_rearrangement(StepFunction(2, {1, 3, 2, 2})) == StepFunction(2, {3, 2, 2, 1}));
  CHECK(decreasing_rearrangement(StepFunction(1, {-5, 0})) == StepFunction(1, {5, 0}));
  const StepFunction f(2, {0.5, -4, 2, 1});
  CHECK(decreasing_rearrangement(decreasing_rearrangement(f)) == decreasing_rearrangement(f));
}

TEST_CASE("dual norms") {
  const StepFunction g(2, {0.3, -1.2, 2.0, 0.1});
  CHECK(dual_norm(NormSpec::lp(2), g).value == doctest::Approx(eval_norm(NormSpec::lp(2), g)));
  CHECK(dual_norm(NormSpec::lp(1), StepFunction(1, {3, 1})).value == doctest::Approx(3));
  CHECK(dual_norm(NormSpec::lp(4), StepFunction::basis(1, 1)).value == doctest::Approx(0.59460355750136).epsilon(1e-12));
  // dual fundamental function t / phi_X(t): 0.5 * 1.5 for |A| = 1/2
  CHECK(dual_norm(test_orlicz(), StepFunction::basis(1, 1)).value == doctest::Approx(0.75).epsilon(1e-8));
  CHECK_THROWS_AS(dual_norm(NormSpec::lp(2), g, 0.0), std::invalid_argument);
  // linear-programming value over the Luxemburg ball of the piecewise-linear table
  const StepFunction g8(3, {0.3, -1.2, 2.0, 0.1, 0.7, -0.4, 1.5, 0.0});
  CHECK(dual_norm(test_orlicz(), g8).value == doctest::Approx(1.115625).epsilon(1e-9));

  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = random_step(rng, 3);
    CHECK(dual_norm(reference_lorentz(), h).value == doctest::Approx(lorentz_dual_by_vertices(reference_lorentz(), h)));
  }
}

TEST_CASE("dual norm agrees with projected ascent and satisfies Hoelder") {
  Rng rng(17);
  for (const auto& spec : builtin_specs()) {
    CAPTURE(spec.to_string());
    for (int trial = 0; trial < 5; ++trial) {
      const auto g = random_step(rng, 3);
      const double d = dual_norm(spec, g).value;
      const auto asc = dual_norm_ascent(spec, g);
      CHECK(asc.lower <= d + 1e-9);
      // kinks of a piecewise-linear Young function slow the ascent down
      const double slack = spec.kind() == NormSpec::Kind::kOrlicz ? 1e-2 : 1e-5;
      CHECK(asc.lower >= d - slack * d);
      const auto f = random_step(rng, 3);
      CHECK(pairing(f, g) <= eval_norm(spec, f) * d + 1e-9);
    }
  }
}

TEST_CASE("conditional expectation") {
  CHECK(conditional_expectation(StepFunction(2, {1, 3, 2, 2}), 1) == StepFunction(1, {2, 2}));
  CHECK(conditional_expectation(StepFunction::constant(3, 1.0), 1) == StepFunction::constant(1, 1.0));
  const ExactStepFunction e(2, {Rational(1, 3), 2, 5, -1});
  CHECK(integral(conditional_expectation(e, 0)) == integral(e));
  CHECK_THROWS_AS(conditional_expectation(StepFunction::zero(1), 2), std::invalid_argument);
  Rng rng(3);
  for (const auto& spec : builtin_specs()) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto f = random_step(rng, 3);
      auto avg = refine(conditional_expectation(f, 1), 3);
      CHECK(eval_norm(spec, avg) <= eval_norm(spec, f) + 1e-12);
    }
  }
}

TEST_CASE("property (P) and (P')") {
  const auto grid = default_t_grid();
  const auto l1 = check_property_P(NormSpec::lp(1), grid);
  CHECK(l1.holds);
  for (auto [t, margin] : l1.margins) CHECK(margin == doctest::Approx(t / 2));

  const auto linf = check_property_P(NormSpec::lp(kInf), grid);
  CHECK_FALSE(linf.holds);
  CHECK(linf.worst_margin == 0);
  bool half_is_tight = false;
  for (auto [t, margin] : linf.margins) half_is_tight |= (t == 0.5 && margin == 0);
  CHECK(half_is_tight);

  CHECK(check_property_P(NormSpec::lp(2), grid).holds);
  CHECK(check_property_P_prime(NormSpec::lp(kInf), grid).holds);
  CHECK(check_property_P_prime(NormSpec::lp(2), grid).holds);
  for (const auto& spec : builtin_specs()) {
    CAPTURE(spec.to_string());
    CHECK((check_property_P(spec, grid).holds || check_property_P_prime(spec, grid).holds));
  }
}

TEST_CASE("fundamental function") {
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    for (int k = 0; k <= 6; ++k) {
      CHECK(fundamental_function(NormSpec::lp(p), pow2(-k)) == doctest::Approx(std::pow(std::ldexp(1.0, -k), 1 / p)));
    }
  }
  for (const auto& spec : builtin_specs()) CHECK(fundamental_function(spec, 1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fundamental_function(reference_lorentz(), Rational(1, 4)) == doctest::Approx(0.4));
  CHECK_THROWS_AS(fundamental_function(NormSpec::lp(2), Rational(1, 3)), std::invalid_argument);
}

TEST_CASE("spec parsing") {
  CHECK(NormSpec::parse("lp inf").is_lp(kInf));
  CHECK(NormSpec::parse("lp 3").is_lp(3));
  const auto l = NormSpec::parse("lorentz 2 0.4 0.3 0.2 0.1");
  CHECK(l.lorentz().weights.size() == 4);
  const auto o = NormSpec::parse("orlicz 3 0 0 1 2 2 6");
  CHECK(o.orlicz()(1.0) == doctest::Approx(1.0));
  CHECK(NormSpec::parse(l.to_string()).to_string() == l.to_string());
  CHECK_THROWS_AS(NormSpec::parse("lp 0.5"), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::parse("lorentz 1 0.3 0.7"), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::parse("orlicz 3 0 0 1 2 2 2.5"), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::parse("weird 1"), std::invalid_argument);
}
