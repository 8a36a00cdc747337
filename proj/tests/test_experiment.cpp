#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "rilab/experiment.hpp"
#include "rilab/io.hpp"
#include "rilab/random.hpp"

using namespace rilab;

namespace {

std::string report_text(const ExperimentConfig& c) {
  std::ostringstream out;
  write_report(out, c, run_suite(c), "fixed");
  return out.str();
}

}  // namespace

TEST_CASE("map and operator text round trip") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = to_double(random_elementary_operator(3, seed));
    const auto back = parse_operator(format_operator(t));
    CHECK(back.map() == t.map());
    CHECK(std::ranges::equal(back.multipliers(), t.multipliers()));
  }
  const auto m = parse_map("# swap halves\n1 1 1 2\n1 2 1 1\n");
  CHECK(is_measure_preserving(m));
  CHECK(parse_map(format_map(m)) == m);
  const auto iv = parse_map("iv 0 1/2 0 1/4\niv 1/2 1 1/4 1\n");
  CHECK_FALSE(is_measure_preserving(iv));
  // multipliers follow their piece even when pieces arrive out of order
  const auto t = parse_operator("1 2 1 1\n1 1 1 2\n-3\n0.5\n");
  CHECK(t.multipliers()[0] == 0.5);
  CHECK(t.multipliers()[1] == -3);
  CHECK_THROWS_AS(parse_operator("1 1 1 2\n1 2 1 1\n1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_map("1 1 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_map("30 1 30 1\n", 20), RefinementCapExceeded);
}

TEST_CASE("step and atom text") {
  const auto f = parse_step("1, 0.5, 1/4, -2");
  CHECK(f.level() == 2);
  CHECK(f[2] == 0.25);
  CHECK(parse_step(format_step(f)) == f);
  CHECK_THROWS_AS(parse_step("1,2,3"), std::invalid_argument);
  const auto mu = parse_atoms("1/4:0.5, 3/4:-1");
  CHECK(mu.size() == 2);
  CHECK(mu.atoms()[0].position == Rational(3, 4));
  CHECK_THROWS_AS(parse_atoms("1/4"), std::invalid_argument);
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("classification examples") {
  const auto lorentz = reference_lorentz();
  const std::vector<std::int64_t> perm{3, 1, 4, 2};
  const ElementaryOperator signed_perm(MeasureMap::cell_permutation(2, perm), {1.0, -1.0, -1.0, 1.0});
  const auto a = classify_isometry(lorentz, signed_perm);
  CHECK(a.is_isometry == IsometryVerdict::kNotRefuted);
  CHECK(a.modulus_one);
  CHECK(a.measure_preserving);
  CHECK(a.branch == Branch::kTrivialForm);

  const auto lamperti = lamperti_example(2);
  CHECK(lamperti.multipliers()[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(lamperti.multipliers()[1] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
  const auto b = classify_isometry(NormSpec::lp(2), lamperti);
  CHECK(b.is_isometry == IsometryVerdict::kCertifiedYes);
  CHECK_FALSE(b.modulus_one);
  CHECK_FALSE(b.measure_preserving);
  CHECK(b.branch == Branch::kLpLampertiForm);

  const auto c = classify_isometry(lorentz, lamperti);
  CHECK(c.is_isometry == IsometryVerdict::kCertifiedNo);
  CHECK(c.branch == Branch::kNotIsometry);
  REQUIRE(c.certificate.witness);
  CHECK(c.certificate.discrepancy >= 1e-3);

  const auto d = classify_isometry(NormSpec::lp(2), ElementaryOperator::scaled_identity(2.0));
  CHECK(d.is_isometry == IsometryVerdict::kCertifiedNo);
  CHECK(d.branch == Branch::kNotIsometry);
}

TEST_CASE("threefold composition of a Lamperti isometry") {
  const auto t = lamperti_example(2);
  const auto tau1 = random_automorphism(1, 3, 5), tau2 = random_automorphism(1, 3, 6);
  const auto s = threefold_composition(t, tau1, tau2);
  CHECK(classify_isometry(NormSpec::lp(2), s).is_isometry == IsometryVerdict::kCertifiedYes);
  CHECK(classify_isometry(NormSpec::lp(2), s).branch != Branch::kInconsistent);
}

TEST_CASE("config parsing") {
  const auto c = ExperimentConfig::parse("experiment = boyd, kp  # two\nnorm = lp 3\nseed=11\ntiming=0\nboyd_level=8\n");
  CHECK(c.experiments == std::vector<std::string>{"boyd", "kp"});
  REQUIRE(c.norms.size() == 1);
  CHECK(c.norms[0].is_lp(3));
  CHECK(c.seed == 11);
  CHECK_FALSE(c.timing);
  CHECK(c.get("boyd_level", 10.0) == 8.0);
  CHECK(c.get("missing", std::string("x")) == "x");
  CHECK_THROWS_AS(ExperimentConfig::parse("seed\n"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::parse("tol=0\n"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/suite.cfg"), std::runtime_error);
}

TEST_CASE("suite usage errors") {
  ExperimentConfig c;
  CHECK_THROWS_AS(run_suite(c), std::invalid_argument);
  c.experiments = {"nope"};
  CHECK_THROWS_AS(run_suite(c), std::invalid_argument);
}

TEST_CASE("boyd suite on L_3") {
  auto c = ExperimentConfig::parse("experiment=boyd\nnorm=lp 3\n");
  const auto r = run_suite(c);
  REQUIRE(r.records.size() == 1);
  CHECK(r.failures == 0);
  CHECK(r.records[0].data["p_index"].get<double>() == doctest::Approx(3.0).epsilon(0.02));
  CHECK(r.records[0].data["q_index"].get<double>() == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("classify suite records replay") {
  auto c = ExperimentConfig::parse("experiment=classify\nnorm=lorentz 2 0.4 0.3 0.2 0.1\nsamples=24\n");
  const auto r = run_suite(c);
  CHECK(r.records.size() == 25);
  CHECK(r.failures == 0);
  std::size_t certified_no = 0;
  for (const auto& rec : r.records) {
    CHECK(rec.verdict != "inconsistent");
    if (rec.data["is_isometry"] == "certified_no") {
      ++certified_no;
      CHECK(replay_classification(to_json(rec, false)) > c.tol);
    }
  }
  CHECK(certified_no > 0);
  CHECK(r.records[0].verdict == "not_isometry");
}

TEST_CASE("reports are byte identical without timing") {
  const auto c = ExperimentConfig::parse(
      "experiments=balance,pvar,classify,kp\nnorm=lp 2\nnorm=lp inf\nsamples=12\ntiming=0\nthreads=4\n");
  const auto first = report_text(c);
  auto serial = c;
  serial.threads = 1;
  CHECK(first == report_text(c));
  CHECK(first == report_text(serial));
  std::istringstream lines(first);
  std::string header;
  std::getline(lines, header);
  const auto h = nlohmann::ordered_json::parse(header);
  CHECK(h["timestamp"] == "fixed");
  CHECK(h["failures"] == 0);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto rec = nlohmann::ordered_json::parse(line);
    for (const char* key : {"experiment", "case_id", "seed", "verdict", "margin", "witness", "elapsed_ms"}) {
      CHECK(rec.contains(key));
    }
    CHECK(rec["elapsed_ms"] == 0.0);
  }
  CHECK(n == h["cases"].get<std::size_t>());
}
