#include "rilab/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include "rilab/atomic_measures.hpp"
#include "rilab/balancing.hpp"
#include "rilab/flinn_detection.hpp"
#include "rilab/io.hpp"
#include "rilab/random.hpp"

namespace rilab {

using Json = nlohmann::ordered_json;

std::string to_string(Branch b) {
  switch (b) {
    case Branch::kTrivialForm:
      return "trivial_form";
    case Branch::kLpLampertiForm:
      return "lp_lamperti_form";
    case Branch::kNotIsometry:
      return "not_isometry";
    case Branch::kInconsistent:
      return "inconsistent";
  }
  return "?";
}

ClassificationVerdict classify_isometry(const NormSpec& spec, const ElementaryOperator& t, double tol) {
  ClassificationVerdict out;
  out.certificate = is_isometry(spec, t, {.tol = tol});
  out.is_isometry = out.certificate.verdict;
  out.modulus_one = std::all_of(t.multipliers().begin(), t.multipliers().end(),
                                [](double a) { return std::abs(std::abs(a) - 1) <= 1e-10; });
  out.measure_preserving = is_measure_preserving(t.map());
  if (out.is_isometry == IsometryVerdict::kCertifiedNo) {
    out.branch = Branch::kNotIsometry;
  } else if (out.modulus_one && out.measure_preserving) {
    out.branch = Branch::kTrivialForm;
  } else if (spec.is_lp()) {
    // for L_p the certificate is the Lamperti condition itself
    out.branch = Branch::kLpLampertiForm;
    out.lamperti_exact = out.certificate.exact;
  } else {
    out.branch = Branch::kInconsistent;
  }
  return out;
}

namespace {

MeasureMap squeeze_map() {
  return MeasureMap({MapPiece{{0, Rational(1, 2)}, {0, Rational(1, 4)}},
                     MapPiece{{Rational(1, 2), 1}, {Rational(1, 4), 1}}});
}

/// a_i = sign_i w_i^{-1/p}; p = inf gives |a| = 1.
ElementaryOperator lamperti_on(const MeasureMap& sigma, double p, Rng& rng) {
  std::vector<double> a;
  for (const MapPiece& piece : sigma.pieces()) a.push_back(rng.sign() * std::pow(to_double(piece.weight()), -1 / p));
  return {sigma, std::move(a)};
}

double native_exponent(const NormSpec& spec) { return spec.is_lp() ? spec.lp_exponent() : 2.0; }

ElementaryOperator signed_permutation(int level, Rng& rng) {
  const std::size_t cells = std::size_t{1} << level;
  std::vector<std::int64_t> perm(cells);
  std::iota(perm.begin(), perm.end(), std::int64_t{1});
  for (std::size_t i = cells; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  const auto map = MeasureMap::cell_permutation(level, perm);
  std::vector<double> signs;
  for (std::size_t i = 0; i < map.size(); ++i) signs.push_back(rng.sign());
  return {map, std::move(signs)};
}

}  // namespace

ElementaryOperator lamperti_example(double p) {
  const auto sigma = squeeze_map();
  std::vector<double> a;
  for (const MapPiece& piece : sigma.pieces()) a.push_back(std::pow(to_double(piece.weight()), -1 / p));
  return {sigma, std::move(a)};
}

ElementaryOperator threefold_composition(const ElementaryOperator& t, const MeasureMap& tau1, const MeasureMap& tau2) {
  const auto v1 = composition_operator<double>(tau1);
  const auto v2 = composition_operator<double>(tau2);
  return compose(t, compose(v1, compose(t, compose(v2, t))));
}

Candidate classify_candidate(const NormSpec& spec, std::uint64_t seed, std::size_t k) {
  Rng rng(derive_seed(seed, k));
  const double p = native_exponent(spec);
  switch (k % 6) {
    case 0:
      return {"signed_permutation", signed_permutation(1 + static_cast<int>(rng.index(3)), rng)};
    case 1: {
      const auto tau = random_automorphism(2, 4, rng.next());
      std::vector<double> signs;
      for (std::size_t i = 0; i < tau.size(); ++i) signs.push_back(rng.sign());
      return {"signed_automorphism", ElementaryOperator(tau, std::move(signs))};
    }
    case 2:
      return {"lamperti", lamperti_on(random_measure_map(3, rng.next()), p, rng)};
    case 3:
      return {"random_elementary", to_double(random_elementary_operator(3, rng.next()))};
    case 4: {
      const auto tau1 = random_automorphism(1, 3, rng.next());
      const auto tau2 = random_automorphism(1, 3, rng.next());
      return {"threefold", threefold_composition(lamperti_example(p), tau1, tau2)};
    }
    default: {
      const double scales[] = {1.0, -1.0, 2.0, 0.5};
      return {"scaled_identity", ElementaryOperator::scaled_identity(scales[rng.index(4)])};
    }
  }
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig c;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw std::invalid_argument("config: expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "experiment" || key == "experiments") {
      std::istringstream list(value);
      for (std::string name; std::getline(list, name, ',');) {
        if (!trim(name).empty()) c.experiments.push_back(trim(name));
      }
    } else if (key == "norm") {
      c.norms.push_back(NormSpec::parse(value));
    } else if (key == "seed") {
      c.seed = std::stoull(value);
    } else if (key == "samples") {
      c.samples = std::stoull(value);
    } else if (key == "tol") {
      c.tol = std::stod(value);
      if (!(c.tol > 0)) throw std::invalid_argument("config: tol must be positive");
    } else if (key == "level") {
      c.level = std::stoi(value);
    } else if (key == "level_cap") {
      c.level_cap = std::stoi(value);
    } else if (key == "out") {
      c.out = value;
    } else if (key == "op") {
      c.op_file = value;
    } else if (key == "timing") {
      c.timing = value == "1" || value == "true" || value == "on";
    } else if (key == "threads") {
      c.threads = std::stoull(value);
    } else {
      c.extra[key] = value;
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) { return parse(read_file(path)); }

std::string ExperimentConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = extra.find(key);
  return it == extra.end() ? fallback : it->second;
}

double ExperimentConfig::get(const std::string& key, double fallback) const {
  const auto it = extra.find(key);
  return it == extra.end() ? fallback : std::stod(it->second);
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["experiments"] = experiments;
  Json norms_json = Json::array();
  for (const auto& n : norms) norms_json.push_back(n.to_string());
  j["norms"] = norms_json;
  j["seed"] = seed;
  j["samples"] = samples;
  j["tol"] = tol;
  j["level"] = level;
  j["level_cap"] = level_cap;
  j["op"] = op_file;
  j["timing"] = timing;
  j["extra"] = extra;
  return j;
}

Json to_json(const Record& r, bool timing) {
  Json j;
  j["experiment"] = r.experiment;
  j["case_id"] = r.case_id;
  j["seed"] = r.seed;
  j["verdict"] = r.verdict;
  j["margin"] = r.margin;
  j["witness"] = r.witness;
  j["elapsed_ms"] = timing ? r.elapsed_ms : 0.0;
  j["passed"] = r.passed;
  j["data"] = r.data;
  return j;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"flinn_scan", "kp",   "boyd",       "classify",
                                              "balance",    "pvar", "uniqueness", "ap_estimate"};
  return names;
}

namespace {

using Case = std::function<Record()>;

Record make_record(std::string experiment, std::string case_id, std::uint64_t seed) {
  Record r;
  r.experiment = std::move(experiment);
  r.case_id = std::move(case_id);
  r.seed = seed;
  return r;
}

Json piecewise_json(const PiecewiseFunction<double>& f) {
  Json breaks = Json::array(), values = Json::array();
  for (const Rational& b : f.breaks()) breaks.push_back(to_string(b));
  for (double v : f.values()) values.push_back(v);
  return {{"breaks", breaks}, {"values", values}};
}

std::vector<double> values_of(const StepFunction& f) { return {f.values().begin(), f.values().end()}; }


void flinn_cases(const ExperimentConfig& c, const NormSpec& spec, std::vector<Case>& cases) {
  const int level = std::max(c.level, spec.min_level());
  const auto random_u = static_cast<std::size_t>(c.get("random_u", 4.0));
  const double defect_tol = c.get("defect_tol", 1e-8);
  std::vector<std::pair<std::string, StepFunction>> us{{"e11", refine(StepFunction::basis(1, 1), level)},
                                                       {"chi", StepFunction::constant(level, 1.0)}};
  for (std::size_t k = 0; k < random_u; ++k) {
    Rng rng(derive_seed(c.seed, k));
    auto u = StepFunction::zero(level);
    for (auto& v : u.values()) v = rng.uniform(-1.0, 1.0);
    us.emplace_back("random" + std::to_string(k), u);
  }
  for (auto& [name, u] : us) {
    cases.push_back([&c, spec, name, u, defect_tol, level] {
      auto r = make_record("flinn_scan", spec.to_string() + "/" + name, c.seed);
      const auto d = flinn_defect(spec, u, {.level = level, .seed = c.seed});
      const bool flinn = d.defect <= defect_tol;
      r.verdict = flinn ? "flinn" : (d.certified ? "not_flinn" : "inconclusive");
      r.margin = d.defect;
      r.witness = values_of(d.witness);
      r.data = {{"u", values_of(u)},          {"f", values_of(d.f)},          {"value", d.value},
                {"lower_bound", d.lower_bound}, {"certified", d.certified}, {"converged", d.converged},
                {"level", d.level},           {"method", d.method}};
      if (spec.is_lp(2)) r.passed = flinn;
      if (flinn && d.certified) {
        const auto sign = verify_sign_condition({u, d.f, spec});
        r.data["min_fu"] = sign.min_product;
        r.passed = r.passed && sign.holds;
      }
      return r;
    });
  }
}

std::vector<std::pair<std::string, ElementaryOperator>> native_isometries(const ExperimentConfig& c, const NormSpec& spec) {
  std::vector<std::pair<std::string, ElementaryOperator>> out;
  if (!c.op_file.empty()) {
    out.emplace_back("file", parse_operator(read_file(c.op_file), c.level_cap));
    return out;
  }
  Rng rng(c.seed);
  out.emplace_back("signed_permutation", signed_permutation(2, rng));
  std::vector<double> signs;
  const auto tau = random_automorphism(2, 4, rng.next());
  for (std::size_t i = 0; i < tau.size(); ++i) signs.push_back(rng.sign());
  out.emplace_back("signed_automorphism", ElementaryOperator(tau, std::move(signs)));
  if (spec.is_lp()) out.emplace_back("lamperti", lamperti_example(spec.lp_exponent()));
  return out;
}

void kp_cases(const ExperimentConfig& c, const NormSpec& spec, std::vector<Case>& cases) {
  std::vector<double> p_list;
  std::istringstream in(c.get("p", std::string("0.25,0.5,0.75,1")));
  for (std::string s; std::getline(in, s, ',');) p_list.push_back(std::stod(s));
  for (auto& [name, t] : native_isometries(c, spec)) {
    cases.push_back([&c, spec, name, t, p_list] {
      auto r = make_record("kp", spec.to_string() + "/" + name, c.seed);
      const auto rep = kp_experiment(spec, t, {.samples = c.samples, .seed = c.seed, .p_list = p_list, .tol = c.tol});
      r.passed = rep.violations == 0 && rep.refuted == 0;
      r.verdict = r.passed ? "pass" : "fail";
      r.margin = rep.worst_margin;
      r.data = {{"op", format_operator(t)},     {"p", rep.p_list},           {"min", rep.min},
                {"max", rep.max},               {"mean", rep.mean},          {"violations", rep.violations},
                {"refuted", rep.refuted},       {"verified", rep.verified},  {"samples", rep.samples},
                {"basis_functional", rep.basis_functional}};
      return r;
    });
  }
}

void boyd_cases(const ExperimentConfig& c, const NormSpec& spec, std::vector<Case>& cases) {
  const int level = static_cast<int>(c.get("boyd_level", 10.0));
  const double rel = c.get("boyd_tol", 0.02);
  cases.push_back([&c, spec, level, rel] {
    auto r = make_record("boyd", spec.to_string(), c.seed);
    const auto scales = default_boyd_scales();
    const auto est = boyd_indices_estimate(spec, scales, level);
    Json norms = Json::array();
    for (auto [s, n] : est.dilation_norms) norms.push_back({s, n});
    r.data = {{"p_index", est.p_index}, {"q_index", est.q_index}, {"slope_large", est.slope_large},
              {"slope_small", est.slope_small}, {"certified", est.certified}, {"level", level},
              {"dilation_norms", norms}};
    if (spec.is_lp()) {
      const double p = spec.lp_exponent();
      // compare slopes 1/p so that p = inf means slope 0
      const double target = std::isinf(p) ? 0.0 : 1 / p;
      const double err_large = std::abs(est.slope_large - target), err_small = std::abs(est.slope_small - target);
      r.margin = std::isinf(p) ? std::max(err_large, err_small)
                               : std::max(std::abs(est.p_index - p), std::abs(est.q_index - p)) / p;
      r.passed = std::isinf(p) ? r.margin <= 1e-9 : r.margin <= rel;
      r.verdict = r.passed ? "pass" : "fail";
    } else {
      r.verdict = "reported";
    }
    return r;
  });
}

Record classify_record(const ExperimentConfig& c, const NormSpec& spec, const std::string& id, const std::string& generator,
                       const ElementaryOperator& t) {
  auto r = make_record("classify", spec.to_string() + "/" + id, c.seed);
  const auto v = classify_isometry(spec, t, c.tol);
  r.verdict = to_string(v.branch);
  r.margin = v.certificate.discrepancy;
  r.data = {{"norm", spec.to_string()},
            {"generator", generator},
            {"is_isometry", to_string(v.is_isometry)},
            {"modulus_one", v.modulus_one},
            {"measure_preserving", v.measure_preserving},
            {"lamperti_exact", v.lamperti_exact},
            {"floating_fallback", v.certificate.floating_fallback},
            {"op", format_operator(t)}};
  if (v.certificate.witness) {
    r.witness = piecewise_json(*v.certificate.witness);
    r.data["witness_norm"] = v.certificate.witness_norm;
    r.data["image_norm"] = v.certificate.image_norm;
  }
  r.passed = v.branch != Branch::kInconsistent;
  if (v.is_isometry == IsometryVerdict::kCertifiedNo && v.certificate.witness) {
    r.passed = r.passed && replay_classification(to_json(r, false)) > c.tol;
  }
  return r;
}

void classify_cases(const ExperimentConfig& c, const NormSpec& spec, std::vector<Case>& cases) {
  if (!c.op_file.empty()) {
    const auto t = parse_operator(read_file(c.op_file), c.level_cap);
    cases.push_back([&c, spec, t] { return classify_record(c, spec, "file", "file", t); });
    return;
  }
  cases.push_back([&c, spec] { return classify_record(c, spec, "lamperti_example", "lamperti_example", lamperti_example(2)); });
  for (std::size_t k = 0; k < c.samples; ++k) {
    cases.push_back([&c, spec, k] {
      const auto cand = classify_candidate(spec, c.seed, k);
      return classify_record(c, spec, std::to_string(k), cand.generator, cand.op);
    });
  }
}

void balance_cases(const ExperimentConfig& c, std::vector<Case>& cases) {
  for (std::size_t k = 0; k < c.samples; ++k) {
    cases.push_back([&c, k] {
      Rng rng(derive_seed(c.seed, k));
      const std::size_t n = 1 + rng.index(12);
      std::vector<std::size_t> divisors;
      for (std::size_t l = 1; l <= n; ++l) {
        if (n % l == 0) divisors.push_back(l);
      }
      const std::size_t l = divisors[rng.index(divisors.size())], m = n / l;
      std::vector<std::int64_t> d(n);
      for (auto& v : d) v = static_cast<std::int64_t>(rng.index(21));
      std::sort(d.rbegin(), d.rend());
      auto r = make_record("balance", std::to_string(k), derive_seed(c.seed, k));
      const auto b = balance_permutation(d, l, m);
      r.passed = b.bound_ok && verify_balance(std::span<const std::int64_t>(d), l, m, b);
      r.verdict = r.passed ? "pass" : "fail";
      r.margin = static_cast<double>(d[0] - b.spread);
      r.data = {{"d", d}, {"l", l}, {"m", m}, {"sigma", b.sigma}, {"blocks", b.blocks}, {"spread", b.spread}};
      return r;
    });
  }
}

void pvar_cases(const ExperimentConfig& c, std::vector<Case>& cases) {
  const auto max_atoms = static_cast<std::size_t>(c.get("max_atoms", 8.0));
  const int max_level = static_cast<int>(c.get("max_level", 10.0));
  for (std::size_t k = 0; k < c.samples; ++k) {
    cases.push_back([&c, k, max_atoms, max_level] {
      const std::uint64_t seed = derive_seed(c.seed, k);
      const auto mu = random_atomic_measure(max_atoms, max_level, seed);
      const int sep = separation_level(mu);
      auto r = make_record("pvar", std::to_string(k), seed);
      std::size_t violations = 0;
      double deviation = 0;
      Json per_p = Json::array();
      for (double p : {0.25, 0.5, 0.75, 1.0}) {
        const auto seq = dyadic_p_variation(mu, p, sep + 1);
        const double pv = p_variation(mu, p);
        for (std::size_t n = 1; n < seq.size(); ++n) {
          if (seq[n] < seq[n - 1]) ++violations;
        }
        if (seq[static_cast<std::size_t>(sep)] != pv) ++violations;
        deviation = std::max(deviation, std::abs(seq[static_cast<std::size_t>(sep)] - pv));
        per_p.push_back({{"p", p}, {"p_variation", pv}, {"dyadic", seq}});
      }
      Json atoms = Json::array();
      for (const Atom& a : mu.atoms()) atoms.push_back({to_string(a.position), a.weight});
      r.passed = violations == 0;
      r.verdict = r.passed ? "pass" : "fail";
      r.margin = deviation;
      r.data = {{"atoms", atoms}, {"separation_level", sep}, {"violations", violations}, {"values", per_p}};
      return r;
    });
  }
}

void uniqueness_cases(const ExperimentConfig& c, const NormSpec& spec, std::vector<Case>& cases) {
  // the feasible-set bounds are only meaningful with an exact inner oracle
  if (!has_exact_complement_norm(spec) || !check_property_P(spec, default_t_grid()).holds) return;
  const int level = std::max(1, std::max(c.level, spec.min_level()));
  for (std::int64_t j = 1; j <= (std::int64_t{1} << level); ++j) {
    cases.push_back([&c, spec, level, j] {
      auto r = make_record("uniqueness", spec.to_string() + "/N" + std::to_string(level) + "j" + std::to_string(j), c.seed);
      const auto u = verify_functional_uniqueness(spec, level, j, c.get("dev_tol", 1e-4));
      r.passed = u.holds;
      r.verdict = !u.flinn_exists ? "no_flinn_pair" : (u.holds ? "unique" : "not_unique");
      r.margin = u.max_deviation;
      r.data = {{"defect", u.defect}, {"lower", u.lower}, {"upper", u.upper}, {"certified", u.certified}};
      return r;
    });
  }
}

void ap_cases(const ExperimentConfig& c, const NormSpec& spec, std::vector<Case>& cases) {
  if (spec.is_lp(2) || !check_property_P_prime(spec, default_t_grid()).holds) return;
  const double p = c.get("p_ap", 2.0);
  const int n_max = static_cast<int>(c.get("n_max", 3.0));
  cases.push_back([&c, spec, p, n_max] {
    auto r = make_record("ap_estimate", spec.to_string(), c.seed);
    const auto est = estimate_A_p(spec, p, n_max, c.seed);
    Json levels = Json::array();
    for (const auto& lv : est.levels) {
      levels.push_back({{"level", lv.level}, {"tested", lv.tested}, {"flinn_found", lv.flinn_found},
                        {"max_ratio", lv.max_ratio}, {"argmax", values_of(lv.argmax)}});
    }
    r.passed = est.bounded;
    r.verdict = est.bounded ? "bounded" : "growing";
    r.margin = est.constant;
    r.data = {{"p", p}, {"levels", levels}};
    return r;
  });
}

}  // namespace

SuiteReport run_suite(const ExperimentConfig& config) {
  if (config.experiments.empty()) throw std::invalid_argument("suite: no experiment named");
  const auto& names = experiment_names();
  for (const auto& e : config.experiments) {
    if (std::find(names.begin(), names.end(), e) == names.end()) throw std::invalid_argument("suite: unknown experiment '" + e + "'");
  }
  const auto norms = config.norms.empty() ? builtin_specs() : config.norms;
  std::vector<Case> cases;
  for (const auto& e : config.experiments) {
    if (e == "balance") {
      balance_cases(config, cases);
    } else if (e == "pvar") {
      pvar_cases(config, cases);
    } else {
      for (const auto& spec : norms) {
        if (e == "flinn_scan") flinn_cases(config, spec, cases);
        if (e == "kp") kp_cases(config, spec, cases);
        if (e == "boyd") boyd_cases(config, spec, cases);
        if (e == "classify") classify_cases(config, spec, cases);
        if (e == "uniqueness") uniqueness_cases(config, spec, cases);
        if (e == "ap_estimate") ap_cases(config, spec, cases);
      }
    }
  }

  SuiteReport report;
  report.records.resize(cases.size());
  std::vector<std::exception_ptr> errors(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      const auto start = std::chrono::steady_clock::now();
      try {
        report.records[i] = cases[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
      report.records[i].elapsed_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  };
  std::size_t n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, std::max<std::size_t>(cases.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& r : report.records) report.failures += r.passed ? 0 : 1;
  return report;
}

void write_report(std::ostream& out, const ExperimentConfig& config, const SuiteReport& report,
                  const std::string& timestamp) {
  Json header;
  header["header"] = true;
  header["timestamp"] = timestamp;
  header["config"] = config.to_json();
  header["cases"] = report.records.size();
  header["failures"] = report.failures;
  out << header.dump() << '\n';
  for (const auto& r : report.records) out << to_json(r, config.timing).dump() << '\n';
}

double replay_classification(const Json& record) {
  const auto& data = record.at("data");
  const auto spec = NormSpec::parse(data.at("norm").get<std::string>());
  const auto t = parse_operator(data.at("op").get<std::string>());
  const auto& w = record.at("witness");
  std::vector<Rational> breaks;
  for (const auto& b : w.at("breaks")) breaks.push_back(parse_rational(b.get<std::string>()));
  const PiecewiseFunction<double> f(std::move(breaks), w.at("values").get<std::vector<double>>());
  return std::abs(eval_norm(spec, apply_operator(t, f)) - eval_norm(spec, f));
}

}  // namespace rilab
