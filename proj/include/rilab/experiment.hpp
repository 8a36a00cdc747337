#pragma once

// Isometry classification and the reproducible experiment suites behind the
// CLI. Reports are JSON lines: one header record carrying the timestamp and
// the configuration, then one record per case in case order.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rilab/operator_algebra.hpp"
#include "rilab/symmetric_norms.hpp"

namespace rilab {

enum class Branch { kTrivialForm, kLpLampertiForm, kNotIsometry, kInconsistent };
std::string to_string(Branch b);

struct ClassificationVerdict {
  IsometryVerdict is_isometry = IsometryVerdict::kNotRefuted;
  bool modulus_one = false;         // all |a_i| = 1 within 1e-10
  bool measure_preserving = false;  // every piece has weight 1, exactly
  Branch branch = Branch::kNotIsometry;
  bool lamperti_exact = false;      // Lamperti condition decided in rationals
  IsometryCertificate certificate;
};

/// Trivial form needs |a| = 1 and a measure-preserving map; the Lamperti form
/// is reserved for L_p; a non-L_p isometry of any other shape is inconsistent.
ClassificationVerdict classify_isometry(const NormSpec& spec, const ElementaryOperator& t, double tol = 1e-9);

/// sigma: [0,1/2] -> [0,1/4], (1/2,1] -> (1/4,1] with a_i = w_i^{-1/p}.
ElementaryOperator lamperti_example(double p);

/// T V_tau1 T V_tau2 T.
ElementaryOperator threefold_composition(const ElementaryOperator& t, const MeasureMap& tau1, const MeasureMap& tau2);

struct Candidate {
  std::string generator;
  ElementaryOperator op;
};

/// Candidate k of the classify suite; the generator cycles through signed
/// permutations, automorphisms, Lamperti operators, random operators,
/// threefold compositions and scaled identities.
Candidate classify_candidate(const NormSpec& spec, std::uint64_t seed, std::size_t k);

/// Flat key=value configuration; `#` starts a comment.
struct ExperimentConfig {
  std::vector<std::string> experiments;
  std::vector<NormSpec> norms;  // all built-in specs when the key is absent
  std::uint64_t seed = 7;
  std::size_t samples = 100;
  double tol = 1e-9;
  int level = 2;
  int level_cap = kDefaultLevelCap;
  std::string out;      // empty: stdout
  std::string op_file;  // operator for kp and classify; generated when empty
  bool timing = true;   // false writes elapsed_ms = 0 for byte-stable reports
  std::size_t threads = 0;  // 0: hardware concurrency
  std::map<std::string, std::string> extra;

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::string& path);
  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  nlohmann::ordered_json to_json() const;
};

struct Record {
  std::string experiment;
  std::string case_id;
  std::uint64_t seed = 0;
  std::string verdict;
  double margin = 0;
  nlohmann::ordered_json witness;  // null when there is none
  double elapsed_ms = 0;
  bool passed = true;
  nlohmann::ordered_json data = nlohmann::ordered_json::object();
};

nlohmann::ordered_json to_json(const Record& r, bool timing);

struct SuiteReport {
  std::vector<Record> records;
  std::size_t failures = 0;
};

/// Throws std::invalid_argument for unknown or missing experiment names.
SuiteReport run_suite(const ExperimentConfig& config);

const std::vector<std::string>& experiment_names();

void write_report(std::ostream& out, const ExperimentConfig& config, const SuiteReport& report,
                  const std::string& timestamp);

/// | ||Tf|| - ||f|| | recomputed from a classify record alone.
double replay_classification(const nlohmann::ordered_json& record);

}  // namespace rilab
