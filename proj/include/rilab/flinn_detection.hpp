#pragma once

// Rank-one projections P = f (x) u on the level-N span X_N, the test
// ||I - P|| = 1 for Flinn pairs, the Flinn defect by cutting planes, and the
// structural checks built on them.

#include <optional>
#include <string>
#include <vector>

#include "rilab/operator_algebra.hpp"
#include "rilab/symmetric_norms.hpp"

namespace rilab {

/// u in X, f acting by g -> int f g. Well formed when int f u = 1.
struct FlinnCandidate {
  StepFunction u;
  StepFunction f;
  NormSpec spec;
};

enum class FlinnVerdict { kTrue, kFalse, kInconclusive };
std::string to_string(FlinnVerdict v);

struct FlinnCertificate {
  FlinnVerdict verdict = FlinnVerdict::kInconclusive;
  double norm_lower = 0;              // lower bound for ||I - P||
  std::optional<double> norm_upper;   // exact inner oracles only
  StepFunction witness;               // x attaining norm_lower
  int level = 0;
  std::string method;
};

/// Working level for u and f: max of 1, their levels and the norm's level.
int flinn_level(const NormSpec& spec, const StepFunction& u, const StepFunction& f);

/// True when ||I - P|| on X_N can be computed exactly (L_1, L_2, L_inf, Lorentz).
bool has_exact_complement_norm(const NormSpec& spec);

/// ||I - f (x) u|| on X_N. Exact for the norms above, an ascent lower bound otherwise.
OperatorNorm complement_norm(const NormSpec& spec, const StepFunction& u, const StepFunction& f, int level);

FlinnCertificate is_flinn_pair(const FlinnCandidate& c, double tol = 1e-9);

struct FlinnDefectOptions {
  int level = 0;  // raised to 1 and to the levels of u and the norm
  int max_iterations = 200;
  std::size_t max_cuts = 64;
  double gap = 1e-8;
  bool polish = true;
  std::uint64_t seed = 3;
};

struct FlinnDefect {
  double defect = 0;       // max(value - 1, 0)
  double value = 0;        // best ||I - f (x) u|| found
  double lower_bound = 0;  // cutting-plane lower bound for inf_f ||I - f (x) u||
  StepFunction f;
  StepFunction witness;    // maximizer of ||(I - P)x|| at the returned f
  bool certified = false;  // inner oracle exact and gap closed
  bool converged = false;
  int iterations = 0;
  int level = 0;
  std::string method;
};

/// inf over f with int f u = 1 of ||I - f (x) u|| - 1, within X_N.
FlinnDefect flinn_defect(const NormSpec& spec, const StepFunction& u, const FlinnDefectOptions& opt = {});

struct SignCheck {
  bool holds = false;
  double min_product = 0;  // min_i f_i u_i
  std::size_t worst_cell = 0;
};

/// f_i u_i >= -tol on every cell of the common refinement.
SignCheck verify_sign_condition(const FlinnCandidate& c, double tol = 1e-10);

struct LocalQuadraticFit {
  std::vector<double> weight;   // per cell of the working level, 0 off supp u
  double residual = 0;          // max relative error of the quadratic form
  double condition_b = 0;       // max | ||v + x|| - ||v + y|| | over ||x|| = ||y||
  std::size_t samples = 0;
  int level = 0;
};

/// Fits ||x||^2 = sum x_i^2 h w_i over x supported on supp u and probes
/// whether ||v + x|| depends on x only through ||x|| for v off supp u.
/// Requires flinn_defect(spec, u) <= defect_tol.
LocalQuadraticFit recover_local_l2_weight(const NormSpec& spec, const StepFunction& u, int n_samples = 64,
                                          std::uint64_t seed = 1, double defect_tol = 1e-8);

struct FunctionalUniqueness {
  bool flinn_exists = false;  // some f makes (e^N_j, f) Flinn in X_N
  double defect = 0;
  double max_deviation = 0;   // sup ||f - 2^N e^N_j||_inf over the Flinn functionals found
  std::vector<double> lower;  // coordinate ranges of the Flinn functionals
  std::vector<double> upper;
  bool holds = false;
  bool certified = false;
};

/// With property (P), the only functional making (e^N_j, f) Flinn is
/// f = 2^N e^N_j. Coordinates of the feasible set are bounded by cutting
/// planes on {int f u = 1, ||I - P|| <= 1 + slack}.
FunctionalUniqueness verify_functional_uniqueness(const NormSpec& spec, int level, std::int64_t j, double dev_tol = 1e-4,
                                      double slack = 1e-10);

struct ApLevel {
  int level = 0;
  std::size_t tested = 0;
  std::size_t flinn_found = 0;
  double max_ratio = 0;
  StepFunction argmax;
};

struct ApEstimate {
  std::vector<ApLevel> levels;
  double constant = 0;  // max ratio over all levels
  bool bounded = false; // no growth from one level to the next
};

/// (sum |a_i|^p)^{1/p} / max |a_i| over Flinn elements found in X_n, n <= n_max.
ApEstimate estimate_A_p(const NormSpec& spec, double p, int n_max, std::uint64_t seed = 1, double defect_tol = 1e-8);

struct SignSeparation {
  std::optional<StepFunction> h;  // |h| = 1 with (int h f)(int h g) < 0
  double hf = 0;
  double hg = 0;
  double c = 0;         // least-squares c >= 0 for g ~ c f
  double residual = 0;  // ||g - c f||_1
  bool exhaustive = false;
};

/// Searches sign vectors h for (int h f)(int h g) < 0; exhaustive up to 20 cells.
SignSeparation find_separating_sign_vector(const StepFunction& f, const StepFunction& g, std::uint64_t seed = 1);

}  // namespace rilab
