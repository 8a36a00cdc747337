#include "rilab/flinn_detection.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "rilab/lp.hpp"
#include "rilab/random.hpp"

namespace rilab {

std::string to_string(FlinnVerdict v) {
  switch (v) {
    case FlinnVerdict::kTrue:
      return "true";
    case FlinnVerdict::kFalse:
      return "false";
    case FlinnVerdict::kInconclusive:
      return "inconclusive";
  }
  return "?";
}

int flinn_level(const NormSpec& spec, const StepFunction& u, const StepFunction& f) {
  // X_0 is one-dimensional, where P = I for every pair
  return std::max({1, u.level(), f.level(), spec.min_level()});
}

bool has_exact_complement_norm(const NormSpec& spec) { return spec.is_lp(2) || has_polytope_ball(spec); }

namespace {

bool is_zero(const StepFunction& u) {
  return std::all_of(u.values().begin(), u.values().end(), [](double v) { return v == 0; });
}

double l2_norm(std::span<const double> v, double h) {
  double s = 0;
  for (double x : v) s += x * x * h;
  return std::sqrt(s);
}

}  // namespace

OperatorNorm complement_norm(const NormSpec& spec, const StepFunction& u, const StepFunction& f, int level) {
  const auto op = rank_one_complement(u, f, level);
  if (!spec.is_lp(2)) return operator_norm(spec, spec, op);
  OperatorNorm out = operator_norm(spec, spec, op, {.method = NormMethod::kMultistartAscent});
  const double h = std::ldexp(1.0, -level);
  // oblique projection in a Hilbert space: ||I - P|| = ||P|| = ||f|| ||u|| unless P = I
  const double exact = level == 0 ? 0.0 : l2_norm(refine(f, level).values(), h) * l2_norm(refine(u, level).values(), h);
  out.lower = std::max(std::min(out.lower, exact), exact);
  out.upper = exact;
  out.certified = true;
  out.method = "l2 analytic";
  return out;
}

FlinnCertificate is_flinn_pair(const FlinnCandidate& c, double tol) {
  if (is_zero(c.u)) throw std::invalid_argument("is_flinn_pair: u = 0 spans no projection");
  const double pair = pairing(c.f, c.u);
  if (std::abs(pair - 1) > 1e-12) {
    throw std::invalid_argument("is_flinn_pair: int f u = " + std::to_string(pair) + ", expected 1");
  }
  FlinnCertificate out;
  out.level = flinn_level(c.spec, c.u, c.f);
  const auto norm = complement_norm(c.spec, c.u, c.f, out.level);
  out.norm_lower = norm.lower;
  out.norm_upper = norm.upper;
  out.witness = norm.witness;
  out.method = norm.method;
  if (norm.certified && norm.upper && *norm.upper <= 1 + tol) {
    out.verdict = FlinnVerdict::kTrue;
  } else if (norm.lower > 1 + tol) {
    out.verdict = FlinnVerdict::kFalse;
  } else {
    out.verdict = FlinnVerdict::kInconclusive;
  }
  return out;
}

namespace {

/// Affine minorant L(f) = constant + grad . f of F(f) = ||I - f (x) u||.
struct Cut {
  double constant = 0;
  std::vector<double> grad;
  double at(std::span<const double> f) const {
    double s = constant;
    for (std::size_t j = 0; j < f.size(); ++j) s += grad[j] * f[j];
    return s;
  }
};

struct OracleValue {
  double value = 0;
  std::vector<Cut> cuts;  // most violated first
  std::vector<double> witness;
};

/// Evaluates F(f) = max_{||x|| <= 1} ||x - (int f x) u|| with cuts.
class ComplementOracle {
 public:
  ComplementOracle(const NormSpec& spec, const StepFunction& u, int level, std::uint64_t seed)
      : spec_(spec), level_(level), u_(refine(u, level)), seed_(seed) {
    n_ = u_.size();
    h_ = std::ldexp(1.0, -level);
    m_.assign(n_, h_);
    exact_ = spec_.is_lp(2) || build_vertices();
  }

  bool exact() const { return exact_; }
  std::size_t size() const { return n_; }
  double h() const { return h_; }
  const StepFunction& u() const { return u_; }

  /// With refresh off, non-exact specs reuse the witness pool without a new ascent.
  OracleValue evaluate(const std::vector<double>& f, std::size_t top_k = 4, bool refresh = true) {
    if (spec_.is_lp(2)) return l2(f);
    std::vector<std::pair<double, std::size_t>> scored;
    const auto& family = exact_ ? vertices_ : pool_;
    if (!exact_ && (refresh || pool_.empty())) {
      const auto norm = operator_norm(spec_, spec_, rank_one_complement(u_, StepFunction(level_, f), level_),
                                      {.method = NormMethod::kMultistartAscent, .seed = seed_ + calls_++});
      add_to_pool(std::vector<double>(norm.witness.values().begin(), norm.witness.values().end()));
    }
    for (std::size_t k = 0; k < family.size(); ++k) scored.emplace_back(residual_norm(family[k], f), k);
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(std::min(top_k, scored.size())),
                      scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    OracleValue out;
    out.value = scored.front().first;
    out.witness = family[scored.front().second];
    for (std::size_t k = 0; k < std::min(top_k, scored.size()); ++k) out.cuts.push_back(cut_for(family[scored[k].second], f));
    return out;
  }

 private:
  double residual_norm(const std::vector<double>& x, const std::vector<double>& f) const {
    return eval_norm(spec_, residual(x, f), m_);
  }

  std::vector<double> residual(const std::vector<double>& x, const std::vector<double>& f) const {
    double c = 0;
    for (std::size_t j = 0; j < n_; ++j) c += f[j] * x[j] * h_;
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) r[j] = x[j] - c * u_[j];
    return r;
  }

  Cut cut_for(const std::vector<double>& x, const std::vector<double>& f) const {
    const auto r = residual(x, f);
    const double value = eval_norm(spec_, r, m_);
    const auto psi = norm_gradient(spec_, r, m_);
    double s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += psi[j] * u_[j];
    Cut cut;
    cut.grad.resize(n_);
    cut.constant = value;
    for (std::size_t j = 0; j < n_; ++j) {
      cut.grad[j] = -s * x[j] * h_;
      cut.constant -= cut.grad[j] * f[j];
    }
    return cut;
  }

  OracleValue l2(const std::vector<double>& f) const {
    OracleValue out;
    const double nu = l2_norm(u_.values(), h_), nf = l2_norm(f, h_);
    Cut cut;
    cut.grad.assign(n_, 0.0);
    if (n_ == 1) {
      out.value = 0;
    } else {
      out.value = nf * nu;
      // gradient of ||f|| ||u||; the function is positively homogeneous so the constant vanishes
      for (std::size_t j = 0; j < n_; ++j) cut.grad[j] = nf > 0 ? nu * f[j] * h_ / nf : 0.0;
    }
    out.cuts.push_back(cut);
    out.witness = f;
    return out;
  }

  void add_to_pool(std::vector<double> x) {
    const double norm = eval_norm(spec_, x, m_);
    if (norm == 0) return;
    for (double& v : x) v /= norm;
    pool_.push_back(std::move(x));
    if (pool_.size() > 256) pool_.erase(pool_.begin());
  }

  bool build_vertices() {
    if (spec_.is_lp(1)) {
      for (std::size_t j = 0; j < n_; ++j) {
        std::vector<double> x(n_, 0.0);
        x[j] = 1 / h_;
        vertices_.push_back(std::move(x));
      }
      return true;
    }
    if (spec_.is_lp() && std::isinf(spec_.lp_exponent()) && n_ <= 20) {
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n_ - 1)); ++mask) {
        std::vector<double> x(n_);
        for (std::size_t j = 0; j < n_; ++j) x[j] = j > 0 && ((mask >> (j - 1)) & 1) ? -1.0 : 1.0;
        vertices_.push_back(std::move(x));
      }
      return true;
    }
    if (spec_.kind() == NormSpec::Kind::kLorentz && n_ <= 12) {
      std::vector<int> digit(n_, 0);
      while (true) {
        std::size_t k = 0;
        while (k < n_ && digit[k] == 2) digit[k++] = 0;
        if (k == n_) break;
        ++digit[k];
        const auto first = std::find_if(digit.begin(), digit.end(), [](int d) { return d != 0; });
        if (*first != 1) continue;
        std::vector<double> x(n_);
        for (std::size_t j = 0; j < n_; ++j) x[j] = digit[j] == 0 ? 0.0 : (digit[j] == 1 ? 1.0 : -1.0);
        const double norm = eval_norm(spec_, x, m_);
        for (double& v : x) v /= norm;
        vertices_.push_back(std::move(x));
      }
      return true;
    }
    return false;
  }

  const NormSpec& spec_;
  int level_;
  StepFunction u_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
  std::size_t n_ = 0;
  double h_ = 0;
  std::vector<double> m_;
  bool exact_ = false;
  std::vector<std::vector<double>> vertices_;
  std::vector<std::vector<double>> pool_;
};

/// Master problem over y = f + B in [0, 2B]^n with int f u = 1.
class CuttingPlaneMaster {
 public:
  CuttingPlaneMaster(std::vector<double> uh, double box) : uh_(std::move(uh)), box_(box) {}

  void add(Cut c) { cuts_.push_back(std::move(c)); }
  std::size_t size() const { return cuts_.size(); }

  /// Keeps the newest cuts and those largest at f.
  void prune(std::size_t max_cuts, std::span<const double> f, std::size_t keep_newest) {
    if (cuts_.size() <= max_cuts) return;
    const std::size_t old = cuts_.size() - keep_newest;
    std::vector<std::size_t> idx(old);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return cuts_[a].at(f) > cuts_[b].at(f); });
    idx.resize(max_cuts > keep_newest ? max_cuts - keep_newest : 0);
    std::sort(idx.begin(), idx.end());
    std::vector<Cut> kept;
    for (std::size_t i : idx) kept.push_back(std::move(cuts_[i]));
    for (std::size_t i = old; i < cuts_.size(); ++i) kept.push_back(std::move(cuts_[i]));
    cuts_ = std::move(kept);
  }

  /// min t s.t. t >= every cut.
  std::optional<std::pair<std::vector<double>, double>> minimize() const {
    const std::size_t n = uh_.size();
    LinearProgram lp;
    lp.c.assign(n + 1, 0.0);
    lp.c[n] = 1;
    for (const Cut& c : cuts_) {
      std::vector<double> row(c.grad);
      row.push_back(-1.0);
      lp.a_ub.push_back(std::move(row));
      lp.b_ub.push_back(shift(c) - c.constant);
    }
    add_box_and_pairing(lp, n + 1);
    const auto s = solve_lp(lp);
    if (s.status != LpStatus::kOptimal) return std::nullopt;
    std::vector<double> f(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(n));
    for (double& v : f) v -= box_;
    return std::make_pair(std::move(f), s.x[n]);
  }

  /// max (sign = +1) or min (sign = -1) of f_k s.t. every cut <= level.
  std::optional<std::vector<double>> extreme_coordinate(std::size_t k, double sign, double level) const {
    const std::size_t n = uh_.size();
    LinearProgram lp;
    lp.c.assign(n, 0.0);
    lp.c[k] = -sign;
    for (const Cut& c : cuts_) {
      lp.a_ub.push_back(c.grad);
      lp.b_ub.push_back(level - c.constant + shift(c));
    }
    add_box_and_pairing(lp, n);
    const auto s = solve_lp(lp);
    if (s.status != LpStatus::kOptimal) return std::nullopt;
    std::vector<double> f(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(n));
    for (double& v : f) v -= box_;
    return f;
  }

 private:
  double shift(const Cut& c) const { return std::accumulate(c.grad.begin(), c.grad.end(), 0.0) * box_; }

  void add_box_and_pairing(LinearProgram& lp, std::size_t width) const {
    const std::size_t n = uh_.size();
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> row(width, 0.0);
      row[j] = 1;
      lp.a_ub.push_back(std::move(row));
      lp.b_ub.push_back(2 * box_);
    }
    std::vector<double> eq(width, 0.0);
    std::copy(uh_.begin(), uh_.end(), eq.begin());
    lp.a_eq.push_back(std::move(eq));
    lp.b_eq.push_back(1 + box_ * std::accumulate(uh_.begin(), uh_.end(), 0.0));
  }

  std::vector<double> uh_;
  double box_;
  std::vector<Cut> cuts_;
};

std::vector<double> start_functional(const StepFunction& u) {
  const double h = std::ldexp(1.0, -u.level());
  double uu = 0;
  for (double v : u.values()) uu += v * v * h;
  std::vector<double> f(u.values().begin(), u.values().end());
  for (double& v : f) v /= uu;
  return f;
}

/// Coordinate box that must contain every f with F(f) <= value_bound.
double functional_box(const NormSpec& spec, const StepFunction& u, double value_bound, std::span<const double> f0) {
  const double ej = eval_norm(spec, StepFunction::basis(u.level(), 1));
  const double h = std::ldexp(1.0, -u.level());
  double box = 2 * (value_bound + 1) * ej / (h * eval_norm(spec, u));
  for (double v : f0) box = std::max(box, 2 * std::abs(v));
  return box;
}

std::vector<double> pairing_weights(const StepFunction& u) {
  const double h = std::ldexp(1.0, -u.level());
  std::vector<double> uh(u.values().begin(), u.values().end());
  for (double& v : uh) v *= h;
  return uh;
}

/// Directions spanning {d : int d u = 0}.
std::vector<std::vector<double>> tangent_directions(const std::vector<double>& uh) {
  double uu = 0;
  for (double v : uh) uu += v * v;
  std::vector<std::vector<double>> dirs;
  for (std::size_t j = 0; j < uh.size(); ++j) {
    std::vector<double> d(uh.size());
    for (std::size_t k = 0; k < uh.size(); ++k) d[k] = (k == j ? 1.0 : 0.0) - uh[j] * uh[k] / uu;
    double peak = 0;
    for (double v : d) peak = std::max(peak, std::abs(v));
    if (peak < 1e-12) continue;
    for (double& v : d) v /= peak;
    dirs.push_back(std::move(d));
  }
  return dirs;
}

}  // namespace

FlinnDefect flinn_defect(const NormSpec& spec, const StepFunction& u, const FlinnDefectOptions& opt) {
  if (is_zero(u)) throw std::invalid_argument("flinn_defect: u = 0");
  FlinnDefect out;
  out.level = std::max({1, opt.level, u.level(), spec.min_level()});
  ComplementOracle oracle(spec, u, out.level, opt.seed);
  const StepFunction& uu = oracle.u();
  const std::size_t n = oracle.size();
  auto f = start_functional(uu);

  if (spec.is_lp(2)) {
    // Cauchy-Schwarz: ||f|| ||u|| >= int f u = 1, with equality at f = u / int u^2
    out.f = StepFunction(out.level, f);
    const auto norm = complement_norm(spec, uu, out.f, out.level);
    out.value = *norm.upper;
    out.lower_bound = 1;
    out.defect = 0;
    out.witness = norm.witness;
    out.certified = out.converged = true;
    out.method = "l2 analytic";
    return out;
  }

  auto ev = oracle.evaluate(f);
  double best_value = ev.value;
  std::vector<double> best_f = f;
  const auto uh = pairing_weights(uu);
  CuttingPlaneMaster master(uh, functional_box(spec, uu, best_value, f));
  for (auto& c : ev.cuts) master.add(std::move(c));

  double lower = -kInf;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const auto sol = master.minimize();
    if (!sol) break;
    lower = std::max(lower, sol->second);
    if (best_value - lower <= opt.gap) {
      out.converged = true;
      break;
    }
    ev = oracle.evaluate(sol->first);
    const std::size_t added = ev.cuts.size();
    for (auto& c : ev.cuts) master.add(std::move(c));
    if (ev.value < best_value) {
      best_value = ev.value;
      best_f = sol->first;
    }
    if (best_value - lower <= opt.gap) {
      out.converged = true;
      break;
    }
    master.prune(opt.max_cuts, sol->first, added);
  }
  out.iterations = it;
  out.method = oracle.exact() ? "cutting planes, extreme points" : "cutting planes, multistart ascent";

  if (opt.polish && (!oracle.exact() || !out.converged)) {
    // pattern search along the constraint set against the witness pool, then
    // a fresh ascent at the result; repeat while the ascent finds more
    const auto dirs = tangent_directions(uh);
    for (int round = 0; round < 4; ++round) {
      best_value = oracle.evaluate(best_f, 1, false).value;
      double step = 0.1;
      for (double v : best_f) step = std::max(step, 0.1 * std::abs(v));
      while (step > 1e-9) {
        bool improved = false;
        for (const auto& d : dirs) {
          for (double sign : {1.0, -1.0}) {
            std::vector<double> cand(best_f);
            for (std::size_t j = 0; j < n; ++j) cand[j] += sign * step * d[j];
            const double v = oracle.evaluate(cand, 1, false).value;
            if (v < best_value - 1e-15) {
              best_value = v;
              best_f = std::move(cand);
              improved = true;
            }
          }
        }
        if (!improved) step *= 0.5;
      }
      const double fresh = oracle.evaluate(best_f, 1, true).value;
      if (fresh <= best_value + 1e-12) break;
      best_value = fresh;
    }
    out.method += " + pattern search";
  }

  out.f = StepFunction(out.level, best_f);
  const auto final_norm = complement_norm(spec, uu, out.f, out.level);
  out.value = oracle.exact() ? best_value : std::max(best_value, final_norm.lower);
  out.witness = final_norm.witness;
  out.lower_bound = std::min(lower, out.value);
  out.defect = std::max(0.0, out.value - 1);
  out.certified = oracle.exact() && out.converged;
  return out;
}

SignCheck verify_sign_condition(const FlinnCandidate& c, double tol) {
  const auto [u, f] = common_level(c.u, c.f);
  SignCheck out;
  out.min_product = kInf;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = u[i] * f[i];
    if (p < out.min_product) {
      out.min_product = p;
      out.worst_cell = i;
    }
  }
  out.holds = out.min_product >= -tol;
  return out;
}

LocalQuadraticFit recover_local_l2_weight(const NormSpec& spec, const StepFunction& u, int n_samples,
                                          std::uint64_t seed, double defect_tol) {
  const auto defect = flinn_defect(spec, u);
  if (defect.defect > defect_tol) {
    throw std::invalid_argument("recover_local_l2_weight: u is not a Flinn element (defect " +
                                std::to_string(defect.defect) + ")");
  }
  LocalQuadraticFit out;
  out.level = defect.level;
  const StepFunction uu = refine(u, out.level);
  const std::size_t n = uu.size();
  const double h = std::ldexp(1.0, -out.level);
  std::vector<std::size_t> supp, off;
  for (std::size_t i = 0; i < n; ++i) (uu[i] != 0 ? supp : off).push_back(i);

  Rng rng(seed);
  auto random_on = [&](const std::vector<std::size_t>& cells) {
    auto x = StepFunction::zero(out.level);
    for (std::size_t i : cells) x[i] = rng.uniform(-1.0, 1.0);
    return x;
  };
  const auto samples = static_cast<std::size_t>(std::max<int>(n_samples, static_cast<int>(supp.size())));
  Eigen::MatrixXd a(samples, supp.size());
  Eigen::VectorXd b(samples);
  std::vector<StepFunction> xs;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto x = random_on(supp);
    for (std::size_t k = 0; k < supp.size(); ++k) a(s, k) = x[supp[k]] * x[supp[k]] * h;
    const double nx = eval_norm(spec, x);
    b(s) = nx * nx;
    xs.push_back(x);
  }
  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(b);
  out.weight.assign(n, 0.0);
  for (std::size_t k = 0; k < supp.size(); ++k) out.weight[supp[k]] = w(k);
  const Eigen::VectorXd r = a * w - b;
  for (std::size_t s = 0; s < samples; ++s) out.residual = std::max(out.residual, std::abs(r(s)) / b(s));
  out.samples = samples;

  if (!off.empty()) {
    for (int k = 0; k < 50; ++k) {
      const auto v = random_on(off);
      const auto x = random_on(supp);
      auto y = random_on(supp);
      y = (eval_norm(spec, x) / eval_norm(spec, y)) * y;
      out.condition_b = std::max(out.condition_b, std::abs(eval_norm(spec, v + x) - eval_norm(spec, v + y)));
    }
  }
  return out;
}

FunctionalUniqueness verify_functional_uniqueness(const NormSpec& spec, int level, std::int64_t j, double dev_tol, double slack) {
  if (!check_property_P(spec, default_t_grid()).holds) {
    throw std::invalid_argument("verify_functional_uniqueness: " + spec.to_string() + " lacks property (P)");
  }
  if (level < spec.min_level()) throw std::invalid_argument("verify_functional_uniqueness: level below the norm level");
  const auto u = StepFunction::basis(level, j);
  FunctionalUniqueness out;
  const auto d = flinn_defect(spec, u, {.level = level});
  out.defect = d.defect;
  out.flinn_exists = d.value <= 1 + slack;
  if (!out.flinn_exists) {
    out.holds = true;  // nothing to compare
    out.certified = d.certified;
    return out;
  }

  const std::size_t n = u.size();
  const double h = std::ldexp(1.0, -level);
  std::vector<double> target(n, 0.0);
  target[static_cast<std::size_t>(j - 1)] = 1 / h;
  out.lower.assign(n, 0.0);
  out.upper.assign(n, 0.0);
  if (spec.is_lp(2)) {
    // {||f|| <= (1 + slack) / ||u||} cut by the hyperplane int f u = 1 is a
    // ball around u / ||u||^2 of radius rho; coordinate k is int f e_k / h
    const double uu = h;
    const double radius = (1 + slack) / std::sqrt(uu);
    const double rho = std::sqrt(std::max(0.0, radius * radius - 1 / uu));
    for (std::size_t k = 0; k < n; ++k) {
      // squared norm of e_k / h after removing its component along u
      const double along = k == static_cast<std::size_t>(j - 1) ? 1.0 : 0.0;
      const double spread = rho * std::sqrt(std::max(0.0, 1 / h - along * along / uu));
      out.lower[k] = target[k] - spread;
      out.upper[k] = target[k] + spread;
      out.max_deviation = std::max(out.max_deviation, spread);
    }
    out.holds = out.max_deviation <= dev_tol;
    out.certified = true;
    return out;
  }

  ComplementOracle oracle(spec, u, level, 5);
  const auto uh = pairing_weights(u);
  CuttingPlaneMaster master(uh, functional_box(spec, u, 1 + slack, d.f.values()));
  for (auto& c : oracle.evaluate(std::vector<double>(d.f.values().begin(), d.f.values().end())).cuts) master.add(c);
  bool all_converged = true;
  for (std::size_t k = 0; k < n; ++k) {
    for (double sign : {1.0, -1.0}) {
      std::optional<std::vector<double>> sol;
      bool converged = false;
      for (int it = 0; it < 400; ++it) {
        sol = master.extreme_coordinate(k, sign, 1 + slack);
        if (!sol) break;
        const auto ev = oracle.evaluate(*sol);
        if (ev.value <= 1 + slack + 1e-12) {
          converged = true;
          break;
        }
        for (const auto& c : ev.cuts) master.add(c);
      }
      all_converged = all_converged && converged;
      if (!sol) continue;
      (sign > 0 ? out.upper : out.lower)[k] = (*sol)[k];
      out.max_deviation = std::max(out.max_deviation, std::abs((*sol)[k] - target[k]));
    }
  }
  out.holds = out.max_deviation <= dev_tol;
  out.certified = oracle.exact() && all_converged;
  return out;
}

ApEstimate estimate_A_p(const NormSpec& spec, double p, int n_max, std::uint64_t seed, double defect_tol) {
  if (!(p > 0)) throw std::invalid_argument("estimate_A_p: p must be positive");
  if (spec.is_lp(2)) throw std::invalid_argument("estimate_A_p: L_2 is excluded");
  if (!check_property_P_prime(spec, default_t_grid()).holds) {
    throw std::invalid_argument("estimate_A_p: " + spec.to_string() + " lacks property (P')");
  }
  ApEstimate out;
  Rng rng(seed);
  for (int n = std::max(1, spec.min_level()); n <= n_max; ++n) {
    const std::size_t cells = std::size_t{1} << n;
    std::vector<StepFunction> cands;
    cands.push_back(StepFunction::basis(n, 1));
    cands.push_back(StepFunction::basis(n, 1) + StepFunction::basis(n, 2));
    cands.push_back(StepFunction::basis(n, 1) + 0.5 * StepFunction::basis(n, 2));
    cands.push_back(StepFunction::constant(n, 1.0));
    if (cells >= 4) cands.push_back(refine(StepFunction::basis(1, 1), n));
    if (cells >= 4) cands.push_back(StepFunction::basis(n, 1) + StepFunction::basis(n, 2) + StepFunction::basis(n, 3));
    for (int k = 0; k < 3; ++k) {
      auto x = StepFunction::zero(n);
      for (auto& v : x.values()) v = rng.uniform();
      cands.push_back(x);
    }
    ApLevel lv;
    lv.level = n;
    for (const auto& u : cands) {
      ++lv.tested;
      const auto d = flinn_defect(spec, u, {.level = n, .seed = rng.next()});
      if (d.defect > defect_tol) continue;
      ++lv.flinn_found;
      double sum = 0, peak = 0;
      for (double a : u.values()) {
        sum += std::pow(std::abs(a), p);
        peak = std::max(peak, std::abs(a));
      }
      const double ratio = std::pow(sum, 1 / p) / peak;
      if (ratio > lv.max_ratio) {
        lv.max_ratio = ratio;
        lv.argmax = u;
      }
    }
    out.constant = std::max(out.constant, lv.max_ratio);
    out.levels.push_back(std::move(lv));
  }
  out.bounded = true;
  for (std::size_t k = 1; k < out.levels.size(); ++k) {
    if (out.levels[k].max_ratio > out.levels[k - 1].max_ratio + 1e-6) out.bounded = false;
  }
  return out;
}

SignSeparation find_separating_sign_vector(const StepFunction& f0, const StepFunction& g0, std::uint64_t seed) {
  const auto [f, g] = common_level(f0, g0);
  const std::size_t n = f.size();
  const double h = std::ldexp(1.0, -f.level());
  double l1 = 0, ff = 0, fg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    l1 += std::abs(f[i]) * h;
    ff += f[i] * f[i] * h;
    fg += f[i] * g[i] * h;
  }
  if (l1 == 0) throw std::invalid_argument("find_separating_sign_vector: int |f| = 0");
  SignSeparation out;
  out.c = std::max(0.0, fg / ff);
  for (std::size_t i = 0; i < n; ++i) out.residual += std::abs(g[i] - out.c * f[i]) * h;

  double scale = 0;
  for (std::size_t i = 0; i < n; ++i) scale += (std::abs(f[i]) + std::abs(g[i])) * h;
  const double threshold = -1e-14 * scale * scale;
  double best = threshold;
  std::vector<double> best_h;
  auto consider = [&](const std::vector<double>& hv) {
    double a = 0, b = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a += hv[i] * f[i] * h;
      b += hv[i] * g[i] * h;
    }
    if (a * b < best) {
      best = a * b;
      best_h = hv;
      out.hf = a;
      out.hg = b;
    }
  };
  std::vector<double> hv(n);
  if (n <= 20) {
    out.exhaustive = true;
    // h_1 = +1 fixes the global sign; masks run from all-minus downwards
    for (std::uint64_t mask = std::uint64_t{1} << (n - 1); mask-- > 0;) {
      for (std::size_t i = 0; i < n; ++i) hv[i] = i > 0 && ((mask >> (i - 1)) & 1) ? -1.0 : 1.0;
      consider(hv);
    }
  } else {
    Rng rng(seed);
    for (int trial = 0; trial < 4096; ++trial) {
      for (double& v : hv) v = rng.sign();
      consider(hv);
      // greedy single flips
      for (std::size_t i = 0; i < n; ++i) {
        hv[i] = -hv[i];
        consider(hv);
        hv[i] = -hv[i];
      }
    }
  }
  if (!best_h.empty()) out.h = StepFunction(f.level(), best_h);
  return out;
}

}  // namespace rilab
