#include "rilab/symmetric_norms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rilab/random.hpp"

namespace rilab {

namespace {

constexpr double kLuxemburgTol = 1e-12;
constexpr int kLuxemburgIterations = 200;

/// Omega(t) = integral_0^t of the Lorentz density 2^L W_k on cell k.
double lorentz_primitive(const LorentzNorm& n, double t) {
  const double h = std::ldexp(1.0, -n.level);
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  const auto k = static_cast<std::size_t>(std::min(t / h, static_cast<double>(n.weights.size() - 1)));
  double prefix = 0;
  for (std::size_t i = 0; i < k; ++i) prefix += n.weights[i];
  return prefix + n.weights[k] * (t - static_cast<double>(k) * h) / h;
}

std::vector<std::size_t> order_by_modulus(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
  return idx;
}

double lp_value(double p, std::span<const double> v, std::span<const double> m) {
  double peak = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (m[i] > 0) peak = std::max(peak, std::abs(v[i]));
  }
  if (std::isinf(p) || peak == 0) return peak;
  if (p == 1) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += m[i] * std::abs(v[i]);
    return s;
  }
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += m[i] * std::pow(std::abs(v[i]) / peak, p);
  return peak * std::pow(s, 1.0 / p);
}

double lorentz_value(const LorentzNorm& n, std::span<const double> v, std::span<const double> m) {
  double t = 0, prev = 0, sum = 0;
  for (std::size_t i : order_by_modulus(v)) {
    t += m[i];
    const double next = lorentz_primitive(n, t);
    sum += std::abs(v[i]) * (next - prev);
    prev = next;
  }
  return sum;
}

double orlicz_modular(const OrliczNorm& phi, std::span<const double> v, std::span<const double> m, double lambda) {
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += m[i] * phi(std::abs(v[i]) / lambda);
  return s;
}

double orlicz_value(const OrliczNorm& phi, std::span<const double> v, std::span<const double> m) {
  double l1 = 0, sup = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    l1 += m[i] * std::abs(v[i]);
    if (m[i] > 0) sup = std::max(sup, std::abs(v[i]));
  }
  if (sup == 0) return 0;
  const double top = phi.x.back();
  double lo = l1 / top;
  double hi = sup * top;
  if (orlicz_modular(phi, v, m, hi) > 1 + 1e-12 || orlicz_modular(phi, v, m, lo) < 1 - 1e-12) {
    throw std::runtime_error("Orlicz norm: bisection failed to bracket (malformed Young function table)");
  }
  for (int it = 0; it < kLuxemburgIterations && hi - lo > kLuxemburgTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (orlicz_modular(phi, v, m, mid) <= 1) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<double> uniform_measures(const StepFunction& f) {
  return std::vector<double>(f.size(), std::ldexp(1.0, -f.level()));
}

std::vector<double> piece_measures(const PiecewiseFunction<double>& f) {
  std::vector<double> m(f.pieces());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = to_double(f.piece_length(k));
  return m;
}

StepFunction at_norm_level(const NormSpec& spec, const StepFunction& f) {
  return f.level() >= spec.min_level() ? f : refine(f, spec.min_level());
}

std::vector<std::string> split_ws(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("NormSpec: bad number '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("NormSpec: bad number '" + s + "'");
  return v;
}

}  // namespace

double OrliczNorm::operator()(double t) const {
  if (t <= 0) return 0;
  auto it = std::upper_bound(x.begin(), x.end(), t);
  std::size_t k = it == x.end() ? x.size() - 2 : static_cast<std::size_t>(it - x.begin()) - 1;
  const double s = (phi[k + 1] - phi[k]) / (x[k + 1] - x[k]);
  return phi[k] + s * (t - x[k]);
}

double OrliczNorm::slope(double t) const {
  auto it = std::upper_bound(x.begin(), x.end(), t);
  std::size_t k = it == x.end() ? x.size() - 2 : static_cast<std::size_t>(it - x.begin()) - 1;
  return (phi[k + 1] - phi[k]) / (x[k + 1] - x[k]);
}

double OrliczNorm::max_slope() const {
  const std::size_t n = x.size();
  return (phi[n - 1] - phi[n - 2]) / (x[n - 1] - x[n - 2]);
}

double OrliczNorm::conjugate(double y) const {
  if (y > max_slope() * (1 + 1e-15)) return kInf;
  double best = 0;
  for (std::size_t j = 0; j < x.size(); ++j) best = std::max(best, x[j] * y - phi[j]);
  return best;
}

NormSpec NormSpec::lp(double p) {
  if (!(p >= 1)) throw std::invalid_argument("NormSpec: L_p needs p >= 1");
  return NormSpec(LpNorm{p});
}

NormSpec NormSpec::lorentz(int level, std::vector<double> weights) {
  detail::check_level(level);
  if (weights.size() != (std::size_t{1} << level)) throw std::invalid_argument("Lorentz: need 2^L weights");
  double sum = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0)) throw std::invalid_argument("Lorentz: weights must be positive");
    if (i > 0 && weights[i] > weights[i - 1]) throw std::invalid_argument("Lorentz: weights must be nonincreasing");
    sum += weights[i];
  }
  if (std::abs(sum - 1) > 1e-12) throw std::invalid_argument("Lorentz: weights must sum to 1");
  return NormSpec(LorentzNorm{level, std::move(weights)});
}

NormSpec NormSpec::orlicz(std::vector<double> x, std::vector<double> phi) {
  if (x.size() != phi.size() || x.size() < 2) throw std::invalid_argument("Orlicz: need at least two samples");
  if (x[0] != 0 || phi[0] != 0) throw std::invalid_argument("Orlicz: table must start at (0, 0)");
  double prev_slope = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw std::invalid_argument("Orlicz: sample points must increase");
    const double s = (phi[i] - phi[i - 1]) / (x[i] - x[i - 1]);
    if (!(s > 0)) throw std::invalid_argument("Orlicz: Young function must be increasing");
    if (s < prev_slope - 1e-12) throw std::invalid_argument("Orlicz: Young function must be convex");
    prev_slope = s;
  }
  if (x.back() < 1) throw std::invalid_argument("Orlicz: table must reach x = 1");
  OrliczNorm table{std::move(x), std::move(phi)};
  const double at_one = table(1.0);
  for (double& v : table.phi) v /= at_one;
  return NormSpec(std::move(table));
}

NormSpec NormSpec::parse(std::string_view text) {
  auto tok = split_ws(text);
  if (tok.empty()) throw std::invalid_argument("NormSpec: empty");
  if (tok[0] == "lp") {
    if (tok.size() != 2) throw std::invalid_argument("NormSpec: expected `lp <p>`");
    return lp(tok[1] == "inf" ? kInf : parse_double(tok[1]));
  }
  if (tok[0] == "lorentz") {
    if (tok.size() < 2) throw std::invalid_argument("NormSpec: expected `lorentz <L> <W...>`");
    const int level = static_cast<int>(parse_double(tok[1]));
    std::vector<double> w;
    for (std::size_t i = 2; i < tok.size(); ++i) w.push_back(parse_double(tok[i]));
    return lorentz(level, std::move(w));
  }
  if (tok[0] == "orlicz") {
    if (tok.size() < 2) throw std::invalid_argument("NormSpec: expected `orlicz <n> ...`");
    const auto n = static_cast<std::size_t>(parse_double(tok[1]));
    if (tok.size() != 2 + 2 * n) throw std::invalid_argument("NormSpec: orlicz table length mismatch");
    std::vector<double> x, phi;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(parse_double(tok[2 + 2 * i]));
      phi.push_back(parse_double(tok[3 + 2 * i]));
    }
    return orlicz(std::move(x), std::move(phi));
  }
  throw std::invalid_argument("NormSpec: unknown kind '" + tok[0] + "'");
}

std::string NormSpec::to_string() const {
  // shortest text that parses back to the same doubles
  auto num = [](double x) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, x).ptr);
  };
  std::string out;
  switch (kind()) {
    case Kind::kLp:
      out = std::isinf(lp_exponent()) ? "lp inf" : "lp " + num(lp_exponent());
      break;
    case Kind::kLorentz:
      out = "lorentz " + std::to_string(lorentz().level);
      for (double w : lorentz().weights) out += ' ' + num(w);
      break;
    case Kind::kOrlicz:
      out = "orlicz " + std::to_string(orlicz().x.size());
      for (std::size_t i = 0; i < orlicz().x.size(); ++i) out += ' ' + num(orlicz().x[i]) + ' ' + num(orlicz().phi[i]);
      break;
  }
  return out;
}

NormSpec::Kind NormSpec::kind() const { return static_cast<Kind>(data_.index()); }

double eval_norm(const NormSpec& spec, std::span<const double> values, std::span<const double> measures) {
  if (values.size() != measures.size()) throw std::invalid_argument("eval_norm: size mismatch");
  switch (spec.kind()) {
    case NormSpec::Kind::kLp:
      return lp_value(spec.lp_exponent(), values, measures);
    case NormSpec::Kind::kLorentz:
      return lorentz_value(spec.lorentz(), values, measures);
    case NormSpec::Kind::kOrlicz:
      return orlicz_value(spec.orlicz(), values, measures);
  }
  return 0;
}

double eval_norm(const NormSpec& spec, const StepFunction& f) {
  return eval_norm(spec, f.values(), uniform_measures(f));
}

double eval_norm(const NormSpec& spec, const PiecewiseFunction<double>& f) {
  return eval_norm(spec, f.values(), piece_measures(f));
}

std::vector<double> norm_gradient(const NormSpec& spec, std::span<const double> v, std::span<const double> m) {
  std::vector<double> g(v.size(), 0.0);
  auto sgn = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
  const double norm = eval_norm(spec, v, m);
  if (norm == 0) return g;
  switch (spec.kind()) {
    case NormSpec::Kind::kLp: {
      const double p = spec.lp_exponent();
      if (std::isinf(p)) {
        std::size_t best = 0;
        double peak = -1;
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (m[i] > 0 && std::abs(v[i]) > peak) {
            peak = std::abs(v[i]);
            best = i;
          }
        }
        g[best] = sgn(v[best]);
      } else {
        for (std::size_t i = 0; i < v.size(); ++i) {
          g[i] = m[i] * sgn(v[i]) * std::pow(std::abs(v[i]) / norm, p - 1);
        }
      }
      break;
    }
    case NormSpec::Kind::kLorentz: {
      double t = 0, prev = 0;
      for (std::size_t i : order_by_modulus(v)) {
        t += m[i];
        const double next = lorentz_primitive(spec.lorentz(), t);
        g[i] = sgn(v[i]) * (next - prev);
        prev = next;
      }
      break;
    }
    case NormSpec::Kind::kOrlicz: {
      const auto& phi = spec.orlicz();
      double denom = 0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = std::abs(v[i]) / norm;
        denom += m[i] * phi.slope(r) * r;
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        g[i] = m[i] * phi.slope(std::abs(v[i]) / norm) * sgn(v[i]) / denom;
      }
      break;
    }
  }
  return g;
}

StepFunction decreasing_rearrangement(const StepFunction& f) {
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x = std::abs(x);
  std::sort(v.begin(), v.end(), std::greater<>());
  return {f.level(), std::move(v)};
}

DualNorm dual_norm(const NormSpec& spec, const StepFunction& g, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("dual_norm: tol must be positive");
  DualNorm out;
  switch (spec.kind()) {
    case NormSpec::Kind::kLp: {
      const double p = spec.lp_exponent();
      const double q = std::isinf(p) ? 1.0 : (p == 1 ? kInf : p / (p - 1));
      out.value = eval_norm(NormSpec::lp(q), g);
      out.method = "conjugate exponent";
      break;
    }
    case NormSpec::Kind::kLorentz: {
      // The Lorentz ball is the polytope spanned by signed indicators of k
      // cells scaled by 1/Omega(k h); the sup sits at one of them.
      const StepFunction gs = decreasing_rearrangement(at_norm_level(spec, g));
      const double h = std::ldexp(1.0, -gs.level());
      double partial = 0, best = 0;
      for (std::size_t k = 0; k < gs.size(); ++k) {
        partial += gs[k] * h;
        best = std::max(best, partial / lorentz_primitive(spec.lorentz(), static_cast<double>(k + 1) * h));
      }
      out.value = best;
      out.method = "lorentz extreme points";
      break;
    }
    case NormSpec::Kind::kOrlicz: {
      // Amemiya: ||g||_{X'} = inf_k (1 + int phi*(k|g|)) / k.
      const auto& phi = spec.orlicz();
      const double h = std::ldexp(1.0, -g.level());
      double sup = 0;
      for (double v : g.values()) sup = std::max(sup, std::abs(v));
      if (sup == 0) {
        out.value = 0;
        break;
      }
      auto objective = [&](double log_k) {
        const double k = std::exp(log_k);
        double s = 1;
        for (double v : g.values()) s += h * phi.conjugate(k * std::abs(v));
        return s / k;
      };
      double lo = std::log(phi.max_slope() / sup) - 40, hi = std::log(phi.max_slope() / sup);
      const double golden = 0.5 * (std::sqrt(5.0) - 1);
      for (int it = 0; it < 300 && hi - lo > 1e-14; ++it) {
        const double a = hi - golden * (hi - lo), b = lo + golden * (hi - lo);
        if (objective(a) <= objective(b)) {
          hi = b;
        } else {
          lo = a;
        }
      }
      out.value = std::min(objective(lo), objective(hi));
      out.method = "amemiya formula";
      break;
    }
  }
  out.lower = out.upper = out.value;
  out.certified = true;
  return out;
}

DualNorm dual_norm_ascent(const NormSpec& spec, const StepFunction& g, const AscentOptions& opt) {
  // Nonnegative nonincreasing f written in layer-cake form f = sum_k c_k chi_[0,(k+1)h]
  // with c >= 0, so the feasible cone is an orthant.
  const StepFunction gs = decreasing_rearrangement(at_norm_level(spec, g));
  const std::size_t n = gs.size();
  const std::vector<double> m(n, std::ldexp(1.0, -gs.level()));
  std::vector<double> prefix(n);  // int of g* over [0,(k+1)h]
  double run = 0;
  for (std::size_t k = 0; k < n; ++k) prefix[k] = run += gs[k] * m[k];
  auto expand = [&](const std::vector<double>& c) {
    std::vector<double> f(n);
    double acc = 0;
    for (std::size_t k = n; k-- > 0;) f[k] = acc += c[k];
    return f;
  };
  auto ratio = [&](const std::vector<double>& c) {
    const double norm = eval_norm(spec, expand(c), m);
    if (norm == 0) return 0.0;
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) s += c[k] * prefix[k];
    return s / norm;
  };

  std::vector<std::vector<double>> starts;
  for (std::size_t k = 0; k < n && static_cast<int>(starts.size()) < opt.starts / 2; ++k) {
    std::vector<double> c(n, 0.0);
    c[k] = 1.0;
    starts.push_back(std::move(c));
  }
  Rng rng(opt.seed);
  while (static_cast<int>(starts.size()) < opt.starts) {
    std::vector<double> c(n);
    for (double& v : c) v = rng.uniform();
    starts.push_back(std::move(c));
  }

  double best = 0;
  for (auto c : starts) {
    double r = ratio(c);
    double step = 1.0;
    for (int it = 0; it < opt.steps && step > 1e-14; ++it) {
      const auto f = expand(c);
      const double norm = eval_norm(spec, f, m);
      const auto gf = norm_gradient(spec, f, m);
      std::vector<double> grad(n);
      double acc = 0, peak = 0, scale = 0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += gf[k];
        grad[k] = (prefix[k] - r * acc) / norm;
        peak = std::max(peak, std::abs(grad[k]));
        scale = std::max(scale, c[k] / norm);
      }
      if (peak == 0) break;
      std::vector<double> cand(n);
      for (std::size_t k = 0; k < n; ++k) cand[k] = std::max(0.0, c[k] / norm + step * scale * grad[k] / peak);
      const double rc = ratio(cand);
      if (rc > r) {
        const bool converged = rc - r <= opt.rel_tol * std::abs(rc);
        c = std::move(cand);
        r = rc;
        step = std::min(step * 1.5, 1.0);
        if (converged) break;
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, r);
  }
  DualNorm out;
  out.value = out.lower = best;
  out.upper = kInf;
  out.method = "projected ascent";
  return out;
}

std::vector<double> default_t_grid() {
  std::vector<double> t;
  for (int k = 0; k <= 10; ++k) t.push_back(std::ldexp(1.0, -k));
  for (double extra : {1.5, 2.0, 4.0}) t.push_back(extra);
  return t;
}

namespace {

template <class NormFn>
PropertyCheck two_cell_check(const NormSpec& spec, std::span<const double> t_grid, double margin_tol, NormFn norm) {
  if (t_grid.empty()) throw std::invalid_argument("property check: empty t grid");
  const int level = std::max(1, spec.min_level());
  const StepFunction e1 = refine(StepFunction::basis(1, 1), level);
  const StepFunction e2 = refine(StepFunction::basis(1, 2), level);
  const double base = norm(e1);
  PropertyCheck out;
  out.holds = true;
  out.worst_margin = kInf;
  for (double t : t_grid) {
    if (!(t > 0)) throw std::invalid_argument("property check: t must be positive");
    const double margin = norm(e1 + t * e2) - base;
    out.margins.emplace_back(t, margin);
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_t = t;
    }
    if (!(margin > margin_tol)) out.holds = false;
  }
  return out;
}

}  // namespace

PropertyCheck check_property_P(const NormSpec& spec, std::span<const double> t_grid, double margin_tol) {
  return two_cell_check(spec, t_grid, margin_tol, [&](const StepFunction& f) { return eval_norm(spec, f); });
}

PropertyCheck check_property_P_prime(const NormSpec& spec, std::span<const double> t_grid, double margin_tol) {
  return two_cell_check(spec, t_grid, margin_tol,
                        [&](const StepFunction& f) { return dual_norm(spec, f).value; });
}

double fundamental_function(const NormSpec& spec, const Rational& t, int cap) {
  if (!(t > 0 && t <= 1)) throw std::invalid_argument("fundamental_function: t must lie in (0,1]");
  auto level = dyadic_level(t);
  if (!level) throw std::invalid_argument("fundamental_function: t is not dyadic");
  if (*level > cap) throw RefinementCapExceeded("fundamental_function: t finer than level cap");
  const int n = std::max(*level, spec.min_level());
  const Rational cells = t * pow2(n);
  const auto k = static_cast<std::size_t>(boost::multiprecision::numerator(cells));
  auto f = StepFunction::zero(n);
  for (std::size_t i = 0; i < k; ++i) f[i] = 1;
  return eval_norm(spec, f);
}

NormSpec reference_lorentz() { return NormSpec::lorentz(2, {0.4, 0.3, 0.2, 0.1}); }

std::vector<NormSpec> builtin_specs() {
  return {NormSpec::lp(1),   NormSpec::lp(1.5), NormSpec::lp(2),
          NormSpec::lp(3),   NormSpec::lp(4),   NormSpec::lp(kInf),
          reference_lorentz(), NormSpec::orlicz({0, 0.5, 1, 2, 4}, {0, 0.375, 1, 3, 10})};
}

}  // namespace rilab
