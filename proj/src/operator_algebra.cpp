#include "rilab/operator_algebra.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "rilab/random.hpp"

namespace rilab {

ElementaryOperator to_double(const ExactElementaryOperator& t) {
  std::vector<double> a;
  for (const Rational& x : t.multipliers()) a.push_back(to_double(x));
  return {t.map(), std::move(a)};
}

ExactElementaryOperator to_exact(const ElementaryOperator& t) {
  std::vector<Rational> a;
  for (double x : t.multipliers()) a.push_back(from_double(x));
  return {t.map(), std::move(a)};
}

ExactElementaryOperator random_elementary_operator(int max_level, std::uint64_t seed) {
  auto map = random_measure_map(max_level, seed);
  Rng rng(derive_seed(seed, 3));
  std::vector<Rational> a;
  for (std::size_t i = 0; i < map.size(); ++i) {
    a.push_back(Rational(static_cast<std::int64_t>(1 + rng.index(8)), 4) * static_cast<int>(rng.sign()));
  }
  return {std::move(map), std::move(a)};
}

DiscreteOperator::DiscreteOperator(int domain_level, std::vector<double> out_measures, std::vector<Column> columns)
    : domain_level_(domain_level), out_measures_(std::move(out_measures)), columns_(std::move(columns)) {
  detail::check_level(domain_level_);
  if (columns_.size() != (std::size_t{1} << domain_level_)) {
    throw std::invalid_argument("DiscreteOperator: expected 2^level columns");
  }
  for (const auto& col : columns_) {
    for (const auto& [row, v] : col) {
      if (row >= out_measures_.size()) throw std::invalid_argument("DiscreteOperator: row out of range");
    }
  }
}

std::vector<double> DiscreteOperator::apply(std::span<const double> x) const {
  if (x.size() != cols()) throw std::invalid_argument("DiscreteOperator::apply: size mismatch");
  std::vector<double> y(rows(), 0.0);
  for (std::size_t j = 0; j < cols(); ++j) {
    if (x[j] == 0) continue;
    for (const auto& [r, v] : columns_[j]) y[r] += v * x[j];
  }
  return y;
}

std::vector<double> DiscreteOperator::apply_transpose(std::span<const double> y) const {
  if (y.size() != rows()) throw std::invalid_argument("DiscreteOperator::apply_transpose: size mismatch");
  std::vector<double> x(cols(), 0.0);
  for (std::size_t j = 0; j < cols(); ++j) {
    for (const auto& [r, v] : columns_[j]) x[j] += v * y[r];
  }
  return x;
}

namespace {

/// Level-N cell index (0-based) as a piecewise function.
PiecewiseFunction<double> cell_index_function(int level) {
  auto f = StepFunction::zero(level);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i);
  return PiecewiseFunction<double>::from_step(f);
}

struct TermRows {
  std::vector<Rational> breaks;
  std::vector<std::size_t> column;
  std::vector<double> multiplier;
};

/// For each piece of the output partition: which domain cell it reads and with what weight.
TermRows term_rows(const ElementaryOperator& op, int level, int cap) {
  const auto idx = pull_back(cell_index_function(level), op.map(), cap);
  const auto breaks = merge_breaks(idx.breaks(), op.map().src_breaks());
  const auto col = sample_on(idx, breaks);
  const auto mult = sample_on(op.multiplier_function(), breaks);
  TermRows out{breaks, {}, mult};
  for (double c : col) out.column.push_back(static_cast<std::size_t>(c));
  return out;
}

std::vector<double> measures_of(std::span<const Rational> breaks) {
  std::vector<double> m(breaks.size() - 1);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) m[k] = to_double(breaks[k + 1] - breaks[k]);
  return m;
}

DiscreteOperator assemble(int level, const std::vector<TermRows>& terms) {
  std::vector<Rational> breaks{Rational(0), Rational(1)};
  for (const auto& t : terms) breaks = merge_breaks(breaks, t.breaks);
  std::vector<std::map<std::size_t, double>> cols(std::size_t{1} << level);
  for (const auto& t : terms) {
    std::size_t k = 0;
    for (std::size_t r = 0; r + 1 < breaks.size(); ++r) {
      while (t.breaks[k + 1] < breaks[r + 1]) ++k;
      cols[t.column[k]][r] += t.multiplier[k];
    }
  }
  std::vector<DiscreteOperator::Column> columns;
  for (auto& c : cols) {
    DiscreteOperator::Column col;
    for (auto& [r, v] : c) {
      if (v != 0) col.emplace_back(r, v);
    }
    columns.push_back(std::move(col));
  }
  return {level, measures_of(breaks), std::move(columns)};
}

}  // namespace

DiscreteOperator discretize(const ElementaryOperator& op, int level, int cap) {
  return assemble(level, {term_rows(op, level, cap)});
}

DiscreteOperator discretize(const PseudoIntegralOperator& op, int level, int cap) {
  std::vector<TermRows> terms;
  for (const auto& t : op.terms()) terms.push_back(term_rows(t, level, cap));
  if (terms.empty()) {
    return {level, {1.0}, std::vector<DiscreteOperator::Column>(std::size_t{1} << level)};
  }
  return assemble(level, terms);
}

DiscreteOperator identity_operator(int level, double scale) {
  detail::check_level(level);
  const std::size_t n = std::size_t{1} << level;
  std::vector<DiscreteOperator::Column> cols(n);
  for (std::size_t j = 0; j < n; ++j) cols[j] = {{j, scale}};
  return {level, std::vector<double>(n, std::ldexp(1.0, -level)), std::move(cols)};
}

DiscreteOperator rank_one_complement(const StepFunction& u, const StepFunction& f, int level) {
  if (u.level() > level || f.level() > level) throw std::invalid_argument("rank_one_complement: level too coarse");
  const auto uu = refine(u, level);
  const auto ff = refine(f, level);
  const std::size_t n = uu.size();
  const double h = std::ldexp(1.0, -level);
  std::vector<DiscreteOperator::Column> cols(n);
  for (std::size_t j = 0; j < n; ++j) {
    // column j: e_j - (int f e_j) u
    const double c = ff[j] * h;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = (r == j ? 1.0 : 0.0) - c * uu[r];
      if (v != 0) cols[j].emplace_back(r, v);
    }
  }
  return {level, std::vector<double>(n, h), std::move(cols)};
}

DilationSpec::DilationSpec(Rational scale) : s(std::move(scale)) {
  if (s <= 0) throw std::invalid_argument("DilationSpec: scale must be positive");
  if (!dyadic_level(s)) throw std::invalid_argument("DilationSpec: scale " + to_string(s) + " is not dyadic");
}

DiscreteOperator dilation_operator(const DilationSpec& spec, int level) {
  detail::check_level(level);
  const std::size_t n = std::size_t{1} << level;
  const Rational h = pow2(-level);
  // Output breaks: images s*b of the grid points that stay inside [0,1].
  std::vector<Rational> breaks{Rational(0)};
  for (std::size_t k = 1; k <= n; ++k) {
    const Rational b = spec.s * h * static_cast<std::int64_t>(k);
    if (b >= 1) break;
    breaks.push_back(b);
  }
  breaks.push_back(Rational(1));
  std::vector<DiscreteOperator::Column> cols(n);
  for (std::size_t r = 0; r + 1 < breaks.size(); ++r) {
    const Rational src = breaks[r + 1] / spec.s;  // right end of the preimage
    const Rational src_lo = breaks[r] / spec.s;
    if (src_lo >= 1) continue;  // f vanishes past 1
    const auto cell = cell_containing(std::min(src, Rational(1)), level);
    cols[static_cast<std::size_t>(cell.index - 1)].emplace_back(r, 1.0);
  }
  return {level, measures_of(breaks), std::move(cols)};
}

bool has_polytope_ball(const NormSpec& dom) {
  if (dom.is_lp()) return dom.lp_exponent() == 1 || std::isinf(dom.lp_exponent());
  return dom.kind() == NormSpec::Kind::kLorentz;
}

namespace {

struct Evaluator {
  const NormSpec& dom;
  const NormSpec& cod;
  const DiscreteOperator& op;
  std::vector<double> dom_measures;

  Evaluator(const NormSpec& d, const NormSpec& c, const DiscreteOperator& o)
      : dom(d), cod(c), op(o), dom_measures(o.cols(), std::ldexp(1.0, -o.domain_level())) {}

  double image_norm(std::span<const double> x) const {
    const auto y = op.apply(x);
    return eval_norm(cod, y, op.out_measures());
  }
  double domain_norm(std::span<const double> x) const { return eval_norm(dom, x, dom_measures); }
  double ratio(std::span<const double> x) const {
    const double d = domain_norm(x);
    return d == 0 ? 0 : image_norm(x) / d;
  }
};

void consider(OperatorNorm& best, const Evaluator& ev, const std::vector<double>& x) {
  const double r = ev.ratio(x);
  if (r > best.lower) {
    best.lower = r;
    best.witness = StepFunction(ev.op.domain_level(), x);
  }
}

/// Vertices of the unit ball of L_1, L_inf or Lorentz, enumerated exactly.
std::optional<OperatorNorm> extreme_point_norm(const Evaluator& ev, std::size_t max_vertices) {
  const auto& dom = ev.dom;
  const std::size_t n = ev.op.cols();
  OperatorNorm out;
  out.certified = true;
  if (dom.is_lp(1)) {
    out.method = "extreme_points";
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> x(n, 0.0);
      x[j] = 1.0;
      consider(out, ev, x);
    }
  } else if (dom.is_lp() && std::isinf(dom.lp_exponent())) {
    out.method = "extreme_points";
    if (ev.cod.is_lp() && std::isinf(ev.cod.lp_exponent())) {
      // max row absolute sum, attained at the sign pattern of that row
      std::vector<double> sums(ev.op.rows(), 0.0);
      for (const auto& col : ev.op.columns()) {
        for (const auto& [r, v] : col) sums[r] += std::abs(v);
      }
      std::size_t best = 0;
      for (std::size_t r = 0; r < sums.size(); ++r) {
        if (ev.op.out_measures()[r] > 0 && sums[r] > sums[best]) best = r;
      }
      std::vector<double> x(n, 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        for (const auto& [r, v] : ev.op.columns()[j]) {
          if (r == best && v < 0) x[j] = -1.0;
        }
      }
      consider(out, ev, x);
      out.lower = std::max(out.lower, sums[best]);
    } else {
      if (n >= 63 || (std::size_t{1} << (n - 1)) > max_vertices) return std::nullopt;
      std::vector<double> x(n);
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
        for (std::size_t j = 0; j < n; ++j) x[j] = (mask >> j) & 1 ? -1.0 : 1.0;
        consider(out, ev, x);
      }
    }
  } else if (dom.kind() == NormSpec::Kind::kLorentz) {
    // signed indicators chi_A, up to a global sign: 3^n / 2 vertices
    double count = std::pow(3.0, static_cast<double>(n));
    if (count / 2 > static_cast<double>(max_vertices)) return std::nullopt;
    out.method = "extreme_points";
    std::vector<int> digit(n, 0);
    std::vector<double> x(n);
    while (true) {
      std::size_t k = 0;
      while (k < n && digit[k] == 2) digit[k++] = 0;
      if (k == n) break;
      ++digit[k];
      // first nonzero digit positive fixes the global sign
      const auto first = std::find_if(digit.begin(), digit.end(), [](int d) { return d != 0; });
      if (*first != 1) continue;
      for (std::size_t j = 0; j < n; ++j) x[j] = digit[j] == 0 ? 0.0 : (digit[j] == 1 ? 1.0 : -1.0);
      consider(out, ev, x);
    }
  } else {
    return std::nullopt;
  }
  out.upper = out.lower;
  return out;
}

/// Riesz-Thorin bound ||A||_{p} <= ||A||_1^{1/p} ||A||_inf^{1-1/p} for
/// entrywise nonnegative A between L_p spaces.
std::optional<double> interpolation_bound(const Evaluator& ev) {
  if (!ev.dom.is_lp() || !ev.cod.is_lp() || ev.dom.lp_exponent() != ev.cod.lp_exponent()) return std::nullopt;
  const double p = ev.dom.lp_exponent();
  const double h = std::ldexp(1.0, -ev.op.domain_level());
  double n1 = 0;
  std::vector<double> rows(ev.op.rows(), 0.0);
  for (const auto& col : ev.op.columns()) {
    double s = 0;
    for (const auto& [r, v] : col) {
      if (v < 0) return std::nullopt;
      s += v * ev.op.out_measures()[r];
      rows[r] += v;
    }
    n1 = std::max(n1, s / h);
  }
  double ninf = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (ev.op.out_measures()[r] > 0) ninf = std::max(ninf, rows[r]);
  }
  if (std::isinf(p)) return ninf;
  return std::pow(n1, 1.0 / p) * std::pow(ninf, 1.0 - 1.0 / p);
}

void normalize(std::vector<double>& x, const Evaluator& ev) {
  const double d = ev.domain_norm(x);
  if (d > 0) {
    for (double& v : x) v /= d;
  }
}

OperatorNorm ascent_norm(const Evaluator& ev, const OperatorNormOptions& opt, std::optional<double> upper) {
  const std::size_t n = ev.op.cols();
  OperatorNorm out;
  out.method = "multistart_ascent";
  auto done = [&] { return upper && out.lower >= *upper - opt.tol * std::max(1.0, *upper); };

  std::vector<std::vector<double>> starts;
  const std::size_t n_basis = std::min<std::size_t>(n, std::max(1, opt.starts / 4));
  for (std::size_t k = 0; k < n_basis; ++k) {
    std::vector<double> x(n, 0.0);
    x[k * n / n_basis] = 1.0;
    starts.push_back(std::move(x));
  }
  starts.emplace_back(n, 1.0);
  {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = j % 2 ? -1.0 : 1.0;
    starts.push_back(std::move(x));
  }
  for (std::size_t k = 0; starts.size() < static_cast<std::size_t>(std::max(opt.starts, 3)); ++k) {
    Rng rng(derive_seed(opt.seed, k));
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    starts.push_back(std::move(x));
  }
  for (auto& x : starts) consider(out, ev, x);
  if (done()) {
    out.upper = upper;
    out.certified = true;
    out.method = "multistart_ascent+interpolation_bound";
    return out;
  }

  for (auto& x : starts) {
    normalize(x, ev);
    double value = ev.image_norm(x);
    double eta = 1.0;
    for (int step = 0; step < opt.steps && eta > 1e-14; ++step) {
      const auto y = ev.op.apply(x);
      const auto gy = norm_gradient(ev.cod, y, ev.op.out_measures());
      auto grad = ev.op.apply_transpose(gy);
      // remove the component along the domain-norm gradient
      const auto gx = norm_gradient(ev.dom, x, ev.dom_measures);
      double peak_g = 0, peak_x = 0;
      for (std::size_t j = 0; j < n; ++j) {
        grad[j] -= value * gx[j];
        peak_g = std::max(peak_g, std::abs(grad[j]));
        peak_x = std::max(peak_x, std::abs(x[j]));
      }
      if (peak_g == 0) break;
      std::vector<double> cand(n);
      for (std::size_t j = 0; j < n; ++j) cand[j] = x[j] + eta * peak_x / peak_g * grad[j];
      normalize(cand, ev);
      const double cv = ev.image_norm(cand);
      if (cv > value) {
        const bool small = cv - value <= opt.tol * std::max(1.0, value);
        x = std::move(cand);
        value = cv;
        eta = std::min(eta * 2, 4.0);
        if (small) break;
      } else {
        eta *= 0.5;
      }
    }
    consider(out, ev, x);
    if (done()) break;
  }
  if (done()) {
    out.upper = upper;
    out.certified = true;
    out.method = "multistart_ascent+interpolation_bound";
  }
  return out;
}

}  // namespace

OperatorNorm operator_norm(const NormSpec& dom, const NormSpec& cod, const DiscreteOperator& op,
                           const OperatorNormOptions& opt) {
  if (op.domain_level() < dom.min_level()) throw std::invalid_argument("operator_norm: domain level below norm level");
  const Evaluator ev(dom, cod, op);
  if (opt.method != NormMethod::kMultistartAscent) {
    if (auto exact = extreme_point_norm(ev, opt.max_vertices)) return *exact;
    if (opt.method == NormMethod::kExtremePoints) {
      throw std::invalid_argument("operator_norm: extreme points unavailable for domain " + dom.to_string());
    }
  }
  return ascent_norm(ev, opt, interpolation_bound(ev));
}

std::string to_string(IsometryVerdict v) {
  switch (v) {
    case IsometryVerdict::kCertifiedYes:
      return "certified_yes";
    case IsometryVerdict::kCertifiedNo:
      return "certified_no";
    case IsometryVerdict::kNotRefuted:
      return "not_refuted";
  }
  return "?";
}

namespace {

PiecewiseFunction<double> interval_indicator(const Interval& iv) {
  std::vector<Rational> b{Rational(0)};
  std::vector<double> v;
  if (iv.lo > 0) {
    b.push_back(iv.lo);
    v.push_back(0);
  }
  b.push_back(iv.hi);
  v.push_back(1);
  if (iv.hi < 1) {
    b.push_back(Rational(1));
    v.push_back(0);
  }
  return {std::move(b), std::move(v)};
}

void fill_witness(IsometryCertificate& c, const NormSpec& spec, const ElementaryOperator& op, std::size_t piece) {
  auto f = interval_indicator(op.map().piece(piece).tgt);
  c.witness_norm = eval_norm(spec, f);
  c.image_norm = eval_norm(spec, apply_operator(op, f));
  c.discrepancy = std::abs(c.image_norm - c.witness_norm);
  c.witness = std::move(f);
}

/// |a|^r w^s == 1 for p = r/s, exactly.
bool lamperti_exact(const Rational& a, const Rational& w, std::int64_t r, std::int64_t s) {
  return pow(abs(a), static_cast<int>(r)) * pow(w, static_cast<int>(s)) == 1;
}

IsometryCertificate lp_isometry(const NormSpec& spec, const ExactElementaryOperator& exact,
                                const ElementaryOperator& approx) {
  IsometryCertificate c;
  const double p = spec.lp_exponent();
  const auto& map = exact.map();
  c.samples = map.size();
  if (std::isinf(p)) {
    c.exact = true;
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (abs(exact.multipliers()[i]) != 1) {
        c.verdict = IsometryVerdict::kCertifiedNo;
        fill_witness(c, spec, approx, i);
        return c;
      }
    }
    c.verdict = IsometryVerdict::kCertifiedYes;
    return c;
  }
  const auto frac = exact_small_fraction(p);
  bool all_exact = true;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Rational w = map.piece(i).weight();
    if (frac && lamperti_exact(exact.multipliers()[i], w, frac->first, frac->second)) continue;
    const double lhs = std::pow(std::abs(approx.multipliers()[i]), p) * to_double(w);
    if (std::abs(lhs - 1) <= 1e-12) {
      all_exact = false;
      continue;
    }
    c.verdict = IsometryVerdict::kCertifiedNo;
    c.exact = frac.has_value();
    c.floating_fallback = !frac.has_value();
    fill_witness(c, spec, approx, i);
    return c;
  }
  c.verdict = IsometryVerdict::kCertifiedYes;
  c.exact = all_exact;
  c.floating_fallback = !all_exact;
  return c;
}

IsometryCertificate probe_isometry(const NormSpec& spec, const ElementaryOperator& op, const IsometryOptions& opt) {
  IsometryCertificate c;
  const int level = std::max(opt.probe_level, spec.min_level());
  const auto d = discretize(op, level);
  const std::size_t n = d.cols();
  const std::vector<double> dom_m(n, std::ldexp(1.0, -level));
  double worst = -1;
  std::vector<double> worst_x;
  auto probe = [&](const std::vector<double>& x) {
    const double fx = eval_norm(spec, x, dom_m);
    const double tx = eval_norm(spec, d.apply(x), d.out_measures());
    ++c.samples;
    const double gap = std::abs(tx - fx);
    if (gap > worst) {
      worst = gap;
      worst_x = x;
      c.witness_norm = fx;
      c.image_norm = tx;
    }
  };
  for (int m = 0; m <= level; ++m) {
    const std::size_t span = std::size_t{1} << (level - m);
    for (std::size_t k = 0; k < (std::size_t{1} << m); ++k) {
      std::vector<double> x(n, 0.0);
      std::fill(x.begin() + static_cast<std::ptrdiff_t>(k * span), x.begin() + static_cast<std::ptrdiff_t>((k + 1) * span),
                1.0);
      probe(x);
    }
  }
  Rng rng(opt.seed);
  for (int k = 0; k < opt.random_probes; ++k) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.sign() * rng.uniform(0.0, 1.0);
    probe(x);
  }
  c.discrepancy = worst;
  c.witness = PiecewiseFunction<double>::from_step(StepFunction(level, worst_x));
  c.verdict = worst > opt.tol ? IsometryVerdict::kCertifiedNo : IsometryVerdict::kNotRefuted;
  if (c.verdict == IsometryVerdict::kNotRefuted) c.witness.reset();
  return c;
}

}  // namespace

IsometryCertificate is_isometry(const NormSpec& spec, const ElementaryOperator& op, const IsometryOptions& opt) {
  if (spec.is_lp()) return lp_isometry(spec, to_exact(op), op);
  return probe_isometry(spec, op, opt);
}

IsometryCertificate is_isometry(const NormSpec& spec, const ExactElementaryOperator& op, const IsometryOptions& opt) {
  if (spec.is_lp()) return lp_isometry(spec, op, to_double(op));
  return probe_isometry(spec, to_double(op), opt);
}

ElementaryOperator lamperti_isometry(double p, const MeasureMap& sigma, std::span<const int> signs) {
  if (!(p >= 1) || std::isinf(p)) throw std::invalid_argument("lamperti_isometry: need 1 <= p < inf");
  if (signs.size() != sigma.size()) throw std::invalid_argument("lamperti_isometry: need one sign per piece");
  std::vector<double> a;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (signs[i] != 1 && signs[i] != -1) throw std::invalid_argument("lamperti_isometry: signs must be +-1");
    a.push_back(signs[i] * std::pow(to_double(sigma.piece(i).weight()), -1.0 / p));
  }
  return {sigma, std::move(a)};
}

namespace {

std::optional<BigInt> integer_root(const BigInt& x, int k) {
  if (x < 0) return std::nullopt;
  const double guess = std::round(std::pow(static_cast<double>(x), 1.0 / k));
  for (double g : {guess - 1, guess, guess + 1}) {
    if (g < 0) continue;
    const BigInt r(static_cast<long long>(g));
    if (boost::multiprecision::pow(r, static_cast<unsigned>(k)) == x) return r;
  }
  return std::nullopt;
}

}  // namespace

std::optional<ExactElementaryOperator> lamperti_isometry_exact(int p, const MeasureMap& sigma,
                                                               std::span<const int> signs) {
  if (p < 1) throw std::invalid_argument("lamperti_isometry_exact: need p >= 1");
  if (signs.size() != sigma.size()) throw std::invalid_argument("lamperti_isometry_exact: need one sign per piece");
  std::vector<Rational> a;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const Rational w = sigma.piece(i).weight();
    auto num = integer_root(boost::multiprecision::numerator(w), p);
    auto den = integer_root(boost::multiprecision::denominator(w), p);
    if (!num || !den) return std::nullopt;
    a.push_back(Rational(*den, *num) * signs[i]);
  }
  return ExactElementaryOperator(sigma, std::move(a));
}

Rational lamperti_integral_exact(const ExactElementaryOperator& op, int p) {
  Rational sum = 0;
  for (std::size_t i = 0; i < op.map().size(); ++i) {
    sum += pow(abs(op.multipliers()[i]), p) * op.map().piece(i).src.length();
  }
  return sum;
}

double elementary_lr_norm(const ElementaryOperator& op, double r) {
  double best = 0;
  for (std::size_t i = 0; i < op.map().size(); ++i) {
    const double w = to_double(op.map().piece(i).weight());
    const double scale = std::isinf(r) ? 1.0 : std::pow(w, 1.0 / r);
    best = std::max(best, std::abs(op.multipliers()[i]) * scale);
  }
  return best;
}

std::vector<Rational> default_boyd_scales() {
  std::vector<Rational> s;
  for (int k = 1; k <= 4; ++k) {
    s.push_back(pow2(k));
    s.push_back(pow2(-k));
  }
  return s;
}

namespace {

double ls_slope(const std::vector<std::pair<double, double>>& pts) {
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0, sxx = 0;
  for (auto [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

}  // namespace

BoydEstimate boyd_indices_estimate(const NormSpec& spec, std::span<const Rational> scales, int level, double tol) {
  std::vector<std::pair<double, double>> large, small;
  BoydEstimate out;
  out.certified = true;
  OperatorNormOptions opt;
  opt.tol = tol;
  for (const Rational& s : scales) {
    if (s == 1) continue;
    const auto d = dilation_operator(DilationSpec(s), level);
    const auto norm = operator_norm(spec, spec, d, opt);
    out.certified = out.certified && norm.certified;
    const double sd = to_double(s);
    out.dilation_norms.emplace_back(sd, norm.lower);
    (s > 1 ? large : small).emplace_back(std::log(sd), std::log(norm.lower));
  }
  if (large.size() < 3 || small.size() < 3) {
    throw std::invalid_argument("boyd_indices_estimate: need at least 3 scales above 1 and 3 below 1");
  }
  out.slope_large = ls_slope(large);
  out.slope_small = ls_slope(small);
  auto reciprocal = [](double slope) { return slope <= 1e-12 ? kInf : 1.0 / slope; };
  out.p_index = reciprocal(out.slope_large);
  out.q_index = reciprocal(out.slope_small);
  return out;
}

LrDominationCheck verify_lr_domination(const NormSpec& spec, const ElementaryOperator& op, double r, int level, double tol) {
  LrDominationCheck out;
  out.norm_lr = elementary_lr_norm(op, r);
  const int base = std::max(level, spec.min_level());
  auto probe = [&](PiecewiseFunction<double> f) {
    const double fx = eval_norm(spec, f);
    if (fx == 0) return;
    const double ratio = eval_norm(spec, apply_operator(op, f)) / fx;
    if (ratio > out.norm_x_lower) {
      out.norm_x_lower = ratio;
      out.witness = std::move(f);
    }
  };
  for (std::int64_t i = 1; i <= (std::int64_t{1} << base); ++i) {
    probe(PiecewiseFunction<double>::from_step(StepFunction::basis(base, i)));
  }
  // small cells inside each target piece, down to 2^-(base + 12)
  for (const MapPiece& p : op.map().pieces()) {
    for (int m = base; m <= base + 12; ++m) {
      const Rational scaled = p.tgt.lo * pow2(m);
      BigInt k = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
      if (Rational(k) != scaled) k += 1;  // first grid point at or after tgt.lo
      const Interval cell{Rational(k) * pow2(-m), Rational(k + 1) * pow2(-m)};
      if (cell.hi > p.tgt.hi) continue;
      probe(interval_indicator(cell));
    }
  }
  out.holds = out.norm_lr <= out.norm_x_lower + tol;
  return out;
}

double distortion(const StepFunction& f) {
  double lo = kInf, hi = 0;
  for (double v : f.values()) {
    if (v < 0) throw std::invalid_argument("distortion: f must be nonnegative");
    if (v > 0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == 0) throw std::invalid_argument("distortion: f vanishes identically");
  return hi / lo;
}

DistortionRecurrence distortion_recurrence(double h0, double kappa, int n_steps) {
  if (!(h0 >= 1)) throw std::invalid_argument("distortion_recurrence: need h0 >= 1");
  if (!(kappa > 1)) throw std::invalid_argument("distortion_recurrence: need kappa > 1");
  if (n_steps < 0) throw std::invalid_argument("distortion_recurrence: negative step count");
  DistortionRecurrence out;
  out.sequence.push_back(h0);
  for (int k = 0; k < 2 * n_steps; ++k) {
    const double h = out.sequence.back();
    out.sequence.push_back(std::max(kappa * std::sqrt(h), h / kappa));
  }
  out.tail_max = *std::max_element(out.sequence.begin() + n_steps, out.sequence.end());
  out.bound = std::pow(kappa, 5);
  out.fixed_point = kappa * kappa;
  out.tail_below_bound = out.tail_max < out.bound;
  return out;
}

}  // namespace rilab
