#include "rilab/atomic_measures.hpp"

#include <cmath>
#include <map>

#include "rilab/random.hpp"

namespace rilab {

namespace {

void check_p(double p) {
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("p-variation: p must lie in (0, 1]");
}

/// (sum |m|^p)^{1/p} with exact masses and an exactly summed series of
/// rounded terms; the result depends only on the multiset of masses.
double p_sum(const std::vector<Rational>& masses, double p) {
  Rational total = 0;
  for (const Rational& m : masses) {
    const Rational a = boost::multiprecision::abs(m);
    if (a == 0) continue;
    total += p == 1 ? a : Rational(std::pow(to_double(a), p));
  }
  const double s = to_double(total);
  return p == 1 ? s : std::pow(s, 1 / p);
}

}  // namespace

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  for (const Atom& a : atoms_) {
    if (a.position < 0 || a.position > 1) throw std::invalid_argument("AtomicMeasure: position outside [0,1]");
    if (a.weight == 0 || !std::isfinite(a.weight)) throw std::invalid_argument("AtomicMeasure: weights must be nonzero");
  }
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& x, const Atom& y) {
    if (std::abs(x.weight) != std::abs(y.weight)) return std::abs(x.weight) > std::abs(y.weight);
    return x.position < y.position;
  });
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
      if (atoms_[i].position == atoms_[j].position) throw std::invalid_argument("AtomicMeasure: repeated position");
    }
  }
}

Rational AtomicMeasure::mass_exact(const DyadicCell& cell) const {
  Rational m = 0;
  for (const Atom& a : atoms_) {
    if (cell_containing(a.position, cell.level) == cell) m += Rational(a.weight);
  }
  return m;
}

double p_variation(const AtomicMeasure& mu, double p) {
  check_p(p);
  std::vector<Rational> masses;
  for (const Atom& a : mu.atoms()) masses.emplace_back(a.weight);
  return p_sum(masses, p);
}

std::vector<double> dyadic_p_variation(const AtomicMeasure& mu, double p, int n_max) {
  check_p(p);
  if (n_max < 0) throw std::invalid_argument("dyadic_p_variation: n_max must be >= 0");
  std::vector<double> out;
  for (int n = 0; n <= n_max; ++n) {
    // only cells holding atoms contribute
    std::map<std::int64_t, Rational> cells;
    for (const Atom& a : mu.atoms()) cells[cell_containing(a.position, n).index] += Rational(a.weight);
    std::vector<Rational> masses;
    for (auto& [k, m] : cells) masses.push_back(m);
    out.push_back(p_sum(masses, p));
  }
  return out;
}

int separation_level(const AtomicMeasure& mu, int cap) {
  for (int n = 0; n <= cap; ++n) {
    std::vector<std::int64_t> idx;
    for (const Atom& a : mu.atoms()) idx.push_back(cell_containing(a.position, n).index);
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) == idx.end()) return n;
  }
  throw RefinementCapExceeded("separation_level: atoms not separated by level " + std::to_string(cap));
}

AtomicMeasure random_atomic_measure(std::size_t max_atoms, int max_level, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t count = 1 + rng.index(max_atoms);
  std::vector<Atom> atoms;
  while (atoms.size() < count) {
    const int level = static_cast<int>(rng.index(static_cast<std::uint64_t>(max_level) + 1));
    const auto k = static_cast<std::int64_t>(rng.index((std::uint64_t{1} << level) + 1));
    const Rational t = dyadic(k, level);
    if (std::any_of(atoms.begin(), atoms.end(), [&](const Atom& a) { return a.position == t; })) continue;
    double w = 0;
    while (w == 0) w = rng.uniform(-2.0, 2.0);
    atoms.push_back({t, w});
  }
  return AtomicMeasure(std::move(atoms));
}

AtomicMeasure KernelCell::at(const Rational& s) const {
  std::vector<Atom> out;
  for (const KernelAtom& a : atoms) out.push_back({a.piece.forward(s), a.weight});
  return AtomicMeasure(std::move(out));
}

double KernelCell::p_mass(double p) const {
  double s = 0;
  for (const KernelAtom& a : atoms) s += std::pow(std::abs(a.weight), p);
  return s;
}

const KernelCell& RepresentingKernel::cell_at(const Rational& s) const {
  if (cells.empty()) throw std::logic_error("RepresentingKernel: no cells");
  if (s <= 0) return cells.front();
  auto it = std::lower_bound(cells.begin(), cells.end(), s, [](const KernelCell& c, const Rational& x) { return c.src.hi < x; });
  return it == cells.end() ? cells.back() : *it;
}

double RepresentingKernel::integrate(const PiecewiseFunction<double>& f, const Rational& s) const {
  double sum = 0;
  for (const KernelAtom& a : cell_at(s).atoms) sum += a.weight * f(a.piece.forward(s));
  return sum;
}

RepresentingKernel kernel_of(const PseudoIntegralOperator& t) {
  RepresentingKernel k;
  const auto breaks = t.common_breaks();
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    KernelCell cell{{breaks[i], breaks[i + 1]}, {}};
    const Rational mid = (breaks[i] + breaks[i + 1]) / 2;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const auto& term = t.terms()[j];
      cell.atoms.push_back({term.map().piece(term.map().piece_index(mid)), term.multiplier_at(mid), j});
    }
    k.cells.push_back(std::move(cell));
  }
  return k;
}

RepresentingKernel kernel_of(const ElementaryOperator& t) { return kernel_of(PseudoIntegralOperator({t})); }

AtomicMeasure compose_kernels_at(const RepresentingKernel& outer, const RepresentingKernel& inner, const Rational& s) {
  std::map<Rational, double> atoms;
  for (const KernelAtom& a : outer.cell_at(s).atoms) {
    const Rational t = a.piece.forward(s);
    const AtomicMeasure nu = inner.at(t);
    for (const Atom& b : nu.atoms()) atoms[b.position] += a.weight * b.weight;
  }
  std::vector<Atom> out;
  for (auto& [pos, w] : atoms) {
    if (w != 0) out.push_back({pos, w});
  }
  return AtomicMeasure(std::move(out));
}

double kernel_functional(const RepresentingKernel& k, double p) {
  check_p(p);
  double sum = 0;
  for (const KernelCell& c : k.cells) sum += to_double(c.src.length()) * c.p_mass(p);
  return sum;
}

double kernel_functional(const PseudoIntegralOperator& t, double p) { return kernel_functional(kernel_of(t), p); }
double kernel_functional(const ElementaryOperator& t, double p) { return kernel_functional(kernel_of(t), p); }

double basis_p_sum_functional(const NormSpec& spec, const PseudoIntegralOperator& t, double p, int n_max) {
  check_p(p);
  double best = 0;
  for (int n = 0; n <= n_max; ++n) {
    PiecewiseFunction<double> acc;
    for (std::int64_t i = 1; i <= (std::int64_t{1} << n); ++i) {
      const auto te = apply_operator(t, PiecewiseFunction<double>::from_step(StepFunction::basis(n, i)));
      acc = combine(acc, te, [p](double x, double y) { return x + std::pow(std::abs(y), p); });
    }
    std::vector<double> root(acc.values().begin(), acc.values().end());
    for (double& v : root) v = std::pow(v, 1 / p);
    const PiecewiseFunction<double> g(std::vector<Rational>(acc.breaks().begin(), acc.breaks().end()), root);
    best = std::max(best, eval_norm(spec, g.simplified()));
  }
  return best;
}

KpReport kp_experiment(const NormSpec& spec, const ElementaryOperator& t, const KpOptions& opt) {
  const auto cert = is_isometry(spec, t);
  if (cert.verdict == IsometryVerdict::kCertifiedNo) {
    throw std::invalid_argument("kp_experiment: T is not an isometry of " + spec.to_string());
  }
  for (double p : opt.p_list) check_p(p);
  KpReport out;
  out.p_list = opt.p_list;
  const std::size_t np = opt.p_list.size();
  out.min.assign(np, kInf);
  out.max.assign(np, 0.0);
  out.mean.assign(np, 0.0);
  out.worst_margin = -kInf;
  for (double p : opt.p_list) {
    out.basis_functional = std::max(out.basis_functional, basis_p_sum_functional(spec, PseudoIntegralOperator({t}), p, opt.basis_levels));
  }
  for (std::size_t k = 0; k < opt.samples; ++k) {
    const auto tau = random_automorphism(opt.tau_level, opt.tau_finer, derive_seed(opt.seed, k));
    const auto s = compose(t, compose(composition_operator<double>(tau), t));
    const auto v = is_isometry(spec, s).verdict;
    if (v == IsometryVerdict::kCertifiedNo) ++out.refuted;
    if (v == IsometryVerdict::kCertifiedYes) ++out.verified;
    const auto kernel = kernel_of(s);
    bool bad = false;
    for (std::size_t i = 0; i < np; ++i) {
      const double value = kernel_functional(kernel, opt.p_list[i]);
      out.min[i] = std::min(out.min[i], value);
      out.max[i] = std::max(out.max[i], value);
      out.mean[i] += value / static_cast<double>(opt.samples);
      out.worst_margin = std::max(out.worst_margin, value - 1);
      bad = bad || value > 1 + opt.tol;
    }
    if (bad) ++out.violations;
    ++out.samples;
  }
  return out;
}

}  // namespace rilab
