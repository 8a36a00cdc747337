#pragma once

// Finite atomic measures, their p-variation (0 < p <= 1) by the atom formula
// and by dyadic cell sums, representing kernels s -> nu_s of pseudo-integral
// operators, and the kernel functionals of the K_p experiment.

#include <cstdint>
#include <vector>

#include "rilab/operator_algebra.hpp"
#include "rilab/symmetric_norms.hpp"

namespace rilab {

struct Atom {
  Rational position;
  double weight = 0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// sum a_n delta(t_n) with distinct t_n in [0,1] and a_n != 0, kept in
/// nonincreasing order of |a_n| (ties by position).
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<Atom> atoms);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  /// mu(D) for the dyadic cell D = (lo, hi] (the first cell also holds 0).
  Rational mass_exact(const DyadicCell& cell) const;

  friend bool operator==(const AtomicMeasure&, const AtomicMeasure&) = default;

 private:
  std::vector<Atom> atoms_;
};

/// (sum |a_n|^p)^{1/p}; p in (0, 1].
double p_variation(const AtomicMeasure& mu, double p);

/// Entry n = 0..n_max is (sum_k |mu(D(n,k))|^p)^{1/p}. Cell masses are exact
/// and the terms are summed exactly, so the value at the separation level is
/// bit-identical to p_variation.
std::vector<double> dyadic_p_variation(const AtomicMeasure& mu, double p, int n_max);

/// Smallest n at which every level-n cell holds at most one atom.
int separation_level(const AtomicMeasure& mu, int cap = 62);

/// Random measure with dyadic positions at level <= max_level.
AtomicMeasure random_atomic_measure(std::size_t max_atoms, int max_level, std::uint64_t seed);

struct KernelAtom {
  MapPiece piece;  // branch of sigma_j containing the cell
  double weight = 0;
  std::size_t term = 0;
};

/// nu_s for s in one cell of the common refinement of the terms.
struct KernelCell {
  Interval src;
  std::vector<KernelAtom> atoms;

  AtomicMeasure at(const Rational& s) const;
  /// ||nu_s||_p^p, the same for every s in the cell.
  double p_mass(double p) const;
};

/// Tf(s) = int f d nu_s.
struct RepresentingKernel {
  std::vector<KernelCell> cells;

  const KernelCell& cell_at(const Rational& s) const;
  AtomicMeasure at(const Rational& s) const { return cell_at(s).at(s); }
  /// int f d nu_s.
  double integrate(const PiecewiseFunction<double>& f, const Rational& s) const;
};

RepresentingKernel kernel_of(const PseudoIntegralOperator& t);
RepresentingKernel kernel_of(const ElementaryOperator& t);

/// nu^{ST}_s = sum_j a_j(s) nu^T_{sigma_j(s)}: the kernel of S T evaluated at s.
AtomicMeasure compose_kernels_at(const RepresentingKernel& outer, const RepresentingKernel& inner, const Rational& s);

/// int_0^1 ||nu_s||_p^p ds, exact cellwise; p in (0, 1].
double kernel_functional(const RepresentingKernel& k, double p);
double kernel_functional(const PseudoIntegralOperator& t, double p);
double kernel_functional(const ElementaryOperator& t, double p);

/// sup over n <= n_max of || (sum_i |T e^n_i|^p)^{1/p} ||_Y.
double basis_p_sum_functional(const NormSpec& spec, const PseudoIntegralOperator& t, double p, int n_max);

struct KpOptions {
  std::size_t samples = 100;
  std::uint64_t seed = 7;
  std::vector<double> p_list{0.25, 0.5, 0.75, 1.0};
  int tau_level = 2;   // cells permuted by tau
  int tau_finer = 4;   // rotation resolution inside each cell
  int basis_levels = 4;
  double tol = 1e-9;
};

struct KpReport {
  std::vector<double> p_list;
  std::vector<double> min, max, mean;  // per p
  std::size_t samples = 0;
  std::size_t violations = 0;          // functional > 1 + tol
  std::size_t refuted = 0;             // S(tau) certified not isometric
  std::size_t verified = 0;            // S(tau) certified_yes
  double basis_functional = 0;         // for T itself
  double worst_margin = 0;             // max functional - 1
};

/// S(tau) = T V_tau T over random automorphisms tau. Throws when T is
/// refuted as an isometry of spec.
KpReport kp_experiment(const NormSpec& spec, const ElementaryOperator& t, const KpOptions& opt = {});

}  // namespace rilab
