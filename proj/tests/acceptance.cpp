// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Every tolerance is pinned here, next to its check.

#include "dbspace/dbspace.hpp"

#include "fixtures.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace dbspace;
using fixtures::pw_kernel;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d. %s (%s)\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

CVec v1(Complex x) {
  CVec v(1);
  v(0) = x;
  return v;
}

std::vector<std::pair<std::string, DeBrangesOperator>> shipped_pairs() {
  std::vector<std::pair<std::string, DeBrangesOperator>> out;
  out.emplace_back("exponential a=1 n=1", fixtures::pw_db(1.0, 1));
  out.emplace_back("exponential a=pi n=3", fixtures::pw_db(kPi, 3));
  out.emplace_back("pencil 2x2", fixtures::pencil_db());
  out.emplace_back("polynomial deg2", fixtures::poly_db());
  out.emplace_back("two-rate exponential", fixtures::expsum_db(kPi, 0.5 * kPi));
  out.emplace_back("canonical q=0", to_debranges(fixtures::canon_zero_spec(), 1.0));
  out.emplace_back("canonical q=0.2", to_debranges(fixtures::canon_q_spec(), 1.0));
  return out;
}

// 1. kernel of the exponential pair against the sinc closed form
void c1() {
  SplitMix64 rng(1001);
  double worst = 0.0;
  for (double a : {1.0, kPi})
    for (Index n : {Index(1), Index(3)}) {
      DeBrangesOperator db = fixtures::pw_db(a, n);
      for (int k = 0; k < 100; ++k) {
        Complex xi = rng.complex_in_box(-2, 2, -1, 1);
        Complex z = rng.complex_in_box(-2, 2, -1, 1);
        CMat expect = pw_kernel(a, xi, z) * CMat::Identity(n, n);
        worst = std::max(worst, opnorm(kernel(db, xi, z) - expect));
      }
    }
  criterion(1, "Paley-Wiener kernel agreement", worst <= 1e-11, "max err " + fmt(worst));
}

// 2. diagonal branch value and first-order confluence
void c2() {
  double worst_diag = 0.0;
  bool converges = true;
  std::string note;
  for (double a : {1.0, kPi})
    for (Index n : {Index(1), Index(3)}) {
      DeBrangesOperator db = fixtures::pw_db(a, n);
      worst_diag = std::max(
          worst_diag, opnorm(kernel(db, 0, 0) - (a / kPi) * CMat::Identity(n, n)));
      double prev = -1.0;
      for (double delta : {1e-4, 1e-5, 1e-6}) {
        double err = opnorm(kernel(db, 0, Complex(delta, 0)) - kernel(db, 0, 0));
        if (prev >= 0.0 && err > prev / 5.0) converges = false;  // at least first order
        prev = err;
      }
    }
  criterion(2, "diagonal branch and first-order confluence", worst_diag <= 1e-11 && converges,
            "diag err " + fmt(worst_diag) + (converges ? ", order ok" : ", order BAD"));
}

// 3. positivity sampling across three constructions
void c3() {
  struct Case {
    std::string name;
    DeBrangesOperator db;
    int count;
  };
  std::vector<Case> cases;
  cases.push_back({"exponential", fixtures::pw_db(kPi, 2), 10});
  cases.push_back({"pencil", fixtures::pencil_db(), 10});
  cases.push_back({"canonical", to_debranges(fixtures::canon_q_spec(), 1.0), 6});
  bool all = true;
  double worst = 0.0;
  for (const Case& c : cases) {
    PositivitySampler sampler;
    sampler.count = c.count;
    sampler.draws = 200;
    sampler.seed = 2024;
    PositivityReport rep = verify_positivity(c.db, sampler, 1e-10);
    all = all && rep.passed;
    worst = std::min(worst, rep.worst_min_eig / (1.0 + rep.worst_gram_norm));
  }
  criterion(3, "positivity of 200 seeded Grams per construction", all,
            "worst scaled min eig " + fmt(worst));
}

// 4. conjugate-symmetry identity for every shipped pair + negative control
void c4() {
  double worst = 0.0;
  bool all = true;
  for (const auto& [name, db] : shipped_pairs()) {
    worst = std::max(worst, db.report().symmetry_residual);
    all = all && db.report().symmetry_residual <= 1e-10;
  }
  ValidationReport swapped =
      validation_report(fixtures::exp_plus(1.0, 1), fixtures::exp_minus(1.0, 1));
  bool control = !swapped.passed && !swapped.inner.pass_two_sided();
  criterion(4, "symmetry identity on the grid + swapped-pair control", all && control,
            "max residual " + fmt(worst) + (control ? ", control rejected" : ", control BAD"));
}

// 5. spectrum oracles: integer, half-integer and union grids
void c5() {
  auto near = [](const std::vector<double>& nodes, const std::vector<double>& expect) {
    if (nodes.size() != expect.size()) return false;
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (std::abs(nodes[k] - expect[k]) > 1e-8) return false;
    return true;
  };
  DeBrangesOperator db = fixtures::pw_db(kPi, 1);
  ExtensionSpectrum sid = spectrum(db, CMat::Identity(1, 1), -3.5, 3.5);
  bool ok1 = near(sid.nodes, {-3, -2, -1, 0, 1, 2, 3});
  ExtensionSpectrum sneg = spectrum(db, CMat(-CMat::Identity(1, 1)), -3.5, 3.5);
  bool ok2 = near(sneg.nodes, {-2.5, -1.5, -0.5, 0.5, 1.5, 2.5});

  // incommensurate rates: both scalar grids appear, meeting only at 0
  double rt2 = std::sqrt(2.0);
  DeBrangesOperator db2 = fixtures::expsum_db(kPi, kPi / rt2);
  ExtensionSpectrum sun = spectrum(db2, CMat::Identity(2, 2), -3.5, 3.5);
  bool ok3 = near(sun.nodes,
                  {-3, -2 * rt2, -2, -rt2, -1, 0, 1, rt2, 2, 2 * rt2, 3});
  if (ok3)
    for (std::size_t i = 0; i < sun.nodes.size(); ++i)
      ok3 = ok3 && sun.multiplicity(i) == (std::abs(sun.nodes[i]) < 1e-6 ? 2 : 1);

  criterion(5, "spectrum oracles (V=I, V=-I, block union)", ok1 && ok2 && ok3,
            std::string("integer ") + (ok1 ? "ok" : "BAD") + ", half-integer " +
                (ok2 ? "ok" : "BAD") + ", union " + (ok3 ? "ok" : "BAD"));
}

// 6. orthogonality across recovered nodes
void c6() {
  DeBrangesOperator db = fixtures::pw_db(kPi, 1);
  ExtensionSpectrum sp = spectrum(db, CMat::Identity(1, 1), -3.5, 3.5);
  OrthogonalityReport rep = orthogonality_check(db, sp, 1e-8);
  criterion(6, "eigenfunction orthogonality", rep.passed,
            "max cross " + fmt(rep.max_cross) + " vs scale " + fmt(rep.scale));
}

// 7. Kramer/Shannon reconstruction: truncation decay and node exactness
void c7() {
  DeBrangesOperator db = fixtures::pw_db(kPi, 1);
  ExtensionSpectrum sp = spectrum(db, CMat::Identity(1, 1), -100.5, 100.5, {4096, 100});
  bool enough = sp.nodes.size() == 201;

  SplitMix64 rng(777);
  std::vector<Complex> pts;
  std::vector<CVec> cfs;
  for (int j = 0; j < 5; ++j) {
    pts.emplace_back(rng.uniform(-2.0, 2.0), 0.0);
    cfs.push_back(v1(rng.complex_in_box(-1, 1, -1, 1)));
  }
  KernelCombo f(db, pts, cfs);
  auto shared = std::make_shared<const KernelCombo>(f);
  auto fn = [shared](Complex z) { return shared->evaluate(z); };

  std::vector<Complex> grid;
  for (int k = 0; k <= 100; ++k) grid.emplace_back(-5.0 + 0.1 * k, 0.0);
  double supf = 0.0;
  for (Complex z : grid) supf = std::max(supf, fn(z).norm());

  ConvergenceReport cr = sampling_convergence(db, sp, fn, grid, {50, 100, 200});
  bool rel_ok = enough && cr.sup_errors.size() == 3 && cr.sup_errors[2] <= 1e-2 * supf;
  bool decay_ok = enough;
  for (std::size_t k = 0; decay_ok && k + 1 < cr.sup_errors.size(); ++k)
    decay_ok = cr.sup_errors[k] / std::max(cr.sup_errors[k + 1], 1e-300) >= 1.7;

  // exact once the support lies on sample nodes
  KernelCombo onnodes(db, {Complex(-2, 0), Complex(0, 0), Complex(1, 0)},
                      {v1(Complex(0.3, 0.4)), v1(Complex(-1, 0.2)), v1(Complex(0.5, 0))});
  std::vector<CVec> samples;
  for (double mu : sp.nodes) samples.push_back(onnodes.evaluate(Complex(mu, 0)));
  double exact_err = 0.0;
  for (Complex z : grid)
    exact_err = std::max(exact_err,
                         (kramer_reconstruct(db, sp, samples, z) - onnodes.evaluate(z)).norm());

  bool pass = rel_ok && decay_ok && exact_err <= 1e-10;
  std::string detail = "rel err@200 " + fmt(cr.sup_errors.empty() ? 1.0 : cr.sup_errors.back() / supf);
  detail += ", ratios";
  for (std::size_t k = 0; k + 1 < cr.sup_errors.size(); ++k)
    detail += " " + fmt(cr.sup_errors[k] / cr.sup_errors[k + 1]);
  detail += ", node-exact err " + fmt(exact_err);
  criterion(7, "Kramer/Shannon reconstruction", pass, detail);
}

// 8. canonical system: closed form, step-order, integral identity, kernel match
void c8() {
  auto spec = CanonicalSystemSpec::zero(1, 1.0, 1e-3);
  auto spec_half = CanonicalSystemSpec::zero(1, 1.0, 5e-4);
  double e1 = 0.0, e2 = 0.0;
  SplitMix64 rng(88);
  for (int k = 0; k < 8; ++k) {
    Complex z = rng.complex_in_box(-2, 2, -2, 2);
    if (std::abs(z) > 2.0) z *= 2.0 / std::abs(z);
    CanonicalState s1 = canonical_solve(spec, 1.0, z);
    CanonicalState s2 = canonical_solve(spec_half, 1.0, z);
    CMat em = std::exp(Complex(0, 1) * z) * CMat::Identity(1, 1);
    CMat ep = std::exp(Complex(0, -1) * z) * CMat::Identity(1, 1);
    e1 = std::max({e1, opnorm(s1.Eminus - em), opnorm(s1.Eplus - ep)});
    e2 = std::max({e2, opnorm(s2.Eminus - em), opnorm(s2.Eplus - ep)});
  }
  bool closed_ok = e1 <= 1e-8;
  double factor = e1 / e2;
  bool order_ok = factor >= 8.0 && factor <= 32.0;

  double resid = integral_identity_residual(spec, 1.0, Complex(0, 1), Complex(0, 1));
  bool ident_ok = resid <= 1e-6;

  DeBrangesOperator canon = to_debranges(spec, 1.0);
  DeBrangesOperator exp = fixtures::pw_db(1.0, 1);
  double kerr = 0.0;
  for (int k = 0; k < 25; ++k) {
    Complex xi = rng.complex_in_box(-2, 2, -1, 1);
    Complex z = rng.complex_in_box(-2, 2, -1, 1);
    kerr = std::max(kerr, opnorm(kernel(canon, xi, z) - kernel(exp, xi, z)));
  }
  bool kernel_ok = kerr <= 1e-7;

  criterion(8, "canonical system accuracy", closed_ok && order_ok && ident_ok && kernel_ok,
            "closed-form " + fmt(e1) + ", h-halving x" + fmt(factor) + ", identity " +
                fmt(resid) + ", kernel match " + fmt(kerr));
}

// 9. two-sided norm identity of mirrored subspace sections
void c9() {
  SplitMix64 rng(909);
  double worst = 0.0;
  for (double a : {1.0, kPi}) {
    DeBrangesOperator db = fixtures::pw_db(a, 1);
    for (int k = 0; k < 10; ++k) {
      Complex beta = rng.complex_in_box(-2, 2, 0.2, 2.0);
      Complex w = rng.complex_in_box(-2, 2, -1, 1);
      CVec u = rng.unit_vector(1);
      IsometryReport rep = isometry_check(db, beta, w, u);
      worst = std::max(worst, rep.difference);
    }
  }
  criterion(9, "isometry norm identity", worst <= 1e-9, "max |diff| " + fmt(worst));
}

// 10. components recovered from the kernel rebuild it
void c10() {
  SplitMix64 rng(1010);
  double worst_scaled = 0.0;
  for (const auto& [name, db] : shipped_pairs()) {
    if (db.report().degenerate_kernel) continue;
    RecoveredPair rec = recover_E(db, Complex(0.4, 0.8));
    double max_err = 0.0, scale = 1.0;
    for (int k = 0; k < 50; ++k) {
      Complex xi = rng.complex_in_box(-2, 2, -1, 1);
      Complex z = rng.complex_in_box(-2, 2, -1, 1);
      CMat orig = kernel(db, xi, z);
      max_err = std::max(max_err, opnorm(kernel_from_pair(rec, xi, z) - orig));
      scale = std::max(scale, opnorm(orig));
    }
    worst_scaled = std::max(worst_scaled, max_err / scale);
  }
  criterion(10, "recovered pair rebuilds the kernel", worst_scaled <= 1e-8,
            "worst scaled err " + fmt(worst_scaled));
}

// 11. Potapov / characteristic generators: contractive inside, unitary on the circle
void c11() {
  SplitMix64 rng(1111);
  double worst_excess = 0.0, worst_boundary = 0.0;
  bool ok = true;
  for (int k = 0; k < 20; ++k) {
    Index n = 1 + static_cast<Index>(k % 4);
    CMat a = fixtures::random_contraction(n, rng, 0.85);
    for (double radius : {0.0, 0.3, 0.6, 0.9, 1.0}) {
      for (int g = 0; g < 8; ++g) {
        Complex w = radius * std::exp(Complex(0, 2.0 * kPi * (g + 0.3) / 8.0));
        CMat v = potapov(a, w);
        CMat c = characteristic_function(a, w).value;
        for (const CMat* m : {&v, &c}) {
          Eigen::SelfAdjointEigenSolver<CMat> es(CMat(m->adjoint() * *m),
                                                 Eigen::EigenvaluesOnly);
          worst_excess = std::max(worst_excess, es.eigenvalues().maxCoeff() - 1.0);
        }
        if (radius == 1.0) {
          CMat id = CMat::Identity(n, n);
          worst_boundary = std::max({worst_boundary, opnorm(v.adjoint() * v - id),
                                     opnorm(v * v.adjoint() - id), opnorm(c.adjoint() * c - id),
                                     opnorm(c * c.adjoint() - id)});
        }
      }
    }
  }
  ok = worst_excess <= 1e-10 && worst_boundary <= 1e-8;
  criterion(11, "Potapov/characteristic generators", ok,
            "contractivity excess " + fmt(worst_excess) + ", boundary defect " +
                fmt(worst_boundary));
}

// 12. exact Gram norm against the line quadrature with reported tail
void c12() {
  SplitMix64 rng(1212);
  bool ok = true;
  double worst_rel = 0.0;
  for (double a : {1.0, kPi}) {
    DeBrangesOperator db = fixtures::pw_db(a, 1);
    for (int k = 0; k < 5; ++k) {
      int m = 1 + static_cast<int>(rng.next() % 5);
      std::vector<Complex> pts;
      std::vector<CVec> cfs;
      for (int j = 0; j < m; ++j) {
        pts.push_back(rng.complex_in_box(-2, 2, -0.3, 0.3));
        cfs.push_back(v1(rng.complex_in_box(-1, 1, -1, 1)));
      }
      KernelCombo f(db, pts, cfs);
      double exact = gram_quadratic_form(f);
      if (exact < 1e-12) continue;
      QuadratureResult q = bnorm_line_quadrature(f, 200.0 / a, 40000);
      double diff = std::abs(q.value - exact);
      ok = ok && diff <= q.tail_estimate && q.tail_estimate <= 0.01 * exact;
      worst_rel = std::max(worst_rel, diff / exact);
    }
  }
  criterion(12, "Gram norm vs line quadrature", ok, "worst rel diff " + fmt(worst_rel));
}

}  // namespace

int main() {
  c1();
  c2();
  c3();
  c4();
  c5();
  c6();
  c7();
  c8();
  c9();
  c10();
  c11();
  c12();
  if (g_failures == 0)
    std::printf("all 12 criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", g_failures);
  return g_failures;
}
