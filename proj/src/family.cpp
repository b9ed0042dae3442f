#include "mubsearch/family.hpp"

#include "mubsearch/distance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

namespace mub::family {

namespace {

constexpr Complex kI{0.0, 1.0};
const double kSqrt6 = std::sqrt(6.0);

Block z_block() { return Block{{1.0, 0.0}, {0.0, -1.0}}; }
Block f2_block() { return Block{{1.0, 1.0}, {1.0, -1.0}}; }

ComplexMatrix block_diag(const Block& a, const Block& b, const Block& c) {
  ComplexMatrix m = ComplexMatrix::Zero(6, 6);
  m.block<2, 2>(0, 0) = a;
  m.block<2, 2>(2, 2) = b;
  m.block<2, 2>(4, 4) = c;
  return m;
}

// Rows of blocks [r0c0 r0c1 r0c2; ...] into a 6x6 matrix.
ComplexMatrix assemble(const std::array<std::array<Block, 3>, 3>& b) {
  ComplexMatrix m(6, 6);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m.block<2, 2>(2 * r, 2 * c) = b[r][c];
  }
  return m;
}

// Central matrix with rows [F2 F2 F2], [R w R w* R], [S w* S w S].
ComplexMatrix central(const Block& r, const Block& s) {
  const Complex w = kOmega;
  const Complex wc = std::conj(kOmega);
  const Block f = f2_block();
  return assemble({{{f, f, f}, {r, w * r, wc * r}, {s, wc * s, w * s}}}) / kSqrt6;
}

Block sub(const ComplexMatrix& m, int r, int c) { return m.block<2, 2>(2 * r, 2 * c); }

double max_abs(const Block& b) { return b.cwiseAbs().maxCoeff(); }

// Residual of a 2x2 block against [[1, s],[1, -s]] with |s| = 1.
double fourier_type_residual(const Block& b) {
  return std::max({std::abs(b(0, 0) - 1.0), std::abs(b(1, 0) - 1.0), std::abs(b(1, 1) + b(0, 1)),
                   std::abs(std::abs(b(0, 1)) - 1.0)});
}

// Deviation of sqrt6 * n from the Fourier-transposed template.
double ft_membership_residual(const ComplexMatrix& n) {
  const ComplexMatrix s = kSqrt6 * n;
  const Complex w = kOmega;
  const Complex wc = std::conj(kOmega);
  const Block f = f2_block();
  double res = 0.0;
  for (int c = 0; c < 3; ++c) res = std::max(res, max_abs(sub(s, 0, c) - f));
  const Block t1 = sub(s, 1, 0);
  const Block t2 = sub(s, 2, 0);
  res = std::max({res, fourier_type_residual(t1), fourier_type_residual(t2)});
  res = std::max({res, max_abs(sub(s, 1, 1) - w * t1), max_abs(sub(s, 1, 2) - wc * t1)});
  res = std::max({res, max_abs(sub(s, 2, 1) - wc * t2), max_abs(sub(s, 2, 2) - w * t2)});
  return res;
}

std::array<Block, 3> templates(Pair which, const Complex& al, const Complex& be, const Complex& ga,
                               const Complex& de, const Complex& ep, const Complex& t) {
  const Complex w = kOmega;
  const Complex wc = std::conj(kOmega);
  const Complex tc = std::conj(t);
  const Block a1{{al, be}, {-std::conj(be), std::conj(al)}};
  const Block a2{{ga, de}, {ep, wc * std::conj(ga)}};
  const Block a3{{w * ga, -std::conj(ep)}, {-std::conj(de), std::conj(ga)}};
  switch (which) {
    case Pair::p12:
      return {a1, a2, a3};
    case Pair::p23:
      return {check(a2), check(a1), check(a3)};
    case Pair::p31: {
      const Block c1{{kI * tc * de, kI * w * t * ga},
                     {kI * wc * tc * std::conj(ga), -kI * wc * tc * std::conj(ep)}};
      const Block c3{{kI * w * tc * be, kI * wc * t * al}, {kI * w * tc * std::conj(al), kI * w * tc * be}};
      return {c1, check(c1), c3};
    }
  }
  throw std::invalid_argument("templates: bad pair");
}

const Basis& left_of(const FamilyTriple& t, Pair which) {
  switch (which) {
    case Pair::p12:
      return t.m1;
    case Pair::p23:
      return t.m2;
    case Pair::p31:
      return t.m3;
  }
  throw std::invalid_argument("bad pair");
}

const Basis& right_of(const FamilyTriple& t, Pair which) {
  switch (which) {
    case Pair::p12:
      return t.m2;
    case Pair::p23:
      return t.m3;
    case Pair::p31:
      return t.m1;
  }
  throw std::invalid_argument("bad pair");
}

BlockDecomposition decompose(const FamilyTriple& tr, Pair which) {
  BlockDecomposition out;
  out.pair = which;
  const ComplexMatrix prod = 6.0 * transition_matrix(left_of(tr, which), right_of(tr, which));
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.blocks[r][c] = sub(prod, r, c);
  }
  for (int c = 0; c < 3; ++c) out.row[c] = out.blocks[0][c];
  double cyc = 0.0;
  for (int r = 1; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      cyc = std::max(cyc, max_abs(out.blocks[r][c] - out.row[(c - r + 3) % 3]));
    }
  }
  out.cyclic_residual = cyc;

  const Complex w = kOmega;
  const Complex wc = std::conj(kOmega);
  const Complex t = tr.params.t();
  const Complex tc = std::conj(t);
  const auto& q = out.row;
  switch (which) {
    case Pair::p12:
      out.alpha = q[0](0, 0);
      out.beta = q[0](0, 1);
      out.gamma = q[1](0, 0);
      out.delta = q[1](0, 1);
      out.epsilon = q[1](1, 0);
      break;
    case Pair::p23:
      out.alpha = std::conj(q[1](0, 0));
      out.beta = q[1](0, 1);
      out.gamma = q[0](1, 1);
      out.delta = q[0](0, 1);
      out.epsilon = q[0](1, 0);
      break;
    case Pair::p31:
      out.alpha = q[2](0, 1) / (kI * wc * t);
      out.beta = q[2](0, 0) / (kI * w * tc);
      out.delta = q[0](0, 0) / (kI * tc);
      out.gamma = q[0](0, 1) / (kI * w * t);
      out.epsilon = std::conj(q[0](1, 1) / (-kI * wc * tc));
      break;
  }
  const auto tmpl = templates(which, out.alpha, out.beta, out.gamma, out.delta, out.epsilon, t);
  double form = 0.0;
  for (int c = 0; c < 3; ++c) form = std::max(form, max_abs(q[c] - tmpl[c]));
  out.form_residual = form;
  return out;
}

FamilyTriple perturbed(const FamilyTriple& tr, double magnitude) {
  if (magnitude == 0.0) return tr;
  ComplexMatrix gen = ComplexMatrix::Zero(6, 6);
  gen(0, 1) = magnitude;
  gen(1, 0) = magnitude;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gen);
  Eigen::VectorXcd ph(6);
  for (int i = 0; i < 6; ++i) ph(i) = std::polar(1.0, es.eigenvalues()(i));
  const ComplexMatrix v = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  return FamilyTriple{Basis::orthonormalized(v * tr.m1.matrix()), tr.m2, tr.m3, tr.params};
}

double hadamard_residual(const Basis& b) {
  const ComplexMatrix h = kSqrt6 * b.matrix();
  double res = (h.cwiseAbs().array() - 1.0).abs().maxCoeff();
  res = std::max(res, max_abs_diff(h * h.adjoint(), 6.0 * ComplexMatrix::Identity(6, 6)));
  return res;
}

// Golden-section maximum of f on [lo, hi].
std::pair<double, double> golden_max(const std::function<double(double)>& f, double lo, double hi) {
  constexpr double g = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int n = 0; n < 200 && b - a > 1e-13; ++n) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

double torus_distance(double x1, double t1, double x2, double t2) {
  auto wrap = [](double d) {
    d = std::fmod(std::abs(d), 2.0 * kPi);
    return std::min(d, 2.0 * kPi - d);
  };
  return std::hypot(wrap(x1 - x2), wrap(t1 - t2));
}

}  // namespace

double reduce_angle(double theta) {
  double r = std::fmod(theta, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  if (r >= 2.0 * kPi) r = 0.0;
  return r;
}

FamilyParams::FamilyParams(double theta_x, double theta_t)
    : theta_x_(reduce_angle(theta_x)), theta_t_(reduce_angle(theta_t)) {
  if (!std::isfinite(theta_x) || !std::isfinite(theta_t)) {
    throw std::invalid_argument("FamilyParams: non-finite angle");
  }
}

const Basis& FamilyTriple::operator[](int i) const {
  switch (i) {
    case 1:
      return m1;
    case 2:
      return m2;
    case 3:
      return m3;
  }
  throw std::out_of_range("FamilyTriple: index must be 1, 2 or 3");
}

Block check(const Block& b) { return Block{{b(1, 1), b(0, 1)}, {b(1, 0), b(0, 0)}}; }

Block t_block(const FamilyParams& p) {
  const Complex s = kOmega * p.t() * p.t();
  return Block{{1.0, s}, {1.0, -s}};
}

Ingredients ingredients(const FamilyParams& p) {
  const Complex x = p.x();
  const Complex t = p.t();
  const Complex wc = std::conj(kOmega);
  const Block z = z_block();
  const Block xb{{std::conj(x), 0.0}, {0.0, x}};
  const Block xc = xb.conjugate();
  const Block f = f2_block();
  const Block tb = t_block(p);

  Ingredients in;
  in.x1 = block_diag(xb, kI * wc * t * z * xc * xc, xb);
  in.x3 = block_diag(xc, wc * xc, -kI * t * z * xb * xb);
  in.n1 = central(f, tb);
  in.n2 = central(tb, tb);
  in.n3 = central(tb, f);
  return in;
}

FamilyTriple build_triple(const FamilyParams& p) {
  const Ingredients in = ingredients(p);
  return FamilyTriple{Basis(in.x1 * in.n1), Basis(in.n2), Basis(in.x3 * in.n3), p};
}

BlockDecomposition product_blocks(const FamilyTriple& t, Pair which) {
  BlockDecomposition out = decompose(t, which);
  if (out.cyclic_residual > 1e-10) {
    throw std::logic_error("product_blocks: cyclic structure violated");
  }
  return out;
}

Coefficients analytic_coefficients(const FamilyParams& p) {
  const double tx = p.theta_x();
  const double tt = p.theta_t();
  const Complex w = kOmega;
  const Complex wc = std::conj(kOmega);
  const Complex t = p.t();
  const Complex tc = std::conj(t);
  const double s = std::sin(tx);
  const double c = std::cos(tx);
  const double c2 = std::cos(2.0 * tx);
  Coefficients k;
  k.alpha = 4.0 * c * (1.0 - w * tc * s);
  k.beta = -2.0 * kI * wc * t * (c2 - 2.0 * std::cos(tt - 2.0 * kPi / 3.0) * s);
  k.gamma = -2.0 * wc * c * (wc + 2.0 * tc * s);
  k.delta = -2.0 * kI * t * (c2 - 2.0 * std::cos(tt) * s);
  k.epsilon = -2.0 * kI * wc * tc * (c2 - 2.0 * std::cos(tt + 2.0 * kPi / 3.0) * s);
  return k;
}

FameSolutions fame_constraint(double theta_x) {
  FameSolutions out;
  const double s = std::sin(theta_x);
  if (s == 0.0) {
    out.singular = true;
    return out;
  }
  double c = std::cos(2.0 * theta_x) / s;
  if (std::abs(c) > 1.0) {
    if (std::abs(c) > 1.0 + 1e-14) return out;
    c = std::copysign(1.0, c);
  }
  const double base = std::acos(c);
  const double first = reduce_angle(base - kPi / 3.0);
  const double second = reduce_angle(-base - kPi / 3.0);
  out.theta_t.push_back(first);
  if (torus_distance(0.0, first, 0.0, second) > 1e-12) out.theta_t.push_back(second);
  std::sort(out.theta_t.begin(), out.theta_t.end());
  return out;
}

double fame_residual(const FamilyParams& p) {
  const double s = std::sin(p.theta_x());
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(std::cos(p.theta_t() + kPi / 3.0) - std::cos(2.0 * p.theta_x()) / s);
}

double distance_polynomial(double p, double q) {
  const double p2 = p * p;
  const double p3 = p2 * p;
  const double p4 = p2 * p2;
  const double p5 = p4 * p;
  const double p6 = p3 * p3;
  const double p8 = p4 * p4;
  const double q2 = q * q;
  const double q3 = q2 * q;
  return 8.0 * p8 + 8.0 * q2 * p6 - 16.0 * q3 * p5 + 16.0 * q * p5 - 16.0 * q2 * p4 +
         8.0 * q3 * p3 - 7.0 * p4 - 14.0 * q * p3 + 8.0 * q2 * p2 + 2.0 * p2 + 4.0 * q * p;
}

double pair_distance_poly(const FamilyParams& p) {
  const double ps = std::sin(p.theta_x());
  const double qs = std::cos(p.theta_t() + kPi / 3.0);
  return 8.0 / 45.0 * (5.0 - distance_polynomial(ps, qs));
}

double family_asd(const FamilyParams& p) { return 0.5 * (1.0 + pair_distance_poly(p)); }

BasisSet family_set(const FamilyParams& p) {
  FamilyTriple t = build_triple(p);
  return BasisSet({Basis::canonical(6), std::move(t.m1), std::move(t.m2), std::move(t.m3)});
}

double family_asd_brute(const FamilyParams& p) { return average_distance_sq(family_set(p)).asd; }

double optimum_cubic(double u) { return ((112.0 * u - 192.0) * u + 111.0) * u - 22.0; }

OptimumResult optimal_params() {
  OptimumResult out;
  const double r = std::cbrt(21.0 * std::sqrt(3.0) - 36.0);
  double u = (3.0 + 16.0 * r - r * r) / (28.0 * r);
  const double slope = (336.0 * u - 384.0) * u + 111.0;
  u -= optimum_cubic(u) / slope;
  out.r_const = r;
  out.p_sq_opt = u;
  out.cubic_residual = optimum_cubic(u);

  const double p = std::sqrt(u);
  out.q_opt = (1.0 - 2.0 * u) / p;
  const double q = out.q_opt;
  out.d2_pair_max = 8.0 / 45.0 * (5.0 - distance_polynomial(p, q));
  const double cos_sq = 1.0 - u;
  out.asd_max = (71.0 - 12.0 * cos_sq * cos_sq) / 70.0;

  // sin(theta_x) = +-p picks four theta_x; each has two theta_t branches.
  const double ax = std::asin(p);
  for (double tx : {ax, kPi - ax, kPi + ax, 2.0 * kPi - ax}) {
    for (double tt : fame_constraint(tx).theta_t) {
      FamilyParams cand(tx, tt);
      if (std::abs(pair_distance_poly(cand) - out.d2_pair_max) > 1e-12) continue;
      const bool dup = std::any_of(out.theta_pairs.begin(), out.theta_pairs.end(), [&](const FamilyParams& e) {
        return torus_distance(e.theta_x(), e.theta_t(), cand.theta_x(), cand.theta_t()) < 1e-9;
      });
      if (!dup) out.theta_pairs.push_back(cand);
    }
  }
  return out;
}

bool IdentityReport::all_passed() const {
  return std::all_of(residuals.begin(), residuals.end(), [](const Residual& r) { return r.passed(); });
}

IdentityReport verify_identities(const FamilyParams& p, double perturbation) {
  IdentityReport rep{p, fame_residual(p) < 1e-9, {}};
  const bool fame = rep.on_fame_curve;
  auto add = [&](std::string name, double value, double thr, bool applies = true, bool info = false) {
    rep.residuals.push_back(Residual{std::move(name), value, thr, applies, info});
  };

  const FamilyTriple tr = perturbed(build_triple(p), perturbation);
  const Ingredients in = ingredients(p);
  const Complex w = kOmega;
  const Complex wc = std::conj(kOmega);
  const Complex t = p.t();
  const Complex tc = std::conj(t);
  const Block z = z_block();

  for (int i = 1; i <= 3; ++i) add("hadamard_m" + std::to_string(i), hadamard_residual(tr[i]), 1e-10);

  const double d12 = pair_distance_sq(tr.m1, tr.m2);
  const double d23 = pair_distance_sq(tr.m2, tr.m3);
  const double d31 = pair_distance_sq(tr.m3, tr.m1);
  add("equidistance", std::max({std::abs(d12 - d23), std::abs(d23 - d31), std::abs(d31 - d12)}), 1e-12);
  add("distance_polynomial", std::abs(d12 - pair_distance_poly(p)), 1e-10);

  const Complex det_m = wc * t * t * t * t;
  for (int i = 1; i <= 3; ++i) {
    add("det_m" + std::to_string(i), std::abs(tr[i].matrix().determinant() - det_m), 1e-12);
  }
  const Complex det_xn = w * t * t;
  add("det_x1", std::abs(in.x1.determinant() - det_xn), 1e-12);
  add("det_n1", std::abs(in.n1.determinant() - det_xn), 1e-12);
  add("det_x3", std::abs(in.x3.determinant() - det_xn), 1e-12);
  add("det_n3", std::abs(in.n3.determinant() - det_xn), 1e-12);

  // Y = X3* X1 (entrywise conjugate of the diagonal X3).
  const ComplexMatrix y = in.x3.conjugate() * in.x1;
  const Block y1 = sub(y, 0, 0);
  const Block y2 = sub(y, 1, 1);
  const Block y3 = sub(y, 2, 2);
  add("y1y2y3_minus_one", max_abs(y1 * y2 * y3 + Block::Identity()), 1e-12);
  add("y3_t2_y2", max_abs(y3 - tc * tc * y2), 1e-12);

  add("ft_membership_n1", ft_membership_residual(in.n1), 1e-12);
  add("ft_membership_n2", ft_membership_residual(in.n2), 1e-12);
  add("ft_membership_n3", ft_membership_residual(in.n3), 1e-12);

  const BlockDecomposition a = decompose(tr, Pair::p12);
  const BlockDecomposition b = decompose(tr, Pair::p23);
  const BlockDecomposition c = decompose(tr, Pair::p31);
  add("cyclic_12", a.cyclic_residual, 1e-10);
  add("cyclic_23", b.cyclic_residual, 1e-10);
  add("cyclic_31", c.cyclic_residual, 1e-10);
  add("block_forms", std::max({a.form_residual, b.form_residual, c.form_residual}), 1e-12);

  const Coefficients k = analytic_coefficients(p);
  double coef = 0.0;
  for (const auto* dec : {&a, &b, &c}) {
    coef = std::max({coef, std::abs(dec->alpha - k.alpha), std::abs(dec->beta - k.beta),
                     std::abs(dec->gamma - k.gamma), std::abs(dec->delta - k.delta),
                     std::abs(dec->epsilon - k.epsilon)});
  }
  add("coefficients", coef, 1e-12);

  const auto& ar = a.row;
  const auto& br = b.row;
  const auto& cr = c.row;
  add("b2_check_a1", max_abs(br[1] - check(ar[0])), 1e-12);
  add("b1_check_a2", max_abs(br[0] - check(ar[1])), 1e-12);
  add("b3_check_a3", max_abs(br[2] - check(ar[2])), 1e-12);
  add("c2_check_c1", max_abs(cr[1] - check(cr[0])), 1e-12);

  double same_abs = 0.0;
  const Eigen::Matrix2d ref = ar[1].cwiseAbs();
  for (const Block* q : {&ar[2], &br[0], &br[2], &cr[0], &cr[1]}) {
    const Eigen::Matrix2d m = q->cwiseAbs();
    // Entries agree as multisets; compare sorted absolute values.
    std::array<double, 4> x{ref(0, 0), ref(0, 1), ref(1, 0), ref(1, 1)};
    std::array<double, 4> yv{m(0, 0), m(0, 1), m(1, 0), m(1, 1)};
    std::sort(x.begin(), x.end());
    std::sort(yv.begin(), yv.end());
    for (int i = 0; i < 4; ++i) same_abs = std::max(same_abs, std::abs(x[i] - yv[i]));
  }
  add("off_class_abs_values", same_abs, 1e-12);

  double diag_abs = 0.0;
  for (const Block* q : {&br[1], &cr[2]}) {
    std::array<double, 4> x{std::abs(ar[0](0, 0)), std::abs(ar[0](0, 1)), std::abs(ar[0](1, 0)), std::abs(ar[0](1, 1))};
    std::array<double, 4> yv{std::abs((*q)(0, 0)), std::abs((*q)(0, 1)), std::abs((*q)(1, 0)), std::abs((*q)(1, 1))};
    std::sort(x.begin(), x.end());
    std::sort(yv.begin(), yv.end());
    for (int i = 0; i < 4; ++i) diag_abs = std::max(diag_abs, std::abs(x[i] - yv[i]));
  }
  add("diag_class_abs_values", diag_abs, 1e-12);

  add("epsilon_wc_delta_conj", std::abs(a.epsilon - wc * std::conj(a.delta)), 1e-10, fame);
  add("a3_w_z_a2_z", max_abs(ar[2] - w * z * ar[1] * z), 1e-10, fame);
  add("b3_w_z_b1_z", max_abs(br[2] - w * z * br[0] * z), 1e-10, fame);
  add("c2_minus_z_c1_z", max_abs(cr[1] + z * cr[0] * z), 1e-10, fame);
  add("e1", max_abs(ar[1] - wc * z * ar[2] * z), 1e-10, fame);
  add("e2", max_abs(br[0] - wc * z * br[2] * z), 1e-10, fame);
  add("e3", max_abs(cr[0] + z * cr[1] * z), 1e-10, fame);

  const Block a1 = ar[0];
  add("b2_from_a1", max_abs(br[1] - 0.5 * (a1 + a1.adjoint() + z * (a1 - a1.adjoint()) * z)), 1e-10, true, true);
  return rep;
}

GridPoint refine_maximum(double theta_x, double theta_t) {
  using P = std::array<double, 2>;
  auto f = [](const P& v) { return family_asd(FamilyParams(v[0], v[1])); };
  std::array<P, 3> s{P{theta_x, theta_t}, P{theta_x + 0.02, theta_t}, P{theta_x, theta_t + 0.02}};
  std::array<double, 3> fv{f(s[0]), f(s[1]), f(s[2])};
  for (int it = 0; it < 5000; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return fv[i] > fv[j]; });
    const P best = s[idx[0]];
    const P mid = s[idx[1]];
    const P worst = s[idx[2]];
    const double size = std::max(std::hypot(mid[0] - best[0], mid[1] - best[1]),
                                 std::hypot(worst[0] - best[0], worst[1] - best[1]));
    if (size < 1e-11) break;
    const P cen{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
    auto along = [&](double a) { return P{cen[0] + a * (worst[0] - cen[0]), cen[1] + a * (worst[1] - cen[1])}; };
    const P refl = along(-1.0);
    const double fr = f(refl);
    if (fr > fv[idx[0]]) {
      const P exp = along(-2.0);
      const double fe = f(exp);
      if (fe > fr) {
        s[idx[2]] = exp;
        fv[idx[2]] = fe;
      } else {
        s[idx[2]] = refl;
        fv[idx[2]] = fr;
      }
    } else if (fr > fv[idx[1]]) {
      s[idx[2]] = refl;
      fv[idx[2]] = fr;
    } else {
      const P con = along(fr > fv[idx[2]] ? -0.5 : 0.5);
      const double fc = f(con);
      if (fc > std::max(fr, fv[idx[2]])) {
        s[idx[2]] = con;
        fv[idx[2]] = fc;
      } else {
        for (int j : {idx[1], idx[2]}) {
          s[j] = P{0.5 * (s[j][0] + best[0]), 0.5 * (s[j][1] + best[1])};
          fv[j] = f(s[j]);
        }
      }
    }
  }
  const auto top = std::max_element(fv.begin(), fv.end()) - fv.begin();
  const FamilyParams par(s[top][0], s[top][1]);
  return GridPoint{par.theta_x(), par.theta_t(), fv[top]};
}

GridPoint fame_curve_maximum() {
  constexpr int kScan = 20000;
  GridPoint best{0.0, 0.0, -std::numeric_limits<double>::infinity()};
  for (int branch = 0; branch < 2; ++branch) {
    auto theta_t_of = [branch](double tx) -> std::optional<double> {
      const double s = std::sin(tx);
      if (s == 0.0) return std::nullopt;
      const double c = std::cos(2.0 * tx) / s;
      if (std::abs(c) > 1.0) return std::nullopt;
      const double base = std::acos(c);
      return (branch == 0 ? base : -base) - kPi / 3.0;
    };
    auto value = [&](double tx) {
      const auto tt = theta_t_of(tx);
      return tt ? family_asd(FamilyParams(tx, *tt)) : -std::numeric_limits<double>::infinity();
    };
    double best_tx = 0.0;
    double best_v = -std::numeric_limits<double>::infinity();
    const double h = 2.0 * kPi / kScan;
    for (int i = 0; i < kScan; ++i) {
      const double tx = h * (i + 0.5);
      const double v = value(tx);
      if (v > best_v) {
        best_v = v;
        best_tx = tx;
      }
    }
    const auto [tx, v] = golden_max(value, best_tx - h, best_tx + h);
    if (v > best.asd) {
      const FamilyParams par(tx, *theta_t_of(tx));
      best = GridPoint{par.theta_x(), par.theta_t(), v};
    }
  }
  return best;
}

ContourGrid contour_grid(AngleRange theta_x, AngleRange theta_t, int nx, int nt) {
  if (nx < 2 || nt < 2) throw std::invalid_argument("contour_grid: need at least 2 points per axis");
  if (!(theta_x.hi > theta_x.lo) || !(theta_t.hi > theta_t.lo)) {
    throw std::invalid_argument("contour_grid: empty angle range");
  }
  ContourGrid g;
  g.nx = nx;
  g.nt = nt;
  g.points.reserve(static_cast<std::size_t>(nx) * nt);
  auto coord = [](const AngleRange& r, int i, int n) { return r.lo + (r.hi - r.lo) * i / (n - 1); };
  for (int i = 0; i < nx; ++i) {
    const double tx = coord(theta_x, i, nx);
    for (int j = 0; j < nt; ++j) {
      const double tt = coord(theta_t, j, nt);
      g.points.push_back(GridPoint{tx, tt, family_asd(FamilyParams(tx, tt))});
    }
  }
  auto at = [&](int i, int j) -> const GridPoint& { return g.points[static_cast<std::size_t>(i) * nt + j]; };
  g.grid_max = *std::max_element(g.points.begin(), g.points.end(),
                                 [](const GridPoint& a, const GridPoint& b) { return a.asd < b.asd; });

  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nt; ++j) {
      const double v = at(i, j).asd;
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di;
          const int jj = j + dj;
          if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= nx || jj >= nt) continue;
          if (at(ii, jj).asd > v) {
            peak = false;
            break;
          }
        }
      }
      if (!peak) continue;
      const GridPoint r = refine_maximum(at(i, j).theta_x, at(i, j).theta_t);
      const bool dup = std::any_of(g.refined_maxima.begin(), g.refined_maxima.end(), [&](const GridPoint& e) {
        return torus_distance(e.theta_x, e.theta_t, r.theta_x, r.theta_t) < 1e-6;
      });
      if (!dup) g.refined_maxima.push_back(r);
    }
  }
  std::sort(g.refined_maxima.begin(), g.refined_maxima.end(),
            [](const GridPoint& a, const GridPoint& b) { return a.asd > b.asd; });

  const int fame_samples = 4 * nx;
  for (int i = 0; i < fame_samples; ++i) {
    const double tx = theta_x.lo + (theta_x.hi - theta_x.lo) * (i + 0.5) / fame_samples;
    for (double tt : fame_constraint(tx).theta_t) {
      if (tt < theta_t.lo || tt > theta_t.hi) continue;
      g.fame_points.push_back(GridPoint{tx, tt, family_asd(FamilyParams(tx, tt))});
    }
  }
  g.fame_max = fame_curve_maximum();
  return g;
}

}  // namespace mub::family
