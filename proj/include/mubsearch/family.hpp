#pragma once

// Two-parameter family of three 6x6 Hadamard bases which, together with the
// canonical basis, reach the maximal average squared distance between four
// bases in dimension six.
//
// With w = exp(2 pi i/3), x = exp(i theta_x), t = exp(i theta_t) and the
// 2x2 blocks Z = diag(1,-1), X = diag(x*, x), F2 = [[1,1],[1,-1]],
// T = [[1, w t^2],[1, -w t^2]]:
//
//   M1 = X1 N1 / sqrt6,  M2 = N2 / sqrt6,  M3 = X3 N3 / sqrt6
//
// where N1, N2, N3 are 3x3 arrays of F2/T blocks of Fourier-transposed
// type and X1 = diag(X, i w* t Z X*^2, X), X3 = diag(X*, w* X*, -i t Z X^2).

#include "mubsearch/matcore.hpp"

#include <array>
#include <string>
#include <vector>

namespace mub::family {

using Block = Eigen::Matrix2cd;

inline const Complex kOmega = std::polar(1.0, 2.0 * kPi / 3.0);

/// Angle reduced to [0, 2 pi).
double reduce_angle(double theta);

class FamilyParams {
 public:
  FamilyParams(double theta_x, double theta_t);
  double theta_x() const { return theta_x_; }
  double theta_t() const { return theta_t_; }
  Complex x() const { return std::polar(1.0, theta_x_); }
  Complex t() const { return std::polar(1.0, theta_t_); }

 private:
  double theta_x_;
  double theta_t_;
};

struct FamilyTriple {
  Basis m1;
  Basis m2;
  Basis m3;
  FamilyParams params;

  const Basis& operator[](int i) const;  // 1-based: 1, 2, 3
};

/// 6x6 matrices from 2x2 ingredients.
struct Ingredients {
  ComplexMatrix x1;  ///< left dephasing of M1
  ComplexMatrix x3;  ///< left dephasing of M3
  ComplexMatrix n1;  ///< central matrices, normalized by 1/sqrt6
  ComplexMatrix n2;
  ComplexMatrix n3;
};

Ingredients ingredients(const FamilyParams& p);

/// Block T = [[1, w t^2],[1, -w t^2]].
Block t_block(const FamilyParams& p);

FamilyTriple build_triple(const FamilyParams& p);

enum class Pair { p12, p23, p31 };

/// Blocks of 6 M_i^† M_j in the cyclic layout
///   [[q1, q2, q3], [q3, q1, q2], [q2, q3, q1]]
/// plus the coefficients alpha..epsilon read off the first block row.
struct BlockDecomposition {
  Pair pair = Pair::p12;
  std::array<std::array<Block, 3>, 3> blocks;
  /// q1, q2, q3 (a_i for 12, b_i for 23, c_i for 31).
  std::array<Block, 3> row;
  Complex alpha, beta, gamma, delta, epsilon;
  /// max deviation of any block from the cyclic layout.
  double cyclic_residual = 0.0;
  /// max deviation of `row` from the alpha..epsilon forms.
  double form_residual = 0.0;
};

/// Throws std::logic_error if the cyclic residual exceeds 1e-10.
BlockDecomposition product_blocks(const FamilyTriple& t, Pair which);

struct Coefficients {
  Complex alpha, beta, gamma, delta, epsilon;
};

/// Closed-form alpha..epsilon in terms of the two angles.
Coefficients analytic_coefficients(const FamilyParams& p);

/// Swaps the two diagonal elements.
Block check(const Block& b);

struct FameSolutions {
  std::vector<double> theta_t;  ///< in [0, 2pi), 0..2 entries
  bool singular = false;        ///< sin(theta_x) == 0
};

/// All theta_t with cos(theta_t + pi/3) = cos(2 theta_x) / sin(theta_x).
FameSolutions fame_constraint(double theta_x);

/// |cos(theta_t + pi/3) - cos(2 theta_x)/sin(theta_x)|, +inf if sin = 0.
double fame_residual(const FamilyParams& p);

/// 8p^8 + 8q^2p^6 - 16q^3p^5 + 16qp^5 - 16q^2p^4 + 8q^3p^3 - 7p^4
///   - 14qp^3 + 8q^2p^2 + 2p^2 + 4qp
double distance_polynomial(double p, double q);

/// D^2_12 = (8/45)[5 - P(sin theta_x, cos(theta_t + pi/3))].
double pair_distance_poly(const FamilyParams& p);

/// ASD of {canonical, M1, M2, M3} = (1 + D^2_12)/2, from the polynomial.
double family_asd(const FamilyParams& p);

/// Same value from the explicit four-basis set.
double family_asd_brute(const FamilyParams& p);

/// The explicit set {canonical, M1, M2, M3}.
BasisSet family_set(const FamilyParams& p);

struct OptimumResult {
  double r_const = 0.0;   ///< (21 sqrt3 - 36)^(1/3)
  double p_sq_opt = 0.0;  ///< sin^2 theta_x at the optimum
  double q_opt = 0.0;     ///< cos(theta_t + pi/3) for p = +sqrt(p_sq_opt)
  std::vector<FamilyParams> theta_pairs;
  double d2_pair_max = 0.0;
  double asd_max = 0.0;
  /// 112u^3 - 192u^2 + 111u - 22 at u = p_sq_opt.
  double cubic_residual = 0.0;
};

/// 112u^3 - 192u^2 + 111u - 22
double optimum_cubic(double u);

OptimumResult optimal_params();

struct Residual {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  /// Conditional identities are only asserted on the fame curve.
  bool applies = true;
  /// Informational residuals are reported but never asserted.
  bool informational = false;

  bool passed() const { return !applies || informational || value <= threshold; }
};

struct IdentityReport {
  FamilyParams params;
  bool on_fame_curve = false;
  std::vector<Residual> residuals;

  bool all_passed() const;
};

/// Residuals of every identity of the family at one parameter point.
/// `perturbation` > 0 rotates M1 by exp(i perturbation (E01 + E10)) before
/// checking, a negative control for the verifier.
IdentityReport verify_identities(const FamilyParams& p, double perturbation = 0.0);

struct GridPoint {
  double theta_x = 0.0;
  double theta_t = 0.0;
  double asd = 0.0;
};

struct AngleRange {
  double lo = 0.0;
  double hi = 2.0 * kPi;
};

struct ContourGrid {
  int nx = 0;
  int nt = 0;
  /// Row-major in theta_x, endpoints included.
  std::vector<GridPoint> points;
  /// Points of the fame curve inside the ranges.
  std::vector<GridPoint> fame_points;
  GridPoint grid_max;
  /// Grid local maxima refined by a 2-D Nelder-Mead, angles reduced and
  /// duplicates merged, sorted by descending asd.
  std::vector<GridPoint> refined_maxima;
  /// Maximum of family_asd along the fame curve.
  GridPoint fame_max;
};

/// Throws std::invalid_argument if nx or nt < 2.
ContourGrid contour_grid(AngleRange theta_x, AngleRange theta_t, int nx, int nt);

/// Nelder-Mead maximization of family_asd from a starting point.
GridPoint refine_maximum(double theta_x, double theta_t);

/// Maximum of family_asd along the fame curve (all branches).
GridPoint fame_curve_maximum();

}  // namespace mub::family
