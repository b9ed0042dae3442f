#pragma once

#include "mubsearch/matcore.hpp"

namespace mub {

/// Squared distance between two bases
///   D^2_ab = 1/(d-1) sum_ij |<a_i|b_j>|^2 (1 - |<a_i|b_j>|^2),
/// in [0, 1]; 0 iff the projector sets coincide, 1 iff a and b are unbiased.
/// The value is bit-identical under swapping a and b. In dimension one every
/// pair of bases coincides and the distance is defined as 0.
double pair_distance_sq(const Basis& a, const Basis& b);

/// Same quantity from a transition matrix U_ab (only |U_jk| enters).
double pair_distance_sq(const ComplexMatrix& transition);

struct DistanceReport {
  int dim = 0;
  int k = 0;
  /// Symmetric k x k table of D^2_ab with zero diagonal.
  Eigen::MatrixXd pair_d2;
  /// Mean over the k(k-1)/2 pairs.
  double asd = 0.0;
};

DistanceReport average_distance_sq(const BasisSet& set);

/// The two-qudit state rho_a = (1/d) sum_j |a*_j a_j><a*_j a_j| with the
/// conjugation map fixed to entrywise complex conjugation. Indices are
/// ordered |m n> -> m d + n with the conjugate ket as the first factor.
struct TwoQuditState {
  int dim = 0;
  ComplexMatrix matrix;
};

TwoQuditState two_qudit_state(const Basis& a);

/// Hilbert-Schmidt inner product scaled so that (rho_a, rho_a) = 1:
/// (A, B) = d Tr(A^† B).
Complex scaled_hs_inner(const TwoQuditState& a, const TwoQuditState& b);

/// sqrt(d / (2(d-1))) ||rho_a - rho_b|| with ||A|| = sqrt(d Tr(A^† A)).
/// Equals sqrt(pair_distance_sq(a, b)), computed by a different route.
double hs_distance_oracle(const Basis& a, const Basis& b);

}  // namespace mub
