#include "mubsearch/distance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mub {

namespace {

void require_same_dim(const Basis& a, const Basis& b, const char* what) {
  if (a.dim() != b.dim()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

double pair_distance_sq(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) throw std::invalid_argument("pair_distance_sq: non-square transition");
  const auto d = u.rows();
  if (d < 2) return 0.0;
  // Row-major and column-major partial sums are added so that swapping the
  // arguments (which transposes |U|) leaves the result bit-identical.
  double by_rows = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double p = std::norm(u(i, j));
      by_rows += p * (1.0 - p);
    }
  }
  double by_cols = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double p = std::norm(u(i, j));
      by_cols += p * (1.0 - p);
    }
  }
  return 0.5 * (by_rows + by_cols) / static_cast<double>(d - 1);
}

double pair_distance_sq(const Basis& a, const Basis& b) {
  require_same_dim(a, b, "pair_distance_sq");
  const int d = a.dim();
  // Explicit loop: entry (j,k) for (b,a) is then the exact conjugate of
  // entry (k,j) for (a,b).
  ComplexMatrix u(d, d);
  const ComplexMatrix& am = a.matrix();
  const ComplexMatrix& bm = b.matrix();
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      double re = 0.0;
      double im = 0.0;
      for (int i = 0; i < d; ++i) {
        const Complex x = am(i, j);
        const Complex y = bm(i, k);
        re += x.real() * y.real() + x.imag() * y.imag();
        im += x.real() * y.imag() - x.imag() * y.real();
      }
      u(j, k) = Complex(re, im);
    }
  }
  return pair_distance_sq(u);
}

DistanceReport average_distance_sq(const BasisSet& set) {
  DistanceReport rep;
  rep.dim = set.dim();
  rep.k = set.size();
  rep.pair_d2 = Eigen::MatrixXd::Zero(rep.k, rep.k);
  double sum = 0.0;
  for (int a = 0; a < rep.k; ++a) {
    for (int b = a + 1; b < rep.k; ++b) {
      const double v = pair_distance_sq(set[a], set[b]);
      rep.pair_d2(a, b) = v;
      rep.pair_d2(b, a) = v;
      sum += v;
    }
  }
  rep.asd = 2.0 * sum / (static_cast<double>(rep.k) * (rep.k - 1));
  return rep;
}

TwoQuditState two_qudit_state(const Basis& a) {
  const int d = a.dim();
  const int n = d * d;
  TwoQuditState st;
  st.dim = d;
  st.matrix = ComplexMatrix::Zero(n, n);
  Eigen::VectorXcd ket(n);
  for (int j = 0; j < d; ++j) {
    const auto col = a.ket(j);
    for (int m = 0; m < d; ++m) {
      for (int q = 0; q < d; ++q) ket(m * d + q) = std::conj(col(m)) * col(q);
    }
    st.matrix += ket * ket.adjoint();
  }
  st.matrix /= static_cast<double>(d);
  return st;
}

Complex scaled_hs_inner(const TwoQuditState& a, const TwoQuditState& b) {
  if (a.dim != b.dim) throw std::invalid_argument("scaled_hs_inner: dimension mismatch");
  return static_cast<double>(a.dim) * (a.matrix.adjoint() * b.matrix).trace();
}

double hs_distance_oracle(const Basis& a, const Basis& b) {
  require_same_dim(a, b, "hs_distance_oracle");
  const int d = a.dim();
  if (d < 2) return 0.0;
  const ComplexMatrix diff = two_qudit_state(a).matrix - two_qudit_state(b).matrix;
  const double norm_sq = static_cast<double>(d) * (diff.adjoint() * diff).trace().real();
  const double scale = static_cast<double>(d) / (2.0 * (d - 1));
  return std::sqrt(scale * std::max(norm_sq, 0.0));
}

}  // namespace mub
