#include "mubsearch/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mub {

namespace {

// Sort keys closer than this count as equal so that round-off does not
// reorder columns whose leading entries coincide (e.g. Hadamard bases).
constexpr double kSortTieTol = 1e-9;

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

// -1, 0, +1 by tolerant lexicographic order on (re, im) of each entry.
int compare_columns(const ComplexMatrix& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double keys_a[2] = {m(i, a).real(), m(i, a).imag()};
    const double keys_b[2] = {m(i, b).real(), m(i, b).imag()};
    for (int c = 0; c < 2; ++c) {
      if (keys_a[c] < keys_b[c] - kSortTieTol) return -1;
      if (keys_a[c] > keys_b[c] + kSortTieTol) return 1;
    }
  }
  return 0;
}

}  // namespace

Seed derive_seed(Seed master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master.value),
                    static_cast<std::uint32_t>(master.value >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  Rng gen(seq);
  return Seed{gen()};
}

double unitarity_residual(const ComplexMatrix& m) {
  const ComplexMatrix r = m.adjoint() * m - ComplexMatrix::Identity(m.cols(), m.cols());
  return r.cwiseAbs().maxCoeff();
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

Basis::Basis(ComplexMatrix m, double tol) : matrix_(std::move(m)) {
  if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) {
    throw std::invalid_argument("Basis: matrix must be square and nonempty");
  }
  if (!all_finite(matrix_)) {
    throw std::invalid_argument("Basis: non-finite entry");
  }
  const double res = unitarity_residual(matrix_);
  if (!(res <= tol)) {
    throw std::invalid_argument("Basis: matrix is not unitary (residual " +
                                std::to_string(res) + ")");
  }
}

Basis Basis::canonical(int dim) {
  if (dim < 1) throw std::invalid_argument("Basis::canonical: dim < 1");
  return Basis(ComplexMatrix::Identity(dim, dim));
}

Basis Basis::orthonormalized(const ComplexMatrix& m) {
  Eigen::HouseholderQR<ComplexMatrix> qr(m);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Complex rjj = r(j, j);
    const double mag = std::abs(rjj);
    if (mag > 0.0) q.col(j) *= rjj / mag;
  }
  return Basis(std::move(q));
}

BasisSet::BasisSet(std::vector<Basis> bases) : bases_(std::move(bases)) {
  if (bases_.size() < 2) {
    throw std::invalid_argument("BasisSet: need at least two bases");
  }
  const int d = bases_.front().dim();
  for (const auto& b : bases_) {
    if (b.dim() != d) throw std::invalid_argument("BasisSet: dimension mismatch");
  }
}

Basis random_basis(int dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("random_basis: dim < 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return Basis::orthonormalized(g);
}

BasisSet random_basis_set(int dim, int k, Rng& rng) {
  std::vector<Basis> bases;
  bases.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) bases.push_back(random_basis(dim, rng));
  return BasisSet(std::move(bases));
}

bool is_hadamard(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw std::domain_error("is_hadamard: matrix is not square");
  const auto d = m.rows();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!(std::abs(std::abs(m.data()[i]) - 1.0) <= tol)) return false;
  }
  const ComplexMatrix gram = m * m.adjoint();
  const ComplexMatrix target = static_cast<double>(d) * ComplexMatrix::Identity(d, d);
  return max_abs_diff(gram, target) <= tol;
}

ComplexMatrix transition_matrix(const Basis& a, const Basis& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("transition_matrix: dimension mismatch");
  return a.matrix().adjoint() * b.matrix();
}

BasisSet polish(const BasisSet& set) {
  const int d = set.dim();
  const ComplexMatrix rot = set[0].matrix().adjoint();

  std::vector<Basis> out;
  out.reserve(static_cast<std::size_t>(set.size()));
  out.push_back(Basis::canonical(d));
  for (int b = 1; b < set.size(); ++b) {
    ComplexMatrix m = rot * set[b].matrix();
    for (int j = 0; j < d; ++j) {
      const double mag = std::abs(m(0, j));
      if (mag > 0.0) {
        const Complex phase = m(0, j) / mag;
        m.col(j) *= std::conj(phase);
        m(0, j) = Complex(mag, 0.0);
      }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
      return compare_columns(m, x, y) < 0;
    });
    ComplexMatrix sorted(d, d);
    for (int j = 0; j < d; ++j) sorted.col(j) = m.col(order[static_cast<std::size_t>(j)]);
    // Products with rot may leave ~1e-16 drift; re-project only if needed.
    if (unitarity_residual(sorted) <= kUnitarityTol) {
      out.emplace_back(std::move(sorted));
    } else {
      out.push_back(Basis::orthonormalized(sorted));
    }
  }
  return BasisSet(std::move(out));
}

ComplexMatrix fourier_matrix(int dim) {
  ComplexMatrix f(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) {
      const double angle = 2.0 * kPi * static_cast<double>((j * k) % dim) / dim;
      f(j, k) = std::polar(1.0, angle);
    }
  }
  return f;
}

}  // namespace mub
