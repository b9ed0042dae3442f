#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace mub {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Hermitian d x d matrix generating an infinitesimal basis rotation
/// |a_j> -> (1 + i eps)|a_j>.
using HermitianGenerator = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// Max-abs deviation a basis matrix may have from unitarity.
inline constexpr double kUnitarityTol = 1e-12;

/// Explicit PRNG seed. Streams are never shared between runs.
struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(Seed, Seed) = default;
};

using Rng = std::mt19937_64;

inline Rng make_rng(Seed seed) { return Rng(seed.value); }

/// Seed of the index-th independent stream derived from a master seed.
Seed derive_seed(Seed master, std::uint64_t index);

/// max_ij |(M^† M - 1)_ij|
double unitarity_residual(const ComplexMatrix& m);

/// max_ij |A_ij - B_ij|; matrices must have equal shape.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

/// An orthonormal basis of C^d. Column j holds the ket |b_j> in canonical
/// coordinates, so the matrix is unitary.
class Basis {
 public:
  /// Throws std::invalid_argument unless m is square, finite and unitary
  /// within tol.
  explicit Basis(ComplexMatrix m, double tol = kUnitarityTol);

  static Basis canonical(int dim);

  /// Projects a nearly unitary matrix onto the unitary group by phase
  /// corrected QR, so the result stays as close to m as QR allows.
  static Basis orthonormalized(const ComplexMatrix& m);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const ComplexMatrix& matrix() const { return matrix_; }
  auto ket(int j) const { return matrix_.col(j); }

 private:
  ComplexMatrix matrix_;
};

/// An ordered list of k >= 2 bases of a common dimension.
class BasisSet {
 public:
  explicit BasisSet(std::vector<Basis> bases);

  int dim() const { return bases_.front().dim(); }
  int size() const { return static_cast<int>(bases_.size()); }
  const Basis& operator[](int i) const { return bases_[static_cast<std::size_t>(i)]; }
  const std::vector<Basis>& bases() const { return bases_; }

  auto begin() const { return bases_.begin(); }
  auto end() const { return bases_.end(); }

 private:
  std::vector<Basis> bases_;
};

/// Haar-random unitary: QR of a standard complex Ginibre matrix with the
/// diagonal of R rotated to the positive reals.
Basis random_basis(int dim, Rng& rng);

/// k independent Haar-random bases.
BasisSet random_basis_set(int dim, int k, Rng& rng);

/// True iff every |m_ij| = 1 and m m^† = d 1, both within tol (max-abs).
/// Throws std::domain_error for a non-square matrix.
bool is_hadamard(const ComplexMatrix& m, double tol);

/// U_ab = a^† b, entry (j,k) = <a_j|b_k>.
ComplexMatrix transition_matrix(const Basis& a, const Basis& b);

/// Canonical representative of the set modulo a global unitary, column
/// phases and column order: the first basis becomes the canonical basis,
/// every other basis has a real nonnegative first row and its columns sorted
/// lexicographically by (re, im) of successive entries.
BasisSet polish(const BasisSet& set);

/// Unnormalized d x d Fourier matrix, entries exp(2 pi i jk/d).
ComplexMatrix fourier_matrix(int dim);

}  // namespace mub
