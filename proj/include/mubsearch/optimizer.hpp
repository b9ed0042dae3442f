#pragma once

#include "mubsearch/matcore.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mub {

/// Maps a Hermitian generator eps to a unitary V = 1 + i eps + O(eps^2).
enum class Retraction {
  exponential,     ///< exp(i eps)
  cayley,          ///< (1 + i eps/2) / (1 - i eps/2)
  product_series,  ///< (1 + i eps) prod_n [1 + w (eps^2)^(3^n)], w = exp(2 pi i/3)
};

std::string_view to_string(Retraction r);
std::optional<Retraction> parse_retraction(std::string_view name);

/// Raised when a retraction cannot be evaluated for the requested step:
/// singular Cayley denominator, or a product series that does not converge
/// (spectral radius of eps >= 1).
class StepTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  Retraction retraction = Retraction::exponential;
  double kappa_init = 1.0;
  /// Golden-section search along the ascent ray; otherwise backtracking
  /// halving from kappa_init.
  bool line_search = true;
  /// Polak-Ribiere directions, reset every k d^2 iterations or on beta < 0.
  bool use_conjugate_gradient = false;
  double grad_tol = 1e-10;
  int max_iters = 20000;
  Seed seed{};
  /// Keep the ASD after every accepted step in RunRecord::asd_history.
  bool record_history = false;

  /// Throws std::invalid_argument on kappa_init <= 0, grad_tol <= 0 or
  /// max_iters < 1.
  void validate() const;
};

struct GradientSet {
  std::vector<HermitianGenerator> components;
  /// Root-sum-square of all entries of all components.
  double norm = 0.0;
};

/// G_a = 8/(k(k-1)(d-1)) Im{ sum_b sum_jk (|a_j><a_j|b_k><b_k|)^2 },
/// Im{A} = (A - A^†)/(2i), so that d(ASD) = sum_a tr(eps_a G_a) under
/// |a_j> -> (1 + i eps_a)|a_j>.
GradientSet gradient(const BasisSet& set);

/// The unitary V for a generator; see Retraction.
ComplexMatrix retraction_unitary(const HermitianGenerator& eps, Retraction variant);

/// V b, column by column.
Basis retract(const Basis& b, const HermitianGenerator& eps, Retraction variant);

enum class Termination {
  converged,       ///< gradient norm < grad_tol
  max_iterations,  ///< iteration budget exhausted
  stalled,         ///< no step that does not decrease the ASD could be found
};

std::string_view to_string(Termination t);

struct RunRecord {
  double final_asd = 0.0;
  int iterations = 0;
  double final_grad_norm = 0.0;
  Seed seed{};
  BasisSet final_set;
  Termination status = Termination::converged;
  /// ASD at the start and after each accepted step, when requested.
  std::vector<double> asd_history;
};

/// Steepest ascent (optionally conjugate gradient) on U(d)^k.
RunRecord ascend(const BasisSet& set, const OptimizerConfig& cfg);

struct HistogramBin {
  double center = 0.0;
  int frequency = 0;
};

struct MultiStartSummary {
  int runs = 0;
  /// Sorted by descending center.
  std::vector<HistogramBin> maxima_histogram;
  /// Fraction of runs sharing the best run's bin of width kSuccessBinWidth.
  double success_rate = 0.0;
  /// Every record, in run-index order.
  std::vector<RunRecord> records;
  std::size_t best_index = 0;

  const RunRecord& best() const { return records.at(best_index); }
};

inline constexpr double kSuccessBinWidth = 1e-4;
inline constexpr double kHistogramBinWidth = 5e-4;

/// Bins final ASD values at centers that are multiples of bin_width.
/// Throws std::invalid_argument for empty records or bin_width <= 0.
MultiStartSummary classify_maxima(std::vector<RunRecord> records, double bin_width);

struct MultiStartOptions {
  /// Worker threads; 0 means one per hardware thread.
  int jobs = 0;
  double bin_width = kHistogramBinWidth;
};

/// `runs` independent ascents from Haar-random starts. Run i draws its start
/// from derive_seed(cfg.seed, i), so results do not depend on `jobs`.
MultiStartSummary multistart(int dim, int k, int runs, const OptimizerConfig& cfg,
                             const MultiStartOptions& opts = {});

/// Bin index of a value for bins of the given width anchored at zero.
long long bin_index(double value, double bin_width);

}  // namespace mub
