#include "mubsearch/optimizer.hpp"

#include "mubsearch/distance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace mub {

namespace {

using Mats = std::vector<ComplexMatrix>;

constexpr Complex kI{0.0, 1.0};

// Golden-section stops once the bracket is this narrow relative to kappa.
constexpr double kGoldenRelTol = 1e-3;
constexpr double kGrow = 2.618033988749895;
constexpr double kGoldenFrac = 0.3819660112501051;
// Below this predicted gain kappa * slope, ASD differences are swamped by
// rounding and the step is chosen from the directional derivative instead.
constexpr double kResolvableGain = 1e-11;
// Rounding allowance on the ASD for derivative-chosen steps.
constexpr double kNoiseFloor = 1e-14;
// Re-orthonormalize bases whose unitarity drift exceeds this.
constexpr double kDriftTol = 1e-11;
constexpr double kMaxDriftCorrection = 1e-9;
constexpr int kMaxSeriesFactors = 40;

double asd_of(const Mats& m) {
  const int k = static_cast<int>(m.size());
  double sum = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) sum += pair_distance_sq(ComplexMatrix(m[a].adjoint() * m[b]));
  }
  return 2.0 * sum / (static_cast<double>(k) * (k - 1));
}

// Fills g with the gradient components and returns their joint norm.
double gradient_of(const Mats& m, Mats& g) {
  const int k = static_cast<int>(m.size());
  const int d = static_cast<int>(m.front().rows());
  g.assign(static_cast<std::size_t>(k), ComplexMatrix::Zero(d, d));
  if (d < 2) return 0.0;
  // The b = a term of the sum is the identity and has no imaginary part.
  Mats s(static_cast<std::size_t>(k), ComplexMatrix::Zero(d, d));
  ComplexMatrix u(d, d);
  ComplexMatrix w(d, d);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      u.noalias() = m[a].adjoint() * m[b];
      w = (u.array() * u.array().abs2().cast<Complex>()).matrix();
      const ComplexMatrix t = m[a] * w * m[b].adjoint();
      s[a] += t;
      s[b] += t.adjoint();
    }
  }
  const double scale = 8.0 / (static_cast<double>(k) * (k - 1) * (d - 1));
  double norm_sq = 0.0;
  for (int a = 0; a < k; ++a) {
    g[a] = (s[a] - s[a].adjoint()) * Complex(0.0, -0.5 * scale);
    norm_sq += g[a].squaredNorm();
  }
  return std::sqrt(norm_sq);
}

double inner(const Mats& x, const Mats& y) {
  double acc = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    acc += (x[a].adjoint() * y[a]).trace().real();
  }
  return acc;
}

// Points V_a(kappa dir_a) base_a along one search ray.
class Ray {
 public:
  Ray(const Mats& base, const Mats& dir, Retraction variant)
      : base_(base), dir_(dir), variant_(variant) {
    if (variant_ == Retraction::exponential) {
      for (std::size_t a = 0; a < dir.size(); ++a) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(dir[a]);
        evals_.push_back(es.eigenvalues());
        evecs_.push_back(es.eigenvectors());
        projected_.push_back(es.eigenvectors().adjoint() * base[a]);
      }
    }
  }

  // False if the retraction cannot be evaluated at this step.
  bool point(double kappa, Mats& out) const {
    out.resize(base_.size());
    if (variant_ == Retraction::exponential) {
      for (std::size_t a = 0; a < base_.size(); ++a) {
        ComplexMatrix scaled = projected_[a];
        for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
          scaled.row(i) *= std::polar(1.0, kappa * evals_[a](i));
        }
        out[a].noalias() = evecs_[a] * scaled;
      }
      return true;
    }
    try {
      for (std::size_t a = 0; a < base_.size(); ++a) {
        out[a] = retraction_unitary(kappa * dir_[a], variant_) * base_[a];
      }
    } catch (const StepTooLarge&) {
      return false;
    }
    return true;
  }

  double value(double kappa) const {
    Mats pts;
    if (!point(kappa, pts)) return -std::numeric_limits<double>::infinity();
    return asd_of(pts);
  }

  const Mats& direction() const { return dir_; }

 private:
  const Mats& base_;
  const Mats& dir_;
  Retraction variant_;
  std::vector<Eigen::VectorXd> evals_;
  Mats evecs_;
  Mats projected_;
};

struct Step {
  bool accepted = false;
  double kappa = 0.0;
  double value = 0.0;
};

Step golden_step(const Ray& ray, double f0, double slope, double kappa) {
  Step none;
  if (kappa * slope < kResolvableGain) return none;
  double a = 0.0;
  double b = kappa;
  double fb = ray.value(b);
  double c = 0.0;
  double fc = 0.0;
  if (fb > f0) {
    c = b * kGrow;
    fc = ray.value(c);
    for (int n = 0; fc > fb && n < 60; ++n) {
      a = b;
      b = c;
      fb = fc;
      c = b * kGrow;
      fc = ray.value(c);
    }
    if (fc > fb) return Step{true, c, fc};
  } else {
    c = b;
    fc = fb;
    b = 0.5 * c;
    fb = ray.value(b);
    for (int n = 0; !(fb > f0) && n < 50; ++n) {
      c = b;
      fc = fb;
      b *= 0.5;
      fb = ray.value(b);
    }
    if (!(fb > f0)) return none;
  }
  while (c - a > kGoldenRelTol * b) {
    const double x = (b - a > c - b) ? b - kGoldenFrac * (b - a) : b + kGoldenFrac * (c - b);
    const double fx = ray.value(x);
    if (fx > fb) {
      if (x < b) {
        c = b;
      } else {
        a = b;
      }
      b = x;
      fb = fx;
    } else if (x < b) {
      a = x;
    } else {
      c = x;
    }
  }
  return Step{true, b, fb};
}

Step backtracking_step(const Ray& ray, double f0, double kappa_init) {
  double kappa = kappa_init;
  for (int n = 0; n < 60; ++n) {
    const double f = ray.value(kappa);
    if (f >= f0 && f > -std::numeric_limits<double>::infinity()) return Step{true, kappa, f};
    kappa *= 0.5;
  }
  return Step{};
}

// Step chosen by a secant on the directional derivative
// s(kappa) = sum_a tr(dir_a G_a(kappa)), for gains below rounding level.
Step slope_step(const Ray& ray, double f0, double slope, double kappa) {
  Mats pts;
  Mats g;
  double k1 = kappa;
  while (!ray.point(k1, pts)) {
    k1 *= 0.5;
    if (k1 < 1e-300) return Step{};
  }
  gradient_of(pts, g);
  const double s1 = inner(ray.direction(), g);
  double ks = 2.0 * k1;
  if (s1 < slope) ks = std::min(k1 * slope / (slope - s1), 4.0 * k1);
  for (int n = 0; n < 20; ++n) {
    const double f = ray.value(ks);
    if (f >= f0 - kNoiseFloor) return Step{true, ks, f};
    ks *= 0.5;
  }
  return Step{};
}

Mats matrices_of(const BasisSet& set) {
  Mats m;
  m.reserve(static_cast<std::size_t>(set.size()));
  for (const auto& b : set) m.push_back(b.matrix());
  return m;
}

void correct_drift(Mats& m) {
  for (auto& x : m) {
    if (unitarity_residual(x) > kDriftTol) {
      const Basis fixed = Basis::orthonormalized(x);
      const double moved = max_abs_diff(fixed.matrix(), x);
      if (moved >= kMaxDriftCorrection) {
        throw std::logic_error("ascend: unitarity drift correction too large");
      }
      x = fixed.matrix();
    }
  }
}

BasisSet set_of(const Mats& m) {
  std::vector<Basis> bases;
  bases.reserve(m.size());
  for (const auto& x : m) {
    if (unitarity_residual(x) <= kUnitarityTol) {
      bases.emplace_back(x);
    } else {
      bases.push_back(Basis::orthonormalized(x));
    }
  }
  return BasisSet(std::move(bases));
}

}  // namespace

std::string_view to_string(Retraction r) {
  switch (r) {
    case Retraction::exponential:
      return "exp";
    case Retraction::cayley:
      return "cayley";
    case Retraction::product_series:
      return "series";
  }
  return "?";
}

std::optional<Retraction> parse_retraction(std::string_view name) {
  if (name == "exp" || name == "exponential") return Retraction::exponential;
  if (name == "cayley") return Retraction::cayley;
  if (name == "series" || name == "product-series") return Retraction::product_series;
  return std::nullopt;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::converged:
      return "converged";
    case Termination::max_iterations:
      return "max_iterations";
    case Termination::stalled:
      return "stalled";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(kappa_init > 0.0)) throw std::invalid_argument("OptimizerConfig: kappa_init must be > 0");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("OptimizerConfig: grad_tol must be > 0");
  if (max_iters < 1) throw std::invalid_argument("OptimizerConfig: max_iters must be >= 1");
}

GradientSet gradient(const BasisSet& set) {
  GradientSet out;
  out.norm = gradient_of(matrices_of(set), out.components);
  return out;
}

ComplexMatrix retraction_unitary(const HermitianGenerator& eps, Retraction variant) {
  if (eps.rows() != eps.cols()) throw std::invalid_argument("retraction: generator not square");
  const auto d = eps.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  switch (variant) {
    case Retraction::exponential: {
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(eps);
      const Eigen::VectorXd& lam = es.eigenvalues();
      Eigen::VectorXcd phases(d);
      for (Eigen::Index i = 0; i < d; ++i) phases(i) = std::polar(1.0, lam(i));
      return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    }
    case Retraction::cayley: {
      const ComplexMatrix num = id + 0.5 * kI * eps;
      const ComplexMatrix den = id - 0.5 * kI * eps;
      Eigen::FullPivLU<ComplexMatrix> lu(den);
      if (!lu.isInvertible()) throw StepTooLarge("cayley: 1 - i eps/2 is singular");
      return lu.solve(num);
    }
    case Retraction::product_series: {
      const Complex omega = std::polar(1.0, 2.0 * kPi / 3.0);
      ComplexMatrix v = id + kI * eps;
      ComplexMatrix power = eps * eps;
      for (int n = 0; n < kMaxSeriesFactors; ++n) {
        const double mag = power.cwiseAbs().maxCoeff();
        if (mag < 1e-16) return v;
        if (!std::isfinite(mag) || mag > 1e100) break;
        v = v * (id + omega * power);
        power = power * power * power;
      }
      throw StepTooLarge("product series does not converge; spectral radius of eps >= 1");
    }
  }
  throw std::invalid_argument("retraction: unknown variant");
}

Basis retract(const Basis& b, const HermitianGenerator& eps, Retraction variant) {
  if (eps.rows() != b.dim() || eps.cols() != b.dim()) {
    throw std::invalid_argument("retract: generator dimension mismatch");
  }
  if (max_abs_diff(eps, eps.adjoint()) > 1e-10 * (1.0 + eps.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("retract: generator is not Hermitian");
  }
  return Basis(retraction_unitary(eps, variant) * b.matrix());
}

RunRecord ascend(const BasisSet& set, const OptimizerConfig& cfg) {
  cfg.validate();
  const int k = set.size();
  const int d = set.dim();
  const int reset_period = std::max(1, k * d * d);

  Mats cur = matrices_of(set);
  Mats g;
  Mats g_prev;
  double gnorm = gradient_of(cur, g);
  Mats dir = g;
  double f = asd_of(cur);
  double kappa = cfg.kappa_init;
  int iters = 0;
  int since_reset = 0;
  Termination status = Termination::max_iterations;
  std::vector<double> history;
  if (cfg.record_history) history.push_back(f);

  for (;;) {
    if (gnorm < cfg.grad_tol) {
      status = Termination::converged;
      break;
    }
    if (iters >= cfg.max_iters) {
      status = Termination::max_iterations;
      break;
    }
    double slope = inner(g, dir);
    if (!(slope > 0.0)) {
      dir = g;
      slope = gnorm * gnorm;
      since_reset = 0;
    }
    const Ray ray(cur, dir, cfg.retraction);
    Step step = cfg.line_search ? golden_step(ray, f, slope, kappa)
                                : backtracking_step(ray, f, cfg.kappa_init);
    if (!step.accepted) step = slope_step(ray, f, slope, kappa);
    if (!step.accepted) {
      status = Termination::stalled;
      break;
    }
    Mats next;
    ray.point(step.kappa, next);
    cur = std::move(next);
    correct_drift(cur);
    f = step.value;
    kappa = step.kappa;
    ++iters;
    if (cfg.record_history) history.push_back(f);

    g_prev.swap(g);
    gnorm = gradient_of(cur, g);
    if (cfg.use_conjugate_gradient) {
      const double denom = inner(g_prev, g_prev);
      const double beta = denom > 0.0 ? (gnorm * gnorm - inner(g, g_prev)) / denom : 0.0;
      if (beta <= 0.0 || ++since_reset >= reset_period) {
        dir = g;
        since_reset = 0;
      } else {
        for (int a = 0; a < k; ++a) dir[a] = g[a] + beta * dir[a];
      }
    } else {
      dir = g;
    }
  }

  return RunRecord{asd_of(cur), iters, gnorm, cfg.seed, set_of(cur), status, std::move(history)};
}

long long bin_index(double value, double bin_width) {
  return std::llround(value / bin_width);
}

MultiStartSummary classify_maxima(std::vector<RunRecord> records, double bin_width) {
  if (records.empty()) throw std::invalid_argument("classify_maxima: no records");
  if (!(bin_width > 0.0)) throw std::invalid_argument("classify_maxima: bin_width must be > 0");
  MultiStartSummary out;
  out.runs = static_cast<int>(records.size());
  std::map<long long, int, std::greater<>> bins;
  std::size_t best = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    ++bins[bin_index(records[i].final_asd, bin_width)];
    if (records[i].final_asd > records[best].final_asd) best = i;
  }
  for (const auto& [idx, freq] : bins) {
    out.maxima_histogram.push_back(HistogramBin{static_cast<double>(idx) * bin_width, freq});
  }
  const long long best_bin = bin_index(records[best].final_asd, kSuccessBinWidth);
  const auto hits = std::count_if(records.begin(), records.end(), [&](const RunRecord& r) {
    return bin_index(r.final_asd, kSuccessBinWidth) == best_bin;
  });
  out.success_rate = static_cast<double>(hits) / static_cast<double>(records.size());
  out.best_index = best;
  out.records = std::move(records);
  return out;
}

MultiStartSummary multistart(int dim, int k, int runs, const OptimizerConfig& cfg,
                             const MultiStartOptions& opts) {
  if (runs < 1) throw std::invalid_argument("multistart: runs must be >= 1");
  if (dim < 1 || k < 2) throw std::invalid_argument("multistart: need dim >= 1 and k >= 2");
  cfg.validate();

  std::vector<std::optional<RunRecord>> slots(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (int i = next++; i < runs; i = next++) {
      try {
        const Seed seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
        Rng rng = make_rng(seed);
        OptimizerConfig run_cfg = cfg;
        run_cfg.seed = seed;
        slots[static_cast<std::size_t>(i)] = ascend(random_basis_set(dim, k, rng), run_cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  int jobs = opts.jobs > 0 ? opts.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, runs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunRecord> records;
  records.reserve(slots.size());
  for (auto& s : slots) records.push_back(std::move(*s));
  return classify_maxima(std::move(records), opts.bin_width);
}

}  // namespace mub
