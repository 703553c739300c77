#pragma once

#include "meshinspect/hough_prior.hpp"
#include "meshinspect/image.hpp"
#include "meshinspect/weights.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace meshinspect {

enum class LowRankMode { kNuclear, kSchattenPTruncated };

struct SolverConfig {
  double lambda = 0.11;
  double beta = 0.003;
  double rho = 0.8;
  LowRankMode lowrank_mode = LowRankMode::kNuclear;
  double p = 0.75;
  int tau = 30;
  int maxstep = 10;
  double epsilon = 1e-4;

  /// Mesh-specific lambda/beta on top of the shared defaults.
  static SolverConfig for_mesh(MeshType type);
  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  double residual = 0.0;   ///< max |D - L - E - N| after the dual update
  double objective = 0.0;
};

enum class Termination { kConverged, kMaxStep };

struct Decomposition {
  GrayImage L;
  GrayImage E;  ///< signed: broken lines negative, blocks positive
  GrayImage N;
  GrayImage u;  ///< scaled dual
  std::vector<TraceEntry> trace;
  Termination termination = Termination::kMaxStep;
  int iterations = 0;
  int svd_threads = 1;

  double final_residual() const { return trace.empty() ? 0.0 : trace.back().residual; }
};

/// Raised when an iterate stops being finite; carries the iteration index.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

std::string to_string(LowRankMode mode);
LowRankMode parse_lowrank_mode(const std::string& text);
std::string to_string(Termination t);

namespace rpca {

/// argmin_x>=0 0.5*(x - sigma)^2 + t*x^p for 0 < p <= 1.
double generalized_shrink(double sigma, double t, double p);

struct LowRankResult {
  RowMatrix matrix;
  Eigen::VectorXd singular_in;   ///< descending
  Eigen::VectorXd singular_out;  ///< after shrinkage, same order
};

LowRankResult lowrank_prox_full(const RowMatrix& m, double threshold, LowRankMode mode, double p,
                                int tau);
RowMatrix lowrank_prox(const RowMatrix& m, double threshold, LowRankMode mode = LowRankMode::kNuclear,
                       double p = 0.75, int tau = 30);

double soft(double x, double eps);

/// Elementwise soft threshold with level lambda*W/mu.
RowMatrix sparse_prox(const RowMatrix& x, const WeightMatrix& w, double lambda, double mu);

RowMatrix noise_update(const RowMatrix& r, double beta, double rho);

/// Low-rank penalty of the configured mode given L's singular values.
double lowrank_penalty(const Eigen::VectorXd& singular, const SolverConfig& cfg);

double objective(const Decomposition& d, const WeightMatrix& w, const SolverConfig& cfg);

Decomposition solve(const GrayImage& d, const WeightMatrix& w, const SolverConfig& cfg);

/// "iteration\tresidual\tobjective" rows with a header line.
std::string format_trace(const Decomposition& d);

}  // namespace rpca
}  // namespace meshinspect
