#include "meshinspect/rpca.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace meshinspect {

SolverConfig SolverConfig::for_mesh(MeshType type) {
  SolverConfig cfg;
  if (type == MeshType::kCircular) {
    cfg.lambda = 0.06;
    cfg.beta = 0.004;
  }
  return cfg;
}

void SolverConfig::validate() const {
  if (!(lambda > 0.0)) throw InvalidInput("solver: lambda must be > 0");
  if (!(beta > 0.0)) throw InvalidInput("solver: beta must be > 0");
  if (!(rho > 0.0)) throw InvalidInput("solver: rho must be > 0");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("solver: p must lie in (0, 1]");
  if (tau < 0) throw InvalidInput("solver: tau must be >= 0");
  if (maxstep < 1) throw InvalidInput("solver: maxstep must be >= 1");
  if (!(epsilon > 0.0)) throw InvalidInput("solver: epsilon must be > 0");
}

std::string to_string(LowRankMode mode) {
  return mode == LowRankMode::kNuclear ? "nuclear" : "schatten_p_truncated";
}

LowRankMode parse_lowrank_mode(const std::string& text) {
  if (text == "nuclear") return LowRankMode::kNuclear;
  if (text == "schatten_p_truncated" || text == "schatten") return LowRankMode::kSchattenPTruncated;
  throw InvalidInput("unknown lowrank_mode: " + text);
}

std::string to_string(Termination t) { return t == Termination::kConverged ? "converged" : "maxstep"; }

namespace rpca {

double generalized_shrink(double sigma, double t, double p) {
  if (sigma <= 0.0 || t <= 0.0) return std::max(sigma, 0.0);
  if (p >= 1.0) return std::max(sigma - t, 0.0);
  // Below this level the minimizer is 0; above it the stationary point
  // x = sigma - t*p*x^(p-1) is found by fixed-point iteration from sigma.
  const double a = 2.0 * t * (1.0 - p);
  const double cutoff = std::pow(a, 1.0 / (2.0 - p)) + t * p * std::pow(a, (p - 1.0) / (2.0 - p));
  if (sigma <= cutoff) return 0.0;
  double x = sigma;
  for (int i = 0; i < 500; ++i) {
    const double next = sigma - t * p * std::pow(x, p - 1.0);
    if (!(next > 0.0)) return 0.0;
    const bool done = std::abs(next - x) <= 1e-15 * std::max(1.0, sigma);
    x = next;
    if (done) break;
  }
  const double f_x = 0.5 * (x - sigma) * (x - sigma) + t * std::pow(x, p);
  const double f_0 = 0.5 * sigma * sigma;
  return f_x < f_0 ? x : 0.0;
}

LowRankResult lowrank_prox_full(const RowMatrix& m, double threshold, LowRankMode mode, double p,
                                int tau) {
  if (!(threshold > 0.0)) throw InvalidInput("lowrank_prox: threshold must be > 0");
  if (!m.allFinite()) throw NumericalError("lowrank_prox: SVD failure on non-finite input", 0);
  LowRankResult out;
  if (m.size() == 0) {
    out.matrix = m;
    return out;
  }
  const Eigen::MatrixXd dense = m;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("lowrank_prox: SVD failure", 0);
  out.singular_in = svd.singularValues();
  out.singular_out = out.singular_in;
  for (Eigen::Index i = 0; i < out.singular_out.size(); ++i) {
    const double s = out.singular_in[i];
    if (mode == LowRankMode::kNuclear) {
      out.singular_out[i] = std::max(s - threshold, 0.0);
    } else if (i >= tau) {
      out.singular_out[i] = generalized_shrink(s, threshold, p);
    }
  }
  const Eigen::Index k = (out.singular_out.array() > 0.0).count();
  // Singular values are sorted, so the nonzero ones form a prefix.
  out.matrix = svd.matrixU().leftCols(k) * out.singular_out.head(k).asDiagonal() *
               svd.matrixV().leftCols(k).transpose();
  return out;
}

RowMatrix lowrank_prox(const RowMatrix& m, double threshold, LowRankMode mode, double p, int tau) {
  return lowrank_prox_full(m, threshold, mode, p, tau).matrix;
}

double soft(double x, double eps) {
  const double mag = std::abs(x) - eps;
  return mag > 0.0 ? std::copysign(mag, x) : 0.0;
}

RowMatrix sparse_prox(const RowMatrix& x, const WeightMatrix& w, double lambda, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("sparse_prox: mu must be > 0");
  if (x.rows() != w.data.rows() || x.cols() != w.data.cols()) {
    throw InvalidInput("sparse_prox: dimension mismatch");
  }
  RowMatrix out(x.rows(), x.cols());
  const double scale = lambda / mu;
  for (Eigen::Index i = 0; i < x.size(); ++i) out.data()[i] = soft(x.data()[i], scale * w.data.data()[i]);
  return out;
}

RowMatrix noise_update(const RowMatrix& r, double beta, double rho) {
  if (!(rho > 0.0) || beta < 0.0) throw InvalidInput("noise_update: need rho > 0 and beta >= 0");
  if (beta == 0.0) return r;
  return (rho / (2.0 * beta + rho)) * r;
}

double lowrank_penalty(const Eigen::VectorXd& singular, const SolverConfig& cfg) {
  if (cfg.lowrank_mode == LowRankMode::kNuclear) return singular.sum();
  double total = 0.0;
  for (Eigen::Index i = cfg.tau; i < singular.size(); ++i) total += std::pow(singular[i], cfg.p);
  return total;
}

namespace {

double data_terms(const RowMatrix& e, const RowMatrix& n, const WeightMatrix& w,
                  const SolverConfig& cfg) {
  return cfg.lambda * (w.data.array() * e.array()).abs().sum() + 0.5 * cfg.beta * n.squaredNorm();
}

}  // namespace

double objective(const Decomposition& d, const WeightMatrix& w, const SolverConfig& cfg) {
  const RowMatrix& l = d.L.matrix();
  if (l.rows() != w.data.rows() || l.cols() != w.data.cols() || !d.E.same_shape(d.L) ||
      !d.N.same_shape(d.L)) {
    throw InvalidInput("objective: dimension mismatch");
  }
  double low = 0.0;
  if (l.size() > 0) {
    const Eigen::MatrixXd dense = l;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
    low = lowrank_penalty(svd.singularValues(), cfg);
  }
  return low + data_terms(d.E.matrix(), d.N.matrix(), w, cfg);
}

Decomposition solve(const GrayImage& d_img, const WeightMatrix& w, const SolverConfig& cfg) {
  cfg.validate();
  if (d_img.empty()) throw InvalidInput("solve: empty image");
  if (d_img.height() != w.height() || d_img.width() != w.width()) {
    throw InvalidInput("solve: image/weight dimension mismatch");
  }
  if (!d_img.all_finite()) throw InvalidInput("solve: non-finite input");
  const RowMatrix& D = d_img.matrix();
  const Eigen::Index h = D.rows();
  const Eigen::Index wd = D.cols();
  RowMatrix L = RowMatrix::Zero(h, wd);
  RowMatrix E = RowMatrix::Zero(h, wd);
  RowMatrix N = RowMatrix::Zero(h, wd);
  RowMatrix u = RowMatrix::Zero(h, wd);

  Decomposition out;
  out.svd_threads = Eigen::nbThreads();
  const double lowrank_threshold = 1.0 / cfg.rho;
  for (int k = 1; k <= cfg.maxstep; ++k) {
    LowRankResult low;
    try {
      low = lowrank_prox_full(D - E - N + u, lowrank_threshold, cfg.lowrank_mode, cfg.p, cfg.tau);
    } catch (const NumericalError& err) {
      throw NumericalError(std::string(err.what()) + " at iteration " + std::to_string(k), k);
    }
    L = std::move(low.matrix);
    E = sparse_prox(D - L - N + u, w, cfg.lambda, cfg.rho);
    N = noise_update(D - L - E + u, cfg.beta, cfg.rho);
    const RowMatrix r = D - L - E - N;
    u += r;
    const double residual = r.cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || !u.allFinite()) {
      throw NumericalError("solve: non-finite iterate at iteration " + std::to_string(k), k);
    }
    const double obj = lowrank_penalty(low.singular_out, cfg) + data_terms(E, N, w, cfg);
    out.trace.push_back({k, residual, obj});
    out.iterations = k;
    if (residual < cfg.epsilon) {
      out.termination = Termination::kConverged;
      break;
    }
  }
  out.L = GrayImage(std::move(L));
  out.E = GrayImage(std::move(E));
  out.N = GrayImage(std::move(N));
  out.u = GrayImage(std::move(u));
  return out;
}

std::string format_trace(const Decomposition& d) {
  std::ostringstream os;
  os << std::setprecision(12) << "iteration\tresidual\tobjective\n";
  for (const auto& t : d.trace) os << t.iteration << '\t' << t.residual << '\t' << t.objective << '\n';
  return os.str();
}

}  // namespace rpca
}  // namespace meshinspect
