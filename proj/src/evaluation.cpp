#include "meshinspect/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace meshinspect::evaluation {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_shape(gt)) throw InvalidInput("confusion: dimension mismatch");
  ConfusionCounts c;
  const auto& p = pred.matrix();
  const auto& g = gt.matrix();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const bool pv = p.data()[i] != 0;
    const bool gv = g.data()[i] != 0;
    if (pv && gv) {
      ++c.tp;
    } else if (pv) {
      ++c.fp;
    } else if (gv) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics(const ConfusionCounts& c, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput("metrics: gamma must be > 0");
  MetricsReport m;
  m.counts = c;
  m.gamma = gamma;
  m.tpr = ratio(c.tp, c.fn + c.tp);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  m.ppv = ratio(c.tp, c.fp + c.tp);
  m.npv = ratio(c.tn, c.tn + c.fn);
  if (m.tpr && m.ppv) {
    const double g2 = gamma * gamma;
    const double den = *m.tpr + g2 * *m.ppv;
    if (den > 0.0) m.f = (g2 + 1.0) * *m.tpr * *m.ppv / den;
  }
  return m;
}

double f_or_zero(const MetricsReport& m) { return m.f.value_or(0.0); }

GridSearchResult grid_search(const std::vector<LabeledImage>& dataset, const std::vector<double>& lambdas,
                             const std::vector<double>& betas, const SolverConfig& base, int workers) {
  if (dataset.empty()) throw InvalidInput("grid_search: empty dataset");
  if (lambdas.empty() || betas.empty()) throw InvalidInput("grid_search: empty grid");

  GridSearchResult result;
  std::vector<std::optional<Priors>> priors(dataset.size());
  std::vector<std::string> prior_errors(dataset.size());
  pipeline::parallel_for(dataset.size(), workers, [&](std::size_t i) {
    try {
      priors[i] = pipeline::compute_priors(dataset[i].image, dataset[i].config);
    } catch (const std::exception& e) {
      prior_errors[i] = e.what();
    }
  });

  for (double lam : lambdas) {
    for (double beta : betas) {
      GridCell cell;
      cell.lambda = lam;
      cell.beta = beta;
      cell.per_image.resize(dataset.size());
      result.cells.push_back(std::move(cell));
    }
  }
  std::vector<std::string> errors(result.cells.size() * dataset.size());
  pipeline::parallel_for(errors.size(), workers, [&](std::size_t job) {
    const std::size_t c = job / dataset.size();
    const std::size_t i = job % dataset.size();
    if (!priors[i]) {
      errors[job] = dataset[i].id + ": " + prior_errors[i];
      return;
    }
    try {
      DetectorConfig cfg = dataset[i].config;
      cfg.solver = base;
      cfg.solver.lambda = result.cells[c].lambda;
      cfg.solver.beta = result.cells[c].beta;
      const Detection det = pipeline::detect_with_priors(dataset[i].image, *priors[i], cfg);
      result.cells[c].per_image[i] = metrics(confusion(det.segmentation.defect_mask, dataset[i].gt));
    } catch (const std::exception& e) {
      errors[job] = dataset[i].id + ": " + e.what();
    }
  });

  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    GridCell& cell = result.cells[c];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const std::string& err = errors[c * dataset.size() + i];
      if (!err.empty() && cell.error.empty()) cell.error = err;
    }
    if (!cell.error.empty()) {
      std::ostringstream os;
      os << "cell lambda=" << cell.lambda << " beta=" << cell.beta << " excluded: " << cell.error;
      result.warnings.push_back(os.str());
      continue;
    }
    double sum = 0.0;
    for (const auto& m : cell.per_image) sum += f_or_zero(m);
    cell.mean_f = sum / static_cast<double>(dataset.size());

    if (!result.best) {
      result.best = c;
      continue;
    }
    const GridCell& b = result.cells[*result.best];
    const bool better = *cell.mean_f > *b.mean_f ||
                        (*cell.mean_f == *b.mean_f &&
                         (cell.lambda < b.lambda || (cell.lambda == b.lambda && cell.beta < b.beta)));
    if (better) result.best = c;
  }
  return result;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream os;
  os << std::setprecision(10) << *v;
  return os.str();
}

std::string format_score_table(const std::vector<LabeledImage>& dataset, const GridSearchResult& r) {
  std::ostringstream os;
  os << "id\tlambda\tbeta\tTPR\tFPR\tPPV\tNPV\tf\n";
  for (const auto& cell : r.cells) {
    if (!cell.error.empty()) continue;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& m = cell.per_image[i];
      os << dataset[i].id << '\t' << cell.lambda << '\t' << cell.beta << '\t' << format_metric(m.tpr) << '\t'
         << format_metric(m.fpr) << '\t' << format_metric(m.ppv) << '\t' << format_metric(m.npv) << '\t'
         << format_metric(m.f) << '\n';
    }
  }
  return os.str();
}

std::vector<double> linspace_step(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw InvalidInput("grid: need step > 0 and hi >= lo");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = lo + i * step;
    if (v > hi + 1e-9 * step) break;
    // Round to 12 significant digits so 0.05 + 3*0.03 prints as 0.14.
    std::ostringstream os;
    os << std::setprecision(12) << v;
    out.push_back(std::stod(os.str()));
  }
  return out;
}

}  // namespace meshinspect::evaluation
