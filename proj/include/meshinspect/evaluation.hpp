#pragma once

#include "meshinspect/image.hpp"
#include "meshinspect/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace meshinspect {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

/// Metrics with a zero denominator are absent rather than 0.
struct MetricsReport {
  ConfusionCounts counts;
  double gamma = 1.0;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> ppv;
  std::optional<double> npv;
  std::optional<double> f;
};

namespace evaluation {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

MetricsReport metrics(const ConfusionCounts& c, double gamma = 1.0);

/// Absent f counts as 0 when averaging.
double f_or_zero(const MetricsReport& m);

struct LabeledImage {
  std::string id;
  GrayImage image;
  BinaryMask gt;          ///< union of all defect classes
  DetectorConfig config;  ///< mesh type and prior settings; solver lambda/beta are overridden per cell
};

struct GridCell {
  double lambda = 0.0;
  double beta = 0.0;
  std::optional<double> mean_f;  ///< absent when the cell failed
  std::vector<MetricsReport> per_image;
  std::string error;
};

struct GridSearchResult {
  std::vector<GridCell> cells;  ///< lambda-major in the order of the given grids
  std::optional<std::size_t> best;
  std::vector<std::string> warnings;

  const GridCell& best_cell() const { return cells.at(best.value()); }
};

/// Macro-averaged f per (lambda, beta) cell. Priors are computed once per
/// image. A cell in which any image fails is excluded with a warning. Ties
/// go to the smaller lambda, then the smaller beta.
GridSearchResult grid_search(const std::vector<LabeledImage>& dataset, const std::vector<double>& lambdas,
                             const std::vector<double>& betas, const SolverConfig& base, int workers = 1);

/// Tab-separated rows: id lambda beta TPR FPR PPV NPV f ("NA" for absent).
std::string format_score_table(const std::vector<LabeledImage>& dataset, const GridSearchResult& r);
std::string format_metric(const std::optional<double>& v);

/// lo, lo+step, ... up to hi inclusive.
std::vector<double> linspace_step(double lo, double hi, double step);

}  // namespace evaluation
}  // namespace meshinspect
