#include "sphnn/metrics.hpp"

#include <cmath>
#include <string>

#include "sphnn/error.hpp"

namespace sphnn {

ConfusionMatrix::ConfusionMatrix(std::span<const int> y_true, std::span<const int> y_pred, int q)
    : q_(q), counts_(static_cast<std::size_t>(q) * static_cast<std::size_t>(q), 0) {
  if (q < 1) throw DataError(DataErrorKind::InvalidArgument, "metrics: q must be positive");
  if (y_true.size() != y_pred.size())
    throw DataError(DataErrorKind::InvalidArgument, "metrics: label vectors differ in length");
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= q || p < 0 || p >= q)
      throw DataError(DataErrorKind::LabelOutOfRange,
                      "metrics: label outside [0," + std::to_string(q) + ")");
    ++counts_[static_cast<std::size_t>(t * q + p)];
  }
  total_ = static_cast<std::int64_t>(y_true.size());
}

std::int64_t ConfusionMatrix::correct() const {
  std::int64_t c = 0;
  for (int k = 0; k < q_; ++k) c += (*this)(k, k);
  return c;
}

Metrics evaluate(std::span<const int> y_true, std::span<const int> y_pred, int q) {
  if (y_true.empty()) throw DataError(DataErrorKind::InvalidArgument, "metrics: empty input");
  const ConfusionMatrix cm(y_true, y_pred, q);
  Metrics m;
  m.n_eval = y_true.size();
  m.accuracy = static_cast<double>(cm.correct()) / static_cast<double>(cm.total());

  double f1_sum = 0.0;
  std::int64_t tp_all = 0, fp_all = 0, fn_all = 0;
  for (int k = 0; k < q; ++k) {
    const std::int64_t tp = cm(k, k);
    std::int64_t fp = 0, fn = 0;
    for (int j = 0; j < q; ++j) {
      if (j == k) continue;
      fp += cm(j, k);
      fn += cm(k, j);
    }
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    f1_sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  m.macro_f1 = f1_sum / static_cast<double>(q);
  m.micro_f1 = static_cast<double>(2 * tp_all) / static_cast<double>(2 * tp_all + fp_all + fn_all);
  return m;
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

nlohmann::json report_json(const Metrics& m, const nlohmann::json& config) {
  return {{"macro_f1", round4(m.macro_f1)},
          {"micro_f1", round4(m.micro_f1)},
          {"accuracy", round4(m.accuracy)},
          {"n_eval", m.n_eval},
          {"config", config}};
}

}  // namespace sphnn
