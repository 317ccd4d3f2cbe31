#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace sphnn {

/// q × q counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  ConfusionMatrix(std::span<const int> y_true, std::span<const int> y_pred, int q);

  int num_classes() const noexcept { return q_; }
  std::int64_t operator()(int truth, int pred) const { return counts_[truth * q_ + pred]; }
  std::int64_t total() const noexcept { return total_; }
  std::int64_t correct() const;

 private:
  int q_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

struct Metrics {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t n_eval = 0;
};

/// Single-label multiclass metrics. Macro-F1 averages over all q classes, with
/// 0/0 precision or recall counted as 0.
Metrics evaluate(std::span<const int> y_true, std::span<const int> y_pred, int q);

/// Rounds to 4 decimal places for reports.
double round4(double x);

/// `{ macro_f1, micro_f1, accuracy, n_eval, config }`.
nlohmann::json report_json(const Metrics& m, const nlohmann::json& config);

}  // namespace sphnn
