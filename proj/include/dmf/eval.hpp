#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dmf/json_util.hpp"

namespace dmf {

/// C x C counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes, std::optional<int> ignore_label = std::nullopt);

  int num_classes() const { return num_classes_; }
  std::optional<int> ignore_label() const { return ignore_label_; }

  /// Adds one count per scored point. Ground-truth entries equal to the
  /// ignore label are skipped. Throws InputError on a length mismatch or a
  /// label outside [0, C); nothing is counted when it throws.
  void accumulate(std::span<const int> gt, std::span<const int> pred);

  /// Element-wise sum; both matrices must share C and the ignore label.
  void merge(const ConfusionMatrix& other);

  std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }
  std::uint64_t total() const;
  std::uint64_t ignored() const { return ignored_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index(int gt, int pred) const {
    return static_cast<std::size_t>(gt) * static_cast<std::size_t>(num_classes_) + static_cast<std::size_t>(pred);
  }

  int num_classes_;
  std::optional<int> ignore_label_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t ignored_ = 0;
};

/// Per-class values with nullopt for classes excluded from the mean.
struct ClassMetric {
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;           // exact rational mean, rounded once
  std::size_t counted = 0;     // classes that entered the mean
};

/// IoU_c = TP / (TP + FP + FN). Classes absent from both ground truth and
/// prediction are excluded; mean is 0 with counted = 0 when none remain.
ClassMetric miou(const ConfusionMatrix& cm);

/// acc_c = TP / row_sum_c; classes with no ground-truth points are excluded.
ClassMetric mean_class_accuracy(const ConfusionMatrix& cm);

/// {"num_classes", "total_points", "ignored_points", "per_class_iou",
///  "per_class_accuracy", "miou", "mean_accuracy"}; excluded classes are null.
Json metrics_report(const ConfusionMatrix& cm);

}  // namespace dmf
