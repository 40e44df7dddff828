#include "dmf/eval.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include "dmf/errors.hpp"

namespace dmf {
namespace {

using Rational = boost::multiprecision::cpp_rational;

/// Mean of num_c / den_c over classes with den_c > 0, summed exactly so the
/// result does not depend on class order and is correctly rounded.
ClassMetric rational_mean(const std::vector<std::uint64_t>& num, const std::vector<std::uint64_t>& den) {
  ClassMetric out;
  out.per_class.resize(num.size());
  Rational sum = 0;
  for (std::size_t c = 0; c < num.size(); ++c) {
    if (den[c] == 0) continue;
    out.per_class[c] = static_cast<double>(num[c]) / static_cast<double>(den[c]);
    sum += Rational(num[c], den[c]);
    ++out.counted;
  }
  if (out.counted > 0) {
    sum /= static_cast<unsigned long long>(out.counted);
    out.mean = sum.convert_to<double>();
  }
  return out;
}

Json optional_list(const std::vector<std::optional<double>>& values) {
  Json arr = Json::array();
  for (const auto& v : values) arr.push_back(v ? Json(*v) : Json(nullptr));
  return arr;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes, std::optional<int> ignore_label)
    : num_classes_(num_classes), ignore_label_(ignore_label) {
  if (num_classes < 1) throw InputError("confusion matrix: num_classes must be >= 1");
  counts_.assign(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0);
}

void ConfusionMatrix::accumulate(std::span<const int> gt, std::span<const int> pred) {
  if (gt.size() != pred.size()) {
    throw InputError("accumulate: " + std::to_string(gt.size()) + " ground-truth labels vs " +
                     std::to_string(pred.size()) + " predictions");
  }
  const auto in_range = [&](int l) { return l >= 0 && l < num_classes_; };
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ignore_label_ && gt[i] == *ignore_label_) continue;
    if (!in_range(gt[i]) || !in_range(pred[i])) {
      throw InputError("accumulate: label out of range at index " + std::to_string(i) + " (gt " +
                       std::to_string(gt[i]) + ", pred " + std::to_string(pred[i]) + ")");
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ignore_label_ && gt[i] == *ignore_label_) {
      ++ignored_;
      continue;
    }
    ++counts_[index(gt[i], pred[i])];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_ || other.ignore_label_ != ignore_label_) {
    throw InputError("merge: confusion matrices are not compatible");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  ignored_ += other.ignored_;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

ClassMetric miou(const ConfusionMatrix& cm) {
  const int c_count = cm.num_classes();
  std::vector<std::uint64_t> tp(c_count), den(c_count);
  for (int c = 0; c < c_count; ++c) {
    std::uint64_t row = 0, col = 0;
    for (int k = 0; k < c_count; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    tp[c] = cm.at(c, c);
    den[c] = row + col - tp[c];
  }
  return rational_mean(tp, den);
}

ClassMetric mean_class_accuracy(const ConfusionMatrix& cm) {
  const int c_count = cm.num_classes();
  std::vector<std::uint64_t> tp(c_count), row(c_count, 0);
  for (int c = 0; c < c_count; ++c) {
    for (int k = 0; k < c_count; ++k) row[c] += cm.at(c, k);
    tp[c] = cm.at(c, c);
  }
  return rational_mean(tp, row);
}

Json metrics_report(const ConfusionMatrix& cm) {
  const ClassMetric iou = miou(cm);
  const ClassMetric acc = mean_class_accuracy(cm);
  Json j;
  j["num_classes"] = cm.num_classes();
  j["total_points"] = cm.total();
  j["ignored_points"] = cm.ignored();
  j["per_class_iou"] = optional_list(iou.per_class);
  j["per_class_accuracy"] = optional_list(acc.per_class);
  j["miou"] = iou.mean;
  j["mean_accuracy"] = acc.mean;
  j["classes_in_miou"] = iou.counted;
  j["classes_in_mean_accuracy"] = acc.counted;
  return j;
}

}  // namespace dmf
