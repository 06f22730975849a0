#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hadseg/tensor.hpp"

namespace hadseg::metrics {

/// H x W grid of class indices, row-major.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::size_t height, std::size_t width, std::uint32_t fill = 0);
  LabelMap(std::size_t height, std::size_t width,
           std::vector<std::uint32_t> labels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::uint32_t operator()(std::size_t r, std::size_t c) const {
    return labels_[r * width_ + c];
  }
  std::uint32_t& operator()(std::size_t r, std::size_t c) {
    return labels_[r * width_ + c];
  }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  std::vector<std::uint32_t>& labels() noexcept { return labels_; }

  std::uint32_t max_label() const;
  /// Throws ClassIndexError if any label >= num_classes.
  void validate(std::size_t num_classes) const;

  bool operator==(const LabelMap&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint32_t> labels_;
};

/// counts(t, p) = number of pixels with truth t predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = 0);

  std::size_t num_classes() const noexcept { return k_; }
  std::uint64_t operator()(std::size_t truth, std::size_t pred) const {
    return counts_[truth * k_ + pred];
  }
  std::uint64_t& operator()(std::size_t truth, std::size_t pred) {
    return counts_[truth * k_ + pred];
  }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t pred) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

/// Per-pixel argmax over the first K channels of a [H, W, n] tensor; ties go
/// to the lowest index.
LabelMap argmax_map(const Tensor& y_hat, std::size_t num_classes);

/// Same for a [N, H, W, n] batch.
std::vector<LabelMap> argmax_maps(const Tensor& y_hat, std::size_t num_classes);

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& truth,
                          std::size_t num_classes);

/// trace / total. Throws MetricError on an empty matrix.
double pixel_accuracy(const ConfusionMatrix& cm);

struct IoUResult {
  std::vector<double> per_class;  // 0 for absent classes
  std::vector<bool> present;      // row + column sum > 0
  double mean = 0.0;              // over present classes only
  double mean_absent_as_zero = 0.0;  // over all K classes
  std::size_t present_count = 0;
};

/// IoU_c = tp / (row_c + col_c - tp). Throws MetricError on an empty matrix.
IoUResult class_iou(const ConfusionMatrix& cm);

/// Key-value (JSON) report: accuracy, per-class IoU, presence flags, both
/// mean-IoU views. `class_names` may be empty.
std::string metrics_report(const ConfusionMatrix& cm,
                           const std::vector<std::string>& class_names = {});

}  // namespace hadseg::metrics
