#include "hadseg/metrics.hpp"

#include <algorithm>

#include "hadseg/error.hpp"
#include "json.hpp"

namespace hadseg::metrics {

LabelMap::LabelMap(std::size_t height, std::size_t width, std::uint32_t fill)
    : height_(height), width_(width), labels_(height * width, fill) {}

LabelMap::LabelMap(std::size_t height, std::size_t width,
                   std::vector<std::uint32_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (labels_.size() != height_ * width_) {
    throw ShapeError("label map data length " + std::to_string(labels_.size()) +
                     " does not match " + std::to_string(height_) + "x" +
                     std::to_string(width_));
  }
}

std::uint32_t LabelMap::max_label() const {
  return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

void LabelMap::validate(std::size_t num_classes) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes) {
      throw ClassIndexError("label " + std::to_string(labels_[i]) +
                            " at pixel " + std::to_string(i) + " >= class count " +
                            std::to_string(num_classes));
    }
  }
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_(num_classes), counts_(num_classes * num_classes, 0) {}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t t = 0;
  for (std::size_t p = 0; p < k_; ++p) t += (*this)(truth, p);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t t = 0;
  for (std::size_t r = 0; r < k_; ++r) t += (*this)(r, pred);
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) {
    throw ShapeError("cannot add confusion matrices of different class counts");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

namespace {

void argmax_pixels(std::span<const double> data, std::size_t channels,
                   std::size_t num_classes, std::uint32_t* out) {
  for (std::size_t p = 0, o = 0; p < data.size(); p += channels, ++o) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < num_classes; ++c) {
      if (data[p + c] > data[p + best]) best = c;
    }
    out[o] = static_cast<std::uint32_t>(best);
  }
}

void check_capacity(const Tensor& y_hat, std::size_t num_classes) {
  const std::size_t n = y_hat.shape().back();
  if (num_classes == 0 || num_classes > n) {
    throw CapacityError("class count " + std::to_string(num_classes) +
                        " exceeds channel count " + std::to_string(n));
  }
}

}  // namespace

LabelMap argmax_map(const Tensor& y_hat, std::size_t num_classes) {
  if (y_hat.rank() != 3) {
    throw ShapeError("argmax_map expects [H, W, n], got " +
                     shape_string(y_hat.shape()));
  }
  check_capacity(y_hat, num_classes);
  LabelMap lm(y_hat.dim(0), y_hat.dim(1));
  argmax_pixels(y_hat.data(), y_hat.dim(2), num_classes, lm.labels().data());
  return lm;
}

std::vector<LabelMap> argmax_maps(const Tensor& y_hat, std::size_t num_classes) {
  if (y_hat.rank() != 4) {
    throw ShapeError("argmax_maps expects [N, H, W, n], got " +
                     shape_string(y_hat.shape()));
  }
  check_capacity(y_hat, num_classes);
  const std::size_t h = y_hat.dim(1), w = y_hat.dim(2), n = y_hat.dim(3);
  std::vector<LabelMap> maps;
  for (std::size_t b = 0; b < y_hat.dim(0); ++b) {
    LabelMap lm(h, w);
    argmax_pixels(y_hat.data().subspan(b * h * w * n, h * w * n), n, num_classes,
                  lm.labels().data());
    maps.push_back(std::move(lm));
  }
  return maps;
}

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& truth,
                          std::size_t num_classes) {
  if (pred.height() != truth.height() || pred.width() != truth.width()) {
    throw ShapeError("confusion: prediction " + std::to_string(pred.height()) +
                     "x" + std::to_string(pred.width()) + " vs truth " +
                     std::to_string(truth.height()) + "x" +
                     std::to_string(truth.width()));
  }
  pred.validate(num_classes);
  truth.validate(num_classes);
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++cm(truth.labels()[i], pred.labels()[i]);
  }
  return cm;
}

double pixel_accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw MetricError("pixel accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) trace += cm(c, c);
  return static_cast<double>(trace) / static_cast<double>(total);
}

IoUResult class_iou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricError("IoU of an empty confusion matrix");
  const std::size_t k = cm.num_classes();
  IoUResult r;
  r.per_class.assign(k, 0.0);
  r.present.assign(k, false);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::uint64_t tp = cm(c, c);
    const std::uint64_t uni = cm.row_sum(c) + cm.col_sum(c) - tp;
    if (uni == 0) continue;
    r.present[c] = true;
    r.per_class[c] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += r.per_class[c];
    ++r.present_count;
  }
  r.mean = r.present_count ? sum / static_cast<double>(r.present_count) : 0.0;
  r.mean_absent_as_zero = sum / static_cast<double>(k);
  return r;
}

std::string metrics_report(const ConfusionMatrix& cm,
                           const std::vector<std::string>& class_names) {
  const IoUResult iou = class_iou(cm);
  nlohmann::ordered_json doc;
  doc["num_classes"] = cm.num_classes();
  doc["total_pixels"] = cm.total();
  doc["pixel_accuracy"] = pixel_accuracy(cm);
  doc["mean_iou"] = iou.mean;
  doc["mean_iou_absent_as_zero"] = iou.mean_absent_as_zero;
  doc["mean_iou_includes_background"] = true;
  doc["present_classes"] = iou.present_count;
  auto& classes = doc["classes"];
  classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    nlohmann::ordered_json entry;
    entry["index"] = c;
    entry["name"] = c < class_names.size() ? class_names[c] : "class" + std::to_string(c);
    entry["present"] = static_cast<bool>(iou.present[c]);
    if (iou.present[c]) {
      entry["iou"] = iou.per_class[c];
    } else {
      entry["iou"] = nullptr;
    }
    entry["truth_pixels"] = cm.row_sum(c);
    entry["predicted_pixels"] = cm.col_sum(c);
    classes.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

}  // namespace hadseg::metrics
