#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tissuemix/image.hpp"
#include "tissuemix/tensor.hpp"

namespace tissuemix::metrics {

/// Rows are ground-truth classes, columns predicted classes. Column C is
/// reserved for pixels the prediction marked as background while the ground
/// truth named a class. Ground-truth background pixels are never counted.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int classes);

    int classes() const { return classes_; }
    std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }
    std::uint64_t& at(int gt, int pred) { return counts_[index(gt, pred)]; }
    std::uint64_t predicted_background(int gt) const { return at(gt, classes_); }
    std::uint64_t total() const;
    std::uint64_t gt_count(int gt) const;

    /// Adds another matrix with the same class count.
    ConfusionMatrix& merge(const ConfusionMatrix& other);

    /// Tallies one aligned (pred, gt) pair. The prediction's background index
    /// goes to the predicted-background column; any other label >= C throws.
    void add(const LabelMask& pred, const LabelMask& gt);

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t index(int gt, int pred) const {
        return static_cast<std::size_t>(gt) * static_cast<std::size_t>(classes_ + 1) + static_cast<std::size_t>(pred);
    }

    int classes_ = 0;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix accumulate(const LabelMask& pred, const LabelMask& gt, ConfusionMatrix cm);

struct MetricReport {
    std::vector<std::optional<double>> per_class_iou;  // nullopt where TP+FP+FN == 0
    double miou = 0.0;
    double fwiou = 0.0;
    std::vector<std::uint64_t> pixel_counts;  // ground-truth pixels per class
    std::uint64_t predicted_background = 0;
    std::uint64_t total_pixels = 0;
};

/// IoU_c = TP / (TP + FP + FN), where FN includes predicted-background pixels.
/// mIoU averages the defined IoUs; fwIoU weights them by ground-truth frequency.
/// Throws when no class has a defined IoU.
MetricReport compute_report(const ConfusionMatrix& cm);

/// JSON object with per_class_iou (null where undefined), miou, fwiou,
/// pixel_counts, predicted_background, total_pixels, and class names if given.
std::string report_to_json(const MetricReport& report, std::span<const std::string> class_names = {});

/// y_c is true iff class c covers at least `min_pixels` non-background pixels.
LabelVector derive_image_labels(const LabelMask& mask, int num_classes, std::size_t min_pixels = 1);

inline constexpr int kBackgroundColorThreshold = 235;

/// A pixel is background iff min(R, G, B) >= threshold.
std::vector<bool> background_from_color(const Image& image, int threshold = kBackgroundColorThreshold);

/// Copy of `mask` with color-detected background pixels set to the background index.
LabelMask mark_background(const LabelMask& mask, const Image& image, int threshold = kBackgroundColorThreshold);

}  // namespace tissuemix::metrics
