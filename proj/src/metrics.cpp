#include "tissuemix/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

namespace tissuemix::metrics {

ConfusionMatrix::ConfusionMatrix(int classes) : classes_(classes) {
    require(classes > 0 && classes < kDefaultBackground, "class count must be in 1..254");
    counts_.assign(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes + 1), 0);
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::gt_count(int gt) const {
    std::uint64_t n = 0;
    for (int p = 0; p <= classes_; ++p) n += at(gt, p);
    return n;
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
    require(other.classes_ == classes_, "cannot merge confusion matrices with " + std::to_string(classes_) + " and " +
                                            std::to_string(other.classes_) + " classes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

void ConfusionMatrix::add(const LabelMask& pred, const LabelMask& gt) {
    require(classes_ > 0, "confusion matrix has no classes");
    validate(gt, classes_);
    validate(pred);
    require(pred.height == gt.height && pred.width == gt.width,
            "prediction is " + std::to_string(pred.height) + "x" + std::to_string(pred.width) + " but ground truth is " +
                std::to_string(gt.height) + "x" + std::to_string(gt.width));
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const int g = gt.labels[i];
        if (g == gt.background) continue;
        const int p = pred.labels[i];
        if (p == pred.background) {
            ++at(g, classes_);
            continue;
        }
        require(p < classes_, "prediction label " + std::to_string(p) + " is not a class index (classes: " +
                                  std::to_string(classes_) + ")");
        ++at(g, p);
    }
}

ConfusionMatrix accumulate(const LabelMask& pred, const LabelMask& gt, ConfusionMatrix cm) {
    cm.add(pred, gt);
    return cm;
}

MetricReport compute_report(const ConfusionMatrix& cm) {
    const int C = cm.classes();
    require(C > 0, "confusion matrix has no classes");
    MetricReport r;
    r.total_pixels = cm.total();
    // Extended precision so that simple rational results round correctly.
    long double iou_sum = 0.0L, fw_sum = 0.0L;
    int defined = 0;
    for (int c = 0; c < C; ++c) {
        const std::uint64_t tp = cm.at(c, c);
        const std::uint64_t row = cm.gt_count(c);
        std::uint64_t col = 0;
        for (int g = 0; g < C; ++g) col += cm.at(g, c);
        r.pixel_counts.push_back(row);
        r.predicted_background += cm.predicted_background(c);
        const std::uint64_t denom = row + col - tp;
        if (denom == 0) {
            r.per_class_iou.push_back(std::nullopt);
            continue;
        }
        const long double iou = static_cast<long double>(tp) / static_cast<long double>(denom);
        r.per_class_iou.push_back(static_cast<double>(iou));
        iou_sum += iou;
        fw_sum += static_cast<long double>(row) * static_cast<long double>(tp) /
                  (static_cast<long double>(r.total_pixels) * static_cast<long double>(denom));
        ++defined;
    }
    require(defined > 0, "empty report: no class has a defined IoU");
    r.miou = static_cast<double>(iou_sum / defined);
    r.fwiou = r.total_pixels > 0 ? static_cast<double>(fw_sum) : 0.0;
    return r;
}

std::string report_to_json(const MetricReport& report, std::span<const std::string> class_names) {
    nlohmann::ordered_json j;
    if (!class_names.empty()) {
        require(class_names.size() == report.per_class_iou.size(), "class name count does not match the report");
        j["class_names"] = std::vector<std::string>(class_names.begin(), class_names.end());
    }
    auto ious = nlohmann::ordered_json::array();
    for (const auto& v : report.per_class_iou) ious.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
    j["per_class_iou"] = ious;
    j["miou"] = report.miou;
    j["fwiou"] = report.fwiou;
    j["pixel_counts"] = report.pixel_counts;
    j["predicted_background"] = report.predicted_background;
    j["total_pixels"] = report.total_pixels;
    return j.dump(2);
}

LabelVector derive_image_labels(const LabelMask& mask, int num_classes, std::size_t min_pixels) {
    validate(mask, num_classes);
    require(min_pixels >= 1, "min_pixels must be at least 1");
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (auto l : mask.labels)
        if (l != mask.background) ++counts[l];
    LabelVector y;
    for (auto n : counts) y.present.push_back(n >= min_pixels);
    return y;
}

std::vector<bool> background_from_color(const Image& image, int threshold) {
    validate(image);
    std::vector<bool> out(image.pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto* p = &image.pixels[i * 3];
        out[i] = std::min({p[0], p[1], p[2]}) >= threshold;
    }
    return out;
}

LabelMask mark_background(const LabelMask& mask, const Image& image, int threshold) {
    validate_aligned(image, mask);
    LabelMask out = mask;
    const auto bg = background_from_color(image, threshold);
    for (std::size_t i = 0; i < bg.size(); ++i)
        if (bg[i]) out.labels[i] = out.background;
    return out;
}

}  // namespace tissuemix::metrics
