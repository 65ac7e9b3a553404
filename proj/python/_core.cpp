#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tissuemix/cli.hpp"
#include "tissuemix/filtering.hpp"
#include "tissuemix/geometry.hpp"
#include "tissuemix/gradcheck.hpp"
#include "tissuemix/losses.hpp"
#include "tissuemix/metrics.hpp"
#include "tissuemix/permutation.hpp"
#include "tissuemix/synthesis.hpp"
#include "tissuemix/tiling.hpp"

namespace py = pybind11;
using namespace tissuemix;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const U8Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw InvalidArgument("image must be an H x W x 3 uint8 array");
    Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
    return img;
}

LabelMask to_mask(const U8Array& a, int background) {
    if (a.ndim() != 2) throw InvalidArgument("mask must be an H x W uint8 array");
    LabelMask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), 0, static_cast<std::uint8_t>(background));
    std::copy(a.data(), a.data() + a.size(), m.labels.begin());
    return m;
}

Tensor3 to_tensor(const F64Array& a) {
    if (a.ndim() != 3) throw InvalidArgument("expected a C x H x W float array");
    Tensor3 t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), t.values.begin());
    return t;
}

py::array_t<std::uint8_t> from_image(const Image& img) {
    py::array_t<std::uint8_t> a({img.height, img.width, 3});
    std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
    return a;
}

py::array_t<std::uint8_t> from_mask(const LabelMask& m) {
    py::array_t<std::uint8_t> a({m.height, m.width});
    std::copy(m.labels.begin(), m.labels.end(), a.mutable_data());
    return a;
}

py::array_t<double> from_tensor(const Tensor3& t) {
    py::array_t<double> a({t.channels, t.height, t.width});
    std::copy(t.values.begin(), t.values.end(), a.mutable_data());
    return a;
}

SynthesisConfig make_config(int height, int width, double alpha, double beta, int grid_order, int anchors) {
    SynthesisConfig c;
    c.out_height = height;
    c.out_width = width;
    c.alpha = alpha;
    c.beta = beta;
    c.grid_order = grid_order;
    c.bezier_anchors = anchors;
    c.validate();
    return c;
}

py::tuple synthesis_tuple(const SynthesisResult& r) {
    return py::make_tuple(from_image(r.sample.image), from_mask(r.sample.mask), recipe_to_json(r.recipe).dump());
}

py::dict report_dict(const metrics::MetricReport& r) {
    py::dict d;
    py::list ious;
    for (const auto& v : r.per_class_iou) ious.append(v ? py::cast(*v) : py::none());
    d["per_class_iou"] = ious;
    d["miou"] = r.miou;
    d["fwiou"] = r.fwiou;
    d["pixel_counts"] = r.pixel_counts;
    d["predicted_background"] = r.predicted_background;
    d["total_pixels"] = r.total_pixels;
    return d;
}

std::vector<geometry::Point2> to_points(const std::vector<std::pair<double, double>>& v) {
    std::vector<geometry::Point2> out;
    for (const auto& [x, y] : v) out.push_back({x, y});
    return out;
}

std::vector<std::pair<double, double>> from_points(const std::vector<geometry::Point2>& v) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : v) out.emplace_back(p.x, p.y);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Histopathology sample synthesis, loss functions, segmentation metrics and tiled inference fusion";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // geometry
    m.def(
        "random_loop",
        [](std::uint64_t seed, int n) {
            Rng rng(seed);
            const auto loop = geometry::random_loop(rng, n);
            return py::make_tuple(from_points(loop.anchors()), from_points(loop.tangents()));
        },
        py::arg("seed"), py::arg("n") = 6, "Random closed loop in the unit square: (anchors, tangents).");
    m.def(
        "c1_residual",
        [](const std::vector<std::pair<double, double>>& anchors, const std::vector<std::pair<double, double>>& tangents) {
            return geometry::build_closed_loop(to_points(anchors), to_points(tangents)).c1_residual();
        },
        py::arg("anchors"), py::arg("tangents"));
    m.def(
        "rasterize_loop",
        [](const std::vector<std::pair<double, double>>& anchors, const std::vector<std::pair<double, double>>& tangents,
           int height, int width, int samples_per_segment) {
            const auto loop = geometry::build_closed_loop(to_points(anchors), to_points(tangents));
            const auto r = geometry::rasterize_loop(loop, height, width, samples_per_segment);
            py::array_t<bool> a({height, width});
            std::copy(r.mask.bits.begin(), r.mask.bits.end(), a.mutable_data());
            return a;
        },
        py::arg("anchors"), py::arg("tangents"), py::arg("height"), py::arg("width"),
        py::arg("samples_per_segment") = geometry::kDefaultSamplesPerSegment);

    // synthesis
    m.def(
        "mosaic",
        [](const std::vector<std::pair<U8Array, U8Array>>& tiles, std::uint64_t seed, int height, int width,
           double alpha, double beta, int grid_order, int background) {
            const auto cfg = make_config(height, width, alpha, beta, grid_order, 6);
            std::vector<LabeledImage> src;
            for (const auto& [img, mask] : tiles) src.push_back({to_image(img), to_mask(mask, background)});
            Rng rng(seed);
            return synthesis_tuple(mosaic_from_tiles(src, cfg, rng));
        },
        py::arg("tiles"), py::arg("seed"), py::arg("height") = 224, py::arg("width") = 224, py::arg("alpha") = 0.2,
        py::arg("beta") = 0.8, py::arg("grid_order") = 2, py::arg("background") = kDefaultBackground,
        "Mosaic from 4*m*m single-labeled (image, mask) tiles: (image, mask, recipe_json).");
    m.def(
        "bezier",
        [](const U8Array& fg_image, const U8Array& fg_mask, const U8Array& bg_image, const U8Array& bg_mask,
           std::uint64_t seed, int anchors, int background) {
            const LabeledImage fg{to_image(fg_image), to_mask(fg_mask, background)};
            const LabeledImage bg{to_image(bg_image), to_mask(bg_mask, background)};
            const auto cfg = make_config(fg.image.height, fg.image.width, 0.2, 0.8, 2, anchors);
            Rng rng(seed);
            return synthesis_tuple(bezier_synthesize(fg, bg, cfg, rng));
        },
        py::arg("fg_image"), py::arg("fg_mask"), py::arg("bg_image"), py::arg("bg_mask"), py::arg("seed"),
        py::arg("anchors") = 6, py::arg("background") = kDefaultBackground,
        "Bezier-loop mix of two aligned samples: (image, mask, recipe_json).");

    // losses
    m.def(
        "dice_loss",
        [](const F64Array& pred, const U8Array& target, double eps, int background) {
            return losses::dice_loss(ProbabilityMap(to_tensor(pred)), to_mask(target, background), eps);
        },
        py::arg("pred"), py::arg("target"), py::arg("eps") = losses::kDiceEpsilon,
        py::arg("background") = kDefaultBackground);
    m.def(
        "dice_loss_grad",
        [](const F64Array& pred, const U8Array& target, double eps, int background) {
            return from_tensor(losses::dice_loss_grad(ProbabilityMap(to_tensor(pred)), to_mask(target, background), eps));
        },
        py::arg("pred"), py::arg("target"), py::arg("eps") = losses::kDiceEpsilon,
        py::arg("background") = kDefaultBackground);
    m.def(
        "consistency_reg",
        [](const F64Array& fc, const F64Array& prob, const std::string& reduction) {
            const auto red = reduction == "sum" ? losses::Reduction::sum : losses::Reduction::mean;
            if (reduction != "sum" && reduction != "mean") throw InvalidArgument("reduction must be 'mean' or 'sum'");
            return losses::consistency_reg(ActivationMap(to_tensor(fc)), ProbabilityMap(to_tensor(prob)), red);
        },
        py::arg("fc"), py::arg("prob"), py::arg("reduction") = "mean");
    m.def(
        "classification_logits",
        [](const F64Array& fc) { return losses::classification_logits(ActivationMap(to_tensor(fc))).z; },
        py::arg("fc"));
    m.def(
        "multilabel_soft_margin",
        [](const std::vector<double>& z, const std::vector<bool>& y) {
            return losses::multilabel_soft_margin(ClassLogits{z}, LabelVector{y});
        },
        py::arg("z"), py::arg("y"));
    m.def(
        "multilabel_soft_margin_grad",
        [](const std::vector<double>& z, const std::vector<bool>& y) {
            return losses::multilabel_soft_margin_grad(ClassLogits{z}, LabelVector{y});
        },
        py::arg("z"), py::arg("y"));
    m.def(
        "gradient_checks",
        [](std::uint64_t seed, int trials) {
            py::list out;
            for (const auto& r : losses::run_gradient_checks(seed, trials)) {
                py::dict d;
                d["name"] = r.name;
                d["trials"] = r.trials;
                d["max_rel_error"] = r.max_rel_error;
                d["tolerance"] = r.tolerance;
                d["passed"] = r.passed;
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 0, py::arg("trials") = 100);

    // filtering
    m.def("keep", &filtering::keep, py::arg("p_real"), py::arg("threshold") = filtering::kDefaultThreshold);
    m.def(
        "apply_filter",
        [](const std::vector<std::pair<std::string, double>>& scores, double threshold) {
            std::vector<filtering::AuthenticityScore> s;
            for (const auto& [id, p] : scores) s.push_back({id, p});
            std::vector<std::string> kept;
            for (const auto& d : filtering::apply_filter(s, threshold))
                if (d.kept) kept.push_back(d.sample_id);
            return kept;
        },
        py::arg("scores"), py::arg("threshold") = filtering::kDefaultThreshold,
        "Ids of the (id, p_real) pairs kept, in input order.");

    // metrics
    m.def(
        "evaluate",
        [](const std::vector<std::pair<U8Array, U8Array>>& pairs, int num_classes, int background) {
            metrics::ConfusionMatrix cm(num_classes);
            for (const auto& [pred, gt] : pairs) cm.add(to_mask(pred, background), to_mask(gt, background));
            return report_dict(metrics::compute_report(cm));
        },
        py::arg("pairs"), py::arg("num_classes"), py::arg("background") = kDefaultBackground,
        "IoU report over (pred, gt) mask pairs.");
    m.def(
        "permutation_test",
        [](const std::vector<double>& a, const std::vector<double>& b, std::uint64_t max_exact, std::uint64_t iters,
           std::uint64_t seed) {
            const auto r = metrics::permutation_test(a, b, {max_exact, iters, seed});
            py::dict d;
            d["p_value"] = r.p_value;
            d["statistic"] = r.statistic;
            d["exact"] = r.exact;
            d["permutations"] = r.permutations;
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("max_exact") = 1'000'000, py::arg("iters") = 100'000,
        py::arg("seed") = 0);

    // tiling
    m.def(
        "plan_tiles",
        [](int height, int width, int window, double overlap) {
            std::vector<std::pair<int, int>> out;
            for (const auto& w : tiling::plan_tiles(height, width, window, overlap).windows) out.emplace_back(w.row, w.col);
            return out;
        },
        py::arg("height"), py::arg("width"), py::arg("window") = tiling::kDefaultWindow, py::arg("overlap") = 0.0);
    m.def(
        "fuse_tiles",
        [](const std::vector<std::pair<std::pair<int, int>, F64Array>>& tiles, int height, int width) {
            std::vector<tiling::Tile> t;
            for (const auto& [off, prob] : tiles) t.push_back({{off.first, off.second}, ProbabilityMap(to_tensor(prob))});
            return from_tensor(tiling::fuse_probabilities(t, height, width));
        },
        py::arg("tiles"), py::arg("height"), py::arg("width"), "Average overlapping ((row, col), C x h x w) tiles.");
    m.def(
        "tta_variants",
        [](const std::string& set) {
            std::vector<std::pair<int, bool>> out;
            for (const auto& v : tiling::variants(tiling::parse_tta_set(set))) out.emplace_back(v.quarter_turns, v.hflip);
            return out;
        },
        py::arg("set") = "d4", "(quarter_turns, hflip) pairs; flip first, then anti-clockwise turns.");
    m.def(
        "apply_variant",
        [](const U8Array& image, int quarter_turns, bool hflip, bool inverse) {
            tiling::DihedralVariant v{quarter_turns, hflip};
            if (inverse) v = tiling::inverse(v);
            return from_image(tiling::apply(v, to_image(image)));
        },
        py::arg("image"), py::arg("quarter_turns"), py::arg("hflip"), py::arg("inverse") = false);
    m.def(
        "argmax_mask", [](const F64Array& prob) { return from_mask(tiling::argmax_mask(ProbabilityMap(to_tensor(prob)))); },
        py::arg("prob"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a command-line invocation in-process: (exit_code, stdout, stderr).");
}
