#include "tissuemix/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tissuemix::losses {

namespace {

void check_finite(const Tensor3& t, const char* what) {
    require(t.channels > 0 && t.height > 0 && t.width > 0, std::string(what) + ": dimensions must be positive");
    require(t.values.size() == static_cast<std::size_t>(t.channels) * t.plane(), std::string(what) + ": buffer size mismatch");
    for (double v : t.values) require(std::isfinite(v), std::string(what) + ": non-finite value");
}

void check_dice_inputs(const ProbabilityMap& pred, const LabelMask& target) {
    check_finite(pred, "dice_loss pred");
    validate(target, pred.channels);
    require(pred.height == target.height && pred.width == target.width,
            "dice_loss: prediction is " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                " but target is " + std::to_string(target.height) + "x" + std::to_string(target.width));
    for (double v : pred.values) require(v >= 0.0, "dice_loss: negative prediction");
}

struct DiceSums {
    std::vector<double> inter, pred, truth;
};

DiceSums dice_sums(const ProbabilityMap& pred, const LabelMask& target) {
    const auto C = static_cast<std::size_t>(pred.channels);
    DiceSums s{std::vector<double>(C), std::vector<double>(C), std::vector<double>(C)};
    for (int y = 0; y < pred.height; ++y) {
        for (int x = 0; x < pred.width; ++x) {
            const auto label = target.at(y, x);
            if (label == target.background) continue;
            for (std::size_t c = 0; c < C; ++c) {
                const double p = pred.at(static_cast<int>(c), y, x);
                s.pred[c] += p;
                if (c == label) {
                    s.inter[c] += p;
                    s.truth[c] += 1.0;
                }
            }
        }
    }
    return s;
}

struct BlockGeometry {
    int kh, kw;
};

BlockGeometry check_consistency_inputs(const ActivationMap& fc, const ProbabilityMap& prob) {
    check_finite(fc, "consistency_reg fc");
    check_finite(prob, "consistency_reg prob");
    require(fc.channels == prob.channels, "consistency_reg: channel counts differ (" + std::to_string(fc.channels) +
                                              " vs " + std::to_string(prob.channels) + ")");
    require(prob.height % fc.height == 0 && prob.width % fc.width == 0,
            "consistency_reg: probability map " + std::to_string(prob.height) + "x" + std::to_string(prob.width) +
                " is not an integer multiple of activation map " + std::to_string(fc.height) + "x" +
                std::to_string(fc.width));
    return {prob.height / fc.height, prob.width / fc.width};
}

Tensor3 softmax_channels(const ActivationMap& fc) {
    Tensor3 out(fc.channels, fc.height, fc.width);
    for (int y = 0; y < fc.height; ++y) {
        for (int x = 0; x < fc.width; ++x) {
            double mx = fc.at(0, y, x);
            for (int c = 1; c < fc.channels; ++c) mx = std::max(mx, fc.at(c, y, x));
            double sum = 0.0;
            for (int c = 0; c < fc.channels; ++c) sum += out.at(c, y, x) = std::exp(fc.at(c, y, x) - mx);
            for (int c = 0; c < fc.channels; ++c) out.at(c, y, x) /= sum;
        }
    }
    return out;
}

Tensor3 block_average(const ProbabilityMap& prob, int out_h, int out_w, BlockGeometry b) {
    Tensor3 out(prob.channels, out_h, out_w);
    const double inv = 1.0 / (b.kh * b.kw);
    for (int c = 0; c < prob.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                double sum = 0.0;
                for (int dy = 0; dy < b.kh; ++dy)
                    for (int dx = 0; dx < b.kw; ++dx) sum += prob.at(c, y * b.kh + dy, x * b.kw + dx);
                out.at(c, y, x) = sum * inv;
            }
        }
    }
    return out;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_soft_margin_inputs(const ClassLogits& logits, const LabelVector& labels) {
    require(!logits.z.empty(), "multilabel_soft_margin: no classes");
    require(logits.z.size() == labels.size(), "multilabel_soft_margin: " + std::to_string(logits.z.size()) +
                                                  " logits but " + std::to_string(labels.size()) + " labels");
    for (double z : logits.z) require(std::isfinite(z), "multilabel_soft_margin: non-finite logit");
}

}  // namespace

double dice_loss(const ProbabilityMap& pred, const LabelMask& target, double eps) {
    check_dice_inputs(pred, target);
    const auto s = dice_sums(pred, target);
    double total = 0.0;
    for (std::size_t c = 0; c < s.inter.size(); ++c) {
        total += 1.0 - (2.0 * s.inter[c] + eps) / (s.pred[c] + s.truth[c] + eps);
    }
    return total / pred.channels;
}

Tensor3 dice_loss_grad(const ProbabilityMap& pred, const LabelMask& target, double eps) {
    check_dice_inputs(pred, target);
    const auto s = dice_sums(pred, target);
    Tensor3 g(pred.channels, pred.height, pred.width);
    const double inv_c = 1.0 / pred.channels;
    for (int c = 0; c < pred.channels; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const double denom = s.pred[ci] + s.truth[ci] + eps;
        const double numer = 2.0 * s.inter[ci] + eps;
        for (int y = 0; y < pred.height; ++y) {
            for (int x = 0; x < pred.width; ++x) {
                const auto label = target.at(y, x);
                if (label == target.background) continue;
                const double gx = label == c ? 1.0 : 0.0;
                g.at(c, y, x) = -(2.0 * gx * denom - numer) / (denom * denom) * inv_c;
            }
        }
    }
    return g;
}

double consistency_reg(const ActivationMap& fc, const ProbabilityMap& prob, Reduction reduction) {
    const auto b = check_consistency_inputs(fc, prob);
    const auto sm = softmax_channels(fc);
    const auto down = block_average(prob, fc.height, fc.width, b);
    double total = 0.0;
    for (std::size_t i = 0; i < sm.values.size(); ++i) total += std::abs(sm.values[i] - down.values[i]);
    return reduction == Reduction::mean ? total / static_cast<double>(sm.values.size()) : total;
}

ConsistencyGrad consistency_reg_grad(const ActivationMap& fc, const ProbabilityMap& prob, Reduction reduction) {
    const auto b = check_consistency_inputs(fc, prob);
    const auto sm = softmax_channels(fc);
    const auto down = block_average(prob, fc.height, fc.width, b);
    const double scale = reduction == Reduction::mean ? 1.0 / static_cast<double>(sm.values.size()) : 1.0;

    Tensor3 sign(fc.channels, fc.height, fc.width);
    for (std::size_t i = 0; i < sm.values.size(); ++i) {
        const double d = sm.values[i] - down.values[i];
        sign.values[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }

    ConsistencyGrad g{Tensor3(fc.channels, fc.height, fc.width), Tensor3(prob.channels, prob.height, prob.width)};
    for (int y = 0; y < fc.height; ++y) {
        for (int x = 0; x < fc.width; ++x) {
            // softmax Jacobian: d s_i / d f_j = s_i (delta_ij - s_j)
            double dot = 0.0;
            for (int c = 0; c < fc.channels; ++c) dot += sign.at(c, y, x) * sm.at(c, y, x);
            for (int c = 0; c < fc.channels; ++c) g.fc.at(c, y, x) = sm.at(c, y, x) * (sign.at(c, y, x) - dot);
        }
    }
    const double inv_block = 1.0 / (b.kh * b.kw);
    for (int c = 0; c < prob.channels; ++c)
        for (int y = 0; y < prob.height; ++y)
            for (int x = 0; x < prob.width; ++x) g.prob.at(c, y, x) = -sign.at(c, y / b.kh, x / b.kw) * inv_block;
    return g;
}

ClassLogits classification_logits(const ActivationMap& fc) {
    check_finite(fc, "classification_logits");
    ClassLogits out{std::vector<double>(static_cast<std::size_t>(fc.channels))};
    const double inv = 1.0 / static_cast<double>(fc.plane());
    for (int c = 0; c < fc.channels; ++c) {
        double sum = 0.0;
        for (int y = 0; y < fc.height; ++y)
            for (int x = 0; x < fc.width; ++x) sum += fc.at(c, y, x);
        out.z[static_cast<std::size_t>(c)] = sum * inv;
    }
    return out;
}

Tensor3 classification_logits_backward(const ActivationMap& fc, std::span<const double> dz) {
    require(dz.size() == static_cast<std::size_t>(fc.channels), "classification_logits_backward: size mismatch");
    Tensor3 g(fc.channels, fc.height, fc.width);
    const double inv = 1.0 / static_cast<double>(fc.plane());
    for (int c = 0; c < fc.channels; ++c)
        for (int y = 0; y < fc.height; ++y)
            for (int x = 0; x < fc.width; ++x) g.at(c, y, x) = dz[static_cast<std::size_t>(c)] * inv;
    return g;
}

double multilabel_soft_margin(const ClassLogits& logits, const LabelVector& labels) {
    check_soft_margin_inputs(logits, labels);
    // -log sigmoid(z) = softplus(-z); -log sigmoid(-z) = softplus(z)
    double total = 0.0;
    for (std::size_t i = 0; i < logits.z.size(); ++i) {
        total += labels.present[i] ? softplus(-logits.z[i]) : softplus(logits.z[i]);
    }
    return total / static_cast<double>(logits.z.size());
}

std::vector<double> multilabel_soft_margin_grad(const ClassLogits& logits, const LabelVector& labels) {
    check_soft_margin_inputs(logits, labels);
    const double inv = 1.0 / static_cast<double>(logits.z.size());
    std::vector<double> g(logits.z.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (sigmoid(logits.z[i]) - (labels.present[i] ? 1.0 : 0.0)) * inv;
    return g;
}

double total_loss(const LossTerms& terms, const LossWeights& weights) {
    return weights.seg * terms.seg + weights.reg * terms.reg + weights.cls * terms.cls;
}

LossApplicability applicability(SampleKind kind) {
    switch (kind) {
        case SampleKind::synthesized: return {true, false, true};
        case SampleKind::real: return {false, true, true};
        case SampleKind::real_with_pseudo_mask: return {true, false, true};
    }
    return {};
}

LossId parse_loss_id(std::string_view name) {
    if (name == "dice") return LossId::dice;
    if (name == "consistency") return LossId::consistency;
    if (name == "soft_margin") return LossId::soft_margin;
    fail("unknown loss identifier '" + std::string(name) + "'");
}

LossGradients loss_gradients(LossId id, const LossInputs& inputs) {
    switch (id) {
        case LossId::dice:
            if (const auto* in = std::get_if<DiceInputs>(&inputs)) return dice_loss_grad(in->pred, in->target);
            break;
        case LossId::consistency:
            if (const auto* in = std::get_if<ConsistencyInputs>(&inputs))
                return consistency_reg_grad(in->fc, in->prob, in->reduction);
            break;
        case LossId::soft_margin:
            if (const auto* in = std::get_if<SoftMarginInputs>(&inputs))
                return multilabel_soft_margin_grad(in->logits, in->labels);
            break;
    }
    fail("loss_gradients: inputs do not match the requested loss");
}

}  // namespace tissuemix::losses
