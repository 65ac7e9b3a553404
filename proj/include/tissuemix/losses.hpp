#pragma once

#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "tissuemix/image.hpp"
#include "tissuemix/tensor.hpp"

namespace tissuemix::losses {

inline constexpr double kDiceEpsilon = 1e-6;

/// Soft Dice, averaged over all C classes:
///   1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps)
/// with g the one-hot target. Background pixels of the target are skipped.
double dice_loss(const ProbabilityMap& pred, const LabelMask& target, double eps = kDiceEpsilon);

enum class Reduction { mean, sum };

/// L1 distance between softmax(fc) over channels and `prob` block-averaged
/// down to the activation resolution. Mean over C x H' x W' by default.
double consistency_reg(const ActivationMap& fc, const ProbabilityMap& prob, Reduction reduction = Reduction::mean);

/// Spatial mean of each activation channel.
ClassLogits classification_logits(const ActivationMap& fc);

/// Multi-label soft margin: mean over classes of the binary logistic loss,
/// evaluated through softplus so large |z| never overflows.
double multilabel_soft_margin(const ClassLogits& logits, const LabelVector& labels);

/// Multipliers per sub-loss; the defaults give a plain sum.
struct LossWeights {
    double cls = 1.0;  // w1
    double seg = 1.0;  // w2
    double reg = 1.0;  // w3
};

struct LossTerms {
    double seg = 0.0;
    double reg = 0.0;
    double cls = 0.0;
};

double total_loss(const LossTerms& terms, const LossWeights& weights = {});

/// Which sub-losses a training sample contributes to. Consistency only runs
/// on real images without masks; once pseudo-masks exist, real images use
/// the segmentation loss instead.
enum class SampleKind { synthesized, real, real_with_pseudo_mask };

struct LossApplicability {
    bool seg = false;
    bool reg = false;
    bool cls = false;
};

LossApplicability applicability(SampleKind kind);

// Analytic gradients.

Tensor3 dice_loss_grad(const ProbabilityMap& pred, const LabelMask& target, double eps = kDiceEpsilon);

struct ConsistencyGrad {
    Tensor3 fc;
    Tensor3 prob;
};
ConsistencyGrad consistency_reg_grad(const ActivationMap& fc, const ProbabilityMap& prob,
                                     Reduction reduction = Reduction::mean);

/// d loss / d z.
std::vector<double> multilabel_soft_margin_grad(const ClassLogits& logits, const LabelVector& labels);

/// Back-propagates d loss / d z through the average pooling onto the activation map.
Tensor3 classification_logits_backward(const ActivationMap& fc, std::span<const double> dz);

struct DiceInputs {
    ProbabilityMap pred;
    LabelMask target;
};
struct ConsistencyInputs {
    ActivationMap fc;
    ProbabilityMap prob;
    Reduction reduction = Reduction::mean;
};
struct SoftMarginInputs {
    ClassLogits logits;
    LabelVector labels;
};

enum class LossId { dice, consistency, soft_margin };

/// Accepts "dice", "consistency", "soft_margin"; anything else throws.
LossId parse_loss_id(std::string_view name);

using LossInputs = std::variant<DiceInputs, ConsistencyInputs, SoftMarginInputs>;
using LossGradients = std::variant<Tensor3, ConsistencyGrad, std::vector<double>>;

/// Dispatches to the analytic gradient of `id`; the inputs must match the id.
LossGradients loss_gradients(LossId id, const LossInputs& inputs);

}  // namespace tissuemix::losses
