#include "tissuemix/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "tissuemix/losses.hpp"
#include "tissuemix/rng.hpp"

namespace tissuemix::losses {

namespace {

constexpr double kFloor = 1e-8;

using Forward = std::function<double()>;

// Central differences of f with respect to every entry of `x`, perturbed in place.
std::vector<double> numeric_gradient(std::vector<double>& x, const Forward& f, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f();
        x[i] = saved - h;
        const double down = f();
        x[i] = saved;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

Tensor3 random_tensor(Rng& rng, int c, int h, int w, double lo, double hi) {
    Tensor3 t(c, h, w);
    for (double& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

ProbabilityMap random_probabilities(Rng& rng, int c, int h, int w) {
    ProbabilityMap p(random_tensor(rng, c, h, w, 0.05, 1.0));
    renormalize(p);
    return p;
}

// The L1 term is not differentiable where softmax(fc) meets the pooled map;
// keep sampled inputs a safe distance from that set.
bool away_from_kinks(const ActivationMap& fc, const ProbabilityMap& prob, double margin) {
    const int kh = prob.height / fc.height;
    const int kw = prob.width / fc.width;
    for (int y = 0; y < fc.height; ++y) {
        for (int x = 0; x < fc.width; ++x) {
            double mx = fc.at(0, y, x);
            for (int c = 1; c < fc.channels; ++c) mx = std::max(mx, fc.at(c, y, x));
            double sum = 0.0;
            for (int c = 0; c < fc.channels; ++c) sum += std::exp(fc.at(c, y, x) - mx);
            for (int c = 0; c < fc.channels; ++c) {
                double avg = 0.0;
                for (int dy = 0; dy < kh; ++dy)
                    for (int dx = 0; dx < kw; ++dx) avg += prob.at(c, y * kh + dy, x * kw + dx);
                avg /= kh * kw;
                if (std::abs(std::exp(fc.at(c, y, x) - mx) / sum - avg) < margin) return false;
            }
        }
    }
    return true;
}

ConsistencyInputs random_consistency(Rng& rng) {
    for (;;) {
        const int c = static_cast<int>(rng.uniform_int(2, 4));
        const int h = static_cast<int>(rng.uniform_int(1, 3));
        const int w = static_cast<int>(rng.uniform_int(1, 3));
        const int kh = static_cast<int>(rng.uniform_int(1, 3));
        const int kw = static_cast<int>(rng.uniform_int(1, 3));
        ConsistencyInputs in{ActivationMap(random_tensor(rng, c, h, w, -2.0, 2.0)),
                             random_probabilities(rng, c, h * kh, w * kw), Reduction::mean};
        if (rng.bernoulli(0.5)) in.reduction = Reduction::sum;
        if (away_from_kinks(in.fc, in.prob, 1e-3)) return in;
    }
}

LabelVector random_labels(Rng& rng, int c) {
    LabelVector y;
    for (int i = 0; i < c; ++i) y.present.push_back(rng.bernoulli(0.5));
    return y;
}

struct Accumulator {
    GradCheckResult result;
    void add(std::span<const double> analytic, std::span<const double> numeric) {
        result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic, numeric));
        ++result.trials;
    }
    GradCheckResult finish() {
        result.passed = result.max_rel_error <= result.tolerance;
        return result;
    }
};

}  // namespace

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
}

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    require(analytic.size() == numeric.size(), "relative_error: size mismatch");
    double diff = 0.0, scale = kFloor;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
        scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    }
    return diff / scale;
}

std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed, int trials, double step, double tolerance) {
    require(trials > 0, "run_gradient_checks: trials must be positive");
    require(step > 0.0, "run_gradient_checks: step must be positive");
    Rng rng(seed);
    std::vector<GradCheckResult> out;

    {
        Accumulator acc{{"dice_loss d/dpred", 0, 0.0, tolerance, false}};
        for (int t = 0; t < trials; ++t) {
            const int c = static_cast<int>(rng.uniform_int(2, 4));
            const int h = static_cast<int>(rng.uniform_int(2, 5));
            const int w = static_cast<int>(rng.uniform_int(2, 5));
            DiceInputs in{random_probabilities(rng, c, h, w), LabelMask(h, w, 0)};
            for (auto& l : in.target.labels) {
                l = rng.bernoulli(0.15) ? in.target.background : static_cast<std::uint8_t>(rng.uniform_int(0, c - 1));
            }
            const auto analytic = std::get<Tensor3>(loss_gradients(LossId::dice, in));
            const auto numeric =
                numeric_gradient(in.pred.values, [&] { return dice_loss(in.pred, in.target); }, step);
            acc.add(analytic.values, numeric);
        }
        out.push_back(acc.finish());
    }

    {
        Accumulator acc_fc{{"consistency_reg d/dfc", 0, 0.0, tolerance, false}};
        Accumulator acc_prob{{"consistency_reg d/dprob", 0, 0.0, tolerance, false}};
        for (int t = 0; t < trials; ++t) {
            auto in = random_consistency(rng);
            const auto analytic = std::get<ConsistencyGrad>(loss_gradients(LossId::consistency, in));
            const Forward f = [&] { return consistency_reg(in.fc, in.prob, in.reduction); };
            acc_fc.add(analytic.fc.values, numeric_gradient(in.fc.values, f, step));
            acc_prob.add(analytic.prob.values, numeric_gradient(in.prob.values, f, step));
        }
        out.push_back(acc_fc.finish());
        out.push_back(acc_prob.finish());
    }

    {
        Accumulator acc{{"multilabel_soft_margin d/dz", 0, 0.0, tolerance, false}};
        for (int t = 0; t < trials; ++t) {
            const int c = static_cast<int>(rng.uniform_int(1, 6));
            SoftMarginInputs in;
            for (int i = 0; i < c; ++i) in.logits.z.push_back(rng.uniform(-6.0, 6.0));
            in.labels = random_labels(rng, c);
            const auto analytic = std::get<std::vector<double>>(loss_gradients(LossId::soft_margin, in));
            const auto numeric =
                numeric_gradient(in.logits.z, [&] { return multilabel_soft_margin(in.logits, in.labels); }, step);
            acc.add(analytic, numeric);
        }
        out.push_back(acc.finish());
    }

    {
        // Weighted total: seg on pred, reg on (fc, pred-sized prob), cls on pooled fc.
        Accumulator acc{{"total_loss d/dfc", 0, 0.0, tolerance, false}};
        for (int t = 0; t < trials; ++t) {
            auto in = random_consistency(rng);
            const auto labels = random_labels(rng, in.fc.channels);
            const LossWeights weights{rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)};

            const auto reg = consistency_reg_grad(in.fc, in.prob, in.reduction);
            const auto dz = multilabel_soft_margin_grad(classification_logits(in.fc), labels);
            const auto cls = classification_logits_backward(in.fc, dz);
            std::vector<double> analytic(in.fc.values.size());
            for (std::size_t i = 0; i < analytic.size(); ++i) {
                analytic[i] = weights.reg * reg.fc.values[i] + weights.cls * cls.values[i];
            }
            const Forward f = [&] {
                LossTerms terms;
                terms.reg = consistency_reg(in.fc, in.prob, in.reduction);
                terms.cls = multilabel_soft_margin(classification_logits(in.fc), labels);
                return total_loss(terms, weights);
            };
            acc.add(analytic, numeric_gradient(in.fc.values, f, step));
        }
        out.push_back(acc.finish());
    }
    return out;
}

}  // namespace tissuemix::losses
