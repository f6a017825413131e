#ifndef PLATED_METRICS_HPP
#define PLATED_METRICS_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "plated/error.hpp"
#include "plated/ndnum/loss.hpp"
#include "plated/tensor.hpp"

namespace plated {

// Threshold-based multi-label metrics. All of them are sample-averaged:
// one score per row of the [N,K] matrices, then the mean. 0/0 conventions:
// empty-vs-empty counts as a perfect match (1), empty-vs-nonempty as 0 for
// F1 and |intersection|/|union| = 0/|union| for IoU.

struct ThresholdedPrediction {
    Tensor probabilities;  // [N,K] in (0,1)
    double threshold = 0.5;

    ThresholdedPrediction(Tensor probs, double thr) : probabilities(std::move(probs)), threshold(thr) {
        require(probabilities.rank() == 2, "thresholded prediction must be [N,K]");
        require(threshold > 0.0 && threshold < 1.0, "threshold must be in (0,1)");
    }

    // prob >= threshold, inclusive boundary.
    bool positive(std::size_t i, std::size_t k) const {
        return static_cast<double>(probabilities.at(i, k)) >= threshold;
    }
};

namespace detail {
inline void check_truth(const ThresholdedPrediction& pred, const Tensor& truth, const char* who) {
    check_same_shape(pred.probabilities, truth, who);
}
}  // namespace detail

// Mean per-sample Jaccard |intersection| / |union|, with 0/0 := 1.
inline double iou(const ThresholdedPrediction& pred, const Tensor& truth) {
    detail::check_truth(pred, truth, "iou");
    const std::size_t n = truth.dim(0), k = truth.dim(1);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t inter = 0, uni = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const bool p = pred.positive(i, j);
            const bool t = truth.at(i, j) != real(0);
            inter += p && t;
            uni += p || t;
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / n;
}

// Mean per-sample F1 = 2|intersection| / (|P|+|T|); both-empty := 1, one-empty := 0.
inline double f1(const ThresholdedPrediction& pred, const Tensor& truth) {
    detail::check_truth(pred, truth, "f1");
    const std::size_t n = truth.dim(0), k = truth.dim(1);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t inter = 0, np = 0, nt = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const bool p = pred.positive(i, j);
            const bool t = truth.at(i, j) != real(0);
            inter += p && t;
            np += p;
            nt += t;
        }
        if (np == 0 && nt == 0)
            total += 1.0;
        else if (np == 0 || nt == 0)
            total += 0.0;
        else
            total += 2.0 * static_cast<double>(inter) / static_cast<double>(np + nt);
    }
    return total / n;
}

// Element-wise agreement rate of the thresholded matrix.
inline double binary_accuracy(const ThresholdedPrediction& pred, const Tensor& truth) {
    detail::check_truth(pred, truth, "binary_accuracy");
    const std::size_t n = truth.dim(0), k = truth.dim(1);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
            agree += pred.positive(i, j) == (truth.at(i, j) != real(0));
    return static_cast<double>(agree) / static_cast<double>(n * k);
}

// exp(mean over masked positions of -ln p(target)), probabilities clamped at
// 1e-7. Identical accumulation to cce_loss, so perplexity == exp(cce).
inline double perplexity(const Tensor& pred_distributions, const std::vector<std::size_t>& target_ids,
                         const std::vector<unsigned char>* mask = nullptr) {
    require(pred_distributions.rank() >= 1, "perplexity: pred must have rank >= 1");
    const std::size_t v = pred_distributions.dim(pred_distributions.rank() - 1);
    const std::size_t rows = pred_distributions.size() / v;
    require(target_ids.size() == rows, "perplexity: target count does not match pred rows");
    require(mask == nullptr || mask->size() == rows, "perplexity: mask length mismatch");
    double sum = 0;
    std::size_t scored = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (mask && !(*mask)[r]) continue;
        require(target_ids[r] < v, "perplexity: target id out of range");
        const double p = std::min(1.0 - kProbClamp,
                                  std::max(kProbClamp, static_cast<double>(pred_distributions[r * v + target_ids[r]])));
        sum += -std::log(p);
        ++scored;
    }
    require(scored > 0, "perplexity: all positions masked out");
    return std::exp(sum / scored);
}

// Streaming accumulators used by the training loops for whole-split metrics.

struct MultiLabelAccum {
    double iou_sum = 0, f1_sum = 0, acc_sum = 0;
    std::size_t samples = 0;

    void add(const Tensor& probs, const Tensor& truth, double threshold) {
        ThresholdedPrediction tp(probs, threshold);
        const std::size_t n = truth.dim(0);
        iou_sum += iou(tp, truth) * n;
        f1_sum += plated::f1(tp, truth) * n;
        acc_sum += binary_accuracy(tp, truth) * n;
        samples += n;
    }
    double mean_iou() const { return samples ? iou_sum / samples : 0; }
    double mean_f1() const { return samples ? f1_sum / samples : 0; }
    double mean_accuracy() const { return samples ? acc_sum / samples : 0; }
};

struct SequenceAccum {
    double nll_sum = 0;
    std::size_t scored = 0, correct = 0;

    void add(const Tensor& pred, const std::vector<std::size_t>& target_ids,
             const std::vector<unsigned char>& mask) {
        const std::size_t v = pred.dim(pred.rank() - 1);
        const std::size_t rows = pred.size() / v;
        for (std::size_t r = 0; r < rows; ++r) {
            if (!mask[r]) continue;
            const double p = std::min(1.0 - kProbClamp,
                                      std::max(kProbClamp, static_cast<double>(pred[r * v + target_ids[r]])));
            nll_sum += -std::log(p);
            std::size_t best = 0;
            for (std::size_t j = 1; j < v; ++j)
                if (pred[r * v + j] > pred[r * v + best]) best = j;
            correct += best == target_ids[r];
            ++scored;
        }
    }
    double perplexity() const { return scored ? std::exp(nll_sum / scored) : 0; }
    double cross_entropy() const { return scored ? nll_sum / scored : 0; }
    double accuracy() const { return scored ? static_cast<double>(correct) / scored : 0; }
};

}  // namespace plated

#endif  // PLATED_METRICS_HPP
