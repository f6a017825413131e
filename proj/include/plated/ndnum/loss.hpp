#ifndef PLATED_NDNUM_LOSS_HPP
#define PLATED_NDNUM_LOSS_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "plated/error.hpp"
#include "plated/tensor.hpp"

namespace plated {

inline constexpr double kProbClamp = 1e-7;

struct LossResult {
    double value = 0;
    Tensor grad;  // d loss / d pred, same shape as pred
};

// Binary cross-entropy, mean over all elements. pred in (0,1) elementwise,
// target in {0,1}. Probabilities are clamped to [1e-7, 1-1e-7] before the log;
// the gradient is evaluated at the clamped value.
inline LossResult bce_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "bce_loss");
    const std::size_t m = pred.size();
    require(m > 0, "bce_loss: empty input");
    LossResult out;
    out.grad = Tensor(pred.shape());
    double sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double p = std::min(1.0 - kProbClamp, std::max(kProbClamp, static_cast<double>(pred[i])));
        const double t = target[i];
        sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        out.grad[i] = static_cast<real>((-t / p + (1.0 - t) / (1.0 - p)) / m);
    }
    out.value = sum / m;
    return out;
}

// Categorical cross-entropy over distributions. pred [..,V] rows are
// probability distributions, target_ids gives the true class per row, mask
// (optional) selects scored rows; the mean runs over unmasked rows only.
inline LossResult cce_loss_ids(const Tensor& pred, const std::vector<std::size_t>& target_ids,
                               const std::vector<unsigned char>* mask = nullptr) {
    require(pred.rank() >= 1, "cce_loss: pred must have rank >= 1");
    const std::size_t v = pred.dim(pred.rank() - 1);
    const std::size_t rows = pred.size() / v;
    require(target_ids.size() == rows, "cce_loss: target count does not match pred rows");
    require(mask == nullptr || mask->size() == rows, "cce_loss: mask length does not match pred rows");
    std::size_t scored = 0;
    for (std::size_t r = 0; r < rows; ++r)
        if (!mask || (*mask)[r]) ++scored;
    require(scored > 0, "cce_loss: all positions masked out");
    LossResult out;
    out.grad = Tensor(pred.shape());
    double sum = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (mask && !(*mask)[r]) continue;
        require(target_ids[r] < v, "cce_loss: target id out of range");
        const double p = std::min(1.0 - kProbClamp,
                                  std::max(kProbClamp, static_cast<double>(pred[r * v + target_ids[r]])));
        sum += -std::log(p);
        out.grad[r * v + target_ids[r]] = static_cast<real>(-1.0 / (p * scored));
    }
    out.value = sum / scored;
    return out;
}

// One-hot flavour of the same loss. Validates one row == one class.
inline LossResult cce_loss(const Tensor& pred, const Tensor& target_onehot,
                           const std::vector<unsigned char>* mask = nullptr) {
    check_same_shape(pred, target_onehot, "cce_loss");
    const std::size_t v = pred.dim(pred.rank() - 1);
    const std::size_t rows = pred.size() / v;
    std::vector<std::size_t> ids(rows, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t hot = v;
        for (std::size_t j = 0; j < v; ++j) {
            if (target_onehot[r * v + j] == real(1)) {
                require(hot == v, "cce_loss: target row has more than one hot entry");
                hot = j;
            } else {
                require(target_onehot[r * v + j] == real(0), "cce_loss: target rows must be one-hot");
            }
        }
        require(hot < v, "cce_loss: target row has no hot entry");
        ids[r] = hot;
    }
    return cce_loss_ids(pred, ids, mask);
}

enum class LossKind { bce, cce };

}  // namespace plated

#endif  // PLATED_NDNUM_LOSS_HPP
