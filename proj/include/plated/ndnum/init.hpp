#ifndef PLATED_NDNUM_INIT_HPP
#define PLATED_NDNUM_INIT_HPP

#include <cmath>
#include <cstddef>

#include "plated/rng.hpp"
#include "plated/tensor.hpp"

namespace plated {

// He-normal for weights feeding ReLU, Glorot-uniform elsewhere (including
// LSTM kernels), zero biases except the LSTM forget gate (set to 1 by the
// layer itself).

inline Tensor he_normal(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real>(rng.normal() * stddev);
    return t;
}

inline Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                             Rng& rng) {
    Tensor t(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real>(rng.uniform(-limit, limit));
    return t;
}

inline Tensor uniform_init(std::vector<std::size_t> shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real>(rng.uniform(lo, hi));
    return t;
}

}  // namespace plated

#endif  // PLATED_NDNUM_INIT_HPP
