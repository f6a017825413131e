#ifndef PLATED_TENSOR_HPP
#define PLATED_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "plated/error.hpp"

namespace plated {

#ifdef PLATED_REAL64
using real = double;  // wide mode, used only for tighter gradient checks
#else
using real = float;
#endif

// Dense row-major n-d array of `real`. The single numeric currency between
// layers; value semantics, movable, no views.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, real fill = real(0))
        : shape_(std::move(shape)), data_(checked_volume(shape_), fill) {}

    static Tensor from(std::vector<std::size_t> shape, std::vector<real> values) {
        Tensor t;
        t.shape_ = std::move(shape);
        require(values.size() == checked_volume(t.shape_),
                "tensor data length " + std::to_string(values.size()) +
                    " does not match shape volume " + std::to_string(checked_volume(t.shape_)));
        t.data_ = std::move(values);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }
    real& operator[](std::size_t i) { return data_[i]; }
    real operator[](std::size_t i) const { return data_[i]; }

    template <typename... Ix>
    real& at(Ix... ix) { return data_[offset({static_cast<std::size_t>(ix)...})]; }
    template <typename... Ix>
    real at(Ix... ix) const { return data_[offset({static_cast<std::size_t>(ix)...})]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(real v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (real v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
        os << ']';
        return os.str();
    }

private:
    static std::size_t checked_volume(const std::vector<std::size_t>& shape) {
        std::size_t v = 1;
        for (std::size_t d : shape) {
            require(d > 0, "tensor dimensions must be positive");
            v *= d;
        }
        return v;
    }

    std::size_t offset(std::initializer_list<std::size_t> ix) const {
        std::size_t off = 0, axis = 0;
        for (std::size_t i : ix) {
            off = off * shape_[axis] + i;
            ++axis;
        }
        return off;
    }

    std::vector<std::size_t> shape_;
    std::vector<real> data_;
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    require(a.same_shape(b), std::string(who) + ": shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace plated

#endif  // PLATED_TENSOR_HPP
