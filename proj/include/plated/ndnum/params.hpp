#ifndef PLATED_NDNUM_PARAMS_HPP
#define PLATED_NDNUM_PARAMS_HPP

#include <map>
#include <string>
#include <utility>

#include "plated/error.hpp"
#include "plated/tensor.hpp"

namespace plated {

// One named learnable array: value + accumulated gradient of the same shape.
// `trainable=false` entries (frozen embeddings, batch-norm running stats)
// are checkpointed but never touched by the optimizer.
struct Param {
    Tensor value;
    Tensor grad;
    bool trainable = true;
    real l2 = real(0);  // weight decay coefficient, added to grad before the step
};

// Name-ordered parameter registry. std::map keeps iteration order (and thus
// optimizer updates and checkpoints) deterministic, and node stability lets
// layers hold Param* across inserts.
class ParamStore {
public:
    Param& add(const std::string& name, Tensor init, bool trainable = true, real l2 = real(0)) {
        require(items_.find(name) == items_.end(), "duplicate parameter name: " + name);
        Param p;
        p.grad = Tensor(init.shape());
        p.value = std::move(init);
        p.trainable = trainable;
        p.l2 = l2;
        return items_.emplace(name, std::move(p)).first->second;
    }

    Param& at(const std::string& name) {
        auto it = items_.find(name);
        require(it != items_.end(), "unknown parameter: " + name);
        return it->second;
    }
    const Param& at(const std::string& name) const {
        auto it = items_.find(name);
        require(it != items_.end(), "unknown parameter: " + name);
        return it->second;
    }

    bool contains(const std::string& name) const { return items_.count(name) != 0; }
    std::size_t count() const { return items_.size(); }

    void zero_grads() {
        for (auto& [name, p] : items_) p.grad.fill(real(0));
    }

    // Deep copy of all values (for best-epoch snapshots).
    std::map<std::string, Tensor> snapshot_values() const {
        std::map<std::string, Tensor> out;
        for (const auto& [name, p] : items_) out.emplace(name, p.value);
        return out;
    }

    void restore_values(const std::map<std::string, Tensor>& snap) {
        for (const auto& [name, value] : snap) {
            Param& p = at(name);
            check_same_shape(p.value, value, "restore_values");
            p.value = value;
        }
    }

    std::size_t scalar_count(bool trainable_only = true) const {
        std::size_t n = 0;
        for (const auto& [name, p] : items_)
            if (!trainable_only || p.trainable) n += p.value.size();
        return n;
    }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::map<std::string, Param> items_;
};

}  // namespace plated

#endif  // PLATED_NDNUM_PARAMS_HPP
