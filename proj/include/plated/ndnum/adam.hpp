#ifndef PLATED_NDNUM_ADAM_HPP
#define PLATED_NDNUM_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "plated/error.hpp"
#include "plated/ndnum/params.hpp"
#include "plated/tensor.hpp"

namespace plated {

// Adam with bias correction; step rule w -= lr * m_hat / (sqrt(v_hat) + eps).
// Per-layer L2 (Param::l2) is added to the gradient as l2*w before the
// moment updates. Frozen / non-trainable params are skipped entirely.
class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    double learning_rate() const { return lr_; }
    std::uint64_t step_count() const { return t_; }

    void step(ParamStore& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (auto& [name, p] : params) {
            if (!p.trainable) continue;
            Moments& mom = moments_[name];
            if (mom.m.size() != p.value.size()) {
                mom.m = Tensor(p.value.shape());
                mom.v = Tensor(p.value.shape());
            }
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                double g = p.grad[i];
                if (p.l2 != real(0)) g += static_cast<double>(p.l2) * p.value[i];
                if (!std::isfinite(g))
                    throw Error("adam: non-finite gradient in parameter '" + name + "'");
                const double m = beta1_ * mom.m[i] + (1.0 - beta1_) * g;
                const double v = beta2_ * mom.v[i] + (1.0 - beta2_) * g * g;
                mom.m[i] = static_cast<real>(m);
                mom.v[i] = static_cast<real>(v);
                const double update = lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
                p.value[i] = static_cast<real>(p.value[i] - update);
            }
        }
    }

private:
    struct Moments {
        Tensor m, v;
    };
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::map<std::string, Moments> moments_;
};

}  // namespace plated

#endif  // PLATED_NDNUM_ADAM_HPP
