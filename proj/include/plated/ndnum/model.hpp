#ifndef PLATED_NDNUM_MODEL_HPP
#define PLATED_NDNUM_MODEL_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "plated/error.hpp"
#include "plated/ndnum/init.hpp"
#include "plated/ndnum/lstm.hpp"
#include "plated/ndnum/ops.hpp"
#include "plated/ndnum/params.hpp"
#include "plated/rng.hpp"
#include "plated/tensor.hpp"

namespace plated {

enum class Mode { train, eval };

// One layer of the graph. forward caches whatever backward needs; backward
// consumes the cache, accumulates parameter gradients in the store and
// returns the gradient w.r.t. its input. State is per-layer, so a model must
// not be shared across concurrent training steps.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, Mode mode, Rng& rng) = 0;
    virtual Tensor backward(const Tensor& dout) = 0;
    virtual std::string describe() const = 0;
};

namespace layers {

// Batched wrapper around conv2d: [N,H,W,Cin] -> [N,H,W,Cout].
class Conv2d : public Layer {
public:
    Conv2d(ParamStore& store, const std::string& name, std::size_t cin, std::size_t cout, Rng& rng)
        : kernel_(&store.add(name + ".kernel", he_normal({3, 3, cin, cout}, 9 * cin, rng))),
          bias_(&store.add(name + ".bias", Tensor({cout}))),
          name_(name) {}

    Tensor forward(const Tensor& x, Mode, Rng&) override {
        require(x.rank() == 4, name_ + ": expected [N,H,W,C] input, got " + x.shape_str());
        x_ = x;
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), cin = x.dim(3);
        const std::size_t cout = kernel_->value.dim(3);
        Tensor y({n, h, w, cout});
        for (std::size_t s = 0; s < n; ++s) {
            Tensor xi = slice_sample(x, s, {h, w, cin});
            Tensor yi = conv2d(xi, kernel_->value, bias_->value);
            std::copy_n(yi.data(), yi.size(), y.data() + s * yi.size());
        }
        return y;
    }

    Tensor backward(const Tensor& dout) override {
        const std::size_t n = x_.dim(0), h = x_.dim(1), w = x_.dim(2), cin = x_.dim(3);
        const std::size_t cout = kernel_->value.dim(3);
        Tensor dx(x_.shape());
        for (std::size_t s = 0; s < n; ++s) {
            Tensor xi = slice_sample(x_, s, {h, w, cin});
            Tensor doi = slice_sample(dout, s, {h, w, cout});
            Tensor dxi;
            conv2d_backward(xi, kernel_->value, doi, dxi, kernel_->grad, bias_->grad);
            std::copy_n(dxi.data(), dxi.size(), dx.data() + s * dxi.size());
        }
        return dx;
    }

    std::string describe() const override { return "conv2d " + kernel_->value.shape_str(); }

private:
    static Tensor slice_sample(const Tensor& t, std::size_t s, std::vector<std::size_t> shape) {
        Tensor out(std::move(shape));
        std::copy_n(t.data() + s * out.size(), out.size(), out.data());
        return out;
    }
    Param* kernel_;
    Param* bias_;
    std::string name_;
    Tensor x_;
};

class MaxPool2 : public Layer {
public:
    Tensor forward(const Tensor& x, Mode, Rng&) override {
        require(x.rank() == 4, "maxpool2: expected [N,H,W,C] input, got " + x.shape_str());
        x_ = x;
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        Tensor y({n, h / 2, w / 2, c});
        for (std::size_t s = 0; s < n; ++s) {
            Tensor xi = Tensor({h, w, c});
            std::copy_n(x.data() + s * xi.size(), xi.size(), xi.data());
            Tensor yi = maxpool2(xi);
            std::copy_n(yi.data(), yi.size(), y.data() + s * yi.size());
        }
        return y;
    }

    Tensor backward(const Tensor& dout) override {
        const std::size_t n = x_.dim(0), h = x_.dim(1), w = x_.dim(2), c = x_.dim(3);
        Tensor dx(x_.shape());
        for (std::size_t s = 0; s < n; ++s) {
            Tensor xi({h, w, c});
            std::copy_n(x_.data() + s * xi.size(), xi.size(), xi.data());
            Tensor doi({h / 2, w / 2, c});
            std::copy_n(dout.data() + s * doi.size(), doi.size(), doi.data());
            Tensor dxi = maxpool2_backward(xi, doi);
            std::copy_n(dxi.data(), dxi.size(), dx.data() + s * dxi.size());
        }
        return dx;
    }

    std::string describe() const override { return "maxpool2"; }

private:
    Tensor x_;
};

class Act : public Layer {
public:
    explicit Act(Activation kind) : kind_(kind) {}

    Tensor forward(const Tensor& x, Mode, Rng&) override {
        x_ = x;
        y_ = activation(kind_, x);
        return y_;
    }

    Tensor backward(const Tensor& dout) override { return activation_backward(kind_, x_, y_, dout); }

    std::string describe() const override { return activation_name(kind_); }

private:
    Activation kind_;
    Tensor x_, y_;
};

// Normalizes features over the batch. Accepts [N,F] or [N,H,W,C]; the latter
// treats each channel as a feature with all spatial positions as rows.
class BatchNorm : public Layer {
public:
    BatchNorm(ParamStore& store, const std::string& name, std::size_t features)
        : gamma_(&store.add(name + ".gamma", Tensor({features}, real(1)))),
          beta_(&store.add(name + ".beta", Tensor({features}))),
          mean_(&store.add(name + ".running_mean", Tensor({features}), /*trainable=*/false)),
          var_(&store.add(name + ".running_var", Tensor({features}, real(1)), /*trainable=*/false)) {}

    Tensor forward(const Tensor& x, Mode mode, Rng&) override {
        shape_ = x.shape();
        Tensor rows = as_rows(x);
        Tensor y = mode == Mode::train
                       ? batch_norm_train(rows, gamma_->value, beta_->value, mean_->value, var_->value, cache_)
                       : batch_norm_eval(rows, gamma_->value, beta_->value, mean_->value, var_->value);
        return reshape(std::move(y), shape_);
    }

    Tensor backward(const Tensor& dout) override {
        Tensor rows = as_rows(dout);
        Tensor dx = batch_norm_backward(gamma_->value, cache_, rows, gamma_->grad, beta_->grad);
        return reshape(std::move(dx), shape_);
    }

    std::string describe() const override { return "batch_norm(" + std::to_string(gamma_->value.size()) + ")"; }

private:
    Tensor as_rows(const Tensor& x) const {
        const std::size_t f = x.dim(x.rank() - 1);
        require(f == gamma_->value.size(), "batch_norm: feature dim mismatch");
        Tensor rows({x.size() / f, f});
        std::copy_n(x.data(), x.size(), rows.data());
        return rows;
    }
    static Tensor reshape(Tensor t, const std::vector<std::size_t>& shape) {
        std::vector<real> data(t.data(), t.data() + t.size());
        return Tensor::from(shape, std::move(data));
    }
    Param *gamma_, *beta_, *mean_, *var_;
    BatchNormCache cache_;
    std::vector<std::size_t> shape_;
};

class LayerNorm : public Layer {
public:
    LayerNorm(ParamStore& store, const std::string& name, std::size_t features)
        : gamma_(&store.add(name + ".gamma", Tensor({features}, real(1)))),
          beta_(&store.add(name + ".beta", Tensor({features}))) {}

    Tensor forward(const Tensor& x, Mode, Rng&) override {
        return layer_norm(x, gamma_->value, beta_->value, cache_);
    }

    Tensor backward(const Tensor& dout) override {
        return layer_norm_backward(gamma_->value, cache_, dout, gamma_->grad, beta_->grad);
    }

    std::string describe() const override { return "layer_norm(" + std::to_string(gamma_->value.size()) + ")"; }

private:
    Param *gamma_, *beta_;
    LayerNormCache cache_;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, Mode, Rng&) override {
        require(x.rank() >= 2, "flatten: expected batched input");
        shape_ = x.shape();
        std::vector<real> data(x.data(), x.data() + x.size());
        return Tensor::from({x.dim(0), x.size() / x.dim(0)}, std::move(data));
    }

    Tensor backward(const Tensor& dout) override {
        std::vector<real> data(dout.data(), dout.data() + dout.size());
        return Tensor::from(shape_, std::move(data));
    }

    std::string describe() const override { return "flatten"; }

private:
    std::vector<std::size_t> shape_;
};

// Shared fully-connected map over the last axis; on [N,L,F] inputs this is
// the time-distributed dense of the instruction model.
class Dense : public Layer {
public:
    enum class Init { he, glorot };

    Dense(ParamStore& store, const std::string& name, std::size_t fin, std::size_t fout, Rng& rng,
          Init init = Init::glorot, real l2 = real(0))
        : weight_(&store.add(name + ".W",
                             init == Init::he ? he_normal({fin, fout}, fin, rng)
                                              : glorot_uniform({fin, fout}, fin, fout, rng),
                             true, l2)),
          bias_(&store.add(name + ".b", Tensor({fout}))) {}

    Tensor forward(const Tensor& x, Mode, Rng&) override {
        x_ = x;
        return dense(x, weight_->value, bias_->value);
    }

    Tensor backward(const Tensor& dout) override {
        Tensor dx;
        dense_backward(x_, weight_->value, dout, dx, weight_->grad, bias_->grad);
        return dx;
    }

    std::string describe() const override { return "dense " + weight_->value.shape_str(); }

private:
    Param *weight_, *bias_;
    Tensor x_;
};

class Dropout : public Layer {
public:
    explicit Dropout(double rate) : rate_(rate) {
        require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
    }

    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override {
        if (mode == Mode::eval || rate_ == 0.0) {
            identity_ = true;
            return x;
        }
        identity_ = false;
        return dropout_train(x, rate_, rng, mask_);
    }

    Tensor backward(const Tensor& dout) override {
        if (identity_) return dout;
        return dropout_backward(mask_, dout);
    }

    std::string describe() const override { return "dropout(" + std::to_string(rate_) + ")"; }

    double rate() const { return rate_; }

private:
    double rate_;
    bool identity_ = true;
    Tensor mask_;
};

// Token-id gather: [N,L] ids (stored as reals) -> [N,L,D]. Frozen tables are
// registered non-trainable and skip the gradient scatter.
class Embedding : public Layer {
public:
    Embedding(ParamStore& store, const std::string& name, std::size_t vocab, std::size_t dim,
              Rng& rng, bool frozen = false)
        : table_(&store.add(name + ".table", uniform_init({vocab, dim}, -0.05, 0.05, rng), !frozen)) {}

    Embedding(ParamStore& store, const std::string& name, Tensor pretrained, bool frozen)
        : table_(&store.add(name + ".table", std::move(pretrained), !frozen)) {}

    Tensor forward(const Tensor& x, Mode, Rng&) override {
        require(x.rank() == 2, "embedding: expected [N,L] id input, got " + x.shape_str());
        const std::size_t n = x.dim(0), len = x.dim(1), d = table_->value.dim(1);
        ids_.assign(n, {});
        Tensor y({n, len, d});
        for (std::size_t s = 0; s < n; ++s) {
            ids_[s].resize(len);
            for (std::size_t t = 0; t < len; ++t)
                ids_[s][t] = static_cast<std::size_t>(x.at(s, t));
            Tensor yi = embedding(ids_[s], table_->value);
            std::copy_n(yi.data(), yi.size(), y.data() + s * yi.size());
        }
        return y;
    }

    Tensor backward(const Tensor& dout) override {
        const std::size_t n = dout.dim(0), len = dout.dim(1), d = dout.dim(2);
        if (table_->trainable) {
            for (std::size_t s = 0; s < n; ++s) {
                Tensor doi({len, d});
                std::copy_n(dout.data() + s * doi.size(), doi.size(), doi.data());
                embedding_backward(ids_[s], doi, table_->grad);
            }
        }
        // ids carry no gradient
        return Tensor({n, len});
    }

    std::string describe() const override {
        return std::string(table_->trainable ? "embedding " : "embedding(frozen) ") + table_->value.shape_str();
    }

private:
    Param* table_;
    std::vector<std::vector<std::size_t>> ids_;
};

// (Bi)LSTM over batched sequences: [N,L,D] -> [N,L,U or 2U].
class Lstm : public Layer {
public:
    Lstm(ParamStore& store, const std::string& name, std::size_t input_dim, std::size_t units,
         bool bidirectional, Rng& rng)
        : units_(units), bidirectional_(bidirectional) {
        w_f_ = &store.add(name + ".W", glorot_uniform({input_dim, 4 * units}, input_dim, units, rng));
        r_f_ = &store.add(name + ".R", glorot_uniform({units, 4 * units}, units, units, rng));
        b_f_ = &store.add(name + ".b", forget_bias(units));
        if (bidirectional) {
            w_b_ = &store.add(name + ".bwd.W", glorot_uniform({input_dim, 4 * units}, input_dim, units, rng));
            r_b_ = &store.add(name + ".bwd.R", glorot_uniform({units, 4 * units}, units, units, rng));
            b_b_ = &store.add(name + ".bwd.b", forget_bias(units));
        }
    }

    Tensor forward(const Tensor& x, Mode, Rng&) override {
        require(x.rank() == 3, "lstm: expected [N,L,D] input, got " + x.shape_str());
        x_ = x;
        const std::size_t n = x.dim(0), len = x.dim(1), d = x.dim(2);
        const std::size_t width = bidirectional_ ? 2 * units_ : units_;
        caches_.assign(n, {});
        Tensor y({n, len, width});
        for (std::size_t s = 0; s < n; ++s) {
            Tensor xi({len, d});
            std::copy_n(x.data() + s * xi.size(), xi.size(), xi.data());
            Tensor yi = lstm_sequence(xi, w_f_->value, r_f_->value, b_f_->value,
                                      bidirectional_ ? &w_b_->value : nullptr,
                                      bidirectional_ ? &r_b_->value : nullptr,
                                      bidirectional_ ? &b_b_->value : nullptr, caches_[s]);
            std::copy_n(yi.data(), yi.size(), y.data() + s * yi.size());
        }
        return y;
    }

    Tensor backward(const Tensor& dout) override {
        const std::size_t n = x_.dim(0), len = x_.dim(1), d = x_.dim(2);
        const std::size_t width = bidirectional_ ? 2 * units_ : units_;
        Tensor dx(x_.shape());
        for (std::size_t s = 0; s < n; ++s) {
            Tensor xi({len, d});
            std::copy_n(x_.data() + s * xi.size(), xi.size(), xi.data());
            Tensor doi({len, width});
            std::copy_n(dout.data() + s * doi.size(), doi.size(), doi.data());
            Tensor dxi = lstm_sequence_backward(
                xi, w_f_->value, r_f_->value, bidirectional_ ? &w_b_->value : nullptr,
                bidirectional_ ? &r_b_->value : nullptr, caches_[s], doi, w_f_->grad, r_f_->grad,
                b_f_->grad, bidirectional_ ? &w_b_->grad : nullptr,
                bidirectional_ ? &r_b_->grad : nullptr, bidirectional_ ? &b_b_->grad : nullptr);
            std::copy_n(dxi.data(), dxi.size(), dx.data() + s * dxi.size());
        }
        return dx;
    }

    std::string describe() const override {
        return (bidirectional_ ? "bilstm(" : "lstm(") + std::to_string(units_) + ")";
    }

private:
    static Tensor forget_bias(std::size_t units) {
        Tensor b({4 * units});
        for (std::size_t j = 0; j < units; ++j) b[units + j] = real(1);
        return b;
    }
    std::size_t units_;
    bool bidirectional_;
    Param *w_f_ = nullptr, *r_f_ = nullptr, *b_f_ = nullptr;
    Param *w_b_ = nullptr, *r_b_ = nullptr, *b_b_ = nullptr;
    Tensor x_;
    std::vector<LstmSequenceCache> caches_;
};

}  // namespace layers

// Ordered layer list sharing one parameter store.
class Model {
public:
    Model() = default;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    ParamStore& params() { return *params_; }
    const ParamStore& params() const { return *params_; }

    template <typename L, typename... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    Tensor forward(const Tensor& x, Mode mode, Rng& rng) {
        Tensor cur = x;
        for (auto& layer : layers_) cur = layer->forward(cur, mode, rng);
        return cur;
    }

    // Eval-mode forward; deterministic, no rng consumed.
    Tensor predict(const Tensor& x) {
        Rng dummy(0);
        return forward(x, Mode::eval, dummy);
    }

    Tensor backward(const Tensor& dout) {
        Tensor cur = dout;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
        return cur;
    }

    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

    std::string summary() const {
        std::string s;
        for (const auto& l : layers_) s += l->describe() + "\n";
        return s;
    }

private:
    // unique_ptr keeps Param* in layers valid across moves
    std::unique_ptr<ParamStore> params_ = std::make_unique<ParamStore>();
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace plated

#endif  // PLATED_NDNUM_MODEL_HPP
