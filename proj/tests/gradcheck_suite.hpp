#ifndef PLATED_TESTS_GRADCHECK_SUITE_HPP
#define PLATED_TESTS_GRADCHECK_SUITE_HPP

// Finite-difference checks for every differentiable op. Each check builds a
// small random instance, computes analytic gradients once, and compares them
// against central differences through the same forward path. Shared by the
// unit tests and the acceptance suite (which runs 20 seeds per op).

#include <cstdint>
#include <functional>
#include <vector>

#include "plated/ndnum.hpp"

namespace gradsuite {

using namespace plated;

inline Tensor rand_t(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real>(rng.uniform(lo, hi));
    return t;
}

// Projection weights kept away from zero so the scalar objective has
// well-scaled gradients (pure f32 forward noise would swamp near-zero ones).
inline Tensor projection(std::vector<std::size_t> shape, Rng& rng) {
    Tensor c(std::move(shape));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double mag = rng.uniform(0.5, 1.5);
        c[i] = static_cast<real>(rng.bernoulli(0.5) ? mag : -mag);
    }
    return c;
}

inline double project(const Tensor& y, const Tensor& c) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * c[i];
    return s;
}

inline double check_dense(std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = rand_t({3, 4}, rng);
    Tensor w = rand_t({4, 2}, rng);
    Tensor b = rand_t({2}, rng);
    Tensor c = projection({3, 2}, rng);
    Tensor dx, dw({4, 2}), db({2});
    dense_backward(x, w, c, dx, dw, db);
    auto loss = [&] { return project(dense(x, w, b), c); };
    return grad_check(loss, {{&x, &dx}, {&w, &dw}, {&b, &db}}, rng);
}

inline double check_conv2d(std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = rand_t({5, 5, 2}, rng);
    Tensor k = rand_t({3, 3, 2, 3}, rng);
    Tensor b = rand_t({3}, rng);
    Tensor c = projection({5, 5, 3}, rng);
    Tensor dx, dk({3, 3, 2, 3}), db({3});
    conv2d_backward(x, k, c, dx, dk, db);
    auto loss = [&] { return project(conv2d(x, k, b), c); };
    return grad_check(loss, {{&x, &dx}, {&k, &dk}, {&b, &db}}, rng);
}

inline double check_maxpool2(std::uint64_t seed) {
    Rng rng(seed);
    // keep window entries separated so the +-1e-3 probe cannot flip an argmax
    Tensor x({6, 6, 2});
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = static_cast<real>(rng.uniform(0, 1) * 0.01 + 0.05 * static_cast<double>(rng.index(40)));
    for (std::size_t bi = 0; bi < 3; ++bi)
        for (std::size_t bj = 0; bj < 3; ++bj)
            for (std::size_t ch = 0; ch < 2; ++ch) {
                real* v[4] = {&x.at(2 * bi, 2 * bj, ch), &x.at(2 * bi, 2 * bj + 1, ch),
                              &x.at(2 * bi + 1, 2 * bj, ch), &x.at(2 * bi + 1, 2 * bj + 1, ch)};
                for (int a = 0; a < 4; ++a)
                    for (int b2 = a + 1; b2 < 4; ++b2)
                        if (std::abs(*v[a] - *v[b2]) < 0.005f) *v[b2] += 0.01f * (b2 + 1);
            }
    Tensor c = projection({3, 3, 2}, rng);
    Tensor dx = maxpool2_backward(x, c);
    auto loss = [&] { return project(maxpool2(x), c); };
    return grad_check(loss, {{&x, &dx}}, rng);
}

inline double check_batch_norm(std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = rand_t({4, 3}, rng, -2, 2);
    Tensor gamma = rand_t({3}, rng, 0.5, 1.5);
    Tensor beta = rand_t({3}, rng);
    Tensor c = projection({4, 3}, rng);
    BatchNormCache cache;
    Tensor rm({3}), rv({3}, real(1));
    {
        Tensor rm2 = rm, rv2 = rv;
        batch_norm_train(x, gamma, beta, rm2, rv2, cache);
    }
    Tensor dgamma({3}), dbeta({3});
    Tensor dx = batch_norm_backward(gamma, cache, c, dgamma, dbeta);
    auto loss = [&] {
        Tensor rm2 = rm, rv2 = rv;  // keep the closure stateless
        BatchNormCache scratch;
        return project(batch_norm_train(x, gamma, beta, rm2, rv2, scratch), c);
    };
    return grad_check(loss, {{&x, &dx}, {&gamma, &dgamma}, {&beta, &dbeta}}, rng);
}

inline double check_layer_norm(std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = rand_t({3, 5}, rng, -2, 2);
    Tensor gamma = rand_t({5}, rng, 0.5, 1.5);
    Tensor beta = rand_t({5}, rng);
    Tensor c = projection({3, 5}, rng);
    LayerNormCache cache;
    layer_norm(x, gamma, beta, cache);
    Tensor dgamma({5}), dbeta({5});
    Tensor dx = layer_norm_backward(gamma, cache, c, dgamma, dbeta);
    auto loss = [&] {
        LayerNormCache scratch;
        return project(layer_norm(x, gamma, beta, scratch), c);
    };
    return grad_check(loss, {{&x, &dx}, {&gamma, &dgamma}, {&beta, &dbeta}}, rng);
}

inline double check_activation(std::uint64_t seed, Activation kind) {
    Rng rng(seed);
    Tensor x = rand_t({4, 5}, rng, -2, 2);
    if (kind == Activation::relu)  // keep probes away from the kink at 0
        for (std::size_t i = 0; i < x.size(); ++i)
            if (std::abs(x[i]) < 0.05f) x[i] += x[i] >= 0 ? 0.06f : -0.06f;
    Tensor c = projection({4, 5}, rng);
    Tensor y = activation(kind, x);
    Tensor dx = activation_backward(kind, x, y, c);
    auto loss = [&] { return project(activation(kind, x), c); };
    return grad_check(loss, {{&x, &dx}}, rng);
}

inline double check_embedding(std::uint64_t seed) {
    Rng rng(seed);
    Tensor table = rand_t({5, 3}, rng);
    std::vector<std::size_t> ids;
    for (int t = 0; t < 4; ++t) ids.push_back(rng.index(5));
    Tensor c = projection({4, 3}, rng);
    Tensor dtable({5, 3});
    embedding_backward(ids, c, dtable);
    auto loss = [&] { return project(embedding(ids, table), c); };
    return grad_check(loss, {{&table, &dtable}}, rng);
}

inline double check_lstm(std::uint64_t seed, bool bidirectional) {
    Rng rng(seed);
    const std::size_t len = 3, d = 2, u = 2;
    Tensor seq = rand_t({len, d}, rng);
    Tensor wf = rand_t({d, 4 * u}, rng);
    Tensor rf = rand_t({u, 4 * u}, rng);
    Tensor bf = rand_t({4 * u}, rng);
    Tensor wb = rand_t({d, 4 * u}, rng);
    Tensor rb = rand_t({u, 4 * u}, rng);
    Tensor bb = rand_t({4 * u}, rng);
    Tensor c = projection({len, bidirectional ? 2 * u : u}, rng);
    LstmSequenceCache cache;
    lstm_sequence(seq, wf, rf, bf, bidirectional ? &wb : nullptr, bidirectional ? &rb : nullptr,
                  bidirectional ? &bb : nullptr, cache);
    Tensor dwf({d, 4 * u}), drf({u, 4 * u}), dbf({4 * u});
    Tensor dwb({d, 4 * u}), drb({u, 4 * u}), dbb({4 * u});
    Tensor dseq = lstm_sequence_backward(seq, wf, rf, bidirectional ? &wb : nullptr,
                                         bidirectional ? &rb : nullptr, cache, c, dwf, drf, dbf,
                                         bidirectional ? &dwb : nullptr, bidirectional ? &drb : nullptr,
                                         bidirectional ? &dbb : nullptr);
    auto loss = [&] {
        LstmSequenceCache scratch;
        return project(lstm_sequence(seq, wf, rf, bf, bidirectional ? &wb : nullptr,
                                     bidirectional ? &rb : nullptr, bidirectional ? &bb : nullptr,
                                     scratch),
                       c);
    };
    std::vector<GradCheckTarget> targets = {
        {&seq, &dseq}, {&wf, &dwf}, {&rf, &drf}, {&bf, &dbf}};
    if (bidirectional) {
        targets.push_back({&wb, &dwb});
        targets.push_back({&rb, &drb});
        targets.push_back({&bb, &dbb});
    }
    return grad_check(loss, targets, rng);
}

inline double check_bce(std::uint64_t seed) {
    Rng rng(seed);
    Tensor pred = rand_t({3, 4}, rng, 0.1, 0.9);  // away from the clamp
    Tensor target({3, 4});
    for (std::size_t i = 0; i < target.size(); ++i) target[i] = rng.bernoulli(0.5) ? real(1) : real(0);
    LossResult r = bce_loss(pred, target);
    auto loss = [&] { return bce_loss(pred, target).value; };
    return grad_check(loss, {{&pred, &r.grad}}, rng);
}

inline double check_cce(std::uint64_t seed) {
    Rng rng(seed);
    Tensor logits = rand_t({4, 5}, rng, -1, 1);
    Tensor pred = activation(Activation::softmax, logits);
    std::vector<std::size_t> ids;
    std::vector<unsigned char> mask;
    for (int t = 0; t < 4; ++t) {
        ids.push_back(rng.index(5));
        mask.push_back(t < 2 || rng.bernoulli(0.7));
    }
    LossResult r = cce_loss_ids(pred, ids, &mask);
    auto loss = [&] { return cce_loss_ids(pred, ids, &mask).value; };
    return grad_check(loss, {{&pred, &r.grad}}, rng);
}

struct OpCheck {
    const char* name;
    std::function<double(std::uint64_t)> run;
};

inline std::vector<OpCheck> all_checks() {
    return {
        {"dense", check_dense},
        {"conv2d", check_conv2d},
        {"maxpool2", check_maxpool2},
        {"batch_norm", check_batch_norm},
        {"layer_norm", check_layer_norm},
        {"relu", [](std::uint64_t s) { return check_activation(s, Activation::relu); }},
        {"sigmoid", [](std::uint64_t s) { return check_activation(s, Activation::sigmoid); }},
        {"tanh", [](std::uint64_t s) { return check_activation(s, Activation::tanh); }},
        {"softmax", [](std::uint64_t s) { return check_activation(s, Activation::softmax); }},
        {"embedding", check_embedding},
        {"lstm", [](std::uint64_t s) { return check_lstm(s, false); }},
        {"bilstm", [](std::uint64_t s) { return check_lstm(s, true); }},
        {"bce", check_bce},
        {"cce", check_cce},
    };
}

}  // namespace gradsuite

#endif  // PLATED_TESTS_GRADCHECK_SUITE_HPP
