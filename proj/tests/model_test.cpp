#include <gtest/gtest.h>

#include "plated/ndnum.hpp"
#include "test_util.hpp"

using namespace plated;

static Model tiny_cnn(std::size_t labels, std::uint64_t seed) {
    Rng init(seed);
    Model m;
    m.add<layers::Conv2d>(m.params(), "block0.conv", 3, 4, init);
    m.add<layers::Act>(Activation::relu);
    m.add<layers::BatchNorm>(m.params(), "block0.bn", 4);
    m.add<layers::MaxPool2>();
    m.add<layers::Flatten>();
    m.add<layers::Dense>(m.params(), "hidden", 4 * 4 * 4, 8, init, layers::Dense::Init::he);
    m.add<layers::Act>(Activation::relu);
    m.add<layers::Dense>(m.params(), "out", 8, labels, init);
    m.add<layers::Act>(Activation::sigmoid);
    return m;
}

TEST(Model, ForwardShapeAndRange) {
    Model m = tiny_cnn(5, 1);
    Rng rng(2);
    Tensor x = testutil::random_tensor({3, 8, 8, 3}, rng, 0, 1);
    Tensor y = m.predict(x);
    ASSERT_EQ(y.shape(), (std::vector<std::size_t>{3, 5}));
    for (std::size_t i = 0; i < y.size(); ++i) {
        EXPECT_GT(y[i], 0.0f);
        EXPECT_LT(y[i], 1.0f);
    }
}

TEST(Model, EvalModeIsDeterministic) {
    Model m = tiny_cnn(4, 3);
    Rng rng(4);
    Tensor x = testutil::random_tensor({2, 8, 8, 3}, rng, 0, 1);
    Tensor y1 = m.predict(x);
    Tensor y2 = m.predict(x);
    for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_EQ(y1[i], y2[i]);
}

TEST(Model, BatchPermutationEquivariance) {
    Model m = tiny_cnn(4, 5);
    Rng rng(6);
    const std::size_t n = 4;
    Tensor x = testutil::random_tensor({n, 8, 8, 3}, rng, 0, 1);
    Tensor y = m.predict(x);

    // reverse the batch
    const std::size_t stride = x.size() / n;
    Tensor xr(x.shape());
    for (std::size_t s = 0; s < n; ++s)
        std::copy_n(x.data() + s * stride, stride, xr.data() + (n - 1 - s) * stride);
    Tensor yr = m.predict(xr);
    const std::size_t ostride = y.size() / n;
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < ostride; ++j)
            EXPECT_EQ(y[s * ostride + j], yr[(n - 1 - s) * ostride + j]);
}

TEST(Model, TrainingStepChangesOnlyTrainableParams) {
    Rng init(7);
    Model m;
    Tensor pretrained = testutil::random_tensor({6, 3}, init);
    m.add<layers::Embedding>(m.params(), "embed", pretrained, /*frozen=*/true);
    m.add<layers::Lstm>(m.params(), "lstm", 3, 2, false, init);
    m.add<layers::Dense>(m.params(), "proj", 2, 4, init);
    m.add<layers::Act>(Activation::softmax);

    Tensor before = m.params().at("embed.table").value;
    Tensor dense_before = m.params().at("proj.W").value;

    Tensor ids = Tensor::from({1, 3}, {1, 2, 5});
    Rng rng(0);
    m.params().zero_grads();
    Tensor out = m.forward(ids, Mode::train, rng);
    LossResult loss = cce_loss_ids(out, {0, 1, 2});
    m.backward(loss.grad);
    Adam opt(0.05);
    opt.step(m.params());

    const Tensor& after = m.params().at("embed.table").value;
    for (std::size_t i = 0; i < after.size(); ++i) EXPECT_EQ(after[i], before[i]);  // bitwise frozen

    bool changed = false;
    const Tensor& dense_after = m.params().at("proj.W").value;
    for (std::size_t i = 0; i < dense_after.size(); ++i)
        if (dense_after[i] != dense_before[i]) changed = true;
    EXPECT_TRUE(changed);
}

TEST(Model, UnfrozenEmbeddingLearns) {
    Rng init(8);
    Model m;
    m.add<layers::Embedding>(m.params(), "embed", 6, 3, init, /*frozen=*/false);
    m.add<layers::Dense>(m.params(), "proj", 3, 4, init);
    m.add<layers::Act>(Activation::softmax);
    Tensor before = m.params().at("embed.table").value;

    Tensor ids = Tensor::from({1, 2}, {1, 4});
    Rng rng(0);
    m.params().zero_grads();
    Tensor out = m.forward(ids, Mode::train, rng);
    LossResult loss = cce_loss_ids(out, {0, 1});
    m.backward(loss.grad);
    Adam opt(0.05);
    opt.step(m.params());

    bool row_changed = false;
    for (std::size_t j = 0; j < 3; ++j)
        if (m.params().at("embed.table").value.at(1, j) != before.at(1, j)) row_changed = true;
    EXPECT_TRUE(row_changed);
    // untouched rows keep their values (gradient only lands on gathered ids)
    for (std::size_t j = 0; j < 3; ++j)
        EXPECT_EQ(m.params().at("embed.table").value.at(0, j), before.at(0, j));
}

TEST(Model, CheckpointRestoresPredictions) {
    testutil::TempDir tmp("model_ckpt");
    Model m = tiny_cnn(3, 11);
    Rng rng(12);
    Tensor x = testutil::random_tensor({2, 8, 8, 3}, rng, 0, 1);

    // push the params away from init with one train step
    Tensor target({2, 3});
    target.at(0, 0) = 1;
    Rng trng(0);
    m.params().zero_grads();
    Tensor out = m.forward(x, Mode::train, trng);
    m.backward(bce_loss(out, target).grad);
    Adam opt(0.01);
    opt.step(m.params());

    Tensor y = m.predict(x);
    save_checkpoint(m.params(), tmp.path("m.pltd"));

    Model fresh = tiny_cnn(3, 99);  // different init seed
    load_checkpoint(fresh.params(), tmp.path("m.pltd"));
    Tensor y2 = fresh.predict(x);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], y2[i]);
}

TEST(Model, DropoutTrainEvalContract) {
    Model m;
    m.add<layers::Dropout>(0.5);
    Rng rng(13);
    Tensor x({1, 1000}, 1.0f);
    Tensor eval_out = m.predict(x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(eval_out[i], 1.0f);
    Rng trng(14);
    Tensor train_out = m.forward(x, Mode::train, trng);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < train_out.size(); ++i) zeros += train_out[i] == 0.0f;
    EXPECT_GT(zeros, 400u);
    EXPECT_LT(zeros, 600u);
}
