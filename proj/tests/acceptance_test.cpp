// Acceptance suite: one test per shipping criterion, each printing a single
// PASS/FAIL line. Tolerances and thresholds are pinned here, in code.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "gradcheck_suite.hpp"
#include "plated/corpus.hpp"
#include "plated/lab.hpp"
#include "plated/lang.hpp"
#include "plated/metrics.hpp"
#include "plated/ndnum.hpp"
#include "plated/normalize.hpp"
#include "plated/vision.hpp"
#include "test_util.hpp"

using namespace plated;

namespace {

void report(int criterion, bool pass, const std::string& what) {
    std::cout << "[criterion " << criterion << "] " << (pass ? "PASS" : "FAIL") << " " << what
              << std::endl;
    EXPECT_TRUE(pass) << "criterion " << criterion << ": " << what;
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

// 1. Gradient fidelity: max relative FD error <= 1e-2 (32-bit) for every
//    layer type and both losses, 20 seeds each, in under 2 minutes.
TEST(Acceptance, C1_GradientFidelity) {
    const double t0 = now_seconds();
    double worst = 0;
    std::string worst_op;
    for (const auto& check : gradsuite::all_checks()) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const double err = check.run(seed);
            if (err > worst) {
                worst = err;
                worst_op = check.name;
            }
        }
    }
    const double elapsed = now_seconds() - t0;
    const bool pass = worst <= 1e-2 && elapsed < 120.0;
    report(1, pass,
           "gradient checks: worst rel err " + std::to_string(worst) + " (" + worst_op + "), " +
               std::to_string(elapsed) + "s");
}

// 2. Metric oracle equivalence on 1,000 random pairs, plus Jaccard <= Dice.
TEST(Acceptance, C2_MetricOracleEquivalence) {
    Rng rng(2024);
    const std::size_t n = 1000, k = 12;
    Tensor probs({n, k});
    Tensor truth({n, k});
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = static_cast<real>(rng.uniform(0.001, 0.999));
        truth[i] = rng.bernoulli(0.3) ? 1.0f : 0.0f;
    }
    ThresholdedPrediction tp(probs, 0.5);

    // independent set-arithmetic oracle, sample by sample
    double iou_sum = 0, f1_sum = 0;
    std::size_t agree = 0;
    bool jaccard_le_dice = true;
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::size_t> p, t;
        for (std::size_t j = 0; j < k; ++j) {
            if (static_cast<double>(probs.at(i, j)) >= 0.5) p.insert(j);
            if (truth.at(i, j) != 0.0f) t.insert(j);
            agree += (static_cast<double>(probs.at(i, j)) >= 0.5) == (truth.at(i, j) != 0.0f);
        }
        std::set<std::size_t> inter;
        std::set_intersection(p.begin(), p.end(), t.begin(), t.end(),
                              std::inserter(inter, inter.begin()));
        const std::size_t uni = p.size() + t.size() - inter.size();
        const double sample_iou = uni == 0 ? 1.0 : static_cast<double>(inter.size()) / uni;
        double sample_f1;
        if (p.empty() && t.empty())
            sample_f1 = 1.0;
        else if (p.empty() || t.empty())
            sample_f1 = 0.0;
        else
            sample_f1 = 2.0 * static_cast<double>(inter.size()) / static_cast<double>(p.size() + t.size());
        iou_sum += sample_iou;
        f1_sum += sample_f1;
        jaccard_le_dice &= sample_iou <= sample_f1 + 1e-15;
    }
    const double iou_err = std::abs(iou(tp, truth) - iou_sum / n);
    const double f1_err = std::abs(f1(tp, truth) - f1_sum / n);
    const double acc_err = std::abs(binary_accuracy(tp, truth) - static_cast<double>(agree) / (n * k));
    const bool pass = iou_err <= 1e-12 && f1_err <= 1e-12 && acc_err <= 1e-12 && jaccard_le_dice;
    report(2, pass,
           "metrics vs set oracle on 1000 samples: errs " + std::to_string(iou_err) + "/" +
               std::to_string(f1_err) + "/" + std::to_string(acc_err) + ", Jaccard<=Dice " +
               (jaccard_le_dice ? "holds" : "violated"));
}

// 3. Perplexity identities: uniform predictor == V; perplexity == exp(CCE).
TEST(Acceptance, C3_PerplexityIdentities) {
    bool uniform_ok = true;
    for (std::size_t v : {10u, 100u, 1000u}) {
        Tensor pred({7, v}, static_cast<real>(1.0 / v));
        std::vector<std::size_t> ids(7, v - 1);
        const double p = perplexity(pred, ids);
        uniform_ok &= std::abs(p - static_cast<double>(v)) <= 1e-3 * v;
    }
    bool exp_ok = true;
    Rng rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 2 + rng.index(6), v = 3 + rng.index(9);
        Tensor logits({rows, v});
        for (std::size_t i = 0; i < logits.size(); ++i)
            logits[i] = static_cast<real>(rng.uniform(-3, 3));
        Tensor pred = activation(Activation::softmax, logits);
        std::vector<std::size_t> ids;
        std::vector<unsigned char> mask;
        bool any = false;
        for (std::size_t r = 0; r < rows; ++r) {
            ids.push_back(rng.index(v));
            mask.push_back(rng.bernoulli(0.7));
            any |= mask.back();
        }
        if (!any) mask[0] = 1;
        const double ppl = perplexity(pred, ids, &mask);
        const double ce = cce_loss_ids(pred, ids, &mask).value;
        exp_ok &= std::abs(ppl - std::exp(ce)) <= 1e-6 * ppl;
    }
    report(3, uniform_ok && exp_ok, "uniform-predictor perplexity == V and perplexity == exp(masked CCE)");
}

// 4. Normalization golden corpus: every documented cleaning example.
TEST(Acceptance, C4_NormalizationGoldenCorpus) {
    const RuleSet rules = RuleSet::defaults();
    bool ok = true;
    auto expect = [&](const std::string& raw, const std::string& want) {
        const std::string got = clean_phrase(raw, rules);
        if (got != want) {
            ok = false;
            std::cout << "  golden miss: '" << raw << "' -> '" << got << "', want '" << want << "'\n";
        }
    };
    expect("1 pound bananas", "banana");
    expect("2 cups bananas", "banana");
    expect("carrots", "carrot");
    expect("freshly grated cheese", "grated cheese");
    expect("creamy peanut butter", "peanut butter");
    expect("superfine sugar", "sugar");
    expect("red peppers", "red pepper");
    expect("2 glass jars", "");
    expect("1 skillet", "");

    auto merged = merge_vocabulary({"finely grated cheese", "coarsely grated cheese"});
    if (merged.at("finely grated cheese") != "grated cheese" ||
        merged.at("coarsely grated cheese") != "grated cheese") {
        ok = false;
        std::cout << "  golden miss: grated cheese merge\n";
    }
    report(4, ok, "every documented cleaning/merging example reproduces exactly");
}

// 5. Stage-1 overfit: 2-block CNN on 8 synthetic 32x32 images with 5 labels
//    reaches train IoU >= 0.95 within 200 epochs in under 5 minutes.
TEST(Acceptance, C5_Stage1Overfit) {
    const double t0 = now_seconds();
    Rng rng(42);
    std::vector<Tensor> images;
    Tensor targets({8, 5});
    for (std::size_t s = 0; s < 8; ++s) {
        Tensor img({32, 32, 3});
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<real>(rng.uniform(0, 1));
        for (std::size_t k = 0; k < 5; ++k) {
            const bool on = rng.bernoulli(0.5);
            targets.at(s, k) = on ? 1.0f : 0.0f;
            if (on)  // signal patch per positive label
                for (std::size_t i = 0; i < 4; ++i)
                    for (std::size_t j = 0; j < 4; ++j) img.at(2 + 5 * k, 2 + j, k % 3) = 1.0f;
        }
        images.push_back(std::move(img));
    }
    Stage1Data data;
    data.inputs = std::make_shared<TensorListSource>(images);
    data.targets = targets;

    CnnConfig cfg;
    cfg.blocks = 2;
    cfg.labels = 5;
    cfg.input_size = 32;
    Rng init(1);
    Model model = build_custom_cnn(cfg, init);
    TrainConfig tcfg;
    tcfg.batch_size = 8;
    tcfg.learning_rate = 1e-3;
    tcfg.max_epochs = 200;  // overfit check lifts the default 25-epoch cap
    tcfg.patience = 10;     // train==val here, so saturation stops the loop
    tcfg.seed = 7;
    AugmentPolicy off;
    RunRecord rec = train_ingredient_model(model, data, data, tcfg, off, "");

    double best_train_iou = 0;
    for (const EpochRow& row : rec.epochs) best_train_iou = std::max(best_train_iou, row.train_metric);
    const double elapsed = now_seconds() - t0;
    const bool pass = best_train_iou >= 0.95 && rec.epochs.size() <= 200 && elapsed < 300.0;
    report(5, pass,
           "2-block CNN overfit: train IoU " + std::to_string(best_train_iou) + " in " +
               std::to_string(rec.epochs.size()) + " epochs, " + std::to_string(elapsed) + "s");
}

// 6. Transfer head on 200 linearly separable 16-dim feature vectors with 10
//    labels reaches val IoU >= 0.9 within 50 epochs, end to end from a
//    feature file.
TEST(Acceptance, C6_TransferHeadSeparable) {
    testutil::TempDir tmp("acc6");
    Rng wrng(60);
    const std::size_t dim = 16, k = 10, n = 200;
    Tensor w({dim, k});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<real>(wrng.uniform(-1, 1));

    FeatureTable table;
    table.dim = dim;
    std::vector<Recipe> recipes;
    Rng rng(61);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<real> x(dim);
        std::vector<std::string> labels;
        for (;;) {
            labels.clear();
            for (std::size_t i = 0; i < dim; ++i) x[i] = static_cast<real>(rng.uniform(-1, 1));
            bool separated = true;
            for (std::size_t j = 0; j < k; ++j) {
                double z = 0;
                for (std::size_t i = 0; i < dim; ++i) z += static_cast<double>(x[i]) * w.at(i, j);
                if (std::abs(z) < 0.3) separated = false;
                if (z > 0) labels.push_back("ingredient" + std::to_string(j));
            }
            if (separated && !labels.empty()) break;
        }
        Recipe r;
        r.id = s;
        r.title = "Sample " + std::to_string(s);
        r.ingredients_raw = labels;
        r.cleaned_ingredients = labels;
        r.instructions = "synthetic";
        r.image_name = "img_" + std::to_string(s);
        table.rows[r.image_name] = x;
        recipes.push_back(std::move(r));
    }
    save_features(table, tmp.path("features.csv"));

    // frozen-extractor path end to end: file -> table -> dataset -> head
    auto loaded = std::make_shared<FeatureTable>(load_features(tmp.path("features.csv")));
    SplitSet split_set = split(recipes, 3);
    std::vector<std::string> vocab_phrases;
    for (const Recipe& r : split_set.train)
        for (const std::string& p : r.cleaned_ingredients) vocab_phrases.push_back(p);
    VocabPipeline pipeline = build_pipeline(vocab_phrases, RuleSet::defaults(), 1.0, k);
    Stage1Data train = make_feature_dataset(split_set.train, loaded, pipeline, true);
    Stage1Data val = make_feature_dataset(split_set.val, loaded, pipeline, false);

    Rng init(5);
    Model model = build_transfer_head(loaded->dim, pipeline.vocab.size(), 0.0, init);
    TrainConfig tcfg;
    tcfg.batch_size = 32;
    tcfg.learning_rate = 0.05;
    tcfg.max_epochs = 50;
    tcfg.patience = 50;
    tcfg.seed = 11;
    AugmentPolicy off;
    RunRecord rec = train_ingredient_model(model, train, val, tcfg, off, tmp.path("head.pltd"));
    const bool pass = rec.best_value >= 0.9 && rec.epochs.size() <= 50;
    report(6, pass,
           "transfer head from feature file: val IoU " + std::to_string(rec.best_value) + " in " +
               std::to_string(rec.epochs.size()) + " epochs");
}

// 7. Stage-2 memorization: frozen-GloVe bidirectional model memorizes 4
//    pairs (train perplexity < 1.1), regenerates them exactly, and leaves
//    the embedding matrix bitwise unchanged.
TEST(Acceptance, C7_Stage2Memorization) {
    testutil::TempDir tmp("acc7");
    const std::vector<std::string> ingredients = {
        "chicken salt pepper", "flour butter sugar", "tomato basil garlic", "rice beans lime"};
    const std::vector<std::string> instructions = {
        "roast the chicken until golden", "cream butter with sugar slowly",
        "simmer sauce then add basil", "boil rice then fold beans"};
    Tokenizer ingr_tok = Tokenizer::fit(ingredients);
    Tokenizer instr_tok = Tokenizer::fit(instructions);
    const std::size_t pad_len = 7;  // START + 5 words + END: every position scored

    std::ostringstream glove;
    Rng grng(70);
    for (std::size_t id = 4; id < ingr_tok.size(); ++id) {
        glove << ingr_tok.word(static_cast<int>(id));
        for (int d = 0; d < 8; ++d) glove << ' ' << grng.uniform(-0.5, 0.5);
        glove << '\n';
    }
    testutil::write_file(tmp.path("glove.txt"), glove.str());
    EmbeddingMatrix em = load_glove(tmp.path("glove.txt"), ingr_tok, 8);
    em.frozen = true;
    Tensor before = em.weights;

    std::vector<TokenSequence> in_seqs, out_seqs;
    for (std::size_t i = 0; i < 4; ++i) {
        in_seqs.push_back(encode_pad(ingr_tok, ingredients[i], pad_len));
        out_seqs.push_back(encode_pad(instr_tok, instructions[i], pad_len));
    }

    InstrModelConfig cfg;
    cfg.units = 24;
    cfg.bidirectional = true;
    cfg.use_pretrained = true;
    cfg.embed_dim = 8;
    Rng init(4);
    Model model = build_instruction_model(cfg, ingr_tok.size(), instr_tok.size(), &em, init);
    BatchGenerator data(in_seqs, out_seqs, 4, 3);
    InstrTrainConfig tcfg;
    tcfg.learning_rate = 1e-2;
    tcfg.batch_size = 4;
    tcfg.max_epochs = 500;  // memorization check lifts the 25-epoch cap
    tcfg.patience = 500;
    RunRecord rec = train_instruction_model(model, data, data, tcfg, "");

    const double train_ppl = rec.epochs.back().train_metric;
    bool regenerated = true;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto words = generate(model, in_seqs[i], instr_tok);
        if (words != Tokenizer::split_words(instructions[i])) regenerated = false;
    }
    bool frozen_intact = true;
    const Tensor& table = model.params().at("embed.table").value;
    for (std::size_t i = 0; i < table.size(); ++i) frozen_intact &= table[i] == before[i];

    const bool pass = train_ppl < 1.1 && regenerated && frozen_intact;
    report(7, pass,
           "memorization: train perplexity " + std::to_string(train_ppl) + ", regeneration " +
               (regenerated ? "exact" : "wrong") + ", frozen embedding " +
               (frozen_intact ? "bitwise intact" : "mutated"));
}

// 8. Early stopping: forced non-improving validation halts after exactly
//    3 extra epochs; restored weights reproduce the best epoch's validation
//    metric within 1e-6 (both stages).
TEST(Acceptance, C8_EarlyStoppingContract) {
    testutil::TempDir tmp("acc8");
    bool ok = true;

    // stage 1, forced non-improving validation
    {
        Rng wrng(80);
        Tensor w({6, 4});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<real>(wrng.uniform(-1, 1));
        auto make = [&](std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            std::vector<Tensor> xs;
            Stage1Data d;
            d.targets = Tensor({n, 4});
            for (std::size_t s = 0; s < n; ++s) {
                Tensor x({6});
                for (std::size_t i = 0; i < 6; ++i) x[i] = static_cast<real>(rng.uniform(-1, 1));
                for (std::size_t j = 0; j < 4; ++j) {
                    double z = 0;
                    for (std::size_t i = 0; i < 6; ++i) z += static_cast<double>(x[i]) * w.at(i, j);
                    d.targets.at(s, j) = z > 0 ? 1.0f : 0.0f;
                }
                xs.push_back(x);
            }
            d.inputs = std::make_shared<TensorListSource>(xs);
            return d;
        };
        Stage1Data train = make(24, 1), val = make(12, 2);
        Rng init(3);
        Model m = build_transfer_head(6, 4, 0.0, init);
        TrainConfig cfg;
        cfg.batch_size = 8;
        cfg.learning_rate = 1e-3;
        cfg.max_epochs = 25;
        cfg.patience = 3;
        cfg.val_metric_override = [](std::size_t epoch, double) { return 1.0 - 0.1 * epoch; };
        AugmentPolicy off;
        RunRecord rec = train_ingredient_model(m, train, val, cfg, off, "");
        if (rec.epochs.size() != 4 || rec.best_epoch != 0) {
            ok = false;
            std::cout << "  stage-1 forced fixture ran " << rec.epochs.size() << " epochs\n";
        }

        // real run: restored checkpoint reproduces the recorded best val IoU
        Rng init2(4);
        Model m2 = build_transfer_head(6, 4, 0.0, init2);
        TrainConfig cfg2;
        cfg2.batch_size = 8;
        cfg2.learning_rate = 0.02;
        cfg2.max_epochs = 10;
        cfg2.patience = 3;
        cfg2.seed = 9;
        RunRecord rec2 = train_ingredient_model(m2, train, val, cfg2, off, tmp.path("s1.pltd"));
        Rng init3(99);
        Model restored = build_transfer_head(6, 4, 0.0, init3);
        load_checkpoint(restored.params(), tmp.path("s1.pltd"));
        const auto scores = detail::evaluate_stage1(restored, val, cfg2.threshold, cfg2.batch_size);
        if (std::abs(scores.iou - rec2.best_value) > 1e-6) {
            ok = false;
            std::cout << "  stage-1 restore mismatch: " << scores.iou << " vs " << rec2.best_value
                      << "\n";
        }
    }

    // stage 2, forced non-improving validation
    {
        Tokenizer tok = Tokenizer::fit({"stir the pot", "bake the loaf"});
        std::vector<TokenSequence> ins{encode_pad(tok, "stir the pot", 6),
                                       encode_pad(tok, "bake the loaf", 6)};
        InstrModelConfig mcfg;
        mcfg.units = 6;
        mcfg.embed_dim = 5;
        Rng init(5);
        Model m = build_instruction_model(mcfg, tok.size(), tok.size(), nullptr, init);
        BatchGenerator data(ins, ins, 2, 1);
        InstrTrainConfig cfg;
        cfg.learning_rate = 1e-3;
        cfg.max_epochs = 25;
        cfg.patience = 3;
        cfg.val_metric_override = [](std::size_t epoch, double) { return 50.0 + epoch; };
        RunRecord rec = train_instruction_model(m, data, data, cfg, "");
        if (rec.epochs.size() != 4 || rec.best_epoch != 0) {
            ok = false;
            std::cout << "  stage-2 forced fixture ran " << rec.epochs.size() << " epochs\n";
        }

        Rng init2(6);
        Model m2 = build_instruction_model(mcfg, tok.size(), tok.size(), nullptr, init2);
        InstrTrainConfig cfg2;
        cfg2.learning_rate = 0.01;
        cfg2.max_epochs = 8;
        cfg2.patience = 3;
        cfg2.seed = 2;
        RunRecord rec2 = train_instruction_model(m2, data, data, cfg2, tmp.path("s2.pltd"));
        Rng init3(7);
        Model restored = build_instruction_model(mcfg, tok.size(), tok.size(), nullptr, init3);
        load_checkpoint(restored.params(), tmp.path("s2.pltd"));
        const auto scores = detail::evaluate_instruction(restored, data);
        if (std::abs(scores.perplexity - rec2.best_value) > 1e-6 * std::max(1.0, rec2.best_value)) {
            ok = false;
            std::cout << "  stage-2 restore mismatch: " << scores.perplexity << " vs "
                      << rec2.best_value << "\n";
        }
    }
    report(8, ok, "patience-3 halting and best-weight restoration hold for both stages");
}

// 9. Protocol determinism through the CLI: identical `search` invocations
//    produce byte-identical JSONL; resuming after deleting one record
//    regenerates only that record with an identical config.
TEST(Acceptance, C9_ProtocolDeterminism) {
    testutil::TempDir tmp("acc9");
    // synthetic recipes + features, written with the library's own writers
    const std::vector<std::string> base = {"salt", "butter", "sugar", "flour", "garlic", "onion"};
    Rng rng(90);
    std::vector<Recipe> recipes;
    FeatureTable table;
    table.dim = base.size();
    for (std::size_t i = 0; i < 30; ++i) {
        Recipe r;
        r.id = i;
        r.title = "Dish " + std::to_string(i);
        r.image_name = "img_" + std::to_string(i);
        r.instructions = "mix and serve";
        std::vector<real> feat(base.size());
        for (std::size_t k = 0; k < base.size(); ++k) {
            const bool on = rng.bernoulli(0.5);
            feat[k] = static_cast<real>(on ? 1.0 : 0.0);
            if (on) {
                r.cleaned_ingredients.push_back(base[k]);
                r.ingredients_raw.push_back(base[k]);
            }
        }
        if (r.cleaned_ingredients.empty()) {
            r.cleaned_ingredients.push_back(base[0]);
            r.ingredients_raw.push_back(base[0]);
            feat[0] = 1.0f;
        }
        table.rows[r.image_name] = feat;
        recipes.push_back(std::move(r));
    }
    write_recipes(recipes, tmp.path("recipes.csv"));
    save_features(table, tmp.path("features.csv"));

    auto cli = [&](const std::string& args) {
        const std::string cmd = "cd '" + tmp.root().string() + "' && '" + PLATED_CLI_PATH + "' " +
                                args + " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    bool ok = cli("split --recipes recipes.csv --out split.json --seed 4") == 0;
    ok = ok && cli("normalize --recipes recipes.csv --out vocab.tsv --split split.json "
                   "--top-percent 1.0 --max-vocab 20") == 0;

    const std::string search_args =
        "search --space transfer --runs 5 --out work/runs.jsonl --seed 12 --recipes recipes.csv "
        "--split split.json --vocab vocab.tsv --raw-map vocab.tsv.rawmap.tsv "
        "--features features.csv --epochs 2";
    ok = ok && cli(search_args) == 0;
    const std::string first = testutil::read_file(tmp.path("work/runs.jsonl"));
    std::filesystem::remove_all(tmp.root() / "work");
    ok = ok && cli(search_args) == 0;
    const std::string second = testutil::read_file(tmp.path("work/runs.jsonl"));
    const bool byte_identical = !first.empty() && first == second;

    // resume: drop record 2, rerun, expect only run 2 regenerated with the
    // same config and everything else untouched
    auto records = load_run_records(tmp.path("work/runs.jsonl"));
    bool resume_ok = records.size() == 5;
    json dropped_config;
    if (resume_ok) {
        dropped_config = records[2].config;
        std::filesystem::remove(tmp.path("work/runs.jsonl"));
        for (const RunRecord& r : records)
            if (r.run_id != 2) append_run_record(tmp.path("work/runs.jsonl"), r);
        resume_ok = cli(search_args) == 0;
        auto resumed = load_run_records(tmp.path("work/runs.jsonl"));
        resume_ok = resume_ok && resumed.size() == 5;
        if (resume_ok) {
            // appended last, run_id 2, identical config
            const RunRecord& regenerated = resumed.back();
            resume_ok = regenerated.run_id == 2 && regenerated.config.dump() == dropped_config.dump();
            for (std::size_t i = 0; i + 1 < resumed.size(); ++i)
                resume_ok = resume_ok && resumed[i].run_id != 2;
        }
    }
    report(9, ok && byte_identical && resume_ok,
           std::string("search JSONL byte-identical: ") + (byte_identical ? "yes" : "no") +
               ", resume regenerates only the missing record: " + (resume_ok ? "yes" : "no"));
}

// 10. Space conformance: default space cardinalities and membership of the
//     known-good reference configurations.
TEST(Acceptance, C10_SpaceConformance) {
    DefaultSpaces d = default_spaces();
    bool ok = d.custom_cnn.cardinality() == 108 && d.transfer.cardinality() == 54;

    ok = ok && d.custom_cnn.contains(json{{"batch_size", 128},
                                          {"blocks", 4},
                                          {"learning_rate", 1e-3},
                                          {"augmentation", false},
                                          {"regularization", false}});
    ok = ok && d.transfer.contains(json{{"batch_size", 512},
                                        {"learning_rate", 1e-3},
                                        {"augmentation", false},
                                        {"dropout", 0.0}});
    ok = ok && d.instruction.contains(json{{"units", 8},
                                           {"learning_rate", 1e-2},
                                           {"batch_size", 64},
                                           {"pretrained", 50},
                                           {"regularization", true}});
    report(10, ok, "cardinalities 108/54 and reference configs are members");
}

// 11. Optional directional check against the real dataset; skipped unless
//     PLATED_DATASET_CSV, PLATED_FEATURES and PLATED_SPLIT point at data.
//     Not part of CI.
TEST(Acceptance, C11_OptionalDirectionalCheck) {
    const char* csv = std::getenv("PLATED_DATASET_CSV");
    const char* feats = std::getenv("PLATED_FEATURES");
    if (csv == nullptr || feats == nullptr) {
        std::cout << "[criterion 11] SKIP optional directional check (set PLATED_DATASET_CSV and "
                     "PLATED_FEATURES to run)"
                  << std::endl;
        GTEST_SKIP();
    }
    auto loaded = load_recipes(csv);
    auto kept = drop_incomplete(loaded).kept;
    SplitSet split_set = split(kept, 0);
    std::vector<std::string> phrases;
    for (const Recipe& r : split_set.train)
        for (const std::string& p : r.cleaned_ingredients) phrases.push_back(p);
    VocabPipeline pipeline = build_pipeline(phrases, RuleSet::defaults(), 0.14, 200);
    auto table = std::make_shared<FeatureTable>(load_features(feats));
    Stage1Data train = make_feature_dataset(split_set.train, table, pipeline, true);
    Stage1Data val = make_feature_dataset(split_set.val, table, pipeline, false);
    Stage1Data test = make_feature_dataset(split_set.test, table, pipeline, false);

    Rng init(0);
    Model model = build_transfer_head(table->dim, pipeline.vocab.size(), 0.0, init);
    TrainConfig cfg;
    cfg.batch_size = 512;
    cfg.learning_rate = 1e-3;
    cfg.max_epochs = 25;
    cfg.patience = 3;
    cfg.seed = 1;
    AugmentPolicy off;
    train_ingredient_model(model, train, val, cfg, off, "");
    const auto scores = detail::evaluate_stage1(model, test, 0.5, 256);

    // label-frequency random baseline: predict each label independently with
    // its training frequency
    Rng brng(5);
    const std::size_t n = test.size(), k = pipeline.vocab.size();
    std::vector<double> freq(k, 0);
    for (std::size_t i = 0; i < train.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) freq[j] += train.targets.at(i, j);
    for (double& f : freq) f /= static_cast<double>(train.size());
    Tensor base_probs({n, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
            base_probs.at(i, j) = brng.bernoulli(freq[j]) ? 0.9f : 0.1f;
    const double baseline = iou(ThresholdedPrediction(base_probs, 0.5), test.targets);

    const bool pass = scores.iou > 3.0 * baseline;
    report(11, pass,
           "test IoU " + std::to_string(scores.iou) + " vs frequency baseline " +
               std::to_string(baseline));
}
