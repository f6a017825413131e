// plated: batch pipeline driver for ingredient prediction and instruction
// generation. One subcommand per pipeline step; every run echoes its
// effective configuration as one JSON line before doing any work.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "plated/corpus.hpp"
#include "plated/lab.hpp"
#include "plated/lang.hpp"
#include "plated/metrics.hpp"
#include "plated/ndnum.hpp"
#include "plated/normalize.hpp"
#include "plated/vision.hpp"

namespace {

using plated::json;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("PLATED_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw plated::Error("PLATED_SEED is not an integer: " + std::string(env));
        }
    }
    return 0;
}

void echo_config(const json& config) { std::cout << config.dump() << std::endl; }

plated::RuleSet load_rules(const std::string& rules_dir) {
    return rules_dir.empty() ? plated::RuleSet::defaults() : plated::RuleSet::load_dir(rules_dir);
}

std::vector<plated::Recipe> load_validated(const std::string& path) {
    auto loaded = plated::load_recipes(path);
    auto result = plated::drop_incomplete(loaded);
    if (result.removed > 0)
        std::cerr << "dropped " << result.removed << " incomplete of " << loaded.size() << " rows\n";
    return std::move(result.kept);
}

std::string sidecar_path(const std::string& checkpoint) { return checkpoint + ".json"; }

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_sidecar(const std::string& checkpoint, const json& meta) {
    std::ofstream os(sidecar_path(checkpoint), std::ios::binary);
    plated::require(os.good(), "cannot write model sidecar '" + sidecar_path(checkpoint) + "'");
    os << meta.dump(2) << '\n';
}

json read_sidecar(const std::string& checkpoint) {
    std::ifstream is(sidecar_path(checkpoint), std::ios::binary);
    plated::require(is.good(), "cannot read model sidecar '" + sidecar_path(checkpoint) +
                                   "' (expected next to the checkpoint)");
    json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw plated::Error("model sidecar is not valid JSON: " + std::string(e.what()));
    }
    return j;
}

plated::Model rebuild_from_sidecar(const json& meta) {
    plated::Rng rng(0);  // values come from the checkpoint
    const std::string kind = meta.at("kind").get<std::string>();
    if (kind == "custom_cnn") {
        plated::CnnConfig cfg;
        cfg.blocks = meta.at("blocks").get<std::size_t>();
        cfg.base_filters = meta.at("base_filters").get<std::size_t>();
        cfg.hidden = meta.at("hidden").get<std::size_t>();
        cfg.dropout = meta.at("dropout").get<double>();
        cfg.l2 = static_cast<plated::real>(meta.at("l2").get<double>());
        cfg.labels = meta.at("labels").get<std::size_t>();
        cfg.input_size = meta.at("input_size").get<std::size_t>();
        cfg.channels = meta.at("channels").get<std::size_t>();
        return plated::build_custom_cnn(cfg, rng);
    }
    if (kind == "transfer_head") {
        return plated::build_transfer_head(meta.at("feature_dim").get<std::size_t>(),
                                           meta.at("labels").get<std::size_t>(),
                                           meta.at("dropout").get<double>(), rng);
    }
    if (kind == "instruction") {
        plated::InstrModelConfig cfg;
        cfg.units = meta.at("units").get<std::size_t>();
        cfg.bidirectional = meta.at("bidirectional").get<bool>();
        cfg.use_pretrained = false;  // weights come from the checkpoint either way
        cfg.embed_dim = meta.at("embed_dim").get<std::size_t>();
        cfg.dropout = meta.at("dropout").get<double>();
        cfg.l2 = static_cast<plated::real>(meta.at("l2").get<double>());
        cfg.layer_norm = meta.at("layer_norm").get<bool>();
        return plated::build_instruction_model(cfg, meta.at("ingredient_vocab").get<std::size_t>(),
                                               meta.at("instr_vocab").get<std::size_t>(), nullptr, rng);
    }
    throw plated::Error("unknown model kind '" + kind + "' in sidecar");
}

// ---------------------------------------------------------------------------
// ingredient-model training shared by train-cnn / train-head / search
// ---------------------------------------------------------------------------

struct Stage1Inputs {
    std::vector<plated::Recipe> train, val, test;
    plated::VocabPipeline pipeline;
};

Stage1Inputs load_stage1_inputs(const std::string& recipes_path, const std::string& split_path,
                                const std::string& vocab_path, const std::string& raw_map_path,
                                const std::string& rules_dir) {
    Stage1Inputs in;
    auto recipes = load_validated(recipes_path);
    auto manifest = plated::load_split_manifest(split_path);
    in.train = plated::select_by_ids(recipes, manifest.train_ids);
    in.val = plated::select_by_ids(recipes, manifest.val_ids);
    in.test = plated::select_by_ids(recipes, manifest.test_ids);
    in.pipeline = plated::load_pipeline(vocab_path, raw_map_path, load_rules(rules_dir));
    return in;
}

void print_run_summary(const plated::RunRecord& rec, const char* metric) {
    std::cout << "epochs=" << rec.epochs.size() << " best_epoch=" << rec.best_epoch << " best_"
              << metric << "=" << json(rec.best_value).dump() << "\n";
}

void maybe_append_record(const std::string& record_path, plated::RunRecord rec, const json& config) {
    if (record_path.empty()) return;
    rec.config = config;
    plated::append_run_record(record_path, rec);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plated: image-to-recipe pipeline (ingredient prediction + instruction generation)"};
    app.require_subcommand(1);

    try {
        // ------------------------------------------------------- normalize --
        auto* normalize = app.add_subcommand("normalize", "build the ingredient vocabulary files");
        struct {
            std::string recipes, out, raw_map_out, rules_dir, split;
            double top_percent = 0.01;
            std::size_t max_vocab = 200;
        } ncfg;
        normalize->add_option("--recipes", ncfg.recipes, "recipe CSV")->required();
        normalize->add_option("--out", ncfg.out, "vocabulary TSV output")->required();
        normalize->add_option("--raw-map-out", ncfg.raw_map_out,
                              "raw-phrase map TSV output (default: <out>.rawmap.tsv)");
        normalize->add_option("--top-percent", ncfg.top_percent, "frequency cut, (0,1]");
        normalize->add_option("--max-vocab", ncfg.max_vocab, "vocabulary size cap");
        normalize->add_option("--rules-dir", ncfg.rules_dir, "word-list directory (default: built-in)");
        normalize->add_option("--split", ncfg.split, "split manifest: restrict to its train ids");
        normalize->callback([&] {
            if (ncfg.raw_map_out.empty()) ncfg.raw_map_out = ncfg.out + ".rawmap.tsv";
            echo_config(json{{"command", "normalize"},
                             {"recipes", ncfg.recipes},
                             {"out", ncfg.out},
                             {"raw_map_out", ncfg.raw_map_out},
                             {"top_percent", ncfg.top_percent},
                             {"max_vocab", ncfg.max_vocab},
                             {"rules_dir", ncfg.rules_dir},
                             {"split", ncfg.split}});
            ensure_parent_dir(ncfg.out);
            ensure_parent_dir(ncfg.raw_map_out);
            auto recipes = load_validated(ncfg.recipes);
            if (!ncfg.split.empty()) {
                auto manifest = plated::load_split_manifest(ncfg.split);
                recipes = plated::select_by_ids(recipes, manifest.train_ids);
            }
            std::vector<std::string> phrases;
            for (const auto& r : recipes)
                for (const auto& p : r.cleaned_ingredients) phrases.push_back(p);
            auto pipeline =
                plated::build_pipeline(phrases, load_rules(ncfg.rules_dir), ncfg.top_percent, ncfg.max_vocab);
            plated::save_vocabulary(pipeline.vocab, ncfg.out);
            plated::save_raw_map(pipeline, ncfg.raw_map_out);
            std::cout << "vocabulary=" << pipeline.vocab.size() << " mapped_phrases="
                      << pipeline.raw_map.size() << "\n";
        });

        // ----------------------------------------------------------- split --
        auto* split_cmd = app.add_subcommand("split", "write a deterministic split manifest");
        struct {
            std::string recipes, out;
            std::uint64_t seed = default_seed();
        } scfg;
        split_cmd->add_option("--recipes", scfg.recipes, "recipe CSV")->required();
        split_cmd->add_option("--out", scfg.out, "split manifest JSON output")->required();
        split_cmd->add_option("--seed", scfg.seed, "shuffle seed (default: PLATED_SEED or 0)");
        split_cmd->callback([&] {
            echo_config(json{{"command", "split"},
                             {"recipes", scfg.recipes},
                             {"out", scfg.out},
                             {"seed", scfg.seed}});
            ensure_parent_dir(scfg.out);
            auto recipes = load_validated(scfg.recipes);
            plated::SplitSet split = plated::split(recipes, scfg.seed);
            plated::save_split_manifest(split, scfg.out);
            std::cout << "train=" << split.train.size() << " val=" << split.val.size()
                      << " test=" << split.test.size() << "\n";
        });

        // ------------------------------------------------------- train-cnn --
        auto* train_cnn = app.add_subcommand("train-cnn", "train the custom CNN ingredient model");
        struct {
            std::string recipes, images, split, vocab, raw_map, rules_dir, out, record;
            std::size_t epochs = 25, batch_size = 32, blocks = 4, base_filters = 32, hidden = 256;
            std::size_t image_size = 200, patience = 3;
            double lr = 1e-3, dropout = 0.0, l2 = 0.0, threshold = 0.5;
            bool augment = false;
            std::uint64_t seed = default_seed();
            std::string targets_cache;
        } ccfg;
        train_cnn->add_option("--recipes", ccfg.recipes)->required();
        train_cnn->add_option("--images", ccfg.images, "image directory")->required();
        train_cnn->add_option("--split", ccfg.split, "split manifest")->required();
        train_cnn->add_option("--vocab", ccfg.vocab, "vocabulary TSV")->required();
        train_cnn->add_option("--raw-map", ccfg.raw_map, "raw-phrase map TSV")->required();
        train_cnn->add_option("--out", ccfg.out, "checkpoint output")->required();
        train_cnn->add_option("--record", ccfg.record, "append a JSONL run record here");
        train_cnn->add_option("--rules-dir", ccfg.rules_dir);
        train_cnn->add_option("--epochs", ccfg.epochs);
        train_cnn->add_option("--batch-size", ccfg.batch_size);
        train_cnn->add_option("--blocks", ccfg.blocks);
        train_cnn->add_option("--base-filters", ccfg.base_filters);
        train_cnn->add_option("--hidden", ccfg.hidden);
        train_cnn->add_option("--image-size", ccfg.image_size);
        train_cnn->add_option("--patience", ccfg.patience);
        train_cnn->add_option("--lr", ccfg.lr);
        train_cnn->add_option("--dropout", ccfg.dropout);
        train_cnn->add_option("--l2", ccfg.l2);
        train_cnn->add_option("--threshold", ccfg.threshold);
        train_cnn->add_flag("--augment", ccfg.augment);
        train_cnn->add_option("--seed", ccfg.seed);
        train_cnn->add_option("--targets-cache", ccfg.targets_cache,
                              "write the encoded training targets CSV here");
        train_cnn->callback([&] {
            json config{{"command", "train-cnn"},   {"recipes", ccfg.recipes},
                        {"images", ccfg.images},    {"split", ccfg.split},
                        {"vocab", ccfg.vocab},      {"raw_map", ccfg.raw_map},
                        {"out", ccfg.out},          {"epochs", ccfg.epochs},
                        {"batch_size", ccfg.batch_size}, {"blocks", ccfg.blocks},
                        {"base_filters", ccfg.base_filters}, {"hidden", ccfg.hidden},
                        {"image_size", ccfg.image_size}, {"patience", ccfg.patience},
                        {"learning_rate", ccfg.lr}, {"dropout", ccfg.dropout},
                        {"l2", ccfg.l2},            {"threshold", ccfg.threshold},
                        {"augmentation", ccfg.augment}, {"seed", ccfg.seed}};
            echo_config(config);
            ensure_parent_dir(ccfg.out);
            auto in = load_stage1_inputs(ccfg.recipes, ccfg.split, ccfg.vocab, ccfg.raw_map,
                                         ccfg.rules_dir);
            auto train = plated::make_image_dataset(in.train, ccfg.images, in.pipeline,
                                                    ccfg.image_size, true);
            auto val = plated::make_image_dataset(in.val, ccfg.images, in.pipeline, ccfg.image_size,
                                                  false);
            if (!ccfg.targets_cache.empty())
                plated::save_targets_cache(train.image_names, train.targets, ccfg.targets_cache);
            plated::CnnConfig mcfg;
            mcfg.blocks = ccfg.blocks;
            mcfg.base_filters = ccfg.base_filters;
            mcfg.hidden = ccfg.hidden;
            mcfg.dropout = ccfg.dropout;
            mcfg.l2 = static_cast<plated::real>(ccfg.l2);
            mcfg.labels = in.pipeline.vocab.size();
            mcfg.input_size = ccfg.image_size;
            plated::Rng init(ccfg.seed);
            plated::Model model = plated::build_custom_cnn(mcfg, init);
            plated::TrainConfig tcfg;
            tcfg.batch_size = ccfg.batch_size;
            tcfg.learning_rate = ccfg.lr;
            tcfg.max_epochs = ccfg.epochs;
            tcfg.patience = ccfg.patience;
            tcfg.threshold = ccfg.threshold;
            tcfg.seed = ccfg.seed;
            plated::AugmentPolicy policy;
            policy.enabled = ccfg.augment;
            plated::RunRecord rec =
                plated::train_ingredient_model(model, train, val, tcfg, policy, ccfg.out);
            write_sidecar(ccfg.out, json{{"kind", "custom_cnn"},
                                         {"blocks", mcfg.blocks},
                                         {"base_filters", mcfg.base_filters},
                                         {"hidden", mcfg.hidden},
                                         {"dropout", mcfg.dropout},
                                         {"l2", ccfg.l2},
                                         {"labels", mcfg.labels},
                                         {"input_size", mcfg.input_size},
                                         {"channels", mcfg.channels}});
            maybe_append_record(ccfg.record, rec, config);
            print_run_summary(rec, "val_iou");
        });

        // ------------------------------------------------------ train-head --
        auto* train_head = app.add_subcommand("train-head", "train the frozen-feature transfer head");
        struct {
            std::string recipes, features, split, vocab, raw_map, rules_dir, out, record;
            std::size_t epochs = 25, batch_size = 32, patience = 3;
            double lr = 1e-3, dropout = 0.0, threshold = 0.5;
            std::uint64_t seed = default_seed();
            std::string targets_cache;
        } hcfg;
        train_head->add_option("--recipes", hcfg.recipes)->required();
        train_head->add_option("--features", hcfg.features, "bottleneck feature CSV")->required();
        train_head->add_option("--split", hcfg.split)->required();
        train_head->add_option("--vocab", hcfg.vocab)->required();
        train_head->add_option("--raw-map", hcfg.raw_map)->required();
        train_head->add_option("--out", hcfg.out)->required();
        train_head->add_option("--record", hcfg.record);
        train_head->add_option("--rules-dir", hcfg.rules_dir);
        train_head->add_option("--epochs", hcfg.epochs);
        train_head->add_option("--batch-size", hcfg.batch_size);
        train_head->add_option("--patience", hcfg.patience);
        train_head->add_option("--lr", hcfg.lr);
        train_head->add_option("--dropout", hcfg.dropout);
        train_head->add_option("--threshold", hcfg.threshold);
        train_head->add_option("--seed", hcfg.seed);
        train_head->add_option("--targets-cache", hcfg.targets_cache,
                               "write the encoded training targets CSV here");
        train_head->callback([&] {
            json config{{"command", "train-head"}, {"recipes", hcfg.recipes},
                        {"features", hcfg.features}, {"split", hcfg.split},
                        {"vocab", hcfg.vocab},     {"raw_map", hcfg.raw_map},
                        {"out", hcfg.out},         {"epochs", hcfg.epochs},
                        {"batch_size", hcfg.batch_size}, {"patience", hcfg.patience},
                        {"learning_rate", hcfg.lr}, {"dropout", hcfg.dropout},
                        {"threshold", hcfg.threshold}, {"seed", hcfg.seed}};
            echo_config(config);
            ensure_parent_dir(hcfg.out);
            auto in = load_stage1_inputs(hcfg.recipes, hcfg.split, hcfg.vocab, hcfg.raw_map,
                                         hcfg.rules_dir);
            auto table = std::make_shared<plated::FeatureTable>(plated::load_features(hcfg.features));
            const std::size_t dim = table->dim;
            auto train = plated::make_feature_dataset(in.train, table, in.pipeline, true);
            auto val = plated::make_feature_dataset(in.val, table, in.pipeline, false);
            if (!hcfg.targets_cache.empty())
                plated::save_targets_cache(train.image_names, train.targets, hcfg.targets_cache);
            plated::Rng init(hcfg.seed);
            plated::Model model =
                plated::build_transfer_head(dim, in.pipeline.vocab.size(), hcfg.dropout, init);
            plated::TrainConfig tcfg;
            tcfg.batch_size = hcfg.batch_size;
            tcfg.learning_rate = hcfg.lr;
            tcfg.max_epochs = hcfg.epochs;
            tcfg.patience = hcfg.patience;
            tcfg.threshold = hcfg.threshold;
            tcfg.seed = hcfg.seed;
            plated::AugmentPolicy off;
            plated::RunRecord rec =
                plated::train_ingredient_model(model, train, val, tcfg, off, hcfg.out);
            write_sidecar(hcfg.out, json{{"kind", "transfer_head"},
                                         {"feature_dim", dim},
                                         {"labels", in.pipeline.vocab.size()},
                                         {"dropout", hcfg.dropout}});
            maybe_append_record(hcfg.record, rec, config);
            print_run_summary(rec, "val_iou");
        });

        // ----------------------------------------------------- train-instr --
        auto* train_instr = app.add_subcommand("train-instr", "train the instruction generator");
        struct {
            std::string recipes, split, out, glove, record;
            std::size_t units = 8, batch_size = 64, epochs = 25, patience = 3;
            std::size_t glove_dim = 50, embed_dim = 0, pad_len = 0;
            std::size_t max_ingr_vocab = 0, max_instr_vocab = 0;
            double lr = 1e-2, dropout = 0.0, l2 = 0.0;
            bool bidirectional = false, layer_norm = false;
            std::uint64_t seed = default_seed();
        } icfg;
        train_instr->add_option("--recipes", icfg.recipes)->required();
        train_instr->add_option("--split", icfg.split)->required();
        train_instr->add_option("--out", icfg.out)->required();
        train_instr->add_option("--record", icfg.record);
        train_instr->add_option("--glove", icfg.glove, "GloVe text file (enables frozen embeddings)");
        train_instr->add_option("--glove-dim", icfg.glove_dim, "GloVe vector width (50 or 100)");
        train_instr->add_option("--embed-dim", icfg.embed_dim,
                                "learned embedding width (default: glove-dim)");
        train_instr->add_option("--units", icfg.units);
        train_instr->add_option("--batch-size", icfg.batch_size);
        train_instr->add_option("--epochs", icfg.epochs);
        train_instr->add_option("--patience", icfg.patience);
        train_instr->add_option("--pad-len", icfg.pad_len, "0 = longest training sequence");
        train_instr->add_option("--max-ingr-vocab", icfg.max_ingr_vocab);
        train_instr->add_option("--max-instr-vocab", icfg.max_instr_vocab);
        train_instr->add_option("--lr", icfg.lr);
        train_instr->add_option("--dropout", icfg.dropout);
        train_instr->add_option("--l2", icfg.l2);
        train_instr->add_flag("--bidirectional", icfg.bidirectional);
        train_instr->add_flag("--layer-norm", icfg.layer_norm);
        train_instr->add_option("--seed", icfg.seed);
        train_instr->callback([&] {
            json config{{"command", "train-instr"}, {"recipes", icfg.recipes},
                        {"split", icfg.split},      {"out", icfg.out},
                        {"glove", icfg.glove},      {"glove_dim", icfg.glove_dim},
                        {"units", icfg.units},      {"bidirectional", icfg.bidirectional},
                        {"batch_size", icfg.batch_size}, {"epochs", icfg.epochs},
                        {"patience", icfg.patience}, {"pad_len", icfg.pad_len},
                        {"learning_rate", icfg.lr}, {"dropout", icfg.dropout},
                        {"l2", icfg.l2},            {"layer_norm", icfg.layer_norm},
                        {"seed", icfg.seed}};
            echo_config(config);
            ensure_parent_dir(icfg.out);
            auto recipes = load_validated(icfg.recipes);
            auto manifest = plated::load_split_manifest(icfg.split);
            auto train_recipes = plated::select_by_ids(recipes, manifest.train_ids);
            auto val_recipes = plated::select_by_ids(recipes, manifest.val_ids);

            auto ingredient_text = [](const plated::Recipe& r) {
                std::string s;
                for (const auto& p : r.cleaned_ingredients) {
                    if (!s.empty()) s += ' ';
                    s += p;
                }
                return s;
            };
            std::vector<std::string> ingr_texts, instr_texts;
            for (const auto& r : train_recipes) {
                ingr_texts.push_back(ingredient_text(r));
                instr_texts.push_back(r.instructions);
            }
            auto ingr_tok = plated::Tokenizer::fit(ingr_texts, icfg.max_ingr_vocab);
            auto instr_tok = plated::Tokenizer::fit(instr_texts, icfg.max_instr_vocab);

            std::size_t pad_len = icfg.pad_len;
            if (pad_len == 0) {
                for (const auto& t : ingr_texts)
                    pad_len = std::max(pad_len, ingr_tok.encode_words(t).size() + 2);
            }

            auto sequences = [&](const std::vector<plated::Recipe>& rs) {
                std::vector<plated::TokenSequence> ins, outs;
                for (const auto& r : rs) {
                    ins.push_back(plated::encode_pad(ingr_tok, ingredient_text(r), pad_len));
                    outs.push_back(plated::encode_pad(instr_tok, r.instructions, pad_len));
                }
                return std::make_pair(ins, outs);
            };
            auto [train_in, train_out] = sequences(train_recipes);
            auto [val_in, val_out] = sequences(val_recipes);

            plated::InstrModelConfig mcfg;
            mcfg.units = icfg.units;
            mcfg.bidirectional = icfg.bidirectional;
            mcfg.dropout = icfg.dropout;
            mcfg.l2 = static_cast<plated::real>(icfg.l2);
            mcfg.layer_norm = icfg.layer_norm;
            std::optional<plated::EmbeddingMatrix> glove;
            if (!icfg.glove.empty()) {
                mcfg.use_pretrained = true;
                mcfg.embed_dim = icfg.glove_dim;
                glove = plated::load_glove(icfg.glove, ingr_tok, icfg.glove_dim, icfg.seed + 1);
                std::cerr << "glove coverage: " << glove->coverage << "\n";
            } else {
                mcfg.embed_dim = icfg.embed_dim ? icfg.embed_dim : icfg.glove_dim;
            }
            plated::Rng init(icfg.seed);
            plated::Model model = plated::build_instruction_model(
                mcfg, ingr_tok.size(), instr_tok.size(), glove ? &*glove : nullptr, init);

            plated::BatchGenerator train_gen(train_in, train_out, icfg.batch_size, icfg.seed);
            plated::BatchGenerator val_gen(val_in, val_out, icfg.batch_size, icfg.seed + 1);
            plated::InstrTrainConfig tcfg;
            tcfg.learning_rate = icfg.lr;
            tcfg.batch_size = icfg.batch_size;
            tcfg.max_epochs = icfg.epochs;
            tcfg.patience = icfg.patience;
            tcfg.seed = icfg.seed;
            plated::RunRecord rec =
                plated::train_instruction_model(model, train_gen, val_gen, tcfg, icfg.out);

            const std::string ingr_tok_file = icfg.out + ".ingr_tok.json";
            const std::string instr_tok_file = icfg.out + ".instr_tok.json";
            ingr_tok.save(ingr_tok_file);
            instr_tok.save(instr_tok_file);
            write_sidecar(icfg.out, json{{"kind", "instruction"},
                                         {"units", mcfg.units},
                                         {"bidirectional", mcfg.bidirectional},
                                         {"use_pretrained", mcfg.use_pretrained},
                                         {"embed_dim", mcfg.embed_dim},
                                         {"dropout", mcfg.dropout},
                                         {"l2", icfg.l2},
                                         {"layer_norm", mcfg.layer_norm},
                                         {"ingredient_vocab", ingr_tok.size()},
                                         {"instr_vocab", instr_tok.size()},
                                         {"pad_len", pad_len},
                                         {"ingr_tokenizer", ingr_tok_file},
                                         {"instr_tokenizer", instr_tok_file}});
            maybe_append_record(icfg.record, rec, config);
            print_run_summary(rec, "val_perplexity");
        });

        // ---------------------------------------------------------- search --
        auto* search = app.add_subcommand("search", "random hyperparameter search");
        struct {
            std::string space, out, recipes, split, vocab, raw_map, rules_dir;
            std::string images, features, glove50, glove100;
            std::size_t runs = 30, workers = 1, epochs = 25, image_size = 200;
            double threshold = 0.5;
            std::uint64_t seed = default_seed();
        } gcfg;
        search->add_option("--space", gcfg.space, "custom-cnn | transfer | instruction")->required();
        search->add_option("--out", gcfg.out, "JSONL run log")->required();
        search->add_option("--runs", gcfg.runs);
        search->add_option("--workers", gcfg.workers);
        search->add_option("--epochs", gcfg.epochs, "per-run epoch cap");
        search->add_option("--seed", gcfg.seed);
        search->add_option("--recipes", gcfg.recipes)->required();
        search->add_option("--split", gcfg.split)->required();
        search->add_option("--vocab", gcfg.vocab);
        search->add_option("--raw-map", gcfg.raw_map);
        search->add_option("--rules-dir", gcfg.rules_dir);
        search->add_option("--images", gcfg.images);
        search->add_option("--features", gcfg.features);
        search->add_option("--glove50", gcfg.glove50);
        search->add_option("--glove100", gcfg.glove100);
        search->add_option("--image-size", gcfg.image_size);
        search->add_option("--threshold", gcfg.threshold);
        search->callback([&] {
            json config{{"command", "search"},   {"space", gcfg.space},
                        {"out", gcfg.out},       {"runs", gcfg.runs},
                        {"workers", gcfg.workers}, {"epochs", gcfg.epochs},
                        {"seed", gcfg.seed},     {"recipes", gcfg.recipes},
                        {"split", gcfg.split},   {"vocab", gcfg.vocab},
                        {"raw_map", gcfg.raw_map}, {"images", gcfg.images},
                        {"features", gcfg.features}, {"image_size", gcfg.image_size},
                        {"threshold", gcfg.threshold}};
            echo_config(config);
            ensure_parent_dir(gcfg.out);
            plated::DefaultSpaces spaces = plated::default_spaces();
            plated::Trainer trainer;

            const std::string checkpoint_dir =
                std::filesystem::path(gcfg.out).parent_path().string();
            auto checkpoint_for = [checkpoint_dir, &gcfg](std::size_t run) {
                const std::string stem = "run" + std::to_string(run) + ".pltd";
                return checkpoint_dir.empty() ? stem : checkpoint_dir + "/" + stem;
            };

            if (gcfg.space == "custom-cnn" || gcfg.space == "transfer") {
                plated::require(!gcfg.vocab.empty() && !gcfg.raw_map.empty(),
                                "search: --vocab and --raw-map are required for stage-1 spaces");
                auto in = std::make_shared<Stage1Inputs>(load_stage1_inputs(
                    gcfg.recipes, gcfg.split, gcfg.vocab, gcfg.raw_map, gcfg.rules_dir));
                if (gcfg.space == "transfer") {
                    plated::require(!gcfg.features.empty(), "search: transfer space needs --features");
                    auto table =
                        std::make_shared<plated::FeatureTable>(plated::load_features(gcfg.features));
                    trainer = [=](std::size_t run, const json& cfg) {
                        auto train = plated::make_feature_dataset(in->train, table, in->pipeline, true);
                        auto val = plated::make_feature_dataset(in->val, table, in->pipeline, false);
                        plated::Rng init(gcfg.seed ^ (run + 1));
                        plated::Model model = plated::build_transfer_head(
                            table->dim, in->pipeline.vocab.size(), cfg.at("dropout").get<double>(), init);
                        plated::TrainConfig tcfg;
                        tcfg.batch_size = cfg.at("batch_size").get<std::size_t>();
                        tcfg.learning_rate = cfg.at("learning_rate").get<double>();
                        tcfg.max_epochs = gcfg.epochs;
                        tcfg.threshold = gcfg.threshold;
                        tcfg.seed = gcfg.seed ^ (run + 1);
                        plated::AugmentPolicy policy;
                        policy.enabled = cfg.at("augmentation").get<bool>();
                        return plated::train_ingredient_model(model, train, val, tcfg, policy,
                                                              checkpoint_for(run));
                    };
                } else {
                    plated::require(!gcfg.images.empty(), "search: custom-cnn space needs --images");
                    trainer = [=](std::size_t run, const json& cfg) {
                        auto train = plated::make_image_dataset(in->train, gcfg.images, in->pipeline,
                                                                gcfg.image_size, true);
                        auto val = plated::make_image_dataset(in->val, gcfg.images, in->pipeline,
                                                              gcfg.image_size, false);
                        const bool reg = cfg.at("regularization").get<bool>();
                        plated::CnnConfig mcfg;
                        mcfg.blocks = cfg.at("blocks").get<std::size_t>();
                        mcfg.labels = in->pipeline.vocab.size();
                        mcfg.input_size = gcfg.image_size;
                        mcfg.dropout = reg ? 0.7 : 0.0;
                        mcfg.l2 = reg ? static_cast<plated::real>(1e-3) : plated::real(0);
                        plated::Rng init(gcfg.seed ^ (run + 1));
                        plated::Model model = plated::build_custom_cnn(mcfg, init);
                        plated::TrainConfig tcfg;
                        tcfg.batch_size = cfg.at("batch_size").get<std::size_t>();
                        tcfg.learning_rate = cfg.at("learning_rate").get<double>();
                        tcfg.max_epochs = gcfg.epochs;
                        tcfg.threshold = gcfg.threshold;
                        tcfg.seed = gcfg.seed ^ (run + 1);
                        plated::AugmentPolicy policy;
                        policy.enabled = cfg.at("augmentation").get<bool>();
                        return plated::train_ingredient_model(model, train, val, tcfg, policy,
                                                              checkpoint_for(run));
                    };
                }
            } else if (gcfg.space == "instruction") {
                auto recipes = load_validated(gcfg.recipes);
                auto manifest = plated::load_split_manifest(gcfg.split);
                auto train_recipes =
                    std::make_shared<std::vector<plated::Recipe>>(plated::select_by_ids(recipes, manifest.train_ids));
                auto val_recipes =
                    std::make_shared<std::vector<plated::Recipe>>(plated::select_by_ids(recipes, manifest.val_ids));
                trainer = [=](std::size_t run, const json& cfg) {
                    auto text_of = [](const plated::Recipe& r) {
                        std::string s;
                        for (const auto& p : r.cleaned_ingredients) {
                            if (!s.empty()) s += ' ';
                            s += p;
                        }
                        return s;
                    };
                    std::vector<std::string> ingr_texts, instr_texts;
                    for (const auto& r : *train_recipes) {
                        ingr_texts.push_back(text_of(r));
                        instr_texts.push_back(r.instructions);
                    }
                    auto ingr_tok = plated::Tokenizer::fit(ingr_texts);
                    auto instr_tok = plated::Tokenizer::fit(instr_texts);
                    std::size_t pad_len = 0;
                    for (const auto& t : ingr_texts)
                        pad_len = std::max(pad_len, ingr_tok.encode_words(t).size() + 2);

                    auto seqs = [&](const std::vector<plated::Recipe>& rs) {
                        std::vector<plated::TokenSequence> ins, outs;
                        for (const auto& r : rs) {
                            ins.push_back(plated::encode_pad(ingr_tok, text_of(r), pad_len));
                            outs.push_back(plated::encode_pad(instr_tok, r.instructions, pad_len));
                        }
                        return std::make_pair(ins, outs);
                    };
                    auto [train_in, train_out] = seqs(*train_recipes);
                    auto [val_in, val_out] = seqs(*val_recipes);

                    const bool reg = cfg.at("regularization").get<bool>();
                    plated::InstrModelConfig mcfg;
                    mcfg.units = cfg.at("units").get<std::size_t>();
                    mcfg.bidirectional = true;
                    mcfg.dropout = reg ? 0.8 : 0.0;
                    mcfg.l2 = reg ? static_cast<plated::real>(1e-2) : plated::real(0);
                    mcfg.layer_norm = reg;
                    std::optional<plated::EmbeddingMatrix> glove;
                    const json& pre = cfg.at("pretrained");
                    if (pre.is_number()) {
                        const std::size_t dim = pre.get<std::size_t>();
                        const std::string path = dim == 50 ? gcfg.glove50 : gcfg.glove100;
                        plated::require(!path.empty(), "search: config wants GloVe dim " +
                                                           std::to_string(dim) +
                                                           " but no --glove" + std::to_string(dim) +
                                                           " file was given");
                        mcfg.use_pretrained = true;
                        mcfg.embed_dim = dim;
                        glove = plated::load_glove(path, ingr_tok, dim, gcfg.seed ^ (run + 1));
                    } else {
                        mcfg.embed_dim = 50;
                    }
                    plated::Rng init(gcfg.seed ^ (run + 1));
                    plated::Model model = plated::build_instruction_model(
                        mcfg, ingr_tok.size(), instr_tok.size(), glove ? &*glove : nullptr, init);
                    plated::BatchGenerator train_gen(train_in, train_out,
                                                     cfg.at("batch_size").get<std::size_t>(),
                                                     gcfg.seed ^ (run + 1));
                    plated::BatchGenerator val_gen(val_in, val_out,
                                                   cfg.at("batch_size").get<std::size_t>(),
                                                   gcfg.seed ^ (run + 2));
                    plated::InstrTrainConfig tcfg;
                    tcfg.learning_rate = cfg.at("learning_rate").get<double>();
                    tcfg.batch_size = cfg.at("batch_size").get<std::size_t>();
                    tcfg.max_epochs = gcfg.epochs;
                    tcfg.seed = gcfg.seed ^ (run + 1);
                    return plated::train_instruction_model(model, train_gen, val_gen, tcfg,
                                                           checkpoint_for(run));
                };
            } else {
                throw plated::Error("unknown search space '" + gcfg.space +
                                    "' (want custom-cnn, transfer, or instruction)");
            }

            plated::SearchSpace space = gcfg.space == "custom-cnn" ? spaces.custom_cnn
                                        : gcfg.space == "transfer" ? spaces.transfer
                                                                   : spaces.instruction;
            space.run_count = gcfg.runs;
            space.seed = gcfg.seed;
            auto records = plated::run_search(space, trainer, gcfg.out, gcfg.workers);
            std::size_t ok = 0;
            for (const auto& r : records) ok += r.ok();
            std::cout << "runs=" << records.size() << " ok=" << ok << "\n";
            if (ok > 0) {
                const bool minimize = gcfg.space == "instruction";
                const plated::RunRecord& best = plated::select_best(
                    records, minimize ? plated::SelectMode::min : plated::SelectMode::max);
                std::cout << "best run_id=" << best.run_id << " best_value="
                          << json(best.best_value).dump() << " config=" << best.config.dump() << "\n";
            }
        });

        // --------------------------------------------------------- predict --
        auto* predict = app.add_subcommand("predict", "predict ingredients or generate instructions");
        struct {
            std::string checkpoint, vocab, features, image_name, image, ingredients;
            double threshold = 0.05;  // deployment default, deliberately low
        } pcfg;
        predict->add_option("--checkpoint", pcfg.checkpoint)->required();
        predict->add_option("--vocab", pcfg.vocab, "vocabulary TSV (ingredient models)");
        predict->add_option("--features", pcfg.features, "feature CSV (transfer head)");
        predict->add_option("--image-name", pcfg.image_name, "feature-table key (transfer head)");
        predict->add_option("--image", pcfg.image, "image file (custom CNN)");
        predict->add_option("--ingredients", pcfg.ingredients, "ingredient text (instruction model)");
        predict->add_option("--threshold", pcfg.threshold);
        predict->callback([&] {
            echo_config(json{{"command", "predict"},
                             {"checkpoint", pcfg.checkpoint},
                             {"vocab", pcfg.vocab},
                             {"features", pcfg.features},
                             {"image_name", pcfg.image_name},
                             {"image", pcfg.image},
                             {"ingredients", pcfg.ingredients},
                             {"threshold", pcfg.threshold}});
            json meta = read_sidecar(pcfg.checkpoint);
            plated::Model model = rebuild_from_sidecar(meta);
            plated::load_checkpoint(model.params(), pcfg.checkpoint);
            const std::string kind = meta.at("kind").get<std::string>();

            if (kind == "instruction") {
                plated::require(!pcfg.ingredients.empty(),
                                "predict: instruction models need --ingredients");
                auto ingr_tok =
                    plated::Tokenizer::load(meta.at("ingr_tokenizer").get<std::string>());
                auto instr_tok =
                    plated::Tokenizer::load(meta.at("instr_tokenizer").get<std::string>());
                auto seq = plated::encode_pad(ingr_tok, pcfg.ingredients,
                                              meta.at("pad_len").get<std::size_t>());
                auto words = plated::generate(model, seq, instr_tok);
                std::string line;
                for (const auto& w : words) {
                    if (!line.empty()) line += ' ';
                    line += w;
                }
                std::cout << line << "\n";
                return;
            }

            plated::require(!pcfg.vocab.empty(), "predict: ingredient models need --vocab");
            auto vocab = plated::load_vocabulary(pcfg.vocab);
            plated::Tensor input;
            if (kind == "transfer_head") {
                plated::require(!pcfg.features.empty() && !pcfg.image_name.empty(),
                                "predict: transfer heads need --features and --image-name");
                auto table = plated::load_features(pcfg.features);
                auto it = table.rows.find(pcfg.image_name);
                plated::require(it != table.rows.end(),
                                "predict: image_name '" + pcfg.image_name + "' not in feature file");
                input = plated::Tensor({table.dim});
                std::copy(it->second.begin(), it->second.end(), input.data());
            } else {
                plated::require(!pcfg.image.empty(), "predict: custom CNN needs --image");
                input = plated::decode_and_preprocess(pcfg.image,
                                                      meta.at("input_size").get<std::size_t>());
            }
            auto scored = plated::predict_ingredients(model, input, vocab.labels, pcfg.threshold);
            for (const auto& s : scored)
                std::cout << s.label << "," << json(s.confidence).dump() << "\n";
        });

        // ------------------------------------------------------------ eval --
        auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
        struct {
            std::string checkpoint, recipes, split, set = "test", vocab, raw_map, rules_dir;
            std::string features, images;
            double threshold = 0.5;
            std::size_t batch_size = 32, image_size = 200;
        } ecfg;
        eval->add_option("--checkpoint", ecfg.checkpoint)->required();
        eval->add_option("--recipes", ecfg.recipes)->required();
        eval->add_option("--split", ecfg.split)->required();
        eval->add_option("--set", ecfg.set, "train | val | test");
        eval->add_option("--vocab", ecfg.vocab);
        eval->add_option("--raw-map", ecfg.raw_map);
        eval->add_option("--rules-dir", ecfg.rules_dir);
        eval->add_option("--features", ecfg.features);
        eval->add_option("--images", ecfg.images);
        eval->add_option("--threshold", ecfg.threshold);
        eval->add_option("--batch-size", ecfg.batch_size);
        eval->add_option("--image-size", ecfg.image_size);
        eval->callback([&] {
            echo_config(json{{"command", "eval"},     {"checkpoint", ecfg.checkpoint},
                             {"recipes", ecfg.recipes}, {"split", ecfg.split},
                             {"set", ecfg.set},       {"vocab", ecfg.vocab},
                             {"raw_map", ecfg.raw_map}, {"features", ecfg.features},
                             {"images", ecfg.images}, {"threshold", ecfg.threshold},
                             {"batch_size", ecfg.batch_size}});
            json meta = read_sidecar(ecfg.checkpoint);
            plated::Model model = rebuild_from_sidecar(meta);
            plated::load_checkpoint(model.params(), ecfg.checkpoint);
            const std::string kind = meta.at("kind").get<std::string>();

            auto recipes = load_validated(ecfg.recipes);
            auto manifest = plated::load_split_manifest(ecfg.split);
            auto subset = plated::select_by_ids(recipes, manifest.ids_for(ecfg.set));

            if (kind == "instruction") {
                auto ingr_tok =
                    plated::Tokenizer::load(meta.at("ingr_tokenizer").get<std::string>());
                auto instr_tok =
                    plated::Tokenizer::load(meta.at("instr_tokenizer").get<std::string>());
                const std::size_t pad_len = meta.at("pad_len").get<std::size_t>();
                std::vector<plated::TokenSequence> ins, outs;
                for (const auto& r : subset) {
                    std::string text;
                    for (const auto& p : r.cleaned_ingredients) {
                        if (!text.empty()) text += ' ';
                        text += p;
                    }
                    ins.push_back(plated::encode_pad(ingr_tok, text, pad_len));
                    outs.push_back(plated::encode_pad(instr_tok, r.instructions, pad_len));
                }
                plated::BatchGenerator gen(ins, outs, ecfg.batch_size, 0);
                auto scores = plated::detail::evaluate_instruction(model, gen);
                std::cout << "metric,value\n";
                std::cout << "loss," << json(scores.loss).dump() << "\n";
                std::cout << "accuracy," << json(scores.accuracy).dump() << "\n";
                std::cout << "perplexity," << json(scores.perplexity).dump() << "\n";
                return;
            }

            plated::require(!ecfg.vocab.empty() && !ecfg.raw_map.empty(),
                            "eval: ingredient models need --vocab and --raw-map");
            auto pipeline =
                plated::load_pipeline(ecfg.vocab, ecfg.raw_map, load_rules(ecfg.rules_dir));
            plated::Stage1Data data;
            if (kind == "transfer_head") {
                plated::require(!ecfg.features.empty(), "eval: transfer heads need --features");
                auto table = std::make_shared<plated::FeatureTable>(plated::load_features(ecfg.features));
                data = plated::make_feature_dataset(subset, table, pipeline, false);
            } else {
                plated::require(!ecfg.images.empty(), "eval: custom CNNs need --images");
                data = plated::make_image_dataset(subset, ecfg.images, pipeline,
                                                  meta.at("input_size").get<std::size_t>(), false);
            }
            auto scores = plated::detail::evaluate_stage1(model, data, ecfg.threshold, ecfg.batch_size);
            std::cout << "metric,value\n";
            std::cout << "loss," << json(scores.loss).dump() << "\n";
            std::cout << "accuracy," << json(scores.accuracy).dump() << "\n";
            std::cout << "f1," << json(scores.f1).dump() << "\n";
            std::cout << "iou," << json(scores.iou).dump() << "\n";
        });

        // ---------------------------------------------------------- report --
        auto* report = app.add_subcommand("report", "per-axis summary CSV from a run log");
        struct {
            std::string runs, axis, out;
        } rcfg;
        report->add_option("--runs", rcfg.runs, "JSONL run log")->required();
        report->add_option("--axis", rcfg.axis, "config axis to group by")->required();
        report->add_option("--out", rcfg.out, "CSV output (default: stdout)");
        report->callback([&] {
            echo_config(json{{"command", "report"},
                             {"runs", rcfg.runs},
                             {"axis", rcfg.axis},
                             {"out", rcfg.out}});
            auto records = plated::load_run_records(rcfg.runs);
            plated::require(!records.empty(), "report: run log '" + rcfg.runs + "' is empty or absent");
            auto summaries = plated::summarize_by_axis(records, rcfg.axis);
            const std::string csv = plated::summary_csv(summaries, rcfg.axis);
            if (rcfg.out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream os(rcfg.out, std::ios::binary);
                plated::require(os.good(), "cannot write '" + rcfg.out + "'");
                os << csv;
            }
        });

        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems are user errors
    } catch (const plated::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
