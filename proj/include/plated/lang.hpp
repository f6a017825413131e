#ifndef PLATED_LANG_HPP
#define PLATED_LANG_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "plated/error.hpp"
#include "plated/lab.hpp"
#include "plated/metrics.hpp"
#include "plated/ndnum.hpp"

namespace plated {

// ---------------------------------------------------------------------------
// Tokenizer: reserved ids 0..3, then content words by descending training
// frequency (ties lexicographic). Immutable once fitted.
// ---------------------------------------------------------------------------

class Tokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kStart = 2;
    static constexpr int kEnd = 3;

    // lowercase alphanumeric runs; digits are tokens too
    static std::vector<std::string> split_words(const std::string& text) {
        std::vector<std::string> out;
        std::string cur;
        for (char raw : text) {
            const unsigned char uc = static_cast<unsigned char>(raw);
            if (std::isalnum(uc)) {
                cur += static_cast<char>(std::tolower(uc));
            } else if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
        return out;
    }

    // max_vocab (0 = unlimited) bounds the total id count, reserved included.
    static Tokenizer fit(const std::vector<std::string>& texts, std::size_t max_vocab = 0) {
        std::map<std::string, std::size_t> freq;
        for (const std::string& t : texts)
            for (const std::string& w : split_words(t)) ++freq[w];
        require(!freq.empty(), "tokenizer: corpus has no tokens");

        std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        Tokenizer tok;
        tok.id_to_word_ = {"<pad>", "<unk>", "<start>", "<end>"};
        for (const auto& [word, count] : ranked) {
            if (max_vocab > 0 && tok.id_to_word_.size() >= max_vocab) break;
            tok.id_to_word_.push_back(word);
        }
        for (std::size_t i = 0; i < tok.id_to_word_.size(); ++i)
            tok.word_to_id_[tok.id_to_word_[i]] = static_cast<int>(i);
        return tok;
    }

    std::size_t size() const { return id_to_word_.size(); }

    int id(const std::string& word) const {
        auto it = word_to_id_.find(word);
        return it == word_to_id_.end() ? kUnk : it->second;
    }

    const std::string& word(int id) const {
        require(id >= 0 && static_cast<std::size_t>(id) < id_to_word_.size(),
                "tokenizer: id " + std::to_string(id) + " out of range");
        return id_to_word_[static_cast<std::size_t>(id)];
    }

    std::vector<int> encode_words(const std::string& text) const {
        std::vector<int> out;
        for (const std::string& w : split_words(text)) out.push_back(id(w));
        return out;
    }

    json to_json() const {
        json j;
        for (std::size_t i = 0; i < id_to_word_.size(); ++i) j[id_to_word_[i]] = i;
        return j;
    }

    static Tokenizer from_json(const json& j) {
        Tokenizer tok;
        std::map<int, std::string> by_id;
        for (auto it = j.begin(); it != j.end(); ++it) {
            const int id = it.value().get<int>();
            require(by_id.emplace(id, it.key()).second, "tokenizer json: duplicate id");
        }
        require(!by_id.empty(), "tokenizer json: empty");
        for (const auto& [id, word] : by_id) {
            require(static_cast<std::size_t>(id) == tok.id_to_word_.size(),
                    "tokenizer json: ids must be dense from 0");
            tok.id_to_word_.push_back(word);
        }
        require(tok.id_to_word_.size() >= 4 && tok.id_to_word_[0] == "<pad>" &&
                    tok.id_to_word_[1] == "<unk>" && tok.id_to_word_[2] == "<start>" &&
                    tok.id_to_word_[3] == "<end>",
                "tokenizer json: reserved ids 0..3 must be <pad>,<unk>,<start>,<end>");
        for (std::size_t i = 0; i < tok.id_to_word_.size(); ++i)
            tok.word_to_id_[tok.id_to_word_[i]] = static_cast<int>(i);
        return tok;
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        require(os.good(), "cannot write tokenizer '" + path + "'");
        os << to_json().dump() << '\n';
    }

    static Tokenizer load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        require(is.good(), "cannot read tokenizer '" + path + "'");
        json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error("tokenizer '" + path + "' is not valid JSON: " + e.what());
        }
        return from_json(j);
    }

private:
    std::unordered_map<std::string, int> word_to_id_;
    std::vector<std::string> id_to_word_;
};

// ---------------------------------------------------------------------------
// Padded sequences: START + tokens + END, truncated so END is always the
// last kept token, PAD-filled to pad_len.
// ---------------------------------------------------------------------------

struct TokenSequence {
    std::vector<int> ids;          // length pad_len
    std::size_t true_length = 0;   // non-PAD prefix length
};

inline TokenSequence encode_pad(const Tokenizer& tok, const std::string& text, std::size_t pad_len) {
    require(pad_len >= 1, "encode_pad: pad_len must be >= 1");
    std::vector<int> full;
    full.push_back(Tokenizer::kStart);
    for (int id : tok.encode_words(text)) full.push_back(id);
    full.push_back(Tokenizer::kEnd);

    TokenSequence seq;
    seq.ids.assign(pad_len, Tokenizer::kPad);
    if (full.size() <= pad_len) {
        std::copy(full.begin(), full.end(), seq.ids.begin());
        seq.true_length = full.size();
    } else {
        std::copy(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(pad_len), seq.ids.begin());
        seq.ids[pad_len - 1] = Tokenizer::kEnd;
        seq.true_length = pad_len;
    }
    return seq;
}

inline std::vector<std::string> decode_ids(const Tokenizer& tok, const std::vector<int>& ids) {
    std::vector<std::string> words;
    for (int id : ids) {
        if (id == Tokenizer::kPad || id == Tokenizer::kStart || id == Tokenizer::kEnd) continue;
        words.push_back(tok.word(id));
    }
    return words;
}

// ---------------------------------------------------------------------------
// GloVe loading: lines of `word v1 ... vD`. In-vocabulary rows are copied;
// everything else (including UNK/START/END) is seeded-uniform in +-0.05;
// the PAD row is zero. Coverage counts content words only.
// ---------------------------------------------------------------------------

struct EmbeddingMatrix {
    Tensor weights;  // [V,D]
    bool frozen = true;
    double coverage = 0.0;
};

inline EmbeddingMatrix load_glove(const std::string& path, const Tokenizer& tok, std::size_t dim,
                                  std::uint64_t seed = 1, std::ostream& warnings = std::cerr) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot read embedding file '" + path + "'");

    EmbeddingMatrix em;
    Rng rng(seed);
    em.weights = uniform_init({tok.size(), dim}, -0.05, 0.05, rng);
    for (std::size_t d = 0; d < dim; ++d) em.weights.at(static_cast<std::size_t>(Tokenizer::kPad), d) = 0;

    std::vector<bool> filled(tok.size(), false);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        const int id = tok.id(word);
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        require(values.size() == dim, "embedding file '" + path + "' line " + std::to_string(lineno) +
                                          ": expected " + std::to_string(dim) + " values, got " +
                                          std::to_string(values.size()));
        if (id < 4) continue;  // out of vocabulary, or a reserved row (PAD stays zero)
        if (filled[static_cast<std::size_t>(id)]) {
            warnings << "warning: duplicate embedding for '" << word << "' at line " << lineno
                     << ", first occurrence wins\n";
            continue;
        }
        filled[static_cast<std::size_t>(id)] = true;
        for (std::size_t d = 0; d < dim; ++d)
            em.weights.at(static_cast<std::size_t>(id), d) = static_cast<real>(values[d]);
    }
    const std::size_t content = tok.size() > 4 ? tok.size() - 4 : 0;
    std::size_t found = 0;
    for (std::size_t i = 4; i < tok.size(); ++i) found += filled[i];
    em.coverage = content ? static_cast<double>(found) / static_cast<double>(content) : 1.0;
    return em;
}

// ---------------------------------------------------------------------------
// Instruction model: embedding -> (bi)LSTM -> optional layer norm ->
// optional dropout -> shared per-step dense + softmax over the instruction
// vocabulary. Output shape [N, L, V_instr].
// ---------------------------------------------------------------------------

struct InstrModelConfig {
    std::size_t units = 8;  // searched: 8, 16, 32, 64
    bool bidirectional = false;
    bool use_pretrained = false;
    std::size_t embed_dim = 50;  // GloVe D (50 or 100) or learned-embedding width
    double dropout = 0.0;
    real l2 = real(0);  // on the prediction layer kernel
    bool layer_norm = false;
};

inline Model build_instruction_model(const InstrModelConfig& cfg, std::size_t ingredient_vocab,
                                     std::size_t instr_vocab, const EmbeddingMatrix* pretrained,
                                     Rng& rng) {
    require(instr_vocab >= 1, "build_instruction_model: empty instruction vocabulary");
    Model m;
    if (cfg.use_pretrained) {
        require(pretrained != nullptr, "build_instruction_model: pretrained embeddings requested but absent");
        require(pretrained->weights.dim(0) == ingredient_vocab,
                "build_instruction_model: embedding rows do not match ingredient vocabulary");
        require(pretrained->weights.dim(1) == cfg.embed_dim,
                "build_instruction_model: embedding dim mismatch");
        m.add<layers::Embedding>(m.params(), "embed", pretrained->weights, pretrained->frozen);
    } else {
        m.add<layers::Embedding>(m.params(), "embed", ingredient_vocab, cfg.embed_dim, rng, false);
    }
    m.add<layers::Lstm>(m.params(), "lstm", cfg.embed_dim, cfg.units, cfg.bidirectional, rng);
    const std::size_t width = cfg.bidirectional ? 2 * cfg.units : cfg.units;
    if (cfg.layer_norm) m.add<layers::LayerNorm>(m.params(), "norm", width);
    if (cfg.dropout > 0.0) m.add<layers::Dropout>(cfg.dropout);
    m.add<layers::Dense>(m.params(), "predict", width, instr_vocab, rng, layers::Dense::Init::glorot,
                         cfg.l2);
    m.add<layers::Act>(Activation::softmax);
    return m;
}

// ---------------------------------------------------------------------------
// Batch generator: seeded shuffle per epoch, final partial batch emitted,
// mask marks non-PAD target positions.
// ---------------------------------------------------------------------------

struct SequenceBatch {
    Tensor inputs;                          // [B,L] ids as reals
    std::vector<std::size_t> target_ids;    // row-major [B*L]
    std::vector<unsigned char> mask;        // row-major [B*L], 1 on non-PAD targets
    std::size_t batch = 0, length = 0;
};

class BatchGenerator {
public:
    BatchGenerator(std::vector<TokenSequence> inputs, std::vector<TokenSequence> targets,
                   std::size_t batch_size, std::uint64_t seed)
        : inputs_(std::move(inputs)), targets_(std::move(targets)), batch_size_(batch_size), seed_(seed) {
        require(batch_size_ >= 1, "batch_generator: batch_size must be >= 1");
        require(inputs_.size() == targets_.size(), "batch_generator: input/target count mismatch");
        require(!inputs_.empty(), "batch_generator: empty dataset");
        for (std::size_t i = 1; i < inputs_.size(); ++i) {
            require(inputs_[i].ids.size() == inputs_[0].ids.size(),
                    "batch_generator: inputs must share one pad length");
            require(targets_[i].ids.size() == targets_[0].ids.size(),
                    "batch_generator: targets must share one pad length");
        }
    }

    std::size_t size() const { return inputs_.size(); }

    // deterministic batch sequence for one epoch
    std::vector<SequenceBatch> epoch(std::size_t epoch_index) const {
        std::vector<std::size_t> order(inputs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng = Rng::stream(seed_, epoch_index);
        rng.shuffle(order);

        std::vector<SequenceBatch> out;
        for (std::size_t from = 0; from < order.size(); from += batch_size_) {
            const std::size_t to = std::min(order.size(), from + batch_size_);
            out.push_back(make_batch(order, from, to));
        }
        return out;
    }

    // dataset order, no shuffle (evaluation)
    std::vector<SequenceBatch> ordered() const {
        std::vector<std::size_t> order(inputs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::vector<SequenceBatch> out;
        for (std::size_t from = 0; from < order.size(); from += batch_size_) {
            const std::size_t to = std::min(order.size(), from + batch_size_);
            out.push_back(make_batch(order, from, to));
        }
        return out;
    }

private:
    SequenceBatch make_batch(const std::vector<std::size_t>& order, std::size_t from,
                             std::size_t to) const {
        const std::size_t b = to - from;
        const std::size_t li = inputs_[0].ids.size();
        const std::size_t lt = targets_[0].ids.size();
        SequenceBatch batch;
        batch.batch = b;
        batch.length = lt;
        batch.inputs = Tensor({b, li});
        batch.target_ids.resize(b * lt);
        batch.mask.resize(b * lt);
        for (std::size_t s = 0; s < b; ++s) {
            const TokenSequence& in = inputs_[order[from + s]];
            const TokenSequence& tg = targets_[order[from + s]];
            for (std::size_t t = 0; t < li; ++t)
                batch.inputs.at(s, t) = static_cast<real>(in.ids[t]);
            for (std::size_t t = 0; t < lt; ++t) {
                batch.target_ids[s * lt + t] = static_cast<std::size_t>(tg.ids[t]);
                batch.mask[s * lt + t] = tg.ids[t] != Tokenizer::kPad;
            }
        }
        return batch;
    }

    std::vector<TokenSequence> inputs_;
    std::vector<TokenSequence> targets_;
    std::size_t batch_size_;
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Stage-2 training: masked categorical cross-entropy, early stopping on
// validation perplexity (min mode, patience 3), best weights restored.
// ---------------------------------------------------------------------------

struct InstrTrainConfig {
    double learning_rate = 1e-2;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 25;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    std::function<double(std::size_t epoch, double computed)> val_metric_override;
};

namespace detail {

struct SeqScores {
    double loss = 0, perplexity = 0, accuracy = 0;
};

inline SeqScores evaluate_instruction(Model& model, const BatchGenerator& data) {
    SequenceAccum accum;
    for (const SequenceBatch& batch : data.ordered()) {
        Tensor pred = model.predict(batch.inputs);
        accum.add(pred, batch.target_ids, batch.mask);
    }
    SeqScores out;
    out.loss = accum.cross_entropy();
    out.perplexity = accum.perplexity();
    out.accuracy = accum.accuracy();
    return out;
}

}  // namespace detail

inline RunRecord train_instruction_model(Model& model, const BatchGenerator& train,
                                         const BatchGenerator& val, const InstrTrainConfig& cfg,
                                         const std::string& checkpoint_path) {
    require(train.size() > 0 && val.size() > 0, "train_instruction_model: empty data");

    Adam optimizer(cfg.learning_rate);
    EarlyStopper stopper(EarlyStopper::Mode::min, cfg.patience);
    RunRecord record;
    std::map<std::string, Tensor> best_values = model.params().snapshot_values();

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng dropout_rng = Rng::stream(cfg.seed ^ 0x5eedULL, epoch);
        SequenceAccum train_accum;
        for (const SequenceBatch& batch : train.epoch(epoch)) {
            model.params().zero_grads();
            Tensor pred = model.forward(batch.inputs, Mode::train, dropout_rng);
            LossResult loss = cce_loss_ids(pred, batch.target_ids, &batch.mask);
            model.backward(loss.grad);
            optimizer.step(model.params());
            train_accum.add(pred, batch.target_ids, batch.mask);
        }

        detail::SeqScores val_scores = detail::evaluate_instruction(model, val);
        double monitored = val_scores.perplexity;
        if (cfg.val_metric_override) monitored = cfg.val_metric_override(epoch, monitored);

        EpochRow row;
        row.epoch = epoch;
        row.train_loss = train_accum.cross_entropy();
        row.val_loss = val_scores.loss;
        row.train_metric = train_accum.perplexity();
        row.val_metric = monitored;
        row.extra["train_accuracy"] = train_accum.accuracy();
        row.extra["val_accuracy"] = val_scores.accuracy;
        record.epochs.push_back(row);

        const bool stop = stopper.update(monitored, epoch);
        if (stopper.improved_at(epoch)) best_values = model.params().snapshot_values();
        if (stop) break;
    }

    model.params().restore_values(best_values);
    record.best_epoch = stopper.best_epoch();
    record.best_value = stopper.best_value();
    if (!checkpoint_path.empty()) {
        save_checkpoint(model.params(), checkpoint_path);
        record.checkpoint = checkpoint_path;
    }
    return record;
}

// ---------------------------------------------------------------------------
// Greedy decoding: per-position argmax over [L, V_instr], specials stripped.
// ---------------------------------------------------------------------------

inline std::vector<std::string> generate(Model& model, const TokenSequence& ingredient_seq,
                                         const Tokenizer& instr_tok) {
    const std::size_t len = ingredient_seq.ids.size();
    Tensor input({1, len});
    for (std::size_t t = 0; t < len; ++t) input.at(0, t) = static_cast<real>(ingredient_seq.ids[t]);
    Tensor probs = model.predict(input);  // [1, L, V]
    const std::size_t v = probs.dim(probs.rank() - 1);
    std::vector<int> ids;
    for (std::size_t t = 0; t < len; ++t) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < v; ++j)
            if (probs[t * v + j] > probs[t * v + best]) best = j;
        ids.push_back(static_cast<int>(best));
    }
    return decode_ids(instr_tok, ids);
}

}  // namespace plated

#endif  // PLATED_LANG_HPP
