#ifndef PLATED_VISION_HPP
#define PLATED_VISION_HPP

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plated/corpus.hpp"
#include "plated/error.hpp"
#include "plated/image.hpp"
#include "plated/lab.hpp"
#include "plated/metrics.hpp"
#include "plated/ndnum.hpp"
#include "plated/normalize.hpp"

namespace plated {

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

struct AugmentPolicy {
    bool enabled = false;       // off: inputs pass through exactly as decoded
    double crop_fraction = 0.9; // side fraction of the random crop, 0.8..1.0
    bool rotate = true;         // random multiple of 90 degrees
    bool flip_h = true;         // each flip applied with probability 0.5
    bool flip_v = true;
    bool whiten = true;         // per-image standardization, last step
};

inline Tensor flip_horizontal(const Tensor& img) {
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    Tensor out(img.shape());
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
            for (std::size_t ch = 0; ch < c; ++ch) out.at(i, w - 1 - j, ch) = img.at(i, j, ch);
    return out;
}

inline Tensor flip_vertical(const Tensor& img) {
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    Tensor out(img.shape());
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
            for (std::size_t ch = 0; ch < c; ++ch) out.at(h - 1 - i, j, ch) = img.at(i, j, ch);
    return out;
}

// Counterclockwise quarter turn; square inputs only (the pipeline resizes
// before augmenting).
inline Tensor rotate90(const Tensor& img) {
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    require(h == w, "rotate90: image must be square");
    Tensor out({w, h, c});
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
            for (std::size_t ch = 0; ch < c; ++ch) out.at(w - 1 - j, i, ch) = img.at(i, j, ch);
    return out;
}

inline Tensor crop_resize(const Tensor& img, std::size_t top, std::size_t left, std::size_t side) {
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    require(top + side <= h && left + side <= w, "crop_resize: window out of bounds");
    Tensor crop({side, side, c});
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j)
            for (std::size_t ch = 0; ch < c; ++ch) crop.at(i, j, ch) = img.at(top + i, left + j, ch);
    return bilinear_resize(crop, h, w);
}

// Subtract the per-image mean and divide by the per-image std (floored at
// 1e-3) over all pixels and channels.
inline Tensor whiten(const Tensor& img) {
    double mean = 0;
    for (std::size_t i = 0; i < img.size(); ++i) mean += img[i];
    mean /= static_cast<double>(img.size());
    double var = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double d = img[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(img.size());
    const double inv = 1.0 / std::max(std::sqrt(var), 1e-3);
    Tensor out(img.shape());
    for (std::size_t i = 0; i < img.size(); ++i)
        out[i] = static_cast<real>((img[i] - mean) * inv);
    return out;
}

// Random crop (resized back), coin-flip mirrors, quarter-turn rotation, then
// whitening. Disabled policies return the input untouched.
inline Tensor augment(const Tensor& img, const AugmentPolicy& policy, Rng& rng) {
    require(img.rank() == 3, "augment: input must be [H,W,C]");
    if (!policy.enabled) return img;
    require(policy.crop_fraction >= 0.8 && policy.crop_fraction <= 1.0,
            "augment: crop_fraction must be in [0.8, 1.0]");
    Tensor out = img;
    if (policy.crop_fraction < 1.0) {
        const std::size_t h = img.dim(0);
        const std::size_t side =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(policy.crop_fraction * h)));
        const std::size_t top = rng.index(h - side + 1);
        const std::size_t left = rng.index(img.dim(1) - side + 1);
        out = crop_resize(out, top, left, side);
    }
    if (policy.flip_h && rng.bernoulli(0.5)) out = flip_horizontal(out);
    if (policy.flip_v && rng.bernoulli(0.5)) out = flip_vertical(out);
    if (policy.rotate) {
        const std::size_t quarter_turns = rng.index(4);
        for (std::size_t k = 0; k < quarter_turns; ++k) out = rotate90(out);
    }
    if (policy.whiten) out = whiten(out);
    return out;
}

// ---------------------------------------------------------------------------
// Decode + preprocess
// ---------------------------------------------------------------------------

inline Tensor decode_and_preprocess(const std::string& path, std::size_t size = 200) {
    Tensor img = decode_image(path);  // already rescaled to [0,1]
    return bilinear_resize(img, size, size);
}

// ---------------------------------------------------------------------------
// Model builders
// ---------------------------------------------------------------------------

struct CnnConfig {
    std::size_t blocks = 4;        // searched grid uses 3..5
    std::size_t base_filters = 32; // doubles per block
    std::size_t hidden = 256;
    double dropout = 0.0;          // before the final layer when > 0
    real l2 = real(0);             // on the hidden dense kernel when > 0
    std::size_t labels = 0;
    std::size_t input_size = 200;
    std::size_t channels = 3;
};

// Blocks of [conv3x3 relu -> batch_norm -> maxpool2] with doubling filters,
// then flatten -> dense(hidden, relu) -> optional dropout -> dense(K, sigmoid).
inline Model build_custom_cnn(const CnnConfig& cfg, Rng& rng) {
    require(cfg.labels >= 1, "build_custom_cnn: labels must be >= 1");
    require(cfg.blocks >= 1, "build_custom_cnn: need at least one block");
    std::size_t spatial = cfg.input_size;
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        require(spatial >= 2, "build_custom_cnn: input " + std::to_string(cfg.input_size) +
                                  " collapses below 1x1 after " + std::to_string(b) + " blocks");
        spatial /= 2;
    }
    Model m;
    std::size_t cin = cfg.channels;
    std::size_t filters = cfg.base_filters;
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        const std::string name = "block" + std::to_string(b);
        m.add<layers::Conv2d>(m.params(), name + ".conv", cin, filters, rng);
        m.add<layers::Act>(Activation::relu);
        m.add<layers::BatchNorm>(m.params(), name + ".bn", filters);
        m.add<layers::MaxPool2>();
        cin = filters;
        filters *= 2;
    }
    m.add<layers::Flatten>();
    m.add<layers::Dense>(m.params(), "hidden", spatial * spatial * cin, cfg.hidden, rng,
                         layers::Dense::Init::he, cfg.l2);
    m.add<layers::Act>(Activation::relu);
    if (cfg.dropout > 0.0) m.add<layers::Dropout>(cfg.dropout);
    m.add<layers::Dense>(m.params(), "out", cfg.hidden, cfg.labels, rng);
    m.add<layers::Act>(Activation::sigmoid);
    return m;
}

// Frozen-extractor head: dropout -> dense(K, sigmoid). The only trainable
// parameters of the stage-1 transfer model.
inline Model build_transfer_head(std::size_t feature_dim, std::size_t labels, double dropout_rate,
                                 Rng& rng) {
    require(feature_dim >= 1 && labels >= 1, "build_transfer_head: bad dimensions");
    Model m;
    m.add<layers::Dropout>(dropout_rate);
    m.add<layers::Dense>(m.params(), "head", feature_dim, labels, rng);
    m.add<layers::Act>(Activation::sigmoid);
    return m;
}

// ---------------------------------------------------------------------------
// Bottleneck feature files: "#dim=<D>" header, then image_name,v1,...,vD
// ---------------------------------------------------------------------------

struct FeatureTable {
    std::size_t dim = 0;
    std::map<std::string, std::vector<real>> rows;
};

inline FeatureTable load_features(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot read feature file '" + path + "'");
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "feature file '" + path + "' is empty");
    require(line.rfind("#dim=", 0) == 0, "feature file '" + path + "' must start with '#dim=<D>'");
    FeatureTable table;
    try {
        table.dim = std::stoull(line.substr(5));
    } catch (...) {
        throw Error("feature file '" + path + "' has a bad dim header: " + line);
    }
    require(table.dim >= 1, "feature file '" + path + "' has dim 0");
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<real> values;
        values.reserve(table.dim);
        const auto comma = line.find(',');
        require(comma != std::string::npos,
                "feature file '" + path + "' line " + std::to_string(lineno) + ": no values");
        const std::string name = line.substr(0, comma);
        std::size_t pos = comma + 1;
        while (pos <= line.size()) {
            const auto next = line.find(',', pos);
            const std::string cell = line.substr(pos, next == std::string::npos ? next : next - pos);
            try {
                values.push_back(static_cast<real>(std::stod(cell)));
            } catch (...) {
                throw Error("feature file '" + path + "' line " + std::to_string(lineno) +
                            ": bad value '" + cell + "'");
            }
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        require(values.size() == table.dim, "feature file '" + path + "' line " +
                                                std::to_string(lineno) + ": expected " +
                                                std::to_string(table.dim) + " values, got " +
                                                std::to_string(values.size()));
        for (real v : values)
            require(std::isfinite(v), "feature file '" + path + "' line " + std::to_string(lineno) +
                                          ": non-finite value");
        require(table.rows.emplace(name, std::move(values)).second,
                "feature file '" + path + "' line " + std::to_string(lineno) +
                    ": duplicate image_name '" + name + "'");
    }
    return table;
}

inline void save_features(const FeatureTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot write feature file '" + path + "'");
    os << "#dim=" << table.dim << '\n';
    for (const auto& [name, values] : table.rows) {
        os << name;
        for (real v : values) os << ',' << nlohmann::json(static_cast<double>(v)).dump();
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Input sources: uniform access to images on disk, in-memory tensors, or
// feature-table rows.
// ---------------------------------------------------------------------------

class InputSource {
public:
    virtual ~InputSource() = default;
    virtual std::size_t size() const = 0;
    virtual Tensor get(std::size_t i) const = 0;
};

class TensorListSource : public InputSource {
public:
    explicit TensorListSource(std::vector<Tensor> items) : items_(std::move(items)) {}
    std::size_t size() const override { return items_.size(); }
    Tensor get(std::size_t i) const override { return items_.at(i); }

private:
    std::vector<Tensor> items_;
};

// Decodes on access; rows whose image file is missing are dropped by the
// dataset assembler before this is constructed.
class ImageDirSource : public InputSource {
public:
    ImageDirSource(std::string dir, std::vector<std::string> files, std::size_t image_size)
        : dir_(std::move(dir)), files_(std::move(files)), image_size_(image_size) {}
    std::size_t size() const override { return files_.size(); }
    Tensor get(std::size_t i) const override {
        return decode_and_preprocess(dir_ + "/" + files_.at(i), image_size_);
    }

    // image_name is a file stem; probe the supported extensions
    static std::optional<std::string> resolve(const std::string& dir, const std::string& stem) {
        for (const char* ext : {".jpg", ".jpeg", ".png", ".ppm", ".pgm"}) {
            const std::string candidate = stem + ext;
            if (std::filesystem::exists(dir + "/" + candidate)) return candidate;
        }
        return std::nullopt;
    }

private:
    std::string dir_;
    std::vector<std::string> files_;
    std::size_t image_size_;
};

class FeatureSource : public InputSource {
public:
    FeatureSource(std::shared_ptr<FeatureTable> table, std::vector<std::string> names)
        : table_(std::move(table)), names_(std::move(names)) {}
    std::size_t size() const override { return names_.size(); }
    Tensor get(std::size_t i) const override {
        const auto& row = table_->rows.at(names_.at(i));
        Tensor t({table_->dim});
        std::copy(row.begin(), row.end(), t.data());
        return t;
    }

private:
    std::shared_ptr<FeatureTable> table_;
    std::vector<std::string> names_;
};

// One stage-1 data split: inputs + multi-hot targets [N,K].
struct Stage1Data {
    std::shared_ptr<InputSource> inputs;
    Tensor targets;
    std::vector<std::string> image_names;

    std::size_t size() const { return inputs ? inputs->size() : 0; }
};

// Encodes targets and pairs them with on-disk images. Rows with a missing
// image file are dropped here (with a warning), as are all-zero target rows
// when drop_zero_targets is set (training splits).
inline Stage1Data make_image_dataset(const std::vector<Recipe>& recipes, const std::string& image_dir,
                                     const VocabPipeline& pipeline, std::size_t image_size,
                                     bool drop_zero_targets, std::ostream& warnings = std::cerr) {
    std::vector<std::string> files, names;
    std::vector<Tensor> targets;
    for (const Recipe& r : recipes) {
        auto file = ImageDirSource::resolve(image_dir, r.image_name);
        if (!file) {
            warnings << "warning: image '" << r.image_name << "' not found under " << image_dir
                     << ", dropping recipe id " << r.id << "\n";
            continue;
        }
        Tensor t = encode_targets(r, pipeline);
        bool any = false;
        for (std::size_t i = 0; i < t.size(); ++i) any |= t[i] != real(0);
        if (!any && drop_zero_targets) {
            warnings << "warning: recipe id " << r.id << " has no in-vocabulary ingredients, dropping\n";
            continue;
        }
        files.push_back(*file);
        names.push_back(r.image_name);
        targets.push_back(std::move(t));
    }
    Stage1Data data;
    data.image_names = std::move(names);
    if (targets.empty()) {
        data.inputs = std::make_shared<TensorListSource>(std::vector<Tensor>{});
        data.targets = Tensor({1, pipeline.vocab.size()});
        data.targets.fill(real(0));
        return data;
    }
    data.targets = Tensor({targets.size(), targets[0].size()});
    for (std::size_t i = 0; i < targets.size(); ++i)
        std::copy_n(targets[i].data(), targets[i].size(), data.targets.data() + i * targets[i].size());
    data.inputs = std::make_shared<ImageDirSource>(image_dir, std::move(files), image_size);
    return data;
}

// Feature-table variant of the same assembly.
inline Stage1Data make_feature_dataset(const std::vector<Recipe>& recipes,
                                       std::shared_ptr<FeatureTable> features,
                                       const VocabPipeline& pipeline, bool drop_zero_targets,
                                       std::ostream& warnings = std::cerr) {
    std::vector<std::string> names;
    std::vector<Tensor> targets;
    for (const Recipe& r : recipes) {
        if (!features->rows.count(r.image_name)) {
            warnings << "warning: no feature row for image '" << r.image_name
                     << "', dropping recipe id " << r.id << "\n";
            continue;
        }
        Tensor t = encode_targets(r, pipeline);
        bool any = false;
        for (std::size_t i = 0; i < t.size(); ++i) any |= t[i] != real(0);
        if (!any && drop_zero_targets) {
            warnings << "warning: recipe id " << r.id << " has no in-vocabulary ingredients, dropping\n";
            continue;
        }
        names.push_back(r.image_name);
        targets.push_back(std::move(t));
    }
    Stage1Data data;
    data.image_names = names;
    if (targets.empty()) {
        data.inputs = std::make_shared<TensorListSource>(std::vector<Tensor>{});
        data.targets = Tensor({1, pipeline.vocab.size()});
        data.targets.fill(real(0));
        return data;
    }
    data.targets = Tensor({targets.size(), targets[0].size()});
    for (std::size_t i = 0; i < targets.size(); ++i)
        std::copy_n(targets[i].data(), targets[i].size(), data.targets.data() + i * targets[i].size());
    data.inputs = std::make_shared<FeatureSource>(std::move(features), std::move(names));
    return data;
}

// ---------------------------------------------------------------------------
// Targets cache: CSV image_name,bitstring
// ---------------------------------------------------------------------------

inline void save_targets_cache(const std::vector<std::string>& names, const Tensor& targets,
                               const std::string& path) {
    require(targets.rank() == 2 && targets.dim(0) == names.size(),
            "targets cache: names/targets size mismatch");
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot write targets cache '" + path + "'");
    for (std::size_t i = 0; i < names.size(); ++i) {
        os << names[i] << ',';
        for (std::size_t k = 0; k < targets.dim(1); ++k)
            os << (targets.at(i, k) != real(0) ? '1' : '0');
        os << '\n';
    }
}

inline std::pair<std::vector<std::string>, Tensor> load_targets_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot read targets cache '" + path + "'");
    std::vector<std::string> names;
    std::vector<std::string> bits;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        require(comma != std::string::npos,
                "targets cache '" + path + "' line " + std::to_string(lineno) + ": missing comma");
        names.push_back(line.substr(0, comma));
        bits.push_back(line.substr(comma + 1));
        require(bits.back().size() == bits.front().size(),
                "targets cache '" + path + "' line " + std::to_string(lineno) + ": ragged bitstring");
    }
    require(!names.empty(), "targets cache '" + path + "' is empty");
    Tensor targets({names.size(), bits[0].size()});
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t k = 0; k < bits[i].size(); ++k) {
            require(bits[i][k] == '0' || bits[i][k] == '1',
                    "targets cache '" + path + "': bitstring must be 0/1");
            targets.at(i, k) = bits[i][k] == '1' ? real(1) : real(0);
        }
    return {std::move(names), std::move(targets)};
}

// ---------------------------------------------------------------------------
// Stage-1 training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::size_t max_epochs = 25;  // experiment-protocol cap
    std::size_t patience = 3;
    double threshold = 0.5;
    std::uint64_t seed = 0;
    // test fixture hook: replaces the monitored validation metric
    std::function<double(std::size_t epoch, double computed)> val_metric_override;
};

namespace detail {

inline Tensor stack_inputs(const InputSource& source, const std::vector<std::size_t>& ids,
                           std::size_t from, std::size_t to, const AugmentPolicy& policy, Rng* rng) {
    Tensor first = source.get(ids[from]);
    std::vector<std::size_t> shape{to - from};
    for (std::size_t d : first.shape()) shape.push_back(d);
    Tensor batch(shape);
    for (std::size_t i = from; i < to; ++i) {
        Tensor item = source.get(ids[i]);
        if (policy.enabled && item.rank() == 3 && rng != nullptr) item = augment(item, policy, *rng);
        std::copy_n(item.data(), item.size(), batch.data() + (i - from) * item.size());
    }
    return batch;
}

inline Tensor stack_targets(const Tensor& targets, const std::vector<std::size_t>& ids,
                            std::size_t from, std::size_t to) {
    const std::size_t k = targets.dim(1);
    Tensor batch({to - from, k});
    for (std::size_t i = from; i < to; ++i)
        std::copy_n(targets.data() + ids[i] * k, k, batch.data() + (i - from) * k);
    return batch;
}

struct EvalScores {
    double loss = 0, iou = 0, f1 = 0, accuracy = 0;
};

inline EvalScores evaluate_stage1(Model& model, const Stage1Data& data, double threshold,
                                  std::size_t batch_size) {
    EvalScores out;
    MultiLabelAccum accum;
    double loss_sum = 0;
    std::size_t count = 0;
    std::vector<std::size_t> ids(data.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    AugmentPolicy off;
    for (std::size_t from = 0; from < ids.size(); from += batch_size) {
        const std::size_t to = std::min(ids.size(), from + batch_size);
        Tensor x = stack_inputs(*data.inputs, ids, from, to, off, nullptr);
        Tensor y = stack_targets(data.targets, ids, from, to);
        Tensor pred = model.predict(x);
        loss_sum += bce_loss(pred, y).value * static_cast<double>(to - from);
        accum.add(pred, y, threshold);
        count += to - from;
    }
    require(count > 0, "evaluate: empty split");
    out.loss = loss_sum / static_cast<double>(count);
    out.iou = accum.mean_iou();
    out.f1 = accum.mean_f1();
    out.accuracy = accum.mean_accuracy();
    return out;
}

}  // namespace detail

// Seeded mini-batch epochs, per-epoch train/val loss + accuracy/F1/IoU at
// cfg.threshold, early stopping on val IoU (max mode), best weights restored
// and written to checkpoint_path.
inline RunRecord train_ingredient_model(Model& model, const Stage1Data& train, const Stage1Data& val,
                                        const TrainConfig& cfg, const AugmentPolicy& policy,
                                        const std::string& checkpoint_path) {
    require(train.size() > 0, "train_ingredient_model: empty training split");
    require(val.size() > 0, "train_ingredient_model: empty validation split");
    require(cfg.batch_size >= 1, "train_ingredient_model: batch_size must be >= 1");

    Adam optimizer(cfg.learning_rate);
    EarlyStopper stopper(EarlyStopper::Mode::max, cfg.patience);
    RunRecord record;
    std::map<std::string, Tensor> best_values = model.params().snapshot_values();

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng epoch_rng = Rng::stream(cfg.seed, epoch);
        epoch_rng.shuffle(order);

        double train_loss_sum = 0;
        MultiLabelAccum train_accum;
        std::size_t seen = 0;
        for (std::size_t from = 0; from < order.size(); from += cfg.batch_size) {
            const std::size_t to = std::min(order.size(), from + cfg.batch_size);
            Tensor x = detail::stack_inputs(*train.inputs, order, from, to, policy, &epoch_rng);
            Tensor y = detail::stack_targets(train.targets, order, from, to);
            model.params().zero_grads();
            Tensor pred = model.forward(x, Mode::train, epoch_rng);
            LossResult loss = bce_loss(pred, y);
            model.backward(loss.grad);
            optimizer.step(model.params());
            train_loss_sum += loss.value * static_cast<double>(to - from);
            train_accum.add(pred, y, cfg.threshold);
            seen += to - from;
        }

        detail::EvalScores val_scores = detail::evaluate_stage1(model, val, cfg.threshold, cfg.batch_size);
        double monitored = val_scores.iou;
        if (cfg.val_metric_override) monitored = cfg.val_metric_override(epoch, monitored);

        EpochRow row;
        row.epoch = epoch;
        row.train_loss = train_loss_sum / static_cast<double>(seen);
        row.val_loss = val_scores.loss;
        row.train_metric = train_accum.mean_iou();
        row.val_metric = monitored;
        row.extra["train_accuracy"] = train_accum.mean_accuracy();
        row.extra["train_f1"] = train_accum.mean_f1();
        row.extra["val_accuracy"] = val_scores.accuracy;
        row.extra["val_f1"] = val_scores.f1;
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
// Prediction
// ---------------------------------------------------------------------------

struct ScoredIngredient {
    std::string label;
    double confidence = 0;
};

// Labels whose sigmoid output clears the threshold (inclusive), sorted by
// descending confidence. The empty list is a legal outcome.
inline std::vector<ScoredIngredient> predict_ingredients(Model& model, const Tensor& input,
                                                         const std::vector<std::string>& labels,
                                                         double threshold) {
    require(threshold > 0.0 && threshold < 1.0, "predict_ingredients: threshold must be in (0,1)");
    std::vector<std::size_t> shape{1};
    for (std::size_t d : input.shape()) shape.push_back(d);
    Tensor batch(shape);
    std::copy_n(input.data(), input.size(), batch.data());
    Tensor probs = model.predict(batch);
    require(probs.size() == labels.size(), "predict_ingredients: model output width " +
                                               std::to_string(probs.size()) +
                                               " does not match label count " +
                                               std::to_string(labels.size()));
    std::vector<ScoredIngredient> out;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (static_cast<double>(probs[k]) >= threshold)
            out.push_back({labels[k], static_cast<double>(probs[k])});
    std::sort(out.begin(), out.end(), [](const ScoredIngredient& a, const ScoredIngredient& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.label < b.label;
    });
    return out;
}

}  // namespace plated

#endif  // PLATED_VISION_HPP
