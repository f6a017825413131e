#ifndef PLATED_LAB_HPP
#define PLATED_LAB_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "plated/error.hpp"
#include "plated/rng.hpp"

namespace plated {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Early stopping: halt when the monitored validation metric has not strictly
// improved for `patience` consecutive epochs; callers restore best weights.
// ---------------------------------------------------------------------------

class EarlyStopper {
public:
    enum class Mode { max, min };

    EarlyStopper(Mode mode, std::size_t patience) : mode_(mode), patience_(patience) {}

    // Feed one epoch's validation value; returns true when training should
    // stop (exactly `patience` epochs after the best one).
    bool update(double value, std::size_t epoch) {
        const bool improved =
            !seen_ || (mode_ == Mode::max ? value > best_value_ : value < best_value_);
        if (improved) {
            seen_ = true;
            best_value_ = value;
            best_epoch_ = epoch;
            since_best_ = 0;
            return false;
        }
        ++since_best_;
        return since_best_ >= patience_;
    }

    bool improved_at(std::size_t epoch) const { return seen_ && best_epoch_ == epoch; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_value() const { return best_value_; }

private:
    Mode mode_;
    std::size_t patience_;
    bool seen_ = false;
    double best_value_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t since_best_ = 0;
};

// ---------------------------------------------------------------------------
// Run records + JSONL log
// ---------------------------------------------------------------------------

struct EpochRow {
    std::size_t epoch = 0;
    double train_loss = 0, val_loss = 0;
    double train_metric = 0, val_metric = 0;  // IoU (stage 1) or perplexity (stage 2)
    std::map<std::string, double> extra;      // accuracy / f1 companions
};

struct RunRecord {
    std::size_t run_id = 0;
    std::string status = "ok";  // "ok" | "failed"
    std::string message;        // present on failures
    json config = json::object();
    std::vector<EpochRow> epochs;
    std::size_t best_epoch = 0;
    double best_value = 0;
    std::string checkpoint;
    std::int64_t seconds = 0;  // whole wall-clock seconds

    bool ok() const { return status == "ok"; }
};

inline json to_json(const EpochRow& row) {
    json j;
    j["epoch"] = row.epoch;
    j["train_loss"] = row.train_loss;
    j["val_loss"] = row.val_loss;
    j["train_metric"] = row.train_metric;
    j["val_metric"] = row.val_metric;
    for (const auto& [k, v] : row.extra) j[k] = v;
    return j;
}

inline json to_json(const RunRecord& r) {
    json j;
    j["run_id"] = r.run_id;
    j["status"] = r.status;
    if (!r.message.empty()) j["message"] = r.message;
    j["config"] = r.config;
    json epochs = json::array();
    for (const EpochRow& row : r.epochs) epochs.push_back(to_json(row));
    j["epochs"] = std::move(epochs);
    j["best_epoch"] = r.best_epoch;
    j["best_value"] = r.best_value;
    j["checkpoint"] = r.checkpoint;
    j["seconds"] = r.seconds;
    return j;
}

inline RunRecord run_record_from_json(const json& j) {
    RunRecord r;
    try {
        r.run_id = j.at("run_id").get<std::size_t>();
        r.status = j.at("status").get<std::string>();
        if (j.contains("message")) r.message = j.at("message").get<std::string>();
        r.config = j.at("config");
        for (const auto& je : j.at("epochs")) {
            EpochRow row;
            row.epoch = je.at("epoch").get<std::size_t>();
            row.train_loss = je.at("train_loss").get<double>();
            row.val_loss = je.at("val_loss").get<double>();
            row.train_metric = je.at("train_metric").get<double>();
            row.val_metric = je.at("val_metric").get<double>();
            for (auto it = je.begin(); it != je.end(); ++it) {
                const std::string& k = it.key();
                if (k == "epoch" || k == "train_loss" || k == "val_loss" || k == "train_metric" ||
                    k == "val_metric")
                    continue;
                row.extra[k] = it.value().get<double>();
            }
            r.epochs.push_back(std::move(row));
        }
        r.best_epoch = j.at("best_epoch").get<std::size_t>();
        r.best_value = j.at("best_value").get<double>();
        r.checkpoint = j.at("checkpoint").get<std::string>();
        r.seconds = j.at("seconds").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("run record has a bad field: ") + e.what());
    }
    return r;
}

inline std::vector<RunRecord> load_run_records(const std::string& path) {
    std::vector<RunRecord> out;
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) return out;  // absent log = empty history
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("run log '" + path + "' line " + std::to_string(lineno) +
                        " is not valid JSON: " + e.what());
        }
        out.push_back(run_record_from_json(j));
    }
    return out;
}

inline void append_run_record(const std::string& path, const RunRecord& r) {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    require(os.good(), "cannot append to run log '" + path + "'");
    os << to_json(r).dump() << '\n';
    os.flush();
    require(os.good(), "write failed for run log '" + path + "'");
}

// ---------------------------------------------------------------------------
// Random search over discrete axes
// ---------------------------------------------------------------------------

struct Axis {
    std::string name;
    std::vector<json> values;
};

struct SearchSpace {
    std::string name;
    std::vector<Axis> axes;
    std::size_t run_count = 30;
    std::uint64_t seed = 0;

    std::size_t cardinality() const {
        std::size_t c = 1;
        for (const Axis& a : axes) c *= a.values.size();
        return c;
    }

    void validate() const {
        require(run_count >= 1, "search space: run_count must be >= 1");
        for (const Axis& a : axes)
            require(!a.values.empty(), "search space: axis '" + a.name + "' has no values");
    }

    bool contains(const json& config) const {
        for (const Axis& a : axes) {
            if (!config.contains(a.name)) return false;
            bool hit = false;
            for (const json& v : a.values) hit |= v == config.at(a.name);
            if (!hit) return false;
        }
        return true;
    }
};

// Independent uniform draw per axis from a stream seeded by (seed,
// run_index): resuming a search replays identical configs.
inline json sample_config(const SearchSpace& space, std::size_t run_index) {
    space.validate();
    Rng rng = Rng::stream(space.seed, run_index);
    json config;
    for (const Axis& a : space.axes) config[a.name] = a.values[rng.index(a.values.size())];
    return config;
}

struct DefaultSpaces {
    SearchSpace custom_cnn;
    SearchSpace transfer;
    SearchSpace instruction;
};

// The searched grids. "regularization" bundles the per-architecture
// regularizer settings (custom CNN: dropout 0.7 + L2 1e-3; instruction
// model: dropout 0.8 + L2 1e-2 + layer normalization).
inline DefaultSpaces default_spaces() {
    DefaultSpaces d;
    d.custom_cnn.name = "custom_cnn";
    d.custom_cnn.axes = {
        {"batch_size", {32, 64, 128}},
        {"blocks", {3, 4, 5}},
        {"learning_rate", {1e-3, 1e-4, 1e-5}},
        {"augmentation", {true, false}},
        {"regularization", {true, false}},
    };
    d.transfer.name = "transfer";
    d.transfer.axes = {
        {"batch_size", {32, 128, 512}},
        {"learning_rate", {1e-3, 1e-4, 1e-5}},
        {"augmentation", {true, false}},
        {"dropout", {0.0, 0.3, 0.7}},
    };
    d.instruction.name = "instruction";
    d.instruction.axes = {
        {"units", {8, 16, 32, 64}},
        {"learning_rate", {1e-1, 1e-2, 1e-3, 5e-4, 1e-4}},
        {"batch_size", {8, 16, 32, 64}},
        {"pretrained", {"none", 50, 100}},
        {"regularization", {true, false}},
    };
    return d;
}

// ---------------------------------------------------------------------------
// Search driver: crash-resumable, optional worker pool, immediate persists
// ---------------------------------------------------------------------------

using Trainer = std::function<RunRecord(std::size_t run_index, const json& config)>;

inline std::vector<RunRecord> run_search(const SearchSpace& space, const Trainer& trainer,
                                         const std::string& log_path, std::size_t workers = 1) {
    space.validate();
    require(workers >= 1, "run_search: workers must be >= 1");

    std::vector<RunRecord> existing = load_run_records(log_path);
    std::set<std::size_t> done;
    for (const RunRecord& r : existing) done.insert(r.run_id);

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < space.run_count; ++i)
        if (!done.count(i)) todo.push_back(i);

    std::mutex log_mutex;
    std::vector<RunRecord> fresh(todo.size());
    std::size_t next = 0;
    std::mutex next_mutex;

    auto work = [&] {
        for (;;) {
            std::size_t slot;
            {
                std::lock_guard lock(next_mutex);
                if (next >= todo.size()) return;
                slot = next++;
            }
            const std::size_t run_index = todo[slot];
            const json config = sample_config(space, run_index);
            const auto started = std::chrono::steady_clock::now();
            RunRecord record;
            try {
                record = trainer(run_index, config);
                record.status = "ok";
            } catch (const std::exception& e) {
                record = RunRecord{};
                record.status = "failed";
                record.message = e.what();
            }
            record.run_id = run_index;
            record.config = config;
            record.seconds = std::chrono::duration_cast<std::chrono::seconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
            {
                std::lock_guard lock(log_mutex);
                append_run_record(log_path, record);
            }
            fresh[slot] = std::move(record);
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, todo.size() ? todo.size() : 1); ++w)
            pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::vector<RunRecord> all = std::move(existing);
    for (RunRecord& r : fresh) all.push_back(std::move(r));
    std::sort(all.begin(), all.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });
    return all;
}

// ---------------------------------------------------------------------------
// Selection and per-axis summaries
// ---------------------------------------------------------------------------

enum class SelectMode { max, min };

inline const RunRecord& select_best(const std::vector<RunRecord>& records, SelectMode mode) {
    const RunRecord* best = nullptr;
    for (const RunRecord& r : records) {
        if (!r.ok()) continue;
        if (best == nullptr) {
            best = &r;
            continue;
        }
        const bool better = mode == SelectMode::max ? r.best_value > best->best_value
                                                    : r.best_value < best->best_value;
        const bool tie_earlier = r.best_value == best->best_value && r.run_id < best->run_id;
        if (better || tie_earlier) best = &r;
    }
    require(best != nullptr, "select_best: no successful records");
    return *best;
}

struct AxisSummary {
    json value;
    double mean_best = 0;
    std::size_t count = 0;
};

inline std::vector<AxisSummary> summarize_by_axis(const std::vector<RunRecord>& records,
                                                  const std::string& axis) {
    std::map<std::string, AxisSummary> groups;  // keyed by serialized value
    bool axis_seen = false;
    for (const RunRecord& r : records) {
        if (!r.config.contains(axis)) continue;
        axis_seen = true;
        if (!r.ok()) continue;
        const std::string key = r.config.at(axis).dump();
        AxisSummary& g = groups[key];
        g.value = r.config.at(axis);
        g.mean_best += r.best_value;
        ++g.count;
    }
    require(axis_seen, "summarize_by_axis: no record carries axis '" + axis + "'");
    std::vector<AxisSummary> out;
    for (auto& [key, g] : groups) {
        g.mean_best /= static_cast<double>(g.count);
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end(), [](const AxisSummary& a, const AxisSummary& b) {
        const bool an = a.value.is_number(), bn = b.value.is_number();
        if (an != bn) return an;
        if (an && bn) return a.value.get<double>() < b.value.get<double>();
        return a.value.dump() < b.value.dump();
    });
    return out;
}

// Summary CSV: axis,value,mean_best,count (numbers in shortest round-trip
// form so identical runs emit identical bytes).
inline std::string summary_csv(const std::vector<AxisSummary>& summaries, const std::string& axis) {
    std::string out = "axis,value,mean_best,count\n";
    for (const AxisSummary& s : summaries) {
        std::string value = s.value.dump();
        if (!value.empty() && value.front() == '"') value = s.value.get<std::string>();
        out += axis + "," + value + "," + json(s.mean_best).dump() + "," + std::to_string(s.count) + "\n";
    }
    return out;
}

}  // namespace plated

#endif  // PLATED_LAB_HPP
