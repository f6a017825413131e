#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "plated/lab.hpp"
#include "test_util.hpp"

using namespace plated;

// ----------------------------------------------------------- early stop ----

TEST(EarlyStopper, MonotoneDecreaseStopsAfterExactlyPatience) {
    EarlyStopper stop(EarlyStopper::Mode::max, 3);
    EXPECT_FALSE(stop.update(0.9, 0));  // best
    EXPECT_FALSE(stop.update(0.8, 1));
    EXPECT_FALSE(stop.update(0.7, 2));
    EXPECT_TRUE(stop.update(0.6, 3));  // third epoch without improvement
    EXPECT_EQ(stop.best_epoch(), 0u);
    EXPECT_DOUBLE_EQ(stop.best_value(), 0.9);
}

TEST(EarlyStopper, ImprovementResetsCounter) {
    EarlyStopper stop(EarlyStopper::Mode::min, 3);
    EXPECT_FALSE(stop.update(5.0, 0));
    EXPECT_FALSE(stop.update(6.0, 1));
    EXPECT_FALSE(stop.update(6.0, 2));
    EXPECT_FALSE(stop.update(4.0, 3));  // new best
    EXPECT_FALSE(stop.update(4.5, 4));
    EXPECT_FALSE(stop.update(4.5, 5));
    EXPECT_TRUE(stop.update(4.5, 6));
    EXPECT_EQ(stop.best_epoch(), 3u);
}

TEST(EarlyStopper, EqualValueIsNotImprovement) {
    EarlyStopper stop(EarlyStopper::Mode::max, 2);
    EXPECT_FALSE(stop.update(0.5, 0));
    EXPECT_FALSE(stop.update(0.5, 1));
    EXPECT_TRUE(stop.update(0.5, 2));
}

// --------------------------------------------------------- sample_config ---

TEST(SampleConfig, SingleValueAxesAlwaysUnique) {
    SearchSpace space;
    space.name = "s";
    space.axes = {{"a", {1}}, {"b", {"x"}}};
    space.run_count = 10;
    for (std::size_t i = 0; i < 10; ++i) {
        json c = sample_config(space, i);
        EXPECT_EQ(c.at("a"), 1);
        EXPECT_EQ(c.at("b"), "x");
    }
}

TEST(SampleConfig, DeterministicPerSeedAndIndex) {
    SearchSpace space;
    space.axes = {{"a", {1, 2, 3}}, {"b", {0.1, 0.2}}};
    space.seed = 77;
    EXPECT_EQ(sample_config(space, 4).dump(), sample_config(space, 4).dump());
    // different indices are independent draws, not a shared stream
    SearchSpace other = space;
    other.seed = 78;
    EXPECT_NE(sample_config(space, 0).dump() + sample_config(space, 1).dump(),
              sample_config(other, 0).dump() + sample_config(other, 1).dump());
}

TEST(SampleConfig, UniformOverAxisValues) {
    SearchSpace space;
    space.axes = {{"a", {0, 1, 2}}};
    space.seed = 5;
    std::size_t hits[3] = {0, 0, 0};
    const std::size_t draws = 10000;
    for (std::size_t i = 0; i < draws; ++i) hits[sample_config(space, i).at("a").get<int>()]++;
    for (std::size_t v = 0; v < 3; ++v)
        EXPECT_NEAR(static_cast<double>(hits[v]) / draws, 1.0 / 3.0, 0.02);
}

// -------------------------------------------------------- default_spaces ---

TEST(DefaultSpaces, CardinalityAndReferenceConfigs) {
    DefaultSpaces d = default_spaces();
    EXPECT_EQ(d.custom_cnn.cardinality(), 108u);  // 3*3*3*2*2
    EXPECT_EQ(d.transfer.cardinality(), 54u);     // 3*3*2*3

    json best_custom = {{"batch_size", 128}, {"blocks", 4},        {"learning_rate", 1e-3},
                        {"augmentation", false}, {"regularization", false}};
    EXPECT_TRUE(d.custom_cnn.contains(best_custom));

    json best_transfer = {{"batch_size", 512}, {"learning_rate", 1e-3}, {"augmentation", false},
                          {"dropout", 0.0}};
    EXPECT_TRUE(d.transfer.contains(best_transfer));

    // a known-good stage-2 config (lr 1e-2, batch 64) is reachable
    json best_instr = {{"units", 8},       {"learning_rate", 1e-2},  {"batch_size", 64},
                       {"pretrained", 50}, {"regularization", true}};
    EXPECT_TRUE(d.instruction.contains(best_instr));
}

// ------------------------------------------------------------ run_search ---

namespace {

RunRecord stub_record(double best) {
    RunRecord r;
    EpochRow row;
    row.epoch = 0;
    row.train_loss = 1.0;
    row.val_loss = 1.1;
    row.train_metric = best;
    row.val_metric = best;
    r.epochs.push_back(row);
    r.best_epoch = 0;
    r.best_value = best;
    r.checkpoint = "stub.pltd";
    return r;
}

}  // namespace

TEST(RunSearch, StubTrainerWritesOneLinePerRun) {
    testutil::TempDir tmp("search");
    SearchSpace space;
    space.axes = {{"a", {1, 2}}};
    space.run_count = 2;
    space.seed = 9;
    auto records = run_search(
        space, [](std::size_t, const json&) { return stub_record(0.5); }, tmp.path("runs.jsonl"));
    EXPECT_EQ(records.size(), 2u);
    std::string log = testutil::read_file(tmp.path("runs.jsonl"));
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);
}

TEST(RunSearch, ResumeReExecutesOnlyMissingRun) {
    testutil::TempDir tmp("resume");
    SearchSpace space;
    space.axes = {{"a", {1, 2, 3, 4, 5}}};
    space.run_count = 3;
    space.seed = 4;
    const std::string log = tmp.path("runs.jsonl");

    std::vector<json> first_configs(3);
    auto full = run_search(space, [&](std::size_t i, const json& c) {
        first_configs[i] = c;
        return stub_record(0.1 * i);
    }, log);
    ASSERT_EQ(full.size(), 3u);

    // drop record 1, keep 0 and 2
    auto records = load_run_records(log);
    std::filesystem::remove(log);
    for (const RunRecord& r : records)
        if (r.run_id != 1) append_run_record(log, r);

    std::vector<std::size_t> executed;
    auto resumed = run_search(space, [&](std::size_t i, const json& c) {
        executed.push_back(i);
        EXPECT_EQ(c.dump(), first_configs[i].dump());  // identical config on resume
        return stub_record(0.1 * i);
    }, log);
    EXPECT_EQ(executed, std::vector<std::size_t>{1});
    EXPECT_EQ(resumed.size(), 3u);
    EXPECT_EQ(resumed[1].run_id, 1u);
}

TEST(RunSearch, WorkerPoolCompletesAllRuns) {
    testutil::TempDir tmp("workers");
    SearchSpace space;
    space.axes = {{"a", {1, 2, 3}}};
    space.run_count = 6;
    space.seed = 2;
    std::atomic<int> calls{0};
    auto records = run_search(space, [&](std::size_t i, const json&) {
        calls.fetch_add(1);
        return stub_record(0.1 * static_cast<double>(i));
    }, tmp.path("runs.jsonl"), 3);
    EXPECT_EQ(calls.load(), 6);
    ASSERT_EQ(records.size(), 6u);
    std::set<std::size_t> ids;
    for (const auto& r : records) ids.insert(r.run_id);
    EXPECT_EQ(ids.size(), 6u);
    // configs still come from (seed, run_index) regardless of execution order
    for (const auto& r : records) EXPECT_EQ(r.config.dump(), sample_config(space, r.run_id).dump());
}

TEST(RunSearch, FailedTrainerIsRecordedAndSearchContinues) {
    testutil::TempDir tmp("fail");
    SearchSpace space;
    space.axes = {{"a", {1}}};
    space.run_count = 3;
    auto records = run_search(space, [](std::size_t i, const json&) {
        if (i == 1) throw Error("synthetic failure");
        return stub_record(0.2);
    }, tmp.path("runs.jsonl"));
    ASSERT_EQ(records.size(), 3u);
    EXPECT_EQ(records[1].status, "failed");
    EXPECT_NE(records[1].message.find("synthetic failure"), std::string::npos);
    EXPECT_TRUE(records[0].ok());
    EXPECT_TRUE(records[2].ok());
}

TEST(RunRecord, JsonlRoundTrip) {
    RunRecord r = stub_record(0.42);
    r.run_id = 7;
    r.config = {{"batch_size", 64}, {"learning_rate", 1e-3}};
    r.epochs[0].extra["val_f1"] = 0.5;
    r.seconds = 3;
    RunRecord back = run_record_from_json(json::parse(to_json(r).dump()));
    EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
}

// ------------------------------------------------------------ selection ----

TEST(SelectBest, KnownValuesFixture) {
    std::vector<RunRecord> records;
    for (double v : {0.05, 0.106, 0.09}) {
        RunRecord r = stub_record(v);
        r.run_id = records.size();
        records.push_back(r);
    }
    EXPECT_DOUBLE_EQ(select_best(records, SelectMode::max).best_value, 0.106);
    EXPECT_EQ(select_best(records, SelectMode::max).run_id, 1u);
    EXPECT_DOUBLE_EQ(select_best(records, SelectMode::min).best_value, 0.05);
}

TEST(SelectBest, SingleAndTies) {
    std::vector<RunRecord> one{stub_record(0.3)};
    EXPECT_DOUBLE_EQ(select_best(one, SelectMode::max).best_value, 0.3);

    std::vector<RunRecord> ties;
    for (std::size_t i = 0; i < 3; ++i) {
        RunRecord r = stub_record(0.5);
        r.run_id = 2 - i;  // deliberately out of order
        ties.push_back(r);
    }
    EXPECT_EQ(select_best(ties, SelectMode::max).run_id, 0u);

    std::vector<RunRecord> failed{stub_record(0.1)};
    failed[0].status = "failed";
    EXPECT_THROW(select_best(failed, SelectMode::max), Error);
}

TEST(SelectBest, OrderInvariant) {
    std::vector<RunRecord> records;
    for (std::size_t i = 0; i < 6; ++i) {
        RunRecord r = stub_record(0.1 * (i % 4));
        r.run_id = i;
        records.push_back(r);
    }
    const std::size_t want = select_best(records, SelectMode::max).run_id;
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        rng.shuffle(records);
        EXPECT_EQ(select_best(records, SelectMode::max).run_id, want);
    }
}

// ------------------------------------------------------------- summaries ---

TEST(SummarizeByAxis, MeansPerValue) {
    std::vector<RunRecord> records;
    auto add = [&](int a, double best) {
        RunRecord r = stub_record(best);
        r.run_id = records.size();
        r.config = {{"a", a}};
        records.push_back(r);
    };
    add(1, 0.1);
    add(1, 0.2);
    add(2, 0.3);
    add(2, 0.3);
    auto s = summarize_by_axis(records, "a");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_DOUBLE_EQ(s[0].mean_best, 0.15000000000000002);  // (0.1+0.2)/2 in doubles
    EXPECT_NEAR(s[0].mean_best, 0.15, 1e-12);
    EXPECT_DOUBLE_EQ(s[1].mean_best, 0.3);
    EXPECT_EQ(s[0].count, 2u);
}

TEST(SummarizeByAxis, ThirtyRecordFixtureMatchesHandAggregation) {
    // spreadsheet-style oracle: tally sums and counts per value by hand loop
    Rng rng(8);
    std::vector<RunRecord> records;
    const int values[] = {8, 16, 32, 64};
    double sum[4] = {0, 0, 0, 0};
    std::size_t count[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < 30; ++i) {
        const std::size_t vi = rng.index(4);
        const double best = rng.uniform(0, 1);
        RunRecord r = stub_record(best);
        r.run_id = i;
        r.config = {{"units", values[vi]}};
        if (i % 7 == 3) {
            r.status = "failed";  // failures excluded from means
        } else {
            sum[vi] += best;
            count[vi] += 1;
        }
        records.push_back(r);
    }
    auto s = summarize_by_axis(records, "units");
    std::size_t groups = 0;
    for (std::size_t vi = 0; vi < 4; ++vi) {
        if (count[vi] == 0) continue;
        ++groups;
        auto it = std::find_if(s.begin(), s.end(),
                               [&](const AxisSummary& g) { return g.value == values[vi]; });
        ASSERT_NE(it, s.end());
        EXPECT_NEAR(it->mean_best, sum[vi] / count[vi], 1e-12);
        EXPECT_EQ(it->count, count[vi]);
    }
    EXPECT_EQ(s.size(), groups);  // empty groups omitted
}

TEST(SummarizeByAxis, UnknownAxisErrors) {
    std::vector<RunRecord> records{stub_record(0.1)};
    records[0].config = {{"a", 1}};
    EXPECT_THROW(summarize_by_axis(records, "nope"), Error);
}

TEST(SummaryCsv, StableFormat) {
    std::vector<RunRecord> records;
    RunRecord r = stub_record(0.25);
    r.config = {{"batch_size", 64}};
    records.push_back(r);
    auto s = summarize_by_axis(records, "batch_size");
    EXPECT_EQ(summary_csv(s, "batch_size"), "axis,value,mean_best,count\nbatch_size,64,0.25,1\n");
}
