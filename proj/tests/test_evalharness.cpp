#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tarslab/evalharness.hpp"

using namespace tarslab;

namespace {

const WorldSpec& world() {
    static const WorldSpec w = build_world(WorldConfig{}, 9);
    return w;
}

ResponseAudit audit(std::vector<int> mentions, std::vector<int> truth) {
    ResponseAudit a;
    a.mentions = std::move(mentions);
    a.truth = std::move(truth);
    return a;
}

}  // namespace

TEST(ChairScore, Definition) {
    EXPECT_DOUBLE_EQ(chair_score({0, 1}, {0}), 0.5);  // one of two mentions ungrounded
    EXPECT_DOUBLE_EQ(chair_score({0, 1}, {0, 1, 2}), 0.0);
    EXPECT_DOUBLE_EQ(chair_score({}, {0}), 0.0);
}

TEST(Coverage, Definition) {
    EXPECT_DOUBLE_EQ(coverage({0, 1}, {0, 1}), 1.0);
    EXPECT_DOUBLE_EQ(coverage({5, 6}, {0, 1}), 0.0);
    EXPECT_THROW(coverage({0}, {}), std::invalid_argument);
}

TEST(HalRate, Definition) {
    std::vector<ResponseAudit> batch;
    batch.push_back(audit({0}, {0}));
    batch.push_back(audit({0, 5}, {0}));
    batch.push_back(audit({1}, {1, 2}));
    batch.push_back(audit({7}, {1}));
    EXPECT_DOUBLE_EQ(hal_rate(batch), 0.5);
    EXPECT_DOUBLE_EQ(hal_rate({audit({0}, {0})}), 0.0);
    EXPECT_DOUBLE_EQ(hal_rate({audit({5}, {0})}), 1.0);
}

TEST(Metrics, MatchBruteForceSetOracleOnRandomBatches) {
    Rng rng(81);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<int> mentions, truth;
        for (int oid = 0; oid < 8; ++oid) {
            if (rng.uniform() < 0.35) mentions.push_back(oid);
            if (rng.uniform() < 0.45) truth.push_back(oid);
        }
        if (truth.empty()) truth.push_back(0);
        const std::set<int> ms(mentions.begin(), mentions.end());
        const std::set<int> ts(truth.begin(), truth.end());
        std::set<int> inter, outside;
        for (const int m : ms) (ts.count(m) ? inter : outside).insert(m);
        const double chair_expect =
            ms.empty() ? 0.0 : static_cast<double>(outside.size()) / ms.size();
        const double cover_expect = static_cast<double>(inter.size()) / ts.size();
        EXPECT_DOUBLE_EQ(chair_score(mentions, truth), chair_expect);
        EXPECT_DOUBLE_EQ(coverage(mentions, truth), cover_expect);
    }
}

TEST(SpuriousRate, TriggersAndAbsencesOnly) {
    const WorldSpec& w = world();
    const BiasPair& pair = w.bias_pairs[0];
    TokenSeq trigger_query;
    trigger_query.ids = {vocab::kBos, pair.trigger_token, vocab::kEos};
    trigger_query.special_mask = {true, false, true};
    TokenSeq plain_query;
    plain_query.ids = {vocab::kBos, w.ask_token, vocab::kEos};
    plain_query.special_mask = {true, false, true};

    std::vector<ResponseAudit> batch;
    // no trigger in query: never spurious
    batch.push_back(audit({pair.biased_object}, {0}));
    batch.back().query = plain_query;
    EXPECT_DOUBLE_EQ(spurious_rate(batch, w), 0.0);
    // trigger present, biased object absent and mentioned: spurious
    batch.push_back(audit({pair.biased_object}, {0}));
    batch.back().query = trigger_query;
    EXPECT_DOUBLE_EQ(spurious_rate(batch, w), 0.5);
    // trigger present but object actually in the scene: grounded, not spurious
    batch.push_back(audit({pair.biased_object}, {pair.biased_object}));
    batch.back().query = trigger_query;
    EXPECT_NEAR(spurious_rate(batch, w), 1.0 / 3.0, 1e-12);
}

TEST(SpuriousRate, MatchesExhaustiveAudit) {
    const WorldSpec& w = world();
    Rng rng(82);
    std::vector<ResponseAudit> batch;
    for (int i = 0; i < 500; ++i) {
        Rng stream = rng.fork("s", static_cast<std::uint64_t>(i));
        auto [scene, truth] = sample_scene(w, stream, i);
        ResponseAudit a;
        a.truth = truth;
        a.query = make_query(truth, w, stream);
        for (int oid = 0; oid < w.config.n_objects; ++oid) {
            if (stream.uniform() < 0.3) a.mentions.push_back(oid);
        }
        batch.push_back(std::move(a));
    }
    int expect_hits = 0;
    for (const auto& a : batch) {
        bool hit = false;
        for (const auto& pair : w.bias_pairs) {
            const bool mentioned =
                std::count(a.mentions.begin(), a.mentions.end(), pair.biased_object) > 0;
            const bool absent = std::count(a.truth.begin(), a.truth.end(), pair.biased_object) == 0;
            const bool triggered =
                std::count(a.query.ids.begin(), a.query.ids.end(), pair.trigger_token) > 0;
            hit = hit || (mentioned && absent && triggered);
        }
        expect_hits += hit ? 1 : 0;
    }
    EXPECT_DOUBLE_EQ(spurious_rate(batch, w), static_cast<double>(expect_hits) / batch.size());
}

TEST(PopeProbe, OracleResponderIsPerfect) {
    Rng rng(83);
    const PopeResult res = pope_probe(pope_oracle_responder(), world(), 2000, rng);
    EXPECT_EQ(res.acc, 1.0);
    EXPECT_EQ(res.prec, 1.0);
    EXPECT_EQ(res.n_queries, 2000);
}

TEST(PopeProbe, ConstantYesSitsAtBalance) {
    Rng rng(84);
    const PopeResult res = pope_probe(pope_constant_yes_responder(), world(), 2000, rng);
    EXPECT_GE(res.acc, 0.47);
    EXPECT_LE(res.acc, 0.53);
}

TEST(PopeProbe, UniformResponderNearHalf) {
    Rng rng(85);
    const PopeResult res = pope_probe(pope_uniform_responder(19), world(), 2000, rng);
    EXPECT_NEAR(res.acc, 0.5, 0.03);
}

TEST(RunBenchmark, GroundTruthReplayingResponderIsClean) {
    const WorldSpec& w = world();
    const ResponseFn replay = [&w](const VisualScene&, const std::vector<int>& truth,
                                   const TokenSeq&) {
        TokenSeq t;
        for (const int oid : truth) {
            t.ids.push_back(w.object(oid).name_token);
            t.special_mask.push_back(false);
        }
        t.ids.push_back(vocab::kEos);
        t.special_mask.push_back(true);
        return t;
    };
    const MetricsRecord rec = run_benchmark_with(replay, pope_oracle_responder(), w, 200, 3);
    EXPECT_DOUBLE_EQ(rec.chair, 0.0);
    EXPECT_DOUBLE_EQ(rec.cover, 1.0);
    EXPECT_DOUBLE_EQ(rec.hal_rate, 0.0);
    EXPECT_DOUBLE_EQ(rec.spurious_rate, 0.0);
    EXPECT_DOUBLE_EQ(rec.pope_acc, 1.0);
}

TEST(RunBenchmark, DeterministicForFixedParamsAndSeed) {
    PolicyConfig cfg;
    const ParamSet p = init_params(cfg, 77);
    const MetricsRecord a = run_benchmark(p, cfg, world(), 50, 4);
    const MetricsRecord b = run_benchmark(p, cfg, world(), 50, 4);
    EXPECT_EQ(a.echo().to_line(), b.echo().to_line());
    const MetricsRecord c = run_benchmark(p, cfg, world(), 50, 5);
    EXPECT_NE(a.echo().to_line(), c.echo().to_line());
}

TEST(RunBenchmark, StreamingEqualsOnePassAggregation) {
    const WorldSpec& w = world();
    Rng rng(86);
    std::vector<ResponseAudit> audits;
    for (int i = 0; i < 300; ++i) {
        Rng stream = rng.fork("s", static_cast<std::uint64_t>(i));
        auto [scene, truth] = sample_scene(w, stream, i);
        ResponseAudit a;
        a.truth = truth;
        a.query = make_query(truth, w, stream);
        for (int oid = 0; oid < w.config.n_objects; ++oid) {
            if (stream.uniform() < 0.25) a.mentions.push_back(oid);
        }
        audits.push_back(std::move(a));
    }
    // one pass
    const double batch_hal = hal_rate(audits);
    double batch_chair = 0.0;
    for (const auto& a : audits) batch_chair += chair_score(a.mentions, a.truth);
    batch_chair /= audits.size();
    // streaming counts
    int hal_count = 0;
    double chair_running = 0.0;
    for (const auto& a : audits) {
        int outside = 0;
        for (const int m : a.mentions) {
            if (!std::count(a.truth.begin(), a.truth.end(), m)) ++outside;
        }
        hal_count += outside > 0 ? 1 : 0;
        chair_running += a.mentions.empty()
                             ? 0.0
                             : static_cast<double>(outside) / a.mentions.size();
    }
    EXPECT_DOUBLE_EQ(batch_hal, static_cast<double>(hal_count) / audits.size());
    EXPECT_DOUBLE_EQ(batch_chair, chair_running / audits.size());
}

TEST(AblationSweep, TableShapeAndAggregation) {
    const WorldSpec& w = world();
    const auto data = generate_dataset(w, 30, 55);
    TrainConfig base;
    base.epochs = 1;
    const AblationTable table = ablation_sweep(AblationAxis::kLambda, {0.01, 0.2, 1.0}, base,
                                               data, w, {1, 2, 3}, 20);
    ASSERT_EQ(table.rows.size(), 3u);
    for (const auto& row : table.rows) {
        EXPECT_EQ(row.seed_count, 3);
        EXPECT_FALSE(row.failed);
    }
    EXPECT_FALSE(table.to_text().empty());
    EXPECT_FALSE(table.to_pretty_table().empty());
    EXPECT_THROW(
        ablation_sweep(AblationAxis::kLambda, {0.1, 0.2}, base, data, w, {1, 2, 3}, 10),
        std::invalid_argument);
}

TEST(Median, OddAndEven) {
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}
