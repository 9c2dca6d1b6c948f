#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tarslab/synthdata.hpp"

using namespace tarslab;

namespace {

const WorldSpec& world() {
    static const WorldSpec w = build_world(WorldConfig{}, 7);
    return w;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return d / std::sqrt(na * nb);
}

bool contains(const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

TEST(BuildWorld, DeterministicFromSeed) {
    const WorldSpec a = build_world(WorldConfig{}, 7);
    EXPECT_EQ(world_to_text(a), world_to_text(world()));
    const WorldSpec c = build_world(WorldConfig{}, 8);
    EXPECT_NE(world_to_text(c), world_to_text(a));
}

TEST(BuildWorld, CatalogHasUniqueNameTokens) {
    std::set<int> names;
    for (const auto& obj : world().catalog) names.insert(obj.name_token);
    EXPECT_EQ(names.size(), 8u);
    for (const int n : names) EXPECT_GE(n, vocab::kNumSpecial);
    for (const auto& pair : world().bias_pairs) {
        EXPECT_EQ(names.count(pair.trigger_token), 0u);
        EXPECT_GE(pair.trigger_token, vocab::kNumSpecial);
    }
}

TEST(BuildWorld, PrototypesAreSeparated) {
    const auto& cat = world().catalog;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        for (std::size_t j = i + 1; j < cat.size(); ++j) {
            EXPECT_LT(std::fabs(cosine(cat[i].prototype, cat[j].prototype)), 0.8);
        }
    }
}

TEST(SampleScene, DeterministicAndSized) {
    Rng r1(70), r2(70);
    const auto [s1, t1] = sample_scene(world(), r1, 5);
    const auto [s2, t2] = sample_scene(world(), r2, 5);
    EXPECT_EQ(t1, t2);
    ASSERT_EQ(s1.objects.size(), s2.objects.size());
    for (std::size_t i = 0; i < s1.objects.size(); ++i) {
        EXPECT_EQ(s1.objects[i].feature, s2.objects[i].feature);
    }
    Rng r3(71);
    for (int trial = 0; trial < 100; ++trial) {
        const auto [scene, truth] = sample_scene(world(), r3, trial);
        EXPECT_GE(truth.size(), 1u);
        EXPECT_LE(truth.size(), 4u);
        EXPECT_TRUE(std::is_sorted(truth.begin(), truth.end()));
    }
}

TEST(SampleScene, NoisyFeatureStaysClosestToOwnPrototype) {
    Rng rng(72);
    int hits = 0, total = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto [scene, truth] = sample_scene(world(), rng, trial);
        for (const auto& obj : scene.objects) {
            double best = -2.0;
            int best_id = -1;
            for (const auto& cat : world().catalog) {
                const double c = cosine(obj.feature, cat.prototype);
                if (c > best) {
                    best = c;
                    best_id = cat.object_id;
                }
            }
            ++total;
            if (best_id == obj.object_id) ++hits;
        }
    }
    EXPECT_GE(total, 1000);
    EXPECT_GE(static_cast<double>(hits) / total, 0.99);
}

TEST(MakePreferencePair, ForcedChoiceNamesTheMissingObject) {
    // all-but-one scene: the single absent object must be the insertion
    WorldSpec w = world();
    Rng rng(73);
    std::vector<int> truth;
    for (int oid = 0; oid < 7; ++oid) truth.push_back(oid);
    VisualScene scene;
    scene.scene_id = 0;
    for (const int oid : truth) scene.objects.push_back({oid, w.object(oid).prototype});
    for (int trial = 0; trial < 50; ++trial) {
        const PreferenceExample ex = make_preference_pair(scene, truth, w, rng);
        const int missing_name = w.object(7).name_token;
        EXPECT_TRUE(contains(ex.rejected.ids, missing_name));
    }
}

TEST(MakePreferencePair, ChosenNeverNamesAbsentObjects) {
    Rng rng(74);
    for (int trial = 0; trial < 5000; ++trial) {
        Rng stream = rng.fork("t", static_cast<std::uint64_t>(trial));
        const auto [scene, truth] = sample_scene(world(), stream, trial);
        const PreferenceExample ex = make_preference_pair(scene, truth, world(), stream);
        for (const int id : ex.chosen.ids) {
            const int obj = world().object_of_name(id);
            if (obj >= 0) EXPECT_TRUE(contains(truth, obj));
        }
        // rejected carries exactly one planted hallucination
        int outside = 0;
        for (const int id : ex.rejected.ids) {
            const int obj = world().object_of_name(id);
            if (obj >= 0 && !contains(truth, obj)) ++outside;
        }
        EXPECT_EQ(outside, 1);
        EXPECT_EQ(ex.rejected.ids.size(), ex.chosen.ids.size() + 1);
    }
}

TEST(MakePreferencePair, RhoZeroMeansNoTargetedInsertion) {
    WorldConfig cfg;
    cfg.rho = 0.0;
    const WorldSpec w = build_world(cfg, 11);
    Rng rng(75);
    int trigger_and_biased = 0, trigger_count = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        Rng stream = rng.fork("t", static_cast<std::uint64_t>(trial));
        const auto [scene, truth] = sample_scene(w, stream, trial);
        const PreferenceExample ex = make_preference_pair(scene, truth, w, stream);
        for (const auto& pair : w.bias_pairs) {
            if (contains(truth, pair.biased_object)) continue;
            if (!contains(ex.query.ids, pair.trigger_token)) continue;
            ++trigger_count;
            if (contains(ex.rejected.ids, w.object(pair.biased_object).name_token)) {
                ++trigger_and_biased;
            }
        }
    }
    // with rho = 0 triggers never fire on absent objects, so the conditional
    // event cannot even arise
    EXPECT_EQ(trigger_count, 0);
    EXPECT_EQ(trigger_and_biased, 0);

    // and insertions land uniformly: biased objects no more often than others
    std::vector<int> inserted_count(static_cast<std::size_t>(cfg.n_objects), 0);
    std::vector<int> absent_count(static_cast<std::size_t>(cfg.n_objects), 0);
    for (int trial = 0; trial < 5000; ++trial) {
        Rng stream = rng.fork("u", static_cast<std::uint64_t>(trial));
        const auto [scene, truth] = sample_scene(w, stream, trial);
        const PreferenceExample ex = make_preference_pair(scene, truth, w, stream);
        for (int oid = 0; oid < cfg.n_objects; ++oid) {
            if (contains(truth, oid)) continue;
            ++absent_count[static_cast<std::size_t>(oid)];
            if (contains(ex.rejected.ids, w.object(oid).name_token) &&
                !contains(ex.chosen.ids, w.object(oid).name_token)) {
                ++inserted_count[static_cast<std::size_t>(oid)];
            }
        }
    }
    std::vector<double> rates;
    for (int oid = 0; oid < cfg.n_objects; ++oid) {
        rates.push_back(static_cast<double>(inserted_count[static_cast<std::size_t>(oid)]) /
                        absent_count[static_cast<std::size_t>(oid)]);
    }
    for (const auto& pair : w.bias_pairs) {
        double others = 0.0;
        int n_others = 0;
        for (int oid = 0; oid < cfg.n_objects; ++oid) {
            if (oid == pair.biased_object) continue;
            others += rates[static_cast<std::size_t>(oid)];
            ++n_others;
        }
        EXPECT_LE(rates[static_cast<std::size_t>(pair.biased_object)],
                  others / n_others + 0.05);
    }
}

TEST(MakePreferencePair, PlantedCooccurrenceTracksRho) {
    Rng rng(76);
    int opportunities = 0, inserted = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        Rng stream = rng.fork("t", static_cast<std::uint64_t>(trial));
        const auto [scene, truth] = sample_scene(world(), stream, trial);
        const PreferenceExample ex = make_preference_pair(scene, truth, world(), stream);
        for (const auto& pair : world().bias_pairs) {
            if (contains(truth, pair.biased_object)) continue;
            if (!contains(ex.query.ids, pair.trigger_token)) continue;
            ++opportunities;
            if (contains(ex.rejected.ids, world().object(pair.biased_object).name_token)) {
                ++inserted;
            }
        }
    }
    ASSERT_GE(opportunities, 5000);
    const double rate = static_cast<double>(inserted) / opportunities;
    EXPECT_NEAR(rate, world().config.rho, 0.05);
}

TEST(GenerateDataset, ByteIdenticalRegeneration) {
    const auto a = generate_dataset(world(), 200, 99);
    const auto b = generate_dataset(world(), 200, 99);
    EXPECT_EQ(dataset_to_text(a), dataset_to_text(b));
    const auto c = generate_dataset(world(), 200, 100);
    EXPECT_NE(dataset_to_text(a), dataset_to_text(c));
}

TEST(GenerateDataset, InvariantsHoldForAllRows) {
    const auto data = generate_dataset(world(), 500, 42);
    ASSERT_EQ(data.size(), 500u);
    for (const auto& ex : data) {
        ASSERT_GE(ex.truth_objects.size(), 1u);
        for (const int id : ex.chosen.ids) {
            const int obj = world().object_of_name(id);
            if (obj >= 0) ASSERT_TRUE(contains(ex.truth_objects, obj));
        }
        int outside = 0;
        for (const int id : ex.rejected.ids) {
            const int obj = world().object_of_name(id);
            if (obj >= 0 && !contains(ex.truth_objects, obj)) ++outside;
        }
        ASSERT_GE(outside, 1);
        ASSERT_EQ(ex.query.ids.front(), vocab::kBos);
        ASSERT_EQ(ex.query.ids.back(), vocab::kEos);
        ASSERT_EQ(ex.chosen.ids.back(), vocab::kEos);
        ASSERT_EQ(ex.rejected.ids.back(), vocab::kEos);
    }
}

TEST(Serialization, WorldAndDatasetRoundTrip) {
    const std::string text = world_to_text(world());
    const WorldSpec back = world_from_text(text);
    EXPECT_EQ(world_to_text(back), text);

    const auto data = generate_dataset(world(), 50, 5);
    const std::string dtext = dataset_to_text(data);
    const auto dback = dataset_from_text(dtext);
    EXPECT_EQ(dataset_to_text(dback), dtext);
    ASSERT_EQ(dback.size(), data.size());
    EXPECT_EQ(dback[7].query.ids, data[7].query.ids);
    EXPECT_EQ(dback[7].truth_objects, data[7].truth_objects);
    EXPECT_EQ(dback[7].scene.objects[0].feature, data[7].scene.objects[0].feature);
}
