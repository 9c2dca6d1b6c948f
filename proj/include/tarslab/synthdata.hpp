#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tarslab/perturb.hpp"

// Deterministic toy multimodal world. Scenes are subsets of a small object
// catalog; queries name a couple of present objects plus template tokens;
// preferred responses enumerate the ground truth and dispreferred ones carry
// one planted hallucination. Trigger tokens are spuriously correlated with
// specific objects so that a text-shortcut learner hallucinates them, and the
// frozen scorer is constructed so that those triggers are exactly the tokens
// the perturbation engine targets first.
namespace tarslab {

struct WorldConfig {
    int n_objects = 8;
    int n_bias_pairs = 2;
    double rho = 0.8;            // trigger/hallucination co-occurrence rate
    int d_raw = 12;              // raw feature dim
    int d_embed = 16;            // scorer embedding dim
    int vocab = 68;              // total vocabulary incl. specials
    double feature_noise = 0.05; // per-coordinate sigma in sampled scenes
    int scene_min = 1;
    int scene_max = 4;
    // Probability that a trigger accompanies its object when the object is
    // present; when absent the trigger fires with probability rho.
    double trigger_rate_present = 1.0;
    int query_hints = 2;  // present-object names mentioned in the query

    void validate() const;
};

struct CatalogObject {
    int object_id = -1;
    int name_token = -1;
    std::vector<double> prototype;  // unit vector, length d_raw
};

struct BiasPair {
    int trigger_token = -1;
    int biased_object = -1;
    double rho = 0.0;
};

struct WorldSpec {
    WorldConfig config;
    std::uint64_t seed = 0;
    std::vector<CatalogObject> catalog;
    std::vector<BiasPair> bias_pairs;
    int ask_token = -1;
    int filler_token = -1;
    int filler2_token = -1;
    int pope_ask_token = -1;
    int yes_token = -1;
    int no_token = -1;
    Scorer scorer;  // frozen cross-modal scorer with planted alignment tiers

    bool is_name_token(int id) const;
    int object_of_name(int id) const;  // -1 when not a name token
    const CatalogObject& object(int object_id) const;
};

struct PreferenceExample {
    VisualScene scene;
    TokenSeq query;
    TokenSeq chosen;
    TokenSeq rejected;
    std::vector<int> truth_objects;  // sorted
};

// Deterministic world construction; throws after bounded retries when the
// separation or scorer band constraints cannot be met.
WorldSpec build_world(const WorldConfig& cfg, std::uint64_t seed);

// 1..4 catalog objects without replacement, features = prototype + noise,
// renormalized. Returns the scene and its sorted truth set.
std::pair<VisualScene, std::vector<int>> sample_scene(const WorldSpec& world, Rng& rng,
                                                      int scene_id);

// Query for a scene: BOS, ASK, present-name hints, trigger tokens per the
// bias rules, FILLER, EOS.
TokenSeq make_query(const std::vector<int>& truth, const WorldSpec& world, Rng& rng);

PreferenceExample make_preference_pair(const VisualScene& scene, const std::vector<int>& truth,
                                       const WorldSpec& world, Rng& rng);

std::vector<PreferenceExample> generate_dataset(const WorldSpec& world, int n,
                                                std::uint64_t seed);

// Structured-text serialization; regeneration from the same inputs is
// byte-identical.
std::string world_to_text(const WorldSpec& world);
WorldSpec world_from_text(const std::string& text);
void write_world(const std::string& path, const WorldSpec& world);
WorldSpec read_world(const std::string& path);

std::string dataset_to_text(const std::vector<PreferenceExample>& examples);
std::vector<PreferenceExample> dataset_from_text(const std::string& text);
void write_dataset(const std::string& path, const std::vector<PreferenceExample>& examples);
std::vector<PreferenceExample> read_dataset(const std::string& path);

}  // namespace tarslab
