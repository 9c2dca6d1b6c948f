#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tarslab/trainer.hpp"

namespace tarslab {

struct MetricsRecord {
    double chair = 0.0;
    double cover = 0.0;
    double hal_rate = 0.0;
    double spurious_rate = 0.0;  // planted-bias proxy for the cognition metric
    double pope_acc = 0.0;
    double pope_prec = 0.0;
    int n_eval = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    textio::Record echo() const;
};

// One evaluated response with everything the metrics need.
struct ResponseAudit {
    std::vector<int> mentions;  // sorted unique object ids named in the response
    std::vector<int> truth;     // sorted ground-truth object ids
    TokenSeq query;
};

// Sorted unique object ids whose name tokens appear in the response.
std::vector<int> parse_mentions(const TokenSeq& response, const WorldSpec& world);

// |mentions \ truth| / max(|mentions|, 1); empty mentions score 0.
double chair_score(const std::vector<int>& mentions, const std::vector<int>& truth);

// |mentions intersect truth| / |truth|; empty truth is a contract error.
double coverage(const std::vector<int>& mentions, const std::vector<int>& truth);

// Fraction of responses with at least one hallucinated mention.
double hal_rate(const std::vector<ResponseAudit>& batch);

// Fraction of responses that mention a biased object absent from the scene
// while its trigger token sits in the query.
double spurious_rate(const std::vector<ResponseAudit>& batch, const WorldSpec& world);

// Yes/no existence responder: scene, its truth set, asked object id.
using PopeResponder = std::function<bool(const VisualScene&, const std::vector<int>&, int)>;

PopeResponder pope_oracle_responder();
PopeResponder pope_constant_yes_responder();
PopeResponder pope_uniform_responder(std::uint64_t seed);
// Greedy-decodes one answer token from the trained policy; yes iff it is the
// reserved yes token.
PopeResponder pope_model_responder(const ParamSet& params, const PolicyConfig& cfg,
                                   const WorldSpec& world);

struct PopeResult {
    double acc = 0.0;
    double prec = 0.0;
    int n_queries = 0;
};

// Balanced existence probe: one present and one absent question per sampled
// scene; absent objects drawn by rotating uniform / most-frequent /
// bias-adversarial strategies.
PopeResult pope_probe(const PopeResponder& responder, const WorldSpec& world, int n_queries,
                      Rng& rng);

// Response generator for benchmark runs; the default wraps greedy decoding
// of the trained policy, tests can substitute oracle responders.
using ResponseFn =
    std::function<TokenSeq(const VisualScene&, const std::vector<int>&, const TokenSeq&)>;

MetricsRecord run_benchmark_with(const ResponseFn& respond, const PopeResponder& pope,
                                 const WorldSpec& world, int n_eval, std::uint64_t seed);

// Fresh held-out scenes (seed namespace offset by 1e6), greedy decoding and
// the full metrics row.
MetricsRecord run_benchmark(const ParamSet& params, const PolicyConfig& cfg,
                            const WorldSpec& world, int n_eval, std::uint64_t seed);

struct AblationRow {
    double axis_value = 0.0;
    int seed_count = 0;
    bool failed = false;
    MetricsRecord median;  // per-metric medians over seeds
};

enum class AblationAxis { kOmega, kLambda };

struct AblationTable {
    AblationAxis axis;
    std::vector<AblationRow> rows;

    std::string to_text() const;          // machine-readable records
    std::string to_pretty_table() const;  // aligned columns
};

// Trains one model per (value, seed) on the given dataset and reports
// per-value medians. Aborted runs mark the row failed instead of raising.
AblationTable ablation_sweep(AblationAxis axis, const std::vector<double>& values,
                             const TrainConfig& base, const std::vector<PreferenceExample>& data,
                             const WorldSpec& world, const std::vector<std::uint64_t>& seeds,
                             int n_eval);

double median(std::vector<double> values);

}  // namespace tarslab
