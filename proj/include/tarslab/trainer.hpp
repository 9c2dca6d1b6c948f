#pragma once

#include <string>
#include <vector>

#include "tarslab/objective.hpp"
#include "tarslab/synthdata.hpp"

namespace tarslab {

struct TrainConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double omega = 1e-3;
    double lambda = 0.2;
    PerturbMode mode = PerturbMode::kMask;
    double lr = 5e-3;
    int epochs = 3;
    double grad_clip = 20.0;
    std::uint64_t seed = 0;
    FreqReduce freq_reduce = FreqReduce::kMean;
    AlignKind align = AlignKind::kSpectral;
    PolicyConfig policy;

    void validate() const;
    ObjectiveConfig objective() const;
    // Echo of every resolved field, embedded in logs and checkpoints.
    textio::Record echo() const;
    std::uint64_t config_hash() const;
};

struct StepLog {
    int step = 0;
    int epoch = 0;
    int example_id = 0;
    LossBreakdown loss;
    int n_perturbed = 0;
    double delta_p = 0.0;
};

struct TrainResult {
    ParamSet params;
    ParamSet reference;
    std::vector<StepLog> steps;
    // Full metrics log: config header, one line per step, one per epoch.
    std::vector<std::string> metrics_lines;
    std::vector<std::string> checkpoint_paths;  // one per epoch when enabled
};

// Algorithm: snapshot the frozen reference, then per epoch walk the dataset
// in seeded shuffled order; each example gets a fresh Max Part perturbation
// (skipped in mode none), the combined loss, a global-norm-clipped gradient
// and one SGD step. Aborts on non-finite losses.
TrainResult train(const TrainConfig& cfg, const std::vector<PreferenceExample>& dataset,
                  const WorldSpec& world, const std::string& checkpoint_dir = "");

// Mean loss over the dataset without touching parameters; perturbation draws
// come from a fixed evaluation stream.
LossBreakdown evaluate_loss(const ParamSet& params, const ParamSet& reference,
                            const std::vector<PreferenceExample>& dataset,
                            const WorldSpec& world, const TrainConfig& cfg);

std::string metrics_log_text(const TrainResult& result);

}  // namespace tarslab
