#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tarslab/encoders.hpp"
#include "tarslab/rng.hpp"

namespace tarslab {

// Reserved special-token ids, always at the bottom of the vocabulary.
namespace vocab {
constexpr int kPad = 0;
constexpr int kBos = 1;
constexpr int kEos = 2;
constexpr int kMask = 3;
constexpr int kNumSpecial = 4;
}  // namespace vocab

enum class PerturbMode { kMask, kReplace, kNone };

const char* perturb_mode_name(PerturbMode m);
PerturbMode parse_perturb_mode(const std::string& s);

// Divisor floor for the budget formula when the margin collapses to zero.
constexpr double kMarginEpsilon = 1e-6;

struct Scorer {
    Tensor proj;           // d_raw x d, frozen
    EmbeddingTable table;  // V x d, frozen
};

struct PerturbationPlan {
    std::vector<int> agnostic_set;  // sorted token indices
    std::int64_t budget = 0;        // floor(omega / max(margin, eps)) + 1, pre-clamp
    double margin = 0.0;            // top-two gap of the relevance vector
    double omega = 0.0;
    PerturbMode mode = PerturbMode::kNone;
};

// Per-token visual relevance: best alignment of token i with any object,
// i.e. the column max of S.
std::vector<double> token_relevance(const Tensor& relevance);

// Gap between the largest and second-largest relevance entries. Sequences
// shorter than 2 collapse to kMarginEpsilon.
double uncertainty_margin(const std::vector<double>& p);

std::int64_t perturbation_budget_raw(double omega, double margin);

// Raw budget clamped to [1, max(eligible, 1)].
std::int64_t perturbation_budget(double omega, double margin, std::int64_t eligible);

// The budget lowest-relevance non-special indices, ties by lower index.
// Returns an empty set when nothing is eligible.
std::vector<int> select_agnostic_tokens(const std::vector<double>& p, std::int64_t budget,
                                        const std::vector<bool>& special_mask);

// Mask mode writes the reserved MASK id (and flags it special); replace mode
// draws a uniform content-vocabulary id different from the original.
// Positions outside the set are untouched.
TokenSeq apply_perturbation(const TokenSeq& q, const std::vector<int>& agnostic_set,
                            PerturbMode mode, int vocab_size, Rng& rng);

// Full Max Part: relevance scoring, margin, budget, selection, application.
std::pair<TokenSeq, PerturbationPlan> perturb(const VisualScene& scene, const TokenSeq& q,
                                              const Scorer& scorer, double omega,
                                              PerturbMode mode, Rng& rng);

}  // namespace tarslab
