#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "tarslab/params.hpp"
#include "tarslab/perturb.hpp"
#include "tarslab/textio.hpp"

// The tiny multimodal policy: visual features are projected and mean-pooled
// into a context vector that is added to every token embedding, then a causal
// prefix-mean mixer and a two-layer feed-forward produce per-position hidden
// states and next-token logits. Small enough for exact gradient checks while
// still giving autoregressive likelihoods, L x D hidden states and visual
// conditioning.
namespace tarslab {

struct PolicyConfig {
    int vocab = 68;  // total, including the reserved specials
    int d = 16;
    int d_hidden = 32;
    int d_raw = 12;
    int max_seq = 64;

    void validate() const;
};

// Parameter names inside the ParamSet.
namespace pnames {
inline constexpr const char* kTokenEmbed = "token_embed";
inline constexpr const char* kVisualProj = "visual_proj";
inline constexpr const char* kFuseW1 = "fuse_w1";
inline constexpr const char* kFuseW2 = "fuse_w2";
inline constexpr const char* kOutHead = "out_head";
inline constexpr const char* kPositionEmbed = "position_embed";
}  // namespace pnames

ParamSet init_params(const PolicyConfig& cfg, std::uint64_t seed);

// Deep value copy for use as the frozen reference model.
ParamSet clone_frozen(const ParamSet& params);

struct PolicyOut {
    ag::Var logits;  // L x V, row t predicts y[t]
    ag::Var hidden;  // L x d, fused states at the response token positions
};

// Graph-level forward; bound holds the policy parameters (tracked or frozen).
PolicyOut policy_forward(ag::Graph& g, const std::map<std::string, ag::Var>& bound,
                         const PolicyConfig& cfg, const VisualScene& scene, const TokenSeq& q,
                         const TokenSeq& y);

// Sum of per-step log-probabilities of y under the policy.
ag::Var response_logprob(ag::Graph& g, const std::map<std::string, ag::Var>& bound,
                         const PolicyConfig& cfg, const VisualScene& scene, const TokenSeq& q,
                         const TokenSeq& y);

// Convenience wrappers that run a throwaway graph.
std::pair<Tensor, Tensor> forward_values(const ParamSet& params, const PolicyConfig& cfg,
                                         const VisualScene& scene, const TokenSeq& q,
                                         const TokenSeq& y);
double response_logprob_value(const ParamSet& params, const PolicyConfig& cfg,
                              const VisualScene& scene, const TokenSeq& q, const TokenSeq& y);

// Greedy decoding: argmax per step (ties to the lowest id), stops at EOS or
// max_len.
TokenSeq greedy_decode(const ParamSet& params, const PolicyConfig& cfg, const VisualScene& scene,
                       const TokenSeq& q, int max_len);

// Checkpoint container: structured-text header (config echo and friends)
// followed by named tensors as little-endian f64 blocks.
void save_checkpoint(const std::string& path, const ParamSet& params,
                     const textio::Record& header);
std::pair<ParamSet, textio::Record> load_checkpoint(const std::string& path);

}  // namespace tarslab
