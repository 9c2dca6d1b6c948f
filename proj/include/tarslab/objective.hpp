#pragma once

#include "tarslab/policy.hpp"

namespace tarslab {

// Frequencies whose magnitude falls below this on any side are dropped from
// the spectral reduction; losing all of them is a hard error.
constexpr double kSpectralFloor = 1e-8;

enum class FreqReduce { kMean, kSum };
enum class AlignKind { kSpectral, kContrastive };

struct ObjectiveConfig {
    double alpha = 1.0;   // DPO scaling
    double beta = 1.0;    // frequency scaling
    double lambda = 0.2;  // weight of the alignment term
    FreqReduce reduce = FreqReduce::kMean;
    AlignKind align = AlignKind::kSpectral;
};

struct LossBreakdown {
    double dpo = 0.0;
    double freq = 0.0;
    double total = 0.0;
    double alpha = 1.0;
    double beta = 1.0;
    double lambda = 0.0;
};

struct LossTerms {
    ag::Var dpo;
    ag::Var freq;   // invalid when lambda == 0
    ag::Var total;  // identical to dpo when lambda == 0
};

// -log sigmoid(alpha * [(log pi(yw|x,q') - log ref(yw|x,q')) -
//                       (log pi(yr|x,q') - log ref(yr|x,q'))]).
// Both policies are evaluated on the perturbed query.
ag::Var dpo_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                 const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                 const VisualScene& scene, const TokenSeq& q_pert, const TokenSeq& y_w,
                 const TokenSeq& y_r, double alpha);

// Spectral preference loss over DFT magnitude spectra: the policy spectrum is
// taken on the perturbed query, both reference spectra on the clean one, and
// the per-frequency log-ratios are reduced over the common frequency range.
ag::Var freq_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                  const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                  const VisualScene& scene, const TokenSeq& q, const TokenSeq& q_pert,
                  const TokenSeq& y_w, const TokenSeq& y_r, double beta, FreqReduce reduce);

// Token-level contrastive alignment (InfoNCE over response positions),
// swappable for the spectral term through ObjectiveConfig::align.
ag::Var contrastive_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                         const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                         const VisualScene& scene, const TokenSeq& q, const TokenSeq& q_pert,
                         const TokenSeq& y_w, double beta);

// total = dpo + lambda * alignment term; lambda == 0 reuses the dpo node so
// the baseline path is bit-identical to plain DPO.
LossTerms tars_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                    const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                    const VisualScene& scene, const TokenSeq& q, const TokenSeq& q_pert,
                    const TokenSeq& y_w, const TokenSeq& y_r, const ObjectiveConfig& obj);

LossBreakdown breakdown_of(const ag::Graph& g, const LossTerms& terms,
                           const ObjectiveConfig& obj);

// Value-only conveniences (throwaway graphs, no gradients).
double dpo_loss_value(const ParamSet& policy, const ParamSet& ref, const PolicyConfig& cfg,
                      const VisualScene& scene, const TokenSeq& q_pert, const TokenSeq& y_w,
                      const TokenSeq& y_r, double alpha);
LossBreakdown tars_loss_value(const ParamSet& policy, const ParamSet& ref,
                              const PolicyConfig& cfg, const VisualScene& scene,
                              const TokenSeq& q, const TokenSeq& q_pert, const TokenSeq& y_w,
                              const TokenSeq& y_r, const ObjectiveConfig& obj);

// Magnitude spectrum of a plain tensor (no graph).
Tensor spectral_magnitude_value(const Tensor& z);

}  // namespace tarslab
