#include "tarslab/objective.hpp"

#include <algorithm>
#include <cmath>

namespace tarslab {

ag::Var dpo_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                 const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                 const VisualScene& scene, const TokenSeq& q_pert, const TokenSeq& y_w,
                 const TokenSeq& y_r, double alpha) {
    if (!(alpha > 0.0)) fail_contract("dpo_loss: alpha must be positive");
    const ag::Var lw_pol = response_logprob(g, policy, cfg, scene, q_pert, y_w);
    const ag::Var lr_pol = response_logprob(g, policy, cfg, scene, q_pert, y_r);
    const ag::Var lw_ref = response_logprob(g, ref, cfg, scene, q_pert, y_w);
    const ag::Var lr_ref = response_logprob(g, ref, cfg, scene, q_pert, y_r);
    const ag::Var margin =
        ag::sub(g, ag::sub(g, lw_pol, lw_ref), ag::sub(g, lr_pol, lr_ref));
    return ag::neg_log_sigmoid(g, ag::scale(g, margin, alpha));
}

namespace {

ag::Var hidden_of(ag::Graph& g, const std::map<std::string, ag::Var>& bound,
                  const PolicyConfig& cfg, const VisualScene& scene, const TokenSeq& q,
                  const TokenSeq& y) {
    return policy_forward(g, bound, cfg, scene, q, y).hidden;
}

}  // namespace

ag::Var freq_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                  const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                  const VisualScene& scene, const TokenSeq& q, const TokenSeq& q_pert,
                  const TokenSeq& y_w, const TokenSeq& y_r, double beta, FreqReduce reduce) {
    if (!(beta > 0.0)) fail_contract("freq_loss: beta must be positive");
    const ag::Var a = ag::spectral_magnitude(g, hidden_of(g, policy, cfg, scene, q_pert, y_w));
    const ag::Var b = ag::spectral_magnitude(g, hidden_of(g, ref, cfg, scene, q, y_w));
    const ag::Var c = ag::spectral_magnitude(g, hidden_of(g, ref, cfg, scene, q, y_r));
    // Responses may differ in length; ratios are taken over the common
    // low-frequency range.
    const std::size_t common = std::min(g.val(a).numel(), g.val(c).numel());
    std::vector<int> keep;
    for (std::size_t k = 0; k < common; ++k) {
        if (g.val(a)[k] >= kSpectralFloor && g.val(b)[k] >= kSpectralFloor &&
            g.val(c)[k] >= kSpectralFloor) {
            keep.push_back(static_cast<int>(k));
        }
    }
    if (keep.empty()) {
        fail_contract("freq_loss: all frequencies below floor, hidden states are degenerate");
    }
    const ag::Var la = ag::log_vec(g, ag::select_entries(g, a, keep));
    const ag::Var lb = ag::log_vec(g, ag::select_entries(g, b, keep));
    const ag::Var lc = ag::log_vec(g, ag::select_entries(g, c, keep));
    // log(a/b) - log(a/c), kept in this form so gradients flow as written.
    const ag::Var terms = ag::sub(g, ag::sub(g, la, lb), ag::sub(g, la, lc));
    const ag::Var reduced =
        reduce == FreqReduce::kMean ? ag::mean_vec(g, terms) : ag::sum(g, terms);
    return ag::neg_log_sigmoid(g, ag::scale(g, reduced, beta));
}

ag::Var contrastive_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                         const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                         const VisualScene& scene, const TokenSeq& q, const TokenSeq& q_pert,
                         const TokenSeq& y_w, double beta) {
    if (!(beta > 0.0)) fail_contract("contrastive_loss: beta must be positive");
    const ag::Var z_pol = hidden_of(g, policy, cfg, scene, q_pert, y_w);
    const ag::Var z_ref = hidden_of(g, ref, cfg, scene, q, y_w);
    // InfoNCE over response positions: each perturbed-input state must point
    // at its own clean reference state among all positions.
    const ag::Var sims = ag::matmul(g, z_pol, g.input(ag::t_transpose(g.val(z_ref))));
    const ag::Var logp = ag::log_softmax_rows(g, sims);
    std::vector<int> diag(g.val(z_pol).rows());
    for (std::size_t t = 0; t < diag.size(); ++t) diag[t] = static_cast<int>(t);
    const ag::Var picked = ag::sum_select(g, logp, diag);
    const double inv_len = -1.0 / static_cast<double>(diag.size());
    return ag::scale(g, picked, inv_len * beta);
}

LossTerms tars_loss(ag::Graph& g, const std::map<std::string, ag::Var>& policy,
                    const std::map<std::string, ag::Var>& ref, const PolicyConfig& cfg,
                    const VisualScene& scene, const TokenSeq& q, const TokenSeq& q_pert,
                    const TokenSeq& y_w, const TokenSeq& y_r, const ObjectiveConfig& obj) {
    if (obj.lambda < 0.0) fail_contract("tars_loss: lambda must be >= 0");
    LossTerms terms;
    terms.dpo = dpo_loss(g, policy, ref, cfg, scene, q_pert, y_w, y_r, obj.alpha);
    if (obj.lambda == 0.0) {
        terms.total = terms.dpo;
        return terms;
    }
    terms.freq =
        obj.align == AlignKind::kSpectral
            ? freq_loss(g, policy, ref, cfg, scene, q, q_pert, y_w, y_r, obj.beta, obj.reduce)
            : contrastive_loss(g, policy, ref, cfg, scene, q, q_pert, y_w, obj.beta);
    terms.total = ag::add(g, terms.dpo, ag::scale(g, terms.freq, obj.lambda));
    return terms;
}

LossBreakdown breakdown_of(const ag::Graph& g, const LossTerms& terms,
                           const ObjectiveConfig& obj) {
    LossBreakdown out;
    out.dpo = g.val(terms.dpo).item();
    out.freq = terms.freq.valid() ? g.val(terms.freq).item() : 0.0;
    out.total = g.val(terms.total).item();
    out.alpha = obj.alpha;
    out.beta = obj.beta;
    out.lambda = obj.lambda;
    return out;
}

double dpo_loss_value(const ParamSet& policy, const ParamSet& ref, const PolicyConfig& cfg,
                      const VisualScene& scene, const TokenSeq& q_pert, const TokenSeq& y_w,
                      const TokenSeq& y_r, double alpha) {
    ag::Graph g;
    const auto bp = bind_frozen(g, policy);
    const auto br = bind_frozen(g, ref);
    return g.val(dpo_loss(g, bp, br, cfg, scene, q_pert, y_w, y_r, alpha)).item();
}

LossBreakdown tars_loss_value(const ParamSet& policy, const ParamSet& ref,
                              const PolicyConfig& cfg, const VisualScene& scene,
                              const TokenSeq& q, const TokenSeq& q_pert, const TokenSeq& y_w,
                              const TokenSeq& y_r, const ObjectiveConfig& obj) {
    ag::Graph g;
    const auto bp = bind_frozen(g, policy);
    const auto br = bind_frozen(g, ref);
    const LossTerms terms = tars_loss(g, bp, br, cfg, scene, q, q_pert, y_w, y_r, obj);
    return breakdown_of(g, terms, obj);
}

Tensor spectral_magnitude_value(const Tensor& z) {
    ag::Graph g;
    return g.val(ag::spectral_magnitude(g, g.input(z)));
}

}  // namespace tarslab
