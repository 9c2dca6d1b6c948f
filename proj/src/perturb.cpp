#include "tarslab/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace tarslab {

const char* perturb_mode_name(PerturbMode m) {
    switch (m) {
        case PerturbMode::kMask: return "mask";
        case PerturbMode::kReplace: return "replace";
        case PerturbMode::kNone: return "none";
    }
    return "none";
}

PerturbMode parse_perturb_mode(const std::string& s) {
    if (s == "mask") return PerturbMode::kMask;
    if (s == "replace") return PerturbMode::kReplace;
    if (s == "none") return PerturbMode::kNone;
    fail_contract("unknown perturbation mode '" + s + "' (expected mask|replace|none)");
}

std::vector<double> token_relevance(const Tensor& relevance) {
    if (relevance.rank() != 2 || relevance.rows() < 1 || relevance.cols() < 1) {
        fail_contract("token_relevance: empty relevance matrix");
    }
    const std::size_t n = relevance.rows(), m = relevance.cols();
    std::vector<double> p(m);
    for (std::size_t j = 0; j < m; ++j) {
        double best = relevance.at(0, j);
        for (std::size_t i = 1; i < n; ++i) best = std::max(best, relevance.at(i, j));
        p[j] = best;
    }
    return p;
}

double uncertainty_margin(const std::vector<double>& p) {
    if (p.size() < 2) return kMarginEpsilon;
    double top = -std::numeric_limits<double>::infinity();
    double second = top;
    for (const double v : p) {
        if (v > top) {
            second = top;
            top = v;
        } else if (v > second) {
            second = v;
        }
    }
    return top - second;
}

std::int64_t perturbation_budget_raw(double omega, double margin) {
    if (!(omega > 0.0)) fail_contract("perturbation_budget: omega must be positive");
    const double divisor = std::max(margin, kMarginEpsilon);
    return static_cast<std::int64_t>(std::floor(omega / divisor)) + 1;
}

std::int64_t perturbation_budget(double omega, double margin, std::int64_t eligible) {
    const std::int64_t raw = perturbation_budget_raw(omega, margin);
    return std::max<std::int64_t>(1, std::min(raw, std::max<std::int64_t>(eligible, 1)));
}

std::vector<int> select_agnostic_tokens(const std::vector<double>& p, std::int64_t budget,
                                        const std::vector<bool>& special_mask) {
    if (p.size() != special_mask.size()) {
        fail_contract("select_agnostic_tokens: relevance and special mask lengths differ");
    }
    std::vector<int> eligible;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!special_mask[i]) eligible.push_back(static_cast<int>(i));
    }
    if (eligible.empty()) return {};
    const std::size_t take = static_cast<std::size_t>(
        std::min<std::int64_t>(budget, static_cast<std::int64_t>(eligible.size())));
    std::stable_sort(eligible.begin(), eligible.end(),
                     [&p](int a, int b) { return p[a] < p[b]; });
    std::vector<int> chosen(eligible.begin(), eligible.begin() + take);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

TokenSeq apply_perturbation(const TokenSeq& q, const std::vector<int>& agnostic_set,
                            PerturbMode mode, int vocab_size, Rng& rng) {
    if (mode == PerturbMode::kNone) return q;
    TokenSeq out = q;
    for (const int i : agnostic_set) {
        if (i < 0 || static_cast<std::size_t>(i) >= q.size()) {
            fail_contract("apply_perturbation: index " + std::to_string(i) + " out of range");
        }
        if (q.special_mask[i]) {
            fail_contract("apply_perturbation: index " + std::to_string(i) +
                          " is a special token");
        }
        if (mode == PerturbMode::kMask) {
            out.ids[i] = vocab::kMask;
            out.special_mask[i] = true;
        } else {
            // uniform content id, never the original
            const int lo = vocab::kNumSpecial;
            const int hi = vocab_size - 1;
            if (hi <= lo) fail_contract("apply_perturbation: content vocabulary too small");
            int draw = static_cast<int>(rng.uniform_int(lo, hi - 1));
            if (draw >= q.ids[i]) ++draw;  // skip the original id
            out.ids[i] = draw;
        }
    }
    return out;
}

std::pair<TokenSeq, PerturbationPlan> perturb(const VisualScene& scene, const TokenSeq& q,
                                              const Scorer& scorer, double omega,
                                              PerturbMode mode, Rng& rng) {
    PerturbationPlan plan;
    plan.omega = omega;
    plan.mode = mode;
    if (mode == PerturbMode::kNone) {
        plan.budget = 0;
        return {q, plan};
    }
    const Tensor gv = encode_visual(scene, scorer.proj);
    const Tensor gt = encode_tokens(q, scorer.table);
    const Tensor rel = relevance_matrix(gv, gt);
    const std::vector<double> p = token_relevance(rel);
    plan.margin = uncertainty_margin(p);
    plan.budget = perturbation_budget_raw(omega, plan.margin);
    plan.agnostic_set = select_agnostic_tokens(p, plan.budget, q.special_mask);
    TokenSeq perturbed = apply_perturbation(q, plan.agnostic_set, mode,
                                            static_cast<int>(scorer.table.weights.rows()), rng);
    return {std::move(perturbed), std::move(plan)};
}

}  // namespace tarslab
