// Scratch diagnostic for world construction: margin band, relevance tiers,
// budget histograms per omega. Not part of the shipped build.
#include <cmath>
#include <cstdio>
#include <map>

#include "tarslab/evalharness.hpp"

using namespace tarslab;

int main() {
    const WorldSpec world = build_world(WorldConfig{}, 7);
    Rng root(99);
    std::map<int, int> hist_lo, hist_mid, hist_hi;
    double min_margin = 1e9, max_margin = 0.0;
    int trigger_masked_mid = 0, trigger_total = 0, names_masked_mid = 0;
    int trigger_masked_lo = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        Rng stream = root.fork("t", static_cast<std::uint64_t>(t));
        auto [scene, truth] = sample_scene(world, stream, t);
        const TokenSeq q = make_query(truth, world, stream);
        const Tensor gv = encode_visual(scene, world.scorer.proj);
        const Tensor gt = encode_tokens(q, world.scorer.table);
        const auto p = token_relevance(relevance_matrix(gv, gt));
        const double m = uncertainty_margin(p);
        min_margin = std::min(min_margin, m);
        max_margin = std::max(max_margin, m);
        std::int64_t eligible = 0;
        for (const bool s : q.special_mask) eligible += s ? 0 : 1;
        hist_lo[(int)perturbation_budget(1e-4, m, eligible)]++;
        hist_mid[(int)perturbation_budget(1e-3, m, eligible)]++;
        hist_hi[(int)perturbation_budget(1e-2, m, eligible)]++;
        // which tokens masked at each omega
        for (const double omega : {1e-4, 1e-3}) {
            Rng pr = stream.fork("p", 0);
            auto [qp, plan] = perturb(scene, q, world.scorer, omega, PerturbMode::kMask, pr);
            int trig_in_q = 0, trig_masked = 0, names_masked = 0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                const bool is_trig = std::any_of(world.bias_pairs.begin(), world.bias_pairs.end(),
                                                 [&](const BiasPair& b) {
                                                     return b.trigger_token == q.ids[i];
                                                 });
                const bool masked = std::count(plan.agnostic_set.begin(),
                                               plan.agnostic_set.end(), (int)i) > 0;
                if (is_trig) {
                    ++trig_in_q;
                    if (masked) ++trig_masked;
                }
                if (world.is_name_token(q.ids[i]) && masked) ++names_masked;
            }
            if (omega == 1e-3) {
                trigger_total += trig_in_q;
                trigger_masked_mid += trig_masked;
                names_masked_mid += names_masked;
            } else {
                trigger_masked_lo += trig_masked;
            }
        }
    }
    std::printf("margin range: [%g, %g]\n", min_margin, max_margin);
    for (auto& [k, v] : hist_lo) std::printf("omega=1e-4 N=%d: %d\n", k, v);
    for (auto& [k, v] : hist_mid) std::printf("omega=1e-3 N=%d: %d\n", k, v);
    for (auto& [k, v] : hist_hi) std::printf("omega=1e-2 N=%d: %d\n", k, v);
    std::printf("triggers present: %d; masked@1e-3: %d; masked@1e-4: %d; names masked@1e-3: %d\n",
                trigger_total, trigger_masked_mid, trigger_masked_lo, names_masked_mid);

    // tier sanity on one query
    Rng stream = root.fork("t", 0);
    auto [scene, truth] = sample_scene(world, stream, 0);
    const TokenSeq q = make_query(truth, world, stream);
    const auto p = token_relevance(
        relevance_matrix(encode_visual(scene, world.scorer.proj),
                         encode_tokens(q, world.scorer.table)));
    for (std::size_t i = 0; i < q.size(); ++i) {
        std::printf("tok %d (special=%d name=%d): p=%.4f\n", q.ids[i], (int)q.special_mask[i],
                    (int)world.is_name_token(q.ids[i]), p[i]);
    }
    return 0;
}
