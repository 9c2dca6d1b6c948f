#include "tarslab/gradcheck.hpp"

#include <algorithm>

#include "tarslab/objective.hpp"

namespace tarslab {

namespace {

PolicyConfig micro_config() {
    PolicyConfig cfg;
    cfg.vocab = 10;
    cfg.d = 4;
    cfg.d_hidden = 6;
    cfg.d_raw = 3;
    cfg.max_seq = 24;
    return cfg;
}

VisualScene random_scene(Rng& rng, int d_raw) {
    VisualScene scene;
    scene.scene_id = 0;
    const int n = static_cast<int>(rng.uniform_int(1, 3));
    for (int i = 0; i < n; ++i) {
        SceneObject obj;
        obj.object_id = i;
        for (int d = 0; d < d_raw; ++d) obj.feature.push_back(rng.normal());
        scene.objects.push_back(std::move(obj));
    }
    return scene;
}

TokenSeq random_seq(Rng& rng, int vocab, int lo_len, int hi_len, bool lead_bos) {
    TokenSeq t;
    if (lead_bos) {
        t.ids.push_back(vocab::kBos);
        t.special_mask.push_back(true);
    }
    const int len = static_cast<int>(rng.uniform_int(lo_len, hi_len));
    for (int i = 0; i < len; ++i) {
        t.ids.push_back(static_cast<int>(rng.uniform_int(vocab::kNumSpecial, vocab - 1)));
        t.special_mask.push_back(false);
    }
    return t;
}

struct Batch {
    VisualScene scene1, scene2;
    TokenSeq q1, qp1, yw1, yr1;
    TokenSeq q2, qp2, yw2, yr2;
};

Batch random_batch(Rng& rng, const PolicyConfig& cfg) {
    Batch b;
    b.scene1 = random_scene(rng, cfg.d_raw);
    b.scene2 = random_scene(rng, cfg.d_raw);
    b.q1 = random_seq(rng, cfg.vocab, 2, 4, true);
    b.q2 = random_seq(rng, cfg.vocab, 2, 4, true);
    // the perturbed queries mask one non-special position
    b.qp1 = b.q1;
    b.qp1.ids[1] = vocab::kMask;
    b.qp1.special_mask[1] = true;
    b.qp2 = b.q2;
    b.qp2.ids[1] = vocab::kMask;
    b.qp2.special_mask[1] = true;
    b.yw1 = random_seq(rng, cfg.vocab, 2, 5, false);
    b.yr1 = random_seq(rng, cfg.vocab, 2, 5, false);
    b.yw2 = random_seq(rng, cfg.vocab, 2, 5, false);
    b.yr2 = random_seq(rng, cfg.vocab, 2, 5, false);
    return b;
}

}  // namespace

GradCheckReport run_gradcheck(int trials, std::uint64_t seed) {
    const PolicyConfig cfg = micro_config();
    ObjectiveConfig obj;
    obj.alpha = 1.0;
    obj.beta = 1.0;
    obj.lambda = 0.3;
    GradCheckReport report;
    report.trials = trials;
    const Rng root(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Rng stream = root.fork("gradcheck", static_cast<std::uint64_t>(trial));
        const ParamSet policy = init_params(cfg, stream.next_u64());
        const ParamSet ref = init_params(cfg, stream.next_u64());
        const Batch b = random_batch(stream, cfg);

        ag::Graph g;
        const auto bp = bind_params(g, policy);
        const auto br = bind_frozen(g, ref);
        const LossTerms t1 =
            tars_loss(g, bp, br, cfg, b.scene1, b.q1, b.qp1, b.yw1, b.yr1, obj);
        const LossTerms t2 =
            tars_loss(g, bp, br, cfg, b.scene2, b.q2, b.qp2, b.yw2, b.yr2, obj);
        const ag::Var total = ag::scale(g, ag::add(g, t1.total, t2.total), 0.5);
        const GradMap an = backward(g, total, bp);

        const auto loss_fn = [&](const ParamSet& ps) {
            const double l1 =
                tars_loss_value(ps, ref, cfg, b.scene1, b.q1, b.qp1, b.yw1, b.yr1, obj).total;
            const double l2 =
                tars_loss_value(ps, ref, cfg, b.scene2, b.q2, b.qp2, b.yw2, b.yr2, obj).total;
            return 0.5 * (l1 + l2);
        };
        const GradMap fd = fd_gradient(loss_fn, policy);
        report.max_rel_err = std::max(report.max_rel_err, grad_max_rel_err(an, fd));
        for (const auto& [name, tensor] : policy) {
            report.params_checked += static_cast<int>(tensor.numel());
        }
    }
    return report;
}

}  // namespace tarslab
