#include <gtest/gtest.h>

#include <cmath>

#include "tarslab/objective.hpp"

using namespace tarslab;

namespace {

PolicyConfig tiny_config() {
    PolicyConfig cfg;
    cfg.vocab = 10;
    cfg.d = 4;
    cfg.d_hidden = 6;
    cfg.d_raw = 3;
    cfg.max_seq = 24;
    return cfg;
}

VisualScene tiny_scene(int n, Rng& rng, int d_raw) {
    VisualScene scene;
    scene.scene_id = 0;
    for (int i = 0; i < n; ++i) {
        SceneObject obj;
        obj.object_id = i;
        for (int d = 0; d < d_raw; ++d) obj.feature.push_back(rng.normal());
        scene.objects.push_back(std::move(obj));
    }
    return scene;
}

TokenSeq seq(std::vector<int> ids) {
    TokenSeq t;
    t.ids = std::move(ids);
    t.special_mask.resize(t.ids.size());
    for (std::size_t i = 0; i < t.ids.size(); ++i) t.special_mask[i] = t.ids[i] < vocab::kNumSpecial;
    return t;
}

// Direct scalar recomputation of the preference loss from four summed
// log-probabilities.
double dpo_oracle(const ParamSet& pol, const ParamSet& ref, const PolicyConfig& cfg,
                  const VisualScene& x, const TokenSeq& q, const TokenSeq& yw, const TokenSeq& yr,
                  double alpha) {
    const double margin = (response_logprob_value(pol, cfg, x, q, yw) -
                           response_logprob_value(ref, cfg, x, q, yw)) -
                          (response_logprob_value(pol, cfg, x, q, yr) -
                           response_logprob_value(ref, cfg, x, q, yr));
    const double z = -alpha * margin;
    return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

// Reduction formula oracle over precomputed magnitude spectra.
double freq_formula(const std::vector<double>& a, const std::vector<double>& b,
                    const std::vector<double>& c, double beta) {
    const std::size_t common = std::min(a.size(), c.size());
    double sum = 0.0;
    int kept = 0;
    for (std::size_t k = 0; k < common; ++k) {
        if (a[k] >= kSpectralFloor && b[k] >= kSpectralFloor && c[k] >= kSpectralFloor) {
            sum += (std::log(a[k] / b[k]) - std::log(a[k] / c[k]));
            ++kept;
        }
    }
    const double z = -beta * (sum / kept);
    return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

std::vector<double> to_vec(const Tensor& t) {
    return std::vector<double>(t.data(), t.data() + t.numel());
}

}  // namespace

TEST(DpoLoss, PolicyEqualsReferenceGivesLn2) {
    const PolicyConfig cfg = tiny_config();
    const ParamSet p = init_params(cfg, 51);
    Rng rng(52);
    const VisualScene x = tiny_scene(2, rng, cfg.d_raw);
    const TokenSeq q = seq({vocab::kBos, 5});
    const TokenSeq yw = seq({6, 7, vocab::kEos});
    const TokenSeq yr = seq({6, 8, 9, vocab::kEos});
    const double loss = dpo_loss_value(p, clone_frozen(p), cfg, x, q, yw, yr, 1.0);
    EXPECT_NEAR(loss, std::log(2.0), 1e-12);
}

TEST(DpoLoss, LargeMarginSaturatesBelow1e20) {
    // Constructed 2-token-vocab style margin: drive the policy's preference
    // for yw so hard that the loss underflows toward zero.
    ag::Graph g;
    const ag::Var margin = g.input(Tensor::scalar(50.0));
    const double loss = g.val(ag::neg_log_sigmoid(g, margin)).item();
    EXPECT_GT(loss, 0.0);
    EXPECT_LT(loss, 1e-20);
}

TEST(DpoLoss, MatchesScalarOracleOnRandomModels) {
    const PolicyConfig cfg = tiny_config();
    Rng rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        const ParamSet pol = init_params(cfg, 100 + static_cast<std::uint64_t>(trial));
        const ParamSet ref = init_params(cfg, 200 + static_cast<std::uint64_t>(trial));
        const VisualScene x = tiny_scene(3, rng, cfg.d_raw);
        const TokenSeq q = seq({vocab::kBos, 4, 5});
        const TokenSeq yw = seq({6, 7, vocab::kEos});
        const TokenSeq yr = seq({6, 9, 8, vocab::kEos});
        const double alpha = 0.5 + rng.uniform();
        const double got = dpo_loss_value(pol, ref, cfg, x, q, yw, yr, alpha);
        const double expect = dpo_oracle(pol, ref, cfg, x, q, yw, yr, alpha);
        EXPECT_NEAR(got, expect, 1e-11);
        EXPECT_GT(got, 0.0);
    }
}

TEST(DpoLoss, StrictlyDecreasingInMargin) {
    ag::Graph g;
    double prev = g.val(ag::neg_log_sigmoid(g, g.input(Tensor::scalar(-3.0)))).item();
    for (double m = -2.5; m <= 3.0; m += 0.5) {
        const double cur = g.val(ag::neg_log_sigmoid(g, g.input(Tensor::scalar(m)))).item();
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(FreqLoss, EqualReferenceHiddenStatesGiveLn2) {
    const PolicyConfig cfg = tiny_config();
    const ParamSet pol = init_params(cfg, 54);
    const ParamSet ref = init_params(cfg, 55);
    Rng rng(56);
    const VisualScene x = tiny_scene(2, rng, cfg.d_raw);
    const TokenSeq q = seq({vocab::kBos, 4});
    const TokenSeq y = seq({6, 7, vocab::kEos});
    ag::Graph g;
    const auto bp = bind_frozen(g, pol);
    const auto br = bind_frozen(g, ref);
    // y_w == y_r makes both reference spectra identical
    const double loss = g.val(freq_loss(g, bp, br, cfg, x, q, q, y, y, 1.0,
                                        FreqReduce::kMean)).item();
    EXPECT_NEAR(loss, std::log(2.0), 1e-12);
}

TEST(FreqLoss, UniformDoublingFormula) {
    // c = 2b uniformly: mean log(c/b) = ln 2, loss = -log sigmoid(beta ln 2)
    const std::vector<double> a = {0.5, 1.25, 3.0};
    const std::vector<double> b = {0.2, 0.4, 0.8};
    std::vector<double> c;
    for (const double v : b) c.push_back(2.0 * v);
    for (const double beta : {1.0, 2.5}) {
        const double got = freq_formula(a, b, c, beta);
        const double expect = -std::log(ag::sigmoid_scalar(beta * std::log(2.0)));
        EXPECT_NEAR(got, expect, 1e-12);
    }
}

TEST(FreqLoss, MatchesComposedSpectralOracle) {
    const PolicyConfig cfg = tiny_config();
    Rng rng(57);
    for (int trial = 0; trial < 8; ++trial) {
        const ParamSet pol = init_params(cfg, 300 + static_cast<std::uint64_t>(trial));
        const ParamSet ref = init_params(cfg, 400 + static_cast<std::uint64_t>(trial));
        const VisualScene x = tiny_scene(2, rng, cfg.d_raw);
        const TokenSeq q = seq({vocab::kBos, 4, 8});
        const TokenSeq qp = seq({vocab::kBos, vocab::kMask, 8});
        const TokenSeq yw = seq({6, 7, vocab::kEos});
        const TokenSeq yr = seq({6, 9, 5, vocab::kEos});
        const double beta = 0.5 + rng.uniform();
        ag::Graph g;
        const auto bp = bind_frozen(g, pol);
        const auto br = bind_frozen(g, ref);
        const double got =
            g.val(freq_loss(g, bp, br, cfg, x, q, qp, yw, yr, beta, FreqReduce::kMean)).item();
        const auto a = to_vec(spectral_magnitude_value(forward_values(pol, cfg, x, qp, yw).second));
        const auto b = to_vec(spectral_magnitude_value(forward_values(ref, cfg, x, q, yw).second));
        const auto c = to_vec(spectral_magnitude_value(forward_values(ref, cfg, x, q, yr).second));
        EXPECT_NEAR(got, freq_formula(a, b, c, beta), 1e-9);
    }
}

TEST(TarsLoss, LambdaZeroIsExactlyDpo) {
    const PolicyConfig cfg = tiny_config();
    const ParamSet pol = init_params(cfg, 58);
    const ParamSet ref = init_params(cfg, 59);
    Rng rng(60);
    const VisualScene x = tiny_scene(2, rng, cfg.d_raw);
    const TokenSeq q = seq({vocab::kBos, 4});
    const TokenSeq yw = seq({6, vocab::kEos});
    const TokenSeq yr = seq({7, 6, vocab::kEos});
    ObjectiveConfig obj;
    obj.lambda = 0.0;
    const LossBreakdown lb = tars_loss_value(pol, ref, cfg, x, q, q, yw, yr, obj);
    EXPECT_EQ(lb.total, lb.dpo);
    EXPECT_EQ(lb.freq, 0.0);
    EXPECT_EQ(lb.dpo, dpo_loss_value(pol, ref, cfg, x, q, yw, yr, obj.alpha));
}

TEST(TarsLoss, BothComponentsLn2SumsToTwoLn2) {
    const PolicyConfig cfg = tiny_config();
    const ParamSet p = init_params(cfg, 61);
    Rng rng(62);
    const VisualScene x = tiny_scene(2, rng, cfg.d_raw);
    const TokenSeq q = seq({vocab::kBos, 4});
    const TokenSeq y = seq({6, 7, vocab::kEos});
    ObjectiveConfig obj;
    obj.lambda = 1.0;
    // policy == reference and y_w == y_r: dpo = freq = ln 2
    const LossBreakdown lb = tars_loss_value(p, clone_frozen(p), cfg, x, q, q, y, y, obj);
    EXPECT_NEAR(lb.dpo, std::log(2.0), 1e-12);
    EXPECT_NEAR(lb.freq, std::log(2.0), 1e-12);
    EXPECT_NEAR(lb.total, 2.0 * std::log(2.0), 1e-12);
}

TEST(TarsLoss, LinearInLambda) {
    const PolicyConfig cfg = tiny_config();
    const ParamSet pol = init_params(cfg, 63);
    const ParamSet ref = init_params(cfg, 64);
    Rng rng(65);
    const VisualScene x = tiny_scene(3, rng, cfg.d_raw);
    const TokenSeq q = seq({vocab::kBos, 4, 5});
    const TokenSeq qp = seq({vocab::kBos, vocab::kMask, 5});
    const TokenSeq yw = seq({6, 7, vocab::kEos});
    const TokenSeq yr = seq({6, 8, 9, vocab::kEos});
    ObjectiveConfig obj;
    obj.lambda = 0.0;
    const LossBreakdown base = tars_loss_value(pol, ref, cfg, x, q, qp, yw, yr, obj);
    for (const double lambda : {0.01, 0.1, 1.0}) {
        obj.lambda = lambda;
        const LossBreakdown lb = tars_loss_value(pol, ref, cfg, x, q, qp, yw, yr, obj);
        EXPECT_NEAR(lb.total - base.total, lambda * lb.freq, 1e-12);
        EXPECT_NEAR(lb.total, lb.dpo + lambda * lb.freq, 1e-12);
        EXPECT_GT(lb.total, 0.0);
        EXPECT_TRUE(std::isfinite(lb.total));
    }
}

TEST(TarsLoss, GradientMatchesFiniteDifferences) {
    const PolicyConfig cfg = tiny_config();
    Rng rng(66);
    for (int trial = 0; trial < 3; ++trial) {
        const ParamSet pol = init_params(cfg, 500 + static_cast<std::uint64_t>(trial));
        const ParamSet ref = init_params(cfg, 600 + static_cast<std::uint64_t>(trial));
        const VisualScene x = tiny_scene(2, rng, cfg.d_raw);
        const TokenSeq q = seq({vocab::kBos, 4, 8});
        const TokenSeq qp = seq({vocab::kBos, vocab::kMask, 8});
        const TokenSeq yw = seq({6, 7, vocab::kEos});
        const TokenSeq yr = seq({6, 9, 5, vocab::kEos});
        ObjectiveConfig obj;
        obj.lambda = 0.35;
        obj.alpha = 1.2;
        obj.beta = 0.8;

        ag::Graph g;
        const auto bp = bind_params(g, pol);
        const auto br = bind_frozen(g, ref);
        const LossTerms terms = tars_loss(g, bp, br, cfg, x, q, qp, yw, yr, obj);
        const GradMap an = backward(g, terms.total, bp);

        const auto loss_fn = [&](const ParamSet& ps) {
            return tars_loss_value(ps, ref, cfg, x, q, qp, yw, yr, obj).total;
        };
        const GradMap fd = fd_gradient(loss_fn, pol);
        EXPECT_LT(grad_max_rel_err(an, fd), 1e-4) << "trial " << trial;
    }
}

TEST(ContrastiveLoss, FiniteAndDifferentiable) {
    const PolicyConfig cfg = tiny_config();
    const ParamSet pol = init_params(cfg, 67);
    const ParamSet ref = init_params(cfg, 68);
    Rng rng(69);
    const VisualScene x = tiny_scene(2, rng, cfg.d_raw);
    const TokenSeq q = seq({vocab::kBos, 4, 5});
    const TokenSeq qp = seq({vocab::kBos, vocab::kMask, 5});
    const TokenSeq yw = seq({6, 7, 8, vocab::kEos});
    const TokenSeq yr = seq({6, 7, 9, 8, vocab::kEos});
    ObjectiveConfig obj;
    obj.lambda = 0.2;
    obj.align = AlignKind::kContrastive;

    ag::Graph g;
    const auto bp = bind_params(g, pol);
    const auto br = bind_frozen(g, ref);
    const LossTerms terms = tars_loss(g, bp, br, cfg, x, q, qp, yw, yr, obj);
    const LossBreakdown lb = breakdown_of(g, terms, obj);
    EXPECT_TRUE(std::isfinite(lb.freq));
    EXPECT_GT(lb.freq, 0.0);
    const GradMap an = backward(g, terms.total, bp);
    const auto loss_fn = [&](const ParamSet& ps) {
        return tars_loss_value(ps, ref, cfg, x, q, qp, yw, yr, obj).total;
    };
    EXPECT_LT(grad_max_rel_err(an, fd_gradient(loss_fn, pol)), 1e-4);
}
