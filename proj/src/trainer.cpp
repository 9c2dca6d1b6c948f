#include "tarslab/trainer.hpp"

#include <cmath>
#include <fstream>

namespace tarslab {

void TrainConfig::validate() const {
    policy.validate();
    if (lambda < 0.0) fail_contract("train config: lambda must be >= 0");
    if (mode != PerturbMode::kNone && !(omega > 0.0)) {
        fail_contract("train config: omega must be positive unless mode is none");
    }
    if (epochs < 1) fail_contract("train config: epochs must be >= 1");
    if (!(alpha > 0.0) || !(beta > 0.0)) fail_contract("train config: alpha and beta must be positive");
    if (!(grad_clip > 0.0)) fail_contract("train config: grad_clip must be positive");
}

ObjectiveConfig TrainConfig::objective() const {
    ObjectiveConfig obj;
    obj.alpha = alpha;
    obj.beta = beta;
    obj.lambda = lambda;
    obj.reduce = freq_reduce;
    obj.align = align;
    return obj;
}

textio::Record TrainConfig::echo() const {
    textio::Record r;
    r.set("record", "config");
    r.set_double("alpha", alpha);
    r.set_double("beta", beta);
    r.set_double("omega", omega);
    r.set_double("lambda", lambda);
    r.set("mode", perturb_mode_name(mode));
    r.set_double("lr", lr);
    r.set_int("epochs", epochs);
    r.set_double("grad_clip", grad_clip);
    r.set_int("seed", static_cast<std::int64_t>(seed));
    r.set("freq_reduce", freq_reduce == FreqReduce::kMean ? "mean" : "sum");
    r.set("align", align == AlignKind::kSpectral ? "spectral" : "contrastive");
    r.set_int("vocab", policy.vocab);
    r.set_int("d", policy.d);
    r.set_int("d_hidden", policy.d_hidden);
    r.set_int("d_raw", policy.d_raw);
    r.set_int("max_seq", policy.max_seq);
    return r;
}

std::uint64_t TrainConfig::config_hash() const {
    const std::string text = echo().to_line();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string step_line(const StepLog& s) {
    textio::Record r;
    r.set("record", "step");
    r.set_int("step", s.step);
    r.set_int("epoch", s.epoch);
    r.set_int("example_id", s.example_id);
    r.set_double("dpo", s.loss.dpo);
    r.set_double("freq", s.loss.freq);
    r.set_double("total", s.loss.total);
    r.set_int("n_perturbed", s.n_perturbed);
    r.set_double("delta_p", s.delta_p);
    return r.to_line();
}

struct StepOutcome {
    LossBreakdown loss;
    PerturbationPlan plan;
};

StepOutcome run_step(ParamSet& params, const ParamSet& reference, const PreferenceExample& ex,
                     const WorldSpec& world, const TrainConfig& cfg, Rng& perturb_rng,
                     bool update) {
    StepOutcome out;
    TokenSeq q_pert = ex.query;
    if (cfg.mode != PerturbMode::kNone) {
        auto [qp, plan] = perturb(ex.scene, ex.query, world.scorer, cfg.omega, cfg.mode,
                                  perturb_rng);
        q_pert = std::move(qp);
        out.plan = std::move(plan);
    }
    ag::Graph g;
    const auto bound_policy = update ? bind_params(g, params) : bind_frozen(g, params);
    const auto bound_ref = bind_frozen(g, reference);
    const LossTerms terms = tars_loss(g, bound_policy, bound_ref, cfg.policy, ex.scene, ex.query,
                                      q_pert, ex.chosen, ex.rejected, cfg.objective());
    out.loss = breakdown_of(g, terms, cfg.objective());
    if (update) {
        GradMap grads = backward(g, terms.total, bound_policy);
        clip_global_norm(grads, cfg.grad_clip);
        sgd_step(params, grads, cfg.lr);
    }
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<PreferenceExample>& dataset,
                  const WorldSpec& world, const std::string& checkpoint_dir) {
    cfg.validate();
    if (dataset.empty()) fail_contract("train: dataset is empty");
    const Rng root(cfg.seed);

    TrainResult result;
    {
        Rng init_stream = root.fork("init", 0);
        result.params = init_params(cfg.policy, init_stream.next_u64());
    }
    result.reference = clone_frozen(result.params);
    const std::uint64_t ref_hash = param_hash(result.reference);

    result.metrics_lines.push_back(cfg.echo().to_line());

    const std::size_t n = dataset.size();
    std::vector<int> order(n);
    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
        Rng shuffle_stream = root.fork("shuffle", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n; i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                shuffle_stream.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        double sum_dpo = 0.0, sum_freq = 0.0, sum_total = 0.0;
        for (const int idx : order) {
            Rng perturb_stream = root.fork(
                "perturb", static_cast<std::uint64_t>(epoch) * n + static_cast<std::uint64_t>(idx));
            const StepOutcome outcome =
                run_step(result.params, result.reference, dataset[static_cast<std::size_t>(idx)],
                         world, cfg, perturb_stream, /*update=*/true);
            if (!std::isfinite(outcome.loss.total)) {
                fail_contract("train: non-finite loss at step " + std::to_string(step) +
                              ", example " + std::to_string(idx));
            }
            StepLog log;
            log.step = step;
            log.epoch = epoch;
            log.example_id = idx;
            log.loss = outcome.loss;
            log.n_perturbed = static_cast<int>(outcome.plan.agnostic_set.size());
            log.delta_p = outcome.plan.margin;
            result.metrics_lines.push_back(step_line(log));
            result.steps.push_back(std::move(log));
            sum_dpo += outcome.loss.dpo;
            sum_freq += outcome.loss.freq;
            sum_total += outcome.loss.total;
            ++step;
        }
        if (param_hash(result.reference) != ref_hash) {
            fail_contract("train: reference parameters mutated during epoch " +
                          std::to_string(epoch));
        }
        textio::Record er;
        er.set("record", "epoch");
        er.set_int("epoch", epoch);
        er.set_double("mean_dpo", sum_dpo / static_cast<double>(n));
        er.set_double("mean_freq", sum_freq / static_cast<double>(n));
        er.set_double("mean_total", sum_total / static_cast<double>(n));
        result.metrics_lines.push_back(er.to_line());
        if (!checkpoint_dir.empty()) {
            const std::string path =
                checkpoint_dir + "/epoch" + std::to_string(epoch) + ".ckpt";
            textio::Record header = cfg.echo();
            header.set("record", "checkpoint");
            header.set_int("epoch", epoch);
            header.set_int("config_hash", static_cast<std::int64_t>(cfg.config_hash()));
            header.set_double("epoch_mean_total", sum_total / static_cast<double>(n));
            save_checkpoint(path, result.params, header);
            result.checkpoint_paths.push_back(path);
        }
    }
    return result;
}

LossBreakdown evaluate_loss(const ParamSet& params, const ParamSet& reference,
                            const std::vector<PreferenceExample>& dataset,
                            const WorldSpec& world, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) fail_contract("evaluate_loss: dataset is empty");
    const Rng root(cfg.seed);
    ParamSet work = params;  // run_step never updates here
    LossBreakdown mean;
    mean.alpha = cfg.alpha;
    mean.beta = cfg.beta;
    mean.lambda = cfg.lambda;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        Rng perturb_stream = root.fork("eval_perturb", static_cast<std::uint64_t>(i));
        const StepOutcome outcome =
            run_step(work, reference, dataset[i], world, cfg, perturb_stream, /*update=*/false);
        mean.dpo += outcome.loss.dpo;
        mean.freq += outcome.loss.freq;
        mean.total += outcome.loss.total;
    }
    const auto n = static_cast<double>(dataset.size());
    mean.dpo /= n;
    mean.freq /= n;
    mean.total /= n;
    return mean;
}

std::string metrics_log_text(const TrainResult& result) {
    std::string out;
    for (const auto& line : result.metrics_lines) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace tarslab
