// tarslab: synthetic-world lab for token-adaptive preference optimization.
// Subcommands cover the full workflow: data generation, training, evaluation,
// ablation sweeps, perturbation previews and the gradient self-check.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tarslab/evalharness.hpp"
#include "tarslab/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace tarslab;

namespace {

constexpr const char* kToolVersion = "tarslab 0.1.0";

struct CommonOpts {
    std::string config_path;
    std::string out_base;
    std::string run_dir;  // overrides the timestamped directory
    std::uint64_t seed = 0;
};

std::map<std::string, std::string> load_config(const std::string& path) {
    if (path.empty()) return {};
    return textio::parse_config_file(path);
}

// defaults < config file < explicit flags
template <typename T>
void apply_key(const std::map<std::string, std::string>& file_cfg, const std::string& key,
               const CLI::Option* flag, T& value) {
    const auto it = file_cfg.find(key);
    if (it == file_cfg.end()) return;
    if (flag && flag->count() > 0) return;  // flag wins
    std::istringstream ss(it->second);
    ss >> value;
    if (ss.fail()) throw std::invalid_argument("config: bad value for " + key);
}

fs::path make_run_dir(const CommonOpts& opts, const std::string& subcommand) {
    if (!opts.run_dir.empty()) {
        fs::create_directories(opts.run_dir);
        return opts.run_dir;
    }
    std::string base = opts.out_base;
    if (base.empty()) {
        if (const char* env = std::getenv("TARS_LAB_OUT")) base = env;
    }
    if (base.empty()) base = "runs";
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&now));
    fs::path dir = fs::path(base) / (std::string(stamp) + "-" + subcommand);
    for (int suffix = 1; fs::exists(dir); ++suffix) {
        dir = fs::path(base) /
              (std::string(stamp) + "-" + subcommand + "-" + std::to_string(suffix));
    }
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const CommonOpts& opts,
                    const textio::Record& resolved) {
    textio::Record m;
    m.set("record", "manifest");
    m.set("tool", kToolVersion);
    m.set("subcommand", subcommand);
    m.set("config_file", opts.config_path.empty() ? "-" : opts.config_path);
    m.set_int("seed", static_cast<std::int64_t>(opts.seed));
    std::ofstream out(dir / "manifest.txt", std::ios::binary);
    out << m.to_line() << "\n" << resolved.to_line() << "\n";
}

textio::Record world_config_echo(const WorldConfig& c, std::uint64_t seed, int n_examples) {
    textio::Record r;
    r.set("record", "config");
    r.set_int("seed", static_cast<std::int64_t>(seed));
    r.set_int("n", n_examples);
    r.set_int("n_objects", c.n_objects);
    r.set_int("n_bias_pairs", c.n_bias_pairs);
    r.set_double("rho", c.rho);
    r.set_int("d_raw", c.d_raw);
    r.set_int("d_embed", c.d_embed);
    r.set_int("vocab", c.vocab);
    r.set_double("feature_noise", c.feature_noise);
    r.set_int("scene_min", c.scene_min);
    r.set_int("scene_max", c.scene_max);
    r.set_double("trigger_rate_present", c.trigger_rate_present);
    r.set_int("query_hints", c.query_hints);
    return r;
}

TrainConfig resolve_train_config(const std::map<std::string, std::string>& file_cfg,
                                 CLI::App* cmd, const std::string& mode_str,
                                 const std::string& align_str, const std::string& reduce_str,
                                 TrainConfig cfg) {
    apply_key(file_cfg, "train.alpha", cmd->get_option_no_throw("--alpha"), cfg.alpha);
    apply_key(file_cfg, "train.beta", cmd->get_option_no_throw("--beta"), cfg.beta);
    apply_key(file_cfg, "train.omega", cmd->get_option_no_throw("--omega"), cfg.omega);
    apply_key(file_cfg, "train.lambda", cmd->get_option_no_throw("--lambda"), cfg.lambda);
    apply_key(file_cfg, "train.lr", cmd->get_option_no_throw("--lr"), cfg.lr);
    apply_key(file_cfg, "train.epochs", cmd->get_option_no_throw("--epochs"), cfg.epochs);
    apply_key(file_cfg, "train.grad_clip", cmd->get_option_no_throw("--grad-clip"),
              cfg.grad_clip);
    apply_key(file_cfg, "policy.vocab", nullptr, cfg.policy.vocab);
    apply_key(file_cfg, "policy.d", nullptr, cfg.policy.d);
    apply_key(file_cfg, "policy.d_hidden", nullptr, cfg.policy.d_hidden);
    apply_key(file_cfg, "policy.d_raw", nullptr, cfg.policy.d_raw);
    apply_key(file_cfg, "policy.max_seq", nullptr, cfg.policy.max_seq);
    std::string mode = mode_str, align = align_str, reduce = reduce_str;
    apply_key(file_cfg, "train.mode", cmd->get_option_no_throw("--mode"), mode);
    apply_key(file_cfg, "train.align", cmd->get_option_no_throw("--align"), align);
    apply_key(file_cfg, "train.freq_reduce", cmd->get_option_no_throw("--freq-reduce"), reduce);
    cfg.mode = parse_perturb_mode(mode);
    if (align == "spectral") {
        cfg.align = AlignKind::kSpectral;
    } else if (align == "contrastive") {
        cfg.align = AlignKind::kContrastive;
    } else {
        fail_contract("unknown align kind '" + align + "' (expected spectral|contrastive)");
    }
    if (reduce == "mean") {
        cfg.freq_reduce = FreqReduce::kMean;
    } else if (reduce == "sum") {
        cfg.freq_reduce = FreqReduce::kSum;
    } else {
        fail_contract("unknown freq reduce '" + reduce + "' (expected mean|sum)");
    }
    return cfg;
}

int cmd_gen_data(const CommonOpts& opts, int n, WorldConfig wcfg,
                 const std::map<std::string, std::string>& file_cfg, CLI::App* cmd) {
    apply_key(file_cfg, "world.n_objects", cmd->get_option_no_throw("--objects"), wcfg.n_objects);
    apply_key(file_cfg, "world.n_bias_pairs", cmd->get_option_no_throw("--bias-pairs"),
              wcfg.n_bias_pairs);
    apply_key(file_cfg, "world.rho", cmd->get_option_no_throw("--rho"), wcfg.rho);
    apply_key(file_cfg, "world.d_raw", nullptr, wcfg.d_raw);
    apply_key(file_cfg, "world.d_embed", nullptr, wcfg.d_embed);
    apply_key(file_cfg, "world.vocab", nullptr, wcfg.vocab);
    apply_key(file_cfg, "world.trigger_rate_present", nullptr, wcfg.trigger_rate_present);
    apply_key(file_cfg, "data.n", cmd->get_option_no_throw("--n"), n);

    const fs::path dir = make_run_dir(opts, "gen-data");
    const textio::Record echo = world_config_echo(wcfg, opts.seed, n);
    write_manifest(dir, "gen-data", opts, echo);

    const WorldSpec world = build_world(wcfg, opts.seed);
    const auto data = generate_dataset(world, n, opts.seed);
    {
        std::ofstream out(dir / "world.txt", std::ios::binary);
        out << "record=manifest " << echo.to_line().substr(std::string("record=config ").size())
            << "\n";
        out << world_to_text(world);
    }
    {
        std::ofstream out(dir / "dataset.txt", std::ios::binary);
        out << "record=manifest " << echo.to_line().substr(std::string("record=config ").size())
            << "\n";
        out << dataset_to_text(data);
    }
    std::printf("wrote %s and %s (%d examples)\n", (dir / "world.txt").c_str(),
                (dir / "dataset.txt").c_str(), n);
    return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& data_path,
              const std::string& world_path, const TrainConfig& cfg) {
    const fs::path dir = make_run_dir(opts, "train");
    write_manifest(dir, "train", opts, cfg.echo());
    const WorldSpec world = read_world(world_path);
    const auto data = read_dataset(data_path);
    const TrainResult result = train(cfg, data, world, dir.string());
    {
        std::ofstream out(dir / "metrics.log", std::ios::binary);
        out << metrics_log_text(result);
    }
    const LossBreakdown final_loss =
        evaluate_loss(result.params, result.reference, data, world, cfg);
    std::printf("trained %d epochs over %zu examples; final train loss %.6f (dpo %.6f)\n",
                cfg.epochs, data.size(), final_loss.total, final_loss.dpo);
    std::printf("metrics: %s\n", (dir / "metrics.log").c_str());
    if (!result.checkpoint_paths.empty()) {
        std::printf("checkpoint: %s\n", result.checkpoint_paths.back().c_str());
    }
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt_path, const std::string& world_path,
             int n_eval) {
    const fs::path dir = make_run_dir(opts, "eval");
    const auto [params, header] = load_checkpoint(ckpt_path);
    PolicyConfig pcfg;
    pcfg.vocab = static_cast<int>(header.get_int("vocab"));
    pcfg.d = static_cast<int>(header.get_int("d"));
    pcfg.d_hidden = static_cast<int>(header.get_int("d_hidden"));
    pcfg.d_raw = static_cast<int>(header.get_int("d_raw"));
    pcfg.max_seq = static_cast<int>(header.get_int("max_seq"));
    textio::Record echo = header;
    echo.set_int("n_eval", n_eval);
    echo.set_int("eval_seed", static_cast<std::int64_t>(opts.seed));
    write_manifest(dir, "eval", opts, echo);
    const WorldSpec world = read_world(world_path);
    MetricsRecord rec = run_benchmark(params, pcfg, world, n_eval, opts.seed);
    {
        std::ofstream out(dir / "metrics.txt", std::ios::binary);
        out << echo.to_line() << "\n" << rec.echo().to_line() << "\n";
    }
    std::printf("%s\n", rec.echo().to_line().c_str());
    std::printf(
        "chair %.4f  cover %.4f  hal_rate %.4f  spurious_rate %.4f  pope_acc %.4f  pope_prec "
        "%.4f  (n=%d)\n",
        rec.chair, rec.cover, rec.hal_rate, rec.spurious_rate, rec.pope_acc, rec.pope_prec,
        rec.n_eval);
    return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& data_path,
               const std::string& world_path, const std::string& axis_str,
               const std::vector<double>& values, const std::vector<std::uint64_t>& seeds,
               int n_eval, const TrainConfig& base) {
    if (axis_str != "omega" && axis_str != "lambda") {
        fail_contract("--axis must be omega or lambda, got '" + axis_str + "'");
    }
    const fs::path dir = make_run_dir(opts, "ablate");
    textio::Record echo = base.echo();
    echo.set("axis", axis_str);
    echo.set("values", textio::join_doubles(values));
    echo.set_int("n_eval", n_eval);
    write_manifest(dir, "ablate", opts, echo);
    const WorldSpec world = read_world(world_path);
    const auto data = read_dataset(data_path);
    const AblationAxis axis =
        axis_str == "omega" ? AblationAxis::kOmega : AblationAxis::kLambda;
    const AblationTable table = ablation_sweep(axis, values, base, data, world, seeds, n_eval);
    {
        std::ofstream out(dir / "ablation.txt", std::ios::binary);
        out << echo.to_line() << "\n" << table.to_text();
    }
    std::printf("%s", table.to_pretty_table().c_str());
    std::printf("table: %s\n", (dir / "ablation.txt").c_str());
    return 0;
}

int cmd_perturb_preview(const CommonOpts& opts, const std::string& data_path,
                        const std::string& world_path, int n, double omega,
                        const std::string& mode_str) {
    const WorldSpec world = read_world(world_path);
    const auto data = read_dataset(data_path);
    const PerturbMode mode = parse_perturb_mode(mode_str);
    const Rng root(opts.seed);
    const int count = std::min<int>(n, static_cast<int>(data.size()));
    for (int i = 0; i < count; ++i) {
        const auto& ex = data[static_cast<std::size_t>(i)];
        Rng stream = root.fork("preview", static_cast<std::uint64_t>(i));
        const auto [qp, plan] = perturb(ex.scene, ex.query, world.scorer, omega, mode, stream);
        textio::Record r;
        r.set("record", "plan");
        r.set_int("example", i);
        r.set_double("omega", plan.omega);
        r.set("mode", perturb_mode_name(plan.mode));
        r.set_double("delta_p", plan.margin);
        r.set_int("budget", plan.budget);
        r.set_int("n_perturbed", static_cast<std::int64_t>(plan.agnostic_set.size()));
        r.set("agnostic_set", textio::join_ints(plan.agnostic_set));
        r.set("query", textio::join_ints(ex.query.ids));
        r.set("perturbed", textio::join_ints(qp.ids));
        std::printf("%s\n", r.to_line().c_str());
    }
    return 0;
}

int cmd_gradcheck(const CommonOpts& opts, int trials) {
    const GradCheckReport report = run_gradcheck(trials, opts.seed);
    std::printf("gradcheck: %d trials, %d parameter entries, max rel err %.3e\n", report.trials,
                report.params_checked, report.max_rel_err);
    if (report.max_rel_err < 1e-4) {
        std::printf("PASS (threshold 1e-4)\n");
        return 0;
    }
    std::printf("FAIL (threshold 1e-4)\n");
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kToolVersion) +
                 " - token-adaptive preference optimization on a synthetic multimodal world"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CommonOpts opts;
    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a biased preference dataset + world");
    int gen_n = 4800;
    WorldConfig wcfg;
    gen->add_option("--n", gen_n, "number of preference pairs");
    gen->add_option("--objects", wcfg.n_objects, "catalog size");
    gen->add_option("--bias-pairs", wcfg.n_bias_pairs, "planted trigger/object pairs");
    gen->add_option("--rho", wcfg.rho, "trigger co-occurrence rate");

    // train
    auto* tr = app.add_subcommand("train", "run preference training");
    std::string data_path, world_path;
    TrainConfig tcfg;
    std::string mode_str = "mask", align_str = "spectral", reduce_str = "mean";
    tr->add_option("--data", data_path, "dataset file")->required();
    tr->add_option("--world", world_path, "world file")->required();
    tr->add_option("--mode", mode_str, "perturbation mode: mask|replace|none");
    tr->add_option("--omega", tcfg.omega, "perturbation budget coefficient");
    tr->add_option("--lambda", tcfg.lambda, "spectral loss weight");
    tr->add_option("--alpha", tcfg.alpha, "preference scaling");
    tr->add_option("--beta", tcfg.beta, "frequency scaling");
    tr->add_option("--lr", tcfg.lr, "learning rate");
    tr->add_option("--epochs", tcfg.epochs, "training epochs");
    tr->add_option("--grad-clip", tcfg.grad_clip, "global-norm gradient clip");
    tr->add_option("--align", align_str, "alignment term: spectral|contrastive");
    tr->add_option("--freq-reduce", reduce_str, "frequency reduction: mean|sum");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on held-out scenes");
    std::string ckpt_path, eval_world;
    int n_eval = 500;
    ev->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
    ev->add_option("--world", eval_world, "world file")->required();
    ev->add_option("--n-eval", n_eval, "held-out scenes");

    // ablate
    auto* ab = app.add_subcommand("ablate", "sweep omega or lambda over seeds");
    std::string ab_data, ab_world, axis_str;
    std::vector<double> ab_values;
    std::vector<std::uint64_t> ab_seeds;
    int ab_n_eval = 300;
    TrainConfig ab_cfg;
    std::string ab_mode = "mask", ab_align = "spectral", ab_reduce = "mean";
    ab->add_option("--data", ab_data, "dataset file")->required();
    ab->add_option("--world", ab_world, "world file")->required();
    ab->add_option("--axis", axis_str, "omega|lambda")->required();
    ab->add_option("--values", ab_values, "axis values")->required()->delimiter(',');
    ab->add_option("--seeds", ab_seeds, "training seeds")->required()->delimiter(',');
    ab->add_option("--n-eval", ab_n_eval, "held-out scenes per run");
    ab->add_option("--mode", ab_mode, "perturbation mode: mask|replace|none");
    ab->add_option("--omega", ab_cfg.omega, "base omega");
    ab->add_option("--lambda", ab_cfg.lambda, "base lambda");
    ab->add_option("--lr", ab_cfg.lr, "learning rate");
    ab->add_option("--epochs", ab_cfg.epochs, "training epochs");
    ab->add_option("--align", ab_align, "alignment term: spectral|contrastive");
    ab->add_option("--freq-reduce", ab_reduce, "frequency reduction: mean|sum");

    // perturb-preview
    auto* pp = app.add_subcommand("perturb-preview", "dump perturbation plans for inspection");
    std::string pp_data, pp_world, pp_mode = "mask";
    int pp_n = 10;
    double pp_omega = 1e-3;
    pp->add_option("--data", pp_data, "dataset file")->required();
    pp->add_option("--world", pp_world, "world file")->required();
    pp->add_option("--n", pp_n, "examples to preview");
    pp->add_option("--omega", pp_omega, "perturbation budget coefficient");
    pp->add_option("--mode", pp_mode, "perturbation mode: mask|replace");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient self-check");
    int gc_trials = 20;
    gc->add_option("--trials", gc_trials, "random micro-models to check");

    for (auto* cmd : {gen, tr, ev, ab, pp, gc}) {
        cmd->add_option("--seed", opts.seed, "root seed");
        cmd->add_option("--config", opts.config_path, "flat key=value config file");
        cmd->add_option("--out", opts.out_base,
                        "output base directory (default $TARS_LAB_OUT or ./runs)");
        cmd->add_option("--run-dir", opts.run_dir,
                        "exact run directory (overrides the timestamped default)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const auto file_cfg = load_config(opts.config_path);
        if (gen->parsed()) {
            std::uint64_t seed = opts.seed;
            apply_key(file_cfg, "data.seed", gen->get_option_no_throw("--seed"), seed);
            opts.seed = seed;
            return cmd_gen_data(opts, gen_n, wcfg, file_cfg, gen);
        }
        if (tr->parsed()) {
            TrainConfig cfg =
                resolve_train_config(file_cfg, tr, mode_str, align_str, reduce_str, tcfg);
            cfg.seed = opts.seed;
            return cmd_train(opts, data_path, world_path, cfg);
        }
        if (ev->parsed()) {
            apply_key(file_cfg, "eval.n_eval", ev->get_option_no_throw("--n-eval"), n_eval);
            return cmd_eval(opts, ckpt_path, eval_world, n_eval);
        }
        if (ab->parsed()) {
            TrainConfig cfg =
                resolve_train_config(file_cfg, ab, ab_mode, ab_align, ab_reduce, ab_cfg);
            cfg.seed = opts.seed;
            return cmd_ablate(opts, ab_data, ab_world, axis_str, ab_values, ab_seeds, ab_n_eval,
                              cfg);
        }
        if (pp->parsed()) {
            return cmd_perturb_preview(opts, pp_data, pp_world, pp_n, pp_omega, pp_mode);
        }
        if (gc->parsed()) {
            return cmd_gradcheck(opts, gc_trials);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
