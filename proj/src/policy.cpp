#include "tarslab/policy.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace tarslab {

void PolicyConfig::validate() const {
    if (vocab < 1 || d < 1 || d_hidden < 1 || d_raw < 1 || max_seq < 2) {
        fail_contract("policy config: all dimensions must be positive (max_seq >= 2)");
    }
}

ParamSet init_params(const PolicyConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const double s = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    Rng root(seed);
    ParamSet p;
    const auto mk = [&](const char* name, std::size_t r, std::size_t c) {
        Rng stream = root.fork(name, 0);
        p.emplace(name, Tensor::uniform({r, c}, -s, s, stream));
    };
    const auto V = static_cast<std::size_t>(cfg.vocab);
    const auto d = static_cast<std::size_t>(cfg.d);
    mk(pnames::kTokenEmbed, V, d);
    mk(pnames::kVisualProj, static_cast<std::size_t>(cfg.d_raw), d);
    mk(pnames::kFuseW1, d, static_cast<std::size_t>(cfg.d_hidden));
    mk(pnames::kFuseW2, static_cast<std::size_t>(cfg.d_hidden), d);
    mk(pnames::kOutHead, d, V);
    mk(pnames::kPositionEmbed, static_cast<std::size_t>(cfg.max_seq), d);
    return p;
}

ParamSet clone_frozen(const ParamSet& params) { return params; }

namespace {

const ag::Var& bound_var(const std::map<std::string, ag::Var>& bound, const char* name) {
    const auto it = bound.find(name);
    if (it == bound.end()) fail_contract(std::string("policy: missing parameter ") + name);
    return it->second;
}

Tensor scene_features(const VisualScene& scene, std::size_t d_raw) {
    if (scene.objects.empty()) fail_contract("policy: scene has no objects");
    Tensor feats({scene.objects.size(), d_raw});
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const auto& f = scene.objects[i].feature;
        if (f.size() != d_raw) {
            fail_contract("policy: object feature length " + std::to_string(f.size()) +
                          " does not match d_raw " + std::to_string(d_raw));
        }
        std::copy(f.begin(), f.end(), feats.data() + i * d_raw);
    }
    return feats;
}

// Shared trunk over the q ++ y token stream; returns the full T x d hidden
// block and T x V logits.
struct Trunk {
    ag::Var hidden_all;
    ag::Var logits_all;
};

Trunk policy_trunk(ag::Graph& g, const std::map<std::string, ag::Var>& bound,
                   const PolicyConfig& cfg, const VisualScene& scene,
                   const std::vector<int>& tokens) {
    cfg.validate();
    for (const int id : tokens) {
        if (id < 0 || id >= cfg.vocab) {
            fail_contract("policy: token id " + std::to_string(id) + " outside vocab " +
                          std::to_string(cfg.vocab));
        }
    }
    const ag::Var feats = g.input(scene_features(scene, static_cast<std::size_t>(cfg.d_raw)));
    const ag::Var vis = ag::matmul(g, feats, bound_var(bound, pnames::kVisualProj));
    const ag::Var pool = ag::mean_rows(g, vis);

    const ag::Var emb = ag::gather_rows(g, bound_var(bound, pnames::kTokenEmbed), tokens);
    std::vector<int> positions(tokens.size());
    std::iota(positions.begin(), positions.end(), 0);
    const ag::Var pos = ag::gather_rows(g, bound_var(bound, pnames::kPositionEmbed), positions);
    ag::Var x = ag::add(g, emb, pos);
    x = ag::add_rowvec(g, x, pool);

    const ag::Var ctx = ag::causal_prefix_mean(g, x);
    const ag::Var h0 = ag::add(g, x, ctx);
    const ag::Var mid = ag::tanh_vec(g, ag::matmul(g, h0, bound_var(bound, pnames::kFuseW1)));
    const ag::Var ff = ag::matmul(g, mid, bound_var(bound, pnames::kFuseW2));
    const ag::Var hidden = ag::add(g, h0, ff);
    const ag::Var logits = ag::matmul(g, hidden, bound_var(bound, pnames::kOutHead));
    return {hidden, logits};
}

}  // namespace

PolicyOut policy_forward(ag::Graph& g, const std::map<std::string, ag::Var>& bound,
                         const PolicyConfig& cfg, const VisualScene& scene, const TokenSeq& q,
                         const TokenSeq& y) {
    if (q.size() < 1) fail_contract("policy: query must not be empty");
    if (y.size() < 1) fail_contract("policy: response must not be empty");
    const std::size_t total = scene.objects.size() + q.size() + y.size();
    if (total > static_cast<std::size_t>(cfg.max_seq)) {
        fail_contract("policy: sequence length " + std::to_string(total) + " exceeds max_seq " +
                      std::to_string(cfg.max_seq));
    }
    std::vector<int> tokens = q.ids;
    tokens.insert(tokens.end(), y.ids.begin(), y.ids.end());
    const Trunk trunk = policy_trunk(g, bound, cfg, scene, tokens);
    const std::size_t m = q.size(), len = y.size();
    // Row t of the logits predicts y[t] from q and y[<t]; the hidden states
    // handed to the spectral loss are those of the response tokens.
    return {ag::slice_rows(g, trunk.logits_all, m - 1, len),
            ag::slice_rows(g, trunk.hidden_all, m, len)};
}

ag::Var response_logprob(ag::Graph& g, const std::map<std::string, ag::Var>& bound,
                         const PolicyConfig& cfg, const VisualScene& scene, const TokenSeq& q,
                         const TokenSeq& y) {
    const PolicyOut out = policy_forward(g, bound, cfg, scene, q, y);
    const ag::Var ls = ag::log_softmax_rows(g, out.logits);
    return ag::sum_select(g, ls, y.ids);
}

std::pair<Tensor, Tensor> forward_values(const ParamSet& params, const PolicyConfig& cfg,
                                         const VisualScene& scene, const TokenSeq& q,
                                         const TokenSeq& y) {
    ag::Graph g;
    const auto bound = bind_frozen(g, params);
    const PolicyOut out = policy_forward(g, bound, cfg, scene, q, y);
    return {g.val(out.logits), g.val(out.hidden)};
}

double response_logprob_value(const ParamSet& params, const PolicyConfig& cfg,
                              const VisualScene& scene, const TokenSeq& q, const TokenSeq& y) {
    ag::Graph g;
    const auto bound = bind_frozen(g, params);
    return g.val(response_logprob(g, bound, cfg, scene, q, y)).item();
}

TokenSeq greedy_decode(const ParamSet& params, const PolicyConfig& cfg, const VisualScene& scene,
                       const TokenSeq& q, int max_len) {
    if (max_len < 1) fail_contract("greedy_decode: max_len must be >= 1");
    TokenSeq y;
    for (int step = 0; step < max_len; ++step) {
        if (scene.objects.size() + q.size() + y.size() + 1 >
            static_cast<std::size_t>(cfg.max_seq)) {
            break;
        }
        ag::Graph g;
        const auto bound = bind_frozen(g, params);
        std::vector<int> tokens = q.ids;
        tokens.insert(tokens.end(), y.ids.begin(), y.ids.end());
        const Trunk trunk = policy_trunk(g, bound, cfg, scene, tokens);
        const Tensor& logits = g.val(trunk.logits_all);
        const std::size_t last = logits.rows() - 1;
        int best = 0;
        double best_v = logits.at(last, 0);
        for (int v = 1; v < cfg.vocab; ++v) {
            const double lv = logits.at(last, static_cast<std::size_t>(v));
            if (lv > best_v) {  // ties keep the lower id
                best_v = lv;
                best = v;
            }
        }
        y.ids.push_back(best);
        y.special_mask.push_back(best < vocab::kNumSpecial);
        if (best == vocab::kEos) break;
    }
    return y;
}

// ---------------------------------------------------------------------------
// checkpoint io

void save_checkpoint(const std::string& path, const ParamSet& params,
                     const textio::Record& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_contract("save_checkpoint: cannot open " + path);
    out << "tarslab-checkpoint v1\n";
    out << header.to_line() << "\n";
    out << "tensors " << params.size() << "\n";
    for (const auto& [name, tensor] : params) {
        out << "tensor name=" << name << " shape=";
        const auto& shape = tensor.shape();
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) out << ',';
            out << shape[i];
        }
        out << "\n";
    }
    out << "data\n";
    for (const auto& [name, tensor] : params) {
        out.write(reinterpret_cast<const char*>(tensor.data()),
                  static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    }
    if (!out) fail_contract("save_checkpoint: write failed for " + path);
}

std::pair<ParamSet, textio::Record> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_contract("load_checkpoint: cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "tarslab-checkpoint v1") {
        fail_contract("load_checkpoint: bad magic in " + path);
    }
    std::getline(in, line);
    const textio::Record header = textio::Record::parse(line);
    std::getline(in, line);
    if (line.rfind("tensors ", 0) != 0) fail_contract("load_checkpoint: missing tensor count");
    const std::size_t count = std::stoull(line.substr(8));
    std::vector<std::pair<std::string, std::vector<std::size_t>>> decls;
    for (std::size_t i = 0; i < count; ++i) {
        std::getline(in, line);
        if (line.rfind("tensor ", 0) != 0) fail_contract("load_checkpoint: bad tensor line");
        const textio::Record r = textio::Record::parse(line.substr(7));
        std::vector<std::size_t> shape;
        for (const int v : textio::parse_ints(r.get("shape"))) {
            shape.push_back(static_cast<std::size_t>(v));
        }
        decls.emplace_back(r.get("name"), std::move(shape));
    }
    std::getline(in, line);
    if (line != "data") fail_contract("load_checkpoint: missing data marker");
    ParamSet params;
    for (auto& [name, shape] : decls) {
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) fail_contract("load_checkpoint: truncated data in " + path);
        params.emplace(name, std::move(t));
    }
    return {std::move(params), header};
}

}  // namespace tarslab
