#include "tarslab/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

namespace tarslab {

textio::Record MetricsRecord::echo() const {
    textio::Record r;
    r.set("record", "metrics");
    r.set_double("chair", chair);
    r.set_double("cover", cover);
    r.set_double("hal_rate", hal_rate);
    r.set_double("spurious_rate", spurious_rate);
    r.set_double("pope_acc", pope_acc);
    r.set_double("pope_prec", pope_prec);
    r.set_int("n_eval", n_eval);
    r.set_int("config_hash", static_cast<std::int64_t>(config_hash));
    r.set_int("seed", static_cast<std::int64_t>(seed));
    return r;
}

std::vector<int> parse_mentions(const TokenSeq& response, const WorldSpec& world) {
    std::vector<int> out;
    for (const int id : response.ids) {
        const int obj = world.object_of_name(id);
        if (obj >= 0 && !std::count(out.begin(), out.end(), obj)) out.push_back(obj);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

int count_outside(const std::vector<int>& mentions, const std::vector<int>& truth) {
    int n = 0;
    for (const int m : mentions) {
        if (!std::count(truth.begin(), truth.end(), m)) ++n;
    }
    return n;
}

}  // namespace

double chair_score(const std::vector<int>& mentions, const std::vector<int>& truth) {
    if (mentions.empty()) return 0.0;
    return static_cast<double>(count_outside(mentions, truth)) /
           static_cast<double>(mentions.size());
}

double coverage(const std::vector<int>& mentions, const std::vector<int>& truth) {
    if (truth.empty()) fail_contract("coverage: empty truth set");
    int hit = 0;
    for (const int t : truth) {
        if (std::count(mentions.begin(), mentions.end(), t)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double hal_rate(const std::vector<ResponseAudit>& batch) {
    if (batch.empty()) fail_contract("hal_rate: empty batch");
    int n = 0;
    for (const auto& r : batch) {
        if (count_outside(r.mentions, r.truth) > 0) ++n;
    }
    return static_cast<double>(n) / static_cast<double>(batch.size());
}

double spurious_rate(const std::vector<ResponseAudit>& batch, const WorldSpec& world) {
    if (batch.empty()) fail_contract("spurious_rate: empty batch");
    int n = 0;
    for (const auto& r : batch) {
        bool hit = false;
        for (const auto& pair : world.bias_pairs) {
            const bool mentioned = std::count(r.mentions.begin(), r.mentions.end(),
                                              pair.biased_object) != 0;
            const bool absent = std::count(r.truth.begin(), r.truth.end(),
                                           pair.biased_object) == 0;
            const bool triggered = std::count(r.query.ids.begin(), r.query.ids.end(),
                                              pair.trigger_token) != 0;
            if (mentioned && absent && triggered) {
                hit = true;
                break;
            }
        }
        if (hit) ++n;
    }
    return static_cast<double>(n) / static_cast<double>(batch.size());
}

PopeResponder pope_oracle_responder() {
    return [](const VisualScene&, const std::vector<int>& truth, int object_id) {
        return std::count(truth.begin(), truth.end(), object_id) != 0;
    };
}

PopeResponder pope_constant_yes_responder() {
    return [](const VisualScene&, const std::vector<int>&, int) { return true; };
}

PopeResponder pope_uniform_responder(std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return [rng](const VisualScene&, const std::vector<int>&, int) {
        return rng->uniform() < 0.5;
    };
}

PopeResponder pope_model_responder(const ParamSet& params, const PolicyConfig& cfg,
                                   const WorldSpec& world) {
    return [&params, cfg, &world](const VisualScene& scene, const std::vector<int>&,
                                  int object_id) {
        TokenSeq q;
        q.ids = {vocab::kBos, world.pope_ask_token, world.object(object_id).name_token,
                 vocab::kEos};
        q.special_mask = {true, false, false, true};
        const TokenSeq answer = greedy_decode(params, cfg, scene, q, 1);
        return !answer.ids.empty() && answer.ids[0] == world.yes_token;
    };
}

PopeResult pope_probe(const PopeResponder& responder, const WorldSpec& world, int n_queries,
                      Rng& rng) {
    if (n_queries < 2) fail_contract("pope_probe: need at least 2 queries");
    struct Query {
        VisualScene scene;
        std::vector<int> truth;
        int object_id;
        bool present;
    };
    std::vector<Query> queries;
    queries.reserve(static_cast<std::size_t>(n_queries));
    std::map<int, int> popularity;
    int scene_id = 0;
    int strategy = 0;
    while (static_cast<int>(queries.size()) + 2 <= n_queries) {
        Rng stream = rng.fork("pope_scene", static_cast<std::uint64_t>(scene_id));
        auto [scene, truth] = sample_scene(world, stream, scene_id);
        ++scene_id;
        for (const int t : truth) ++popularity[t];
        std::vector<int> absent;
        for (int oid = 0; oid < world.config.n_objects; ++oid) {
            if (!std::count(truth.begin(), truth.end(), oid)) absent.push_back(oid);
        }
        if (absent.empty()) continue;
        // one present question
        Query qp;
        qp.scene = scene;
        qp.truth = truth;
        qp.object_id = truth[static_cast<std::size_t>(
            stream.uniform_int(0, static_cast<int>(truth.size()) - 1))];
        qp.present = true;
        queries.push_back(std::move(qp));
        // one absent question, strategies rotating uniform/popular/adversarial
        int pick = -1;
        if (strategy == 1) {
            int best_count = -1;
            for (const int oid : absent) {
                const int c = popularity.count(oid) ? popularity[oid] : 0;
                if (c > best_count) {
                    best_count = c;
                    pick = oid;
                }
            }
        } else if (strategy == 2) {
            std::vector<int> adversarial;
            for (const auto& pair : world.bias_pairs) {
                if (std::count(absent.begin(), absent.end(), pair.biased_object)) {
                    adversarial.push_back(pair.biased_object);
                }
            }
            if (!adversarial.empty()) {
                pick = adversarial[static_cast<std::size_t>(
                    stream.uniform_int(0, static_cast<int>(adversarial.size()) - 1))];
            }
        }
        if (pick < 0) {
            pick = absent[static_cast<std::size_t>(
                stream.uniform_int(0, static_cast<int>(absent.size()) - 1))];
        }
        strategy = (strategy + 1) % 3;
        Query qa;
        qa.scene = std::move(scene);
        qa.truth = std::move(truth);
        qa.object_id = pick;
        qa.present = false;
        queries.push_back(std::move(qa));
    }
    int correct = 0, tp = 0, fp = 0;
    for (const auto& q : queries) {
        const bool yes = responder(q.scene, q.truth, q.object_id);
        if (yes == q.present) ++correct;
        if (yes) {
            if (q.present) {
                ++tp;
            } else {
                ++fp;
            }
        }
    }
    PopeResult res;
    res.n_queries = static_cast<int>(queries.size());
    res.acc = static_cast<double>(correct) / static_cast<double>(queries.size());
    res.prec = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    return res;
}

MetricsRecord run_benchmark_with(const ResponseFn& respond, const PopeResponder& pope,
                                 const WorldSpec& world, int n_eval, std::uint64_t seed) {
    if (n_eval < 1) fail_contract("run_benchmark: n_eval must be >= 1");
    constexpr std::uint64_t kEvalNamespace = 1000000;  // disjoint from training streams
    const Rng root(seed);
    std::vector<ResponseAudit> audits;
    double chair_sum = 0.0, cover_sum = 0.0;
    for (int i = 0; i < n_eval; ++i) {
        Rng stream = root.fork("eval_scene", kEvalNamespace + static_cast<std::uint64_t>(i));
        auto [scene, truth] = sample_scene(world, stream, i);
        const TokenSeq query = make_query(truth, world, stream);
        const TokenSeq response = respond(scene, truth, query);
        ResponseAudit audit;
        audit.mentions = parse_mentions(response, world);
        audit.truth = truth;
        audit.query = query;
        chair_sum += chair_score(audit.mentions, audit.truth);
        cover_sum += coverage(audit.mentions, audit.truth);
        audits.push_back(std::move(audit));
    }
    MetricsRecord rec;
    rec.n_eval = n_eval;
    rec.seed = seed;
    rec.chair = chair_sum / static_cast<double>(n_eval);
    rec.cover = cover_sum / static_cast<double>(n_eval);
    rec.hal_rate = hal_rate(audits);
    rec.spurious_rate = spurious_rate(audits, world);
    Rng pope_rng = root.fork("pope", kEvalNamespace);
    const PopeResult pope_res =
        pope_probe(pope, world, 2 * std::max(n_eval, 100), pope_rng);
    rec.pope_acc = pope_res.acc;
    rec.pope_prec = pope_res.prec;
    return rec;
}

MetricsRecord run_benchmark(const ParamSet& params, const PolicyConfig& cfg,
                            const WorldSpec& world, int n_eval, std::uint64_t seed) {
    const ResponseFn respond = [&params, &cfg, &world](const VisualScene& scene,
                                                       const std::vector<int>&,
                                                       const TokenSeq& query) {
        return greedy_decode(params, cfg, scene, query, world.config.n_objects + 2);
    };
    return run_benchmark_with(respond, pope_model_responder(params, cfg, world), world, n_eval,
                              seed);
}

double median(std::vector<double> values) {
    if (values.empty()) fail_contract("median: empty");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

MetricsRecord median_record(const std::vector<MetricsRecord>& rows) {
    const auto pull = [&rows](double MetricsRecord::* field) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.*field);
        return median(std::move(v));
    };
    MetricsRecord m;
    m.chair = pull(&MetricsRecord::chair);
    m.cover = pull(&MetricsRecord::cover);
    m.hal_rate = pull(&MetricsRecord::hal_rate);
    m.spurious_rate = pull(&MetricsRecord::spurious_rate);
    m.pope_acc = pull(&MetricsRecord::pope_acc);
    m.pope_prec = pull(&MetricsRecord::pope_prec);
    m.n_eval = rows.front().n_eval;
    m.config_hash = rows.front().config_hash;
    m.seed = rows.front().seed;
    return m;
}

}  // namespace

AblationTable ablation_sweep(AblationAxis axis, const std::vector<double>& values,
                             const TrainConfig& base, const std::vector<PreferenceExample>& data,
                             const WorldSpec& world, const std::vector<std::uint64_t>& seeds,
                             int n_eval) {
    if (values.size() < 3) fail_contract("ablation_sweep: need at least 3 axis values");
    if (seeds.size() < 3) fail_contract("ablation_sweep: need at least 3 seeds");
    AblationTable table;
    table.axis = axis;
    for (const double value : values) {
        AblationRow row;
        row.axis_value = value;
        std::vector<MetricsRecord> runs;
        for (const std::uint64_t seed : seeds) {
            TrainConfig cfg = base;
            cfg.seed = seed;
            if (axis == AblationAxis::kOmega) {
                cfg.omega = value;
            } else {
                cfg.lambda = value;
            }
            try {
                const TrainResult trained = train(cfg, data, world);
                MetricsRecord rec = run_benchmark(trained.params, cfg.policy, world, n_eval, seed);
                rec.config_hash = cfg.config_hash();
                runs.push_back(rec);
            } catch (const std::exception&) {
                row.failed = true;
            }
        }
        row.seed_count = static_cast<int>(runs.size());
        if (!runs.empty()) row.median = median_record(runs);
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string AblationTable::to_text() const {
    std::ostringstream out;
    for (const auto& row : rows) {
        textio::Record r;
        r.set("record", "ablation_row");
        r.set("axis", axis == AblationAxis::kOmega ? "omega" : "lambda");
        r.set_double("axis_value", row.axis_value);
        r.set_int("seed_count", row.seed_count);
        r.set_int("failed", row.failed ? 1 : 0);
        r.set_double("chair", row.median.chair);
        r.set_double("cover", row.median.cover);
        r.set_double("hal_rate", row.median.hal_rate);
        r.set_double("spurious_rate", row.median.spurious_rate);
        r.set_double("pope_acc", row.median.pope_acc);
        r.set_double("pope_prec", row.median.pope_prec);
        out << r.to_line() << "\n";
    }
    return out.str();
}

std::string AblationTable::to_pretty_table() const {
    std::ostringstream out;
    const char* name = axis == AblationAxis::kOmega ? "omega" : "lambda";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %6s %8s %8s %10s %10s %9s %10s\n", name, "seeds",
                  "chair", "cover", "hal_rate", "spurious", "pope_acc", "pope_prec");
    out << buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-10g %6d %8.4f %8.4f %10.4f %10.4f %9.4f %10.4f%s\n",
                      row.axis_value, row.seed_count, row.median.chair, row.median.cover,
                      row.median.hal_rate, row.median.spurious_rate, row.median.pope_acc,
                      row.median.pope_prec, row.failed ? "  [failures]" : "");
        out << buf;
    }
    return out.str();
}

}  // namespace tarslab
