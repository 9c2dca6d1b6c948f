#include "tarslab/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tarslab/autodiff.hpp"
#include "tarslab/kernels.hpp"
#include "tarslab/textio.hpp"

namespace tarslab {

namespace {

// Scorer alignment tiers as fractions of the anchor level. Queries then rank
// anchors > name hints > ASK > FILLER > triggers, so the lowest-relevance
// tokens the perturbation selects are exactly the triggers, then template
// filler, and present-object names only under a large budget.
constexpr double kTierName = 0.70;
constexpr double kTierAsk = 0.50;
constexpr double kTierFiller2 = 0.33;
constexpr double kTierTriggerLo = 0.14;
constexpr double kTierTriggerHi = 0.20;
constexpr double kTierFiller = 0.05;  // below the triggers: the first token masked
// Prototypes sit on a cone around a shared axis; the clustering raises the
// equal-alignment anchor level well above the feature-noise jitter.
constexpr double kConeAxisCos = 0.55;
constexpr double kAnchorLevelMin = 0.45;
constexpr double kAnchorLevelMax = 0.90;
// Anchor tilt magnitude; with the accepted z band this pins the top-two
// relevance gap into roughly [3e-4, 9e-4].
constexpr double kAnchorTilt = 1e-3;
constexpr double kZBandLo = 0.30;
constexpr double kZBandHi = 0.90;
constexpr int kBuildRetries = 20000;

void vec_normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (const double x : v) sq += x * x;
    const double n = std::sqrt(sq);
    if (n == 0.0) fail_contract("build_world: zero vector during construction");
    for (double& x : v) x /= n;
}

double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    return kern::active().dot(a.data(), b.data(), a.size());
}

// Minimal-norm x with g_o . x equal for all o: solve G y = 1 on the Gram
// matrix and take x = sum_o y_o g_o. Returns false on an ill-conditioned
// Gram.
bool equal_cos_direction(const std::vector<std::vector<double>>& g, std::vector<double>& out) {
    const std::size_t n = g.size(), d = g[0].size();
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = vec_dot(g[i], g[j]);
        a[i][n] = 1.0;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        }
        if (std::fabs(a[piv][col]) < 1e-9) return false;
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    out.assign(d, 0.0);
    for (std::size_t o = 0; o < n; ++o) {
        const double y = a[o][n] / a[o][o];
        for (std::size_t c = 0; c < d; ++c) out[c] += y * g[o][c];
    }
    vec_normalize(out);
    return true;
}

// Removes the projection of v onto each (orthonormalized) basis vector.
void project_out(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (const auto& b : basis) {
        const double d = vec_dot(v, b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * b[i];
    }
}

std::vector<double> random_unit(std::size_t d, Rng& rng) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.normal();
    vec_normalize(v);
    return v;
}

}  // namespace

void WorldConfig::validate() const {
    if (n_objects < 4) fail_contract("world: need at least 4 objects");
    if (n_bias_pairs < 1) fail_contract("world: need at least 1 bias pair");
    if (rho < 0.0 || rho > 1.0) fail_contract("world: rho must be in [0, 1]");
    if (scene_min < 1 || scene_max < scene_min || scene_max > n_objects) {
        fail_contract("world: invalid scene size range");
    }
    if (d_embed <= n_objects) fail_contract("world: d_embed must exceed n_objects");
    // name + trigger + template + yes/no tokens must fit the content range
    const int needed = vocab::kNumSpecial + n_objects + n_bias_pairs + 6;
    if (vocab < needed + 8) {
        fail_contract("world: vocabulary too small for catalog plus replacement pool");
    }
}

bool WorldSpec::is_name_token(int id) const { return object_of_name(id) >= 0; }

int WorldSpec::object_of_name(int id) const {
    for (const auto& obj : catalog) {
        if (obj.name_token == id) return obj.object_id;
    }
    return -1;
}

const CatalogObject& WorldSpec::object(int object_id) const {
    for (const auto& obj : catalog) {
        if (obj.object_id == object_id) return obj;
    }
    fail_contract("world: unknown object id " + std::to_string(object_id));
}

WorldSpec build_world(const WorldConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const Rng root(seed);
    WorldSpec world;
    world.config = cfg;
    world.seed = seed;

    const auto d_raw = static_cast<std::size_t>(cfg.d_raw);
    const auto d = static_cast<std::size_t>(cfg.d_embed);
    const auto n_obj = static_cast<std::size_t>(cfg.n_objects);

    // Frozen projection into scorer embedding space.
    {
        Rng stream = root.fork("scorer_proj", 0);
        Tensor proj({d_raw, d});
        const double s = 1.0 / std::sqrt(static_cast<double>(d_raw));
        for (std::size_t i = 0; i < proj.numel(); ++i) proj[i] = s * stream.normal();
        world.scorer.proj = std::move(proj);
    }

    // Prototypes on a cone: separated in raw space (pairwise cosine < 0.8)
    // but clustered enough that the equal-alignment direction sits high.
    Rng proto_stream = root.fork("prototypes", 0);
    std::vector<std::vector<double>> protos;
    std::vector<std::vector<double>> embedded;  // normalized projected prototypes
    std::vector<double> anchor_base;
    double anchor_level = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < kBuildRetries && !ok; ++attempt) {
        const std::vector<double> axis = random_unit(d_raw, proto_stream);
        const double sin_angle = std::sqrt(1.0 - kConeAxisCos * kConeAxisCos);
        protos.clear();
        for (std::size_t o = 0; o < n_obj; ++o) {
            std::vector<double> az = random_unit(d_raw, proto_stream);
            const double along = vec_dot(az, axis);
            for (std::size_t i = 0; i < d_raw; ++i) az[i] -= along * axis[i];
            vec_normalize(az);
            std::vector<double> p(d_raw);
            for (std::size_t i = 0; i < d_raw; ++i) {
                p[i] = kConeAxisCos * axis[i] + sin_angle * az[i];
            }
            protos.push_back(std::move(p));
        }
        bool separated = true;
        for (std::size_t i = 0; i < n_obj && separated; ++i) {
            for (std::size_t j = i + 1; j < n_obj; ++j) {
                if (std::fabs(vec_dot(protos[i], protos[j])) >= 0.8) {
                    separated = false;
                    break;
                }
            }
        }
        if (!separated) continue;
        embedded.clear();
        for (const auto& p : protos) {
            Tensor pr({1, d_raw}, p);
            const Tensor e = ag::l2_normalize_rows(ag::t_matmul(pr, world.scorer.proj));
            embedded.emplace_back(e.data(), e.data() + d);
        }
        if (!equal_cos_direction(embedded, anchor_base)) continue;
        anchor_level = vec_dot(anchor_base, embedded[0]);
        ok = anchor_level >= kAnchorLevelMin && anchor_level <= kAnchorLevelMax;
    }
    if (!ok) fail_contract("build_world: could not construct separated prototypes");

    // Orthonormal basis of the embedded-prototype span, for building
    // directions with exact alignment tiers.
    std::vector<std::vector<double>> span_basis;
    for (const auto& e : embedded) {
        std::vector<double> v = e;
        project_out(v, span_basis);
        double sq = 0.0;
        for (const double x : v) sq += x * x;
        if (std::sqrt(sq) < 1e-8) fail_contract("build_world: degenerate prototype span");
        vec_normalize(v);
        span_basis.push_back(std::move(v));
    }

    Rng junk_stream = root.fork("scorer_junk", 0);
    const auto tier_direction = [&](double frac) {
        // frac * anchor_base + complement-of-span remainder: every object sees
        // the same alignment frac * anchor_level.
        std::vector<double> rest = random_unit(d, junk_stream);
        project_out(rest, span_basis);
        vec_normalize(rest);
        std::vector<double> v(d);
        const double a = frac;
        const double b = std::sqrt(std::max(0.0, 1.0 - frac * frac));
        for (std::size_t i = 0; i < d; ++i) v[i] = a * anchor_base[i] + b * rest[i];
        return v;
    };

    // Anchor pair on BOS/EOS: a tiny symmetric tilt makes the top-two
    // relevance gap land in a band that keys the perturbation budget.
    Rng tilt_stream = root.fork("anchor_tilt", 0);
    std::vector<double> tilt;
    ok = false;
    for (int attempt = 0; attempt < kBuildRetries && !ok; ++attempt) {
        tilt = random_unit(d, tilt_stream);
        const double d0 = vec_dot(tilt, anchor_base);
        for (std::size_t i = 0; i < d; ++i) tilt[i] -= d0 * anchor_base[i];
        vec_normalize(tilt);
        ok = true;
        for (const auto& e : embedded) {
            const double z = 2.0 * std::fabs(vec_dot(tilt, e));
            if (z < kZBandLo || z > kZBandHi) {
                ok = false;
                break;
            }
        }
    }
    if (!ok) fail_contract("build_world: could not land the anchor tilt band");

    // Assemble the scorer table.
    Tensor table({static_cast<std::size_t>(cfg.vocab), d});
    Rng fill_stream = root.fork("scorer_fill", 0);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto v = random_unit(d, fill_stream);
        std::copy(v.begin(), v.end(), table.data() + r * d);
    }
    const auto set_row = [&table, d](int row, const std::vector<double>& v) {
        std::copy(v.begin(), v.end(), table.data() + static_cast<std::size_t>(row) * d);
    };
    {
        std::vector<double> bos(d), eos(d);
        for (std::size_t i = 0; i < d; ++i) {
            bos[i] = anchor_base[i] + kAnchorTilt * tilt[i];
            eos[i] = anchor_base[i] - kAnchorTilt * tilt[i];
        }
        vec_normalize(bos);
        vec_normalize(eos);
        set_row(vocab::kBos, bos);
        set_row(vocab::kEos, eos);
    }

    // Catalog tokens: names aligned with their own object.
    int next_token = vocab::kNumSpecial;
    Rng name_stream = root.fork("scorer_names", 0);
    for (std::size_t o = 0; o < n_obj; ++o) {
        CatalogObject obj;
        obj.object_id = static_cast<int>(o);
        obj.name_token = next_token++;
        obj.prototype = protos[o];
        const double frac = kTierName * anchor_level;
        std::vector<double> rest = random_unit(d, name_stream);
        project_out(rest, span_basis);
        vec_normalize(rest);
        std::vector<double> v(d);
        const double b = std::sqrt(std::max(0.0, 1.0 - frac * frac));
        for (std::size_t i = 0; i < d; ++i) v[i] = frac * embedded[o][i] + b * rest[i];
        set_row(obj.name_token, v);
        world.catalog.push_back(std::move(obj));
    }

    Rng bias_stream = root.fork("bias_pairs", 0);
    std::vector<int> object_ids(n_obj);
    for (std::size_t o = 0; o < n_obj; ++o) object_ids[o] = static_cast<int>(o);
    for (int b = 0; b < cfg.n_bias_pairs; ++b) {
        const std::size_t pick =
            static_cast<std::size_t>(bias_stream.uniform_int(0, static_cast<int>(object_ids.size()) - 1));
        BiasPair pair;
        pair.biased_object = object_ids[pick];
        object_ids.erase(object_ids.begin() + static_cast<std::ptrdiff_t>(pick));
        pair.trigger_token = next_token++;
        pair.rho = cfg.rho;
        const double frac = (b % 2 == 0 ? kTierTriggerLo : kTierTriggerHi);
        set_row(pair.trigger_token, tier_direction(frac));
        world.bias_pairs.push_back(pair);
    }

    world.ask_token = next_token++;
    set_row(world.ask_token, tier_direction(kTierAsk));
    world.filler_token = next_token++;
    set_row(world.filler_token, tier_direction(kTierFiller));
    world.filler2_token = next_token++;
    set_row(world.filler2_token, tier_direction(kTierFiller2));
    world.pope_ask_token = next_token++;
    set_row(world.pope_ask_token, tier_direction(kTierAsk));
    world.yes_token = next_token++;
    world.no_token = next_token++;

    world.scorer.table.weights = std::move(table);
    return world;
}

std::pair<VisualScene, std::vector<int>> sample_scene(const WorldSpec& world, Rng& rng,
                                                      int scene_id) {
    const WorldConfig& cfg = world.config;
    const int k = static_cast<int>(rng.uniform_int(cfg.scene_min, cfg.scene_max));
    std::vector<int> ids(static_cast<std::size_t>(cfg.n_objects));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    // partial Fisher-Yates: draw k object ids without replacement
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(i, static_cast<std::int64_t>(ids.size()) - 1));
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
    }
    ids.resize(static_cast<std::size_t>(k));
    std::sort(ids.begin(), ids.end());

    VisualScene scene;
    scene.scene_id = scene_id;
    for (const int oid : ids) {
        SceneObject obj;
        obj.object_id = oid;
        obj.feature = world.object(oid).prototype;
        for (double& x : obj.feature) x += cfg.feature_noise * rng.normal();
        double sq = 0.0;
        for (const double x : obj.feature) sq += x * x;
        const double norm = std::sqrt(sq);
        for (double& x : obj.feature) x /= norm;
        scene.objects.push_back(std::move(obj));
    }
    return {std::move(scene), std::move(ids)};
}

namespace {

bool contains(const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

TokenSeq make_query(const std::vector<int>& truth, const WorldSpec& world, Rng& rng) {
    const WorldConfig& cfg = world.config;
    std::vector<int> ids;
    ids.push_back(vocab::kBos);
    ids.push_back(world.ask_token);
    const int hints = std::min<int>(cfg.query_hints, static_cast<int>(truth.size()));
    for (int h = 0; h < hints; ++h) ids.push_back(world.object(truth[static_cast<std::size_t>(h)]).name_token);
    // One active bias pair per query; its trigger accompanies the object when
    // present and fires with probability rho when the object is absent.
    const auto& pair = world.bias_pairs[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(world.bias_pairs.size()) - 1))];
    const bool present = contains(truth, pair.biased_object);
    const double gate = present ? cfg.trigger_rate_present : pair.rho;
    if (rng.uniform() < gate) ids.push_back(pair.trigger_token);
    ids.push_back(world.filler2_token);
    ids.push_back(world.filler_token);
    ids.push_back(vocab::kEos);
    TokenSeq q;
    q.ids = std::move(ids);
    q.special_mask.resize(q.ids.size());
    for (std::size_t i = 0; i < q.ids.size(); ++i) q.special_mask[i] = q.ids[i] < vocab::kNumSpecial;
    return q;
}

PreferenceExample make_preference_pair(const VisualScene& scene, const std::vector<int>& truth,
                                       const WorldSpec& world, Rng& rng) {
    const WorldConfig& cfg = world.config;
    if (static_cast<int>(truth.size()) >= cfg.n_objects) {
        fail_contract("make_preference_pair: scene covers the whole catalog, resample upstream");
    }
    PreferenceExample ex;
    ex.scene = scene;
    ex.truth_objects = truth;
    ex.query = make_query(truth, world, rng);

    const auto finish = [](std::vector<int> name_ids) {
        TokenSeq t;
        t.ids = std::move(name_ids);
        t.ids.push_back(vocab::kEos);
        t.special_mask.assign(t.ids.size(), false);
        t.special_mask.back() = true;
        return t;
    };

    std::vector<int> chosen_names;
    for (const int oid : truth) chosen_names.push_back(world.object(oid).name_token);
    std::sort(chosen_names.begin(), chosen_names.end());
    ex.chosen = finish(chosen_names);

    std::vector<int> absent;
    for (int oid = 0; oid < cfg.n_objects; ++oid) {
        if (!contains(truth, oid)) absent.push_back(oid);
    }
    // The planted hallucination: when a trigger fired for an absent biased
    // object, insert that object with probability rho, else any absent one.
    std::vector<int> biased_candidates;
    for (const auto& pair : world.bias_pairs) {
        if (!contains(truth, pair.biased_object) &&
            contains(ex.query.ids, pair.trigger_token)) {
            biased_candidates.push_back(pair.biased_object);
        }
    }
    int inserted = -1;
    if (!biased_candidates.empty() && rng.uniform() < cfg.rho) {
        inserted = biased_candidates[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(biased_candidates.size()) - 1))];
    } else {
        inserted = absent[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(absent.size()) - 1))];
    }
    std::vector<int> rejected_names = chosen_names;
    const int name = world.object(inserted).name_token;
    rejected_names.insert(
        std::upper_bound(rejected_names.begin(), rejected_names.end(), name), name);
    ex.rejected = finish(rejected_names);
    return ex;
}

std::vector<PreferenceExample> generate_dataset(const WorldSpec& world, int n,
                                                std::uint64_t seed) {
    if (n < 1) fail_contract("generate_dataset: n must be >= 1");
    const Rng root(seed);
    std::vector<PreferenceExample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng stream = root.fork("example", static_cast<std::uint64_t>(i));
        while (true) {
            auto [scene, truth] = sample_scene(world, stream, i);
            if (static_cast<int>(truth.size()) >= world.config.n_objects) continue;
            out.push_back(make_preference_pair(scene, truth, world, stream));
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

std::string tensor_fields(const Tensor& t) {
    std::string s = "rows=" + std::to_string(t.rows()) + " cols=" + std::to_string(t.cols());
    s += " data=";
    s += textio::join_doubles(std::vector<double>(t.data(), t.data() + t.numel()));
    return s;
}

Tensor tensor_from_record(const textio::Record& r) {
    const auto rows = static_cast<std::size_t>(r.get_int("rows"));
    const auto cols = static_cast<std::size_t>(r.get_int("cols"));
    return Tensor({rows, cols}, textio::parse_doubles(r.get("data")));
}

}  // namespace

std::string world_to_text(const WorldSpec& world) {
    std::ostringstream out;
    const WorldConfig& c = world.config;
    textio::Record head;
    head.set("record", "world");
    head.set_int("version", 1);
    head.set_int("seed", static_cast<std::int64_t>(world.seed));
    head.set_int("n_objects", c.n_objects);
    head.set_int("n_bias_pairs", c.n_bias_pairs);
    head.set_double("rho", c.rho);
    head.set_int("d_raw", c.d_raw);
    head.set_int("d_embed", c.d_embed);
    head.set_int("vocab", c.vocab);
    head.set_double("feature_noise", c.feature_noise);
    head.set_int("scene_min", c.scene_min);
    head.set_int("scene_max", c.scene_max);
    head.set_double("trigger_rate_present", c.trigger_rate_present);
    head.set_int("query_hints", c.query_hints);
    out << head.to_line() << "\n";

    textio::Record toks;
    toks.set("record", "tokens");
    toks.set_int("ask", world.ask_token);
    toks.set_int("filler", world.filler_token);
    toks.set_int("filler2", world.filler2_token);
    toks.set_int("pope_ask", world.pope_ask_token);
    toks.set_int("yes", world.yes_token);
    toks.set_int("no", world.no_token);
    out << toks.to_line() << "\n";

    for (const auto& obj : world.catalog) {
        textio::Record r;
        r.set("record", "object");
        r.set_int("id", obj.object_id);
        r.set_int("name_token", obj.name_token);
        r.set("prototype", textio::join_doubles(obj.prototype));
        out << r.to_line() << "\n";
    }
    for (const auto& pair : world.bias_pairs) {
        textio::Record r;
        r.set("record", "bias");
        r.set_int("trigger_token", pair.trigger_token);
        r.set_int("biased_object", pair.biased_object);
        r.set_double("rho", pair.rho);
        out << r.to_line() << "\n";
    }
    out << "record=scorer_proj " << tensor_fields(world.scorer.proj) << "\n";
    out << "record=scorer_table " << tensor_fields(world.scorer.table.weights) << "\n";
    return out.str();
}

WorldSpec world_from_text(const std::string& text) {
    WorldSpec world;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const textio::Record r = textio::Record::parse(line);
        const std::string& kind = r.get("record");
        if (kind == "world") {
            world.seed = static_cast<std::uint64_t>(r.get_int("seed"));
            WorldConfig& c = world.config;
            c.n_objects = static_cast<int>(r.get_int("n_objects"));
            c.n_bias_pairs = static_cast<int>(r.get_int("n_bias_pairs"));
            c.rho = r.get_double("rho");
            c.d_raw = static_cast<int>(r.get_int("d_raw"));
            c.d_embed = static_cast<int>(r.get_int("d_embed"));
            c.vocab = static_cast<int>(r.get_int("vocab"));
            c.feature_noise = r.get_double("feature_noise");
            c.scene_min = static_cast<int>(r.get_int("scene_min"));
            c.scene_max = static_cast<int>(r.get_int("scene_max"));
            c.trigger_rate_present = r.get_double("trigger_rate_present");
            c.query_hints = static_cast<int>(r.get_int("query_hints"));
        } else if (kind == "tokens") {
            world.ask_token = static_cast<int>(r.get_int("ask"));
            world.filler_token = static_cast<int>(r.get_int("filler"));
            world.filler2_token = static_cast<int>(r.get_int("filler2"));
            world.pope_ask_token = static_cast<int>(r.get_int("pope_ask"));
            world.yes_token = static_cast<int>(r.get_int("yes"));
            world.no_token = static_cast<int>(r.get_int("no"));
        } else if (kind == "object") {
            CatalogObject obj;
            obj.object_id = static_cast<int>(r.get_int("id"));
            obj.name_token = static_cast<int>(r.get_int("name_token"));
            obj.prototype = textio::parse_doubles(r.get("prototype"));
            world.catalog.push_back(std::move(obj));
        } else if (kind == "bias") {
            BiasPair pair;
            pair.trigger_token = static_cast<int>(r.get_int("trigger_token"));
            pair.biased_object = static_cast<int>(r.get_int("biased_object"));
            pair.rho = r.get_double("rho");
            world.bias_pairs.push_back(pair);
        } else if (kind == "scorer_proj") {
            world.scorer.proj = tensor_from_record(r);
        } else if (kind == "scorer_table") {
            world.scorer.table.weights = tensor_from_record(r);
        } else if (kind == "manifest") {
            continue;  // CLI provenance header
        } else {
            fail_contract("world file: unknown record kind '" + kind + "'");
        }
    }
    return world;
}

void write_world(const std::string& path, const WorldSpec& world) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_contract("write_world: cannot open " + path);
    out << world_to_text(world);
    if (!out) fail_contract("write_world: write failed for " + path);
}

WorldSpec read_world(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_contract("read_world: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return world_from_text(ss.str());
}

std::string dataset_to_text(const std::vector<PreferenceExample>& examples) {
    std::ostringstream out;
    for (const auto& ex : examples) {
        textio::Record r;
        r.set_int("scene_id", ex.scene.scene_id);
        std::vector<int> oids;
        std::string feats;
        for (const auto& obj : ex.scene.objects) {
            oids.push_back(obj.object_id);
            if (!feats.empty()) feats += ';';
            feats += textio::join_doubles(obj.feature);
        }
        r.set("object_ids", textio::join_ints(oids));
        r.set("features", feats);
        r.set("query_ids", textio::join_ints(ex.query.ids));
        r.set("chosen_ids", textio::join_ints(ex.chosen.ids));
        r.set("rejected_ids", textio::join_ints(ex.rejected.ids));
        r.set("truth_ids", textio::join_ints(ex.truth_objects));
        out << r.to_line() << "\n";
    }
    return out.str();
}

namespace {

TokenSeq seq_from_ids(std::vector<int> ids) {
    TokenSeq t;
    t.ids = std::move(ids);
    t.special_mask.resize(t.ids.size());
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
        t.special_mask[i] = t.ids[i] < vocab::kNumSpecial;
    }
    return t;
}

}  // namespace

std::vector<PreferenceExample> dataset_from_text(const std::string& text) {
    std::vector<PreferenceExample> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const textio::Record r = textio::Record::parse(line);
        if (r.has("record")) continue;  // CLI provenance header
        PreferenceExample ex;
        ex.scene.scene_id = static_cast<int>(r.get_int("scene_id"));
        const std::vector<int> oids = textio::parse_ints(r.get("object_ids"));
        const std::string& feats = r.get("features");
        std::vector<std::string> chunks;
        std::size_t start = 0;
        while (start <= feats.size()) {
            const std::size_t end = feats.find(';', start);
            chunks.push_back(feats.substr(start, end == feats.npos ? feats.npos : end - start));
            if (end == feats.npos) break;
            start = end + 1;
        }
        if (chunks.size() != oids.size()) {
            fail_contract("dataset file: object/feature count mismatch");
        }
        for (std::size_t i = 0; i < oids.size(); ++i) {
            SceneObject obj;
            obj.object_id = oids[i];
            obj.feature = textio::parse_doubles(chunks[i]);
            ex.scene.objects.push_back(std::move(obj));
        }
        ex.query = seq_from_ids(textio::parse_ints(r.get("query_ids")));
        ex.chosen = seq_from_ids(textio::parse_ints(r.get("chosen_ids")));
        ex.rejected = seq_from_ids(textio::parse_ints(r.get("rejected_ids")));
        ex.truth_objects = textio::parse_ints(r.get("truth_ids"));
        out.push_back(std::move(ex));
    }
    return out;
}

void write_dataset(const std::string& path, const std::vector<PreferenceExample>& examples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_contract("write_dataset: cannot open " + path);
    out << dataset_to_text(examples);
    if (!out) fail_contract("write_dataset: write failed for " + path);
}

std::vector<PreferenceExample> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_contract("read_dataset: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return dataset_from_text(ss.str());
}

}  // namespace tarslab
