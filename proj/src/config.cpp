#include "corrlab/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "corrlab/io.hpp"

namespace corrlab::runner {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw std::domain_error("config: unknown key '" + key + "' in " + where);
        }
    }
}

factors::WeakRegime regime_from_string(const std::string& name) {
    if (name == "observational") return factors::WeakRegime::Observational;
    if (name == "interventional_i1") return factors::WeakRegime::InterventionalI1;
    if (name == "interventional_i2") return factors::WeakRegime::InterventionalI2;
    throw std::domain_error("config: unknown weak_regime '" + name + "'");
}

}  // namespace

std::string sigma_to_string(double sigma) {
    if (std::isinf(sigma)) return "inf";
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", sigma);
    return buffer;
}

double sigma_from_json_value(const nlohmann::json& value) {
    if (value.is_string()) {
        if (value.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw std::domain_error("config: sigma strings must be \"inf\"");
    }
    const double sigma = value.get<double>();
    if (!(sigma > 0.0)) throw std::domain_error("config: sigma must be positive");
    return sigma;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json factors_json = nlohmann::json::array();
    for (const auto& f : space.factors()) {
        factors_json.push_back({{"name", f.name}, {"cardinality", f.cardinality}});
    }
    nlohmann::json sigmas_json = nlohmann::json::array();
    for (double s : sigmas) {
        if (std::isinf(s)) sigmas_json.push_back("inf");
        else sigmas_json.push_back(s);
    }
    nlohmann::json objectives_json = nlohmann::json::array();
    for (auto o : objectives) objectives_json.push_back(vae::objective_name(o));

    return {
        {"version", 1},
        {"world",
         {{"factors", factors_json},
          {"image_width", render.width},
          {"image_height", render.height}}},
        {"correlation",
         {{"first", pair_first}, {"second", pair_second}, {"sigmas", sigmas_json}}},
        {"objectives", objectives_json},
        {"betas", betas},
        {"seeds", seeds},
        {"train",
         {{"steps", train.steps},
          {"batch_size", train.batch_size},
          {"learning_rate", train.learning_rate},
          {"k_changed", train.k_changed},
          {"weak_regime", factors::regime_name(train.regime)},
          {"latent_dim", train.latent_dim},
          {"hidden", train.hidden},
          {"log_every", train.log_every}}},
        {"eval",
         {{"samples", eval_samples},
          {"mi_bins", eval_params.mi_bins},
          {"gbt_rounds", eval_params.gbt.rounds},
          {"gbt_depth", eval_params.gbt.max_depth},
          {"gbt_shrinkage", eval_params.gbt.shrinkage}}},
        {"adapt",
         {{"label_counts", adapt_label_counts},
          {"kind", adapt::substitution_kind_name(adapt_kind)}}},
    };
}

std::string ExperimentConfig::canonical_hash() const {
    // nlohmann::json objects keep keys sorted, so dump() is canonical.
    return io::to_hex(io::fnv1a64(to_json().dump()));
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::domain_error("config: top level must be an object");
    reject_unknown_keys(j, {"version", "world", "correlation", "objectives", "betas", "seeds",
                            "train", "eval", "adapt"},
                        "top level");
    if (!j.contains("version")) throw std::domain_error("config: missing version field");
    if (j.at("version").get<int>() != 1) throw std::domain_error("config: unsupported version");

    ExperimentConfig cfg;

    if (j.contains("world")) {
        const auto& w = j.at("world");
        reject_unknown_keys(w, {"factors", "image_width", "image_height"}, "world");
        if (w.contains("factors")) {
            std::vector<factors::Factor> list;
            for (const auto& fj : w.at("factors")) {
                reject_unknown_keys(fj, {"name", "cardinality"}, "world.factors[]");
                list.push_back({fj.at("name").get<std::string>(),
                                fj.at("cardinality").get<int>()});
            }
            cfg.space = factors::FactorSpace(list);
        }
        if (w.contains("image_width")) cfg.render.width = w.at("image_width").get<int>();
        if (w.contains("image_height")) cfg.render.height = w.at("image_height").get<int>();
    }

    if (j.contains("correlation")) {
        const auto& c = j.at("correlation");
        reject_unknown_keys(c, {"first", "second", "sigmas"}, "correlation");
        if (c.contains("first")) cfg.pair_first = c.at("first").get<int>();
        if (c.contains("second")) cfg.pair_second = c.at("second").get<int>();
        if (c.contains("sigmas")) {
            cfg.sigmas.clear();
            for (const auto& s : c.at("sigmas")) cfg.sigmas.push_back(sigma_from_json_value(s));
        }
    }

    if (j.contains("objectives")) {
        cfg.objectives.clear();
        for (const auto& o : j.at("objectives")) {
            cfg.objectives.push_back(vae::objective_from_name(o.get<std::string>()));
        }
    }
    if (j.contains("betas")) cfg.betas = j.at("betas").get<std::vector<double>>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();

    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown_keys(t,
                            {"steps", "batch_size", "learning_rate", "k_changed", "weak_regime",
                             "latent_dim", "hidden", "log_every"},
                            "train");
        if (t.contains("steps")) cfg.train.steps = t.at("steps").get<int>();
        if (t.contains("batch_size")) cfg.train.batch_size = t.at("batch_size").get<int>();
        if (t.contains("learning_rate")) cfg.train.learning_rate = t.at("learning_rate").get<double>();
        if (t.contains("k_changed")) cfg.train.k_changed = t.at("k_changed").get<int>();
        if (t.contains("weak_regime")) {
            cfg.train.regime = regime_from_string(t.at("weak_regime").get<std::string>());
        }
        if (t.contains("latent_dim")) cfg.train.latent_dim = t.at("latent_dim").get<int>();
        if (t.contains("hidden")) cfg.train.hidden = t.at("hidden").get<std::vector<std::size_t>>();
        if (t.contains("log_every")) cfg.train.log_every = t.at("log_every").get<int>();
    }

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        reject_unknown_keys(e, {"samples", "mi_bins", "gbt_rounds", "gbt_depth", "gbt_shrinkage"},
                            "eval");
        if (e.contains("samples")) cfg.eval_samples = e.at("samples").get<int>();
        if (e.contains("mi_bins")) cfg.eval_params.mi_bins = e.at("mi_bins").get<int>();
        if (e.contains("gbt_rounds")) cfg.eval_params.gbt.rounds = e.at("gbt_rounds").get<int>();
        if (e.contains("gbt_depth")) cfg.eval_params.gbt.max_depth = e.at("gbt_depth").get<int>();
        if (e.contains("gbt_shrinkage")) {
            cfg.eval_params.gbt.shrinkage = e.at("gbt_shrinkage").get<double>();
        }
    }

    if (j.contains("adapt")) {
        const auto& a = j.at("adapt");
        reject_unknown_keys(a, {"label_counts", "kind"}, "adapt");
        if (a.contains("label_counts")) {
            cfg.adapt_label_counts = a.at("label_counts").get<std::vector<int>>();
        }
        if (a.contains("kind")) {
            const std::string kind = a.at("kind").get<std::string>();
            if (kind == "linear") cfg.adapt_kind = adapt::SubstitutionKind::Linear;
            else if (kind == "mlp") cfg.adapt_kind = adapt::SubstitutionKind::Mlp;
            else throw std::domain_error("config: unknown adapt kind '" + kind + "'");
        }
    }

    // Cross-field validation.
    validate_correlation(cfg.space, {cfg.pair_first, cfg.pair_second, 1.0});
    if (cfg.sigmas.empty() || cfg.objectives.empty() || cfg.betas.empty() || cfg.seeds.empty()) {
        throw std::domain_error("config: sweep axes must be non-empty");
    }
    if (cfg.eval_samples < 1) throw std::domain_error("config: eval samples must be >= 1");
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::domain_error("config: malformed JSON in " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace corrlab::runner
