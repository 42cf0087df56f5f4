#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sure_omt/procedures.hpp"
#include "sure_omt/simulate.hpp"
#include "sure_omt/spending.hpp"

namespace sure_omt {

using nlohmann::json;

/// Raised for any malformed or inconsistent configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kConfigEnvVar = "SURE_OMT_CONFIG";

/// {"family":"power","q":1.6} | {"family":"log","q":2} | {"family":"jm"} |
/// {"family":"kernel","h":100} | {"family":"greedy"} | {"family":"explicit","values":[...]}
inline SpendingSequence parse_sequence_spec(const json& j) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
        throw ConfigError("sequence spec needs a \"family\" string: " + j.dump());
    }
    const auto family = j["family"].get<std::string>();
    auto number = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) {
            throw ConfigError("sequence family '" + family + "' needs numeric \"" + key + "\"");
        }
        return j[key];
    };
    try {
        if (family == "power") {
            return SpendingSequence::power_law(number("q").get<double>());
        }
        if (family == "log") {
            return SpendingSequence::log_family(number("q").get<double>());
        }
        if (family == "jm") {
            return SpendingSequence::jm_family();
        }
        if (family == "kernel") {
            const auto h = number("h");
            if (!h.is_number_integer()) {
                throw ConfigError("kernel bandwidth must be an integer");
            }
            return SpendingSequence::kernel(h.get<long>());
        }
        if (family == "greedy") {
            return SpendingSequence::greedy();
        }
        if (family == "explicit") {
            if (!j.contains("values") || !j["values"].is_array()) {
                throw ConfigError("explicit sequence needs a \"values\" array");
            }
            return SpendingSequence::explicit_values(j["values"].get<std::vector<double>>());
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("sequence spec ") + j.dump() + ": " + e.what());
    }
    throw ConfigError("unknown sequence family '" + family + "'");
}

inline json sequence_spec_json(const SpendingSequence& s) {
    switch (s.kind()) {
        case SpendingSequence::Kind::power_law: return {{"family", "power"}, {"q", s.q()}};
        case SpendingSequence::Kind::log_family: return {{"family", "log"}, {"q", s.q()}};
        case SpendingSequence::Kind::jm_family: return {{"family", "jm"}};
        case SpendingSequence::Kind::kernel: return {{"family", "kernel"}, {"h", s.bandwidth()}};
        case SpendingSequence::Kind::greedy: return {{"family", "greedy"}};
        case SpendingSequence::Kind::explicit_values: return {{"family", "explicit"}, {"values", s.values()}};
    }
    return {};
}

/// Applies one `key=value` override. Dotted keys address nested objects; the
/// value is read as JSON when it parses, otherwise as a plain string.
inline void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key=value: '" + assignment + "'");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) {
            throw ConfigError("empty path component in '" + key + "'");
        }
        if (!node->is_object()) {
            if (!node->is_null()) {
                throw ConfigError("'" + key + "' descends into a non-object");
            }
            *node = json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos) {
            break;
        }
        start = dot + 1;
    }
    *node = std::move(value);
}

/// Reads the config file named explicitly, else the one named by the
/// environment variable, else an empty document; then applies overrides.
inline json load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
    std::optional<std::string> chosen = path;
    if (!chosen) {
        if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
            chosen = env;
        }
    }
    json doc = json::object();
    if (chosen) {
        std::ifstream in(*chosen);
        if (!in) {
            throw ConfigError("cannot open config '" + *chosen + "'");
        }
        doc = json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw ConfigError("config '" + *chosen + "' is not a JSON object");
        }
    }
    for (const auto& o : overrides) {
        apply_override(doc, o);
    }
    return doc;
}

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace detail

/// Settings for `analyze`.
struct AnalysisConfig {
    ProcedureKind procedure = ProcedureKind::rho_lord;
    ProcedureConfig params;
    long max_rows = 0;  ///< 0 processes every row
};

inline const std::set<std::string>& analysis_keys() {
    static const std::set<std::string> keys = {"procedure", "alpha",       "lambda",          "w0",
                                               "gamma",     "gamma_prime", "saffron_capping", "max_rows",
                                               "simulate"};
    return keys;
}

inline AnalysisConfig parse_analysis_config(const json& doc) {
    detail::reject_unknown_keys(doc, analysis_keys(), "config");
    AnalysisConfig cfg;
    try {
        cfg.procedure = parse_procedure(detail::get_or<std::string>(doc, "procedure", "rho-lord"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    auto& p = cfg.params;
    p.alpha = detail::get_or<double>(doc, "alpha", 0.2);
    p.lambda = detail::get_or<double>(doc, "lambda", 0.5);
    if (doc.contains("w0")) {
        if (!is_investing(cfg.procedure)) {
            throw ConfigError("w0 applies only to the investing (mFDR) procedures");
        }
        p.w0 = detail::get_or<double>(doc, "w0", 0.0);
    } else {
        p.w0 = p.alpha / 2.0;
    }
    if (doc.contains("gamma")) {
        p.gamma = parse_sequence_spec(doc["gamma"]);
    }
    if (doc.contains("gamma_prime")) {
        if (!is_rewarded(cfg.procedure)) {
            throw ConfigError("gamma_prime applies only to rewarded procedures");
        }
        p.gamma_prime = parse_sequence_spec(doc["gamma_prime"]);
    } else if (is_rewarded(cfg.procedure)) {
        p.gamma_prime = SpendingSequence::kernel(is_investing(cfg.procedure) ? 10 : 100);
    }
    p.saffron_capping = detail::get_or<bool>(doc, "saffron_capping", false) ||
                        cfg.procedure == ProcedureKind::saffron_capped;
    cfg.max_rows = detail::get_or<long>(doc, "max_rows", 0);
    if (cfg.max_rows < 0) {
        throw ConfigError("max_rows must be nonnegative");
    }
    try {
        p.validate(cfg.procedure);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

/// Settings for `simulate`: top-level procedure parameters plus a "simulate"
/// object with the scenario, procedure list, and optional sweep.
struct SimulateConfig {
    SimulationSettings settings;
    std::optional<std::string> sweep_axis;
    std::vector<std::string> sweep_values;
};

inline std::string sweep_value_text(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

inline SimulateConfig parse_simulate_config(const json& doc) {
    detail::reject_unknown_keys(doc, analysis_keys(), "config");
    const json sim = doc.contains("simulate") ? doc["simulate"] : json::object();
    if (!sim.is_object()) {
        throw ConfigError("\"simulate\" must be an object");
    }
    detail::reject_unknown_keys(sim,
                                {"m", "pi_a", "N", "p3", "p_null_low", "p_null_mid", "placement", "seed",
                                 "n_trials", "procedures", "gamma_prime_fwer", "gamma_prime_mfdr",
                                 "checkpoint_step", "threads", "sweep"},
                                "simulate");
    SimulateConfig out;
    auto& sc = out.settings.scenario;
    sc.m = detail::get_or<long>(sim, "m", sc.m);
    sc.pi_a = detail::get_or<double>(sim, "pi_a", sc.pi_a);
    sc.n_subjects = detail::get_or<long>(sim, "N", sc.n_subjects);
    sc.p3 = detail::get_or<double>(sim, "p3", sc.p3);
    sc.p_null_low = detail::get_or<double>(sim, "p_null_low", sc.p_null_low);
    sc.p_null_mid = detail::get_or<double>(sim, "p_null_mid", sc.p_null_mid);
    sc.seed = detail::get_or<std::uint64_t>(sim, "seed", sc.seed);
    sc.n_trials = detail::get_or<long>(sim, "n_trials", sc.n_trials);
    try {
        if (sim.contains("placement")) {
            sc.placement = parse_placement(detail::get_or<std::string>(sim, "placement", "Random"));
        }
        if (sim.contains("procedures")) {
            out.settings.kinds.clear();
            for (const auto& name : sim["procedures"]) {
                out.settings.kinds.push_back(parse_procedure(name.get<std::string>()));
            }
            if (out.settings.kinds.empty()) {
                throw ConfigError("empty procedure list");
            }
        }
        sc.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    auto& pd = out.settings.procedures;
    pd.alpha = detail::get_or<double>(doc, "alpha", pd.alpha);
    pd.lambda = detail::get_or<double>(doc, "lambda", pd.lambda);
    if (doc.contains("w0")) {
        pd.w0 = detail::get_or<double>(doc, "w0", 0.0);
    }
    if (doc.contains("gamma")) {
        pd.gamma = parse_sequence_spec(doc["gamma"]);
    }
    if (doc.contains("gamma_prime")) {
        pd.gamma_prime_fwer = pd.gamma_prime_mfdr = parse_sequence_spec(doc["gamma_prime"]);
    }
    if (sim.contains("gamma_prime_fwer")) {
        pd.gamma_prime_fwer = parse_sequence_spec(sim["gamma_prime_fwer"]);
    }
    if (sim.contains("gamma_prime_mfdr")) {
        pd.gamma_prime_mfdr = parse_sequence_spec(sim["gamma_prime_mfdr"]);
    }
    pd.saffron_capping = detail::get_or<bool>(doc, "saffron_capping", false);
    out.settings.checkpoint_step = detail::get_or<long>(sim, "checkpoint_step", out.settings.checkpoint_step);
    out.settings.threads = detail::get_or<unsigned>(sim, "threads", out.settings.threads);

    if (sim.contains("sweep")) {
        const auto& sw = sim["sweep"];
        if (!sw.is_object() || !sw.contains("axis") || !sw.contains("values") || !sw["values"].is_array()) {
            throw ConfigError("sweep needs \"axis\" and a \"values\" array");
        }
        out.sweep_axis = sw["axis"].get<std::string>();
        for (const auto& v : sw["values"]) {
            out.sweep_values.push_back(sweep_value_text(v));
        }
        try {
            for (const auto& v : out.sweep_values) {
                apply_axis(out.settings, *out.sweep_axis, v);
            }
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        for (auto kind : out.settings.kinds) {
            pd.config_for(kind).validate(kind);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

}  // namespace sure_omt
