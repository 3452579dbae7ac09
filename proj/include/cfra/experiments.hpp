#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfra/analysis.hpp"
#include "cfra/bench.hpp"
#include "cfra/calibration.hpp"
#include "cfra/campaign.hpp"
#include "cfra/config_io.hpp"
#include "cfra/metrics.hpp"
#include "cfra/parallel.hpp"

#ifndef CFRA_VERSION
#define CFRA_VERSION "0.1.0"
#endif
#ifndef CFRA_GIT_DESCRIBE
#define CFRA_GIT_DESCRIBE "unknown"
#endif

namespace cfra {

inline std::string provenance() { return std::string("cfra ") + CFRA_VERSION + " (git " + CFRA_GIT_DESCRIBE + ")"; }

struct CampaignSummary {
    Protocol protocol = Protocol::bcf;
    EstimatorSpec spec;
    int l_max = 0;
    std::optional<double> anaa;
    std::optional<double> tcp;
    ResourceUsage usage;
    double q_eff = 0.0;
    std::size_t resolved = 0;
    std::size_t admitted = 0;
};

/// Runs config.trials independent campaigns and reduces them in trial order.
inline CampaignSummary simulate(Protocol protocol, const EstimatorSpec& spec, const ScenarioConfig& config,
                                unsigned threads = 0) {
    config.validate();
    validate_combination(protocol, spec);
    const auto results = parallel_map(
        static_cast<std::size_t>(config.trials),
        [&](std::size_t t) { return run_access_campaign(protocol, spec, config, t); }, threads);
    CampaignSummary s;
    s.protocol = protocol;
    s.spec = spec;
    s.l_max = protocol == Protocol::cf_sucre ? config.l_max : (protocol == Protocol::bcf ? config.num_aps : 1);
    s.usage = resource_usage(results);
    for (const auto& r : results) {
        s.resolved += r.attempts.size();
        for (bool a : r.admitted) s.admitted += a ? 1 : 0;
    }
    s.q_eff = protocol == Protocol::cf_sucre ? effective_dl_power(spec, config, s.usage) : 0.0;
    if (s.resolved > 0) {
        s.anaa = anaa(results);
        s.tcp = tcp(protocol, *s.anaa, config, s.usage, s.q_eff);
    }
    return s;
}

inline MetricsReport campaign_report(const CampaignSummary& s, std::string axis, double value,
                                     const ScenarioConfig& config) {
    MetricsReport m;
    m.sweep_axis = std::move(axis);
    m.sweep_value = value;
    m.protocol = std::string(to_string(s.protocol));
    m.estimator = s.protocol == Protocol::bcf ? "none" : std::string(to_string(s.spec.kind));
    m.nearby_method = s.protocol == Protocol::bcf ? "none" : std::string(to_string(s.spec.nearby));
    m.anaa = s.anaa;
    m.tcp_mw_symbols = s.tcp;
    m.trials = config.trials;
    m.seed = config.rng_seed;
    return m;
}

struct ExclusiveFraction {
    long long winners = 0;
    long long exclusive = 0;
    double fraction() const { return winners == 0 ? std::nan("") : double(exclusive) / double(winners); }
};

/// Fraction of transmitting UEs that own at least one exclusive serving AP
/// when every AP serves (L^max = L) and every UE retransmits.
inline ExclusiveFraction simulated_exclusive_fraction(const ScenarioConfig& config, int setups, int attempts_per_setup,
                                                      unsigned threads = 0) {
    config.validate();
    const auto parts = parallel_map(
        static_cast<std::size_t>(setups),
        [&](std::size_t s) {
            Rng topo_rng = make_stream(config.rng_seed, s, Stream::topology);
            AccessNetwork net(build_topology(config, topo_rng), 1.0, config.noise_power_mw());
            Rng activation = make_stream(config.rng_seed, s, Stream::activation);
            AttemptStreams streams{make_stream(config.rng_seed, s, Stream::pilots),
                                   make_stream(config.rng_seed, s, Stream::channel),
                                   make_stream(config.rng_seed, s, Stream::noise)};
            ExclusiveFraction f;
            std::vector<std::size_t> active;
            for (int a = 0; a < attempts_per_setup; ++a) {
                active.clear();
                for (std::size_t k = 0; k < net.topology().num_ues(); ++k)
                    if (bernoulli(activation, config.access_probability)) active.push_back(k);
                if (active.empty()) continue;
                const auto out = run_attempt(Protocol::bcf, EstimatorSpec{}, net, active, config, streams);
                for (const auto& u : out.ues) {
                    if (!u.served) continue;
                    ++f.winners;
                    f.exclusive += u.admitted ? 1 : 0;
                }
            }
            return f;
        },
        threads);
    ExclusiveFraction total;
    for (const auto& p : parts) {
        total.winners += p.winners;
        total.exclusive += p.exclusive;
    }
    return total;
}

enum class SweepClass { estimator_bench, anaa_sweep, ee_sweep, separability };
enum class LmaxMode { config, trained };

inline std::string_view to_string(SweepClass c) {
    switch (c) {
        case SweepClass::estimator_bench: return "estimator-bench";
        case SweepClass::anaa_sweep: return "anaa-sweep";
        case SweepClass::ee_sweep: return "ee-sweep";
        case SweepClass::separability: return "separability";
    }
    return "?";
}

/// Experiment descriptor: the figure class, the varied axis and its values,
/// which protocols/estimators to run, plus any config overrides.
struct SweepDescriptor {
    SweepClass kind = SweepClass::anaa_sweep;
    std::string axis = "num_inactive_ues";
    std::vector<double> values;
    std::vector<Protocol> protocols{Protocol::bcf, Protocol::cf_sucre, Protocol::ce_sucre};
    std::vector<EstimatorKind> estimators{EstimatorKind::est1, EstimatorKind::est2, EstimatorKind::est3};
    std::vector<NearbyMethod> nearby{NearbyMethod::fixed, NearbyMethod::greedy};
    LmaxMode l_max_mode = LmaxMode::config;
    int collision_size = 2;
    int setups = 100;
    int realizations = 100;
    int training_rounds = 100;
    int training_repetitions = 100;
    int attempts_per_setup = 100;
    ScenarioConfig config;
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

/// "a, b, c" or "first:last[:step]".
inline std::vector<double> parse_values(std::string_view s, const std::string& ctx) {
    std::vector<double> out;
    if (s.find(':') != std::string_view::npos && s.find(',') == std::string_view::npos) {
        std::vector<double> p;
        std::size_t start = 0;
        while (true) {
            const auto c = s.find(':', start);
            p.push_back(parse_number<double>(trim(s.substr(start, c == s.npos ? s.npos : c - start)), ctx));
            if (c == s.npos) break;
            start = c + 1;
        }
        if (p.size() < 2 || p.size() > 3) throw ConfigError(ctx + ": range must be first:last[:step]");
        const double step = p.size() == 3 ? p[2] : 1.0;
        if (!(step > 0.0)) throw ConfigError(ctx + ": range step must be > 0");
        for (double v = p[0]; v <= p[1] + 1e-9 * std::abs(step); v += step) out.push_back(v);
        return out;
    }
    for (const auto& item : split_list(s)) out.push_back(parse_number<double>(item, ctx));
    return out;
}

inline std::string format_axis_value(const ScenarioConfig& config, const std::string& axis, double v) {
    for (const auto& [name, ref] : config_fields()) {
        if (name != axis) continue;
        if (std::holds_alternative<double ScenarioConfig::*>(ref)) return format_double(v);
        if (v != std::floor(v)) throw ConfigError("axis '" + axis + "' takes integer values, got " + format_double(v));
        return std::to_string(static_cast<long long>(v));
    }
    (void)config;
    throw ConfigError("unknown sweep axis '" + axis + "'");
}

}  // namespace detail

inline SweepClass parse_sweep_class(std::string_view s) {
    if (s == "estimator-bench") return SweepClass::estimator_bench;
    if (s == "anaa-sweep") return SweepClass::anaa_sweep;
    if (s == "ee-sweep") return SweepClass::ee_sweep;
    if (s == "separability") return SweepClass::separability;
    throw ConfigError("unknown sweep class '" + std::string(s) +
                      "' (expected estimator-bench|anaa-sweep|ee-sweep|separability)");
}

inline SweepDescriptor parse_descriptor(const KeyValueDocument& doc, const std::string& source,
                                        const ScenarioConfig& base = {}) {
    SweepDescriptor d;
    d.config = base;
    bool have_class = false;
    bool nearby_given = false;
    for (const auto& e : doc.entries) {
        const std::string ctx = source + ":" + std::to_string(e.line) + ": field '" + e.key + "'";
        try {
            if (e.key == "class") {
                d.kind = parse_sweep_class(e.value);
                have_class = true;
            } else if (e.key == "axis") {
                d.axis = e.value;
            } else if (e.key == "values") {
                d.values = detail::parse_values(e.value, ctx);
            } else if (e.key == "protocols") {
                d.protocols.clear();
                for (const auto& s : detail::split_list(e.value)) d.protocols.push_back(parse_protocol(s));
            } else if (e.key == "estimators") {
                d.estimators.clear();
                for (const auto& s : detail::split_list(e.value)) d.estimators.push_back(parse_estimator(s));
            } else if (e.key == "nearby") {
                d.nearby.clear();
                nearby_given = true;
                for (const auto& s : detail::split_list(e.value)) d.nearby.push_back(parse_nearby(s));
            } else if (e.key == "l_max_mode") {
                if (e.value == "config") d.l_max_mode = LmaxMode::config;
                else if (e.value == "trained") d.l_max_mode = LmaxMode::trained;
                else throw ConfigError("expected config|trained");
            } else if (e.key == "collision_size") {
                d.collision_size = detail::parse_number<int>(e.value, ctx);
            } else if (e.key == "setups") {
                d.setups = detail::parse_number<int>(e.value, ctx);
            } else if (e.key == "realizations") {
                d.realizations = detail::parse_number<int>(e.value, ctx);
            } else if (e.key == "training_rounds") {
                d.training_rounds = detail::parse_number<int>(e.value, ctx);
            } else if (e.key == "training_repetitions") {
                d.training_repetitions = detail::parse_number<int>(e.value, ctx);
            } else if (e.key == "attempts_per_setup") {
                d.attempts_per_setup = detail::parse_number<int>(e.value, ctx);
            } else if (is_config_key(e.key)) {
                set_config_value(d.config, e.key, e.value, source + ":" + std::to_string(e.line));
            } else {
                throw ConfigError("unknown descriptor key");
            }
        } catch (const ConfigError& err) {
            const std::string what = err.what();
            if (what.rfind(source, 0) == 0) throw;
            throw ConfigError(ctx + ": " + what);
        }
    }
    if (!have_class) throw ConfigError(source + ": descriptor is missing 'class'");
    if (d.kind == SweepClass::ee_sweep && !nearby_given) d.nearby = {NearbyMethod::greedy};
    if (d.kind == SweepClass::estimator_bench) {
        if (d.axis != "collision_size" && d.axis != "antennas_per_ap")
            throw ConfigError(source + ": estimator-bench axis must be collision_size or antennas_per_ap");
    } else if (d.kind == SweepClass::separability) {
        if (d.axis != "num_inactive_ues") throw ConfigError(source + ": separability axis must be num_inactive_ues");
    } else if (!is_config_key(d.axis)) {
        throw ConfigError(source + ": unknown sweep axis '" + d.axis + "'");
    }
    if (d.setups < 1 || d.realizations < 1 || d.training_rounds < 1 || d.training_repetitions < 1 ||
        d.attempts_per_setup < 1)
        throw ConfigError(source + ": setups, realizations, training and attempt counts must be >= 1");
    d.config.validate();
    return d;
}

inline SweepDescriptor load_descriptor(const std::string& path, const ScenarioConfig& base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open descriptor '" + path + "'");
    return parse_descriptor(parse_key_values(in, path), path, base);
}

struct SeparabilityRow {
    double num_inactive_ues = 0.0;
    SeparabilityPrediction prediction;
    std::optional<double> simulated_fraction;
};

struct SweepOutput {
    std::vector<MetricsReport> reports;
    std::vector<SeparabilityRow> separability;
};

/// Config at one axis point; the value goes through the same parser as files.
inline ScenarioConfig config_at(const SweepDescriptor& d, double value) {
    ScenarioConfig c = d.config;
    if (d.kind == SweepClass::estimator_bench && d.axis == "collision_size") return c;
    set_config_value(c, d.axis, detail::format_axis_value(c, d.axis, value), "sweep axis");
    c.validate();
    return c;
}

inline int trained_l_max(const SweepDescriptor& d, const ScenarioConfig& c, std::uint64_t point) {
    Rng rng = make_stream(c.rng_seed, point, Stream::training);
    return train_lmax({c, d.training_rounds, d.training_repetitions}, rng).l_max;
}

inline SweepOutput run_sweep(const SweepDescriptor& d, unsigned threads = 0) {
    SweepOutput out;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        const double v = d.values[i];
        ScenarioConfig c = config_at(d, v);
        switch (d.kind) {
            case SweepClass::estimator_bench: {
                const int s = d.axis == "collision_size" ? static_cast<int>(v) : d.collision_size;
                std::vector<EstimatorKind> kinds = d.estimators;
                kinds.push_back(EstimatorKind::cellular);
                for (auto kind : kinds) {
                    BenchSpec spec{kind, s, best_parameters(kind, s), d.setups, d.realizations};
                    out.reports.push_back(bench_report(run_estimator_bench(c, spec, c.rng_seed), d.axis, v, c.rng_seed));
                }
                break;
            }
            case SweepClass::anaa_sweep:
            case SweepClass::ee_sweep: {
                for (auto p : d.protocols) {
                    if (p != Protocol::cf_sucre) {
                        EstimatorSpec spec;
                        if (p == Protocol::ce_sucre) spec.kind = EstimatorKind::cellular;
                        out.reports.push_back(campaign_report(simulate(p, spec, c, threads), d.axis, v, c));
                        continue;
                    }
                    ScenarioConfig cf = c;
                    if (d.l_max_mode == LmaxMode::trained) cf.l_max = trained_l_max(d, c, i);
                    for (auto kind : d.estimators) {
                        for (auto nb : d.nearby) {
                            EstimatorSpec spec{kind, nb, c.compensation_factor};
                            out.reports.push_back(campaign_report(simulate(p, spec, cf, threads), d.axis, v, cf));
                        }
                    }
                }
                break;
            }
            case SweepClass::separability: {
                SeparabilityRow row{v, separability_prediction(c), std::nullopt};
                if (c.trials > 0 && c.num_inactive_ues > 0)
                    row.simulated_fraction = simulated_exclusive_fraction(c, c.trials, d.attempts_per_setup, threads).fraction();
                out.separability.push_back(row);
                break;
            }
        }
    }
    return out;
}

inline const char* separability_csv_header() { return "num_inactive_ues,psi,exclusive_aps,dominant_area,simulated_fraction"; }

inline void write_separability_csv(std::ostream& os, std::span<const SeparabilityRow> rows) {
    os << separability_csv_header() << '\n';
    for (const auto& r : rows) {
        os << detail::format_double(r.num_inactive_ues) << ',' << detail::format_double(r.prediction.psi) << ','
           << detail::format_double(r.prediction.exclusive_aps) << ','
           << detail::format_double(r.prediction.dominant_area) << ','
           << detail::format_optional(r.simulated_fraction) << '\n';
    }
}

inline nlohmann::ordered_json config_json(const ScenarioConfig& config) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, ref] : detail::config_fields())
        std::visit([&](auto member) { j[name] = config.*member; }, ref);
    return j;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    return {{"sweep_axis", r.sweep_axis},   {"sweep_value", r.sweep_value},       {"protocol", r.protocol},
            {"estimator", r.estimator},     {"nearby_method", r.nearby_method},   {"anaa", opt(r.anaa)},
            {"tcp_mw_symbols", opt(r.tcp_mw_symbols)}, {"nmse_median", opt(r.nmse_median)},
            {"nmse_iqr", opt(r.nmse_iqr)},  {"neb_median", opt(r.neb_median)},    {"neb_iqr", opt(r.neb_iqr)},
            {"trials", r.trials},           {"seed", r.seed}};
}

inline nlohmann::ordered_json run_manifest(std::string_view command, const ScenarioConfig& config,
                                           const nlohmann::ordered_json& extra = nlohmann::ordered_json::object()) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["provenance"] = provenance();
    j["seed"] = config.rng_seed;
    j["config"] = config_json(config);
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

inline nlohmann::ordered_json descriptor_json(const SweepDescriptor& d) {
    nlohmann::ordered_json j;
    j["class"] = to_string(d.kind);
    j["axis"] = d.axis;
    j["values"] = d.values;
    std::vector<std::string> p, e, n;
    for (auto x : d.protocols) p.emplace_back(to_string(x));
    for (auto x : d.estimators) e.emplace_back(to_string(x));
    for (auto x : d.nearby) n.emplace_back(to_string(x));
    j["protocols"] = p;
    j["estimators"] = e;
    j["nearby"] = n;
    j["l_max_mode"] = d.l_max_mode == LmaxMode::config ? "config" : "trained";
    j["collision_size"] = d.collision_size;
    j["setups"] = d.setups;
    j["realizations"] = d.realizations;
    j["training_rounds"] = d.training_rounds;
    j["training_repetitions"] = d.training_repetitions;
    j["attempts_per_setup"] = d.attempts_per_setup;
    return j;
}

}  // namespace cfra
