// cfra command line driver.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cfra/experiments.hpp"

namespace fs = std::filesystem;
using cfra::ConfigError;
using json = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string out_dir;
    std::string format = "csv";
    std::vector<std::string> overrides;
    unsigned threads = 0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "RNG seed (overrides rng_seed)");
    app->add_option("--trials", c.trials, "number of trials (overrides trials)");
    app->add_option("--out", c.out_dir, "output directory; stdout when omitted");
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--set", c.overrides, "extra key=value override, repeatable");
    app->add_option("--threads", c.threads, "worker threads, 0 = all cores");
}

cfra::ScenarioConfig resolve_config(const Common& c) {
    cfra::ScenarioConfig cfg = c.config_path.empty() ? cfra::ScenarioConfig{} : cfra::load_config(c.config_path);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfra::set_config_value(cfg, cfra::detail::trim(std::string_view(kv).substr(0, eq)),
                               cfra::detail::trim(std::string_view(kv).substr(eq + 1)), "--set");
    }
    if (c.seed) cfg.rng_seed = *c.seed;
    if (c.trials) cfg.trials = *c.trials;
    cfg.validate();
    return cfg;
}

/// Writes `name`.csv/.json plus manifest.json under --out, or the payload to stdout.
void emit(const Common& c, const std::string& name, const std::string& csv, const json& rows, const json& manifest) {
    const bool as_json = c.format == "json";
    if (c.out_dir.empty()) {
        if (as_json) std::cout << json{{"manifest", manifest}, {"results", rows}}.dump(2) << '\n';
        else std::cout << csv;
        return;
    }
    fs::create_directories(c.out_dir);
    const fs::path dir(c.out_dir);
    auto write = [](const fs::path& p, const std::string& text) {
        std::ofstream os(p, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + p.string());
        os << text;
    };
    if (as_json) write(dir / (name + ".json"), rows.dump(2) + "\n");
    else write(dir / (name + ".csv"), csv);
    write(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cerr << "wrote " << (dir / (name + (as_json ? ".json" : ".csv"))).string() << '\n';
}

json report_rows(const std::vector<cfra::MetricsReport>& reports) {
    json rows = json::array();
    for (const auto& r : reports) rows.push_back(cfra::to_json(r));
    return rows;
}

std::string separability_text(const std::vector<cfra::SeparabilityRow>& rows) {
    std::ostringstream os;
    cfra::write_separability_csv(os, rows);
    return os.str();
}

json separability_rows(const std::vector<cfra::SeparabilityRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json j{{"num_inactive_ues", r.num_inactive_ues},
               {"psi", r.prediction.psi},
               {"exclusive_aps", r.prediction.exclusive_aps},
               {"dominant_area", r.prediction.dominant_area},
               {"d_lim", r.prediction.d_lim},
               {"neighbor_prob", r.prediction.neighbor_prob}};
        j["simulated_fraction"] = r.simulated_fraction ? json(*r.simulated_fraction) : json();
        out.push_back(j);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell-free massive MIMO random access simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cfra::provenance());

    Common common;

    auto* sim = app.add_subcommand("simulate", "run one access campaign");
    add_common(sim, common);
    std::string protocol = "cf-sucre", estimator = "est2", nearby = "greedy";
    std::optional<double> delta;
    sim->add_option("--protocol", protocol, "bcf|cf-sucre|ce-sucre");
    sim->add_option("--estimator", estimator, "est1|est2|est3|cellular");
    sim->add_option("--nearby", nearby, "fixed|greedy");
    sim->add_option("--delta", delta, "est3 compensation factor (default: compensation_factor)");

    auto* sweep = app.add_subcommand("sweep", "run an experiment descriptor");
    add_common(sweep, common);
    std::string descriptor;
    sweep->add_option("descriptor", descriptor, "descriptor file")->required()->check(CLI::ExistingFile);

    auto* analyze = app.add_subcommand("analyze", "closed-form separability curve");
    add_common(analyze, common);
    std::string users = "0:20000:1000";
    analyze->add_option("--users", users, "|U| values, 'a,b,c' or 'first:last[:step]'");

    auto* train = app.add_subcommand("train-lmax", "estimate L^max from a training phase");
    add_common(train, common);
    int rounds = 100, repetitions = 100;
    train->add_option("--rounds", rounds, "training rounds");
    train->add_option("--repetitions", repetitions, "repetitions per round");

    auto* calib = app.add_subcommand("calibrate-delta", "Monte-Carlo of the normalized DL power");
    add_common(calib, common);
    std::optional<int> calib_lmax;
    int calib_setups = 20, calib_realizations = 50, max_collision = 10;
    calib->add_option("--l-max", calib_lmax, "serving-set cap (default: l_max)");
    calib->add_option("--setups", calib_setups, "setups per collision size");
    calib->add_option("--realizations", calib_realizations, "channel realizations per setup");
    calib->add_option("--max-collision", max_collision, "largest collision size");

    auto* bench = app.add_subcommand("estimators-bench", "estimator error statistics per collision size");
    add_common(bench, common);
    std::string sizes = "1:10";
    std::string bench_estimators = "est1,est2,est3,cellular";
    int bench_setups = 100, bench_realizations = 100;
    bench->add_option("--sizes", sizes, "collision sizes");
    bench->add_option("--estimators", bench_estimators, "comma-separated estimators");
    bench->add_option("--setups", bench_setups, "setups per size");
    bench->add_option("--realizations", bench_realizations, "realizations per setup");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve_config(common);
        if (sim->parsed()) {
            const auto proto = cfra::parse_protocol(protocol);
            cfra::EstimatorSpec spec{cfra::parse_estimator(estimator), cfra::parse_nearby(nearby),
                                     delta.value_or(cfg.compensation_factor)};
            const auto s = cfra::simulate(proto, spec, cfg, common.threads);
            const std::vector<cfra::MetricsReport> rows{cfra::campaign_report(s, "none", 0.0, cfg)};
            json extra{{"protocol", protocol},
                       {"estimator", estimator},
                       {"nearby", nearby},
                       {"delta", spec.delta},
                       {"resolved_ues", s.resolved},
                       {"admitted_ues", s.admitted},
                       {"pilots_per_operative_ap", s.usage.pilots_per_operative_ap},
                       {"operative_aps", s.usage.operative_aps},
                       {"active_pilots", s.usage.active_pilots},
                       {"q_eff", s.q_eff}};
            emit(common, "simulate", cfra::serialize_csv(rows), report_rows(rows),
                 cfra::run_manifest("simulate", cfg, extra));
        } else if (sweep->parsed()) {
            const auto d = cfra::load_descriptor(descriptor, cfg);
            const auto out = cfra::run_sweep(d, common.threads);
            const auto manifest = cfra::run_manifest("sweep", d.config, json{{"descriptor", cfra::descriptor_json(d)}});
            if (d.kind == cfra::SweepClass::separability)
                emit(common, "separability", separability_text(out.separability), separability_rows(out.separability),
                     manifest);
            else
                emit(common, "sweep", cfra::serialize_csv(out.reports), report_rows(out.reports), manifest);
        } else if (analyze->parsed()) {
            std::vector<cfra::SeparabilityRow> rows;
            for (double u : cfra::detail::parse_values(users, "--users")) {
                auto c = cfg;
                cfra::set_config_value(c, "num_inactive_ues", cfra::detail::format_axis_value(c, "num_inactive_ues", u),
                                       "--users");
                rows.push_back({u, cfra::separability_prediction(c), std::nullopt});
            }
            emit(common, "analyze", separability_text(rows), separability_rows(rows),
                 cfra::run_manifest("analyze", cfg, json{{"users", users}}));
        } else if (train->parsed()) {
            cfra::Rng rng = cfra::make_stream(cfg.rng_seed, 0, cfra::Stream::training);
            const auto res = cfra::train_lmax({cfg, rounds, repetitions}, rng);
            std::ostringstream csv;
            csv << "round,active_ues,active_pilots,mean_lt\n";
            json trace = json::array();
            for (const auto& r : res.rounds) {
                csv << r.round << ',' << r.active_ues << ',' << r.active_pilots << ','
                    << (std::isnan(r.mean_lt) ? std::string() : cfra::detail::format_double(r.mean_lt)) << '\n';
                trace.push_back({{"round", r.round},
                                 {"active_ues", r.active_ues},
                                 {"active_pilots", r.active_pilots},
                                 {"mean_lt", std::isnan(r.mean_lt) ? json() : json(r.mean_lt)}});
            }
            std::cerr << "l_max = " << res.l_max << " (mean L_t " << res.mean_over_rounds << ")\n";
            json summary{{"l_max", res.l_max}, {"mean_over_rounds", res.mean_over_rounds}, {"rounds", trace}};
            emit(common, "train_lmax", csv.str(), summary,
                 cfra::run_manifest("train-lmax", cfg,
                                    json{{"rounds", rounds},
                                         {"repetitions", repetitions},
                                         {"l_max", res.l_max},
                                         {"mean_over_rounds", res.mean_over_rounds}}));
        } else if (calib->parsed()) {
            cfra::Rng rng = cfra::make_stream(cfg.rng_seed, 0, cfra::Stream::calibration);
            const int l_max = calib_lmax.value_or(cfg.l_max);
            const auto res = cfra::calibrate_delta(cfg, l_max, rng, calib_setups, calib_realizations, max_collision);
            std::ostringstream csv;
            csv << "collision_size,q_tilde_mean\n";
            json trace = json::array();
            for (std::size_t i = 0; i < res.by_collision_size.size(); ++i) {
                csv << i + 1 << ',' << cfra::detail::format_double(res.by_collision_size[i]) << '\n';
                trace.push_back({{"collision_size", i + 1}, {"q_tilde_mean", res.by_collision_size[i]}});
            }
            std::cerr << "q_tilde_avg = " << res.q_tilde_avg << " mW, delta = " << res.delta << '\n';
            json summary{{"q_tilde_avg", res.q_tilde_avg}, {"delta", res.delta}, {"draws", res.draws},
                         {"by_collision_size", trace}};
            emit(common, "calibrate_delta", csv.str(), summary,
                 cfra::run_manifest("calibrate-delta", cfg,
                                    json{{"l_max", l_max},
                                         {"setups", calib_setups},
                                         {"realizations", calib_realizations},
                                         {"q_tilde_avg", res.q_tilde_avg},
                                         {"delta", res.delta}}));
        } else if (bench->parsed()) {
            std::vector<cfra::EstimatorKind> kinds;
            for (const auto& s : cfra::detail::split_list(bench_estimators)) kinds.push_back(cfra::parse_estimator(s));
            if (bench_setups < 1 || bench_realizations < 1) throw ConfigError("setups and realizations must be >= 1");
            std::vector<cfra::MetricsReport> rows;
            for (double v : cfra::detail::parse_values(sizes, "--sizes")) {
                const int s = static_cast<int>(v);
                if (s != v) throw ConfigError("--sizes: collision sizes must be integers");
                for (auto k : kinds) {
                    cfra::BenchSpec spec{k, s, cfra::best_parameters(k, s), bench_setups, bench_realizations};
                    rows.push_back(cfra::bench_report(cfra::run_estimator_bench(cfg, spec, cfg.rng_seed),
                                                      "collision_size", v, cfg.rng_seed));
                }
            }
            emit(common, "estimators_bench", cfra::serialize_csv(rows), report_rows(rows),
                 cfra::run_manifest("estimators-bench", cfg,
                                    json{{"sizes", sizes},
                                         {"estimators", bench_estimators},
                                         {"setups", bench_setups},
                                         {"realizations", bench_realizations}}));
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
