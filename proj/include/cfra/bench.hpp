#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cfra/access_control.hpp"
#include "cfra/channel.hpp"
#include "cfra/estimators.hpp"
#include "cfra/metrics.hpp"
#include "cfra/rng.hpp"
#include "cfra/scenario.hpp"

namespace cfra {

/// (|C_k|, L^max, delta) used for one estimator at one collision size.
struct ParameterChoice {
    int nearby_size = 1;
    int l_max = 1;
    double delta = 1.0;
};

/// Best-median parameters for L = 64, N = 8, collision sizes 1..10.
inline ParameterChoice best_parameters(EstimatorKind kind, int collision_size) {
    static constexpr std::array<std::array<int, 2>, 10> est1{
        {{6, 6}, {3, 3}, {7, 4}, {7, 6}, {7, 7}, {7, 8}, {7, 8}, {7, 10}, {7, 10}, {7, 12}}};
    static constexpr std::array<std::array<int, 2>, 10> est2{
        {{7, 10}, {7, 7}, {6, 6}, {7, 8}, {7, 7}, {7, 8}, {7, 9}, {7, 10}, {7, 11}, {7, 14}}};
    static constexpr std::array<std::array<int, 2>, 10> est3{
        {{5, 5}, {7, 4}, {7, 6}, {7, 6}, {7, 7}, {7, 7}, {7, 9}, {7, 9}, {7, 10}, {7, 12}}};
    static constexpr std::array<double, 10> est3_delta{2.29, 2.13, 2.56, 2.59, 2.8, 2.82, 3.18, 3.19, 3.36, 3.66};
    if (collision_size < 1 || collision_size > 10) throw ConfigError("tabulated parameters cover collision sizes 1..10");
    const auto i = static_cast<std::size_t>(collision_size - 1);
    switch (kind) {
        case EstimatorKind::est1: return {est1[i][0], est1[i][1], 1.0};
        case EstimatorKind::est2: return {est2[i][0], est2[i][1], 1.0};
        case EstimatorKind::est3: return {est3[i][0], est3[i][1], est3_delta[i]};
        case EstimatorKind::cellular: return {1, 1, 1.0};
    }
    throw std::logic_error("unhandled estimator kind");
}

struct BenchSpec {
    EstimatorKind kind = EstimatorKind::est1;
    int collision_size = 1;
    ParameterChoice params;
    int setups = 100;
    int realizations = 100;
};

/// Per-UE samples (one per UE per setup) of the normalized error statistics.
struct BenchResult {
    BenchSpec spec;
    std::vector<double> nmse;
    std::vector<double> neb;
    std::vector<double> nmd;
};

/// All colliding UEs share one pilot; the CPU builds P_t from the activity
/// with the chosen L^max and every UE estimates alpha_t from z_k. The errors
/// are normalized by the alpha_t of the same realization. Streams depend on
/// (seed, collision size) only, so estimators see the same drops and fading.
inline BenchResult run_estimator_bench(const ScenarioConfig& cfg, const BenchSpec& spec, std::uint64_t seed) {
    cfg.validate();
    if (spec.collision_size < 1) throw ConfigError("collision size must be >= 1");
    if (spec.setups < 1 || spec.realizations < 1) throw ConfigError("setups and realizations must be >= 1");
    const bool cellular = spec.kind == EstimatorKind::cellular;
    const bool normalized = spec.kind == EstimatorKind::est3;
    const auto index = static_cast<std::uint64_t>(spec.collision_size);
    Rng setup_rng = make_stream(seed, index, Stream::bench_setup);
    Rng channel_rng = make_stream(seed, index, Stream::channel);
    Rng noise_rng = make_stream(seed, index, Stream::noise);
    const LinkBudget link = link_budget(cfg);
    const auto S = static_cast<std::size_t>(spec.collision_size);

    BenchResult out;
    out.spec = spec;
    std::vector<std::size_t> ues(S);
    std::iota(ues.begin(), ues.end(), std::size_t{0});
    const auto pilots = assign_pilots(std::vector<int>(S, 0), cfg.num_pilots);
    for (int setup = 0; setup < spec.setups; ++setup) {
        auto pos = uniform_positions(S, cfg.square_length_m, setup_rng);
        const Topology topo = cellular ? build_cellular_topology(cfg, std::move(pos)) : build_topology(cfg, std::move(pos));
        const int l_max = cellular ? 1 : std::min<int>(spec.params.l_max, static_cast<int>(topo.num_aps()));
        const auto ctx = estimator_context(link, topo.antennas);
        std::vector<NearbySet> nearby;
        for (std::size_t k = 0; k < S; ++k)
            nearby.push_back(truncated(nearby_set(topo, k, 1.0, link.noise_mw),
                                       static_cast<std::size_t>(spec.params.nearby_size)));
        std::vector<double> err_sum(S, 0.0), err_sq(S, 0.0), nmd_sum(S, 0.0);
        std::vector<int> counted(S, 0);
        for (int r = 0; r < spec.realizations; ++r) {
            const auto ch = draw_channels(topo, ues, channel_rng);
            const auto up = correlate_uplink(ch, pilots, link, noise_rng);
            const auto act = pilot_activity(up);
            const auto serving = build_serving_sets(act, l_max, link.noise_mw);
            std::vector<double> cpu;
            if (normalized) cpu = cpu_alpha_hat(act, link.noise_mw);
            const auto obs = normalized ? downlink_observation(up, serving, topo, ch, pilots, link, noise_rng,
                                                               Precoding::normalized, std::span<const double>(cpu))
                                        : downlink_observation(up, serving, topo, ch, pilots, link, noise_rng,
                                                               Precoding::standard);
            const auto& pt = serving.p_t[0];
            if (pt.empty()) continue;
            double alpha = 0.0;
            for (int l : pt) alpha += true_alpha_lt(topo, ues, static_cast<std::size_t>(l), link);
            for (std::size_t k = 0; k < S; ++k) {
                const auto kn = make_knowledge(topo, nearby[k], obs.z[k], ctx);
                const double a = cellular ? estimate_cellular(topo.beta(k, 0), topo.ap_dl_power_mw[0], obs.z[k], ctx)
                                          : estimate_from_sums(spec.kind, full_sums(kn, ctx), obs.z[k], ctx,
                                                               spec.params.delta);
                const double e = (a - alpha) / alpha;
                err_sum[k] += e;
                err_sq[k] += e * e;
                double sp = 0.0, sc = 0.0;
                for (int l : pt) sp += topo.beta(k, static_cast<std::size_t>(l));
                for (double b : kn.beta_nearby) sc += b;
                nmd_sum[k] += nmd(sp, sc);
                ++counted[k];
            }
        }
        for (std::size_t k = 0; k < S; ++k) {
            if (counted[k] == 0) continue;
            out.neb.push_back(err_sum[k] / counted[k]);
            out.nmse.push_back(err_sq[k] / counted[k]);
            out.nmd.push_back(nmd_sum[k] / counted[k]);
        }
    }
    return out;
}

inline MetricsReport bench_report(const BenchResult& r, std::string axis, double value, std::uint64_t seed) {
    MetricsReport m;
    m.sweep_axis = std::move(axis);
    m.sweep_value = value;
    m.protocol = r.spec.kind == EstimatorKind::cellular ? "ce-sucre" : "cf-sucre";
    m.estimator = std::string(to_string(r.spec.kind));
    m.nearby_method = "fixed";
    if (!r.nmse.empty()) {
        m.nmse_median = median(r.nmse);
        m.nmse_iqr = iqr(r.nmse);
        m.neb_median = median(r.neb);
        m.neb_iqr = iqr(r.neb);
    }
    m.trials = r.spec.setups;
    m.seed = seed;
    return m;
}

}  // namespace cfra
