#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cfra/access_control.hpp"
#include "cfra/channel.hpp"
#include "cfra/rng.hpp"
#include "cfra/scenario.hpp"

namespace cfra {

struct TrainingConfig {
    ScenarioConfig scenario;
    int rounds = 100;
    int repetitions = 100;

    void validate() const {
        scenario.validate();
        if (rounds < 1) throw ConfigError("training rounds must be >= 1");
        if (repetitions < 1) throw ConfigError("training repetitions must be >= 1");
    }
    long long duration_symbols() const { return static_cast<long long>(rounds) * repetitions; }
};

struct TrainingRound {
    int round = 0;
    int active_ues = 0;
    int active_pilots = 0;
    /// Mean L_t over the active pilots; NaN when the round had none.
    double mean_lt = 0.0;
};

struct TrainingResult {
    int l_max = 1;
    double mean_over_rounds = 0.0;
    std::vector<TrainingRound> rounds;
};

/// Per pilot used in the round: threshold at the row mean of the averaged
/// activity and count the APs at or above it.
inline std::vector<int> serving_counts(const Table<double>& mean_activity, const PilotAssignment& pilots) {
    std::vector<int> counts;
    for (std::size_t t = 0; t < mean_activity.rows(); ++t) {
        if (pilots.colliding[t].empty()) continue;
        const auto row = mean_activity.row(t);
        const double eps = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
        int n = 0;
        for (double v : row) n += v >= eps ? 1 : 0;
        counts.push_back(n);
    }
    return counts;
}

/// Training phase for L^max on a freshly dropped population.
inline TrainingResult train_lmax(const TrainingConfig& training, Rng& rng) {
    training.validate();
    const ScenarioConfig& cfg = training.scenario;
    const Topology topo = build_topology(cfg, rng);
    const LinkBudget link = link_budget(cfg);
    TrainingResult res;
    double sum = 0.0;
    int contributing = 0;
    for (int r = 0; r < training.rounds; ++r) {
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < topo.num_ues(); ++k)
            if (bernoulli(rng, cfg.access_probability)) active.push_back(k);
        const auto pilots = select_pilots(active.size(), cfg.num_pilots, rng);
        Table<double> mean(static_cast<std::size_t>(cfg.num_pilots), topo.num_aps());
        for (int e = 0; e < training.repetitions; ++e) {
            const auto ch = draw_channels(topo, active, rng);
            const auto act = pilot_activity(correlate_uplink(ch, pilots, link, rng));
            for (std::size_t i = 0; i < mean.flat().size(); ++i) mean.flat()[i] += act.a.flat()[i];
        }
        for (auto& v : mean.flat()) v /= training.repetitions;
        const auto counts = serving_counts(mean, pilots);
        TrainingRound tr{r, static_cast<int>(active.size()), static_cast<int>(counts.size()), std::nan("")};
        if (!counts.empty()) {
            tr.mean_lt = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
            sum += tr.mean_lt;
            ++contributing;
        }
        res.rounds.push_back(tr);
    }
    if (contributing == 0) throw std::runtime_error("train_lmax: no round had an active pilot");
    res.mean_over_rounds = sum / contributing;
    res.l_max = std::clamp(static_cast<int>(std::ceil(res.mean_over_rounds - 1e-12)), 1, cfg.num_aps);
    return res;
}

struct DeltaCalibration {
    double q_tilde_avg = 0.0;
    double delta = 1.0;
    /// Mean per-AP normalized power for collision sizes 1, 2, ...
    std::vector<double> by_collision_size;
    long long draws = 0;
};

inline double delta_from_power(double dl_power_mw, double q_tilde_avg) { return std::sqrt(dl_power_mw / q_tilde_avg); }

/// (1/L) sum_{l in P_t} q_l ||y_lt||^2 / (N alpha_hat_t) for pilot 0 with
/// every UE of `pilots` colliding on it.
inline double mean_normalized_power(const Topology& topo, const CorrelatedUplink& up, int l_max, double noise_mw) {
    const auto act = pilot_activity(up);
    const auto serving = build_serving_sets(act, l_max, noise_mw);
    const auto alpha_hat = cpu_alpha_hat(act, noise_mw);
    if (serving.p_t[0].empty()) return 0.0;
    double q = 0.0;
    for (int l : serving.p_t[0]) q += topo.ap_dl_power_mw[static_cast<std::size_t>(l)] * act.a(0, static_cast<std::size_t>(l)) / alpha_hat[0];
    return q / static_cast<double>(topo.num_aps());
}

/// Monte-Carlo of the normalized per-pilot DL power, uniform over collision
/// sizes 1..max_collision, then delta = sqrt(q_l / q_avg).
inline DeltaCalibration calibrate_delta(const ScenarioConfig& cfg, int l_max, Rng& rng, int setups = 20,
                                        int realizations = 50, int max_collision = 10) {
    cfg.validate();
    if (l_max < 1 || l_max > cfg.num_aps) throw ConfigError("calibrate_delta: l_max must be in [1, L]");
    if (setups < 1 || realizations < 1 || max_collision < 1) throw ConfigError("calibrate_delta: counts must be >= 1");
    const LinkBudget link = link_budget(cfg);
    DeltaCalibration out;
    double total = 0.0;
    for (int s = 1; s <= max_collision; ++s) {
        double acc = 0.0;
        for (int setup = 0; setup < setups; ++setup) {
            const Topology topo = build_topology(cfg, uniform_positions(static_cast<std::size_t>(s), cfg.square_length_m, rng));
            std::vector<std::size_t> ues(static_cast<std::size_t>(s));
            std::iota(ues.begin(), ues.end(), std::size_t{0});
            const auto pilots = assign_pilots(std::vector<int>(static_cast<std::size_t>(s), 0), cfg.num_pilots);
            for (int r = 0; r < realizations; ++r) {
                const auto ch = draw_channels(topo, ues, rng);
                acc += mean_normalized_power(topo, correlate_uplink(ch, pilots, link, rng), l_max, link.noise_mw);
            }
        }
        const long long n = static_cast<long long>(setups) * realizations;
        out.by_collision_size.push_back(acc / static_cast<double>(n));
        out.draws += n;
        total += acc;
    }
    out.q_tilde_avg = total / static_cast<double>(out.draws);
    out.delta = delta_from_power(cfg.dl_power_per_ap_mw, out.q_tilde_avg);
    return out;
}

}  // namespace cfra
