#pragma once

#include <cstdint>
#include <vector>

#include "cfra/contention.hpp"
#include "cfra/rng.hpp"
#include "cfra/scenario.hpp"

namespace cfra {

/// Resolved tagged UEs plus the resource counters needed for TCP.
struct CampaignResult {
    std::vector<int> attempts;
    std::vector<bool> admitted;
    int blocks = 0;
    /// Counters over post-warmup blocks in which at least one UE transmitted.
    int ra_blocks = 0;
    double active_pilots = 0.0;
    double operative_aps = 0.0;
    double serving_pairs = 0.0;
    double dl_power_sum = 0.0;
};

/// Builds the network a protocol operates on. The cellular baseline reuses the
/// cell-free UE drop so both see identical user positions.
inline AccessNetwork make_network(Protocol protocol, const ScenarioConfig& config, Rng& topology_rng) {
    Topology topo = build_topology(config, topology_rng);
    if (protocol == Protocol::ce_sucre) topo = build_cellular_topology(config, std::move(topo.ue_positions));
    return AccessNetwork(std::move(topo), config.iota, config.noise_power_mw());
}

/// One trial: UEs activate with P_a per block, failed UEs retry with the
/// reattempt probability until admitted or out of attempts. UEs that first
/// activate inside the measurement window form the tagged cohort; the run
/// continues until that cohort resolves.
inline CampaignResult run_access_campaign(Protocol protocol, const EstimatorSpec& spec, const ScenarioConfig& config,
                                          std::uint64_t trial) {
    config.validate();
    validate_combination(protocol, spec);
    const std::uint64_t seed = config.rng_seed;
    Rng topo_rng = make_stream(seed, trial, Stream::topology);
    AccessNetwork net = make_network(protocol, config, topo_rng);
    Rng activation = make_stream(seed, trial, Stream::activation);
    Rng reattempt = make_stream(seed, trial, Stream::reattempt);
    AttemptStreams streams{make_stream(seed, trial, Stream::pilots), make_stream(seed, trial, Stream::channel),
                           make_stream(seed, trial, Stream::noise)};

    enum class State : std::uint8_t { idle, pending };
    const std::size_t U = net.topology().num_ues();
    std::vector<State> state(U, State::idle);
    std::vector<int> tries(U, 0);
    std::vector<bool> tagged(U, false);
    int outstanding = 0;

    CampaignResult res;
    const int window_end = config.warmup_blocks + config.measured_blocks;
    const int block_cap = window_end + 100 * config.max_attempts + 1000;
    std::vector<std::size_t> active;
    for (int b = 0; b < block_cap; ++b) {
        if (b >= window_end && outstanding == 0) break;
        res.blocks = b + 1;
        const bool in_window = b >= config.warmup_blocks && b < window_end;
        active.clear();
        for (std::size_t k = 0; k < U; ++k) {
            if (state[k] == State::idle) {
                if (bernoulli(activation, config.access_probability)) {
                    state[k] = State::pending;
                    tries[k] = 0;
                    tagged[k] = in_window;
                    if (in_window) ++outstanding;
                    active.push_back(k);
                }
            } else if (bernoulli(reattempt, config.reattempt_probability)) {
                active.push_back(k);
            }
        }
        if (active.empty()) continue;
        const auto outcome = run_attempt(protocol, spec, net, active, config, streams);
        if (b >= config.warmup_blocks) {
            ++res.ra_blocks;
            res.active_pilots += outcome.active_pilots;
            res.operative_aps += outcome.operative_aps;
            res.serving_pairs += outcome.serving_pairs;
            res.dl_power_sum += outcome.dl_power_sum;
        }
        for (const auto& u : outcome.ues) {
            const std::size_t k = u.ue;
            ++tries[k];
            if (!u.admitted && tries[k] < config.max_attempts) continue;
            if (tagged[k]) {
                res.attempts.push_back(tries[k]);
                res.admitted.push_back(u.admitted);
                tagged[k] = false;
                --outstanding;
            }
            state[k] = State::idle;
        }
    }
    return res;
}

}  // namespace cfra
