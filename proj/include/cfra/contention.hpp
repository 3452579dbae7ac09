#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfra/access_control.hpp"
#include "cfra/channel.hpp"
#include "cfra/estimators.hpp"
#include "cfra/rng.hpp"
#include "cfra/scenario.hpp"

namespace cfra {

enum class Protocol { bcf, cf_sucre, ce_sucre };

inline std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::bcf: return "bcf";
        case Protocol::cf_sucre: return "cf-sucre";
        case Protocol::ce_sucre: return "ce-sucre";
    }
    return "?";
}

inline Protocol parse_protocol(std::string_view s) {
    if (s == "bcf") return Protocol::bcf;
    if (s == "cf-sucre") return Protocol::cf_sucre;
    if (s == "ce-sucre") return Protocol::ce_sucre;
    throw ConfigError("unknown protocol '" + std::string(s) + "' (expected bcf|cf-sucre|ce-sucre)");
}

/// Rejects estimator choices that do not fit the protocol's topology.
inline void validate_combination(Protocol p, const EstimatorSpec& spec) {
    spec.validate();
    if (p == Protocol::cf_sucre && spec.kind == EstimatorKind::cellular)
        throw ConfigError("cf-sucre cannot use the cellular estimator");
    if (p == Protocol::ce_sucre && spec.kind != EstimatorKind::cellular)
        throw ConfigError("ce-sucre requires estimator = cellular");
}

/// Positions (into `winner_sets`) of the winners with at least one serving AP
/// that is in their natural set and in no other winner's natural set.
inline std::vector<std::size_t> spatial_separability_admit(std::span<const NearbySet* const> winner_sets,
                                                           std::span<const int> serving) {
    std::vector<std::size_t> admitted;
    if (winner_sets.empty()) return admitted;
    std::vector<int> claims(serving.size(), 0);
    for (std::size_t j = 0; j < serving.size(); ++j)
        for (const NearbySet* s : winner_sets) claims[j] += s->contains(serving[j]) ? 1 : 0;
    for (std::size_t w = 0; w < winner_sets.size(); ++w) {
        for (std::size_t j = 0; j < serving.size(); ++j) {
            if (claims[j] == 1 && winner_sets[w]->contains(serving[j])) {
                admitted.push_back(w);
                break;
            }
        }
    }
    return admitted;
}

inline std::vector<std::size_t> spatial_separability_admit(std::span<const NearbySet> winner_sets,
                                                           std::span<const int> serving) {
    std::vector<const NearbySet*> ptrs;
    for (const auto& s : winner_sets) ptrs.push_back(&s);
    return spatial_separability_admit(std::span<const NearbySet* const>(ptrs), serving);
}

/// Topology plus lazily computed nearby sets. C̆_k (iota = 1) drives
/// separability; C_k (configured iota) drives estimation.
class AccessNetwork {
public:
    AccessNetwork(Topology topo, double iota, double noise_mw)
        : topo_(std::move(topo)), iota_(iota), noise_mw_(noise_mw),
          natural_(topo_.num_ues()), nearby_(topo_.num_ues()) {}

    const Topology& topology() const noexcept { return topo_; }

    const NearbySet& natural(std::size_t ue) {
        auto& slot = natural_.at(ue);
        if (!slot) slot = nearby_set(topo_, ue, 1.0, noise_mw_);
        return *slot;
    }

    const NearbySet& nearby(std::size_t ue) {
        if (iota_ == 1.0) return natural(ue);
        auto& slot = nearby_.at(ue);
        if (!slot) slot = nearby_set(topo_, ue, iota_, noise_mw_);
        return *slot;
    }

private:
    Topology topo_;
    double iota_;
    double noise_mw_;
    std::vector<std::optional<NearbySet>> natural_;
    std::vector<std::optional<NearbySet>> nearby_;
};

/// Random streams consumed by one attempt.
struct AttemptStreams {
    Rng pilots;
    Rng channel;
    Rng noise;
};

struct UeAttempt {
    std::size_t ue = 0;
    int pilot = 0;
    bool served = false;
    Verdict verdict = Verdict::repeat;
    double gamma = 0.0;
    double alpha_hat = 0.0;
    bool admitted = false;
};

struct PilotAttempt {
    std::vector<std::size_t> colliding;
    std::vector<std::size_t> winners;
    std::vector<std::size_t> admitted;
    std::vector<int> serving;
    /// sum_{i in S_t} sum_{l in P_t} p tau_p beta_il.
    double alpha_true = 0.0;
};

struct AttemptOutcome {
    std::vector<PilotAttempt> pilots;
    std::vector<UeAttempt> ues;
    int active_pilots = 0;
    int operative_aps = 0;
    int serving_pairs = 0;
    /// sum over active pilots of (1/L) sum_{l in P_t} of the radiated per-pilot power.
    double dl_power_sum = 0.0;
};

inline int effective_l_max(Protocol p, const ScenarioConfig& config, std::size_t num_aps) {
    if (p == Protocol::cf_sucre) return std::min<int>(config.l_max, static_cast<int>(num_aps));
    return static_cast<int>(num_aps);
}

/// One RA block for the given active UEs (topology indices).
inline AttemptOutcome run_attempt(Protocol protocol, const EstimatorSpec& spec, AccessNetwork& net,
                                  std::span<const std::size_t> active_ues, const ScenarioConfig& config,
                                  AttemptStreams& rng) {
    const Topology& topo = net.topology();
    const LinkBudget link = link_budget(config);
    AttemptOutcome out;
    const auto pilots = select_pilots(active_ues.size(), link.num_pilots, rng.pilots);
    const auto ch = draw_channels(topo, {active_ues.begin(), active_ues.end()}, rng.channel);
    const auto up = correlate_uplink(ch, pilots, link, rng.noise);
    const auto act = pilot_activity(up);
    const auto serving = build_serving_sets(act, effective_l_max(protocol, config, topo.num_aps()), link.noise_mw);

    out.operative_aps = static_cast<int>(serving.operative_aps.size());
    for (const auto& t : serving.t_l) out.serving_pairs += static_cast<int>(t.size());

    const std::size_t K = active_ues.size();
    out.ues.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        out.ues[k].ue = active_ues[k];
        out.ues[k].pilot = pilots.pilot_of[k];
        out.ues[k].served = serving.pilot_active(static_cast<std::size_t>(pilots.pilot_of[k]));
    }

    const bool sucre = protocol != Protocol::bcf;
    const bool normalized = sucre && spec.kind == EstimatorKind::est3;
    std::vector<double> cpu;
    if (normalized) cpu = cpu_alpha_hat(act, link.noise_mw);

    std::optional<DownlinkObservation> obs;
    if (sucre) {
        obs = normalized ? downlink_observation(up, serving, topo, ch, pilots, link, rng.noise, Precoding::normalized,
                                                std::span<const double>(cpu))
                         : downlink_observation(up, serving, topo, ch, pilots, link, rng.noise, Precoding::standard);
        const auto ctx = estimator_context(link, topo.antennas);
        for (std::size_t k = 0; k < K; ++k) {
            auto& u = out.ues[k];
            if (!u.served) {
                u.verdict = Verdict::inactive;
                continue;
            }
            const auto kn = make_knowledge(topo, net.nearby(u.ue), obs->z[k], ctx);
            const auto d = decide(kn, spec, ctx);
            u.verdict = d.verdict;
            u.gamma = d.gamma;
            u.alpha_hat = d.alpha_hat;
        }
    }

    out.pilots.resize(static_cast<std::size_t>(link.num_pilots));
    std::vector<const NearbySet*> winner_sets;
    for (std::size_t t = 0; t < out.pilots.size(); ++t) {
        auto& pa = out.pilots[t];
        pa.serving = serving.p_t[t];
        if (!pa.serving.empty()) {
            ++out.active_pilots;
            double q = 0.0;
            for (int l : pa.serving)
                q += obs && normalized ? obs->effective_dl_power(static_cast<std::size_t>(l), t)
                                       : topo.ap_dl_power_mw[static_cast<std::size_t>(l)];
            out.dl_power_sum += q / static_cast<double>(topo.num_aps());
        }
        winner_sets.clear();
        for (int k : pilots.colliding[t]) {
            const auto& u = out.ues[static_cast<std::size_t>(k)];
            pa.colliding.push_back(u.ue);
            for (int l : pa.serving) pa.alpha_true += link.ul_power_mw * link.num_pilots * topo.beta(u.ue, l);
            if (u.served && u.verdict == Verdict::repeat) {
                pa.winners.push_back(static_cast<std::size_t>(k));
                winner_sets.push_back(&net.natural(u.ue));
            }
        }
        if (pa.serving.empty() || pa.winners.empty()) {
            for (auto& w : pa.winners) w = out.ues[w].ue;
            continue;
        }
        std::vector<std::size_t> admitted_local;
        if (protocol == Protocol::ce_sucre) {
            if (pa.winners.size() == 1) admitted_local.push_back(0);
        } else {
            admitted_local = spatial_separability_admit(std::span<const NearbySet* const>(winner_sets), pa.serving);
        }
        for (std::size_t w : admitted_local) {
            auto& u = out.ues[pa.winners[w]];
            u.admitted = true;
            pa.admitted.push_back(u.ue);
        }
        for (auto& w : pa.winners) w = out.ues[w].ue;
    }
    return out;
}

}  // namespace cfra
