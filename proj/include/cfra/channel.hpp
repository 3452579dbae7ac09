#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cfra/rng.hpp"
#include "cfra/scenario.hpp"
#include "cfra/table.hpp"

namespace cfra {

using cplx = std::complex<double>;

/// Per-link constants shared by the uplink and downlink stages.
struct LinkBudget {
    int num_pilots = 1;
    double ul_power_mw = 1.0;
    double noise_mw = 1.0;
};

inline LinkBudget link_budget(const ScenarioConfig& config) {
    return {config.num_pilots, config.ul_power_mw, config.noise_power_mw()};
}

/// c(k) for each active UE and the colliding sets S_t. UE indices here are
/// local, i.e. positions in the active list.
struct PilotAssignment {
    std::vector<int> pilot_of;
    std::vector<std::vector<int>> colliding;

    int num_pilots() const noexcept { return static_cast<int>(colliding.size()); }
};

inline PilotAssignment assign_pilots(std::vector<int> pilot_of, int num_pilots) {
    PilotAssignment out;
    out.colliding.resize(static_cast<std::size_t>(num_pilots));
    for (std::size_t k = 0; k < pilot_of.size(); ++k) {
        if (pilot_of[k] < 0 || pilot_of[k] >= num_pilots) throw std::out_of_range("pilot index out of range");
        out.colliding[static_cast<std::size_t>(pilot_of[k])].push_back(static_cast<int>(k));
    }
    out.pilot_of = std::move(pilot_of);
    return out;
}

inline PilotAssignment select_pilots(std::size_t num_active, int num_pilots, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, num_pilots - 1);
    std::vector<int> choice(num_active);
    for (auto& c : choice) c = pick(rng);
    return assign_pilots(std::move(choice), num_pilots);
}

/// h_kl ~ CN(0, beta_kl I_N) for the active UEs, stored [k][l][n].
struct ChannelRealization {
    std::vector<std::size_t> ues;
    std::size_t num_aps = 0;
    std::size_t antennas = 0;
    std::vector<cplx> h;

    std::span<const cplx> at(std::size_t k, std::size_t l) const {
        return {h.data() + (k * num_aps + l) * antennas, antennas};
    }
    std::span<cplx> at(std::size_t k, std::size_t l) { return {h.data() + (k * num_aps + l) * antennas, antennas}; }
};

inline ChannelRealization draw_channels(const Topology& topo, std::vector<std::size_t> ues, Rng& rng) {
    ChannelRealization ch;
    ch.num_aps = topo.num_aps();
    ch.antennas = static_cast<std::size_t>(topo.antennas);
    ch.h.resize(ues.size() * ch.num_aps * ch.antennas);
    for (std::size_t k = 0; k < ues.size(); ++k) {
        for (std::size_t l = 0; l < ch.num_aps; ++l) {
            const double b = topo.beta(ues[k], l);
            for (auto& v : ch.at(k, l)) v = complex_normal(rng, b);
        }
    }
    ch.ues = std::move(ues);
    return ch;
}

/// y_lt for every (AP, pilot), stored [l][t][n].
struct CorrelatedUplink {
    std::size_t num_aps = 0;
    std::size_t num_pilots = 0;
    std::size_t antennas = 0;
    std::vector<cplx> y;
    std::vector<std::vector<int>> colliding;

    std::span<const cplx> at(std::size_t l, std::size_t t) const {
        return {y.data() + (l * num_pilots + t) * antennas, antennas};
    }
    std::span<cplx> at(std::size_t l, std::size_t t) { return {y.data() + (l * num_pilots + t) * antennas, antennas}; }
};

/// Effective noise n_lt ~ CN(0, sigma^2 I_N), one vector per (AP, pilot).
inline std::vector<cplx> draw_uplink_noise(std::size_t num_aps, std::size_t num_pilots, std::size_t antennas,
                                           double noise_mw, Rng& rng) {
    std::vector<cplx> n(num_aps * num_pilots * antennas);
    for (auto& v : n) v = complex_normal(rng, noise_mw);
    return n;
}

/// y_lt = sum_{i in S_t} sqrt(p tau_p) h_il + n_lt. Pilots are orthonormal, so
/// the correlator output is formed directly without pilot sequences.
inline CorrelatedUplink correlate_uplink(const ChannelRealization& ch, const PilotAssignment& pilots,
                                         const LinkBudget& link, std::span<const cplx> noise) {
    CorrelatedUplink up;
    up.num_aps = ch.num_aps;
    up.num_pilots = static_cast<std::size_t>(pilots.num_pilots());
    up.antennas = ch.antennas;
    if (noise.size() != up.num_aps * up.num_pilots * up.antennas)
        throw std::invalid_argument("correlate_uplink: noise block has the wrong size");
    up.y.assign(noise.begin(), noise.end());
    up.colliding = pilots.colliding;
    const double amp = std::sqrt(link.ul_power_mw * link.num_pilots);
    for (std::size_t t = 0; t < up.num_pilots; ++t) {
        for (int k : pilots.colliding[t]) {
            for (std::size_t l = 0; l < up.num_aps; ++l) {
                auto dst = up.at(l, t);
                const auto src = ch.at(static_cast<std::size_t>(k), l);
                for (std::size_t n = 0; n < up.antennas; ++n) dst[n] += amp * src[n];
            }
        }
    }
    return up;
}

inline CorrelatedUplink correlate_uplink(const ChannelRealization& ch, const PilotAssignment& pilots,
                                         const LinkBudget& link, Rng& noise_rng) {
    const auto noise = draw_uplink_noise(ch.num_aps, static_cast<std::size_t>(pilots.num_pilots()), ch.antennas,
                                         link.noise_mw, noise_rng);
    return correlate_uplink(ch, pilots, link, noise);
}

/// Pilot activity, a[t][l] = ||y_lt||^2 / N.
struct ActivityMatrix {
    Table<double> a;

    std::size_t num_pilots() const noexcept { return a.rows(); }
    std::size_t num_aps() const noexcept { return a.cols(); }
};

inline ActivityMatrix pilot_activity(const CorrelatedUplink& up) {
    ActivityMatrix act{Table<double>(up.num_pilots, up.num_aps)};
    for (std::size_t l = 0; l < up.num_aps; ++l) {
        for (std::size_t t = 0; t < up.num_pilots; ++t) {
            double e = 0.0;
            for (const auto& v : up.at(l, t)) e += std::norm(v);
            act.a(t, l) = e / static_cast<double>(up.antennas);
        }
    }
    return act;
}

/// alpha_lt = sum_{i in S_t} p tau_p beta_il, from the average channel gains.
inline double true_alpha_lt(const Topology& topo, std::span<const std::size_t> colliding_global, std::size_t ap,
                            const LinkBudget& link) {
    double s = 0.0;
    for (std::size_t i : colliding_global) s += topo.beta(i, ap);
    return link.ul_power_mw * link.num_pilots * s;
}

}  // namespace cfra
