#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cfra/channel.hpp"
#include "cfra/scenario.hpp"
#include "cfra/table.hpp"

namespace cfra {

/// P_t per pilot (descending activity), T_l per AP (ascending pilot) and the
/// operative AP set P (ascending).
struct ServingSets {
    std::vector<std::vector<int>> p_t;
    std::vector<std::vector<int>> t_l;
    std::vector<int> operative_aps;

    bool pilot_active(std::size_t t) const { return !p_t[t].empty(); }
    bool serves(std::size_t t, int ap) const {
        return std::find(p_t[t].begin(), p_t[t].end(), ap) != p_t[t].end();
    }
};

/// Derives T_l and P from per-pilot serving lists.
inline ServingSets serving_sets_from_pilots(std::vector<std::vector<int>> p_t, std::size_t num_aps) {
    ServingSets s;
    s.t_l.resize(num_aps);
    for (std::size_t t = 0; t < p_t.size(); ++t)
        for (int l : p_t[t]) s.t_l.at(static_cast<std::size_t>(l)).push_back(static_cast<int>(t));
    for (std::size_t l = 0; l < num_aps; ++l)
        if (!s.t_l[l].empty()) s.operative_aps.push_back(static_cast<int>(l));
    s.p_t = std::move(p_t);
    return s;
}

/// Derives P_t (ascending AP order) from per-AP pilot lists.
inline std::vector<std::vector<int>> pilots_from_aps(const std::vector<std::vector<int>>& t_l, std::size_t num_pilots) {
    std::vector<std::vector<int>> p_t(num_pilots);
    for (std::size_t l = 0; l < t_l.size(); ++l)
        for (int t : t_l[l]) p_t.at(static_cast<std::size_t>(t)).push_back(static_cast<int>(l));
    return p_t;
}

inline ServingSets build_serving_sets(const ActivityMatrix& activity, int l_max, double noise_mw) {
    const std::size_t num_aps = activity.num_aps();
    if (l_max < 1 || static_cast<std::size_t>(l_max) > num_aps)
        throw std::invalid_argument("build_serving_sets: l_max must be in [1, L]");
    std::vector<std::vector<int>> p_t(activity.num_pilots());
    std::vector<int> order(num_aps);
    for (std::size_t t = 0; t < activity.num_pilots(); ++t) {
        const auto row = activity.a.row(t);
        order.clear();
        for (std::size_t l = 0; l < num_aps; ++l)
            if (row[l] > noise_mw) order.push_back(static_cast<int>(l));
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row[a] > row[b]; });
        if (order.size() > static_cast<std::size_t>(l_max)) order.resize(static_cast<std::size_t>(l_max));
        p_t[t] = order;
    }
    return serving_sets_from_pilots(std::move(p_t), num_aps);
}

/// alpha_hat_t = sum_l max(a[t][l] - sigma^2, 0), one value per pilot.
inline std::vector<double> cpu_alpha_hat(const ActivityMatrix& activity, double noise_mw) {
    std::vector<double> out(activity.num_pilots(), 0.0);
    for (std::size_t t = 0; t < activity.num_pilots(); ++t)
        for (double a : activity.a.row(t)) out[t] += std::max(a - noise_mw, 0.0);
    return out;
}

enum class Precoding { standard, normalized };

/// Terms of z_k before the DL noise is added.
struct DownlinkTerms {
    cplx effective{};
    cplx interference{};
    cplx noise{};
};

/// z_k for each active UE (local index) plus its deterministic approximation.
struct DownlinkObservation {
    std::vector<cplx> z;
    std::vector<double> z_tilde;
    std::vector<bool> served;
    Precoding precoding = Precoding::standard;
    /// Per-pilot DL power actually radiated by each AP, [l][t]; zero off P_t.
    Table<double> effective_dl_power;
};

namespace detail {

inline cplx inner(std::span<const cplx> h, std::span<const cplx> y) {
    cplx s{};
    for (std::size_t n = 0; n < h.size(); ++n) s += std::conj(h[n]) * y[n];
    return s;
}

inline double squared_norm(std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

inline double precoder_scale(const CorrelatedUplink& up, std::size_t l, std::size_t t, Precoding kind,
                             std::span<const double> cpu_alpha_hat) {
    if (kind == Precoding::standard) return 1.0 / std::sqrt(squared_norm(up.at(l, t)));
    return 1.0 / std::sqrt(static_cast<double>(up.antennas) * cpu_alpha_hat[t]);
}

}  // namespace detail

/// Splits sum_{l in P_t} sqrt(q_l tau_p) h_kl^H v_lt into the UE's own-channel
/// part, the part due to the other colliding UEs and the UL-noise part.
inline DownlinkTerms downlink_terms(std::size_t k, const CorrelatedUplink& up, const ServingSets& serving,
                                    const Topology& topo, const ChannelRealization& ch, const PilotAssignment& pilots,
                                    const LinkBudget& link, std::span<const cplx> noise, Precoding kind,
                                    std::span<const double> cpu_alpha_hat = {}) {
    DownlinkTerms out;
    const auto t = static_cast<std::size_t>(pilots.pilot_of[k]);
    const double amp = std::sqrt(link.ul_power_mw * link.num_pilots);
    const std::size_t n_ant = up.antennas;
    for (int l_i : serving.p_t[t]) {
        const auto l = static_cast<std::size_t>(l_i);
        const double c = std::sqrt(topo.ap_dl_power_mw[l] * link.num_pilots) *
                         detail::precoder_scale(up, l, t, kind, cpu_alpha_hat);
        const auto hk = ch.at(k, l);
        out.effective += c * amp * detail::squared_norm(hk);
        for (int i : pilots.colliding[t])
            if (static_cast<std::size_t>(i) != k)
                out.interference += c * amp * detail::inner(hk, ch.at(static_cast<std::size_t>(i), l));
        out.noise += c * detail::inner(hk, noise.subspan((l * up.num_pilots + t) * n_ant, n_ant));
    }
    return out;
}

inline DownlinkObservation downlink_observation(const CorrelatedUplink& up, const ServingSets& serving,
                                                const Topology& topo, const ChannelRealization& ch,
                                                const PilotAssignment& pilots, const LinkBudget& link, Rng& rng,
                                                Precoding kind, std::optional<std::span<const double>> alpha_hat = {}) {
    if ((kind == Precoding::normalized) != alpha_hat.has_value())
        throw std::invalid_argument("downlink_observation: CPU estimate required iff precoding is normalized");
    const std::span<const double> cpu = alpha_hat.value_or(std::span<const double>{});
    if (kind == Precoding::normalized && cpu.size() != up.num_pilots)
        throw std::invalid_argument("downlink_observation: one CPU estimate per pilot expected");

    DownlinkObservation obs;
    obs.precoding = kind;
    const std::size_t K = pilots.pilot_of.size();
    obs.z.resize(K);
    obs.z_tilde.assign(K, 0.0);
    obs.served.assign(K, false);
    obs.effective_dl_power = Table<double>(up.num_aps, up.num_pilots);
    const double n_ant = static_cast<double>(up.antennas);

    for (std::size_t t = 0; t < up.num_pilots; ++t) {
        for (int l : serving.p_t[t]) {
            const auto ll = static_cast<std::size_t>(l);
            obs.effective_dl_power(ll, t) =
                kind == Precoding::standard
                    ? topo.ap_dl_power_mw[ll]
                    : topo.ap_dl_power_mw[ll] * detail::squared_norm(up.at(ll, t)) / (n_ant * cpu[t]);
        }
    }

    std::vector<std::size_t> colliding_global;
    for (std::size_t k = 0; k < K; ++k) {
        const auto t = static_cast<std::size_t>(pilots.pilot_of[k]);
        cplx z{};
        if (serving.pilot_active(t)) {
            obs.served[k] = true;
            colliding_global.clear();
            for (int i : pilots.colliding[t]) colliding_global.push_back(ch.ues[static_cast<std::size_t>(i)]);
            const std::size_t ue = ch.ues[k];
            for (int l_i : serving.p_t[t]) {
                const auto l = static_cast<std::size_t>(l_i);
                const double c = std::sqrt(topo.ap_dl_power_mw[l] * link.num_pilots) *
                                 detail::precoder_scale(up, l, t, kind, cpu);
                z += c * detail::inner(ch.at(k, l), up.at(l, t));
                const double cte = std::sqrt(topo.ap_dl_power_mw[l] * link.ul_power_mw) * link.num_pilots *
                                   topo.beta(ue, l);
                const double denom = kind == Precoding::standard
                                         ? true_alpha_lt(topo, colliding_global, l, link) + link.noise_mw
                                         : cpu[t];
                obs.z_tilde[k] += cte / std::sqrt(denom);
            }
        }
        obs.z[k] = z + complex_normal(rng, link.noise_mw);
    }
    return obs;
}

}  // namespace cfra
