#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cfra/channel.hpp"
#include "cfra/scenario.hpp"

namespace cfra {

enum class EstimatorKind { est1, est2, est3, cellular };
enum class NearbyMethod { fixed, greedy };
enum class Verdict { repeat, inactive };

inline std::string_view to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::est1: return "est1";
        case EstimatorKind::est2: return "est2";
        case EstimatorKind::est3: return "est3";
        case EstimatorKind::cellular: return "cellular";
    }
    return "?";
}

inline std::string_view to_string(NearbyMethod m) { return m == NearbyMethod::fixed ? "fixed" : "greedy"; }

inline EstimatorKind parse_estimator(std::string_view s) {
    if (s == "est1") return EstimatorKind::est1;
    if (s == "est2") return EstimatorKind::est2;
    if (s == "est3") return EstimatorKind::est3;
    if (s == "cellular") return EstimatorKind::cellular;
    throw ConfigError("unknown estimator '" + std::string(s) + "' (expected est1|est2|est3|cellular)");
}

inline NearbyMethod parse_nearby(std::string_view s) {
    if (s == "fixed") return NearbyMethod::fixed;
    if (s == "greedy") return NearbyMethod::greedy;
    throw ConfigError("unknown nearby method '" + std::string(s) + "' (expected fixed|greedy)");
}

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::est1;
    NearbyMethod nearby = NearbyMethod::fixed;
    double delta = 1.0;

    void validate() const {
        if (kind == EstimatorKind::est3 && !(delta >= 1.0)) throw ConfigError("est3 requires delta >= 1");
    }
};

/// Constants the UE needs besides its own gains.
struct EstimatorContext {
    int antennas = 1;
    int num_pilots = 1;
    double ul_power_mw = 1.0;
    double noise_mw = 1.0;
};

inline EstimatorContext estimator_context(const LinkBudget& link, int antennas) {
    return {antennas, link.num_pilots, link.ul_power_mw, link.noise_mw};
}

/// What UE k knows when it decides: C_k with gains and DL powers, and z_k.
struct UEKnowledge {
    NearbySet nearby;
    std::vector<double> beta_nearby;
    std::vector<double> dl_power_nearby;
    double gamma = 0.0;
    cplx z{};
};

inline double own_signal_power(std::span<const double> beta, const EstimatorContext& ctx) {
    double s = 0.0;
    for (double b : beta) s += b;
    return ctx.ul_power_mw * ctx.num_pilots * s;
}

inline UEKnowledge make_knowledge(const Topology& topo, const NearbySet& nearby, cplx z, const EstimatorContext& ctx) {
    UEKnowledge kn;
    kn.nearby = nearby;
    kn.z = z;
    for (int l : nearby.ap_indices) {
        kn.beta_nearby.push_back(topo.beta(nearby.ue_index, static_cast<std::size_t>(l)));
        kn.dl_power_nearby.push_back(topo.ap_dl_power_mw[static_cast<std::size_t>(l)]);
    }
    kn.gamma = own_signal_power(kn.beta_nearby, ctx);
    return kn;
}

/// Sums over the `size` strongest members of C_k; the greedy sweep grows
/// them incrementally.
struct NearbySums {
    std::size_t size = 0;
    double cte = 0.0;
    double cte_23 = 0.0;
    double gamma = 0.0;
};

inline double cte(double dl_power, double beta, const EstimatorContext& ctx) {
    return std::sqrt(dl_power * ctx.ul_power_mw) * ctx.num_pilots * beta;
}

inline std::vector<NearbySums> nearby_prefix_sums(const UEKnowledge& kn, const EstimatorContext& ctx) {
    std::vector<NearbySums> out;
    NearbySums acc;
    for (std::size_t i = 0; i < kn.beta_nearby.size(); ++i) {
        const double c = cte(kn.dl_power_nearby[i], kn.beta_nearby[i], ctx);
        acc.size = i + 1;
        acc.cte += c;
        acc.cte_23 += std::cbrt(c * c);
        acc.gamma += ctx.ul_power_mw * ctx.num_pilots * kn.beta_nearby[i];
        out.push_back(acc);
    }
    return out;
}

inline double observation_floor(const EstimatorContext& ctx) { return 1e-12 * std::sqrt(double(ctx.antennas)); }

inline double clamped_real(cplx z, const EstimatorContext& ctx) { return std::max(z.real(), observation_floor(ctx)); }

inline double estimate_from_sums(EstimatorKind kind, const NearbySums& s, cplx z, const EstimatorContext& ctx,
                                 double delta) {
    const double n = ctx.antennas;
    switch (kind) {
        case EstimatorKind::est1: {
            const double r = s.cte / clamped_real(z, ctx);
            return std::max(n * r * r - ctx.noise_mw, s.gamma);
        }
        case EstimatorKind::est2: {
            const double r = s.cte_23 / clamped_real(z, ctx);
            return std::max(n * r * r * s.cte_23 - static_cast<double>(s.size) * ctx.noise_mw, s.gamma);
        }
        case EstimatorKind::est3: {
            const double pre = std::max(delta * (z.real() - std::sqrt(ctx.noise_mw)) / std::sqrt(n),
                                        observation_floor(ctx));
            const double r = s.cte / pre;
            return std::max(r * r, s.gamma);
        }
        case EstimatorKind::cellular: {
            // Single BS: the C_k sum has one term and the floor is p tau_p beta.
            const double r = s.cte / clamped_real(z, ctx);
            return std::max(n * r * r - ctx.noise_mw, s.gamma);
        }
    }
    throw std::logic_error("unhandled estimator kind");
}

inline NearbySums full_sums(const UEKnowledge& kn, const EstimatorContext& ctx) {
    const auto p = nearby_prefix_sums(kn, ctx);
    return p.empty() ? NearbySums{} : p.back();
}

inline double estimate_1(const UEKnowledge& kn, const EstimatorContext& ctx) {
    return estimate_from_sums(EstimatorKind::est1, full_sums(kn, ctx), kn.z, ctx, 1.0);
}

inline double estimate_2(const UEKnowledge& kn, const EstimatorContext& ctx) {
    return estimate_from_sums(EstimatorKind::est2, full_sums(kn, ctx), kn.z, ctx, 1.0);
}

inline double estimate_3(const UEKnowledge& kn, const EstimatorContext& ctx, double delta) {
    return estimate_from_sums(EstimatorKind::est3, full_sums(kn, ctx), kn.z, ctx, delta);
}

/// max(M q p tau_p^2 beta^2 / Re(z)^2 - sigma^2, p tau_p beta).
inline double estimate_cellular(double beta, double bs_power_mw, cplx z, const EstimatorContext& ctx) {
    const double b = ctx.ul_power_mw * ctx.num_pilots * beta;
    const double re = clamped_real(z, ctx);
    const double m = ctx.antennas;
    const double first = m * bs_power_mw * ctx.ul_power_mw * ctx.num_pilots * ctx.num_pilots * beta * beta / (re * re);
    return std::max(first - ctx.noise_mw, b);
}

inline double estimate(const EstimatorSpec& spec, const UEKnowledge& kn, const EstimatorContext& ctx) {
    return estimate_from_sums(spec.kind, full_sums(kn, ctx), kn.z, ctx, spec.delta);
}

/// Repeat iff gamma > alpha_hat / 2; equality is Inactive.
inline Verdict sucre_decision(double gamma, double alpha_hat) {
    return gamma > alpha_hat / 2.0 ? Verdict::repeat : Verdict::inactive;
}

struct Decision {
    std::size_t ue_index = 0;
    Verdict verdict = Verdict::inactive;
    double gamma = 0.0;
    double alpha_hat = 0.0;
};

/// Sweeps |C_k| from its full size down to 1 and repeats if any size says so.
/// The reported gamma/alpha_hat belong to the first size that repeats, or the
/// full set otherwise.
inline Decision greedy_flexible_decide(const UEKnowledge& kn, const EstimatorSpec& spec, const EstimatorContext& ctx) {
    const auto sums = nearby_prefix_sums(kn, ctx);
    Decision d;
    d.ue_index = kn.nearby.ue_index;
    for (auto it = sums.rbegin(); it != sums.rend(); ++it) {
        const double a = estimate_from_sums(spec.kind, *it, kn.z, ctx, spec.delta);
        if (it == sums.rbegin()) {
            d.gamma = it->gamma;
            d.alpha_hat = a;
        }
        if (sucre_decision(it->gamma, a) == Verdict::repeat) {
            d.verdict = Verdict::repeat;
            d.gamma = it->gamma;
            d.alpha_hat = a;
            return d;
        }
    }
    return d;
}

inline Decision decide(const UEKnowledge& kn, const EstimatorSpec& spec, const EstimatorContext& ctx) {
    if (spec.nearby == NearbyMethod::greedy) return greedy_flexible_decide(kn, spec, ctx);
    const auto s = full_sums(kn, ctx);
    const double a = estimate_from_sums(spec.kind, s, kn.z, ctx, spec.delta);
    return {kn.nearby.ue_index, sucre_decision(s.gamma, a), s.gamma, a};
}

/// Per-AP estimates of the minimum-l1 problem, given cte_l for l in P_t.
inline std::vector<double> min_norm_alpha_lt(std::span<const double> ctes, double re_z, const EstimatorContext& ctx) {
    double s23 = 0.0;
    for (double c : ctes) s23 += std::cbrt(c * c);
    const double k = ctx.antennas * (s23 / re_z) * (s23 / re_z);
    std::vector<double> out;
    out.reserve(ctes.size());
    for (double c : ctes) out.push_back(k * std::cbrt(c * c) - ctx.noise_mw);
    return out;
}

/// Relative residual of Re(z)/sqrt(N) - sum_l cte_l / sqrt(alpha_lt + sigma^2).
inline double hardening_constraint_residual(std::span<const double> ctes, std::span<const double> alpha_lt,
                                            double re_z, const EstimatorContext& ctx) {
    const double lhs = re_z / std::sqrt(double(ctx.antennas));
    double rhs = 0.0;
    for (std::size_t i = 0; i < ctes.size(); ++i) rhs += ctes[i] / std::sqrt(alpha_lt[i] + ctx.noise_mw);
    return std::abs(lhs - rhs) / std::abs(lhs);
}

}  // namespace cfra
