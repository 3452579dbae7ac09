#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfra/campaign.hpp"
#include "cfra/config_io.hpp"
#include "cfra/contention.hpp"
#include "cfra/scenario.hpp"

namespace cfra {

/// (sum over P_t - sum over C_k) / sum over P_t.
inline double nmd(double beta_sum_serving, double beta_sum_nearby) {
    if (!(beta_sum_serving > 0.0)) throw std::domain_error("nmd: serving sum must be > 0");
    return (beta_sum_serving - beta_sum_nearby) / beta_sum_serving;
}

struct EstimatorStats {
    double neb = 0.0;
    double nmse = 0.0;
};

inline EstimatorStats estimator_stats(std::span<const double> estimates, double alpha_true) {
    if (!(alpha_true > 0.0)) throw std::domain_error("estimator_stats: alpha must be > 0");
    if (estimates.empty()) return {};
    double mean = 0.0, sq = 0.0;
    for (double a : estimates) {
        mean += a;
        sq += (a - alpha_true) * (a - alpha_true);
    }
    const double n = static_cast<double>(estimates.size());
    return {(mean / n - alpha_true) / alpha_true, sq / n / (alpha_true * alpha_true)};
}

/// Linearly interpolated sample quantile (the usual "type 7").
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::domain_error("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }
inline double iqr(const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); }

/// Per-block averages of the radiated resources, taken over RA blocks after
/// warm-up.
struct ResourceUsage {
    double pilots_per_operative_ap = 0.0;
    double operative_aps = 0.0;
    double active_pilots = 0.0;
    /// Mean per-AP DL power of an active pilot, (1/L) sum_{l in P_t} q.
    double dl_power_per_pilot = 0.0;
};

inline ResourceUsage resource_usage(std::span<const CampaignResult> results) {
    double blocks = 0, pilots = 0, aps = 0, pairs = 0, power = 0;
    for (const auto& r : results) {
        blocks += r.ra_blocks;
        pilots += r.active_pilots;
        aps += r.operative_aps;
        pairs += r.serving_pairs;
        power += r.dl_power_sum;
    }
    ResourceUsage u;
    if (blocks > 0) {
        u.operative_aps = aps / blocks;
        u.active_pilots = pilots / blocks;
    }
    if (aps > 0) u.pilots_per_operative_ap = pairs / aps;
    if (pilots > 0) u.dl_power_per_pilot = power / pilots;
    return u;
}

/// Total consumed power in mW x symbols for one access.
inline double tcp(Protocol protocol, double anaa, const ScenarioConfig& config, const ResourceUsage& usage,
                  double q_eff) {
    const double tau = config.num_pilots;
    switch (protocol) {
        case Protocol::cf_sucre: return anaa * (tau + 1.0) * q_eff * usage.pilots_per_operative_ap * usage.operative_aps;
        case Protocol::ce_sucre: return anaa * (tau + 1.0) * config.bs_dl_power_mw * usage.active_pilots;
        case Protocol::bcf: return anaa * config.dl_power_per_ap_mw * usage.active_pilots * config.num_aps;
    }
    throw std::logic_error("unhandled protocol");
}

/// q_eff for cf-sucre: q_l under standard precoding, the measured normalized
/// per-AP power for est3.
inline double effective_dl_power(const EstimatorSpec& spec, const ScenarioConfig& config, const ResourceUsage& usage) {
    return spec.kind == EstimatorKind::est3 ? usage.dl_power_per_pilot : config.dl_power_per_ap_mw;
}

inline double anaa(std::span<const CampaignResult> results) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
        for (int a : r.attempts) s += a;
        n += r.attempts.size();
    }
    return n == 0 ? std::nan("") : s / static_cast<double>(n);
}

/// One CSV row. Campaign rows leave the estimator statistics empty and
/// estimator-bench rows leave ANAA/TCP empty.
struct MetricsReport {
    std::string sweep_axis;
    double sweep_value = 0.0;
    std::string protocol;
    std::string estimator;
    std::string nearby_method;
    std::optional<double> anaa;
    std::optional<double> tcp_mw_symbols;
    std::optional<double> nmse_median;
    std::optional<double> nmse_iqr;
    std::optional<double> neb_median;
    std::optional<double> neb_iqr;
    int trials = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline const char* csv_header() {
    return "sweep_axis,sweep_value,protocol,estimator,nearby_method,anaa,tcp_mw_symbols,nmse_median,nmse_iqr,"
           "neb_median,neb_iqr,trials,seed";
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::optional<double> parse_optional(const std::string& s, const std::string& ctx) {
    if (s.empty()) return std::nullopt;
    return parse_number<double>(s, ctx);
}

inline void check_field(const std::string& s) {
    if (s.find_first_of(",\n\"") != std::string::npos) throw std::invalid_argument("csv field contains a separator: " + s);
}

}  // namespace detail

inline std::string to_csv_row(const MetricsReport& r) {
    for (const auto* s : {&r.sweep_axis, &r.protocol, &r.estimator, &r.nearby_method}) detail::check_field(*s);
    std::string out = r.sweep_axis + "," + detail::format_double(r.sweep_value) + "," + r.protocol + "," + r.estimator +
                      "," + r.nearby_method;
    for (const auto* v : {&r.anaa, &r.tcp_mw_symbols, &r.nmse_median, &r.nmse_iqr, &r.neb_median, &r.neb_iqr})
        out += "," + detail::format_optional(*v);
    out += "," + std::to_string(r.trials) + "," + std::to_string(r.seed);
    return out;
}

inline void write_csv(std::ostream& os, std::span<const MetricsReport> reports) {
    os << csv_header() << '\n';
    for (const auto& r : reports) os << to_csv_row(r) << '\n';
}

inline std::string serialize_csv(std::span<const MetricsReport> reports) {
    std::ostringstream os;
    write_csv(os, reports);
    return os.str();
}

inline std::vector<MetricsReport> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header()) throw std::invalid_argument("csv: unexpected header");
    std::vector<MetricsReport> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        const std::string ctx = "csv line " + std::to_string(line_no);
        if (f.size() != 13) throw std::invalid_argument(ctx + ": expected 13 fields");
        MetricsReport r;
        r.sweep_axis = f[0];
        r.sweep_value = detail::parse_number<double>(f[1], ctx);
        r.protocol = f[2];
        r.estimator = f[3];
        r.nearby_method = f[4];
        r.anaa = detail::parse_optional(f[5], ctx);
        r.tcp_mw_symbols = detail::parse_optional(f[6], ctx);
        r.nmse_median = detail::parse_optional(f[7], ctx);
        r.nmse_iqr = detail::parse_optional(f[8], ctx);
        r.neb_median = detail::parse_optional(f[9], ctx);
        r.neb_iqr = detail::parse_optional(f[10], ctx);
        r.trials = detail::parse_number<int>(f[11], ctx);
        r.seed = detail::parse_number<std::uint64_t>(f[12], ctx);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<MetricsReport> parse_csv(const std::string& text) {
    std::istringstream is(text);
    return parse_csv(is);
}

}  // namespace cfra
