#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfra/rng.hpp"
#include "cfra/table.hpp"

namespace cfra {

/// Raised when a configuration or experiment descriptor is invalid.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline double db_to_linear(double value_db) { return std::pow(10.0, value_db / 10.0); }
inline double linear_to_db(double value) { return 10.0 * std::log10(value); }

/// Physical and protocol constants plus experiment controls. Powers that are
/// given in dB/dBm here are converted once, through the accessors below; every
/// other computation works in linear mW and meters.
struct ScenarioConfig {
    double square_length_m = 400.0;
    double power_constant_db = -30.5;
    double pathloss_exponent = 3.67;
    double noise_power_dbm = -94.0;
    int num_pilots = 5;
    int num_aps = 64;
    int antennas_per_ap = 8;
    double dl_power_per_ap_mw = 200.0 / 64.0;
    double ul_power_mw = 100.0;
    double compensation_factor = 8.0;
    int num_inactive_ues = 10000;
    double access_probability = 0.001;
    int bs_antennas = 64;
    double bs_dl_power_mw = 200.0;
    int max_attempts = 10;
    double reattempt_probability = 0.5;
    double iota = 1.0;
    int l_max = 64;
    std::uint64_t rng_seed = 0;

    // Experiment controls.
    int trials = 100;
    int warmup_blocks = 20;
    int measured_blocks = 10;

    double power_constant() const { return db_to_linear(power_constant_db); }
    double noise_power_mw() const { return db_to_linear(noise_power_dbm); }

    void validate() const {
        auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
        if (!(square_length_m > 0.0)) fail("square_length_m must be > 0");
        if (!(pathloss_exponent > 0.0)) fail("pathloss_exponent must be > 0");
        if (!std::isfinite(power_constant_db)) fail("power_constant_db must be finite");
        if (!std::isfinite(noise_power_dbm)) fail("noise_power_dbm must be finite");
        if (num_pilots < 1) fail("num_pilots must be >= 1");
        if (num_aps < 1) fail("num_aps must be >= 1");
        if (antennas_per_ap < 1) fail("antennas_per_ap must be >= 1");
        if (bs_antennas < 1) fail("bs_antennas must be >= 1");
        if (!(dl_power_per_ap_mw > 0.0)) fail("dl_power_per_ap_mw must be > 0");
        if (!(ul_power_mw > 0.0)) fail("ul_power_mw must be > 0");
        if (!(bs_dl_power_mw > 0.0)) fail("bs_dl_power_mw must be > 0");
        if (!(compensation_factor > 0.0)) fail("compensation_factor must be > 0");
        if (num_inactive_ues < 0) fail("num_inactive_ues must be >= 0");
        if (!(access_probability >= 0.0 && access_probability <= 1.0)) fail("access_probability must be in [0,1]");
        if (!(reattempt_probability >= 0.0 && reattempt_probability <= 1.0))
            fail("reattempt_probability must be in [0,1]");
        if (max_attempts < 1) fail("max_attempts must be >= 1");
        if (!(iota >= 1.0)) fail("iota must be >= 1");
        if (l_max < 1 || l_max > num_aps) fail("l_max must be in [1, num_aps]");
        if (trials < 0) fail("trials must be >= 0");
        if (warmup_blocks < 0) fail("warmup_blocks must be >= 0");
        if (measured_blocks < 0) fail("measured_blocks must be >= 0");
        if (!(power_constant() > 0.0) || !(noise_power_mw() > 0.0)) fail("linear powers must be > 0");
    }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double average_channel_gain(double power_constant, double pathloss_exponent, double distance_m) {
    return power_constant * std::pow(distance_m, -pathloss_exponent);
}

/// AP and UE placement with the derived distance and average channel gain
/// tables. Both tables are indexed [ue][ap].
struct Topology {
    std::vector<Point> ap_positions;
    std::vector<Point> ue_positions;
    std::vector<double> ap_dl_power_mw;
    int antennas = 1;
    Table<double> distances;
    Table<double> beta;

    std::size_t num_aps() const noexcept { return ap_positions.size(); }
    std::size_t num_ues() const noexcept { return ue_positions.size(); }
};

inline void fill_gains(Topology& topo, const ScenarioConfig& config) {
    const double omega = config.power_constant();
    topo.distances = Table<double>(topo.num_ues(), topo.num_aps());
    topo.beta = Table<double>(topo.num_ues(), topo.num_aps());
    for (std::size_t k = 0; k < topo.num_ues(); ++k) {
        for (std::size_t l = 0; l < topo.num_aps(); ++l) {
            const double d = distance(topo.ue_positions[k], topo.ap_positions[l]);
            topo.distances(k, l) = d;
            topo.beta(k, l) = average_channel_gain(omega, config.pathloss_exponent, d);
        }
    }
}

/// Centered sqrt(L) x sqrt(L) grid with pitch l/sqrt(L).
inline std::vector<Point> grid_positions(int num_aps, double square_length) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(num_aps))));
    if (side * side != num_aps)
        throw ConfigError("num_aps must be a perfect square for grid placement, got " + std::to_string(num_aps));
    const double pitch = square_length / side;
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(num_aps));
    for (int row = 0; row < side; ++row)
        for (int col = 0; col < side; ++col) out.push_back({pitch / 2.0 + col * pitch, pitch / 2.0 + row * pitch});
    return out;
}

inline std::vector<Point> uniform_positions(std::size_t count, double square_length, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, square_length);
    std::vector<Point> out(count);
    for (auto& p : out) {
        p.x = u(rng);
        p.y = u(rng);
    }
    return out;
}

/// Cell-free layout: APs on the grid, the given UE positions.
inline Topology build_topology(const ScenarioConfig& config, std::vector<Point> ue_positions) {
    Topology topo;
    topo.ap_positions = grid_positions(config.num_aps, config.square_length_m);
    topo.ue_positions = std::move(ue_positions);
    topo.ap_dl_power_mw.assign(topo.ap_positions.size(), config.dl_power_per_ap_mw);
    topo.antennas = config.antennas_per_ap;
    fill_gains(topo, config);
    return topo;
}

inline Topology build_topology(const ScenarioConfig& config, Rng& rng) {
    if (config.num_inactive_ues < 1) throw ConfigError("num_inactive_ues must be >= 1 to build a topology");
    // Validate the AP layout before spending draws on UEs.
    (void)grid_positions(config.num_aps, config.square_length_m);
    auto ues = uniform_positions(static_cast<std::size_t>(config.num_inactive_ues), config.square_length_m, rng);
    return build_topology(config, std::move(ues));
}

/// Cellular baseline: a single M-antenna BS at the square center.
inline Topology build_cellular_topology(const ScenarioConfig& config, std::vector<Point> ue_positions) {
    Topology topo;
    topo.ap_positions = {{config.square_length_m / 2.0, config.square_length_m / 2.0}};
    topo.ue_positions = std::move(ue_positions);
    topo.ap_dl_power_mw = {config.bs_dl_power_mw};
    topo.antennas = config.bs_antennas;
    fill_gains(topo, config);
    return topo;
}

/// Radius inside which an AP's DL beacon exceeds iota * sigma^2.
inline double limit_distance(double power_constant, double dl_power_mw, double noise_mw, double pathloss_exponent,
                             double iota = 1.0) {
    return std::pow((1.0 / iota) * power_constant * dl_power_mw / noise_mw, 1.0 / pathloss_exponent);
}

inline double limit_distance(const ScenarioConfig& config) {
    return limit_distance(config.power_constant(), config.dl_power_per_ap_mw, config.noise_power_mw(),
                          config.pathloss_exponent, config.iota);
}

/// APs a UE can hear, strongest first.
struct NearbySet {
    std::size_t ue_index = 0;
    std::vector<int> ap_indices;
    bool is_natural = false;

    std::size_t size() const noexcept { return ap_indices.size(); }
    bool contains(int ap) const {
        return std::find(ap_indices.begin(), ap_indices.end(), ap) != ap_indices.end();
    }
};

/// AP indices of one UE sorted by descending beta; ties go to the lower index.
inline std::vector<int> aps_by_gain(const Topology& topo, std::size_t ue) {
    std::vector<int> order(topo.num_aps());
    std::iota(order.begin(), order.end(), 0);
    const auto row = topo.beta.row(ue);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row[a] > row[b]; });
    return order;
}

/// {l : q_l beta_kl > iota sigma^2}; never empty, the strongest AP is kept as
/// the fallback.
inline NearbySet nearby_set(const Topology& topo, std::size_t ue, double iota, double noise_mw) {
    NearbySet out;
    out.ue_index = ue;
    out.is_natural = (iota == 1.0);
    const auto order = aps_by_gain(topo, ue);
    for (int l : order) {
        if (topo.ap_dl_power_mw[l] * topo.beta(ue, l) > iota * noise_mw) out.ap_indices.push_back(l);
    }
    if (out.ap_indices.empty() && !order.empty()) out.ap_indices.push_back(order.front());
    return out;
}

/// Keeps the `size` strongest members (at least one).
inline NearbySet truncated(const NearbySet& set, std::size_t size) {
    NearbySet out = set;
    out.is_natural = set.is_natural && size >= set.size();
    out.ap_indices.resize(std::clamp<std::size_t>(size, 1, std::max<std::size_t>(set.size(), 1)));
    return out;
}

}  // namespace cfra
