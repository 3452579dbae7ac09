#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cfra/scenario.hpp"

namespace cfra {

namespace detail {

/// Antiderivative helper of the square's distance CDF; `d` is the distance
/// being evaluated and `z` the integration variable.
inline double square_distance_g(double z, double d, double side) {
    const double r = std::sqrt(std::max(d * d - z * z, 0.0));
    const double at = r > 0.0 ? std::atan(z / r) : std::numbers::pi / 2.0;
    return side / 3.0 * r * (z * (3.0 * side - 2.0 * z) + 2.0 * d * d) + side * side * d * d * at -
           side * d * d * z + side * z * z * z / 3.0 + d * d * z * z / 2.0 - z * z * z * z / 4.0;
}

inline void check_range(double d, double lo, double hi, const char* what) {
    const double slack = 1e-12 * std::max(1.0, hi);
    if (!(d >= lo - slack && d <= hi + slack)) throw std::domain_error(std::string(what) + ": distance out of range");
}

}  // namespace detail

/// P{|X - Y| <= d} for X, Y independent and uniform on a square of side `side`.
inline double distance_cdf(double d, double side) {
    detail::check_range(d, 0.0, std::sqrt(2.0) * side, "distance_cdf");
    d = std::clamp(d, 0.0, std::sqrt(2.0) * side);
    const double s4 = std::pow(side, 4);
    double f = 0.0;
    if (d < side) {
        f = 2.0 / s4 * (detail::square_distance_g(d, d, side) - detail::square_distance_g(0.0, d, side));
    } else {
        const double w = std::sqrt(std::max(d * d - side * side, 0.0));
        const double full = (2.0 * side * w - w * w) / (side * side);
        f = full + 2.0 / s4 * (detail::square_distance_g(side, d, side) - detail::square_distance_g(w, d, side));
    }
    return std::clamp(f, 0.0, 1.0);
}

/// Density of the same distance, valid for 0 <= d <= side.
inline double distance_pdf(double d, double side) {
    detail::check_range(d, 0.0, side, "distance_pdf");
    d = std::clamp(d, 0.0, side);
    const double pi = std::numbers::pi;
    return 2.0 / std::pow(side, 4) * (pi * side * side * d - 4.0 * side * d * d + d * d * d);
}

/// Area shared by two disks of radius r whose centers are d apart.
inline double overlap_area(double d, double r) {
    if (d >= 2.0 * r) return 0.0;
    const double h1 = 2.0 * r * r * std::acos(d / (2.0 * r));
    const double h2 = d / 2.0 * std::sqrt(4.0 * r * r - d * d);
    return h1 - h2;
}

/// Adaptive Gauss-Kronrod on [a, b]; throws if the error estimate stays
/// above `abs_tol`.
template <typename F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10) {
    if (b <= a) return 0.0;
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 25, 1e-14, &err);
    if (err > abs_tol && err > 1e-12 * std::abs(v)) throw std::runtime_error("integrate: tolerance not reached");
    return v;
}

/// E{overlap area} of two influence disks, the overlap being zero beyond 2 r.
inline double expected_overlap_area(double d_lim, double side) {
    if (!(d_lim >= 0.0)) throw std::domain_error("expected_overlap_area: d_lim must be >= 0");
    if (2.0 * d_lim > side) throw std::domain_error("expected_overlap_area: requires 2 d_lim <= side");
    if (d_lim == 0.0) return 0.0;
    return integrate([&](double d) { return overlap_area(d, d_lim) * distance_pdf(d, side); }, 0.0, 2.0 * d_lim);
}

struct SeparabilityPrediction {
    double d_lim = 0.0;
    double area_influence = 0.0;
    double expected_overlap = 0.0;
    double neighbor_prob = 0.0;
    double avg_collision_size = 0.0;
    double dominant_area = 0.0;
    double psi = 1.0;
    double exclusive_aps = 0.0;
};

inline SeparabilityPrediction separability_prediction(const ScenarioConfig& config) {
    config.validate();
    SeparabilityPrediction p;
    const double side = config.square_length_m;
    p.d_lim = limit_distance(config);
    p.area_influence = std::numbers::pi * p.d_lim * p.d_lim;
    p.expected_overlap = expected_overlap_area(p.d_lim, side);
    p.neighbor_prob = distance_cdf(2.0 * p.d_lim, side);
    p.avg_collision_size = config.num_inactive_ues * config.access_probability / config.num_pilots;
    const double excess = std::max(p.avg_collision_size - 1.0, 0.0);
    p.dominant_area = std::max(p.area_influence - p.neighbor_prob * excess * p.expected_overlap, 0.0);
    p.psi = std::clamp(p.dominant_area / p.area_influence, 0.0, 1.0);
    p.exclusive_aps = config.num_aps / (side * side) * p.dominant_area;
    return p;
}

}  // namespace cfra
