#include "core/kde.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/stats.hpp"

namespace synteval {

double Kde1d::silverman_bandwidth(std::span<const double> values) {
    const double sd = sample_sd(values);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_type7_sorted(sorted, 0.75) - quantile_type7_sorted(sorted, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    if (!(spread > 0.0)) spread = std::max(std::fabs(sorted.back()), 1.0) * 1e-3;
    return 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
}

Kde1d Kde1d::fit(std::span<const double> values, double bandwidth, std::size_t max_fit_points,
                 std::size_t grid_points) {
    if (values.empty()) throw_data("Empty", "KDE on empty sample");
    Kde1d kde;
    kde.bandwidth_ = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(values);

    // deterministic stride subsample keeps fitting O(max_fit_points * grid)
    std::vector<double> pts;
    if (values.size() <= max_fit_points) {
        pts.assign(values.begin(), values.end());
    } else {
        pts.reserve(max_fit_points);
        const double stride = static_cast<double>(values.size()) / static_cast<double>(max_fit_points);
        for (std::size_t i = 0; i < max_fit_points; ++i)
            pts.push_back(values[static_cast<std::size_t>(static_cast<double>(i) * stride)]);
    }

    // grid range spans the full sample even when the kernel points are a
    // subsample, so every source row keeps a nonzero density
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double pad = 5.0 * kde.bandwidth_;
    kde.lo_ = *mn - pad;
    kde.hi_ = *mx + pad;
    if (kde.hi_ <= kde.lo_) kde.hi_ = kde.lo_ + 1.0;
    kde.step_ = (kde.hi_ - kde.lo_) / static_cast<double>(grid_points - 1);

    kde.grid_.assign(grid_points, 0.0);
    const double inv_h = 1.0 / kde.bandwidth_;
    const double norm = inv_h / (std::sqrt(2.0 * M_PI) * static_cast<double>(pts.size()));
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double x = kde.lo_ + static_cast<double>(g) * kde.step_;
        double s = 0.0;
        for (double p : pts) {
            const double t = (x - p) * inv_h;
            if (std::fabs(t) < 8.0) s += std::exp(-0.5 * t * t);
        }
        kde.grid_[g] = s * norm;
    }
    return kde;
}

double Kde1d::pdf(double x) const {
    if (x < lo_ || x > hi_) return 0.0;
    const double pos = (x - lo_) / step_;
    const std::size_t k = std::min(static_cast<std::size_t>(pos), grid_.size() - 2);
    const double frac = pos - static_cast<double>(k);
    return grid_[k] + frac * (grid_[k + 1] - grid_[k]);
}

}  // namespace synteval
