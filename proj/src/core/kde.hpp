#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace synteval {

/// 1-D Gaussian kernel density estimate, evaluated through a fine grid with
/// linear interpolation so density lookups stay O(1) during rejection
/// sampling. Bandwidth "auto" is Silverman's rule.
class Kde1d {
public:
    static Kde1d fit(std::span<const double> values, double bandwidth /* <=0 => Silverman */,
                     std::size_t max_fit_points = 4096, std::size_t grid_points = 2048);

    /// Density at x; 0 beyond the padded grid range.
    double pdf(double x) const;

    double bandwidth() const { return bandwidth_; }
    double grid_low() const { return lo_; }
    double grid_high() const { return hi_; }

    static double silverman_bandwidth(std::span<const double> values);

private:
    double lo_ = 0.0, hi_ = 1.0, step_ = 1.0;
    double bandwidth_ = 1.0;
    std::vector<double> grid_;
};

}  // namespace synteval
