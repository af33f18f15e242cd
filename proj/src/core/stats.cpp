#include "core/stats.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace synteval {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.3989422804014326779;
}

namespace {

// 64-point Gauss-Legendre nodes/weights on [0,1], computed once by Newton
// iteration on the Legendre recurrence.
struct GaussLegendre {
    static constexpr int kPoints = 64;
    double node[kPoints];
    double weight[kPoints];

    GaussLegendre() {
        const int n = kPoints;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (x * p0 - p1) / (x * x - 1.0);
                const double dx = p0 / pp;
                x -= dx;
                if (std::fabs(dx) < 1e-15) break;
            }
            node[i] = 0.5 * (1.0 - x);
            node[n - 1 - i] = 0.5 * (1.0 + x);
            weight[i] = 1.0 / ((1.0 - x * x) * pp * pp);
            weight[n - 1 - i] = weight[i];
        }
    }
};

const GaussLegendre& gauss_legendre() {
    static const GaussLegendre gl;
    return gl;
}

}  // namespace

double bivariate_normal_cdf(double h, double k, double rho) {
    if (std::isinf(h) && h < 0) return 0.0;
    if (std::isinf(k) && k < 0) return 0.0;
    if (std::isinf(h)) return normal_cdf(k);
    if (std::isinf(k)) return normal_cdf(h);
    rho = std::clamp(rho, -1.0 + 1e-14, 1.0 - 1e-14);

    // Drezner-Wesolowsky: Phi2 = Phi(h)Phi(k) + (1/2pi) Int_0^asin(rho)
    //   exp(-(h^2 + k^2 - 2 h k sin t) / (2 cos^2 t)) dt
    const double upper = std::asin(rho);
    const auto& gl = gauss_legendre();
    double integral = 0.0;
    for (int i = 0; i < GaussLegendre::kPoints; ++i) {
        const double t = upper * gl.node[i];
        const double sin_t = std::sin(t);
        const double cos2_t = 1.0 - sin_t * sin_t;
        integral += gl.weight[i] *
                    std::exp(-(h * h + k * k - 2.0 * h * k * sin_t) / (2.0 * cos2_t));
    }
    integral *= upper / (2.0 * M_PI);
    return std::clamp(normal_cdf(h) * normal_cdf(k) + integral, 0.0, 1.0);
}

namespace {

// Acklam's rational approximation (~1e-9 relative error), polished below.
double normal_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw_numeric("QuantileDomain", "normal_quantile requires p in (0,1)");
    double x = normal_quantile_approx(p);
    // One Halley step against the exact CDF brings the result to ~1e-15.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw_numeric("LogitDomain", "logit requires p in (0,1)");
    return std::log(p / (1.0 - p));
}

double quantile_type7_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw_data("Empty", "quantile of empty sample");
    if (q < 0.0 || q > 1.0) throw_config("BadQuantile", "q must be in [0,1]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile_type7(std::span<const double> values, double q) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return quantile_type7_sorted(v, q);
}

double mean(std::span<const double> v) {
    if (v.empty()) throw_data("Empty", "mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double sample_sd(std::span<const double> v) { return std::sqrt(sample_variance(v)); }

double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw_data("LengthMismatch", "pearson needs equal lengths >= 2");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw_data("Empty", "KS of empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_pvalue(double d, std::size_t n_a, std::size_t n_b) {
    const double ne = static_cast<double>(n_a) * static_cast<double>(n_b) /
                      static_cast<double>(n_a + n_b);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                            std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

}  // namespace synteval
