#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "stockwise/common.hpp"

namespace stockwise::ts {

struct Series {
    Date start_date{};
    std::vector<double> values;
    int period = 7;
};

struct Decomposition {
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> residual;

    std::size_t size() const { return trend.size(); }
};

struct StlConfig {
    int s_window = 13;
    std::optional<int> t_window;  // nullopt selects the canonical default
    int n_inner = 2;
    int n_outer = 1;
    int loess_degree = 1;

    void validate() const {
        if (s_window < 7 || s_window % 2 == 0)
            throw ParameterError(fmt::format("s_window must be odd and >= 7, got {}", s_window));
        if (t_window && (*t_window < 3 || *t_window % 2 == 0))
            throw ParameterError(fmt::format("t_window must be odd and >= 3, got {}", *t_window));
        if (n_inner < 1) throw ParameterError("n_inner must be positive");
        if (n_outer < 0) throw ParameterError("n_outer must be non-negative");
        if (loess_degree < 0 || loess_degree > 2) throw ParameterError("loess_degree must be 0, 1 or 2");
    }

    /// Smallest odd integer >= 1.5 * period / (1 - 1.5 / s_window) unless set explicitly.
    int resolved_t_window(int period) const {
        if (t_window) return *t_window;
        const double raw = 1.5 * period / (1.0 - 1.5 / s_window);
        int t = static_cast<int>(std::ceil(raw - 1e-12));
        if (t % 2 == 0) ++t;
        return t;
    }
};

/// How trend and seasonal components are projected past the end of a decomposition.
struct ExtendConfig {
    bool drift = true;
    int drift_window = 0;  // number of trailing trend values for the slope; 0 means one period
};

namespace detail {

/// Tricube-weighted local polynomial fit at x0 using points [lo, hi] and bandwidth h.
/// Returns nullopt when every weight vanishes.
inline std::optional<double> local_fit(std::span<const double> xs, std::span<const double> ys,
                                       std::span<const double> robustness, double x0, std::size_t lo,
                                       std::size_t hi, double h, int degree, double x_range) {
    const std::size_t m = hi - lo + 1;
    std::vector<double> w(m, 0.0);
    const double h9 = 0.999 * h;
    const double h1 = 0.001 * h;
    double wsum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double r = std::abs(xs[lo + j] - x0);
        if (r <= h9) {
            if (r <= h1) {
                w[j] = 1.0;
            } else {
                const double t = r / h;
                const double c = 1.0 - t * t * t;
                w[j] = c * c * c;
            }
            if (!robustness.empty()) w[j] *= robustness[lo + j];
            wsum += w[j];
        }
    }
    if (wsum <= 0.0) return std::nullopt;
    for (double& wj : w) wj /= wsum;

    double xbar = 0.0;
    double ybar = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        xbar += w[j] * xs[lo + j];
        ybar += w[j] * ys[lo + j];
    }
    if (degree == 0) return ybar;

    double sxx = 0.0;
    for (std::size_t j = 0; j < m; ++j) sxx += w[j] * (xs[lo + j] - xbar) * (xs[lo + j] - xbar);
    // Too little spread for a slope: fall back to the local mean.
    if (std::sqrt(sxx) <= 0.001 * x_range) return ybar;

    if (degree == 1) {
        double sxy = 0.0;
        for (std::size_t j = 0; j < m; ++j) sxy += w[j] * (xs[lo + j] - xbar) * ys[lo + j];
        return ybar + sxy / sxx * (x0 - xbar);
    }

    // Quadratic: normal equations in u = x - x0, intercept is the fitted value.
    double s[5] = {0, 0, 0, 0, 0};
    double t[3] = {0, 0, 0};
    for (std::size_t j = 0; j < m; ++j) {
        const double u = xs[lo + j] - x0;
        double p = w[j];
        for (int k = 0; k < 5; ++k) {
            if (k < 3) t[k] += p * ys[lo + j];
            s[k] += p;
            p *= u;
        }
    }
    const double a00 = s[0], a01 = s[1], a02 = s[2], a11 = s[2], a12 = s[3], a22 = s[4];
    const double c00 = a11 * a22 - a12 * a12;
    const double c01 = a02 * a12 - a01 * a22;
    const double c02 = a01 * a12 - a02 * a11;
    const double det = a00 * c00 + a01 * c01 + a02 * c02;
    const double scale = std::max({std::abs(a00 * c00), std::abs(a01 * c01), std::abs(a02 * c02)});
    if (!(std::abs(det) > 1e-12 * scale)) {
        // Rank-deficient neighbourhood for a quadratic: use the linear fit.
        double sxy = 0.0;
        for (std::size_t j = 0; j < m; ++j) sxy += w[j] * (xs[lo + j] - xbar) * ys[lo + j];
        return ybar + sxy / sxx * (x0 - xbar);
    }
    return (c00 * t[0] + c01 * t[1] + c02 * t[2]) / det;
}

/// Loess over equally spaced positions 1..n with a window of q points, evaluated at `at`.
/// Mirrors the smoother inside STL: the window is the q nearest positions, and when q
/// exceeds n the bandwidth grows by (q - n) / 2.
inline std::vector<double> window_loess(std::span<const double> ys, int q, int degree,
                                        std::span<const double> robustness, std::span<const double> at) {
    const std::size_t n = ys.size();
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i + 1);
    const double x_range = static_cast<double>(n) - 1.0;
    std::vector<double> out(at.size());
    const auto qn = static_cast<std::size_t>(q);
    for (std::size_t k = 0; k < at.size(); ++k) {
        const double x0 = at[k];
        std::size_t lo = 0;
        std::size_t hi = n - 1;
        if (qn < n) {
            const double left = std::round(x0) - static_cast<double>((qn - 1) / 2);
            const double max_left = static_cast<double>(n - qn + 1);
            const double start = std::clamp(left, 1.0, max_left);
            lo = static_cast<std::size_t>(start) - 1;
            hi = lo + qn - 1;
        }
        double h = std::max(x0 - xs[lo], xs[hi] - x0);
        if (qn > n) h += static_cast<double>((qn - n) / 2);
        const auto fit = local_fit(xs, ys, robustness, x0, lo, hi, h, degree, x_range);
        if (fit) {
            out[k] = *fit;
        } else {
            // Every weight vanished: keep the nearest observation.
            const auto nearest = static_cast<std::size_t>(std::clamp(std::round(x0), 1.0, static_cast<double>(n))) - 1;
            out[k] = ys[nearest];
        }
    }
    return out;
}

inline std::vector<double> moving_average(std::span<const double> xs, std::size_t len) {
    std::vector<double> out;
    if (xs.size() < len) return out;
    out.reserve(xs.size() - len + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += xs[i];
    out.push_back(acc / static_cast<double>(len));
    for (std::size_t i = len; i < xs.size(); ++i) {
        acc += xs[i] - xs[i - len];
        out.push_back(acc / static_cast<double>(len));
    }
    return out;
}

inline int next_odd(int x) { return x % 2 == 0 ? x + 1 : x; }

/// Bisquare robustness weights from residuals, with the 6 * median(|r|) scale.
inline std::vector<double> bisquare_weights(std::span<const double> residuals) {
    std::vector<double> abs_r(residuals.size());
    for (std::size_t i = 0; i < residuals.size(); ++i) abs_r[i] = std::abs(residuals[i]);
    std::vector<double> sorted = abs_r;
    const std::size_t n = sorted.size();
    const std::size_t mid = n / 2;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
    double median = sorted[mid];
    if (n % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    const double cmad = 6.0 * median;
    const double c9 = 0.999 * cmad;
    const double c1 = 0.001 * cmad;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = abs_r[i];
        if (r <= c1) {
            w[i] = 1.0;
        } else if (r <= c9) {
            const double u = r / cmad;
            w[i] = (1.0 - u * u) * (1.0 - u * u);
        } else {
            w[i] = 0.0;
        }
    }
    return w;
}

}  // namespace detail

/// Locally weighted polynomial regression (tricube kernel, nearest-neighbour bandwidth).
///
/// Each fitted value uses the floor(span * n) nearest points.
/// Optional robustness weights multiply the kernel weights.
inline std::vector<double> loess_smooth(std::span<const double> xs, std::span<const double> ys, double span,
                                        int degree, std::span<const double> robustness = {}) {
    const std::size_t n = xs.size();
    if (ys.size() != n)
        throw ParameterError(fmt::format("loess: xs has {} values but ys has {}", n, ys.size()));
    if (!robustness.empty() && robustness.size() != n)
        throw ParameterError(fmt::format("loess: {} robustness weights for {} points", robustness.size(), n));
    if (degree < 0 || degree > 2) throw ParameterError("loess: degree must be 0, 1 or 2");
    if (!(span > 0.0 && span <= 1.0)) throw ParameterError(fmt::format("loess: span {} outside (0, 1]", span));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw ParameterError("loess: non-finite input");
        if (i > 0 && !(xs[i] > xs[i - 1])) throw ParameterError("loess: xs must be strictly increasing");
    }
    const auto q = static_cast<std::size_t>(std::floor(span * static_cast<double>(n) + 1e-9));
    if (q < static_cast<std::size_t>(degree) + 1)
        throw ParameterError(fmt::format("loess: span {} keeps {} of {} points, degree {} needs {}", span, q, n,
                                         degree, degree + 1));

    const double x_range = xs[n - 1] - xs[0];
    std::vector<double> out(n);
    std::size_t lo = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (lo + q < n && xs[lo + q] - xs[i] < xs[i] - xs[lo]) ++lo;
        const std::size_t hi = lo + q - 1;
        const double h = std::max(xs[i] - xs[lo], xs[hi] - xs[i]);
        const auto fit = detail::local_fit(xs, ys, robustness, xs[i], lo, hi, h, degree, x_range);
        out[i] = fit ? *fit : ys[i];
    }
    return out;
}

/// Additive seasonal-trend decomposition by loess.
inline Decomposition stl_decompose(const Series& series, const StlConfig& config) {
    config.validate();
    const int np = series.period;
    if (np < 2) throw ParameterError(fmt::format("period must be >= 2, got {}", np));
    const std::vector<double>& y = series.values;
    const std::size_t n = y.size();
    if (n < 2 * static_cast<std::size_t>(np))
        throw ParameterError(fmt::format("series of length {} is shorter than two periods ({})", n, 2 * np));
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(y[i])) throw ParameterError(fmt::format("missing or non-finite value at index {}", i));

    const int t_window = config.resolved_t_window(np);
    const int l_window = detail::next_odd(np);
    const int degree = config.loess_degree;
    const auto unp = static_cast<std::size_t>(np);

    std::vector<double> trend(n, 0.0);
    std::vector<double> seasonal(n, 0.0);
    std::vector<double> robustness;  // empty means unit weights

    for (int outer = 0; outer <= config.n_outer; ++outer) {
        for (int inner = 0; inner < config.n_inner; ++inner) {
            // Cycle-subseries smoothing, each subseries extended one step at both ends.
            std::vector<double> cycle(n + 2 * unp, 0.0);
            for (std::size_t k = 0; k < unp; ++k) {
                std::vector<double> sub;
                std::vector<double> sub_rob;
                for (std::size_t i = k; i < n; i += unp) {
                    sub.push_back(y[i] - trend[i]);
                    if (!robustness.empty()) sub_rob.push_back(robustness[i]);
                }
                const std::size_t m = sub.size();
                std::vector<double> at(m + 2);
                for (std::size_t j = 0; j < m + 2; ++j) at[j] = static_cast<double>(j);
                const auto smoothed = detail::window_loess(sub, config.s_window, degree, sub_rob, at);
                for (std::size_t j = 0; j < m + 2; ++j) cycle[k + j * unp] = smoothed[j];
            }

            // Low-pass filter of the cycle-subseries: MA(np), MA(np), MA(3), loess.
            auto low = detail::moving_average(cycle, unp);
            low = detail::moving_average(low, unp);
            low = detail::moving_average(low, 3);
            std::vector<double> at(n);
            for (std::size_t i = 0; i < n; ++i) at[i] = static_cast<double>(i + 1);
            low = detail::window_loess(low, l_window, 1, {}, at);

            for (std::size_t i = 0; i < n; ++i) seasonal[i] = cycle[unp + i] - low[i];

            std::vector<double> deseasonalized(n);
            for (std::size_t i = 0; i < n; ++i) deseasonalized[i] = y[i] - seasonal[i];
            trend = detail::window_loess(deseasonalized, t_window, degree, robustness, at);
        }
        if (outer < config.n_outer) {
            std::vector<double> r(n);
            for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - trend[i] - seasonal[i];
            robustness = detail::bisquare_weights(r);
        }
    }

    Decomposition dec;
    dec.residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) dec.residual[i] = y[i] - trend[i] - seasonal[i];
    dec.trend = std::move(trend);
    dec.seasonal = std::move(seasonal);
    return dec;
}

/// Projects trend + seasonal past the end of `dec`. The seasonal component repeats its
/// final full cycle. The trend follows the least-squares line through its trailing
/// `drift_window` values (or holds its last value when drift is off).
inline std::vector<double> stl_extend(const Decomposition& dec, int horizon, int period,
                                      const ExtendConfig& config = {}) {
    if (horizon < 1) throw ParameterError(fmt::format("horizon must be >= 1, got {}", horizon));
    if (period < 1) throw ParameterError(fmt::format("period must be positive, got {}", period));
    const std::size_t n = dec.size();
    const auto unp = static_cast<std::size_t>(period);
    if (n < unp || dec.seasonal.size() != n)
        throw ParameterError(fmt::format("decomposition of length {} is shorter than one cycle ({})", n, period));

    // Trend level at the last observation and slope per step.
    double level = dec.trend[n - 1];
    double slope = 0.0;
    if (config.drift) {
        std::size_t w = config.drift_window > 0 ? static_cast<std::size_t>(config.drift_window) : unp;
        w = std::min(w, n);
        if (w >= 2) {
            const double xbar = (static_cast<double>(w) - 1.0) / 2.0;
            double ybar = 0.0;
            for (std::size_t j = 0; j < w; ++j) ybar += dec.trend[n - w + j];
            ybar /= static_cast<double>(w);
            double sxy = 0.0;
            double sxx = 0.0;
            for (std::size_t j = 0; j < w; ++j) {
                const double dx = static_cast<double>(j) - xbar;
                sxy += dx * (dec.trend[n - w + j] - ybar);
                sxx += dx * dx;
            }
            slope = sxy / sxx;
            level = ybar + slope * (static_cast<double>(w) - 1.0 - xbar);
        }
    }

    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (std::size_t h = 1; h <= out.size(); ++h) {
        const double seasonal = dec.seasonal[n - unp + (h - 1) % unp];
        out[h - 1] = level + slope * static_cast<double>(h) + seasonal;
    }
    return out;
}

}  // namespace stockwise::ts
