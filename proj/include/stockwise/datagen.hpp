#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "stockwise/common.hpp"
#include "stockwise/forecast.hpp"
#include "stockwise/rng.hpp"

namespace stockwise::datagen {

enum class Nonlinearity { none, threshold };

/// A lab-test style count process that drives demand `lag` days later.
///
/// The count follows a stationary AR(1) around `mean` with standard deviation `sd`. Its
/// contribution to demand is effect_size * g(z) where z is the standardized count and
/// g(z) = z (none) or 1{z > 1} (threshold).
struct CovariateSpec {
    std::string name;
    double effect_size = 0.0;
    int lag = 7;
    Nonlinearity nonlinearity = Nonlinearity::none;
    double mean = 40.0;
    double sd = 8.0;
    double autocorrelation = 0.5;
};

struct GenConfig {
    std::size_t n_days = 3650;
    Date start_date = make_date(2009, 1, 1);
    double base_level = 92.0;
    double trend_slope = 0.0;
    std::array<double, 7> weekday_effects{12.0, 14.0, 10.0, 6.0, 4.0, -22.0, -24.0};  // Mon..Sun
    std::vector<CovariateSpec> covariates{
        {"mpv", 10.0, 7}, {"rdw", 10.0, 7}, {"igg", 10.0, 7}, {"inr", 10.0, 7}};
    double noise_sd = 10.0;
    std::uint64_t seed = 42;
    bool weekday_feature = true;
    bool prev_week_total_feature = true;

    void validate() const {
        if (n_days < 1) throw ParameterError("n_days must be positive");
        if (!(noise_sd >= 0.0)) throw ParameterError("noise_sd must be non-negative");
        for (const auto& c : covariates) {
            if (c.lag != 1 && c.lag != 7)
                throw ParameterError(fmt::format("covariate '{}' has lag {}; lags must be 1 or 7", c.name, c.lag));
            if (!(c.sd > 0.0)) throw ParameterError(fmt::format("covariate '{}' needs a positive sd", c.name));
            if (!(std::abs(c.autocorrelation) < 1.0))
                throw ParameterError(fmt::format("covariate '{}' autocorrelation must be in (-1, 1)", c.name));
        }
    }
};

/// Generative components of one day, before rounding and clamping.
struct TruthRow {
    Date date{};
    double trend = 0.0;
    double seasonal = 0.0;
    double covariate_effect = 0.0;
    double noise = 0.0;
    double demand = 0.0;
};

struct Generated {
    forecast::Dataset data;
    std::vector<TruthRow> truth;
};

inline constexpr int kMaxLag = 7;

/// Synthetic daily demand with planted trend, weekday effect, lagged covariate effects and
/// Gaussian noise. Feature columns per covariate are its counts 1 and 7 days earlier, so
/// every feature of day i is known before day i.
inline Generated generate(const GenConfig& config) {
    config.validate();
    const std::size_t n = config.n_days;
    const std::size_t len = n + kMaxLag;  // index t holds day t - kMaxLag
    Rng rng(config.seed);

    std::vector<std::vector<double>> counts(config.covariates.size(), std::vector<double>(len));
    for (std::size_t c = 0; c < config.covariates.size(); ++c) {
        const auto& spec = config.covariates[c];
        const double phi = spec.autocorrelation;
        const double innov = std::sqrt(1.0 - phi * phi);
        double latent = rng.normal();
        for (std::size_t t = 0; t < len; ++t) {
            if (t > 0) latent = phi * latent + innov * rng.normal();
            counts[c][t] = std::max(0.0, std::round(spec.mean + spec.sd * latent));
        }
    }

    Generated out;
    auto& names = out.data.feature_names;
    if (config.weekday_feature) names.push_back("weekday");
    if (config.prev_week_total_feature) names.push_back("prev_week_total");
    for (const auto& spec : config.covariates) {
        names.push_back(spec.name + "_lag1");
        names.push_back(spec.name + "_lag7");
    }

    std::vector<double> demand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Date date = config.start_date + std::chrono::days{static_cast<long>(i)};
        TruthRow truth;
        truth.date = date;
        truth.trend = config.base_level + config.trend_slope * static_cast<double>(i);
        truth.seasonal = config.weekday_effects[iso_weekday(date) - 1];
        for (std::size_t c = 0; c < config.covariates.size(); ++c) {
            const auto& spec = config.covariates[c];
            const double z = (counts[c][i + kMaxLag - static_cast<std::size_t>(spec.lag)] - spec.mean) / spec.sd;
            const double g = spec.nonlinearity == Nonlinearity::none ? z : (z > 1.0 ? 1.0 : 0.0);
            truth.covariate_effect += spec.effect_size * g;
        }
        truth.noise = config.noise_sd > 0.0 ? rng.normal(0.0, config.noise_sd) : 0.0;
        truth.demand = truth.trend + truth.seasonal + truth.covariate_effect + truth.noise;
        demand[i] = static_cast<double>(round_half_up(std::max(truth.demand, 0.0)));
        out.truth.push_back(truth);
    }

    out.data.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        forecast::DailyRecord rec;
        rec.date = out.truth[i].date;
        rec.demand = demand[i];
        if (config.weekday_feature) rec.features.push_back(static_cast<double>(iso_weekday(rec.date)));
        if (config.prev_week_total_feature) {
            if (i < 7) {
                rec.features.push_back(gbrt::FeatureMatrix::missing());
            } else {
                double s = 0.0;
                for (std::size_t j = i - 7; j < i; ++j) s += demand[j];
                rec.features.push_back(s);
            }
        }
        for (std::size_t c = 0; c < config.covariates.size(); ++c) {
            rec.features.push_back(counts[c][i + kMaxLag - 1]);
            rec.features.push_back(counts[c][i + kMaxLag - 7]);
        }
        out.data.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace stockwise::datagen
