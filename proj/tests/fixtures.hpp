#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stockwise/forecast.hpp"
#include "stockwise/rng.hpp"

namespace stockwise::testing {

struct PlantedSpec {
    std::size_t n_days = 1095;
    std::uint64_t seed = 3;
    double level = 60.0;
    double slope = 0.01;
    double weekly_amplitude = 8.0;
    double effect = 5.0;  // demand gains effect * signal[i - 7]
    double noise_sd = 0.5;
    std::size_t noise_features = 0;
    Date start = make_date(2015, 1, 5);
};

/// Trend + weekly sinusoid + a lag-7 covariate signal + Gaussian noise. Feature
/// "signal_lag7" carries the covariate value seven days earlier; "noise_k" columns are
/// independent draws.
inline forecast::Dataset planted_dataset(const PlantedSpec& spec) {
    Rng rng(spec.seed);
    std::vector<double> signal(spec.n_days + 7);
    for (double& s : signal) s = rng.normal();
    forecast::Dataset ds;
    ds.feature_names.push_back("signal_lag7");
    for (std::size_t k = 0; k < spec.noise_features; ++k) ds.feature_names.push_back("noise_" + std::to_string(k));
    for (std::size_t i = 0; i < spec.n_days; ++i) {
        const auto t = static_cast<double>(i);
        const double lagged = signal[i];  // signal index i + 7 is day i
        const double y = spec.level + spec.slope * t + spec.weekly_amplitude * std::sin(2.0 * M_PI * t / 7.0) +
                         spec.effect * lagged + spec.noise_sd * rng.normal();
        forecast::DailyRecord r{spec.start + std::chrono::days{static_cast<long>(i)}, std::max(0.0, y), {lagged}};
        for (std::size_t k = 0; k < spec.noise_features; ++k) r.features.push_back(rng.normal());
        ds.records.push_back(std::move(r));
    }
    return ds;
}

inline double correlation(std::span<const double> a, std::span<const double> b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace stockwise::testing
