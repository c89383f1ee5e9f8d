#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "stockwise/common.hpp"
#include "stockwise/gbrt.hpp"
#include "stockwise/timeseries.hpp"

namespace stockwise::forecast {

/// One calendar day: the demand target and the feature values known before that day.
struct DailyRecord {
    Date date{};
    double demand = 0.0;
    std::vector<double> features;  // NaN marks a missing cell
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<DailyRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    void validate() const {
        std::set<std::string> seen;
        for (const auto& name : feature_names)
            if (!seen.insert(name).second) throw ParameterError(fmt::format("duplicate feature name '{}'", name));
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (r.features.size() != feature_names.size())
                throw ParameterError(fmt::format("record {} ({}) has {} features, expected {}", i, format_date(r.date),
                                                 r.features.size(), feature_names.size()));
            if (!std::isfinite(r.demand) || r.demand < 0.0)
                throw ParameterError(fmt::format("record {} ({}) has invalid demand {}", i, format_date(r.date), r.demand));
        }
    }

    /// Throws unless dates advance by exactly one day.
    void require_contiguous() const {
        for (std::size_t i = 1; i < records.size(); ++i)
            if (records[i].date != records[i - 1].date + std::chrono::days{1})
                throw ParameterError(fmt::format("dates are not contiguous: {} follows {}", format_date(records[i].date),
                                                 format_date(records[i - 1].date)));
    }

    Dataset slice(std::size_t begin, std::size_t end) const {
        end = std::min(end, records.size());
        begin = std::min(begin, end);
        Dataset out;
        out.feature_names = feature_names;
        out.records.assign(records.begin() + static_cast<std::ptrdiff_t>(begin),
                           records.begin() + static_cast<std::ptrdiff_t>(end));
        return out;
    }

    /// Keeps only the named features, in the given order.
    Dataset select(std::span<const std::string> names) const {
        std::vector<std::size_t> idx;
        for (const auto& name : names) {
            const auto it = std::find(feature_names.begin(), feature_names.end(), name);
            if (it == feature_names.end()) throw ParameterError(fmt::format("unknown feature '{}'", name));
            idx.push_back(static_cast<std::size_t>(it - feature_names.begin()));
        }
        Dataset out;
        out.feature_names.assign(names.begin(), names.end());
        out.records.reserve(records.size());
        for (const auto& r : records) {
            DailyRecord nr{r.date, r.demand, {}};
            nr.features.reserve(idx.size());
            for (std::size_t j : idx) nr.features.push_back(r.features[j]);
            out.records.push_back(std::move(nr));
        }
        return out;
    }

    std::vector<double> demands() const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.demand);
        return out;
    }

    gbrt::FeatureMatrix feature_matrix() const {
        gbrt::FeatureMatrix x(records.size(), feature_names);
        for (std::size_t i = 0; i < records.size(); ++i)
            for (std::size_t j = 0; j < feature_names.size(); ++j) x.at(i, j) = records[i].features[j];
        return x;
    }
};

// ---------------------------------------------------------------------------
// Accuracy metrics

inline double rmse(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size())
        throw ParameterError(fmt::format("rmse: {} predictions vs {} actuals", pred.size(), actual.size()));
    if (pred.empty()) return 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    return std::sqrt(ss / static_cast<double>(pred.size()));
}

/// Mean absolute percentage error as a fraction.
inline double mape(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size())
        throw ParameterError(fmt::format("mape: {} predictions vs {} actuals", pred.size(), actual.size()));
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (actual[i] == 0.0) throw ParameterError(fmt::format("mape: actual value at index {} is zero", i));
        acc += std::abs(pred[i] - actual[i]) / std::abs(actual[i]);
    }
    return acc / static_cast<double>(pred.size());
}

/// Pearson correlation of x[t] with y[t - lag] over the overlapping range.
inline double lagged_cross_correlation(std::span<const double> x, std::span<const double> y, int lag) {
    if (x.size() != y.size()) throw ParameterError("cross-correlation needs equal-length series");
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, lag);
    const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(n, n + lag);
    const std::ptrdiff_t m = t1 - t0;
    if (m < 3) throw ParameterError(fmt::format("lag {} leaves {} overlapping points, need 3", lag, std::max<std::ptrdiff_t>(m, 0)));
    double mx = 0.0, my = 0.0;
    for (std::ptrdiff_t t = t0; t < t1; ++t) {
        mx += x[static_cast<std::size_t>(t)];
        my += y[static_cast<std::size_t>(t - lag)];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::ptrdiff_t t = t0; t < t1; ++t) {
        const double dx = x[static_cast<std::size_t>(t)] - mx;
        const double dy = y[static_cast<std::size_t>(t - lag)] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw ParameterError("cross-correlation of a zero-variance series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Sums daily values into Tue-Thu and Fri-Mon blocks labelled by their first day.
/// Partial blocks at either end are dropped.
inline std::vector<std::pair<Date, double>> aggregate_semiweekly(std::span<const std::pair<Date, double>> daily) {
    for (std::size_t i = 1; i < daily.size(); ++i)
        if (daily[i].first != daily[i - 1].first + std::chrono::days{1})
            throw ParameterError(fmt::format("semiweekly aggregation needs contiguous dates ({} follows {})",
                                             format_date(daily[i].first), format_date(daily[i - 1].first)));
    std::vector<std::pair<Date, double>> out;
    std::size_t i = 0;
    while (i < daily.size() && iso_weekday(daily[i].first) != 2 && iso_weekday(daily[i].first) != 5) ++i;
    while (i < daily.size()) {
        const std::size_t len = iso_weekday(daily[i].first) == 2 ? 3 : 4;
        if (i + len > daily.size()) break;
        double sum = 0.0;
        for (std::size_t j = i; j < i + len; ++j) sum += daily[j].second;
        out.emplace_back(daily[i].first, sum);
        i += len;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Residual regressors

/// Ordinary least squares on the features with an intercept; missing cells are replaced
/// by the training column mean.
struct LinearResidual {
    double intercept = 0.0;
    std::vector<double> coefficients;
    std::vector<double> fill_values;

    double predict_row(std::span<const double> row) const {
        double acc = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j) {
            const double v = gbrt::FeatureMatrix::is_missing(row[j]) ? fill_values[j] : row[j];
            acc += coefficients[j] * v;
        }
        return acc;
    }
};

inline LinearResidual fit_linear(const gbrt::FeatureMatrix& x, std::span<const double> y) {
    if (y.size() != x.rows) throw ParameterError(fmt::format("{} targets for {} rows", y.size(), x.rows));
    LinearResidual model;
    model.fill_values.assign(x.cols, 0.0);
    for (std::size_t j = 0; j < x.cols; ++j) {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < x.rows; ++i)
            if (!gbrt::FeatureMatrix::is_missing(x.at(i, j))) {
                s += x.at(i, j);
                ++n;
            }
        model.fill_values[j] = n > 0 ? s / static_cast<double>(n) : 0.0;
    }
    Eigen::MatrixXd a(x.rows, x.cols + 1);
    Eigen::VectorXd b(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        a(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double v = x.at(i, j);
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
                gbrt::FeatureMatrix::is_missing(v) ? model.fill_values[j] : v;
        }
        b(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
    model.intercept = beta(0);
    model.coefficients.resize(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) model.coefficients[j] = beta(static_cast<Eigen::Index>(j + 1));
    return model;
}

// ---------------------------------------------------------------------------
// Hybrid model

enum class ResidualKind { none, linear, gbrt };

inline std::string to_string(ResidualKind kind) {
    switch (kind) {
        case ResidualKind::none: return "none";
        case ResidualKind::linear: return "linear";
        case ResidualKind::gbrt: return "gbrt";
    }
    return "?";
}

struct HybridConfig {
    ts::StlConfig stl;
    gbrt::GbrtConfig gbrt;
};

struct HybridModel {
    int period = 7;
    ts::StlConfig stl_config;
    ts::ExtendConfig extend;
    ts::Decomposition decomposition;
    std::variant<std::monostate, gbrt::Ensemble, LinearResidual> residual_model;
    std::vector<std::string> feature_names;
    Date train_start{};
    Date train_end{};

    ResidualKind kind() const {
        if (std::holds_alternative<gbrt::Ensemble>(residual_model)) return ResidualKind::gbrt;
        if (std::holds_alternative<LinearResidual>(residual_model)) return ResidualKind::linear;
        return ResidualKind::none;
    }

    double residual_at(std::span<const double> features) const {
        if (const auto* e = std::get_if<gbrt::Ensemble>(&residual_model)) return e->predict_row(features);
        if (const auto* l = std::get_if<LinearResidual>(&residual_model)) return l->predict_row(features);
        return 0.0;
    }
};

/// Decomposes the training demand and fits the residual regressor of the requested kind
/// to the decomposition residuals.
inline HybridModel fit_model(const Dataset& train, const HybridConfig& config, ResidualKind kind,
                             const ts::ExtendConfig& extend = {}, int period = 7) {
    train.validate();
    train.require_contiguous();
    if (train.size() < 2 * static_cast<std::size_t>(period))
        throw ParameterError(fmt::format("training series of {} days is shorter than two cycles", train.size()));
    HybridModel model;
    model.period = period;
    model.stl_config = config.stl;
    model.extend = extend;
    model.feature_names = train.feature_names;
    model.train_start = train.records.front().date;
    model.train_end = train.records.back().date;
    model.decomposition = ts::stl_decompose({model.train_start, train.demands(), period}, config.stl);

    if (kind == ResidualKind::none) return model;
    if (train.feature_names.empty()) throw ParameterError("a residual model needs at least one feature");
    const auto x = train.feature_matrix();
    if (kind == ResidualKind::gbrt)
        model.residual_model = gbrt::train(x, model.decomposition.residual, config.gbrt);
    else
        model.residual_model = fit_linear(x, model.decomposition.residual);
    return model;
}

inline HybridModel fit_hybrid(const Dataset& train, const ts::StlConfig& stl, const gbrt::GbrtConfig& gbrt,
                              const ts::ExtendConfig& extend = {}) {
    return fit_model(train, {stl, gbrt}, ResidualKind::gbrt, extend);
}

/// Forecasts for days immediately following the training window: extended trend plus
/// seasonal, plus the residual regressor evaluated on each day's features. Values are raw
/// (not clamped at zero).
inline std::vector<double> predict_daily(const HybridModel& model, std::span<const DailyRecord> future) {
    if (future.empty()) return {};
    if (future.front().date != model.train_end + std::chrono::days{1})
        throw ParameterError(fmt::format("forecast starts {} but training ended {}", format_date(future.front().date),
                                         format_date(model.train_end)));
    for (std::size_t i = 1; i < future.size(); ++i)
        if (future[i].date != future[i - 1].date + std::chrono::days{1})
            throw ParameterError(fmt::format("forecast dates are not contiguous at {}", format_date(future[i].date)));
    const auto base = ts::stl_extend(model.decomposition, static_cast<int>(future.size()), model.period, model.extend);
    std::vector<double> out(future.size());
    for (std::size_t i = 0; i < future.size(); ++i) {
        if (future[i].features.size() != model.feature_names.size() && model.kind() != ResidualKind::none)
            throw ParameterError(fmt::format("record {} has {} features, model expects {}", format_date(future[i].date),
                                             future[i].features.size(), model.feature_names.size()));
        out[i] = base[i] + model.residual_at(future[i].features);
    }
    return out;
}

/// In-sample fitted values: trend + seasonal + predicted residual.
inline std::vector<double> fitted_values(const HybridModel& model, std::span<const DailyRecord> train) {
    const auto& d = model.decomposition;
    if (train.size() != d.size()) throw ParameterError("fitted_values needs the training records");
    std::vector<double> out(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        out[i] = d.trend[i] + d.seasonal[i] + model.residual_at(train[i].features);
    return out;
}

inline std::vector<double> clamp_nonnegative(std::vector<double> values) {
    for (double& v : values) v = std::max(v, 0.0);
    return values;
}

struct ForecastReport {
    std::vector<Date> dates;
    std::vector<double> actual;
    std::vector<double> predicted;
    double rmse = 0.0;
    std::optional<double> mape;  // absent when some actual value is zero
};

inline ForecastReport make_report(std::span<const DailyRecord> records, std::vector<double> predicted) {
    ForecastReport report;
    for (const auto& r : records) {
        report.dates.push_back(r.date);
        report.actual.push_back(r.demand);
    }
    report.predicted = std::move(predicted);
    report.rmse = rmse(report.predicted, report.actual);
    if (std::none_of(report.actual.begin(), report.actual.end(), [](double a) { return a == 0.0; }))
        report.mape = mape(report.predicted, report.actual);
    return report;
}

// ---------------------------------------------------------------------------
// Tuning

/// Axes of a hyperparameter lattice. Expansion order is lexicographic with the first
/// axis varying slowest.
struct GridSpec {
    std::vector<int> s_window{13};
    std::vector<std::optional<int>> t_window{std::nullopt};
    std::vector<int> n_rounds{100};
    std::vector<double> learning_rate{0.1};
    std::vector<int> max_depth{3};
    std::vector<double> min_child_weight{1.0};
    std::vector<double> subsample_rows{1.0};
    std::vector<double> subsample_cols{1.0};
    std::vector<double> lambda{1.0};
    HybridConfig base;

    std::vector<HybridConfig> expand() const {
        std::vector<HybridConfig> out;
        for (int sw : s_window)
            for (auto tw : t_window)
                for (int k : n_rounds)
                    for (double lr : learning_rate)
                        for (int depth : max_depth)
                            for (double mcw : min_child_weight)
                                for (double sr : subsample_rows)
                                    for (double sc : subsample_cols)
                                        for (double lam : lambda) {
                                            HybridConfig c = base;
                                            c.stl.s_window = sw;
                                            c.stl.t_window = tw;
                                            c.gbrt.n_rounds = k;
                                            c.gbrt.learning_rate = lr;
                                            c.gbrt.max_depth = depth;
                                            c.gbrt.min_child_weight = mcw;
                                            c.gbrt.subsample_rows = sr;
                                            c.gbrt.subsample_cols = sc;
                                            c.gbrt.lambda = lam;
                                            out.push_back(c);
                                        }
        return out;
    }
};

/// Contiguous time-ordered folds: the series is cut into k + 1 blocks and fold j trains
/// on blocks 0..j and validates on block j + 1.
struct Fold {
    std::size_t train_end = 0;
    std::size_t valid_begin = 0;
    std::size_t valid_end = 0;
};

inline std::vector<Fold> blocked_folds(std::size_t n, int k, int period = 7) {
    if (k < 1) throw ParameterError("k must be >= 1");
    const std::size_t block = n / static_cast<std::size_t>(k + 1);
    if (block < 2 * static_cast<std::size_t>(period))
        throw ParameterError(fmt::format("{} days in {} folds gives blocks of {} days, shorter than two cycles", n, k, block));
    std::vector<Fold> folds;
    for (int j = 0; j < k; ++j) {
        const std::size_t end = block * static_cast<std::size_t>(j + 1);
        const std::size_t vend = j + 1 == k ? n : end + block;
        folds.push_back({end, end, vend});
    }
    return folds;
}

/// Mean validation RMSE of a configuration over blocked folds.
inline double cv_rmse(const Dataset& data, const HybridConfig& config, int k, ResidualKind kind = ResidualKind::gbrt,
                      const ts::ExtendConfig& extend = {}) {
    double total = 0.0;
    const auto folds = blocked_folds(data.size(), k);
    for (const auto& fold : folds) {
        const auto train = data.slice(0, fold.train_end);
        const auto valid = data.slice(fold.valid_begin, fold.valid_end);
        const auto model = fit_model(train, config, kind, extend);
        total += rmse(predict_daily(model, valid.records), valid.demands());
    }
    return total / static_cast<double>(folds.size());
}

struct CvResult {
    std::size_t best_index = 0;
    HybridConfig best;
    std::vector<double> scores;
};

/// Grid search minimizing mean blocked-CV RMSE; ties go to the earlier lattice point.
inline CvResult grid_search_cv(const Dataset& train, std::span<const HybridConfig> lattice, int k = 5,
                               const ts::ExtendConfig& extend = {}) {
    if (lattice.empty()) throw ParameterError("grid search needs a non-empty lattice");
    CvResult result;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        const double score = cv_rmse(train, lattice[i], k, ResidualKind::gbrt, extend);
        result.scores.push_back(score);
        if (i == 0 || score < result.scores[result.best_index]) result.best_index = i;
    }
    result.best = lattice[result.best_index];
    return result;
}

struct SelectionStep {
    std::vector<std::string> features;
    double holdout_rmse = 0.0;
    std::map<std::string, double> importance;
};

struct SelectionResult {
    std::vector<std::string> features;
    std::vector<SelectionStep> history;
};

/// Backward elimination by importance: fit on the leading part of `train`, score on the
/// trailing holdout, keep features whose normalized importance reaches the threshold and
/// refit. Stops when the holdout RMSE gets worse or the set stops changing; returns the
/// best-scoring set (ties prefer the later, smaller set).
inline SelectionResult iterative_feature_selection(const Dataset& train, const HybridConfig& config,
                                                   double importance_threshold = 0.005,
                                                   double holdout_fraction = 0.2,
                                                   const ts::ExtendConfig& extend = {}) {
    if (!(importance_threshold > 0.0 && importance_threshold < 1.0))
        throw ParameterError(fmt::format("importance threshold {} outside (0, 1)", importance_threshold));
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw ParameterError(fmt::format("holdout fraction {} outside (0, 1)", holdout_fraction));
    if (train.feature_names.empty()) throw ParameterError("feature selection needs at least one feature");

    const auto n_hold = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(train.size())));
    const auto fit_part = train.slice(0, train.size() - n_hold);
    const auto hold_part = train.slice(train.size() - n_hold, train.size());
    if (n_hold == 0) throw ParameterError("holdout is empty");

    SelectionResult result;
    std::vector<std::string> current = train.feature_names;
    double best_rmse = std::numeric_limits<double>::infinity();
    while (true) {
        const auto model = fit_model(fit_part.select(current), config, ResidualKind::gbrt, extend);
        const auto hold = hold_part.select(current);
        const double score = rmse(predict_daily(model, hold.records), hold.demands());
        auto importance = gbrt::variable_importance(std::get<gbrt::Ensemble>(model.residual_model));
        result.history.push_back({current, score, importance});
        if (score > best_rmse) break;
        best_rmse = score;
        result.features = current;

        std::vector<std::string> kept;
        for (const auto& name : current)
            if (importance[name] >= importance_threshold) kept.push_back(name);
        if (kept.empty()) {
            const auto top = std::max_element(current.begin(), current.end(), [&](const auto& a, const auto& b) {
                return importance[a] < importance[b];
            });
            if (importance[*top] <= 0.0) break;
            kept.push_back(*top);
        }
        if (kept == current) break;
        current = std::move(kept);
    }
    return result;
}

}  // namespace stockwise::forecast
