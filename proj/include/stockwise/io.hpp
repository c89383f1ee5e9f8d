#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "stockwise/common.hpp"
#include "stockwise/datagen.hpp"
#include "stockwise/forecast.hpp"
#include "stockwise/gbrt_json.hpp"
#include "stockwise/inventory.hpp"
#include "stockwise/timeseries.hpp"

namespace stockwise::io {

/// A CSV file that does not match its expected layout. Row numbers are 1-based file lines.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string file, std::size_t row, std::string column, const std::string& message)
        : std::runtime_error(fmt::format("{}: row {}, column '{}': {}", file, row, column, message)),
          file_(std::move(file)), row_(row), column_(std::move(column)) {}

    const std::string& file() const { return file_; }
    std::size_t row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    std::string file_;
    std::size_t row_;
    std::string column_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
    out << content;
}

inline std::vector<std::string> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(const std::string& text, const std::string& name) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw SchemaError(name, lineno, "*",
                              fmt::format("expected {} cells, found {}", t.header.size(), cells.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw SchemaError(name, 1, "*", "missing header row");
    return t;
}

inline double parse_number(const std::string& cell, const std::string& file, std::size_t row, const std::string& column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw SchemaError(file, row, column, fmt::format("'{}' is not a finite number", cell));
    return v;
}

/// Shortest representation that reads back to the same double.
inline std::string num(double v) { return fmt::format("{}", v); }

// ---------------------------------------------------------------------------
// Dataset: date,demand,<features...>

inline forecast::Dataset read_dataset_text(const std::string& text, const std::string& name) {
    const auto t = parse_csv(text, name);
    if (t.header.size() < 2 || t.header[0] != "date" || t.header[1] != "demand")
        throw SchemaError(name, 1, t.header.empty() ? "" : t.header[0], "header must start with 'date,demand'");
    forecast::Dataset ds;
    ds.feature_names.assign(t.header.begin() + 2, t.header.end());
    for (std::size_t f = 0; f < ds.feature_names.size(); ++f)
        for (std::size_t g = 0; g < f; ++g)
            if (ds.feature_names[f] == ds.feature_names[g])
                throw SchemaError(name, 1, ds.feature_names[f], "duplicate column");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& cells = t.rows[r];
        const std::size_t row = r + 2;
        forecast::DailyRecord rec;
        try {
            rec.date = parse_date(cells[0]);
        } catch (const ParameterError&) {
            throw SchemaError(name, row, "date", fmt::format("'{}' is not an ISO-8601 date", cells[0]));
        }
        rec.demand = parse_number(cells[1], name, row, "demand");
        if (rec.demand < 0.0 || rec.demand != std::floor(rec.demand))
            throw SchemaError(name, row, "demand", fmt::format("'{}' is not a non-negative integer", cells[1]));
        for (std::size_t f = 0; f < ds.feature_names.size(); ++f) {
            const auto& cell = cells[f + 2];
            rec.features.push_back(cell.empty() ? gbrt::FeatureMatrix::missing()
                                                : parse_number(cell, name, row, ds.feature_names[f]));
        }
        if (!ds.records.empty() && rec.date != ds.records.back().date + std::chrono::days{1})
            throw SchemaError(name, row, "date",
                              fmt::format("{} does not follow {} by one day", cells[0], format_date(ds.records.back().date)));
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

inline forecast::Dataset read_dataset(const std::string& path) { return read_dataset_text(read_file(path), path); }

inline std::string dataset_csv(const forecast::Dataset& ds) {
    std::string out = "date,demand";
    for (const auto& n : ds.feature_names) out += "," + n;
    out += '\n';
    for (const auto& r : ds.records) {
        out += format_date(r.date);
        out += "," + num(r.demand);
        for (double v : r.features) {
            out += ',';
            if (!gbrt::FeatureMatrix::is_missing(v)) out += num(v);
        }
        out += '\n';
    }
    return out;
}

inline std::string truth_csv(const std::vector<datagen::TruthRow>& truth) {
    std::string out = "date,trend,seasonal,covariate_effect,noise,demand_raw\n";
    for (const auto& t : truth)
        out += fmt::format("{},{},{},{},{},{}\n", format_date(t.date), num(t.trend), num(t.seasonal),
                           num(t.covariate_effect), num(t.noise), num(t.demand));
    return out;
}

// ---------------------------------------------------------------------------
// Decomposition: date,observed,trend,seasonal,residual

inline std::string decomposition_csv(const ts::Series& series, const ts::Decomposition& dec) {
    std::string out = "date,observed,trend,seasonal,residual\n";
    for (std::size_t i = 0; i < dec.size(); ++i)
        out += fmt::format("{},{},{},{},{}\n", format_date(series.start_date + std::chrono::days{static_cast<long>(i)}),
                           num(series.values[i]), num(dec.trend[i]), num(dec.seasonal[i]), num(dec.residual[i]));
    return out;
}

inline std::pair<ts::Series, ts::Decomposition> read_decomposition_text(const std::string& text, const std::string& name) {
    const auto t = parse_csv(text, name);
    const std::vector<std::string> expected{"date", "observed", "trend", "seasonal", "residual"};
    if (t.header != expected) throw SchemaError(name, 1, "*", "expected header date,observed,trend,seasonal,residual");
    ts::Series s;
    ts::Decomposition d;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& c = t.rows[r];
        if (r == 0) s.start_date = parse_date(c[0]);
        s.values.push_back(parse_number(c[1], name, r + 2, "observed"));
        d.trend.push_back(parse_number(c[2], name, r + 2, "trend"));
        d.seasonal.push_back(parse_number(c[3], name, r + 2, "seasonal"));
        d.residual.push_back(parse_number(c[4], name, r + 2, "residual"));
    }
    return {std::move(s), std::move(d)};
}

// ---------------------------------------------------------------------------
// Forecast report: date,actual,predicted

inline std::string report_csv(const forecast::ForecastReport& r) {
    std::string out = "date,actual,predicted\n";
    for (std::size_t i = 0; i < r.dates.size(); ++i)
        out += fmt::format("{},{},{}\n", format_date(r.dates[i]), num(r.actual[i]), num(r.predicted[i]));
    return out;
}

inline forecast::ForecastReport read_report_text(const std::string& text, const std::string& name) {
    const auto t = parse_csv(text, name);
    const std::vector<std::string> expected{"date", "actual", "predicted"};
    if (t.header != expected) throw SchemaError(name, 1, "*", "expected header date,actual,predicted");
    forecast::ForecastReport r;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        try {
            r.dates.push_back(parse_date(c[0]));
        } catch (const ParameterError&) {
            throw SchemaError(name, i + 2, "date", fmt::format("'{}' is not an ISO-8601 date", c[0]));
        }
        r.actual.push_back(parse_number(c[1], name, i + 2, "actual"));
        r.predicted.push_back(parse_number(c[2], name, i + 2, "predicted"));
    }
    r.rmse = forecast::rmse(r.predicted, r.actual);
    if (std::none_of(r.actual.begin(), r.actual.end(), [](double a) { return a == 0.0; }))
        r.mape = forecast::mape(r.predicted, r.actual);
    return r;
}

// ---------------------------------------------------------------------------
// Inventory trajectory: period,order,demand,urgent,expired,end_inventory,cost

inline std::string trajectory_csv(std::span<const inventory::PeriodOutcome> outcomes) {
    std::string out = "period,order,demand,urgent,expired,end_inventory,cost\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        out += fmt::format("{},{},{},{},{},{},{}\n", i + 1, o.order_qty, o.demand, o.urgent, o.expired, o.end_inventory,
                           num(o.cost));
    }
    return out;
}

inline std::vector<inventory::PeriodOutcome> read_trajectory_text(const std::string& text, const std::string& name) {
    const auto t = parse_csv(text, name);
    const std::vector<std::string> expected{"period", "order", "demand", "urgent", "expired", "end_inventory", "cost"};
    if (t.header != expected)
        throw SchemaError(name, 1, "*", "expected header period,order,demand,urgent,expired,end_inventory,cost");
    std::vector<inventory::PeriodOutcome> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        auto units = [&](std::size_t col) {
            return static_cast<inventory::Units>(parse_number(c[col], name, i + 2, expected[col]));
        };
        inventory::PeriodOutcome o;
        o.order_qty = units(1);
        o.order_placed = o.order_qty > 0;
        o.demand = units(2);
        o.urgent = units(3);
        o.expired = units(4);
        o.end_inventory = units(5);
        o.cost = parse_number(c[6], name, i + 2, "cost");
        out.push_back(o);
    }
    return out;
}

/// Reads one integer column (by name, or the only column) from a CSV file.
inline std::vector<inventory::Units> read_unit_column_text(const std::string& text, const std::string& name,
                                                          const std::string& column = "") {
    const auto t = parse_csv(text, name);
    std::size_t col = 0;
    if (!column.empty()) {
        const auto it = std::find(t.header.begin(), t.header.end(), column);
        if (it == t.header.end()) throw SchemaError(name, 1, column, "column not found");
        col = static_cast<std::size_t>(it - t.header.begin());
    } else if (t.header.size() != 1) {
        throw SchemaError(name, 1, "*", "expected a single-column file");
    }
    std::vector<inventory::Units> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double v = parse_number(t.rows[i][col], name, i + 2, t.header[col]);
        if (v < 0.0 || v != std::floor(v))
            throw SchemaError(name, i + 2, t.header[col], fmt::format("'{}' is not a non-negative integer", t.rows[i][col]));
        out.push_back(static_cast<inventory::Units>(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hybrid model document

inline constexpr int kHybridFormatVersion = 1;

inline nlohmann::json stl_config_to_json(const ts::StlConfig& c) {
    nlohmann::json j{{"s_window", c.s_window}, {"n_inner", c.n_inner}, {"n_outer", c.n_outer}, {"loess_degree", c.loess_degree}};
    j["t_window"] = c.t_window ? nlohmann::json(*c.t_window) : nlohmann::json(nullptr);
    return j;
}

inline ts::StlConfig stl_config_from_json(const nlohmann::json& j) {
    ts::StlConfig c;
    c.s_window = j.at("s_window").get<int>();
    if (!j.at("t_window").is_null()) c.t_window = j.at("t_window").get<int>();
    c.n_inner = j.at("n_inner").get<int>();
    c.n_outer = j.at("n_outer").get<int>();
    c.loess_degree = j.at("loess_degree").get<int>();
    return c;
}

inline nlohmann::json to_json(const forecast::HybridModel& m) {
    nlohmann::json j{{"format", "stockwise.hybrid"},
                     {"version", kHybridFormatVersion},
                     {"period", m.period},
                     {"stl_config", stl_config_to_json(m.stl_config)},
                     {"extend", {{"drift", m.extend.drift}, {"drift_window", m.extend.drift_window}}},
                     {"feature_names", m.feature_names},
                     {"train_start", format_date(m.train_start)},
                     {"train_end", format_date(m.train_end)},
                     {"decomposition",
                      {{"trend", m.decomposition.trend},
                       {"seasonal", m.decomposition.seasonal},
                       {"residual", m.decomposition.residual}}},
                     {"residual_kind", forecast::to_string(m.kind())}};
    if (const auto* e = std::get_if<gbrt::Ensemble>(&m.residual_model)) j["residual_model"] = gbrt::to_json(*e);
    if (const auto* l = std::get_if<forecast::LinearResidual>(&m.residual_model))
        j["residual_model"] = {{"intercept", l->intercept}, {"coefficients", l->coefficients}, {"fill_values", l->fill_values}};
    return j;
}

inline forecast::HybridModel hybrid_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "stockwise.hybrid") throw ParameterError("not a stockwise.hybrid model document");
    if (j.at("version").get<int>() != kHybridFormatVersion)
        throw ParameterError(fmt::format("unsupported hybrid model version {}", j.at("version").get<int>()));
    forecast::HybridModel m;
    m.period = j.at("period").get<int>();
    m.stl_config = stl_config_from_json(j.at("stl_config"));
    m.extend.drift = j.at("extend").at("drift").get<bool>();
    m.extend.drift_window = j.at("extend").at("drift_window").get<int>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.train_start = parse_date(j.at("train_start").get<std::string>());
    m.train_end = parse_date(j.at("train_end").get<std::string>());
    const auto& d = j.at("decomposition");
    m.decomposition.trend = d.at("trend").get<std::vector<double>>();
    m.decomposition.seasonal = d.at("seasonal").get<std::vector<double>>();
    m.decomposition.residual = d.at("residual").get<std::vector<double>>();
    const auto kind = j.at("residual_kind").get<std::string>();
    if (kind == "gbrt") {
        m.residual_model = gbrt::ensemble_from_json(j.at("residual_model"));
    } else if (kind == "linear") {
        forecast::LinearResidual l;
        l.intercept = j.at("residual_model").at("intercept").get<double>();
        l.coefficients = j.at("residual_model").at("coefficients").get<std::vector<double>>();
        l.fill_values = j.at("residual_model").at("fill_values").get<std::vector<double>>();
        m.residual_model = l;
    } else if (kind != "none") {
        throw ParameterError(fmt::format("unknown residual kind '{}'", kind));
    }
    return m;
}

}  // namespace stockwise::io
