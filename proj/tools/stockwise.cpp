// stockwise: synthetic generation, hybrid forecasting, inventory simulation and ordering
// policy search from the command line. Every command writes its artifacts and a
// manifest.json into one run directory.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "stockwise/datagen.hpp"
#include "stockwise/forecast.hpp"
#include "stockwise/gbrt_json.hpp"
#include "stockwise/inventory.hpp"
#include "stockwise/io.hpp"
#include "stockwise/pipeline.hpp"
#include "stockwise/policy.hpp"
#include "stockwise/timeseries.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stockwise;
using inventory::Units;

namespace {

/// Failure reported as {"error": kind, "message": ...} with a kind-specific exit code.
class CliError : public std::runtime_error {
public:
    CliError(std::string kind, const std::string& message, int exit_code)
        : std::runtime_error(message), kind_(std::move(kind)), exit_code_(exit_code) {}
    const std::string& kind() const { return kind_; }
    int exit_code() const { return exit_code_; }

private:
    std::string kind_;
    int exit_code_;
};

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitParameter = 4;
constexpr int kExitInternal = 1;

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw CliError("internal", "SHA-256 digest failed", kExitInternal);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string utc_stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

/// Option values after config-file and flag resolution, keyed by long option name.
json resolved_options(const CLI::App& sub) {
    json out = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "out") continue;
        std::vector<std::string> values = opt->count() > 0 ? opt->reduced_results() : std::vector<std::string>{};
        if (values.empty() && !opt->get_default_str().empty()) values = {opt->get_default_str()};
        if (opt->get_type_size() == 0)
            out[name] = opt->count() > 0;
        else if (opt->get_expected_max() > 1)
            out[name] = values;
        else
            out[name] = values.empty() ? json(nullptr) : json(values.front());
    }
    return out;
}

/// One run directory with its manifest. The manifest is written first with status
/// "running" and rewritten with output hashes when the command completes.
class Run {
public:
    Run(const std::string& command, const std::string& out, const CLI::App& sub) {
        if (!out.empty()) {
            dir_ = out;
        } else {
            const char* root = std::getenv("STOCKWISE_OUTPUT_ROOT");
            const fs::path base = fs::path(root && *root ? root : "runs") / fmt::format("{}-{}", command, utc_stamp());
            dir_ = base;
            for (int k = 2; fs::exists(dir_); ++k) dir_ = fmt::format("{}-{}", base.string(), k);
        }
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw CliError("io", fmt::format("cannot create run directory '{}': {}", dir_.string(), ec.message()), kExitInput);
        manifest_ = {{"format", "stockwise.run"},
                     {"version", 1},
                     {"tool_version", std::string(kVersion)},
                     {"command", command},
                     {"config", resolved_options(sub)},
                     {"inputs", json::array()},
                     {"outputs", json::array()},
                     {"status", "running"}};
        write_manifest();
    }

    const fs::path& dir() const { return dir_; }

    /// Reads an input file and records its hash.
    std::string input(const std::string& path) {
        if (!fs::is_regular_file(path)) throw CliError("io", fmt::format("input file '{}' does not exist", path), kExitInput);
        std::string text = io::read_file(path);
        manifest_["inputs"].push_back({{"path", path}, {"bytes", text.size()}, {"sha256", sha256_hex(text)}});
        write_manifest();
        return text;
    }

    void output(const std::string& name, std::string_view content) {
        io::write_file((dir_ / name).string(), content);
        manifest_["outputs"].push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
    }

    void finish(json summary = json::object()) {
        manifest_["summary"] = std::move(summary);
        manifest_["status"] = "complete";
        write_manifest();
        fmt::print("run directory: {}\n", dir_.string());
    }

private:
    void write_manifest() { io::write_file((dir_ / "manifest.json").string(), manifest_.dump(2) + "\n"); }

    fs::path dir_;
    json manifest_;
};

// ---------------------------------------------------------------------------
// Shared option groups

struct StlOptions {
    ts::StlConfig config;
    int t_window = 0;  // 0 selects the automatic window

    void add(CLI::App* app) {
        app->add_option("--s-window", config.s_window, "seasonal loess window (odd, >= 7)")->capture_default_str();
        app->add_option("--t-window", t_window, "trend loess window (odd); 0 = automatic")->capture_default_str();
        app->add_option("--n-inner", config.n_inner, "inner STL iterations")->capture_default_str();
        app->add_option("--n-outer", config.n_outer, "robustness iterations")->capture_default_str();
    }

    ts::StlConfig resolve() const {
        ts::StlConfig c = config;
        if (t_window > 0) c.t_window = t_window;
        c.validate();
        return c;
    }
};

void add_gbrt_options(CLI::App* app, gbrt::GbrtConfig& c) {
    app->add_option("--rounds", c.n_rounds, "boosting rounds")->capture_default_str();
    app->add_option("--learning-rate", c.learning_rate, "shrinkage per round")->capture_default_str();
    app->add_option("--max-depth", c.max_depth, "maximum tree depth")->capture_default_str();
    app->add_option("--min-child-weight", c.min_child_weight, "minimum hessian sum per leaf")->capture_default_str();
    app->add_option("--subsample-rows", c.subsample_rows, "row fraction per tree")->capture_default_str();
    app->add_option("--subsample-cols", c.subsample_cols, "column fraction per tree")->capture_default_str();
    app->add_option("--lambda", c.lambda, "L2 penalty on leaf weights")->capture_default_str();
    app->add_option("--gamma", c.gamma, "penalty per leaf")->capture_default_str();
    app->add_option("--gbrt-seed", c.seed, "subsampling seed")->capture_default_str();
}

void add_extend_options(CLI::App* app, ts::ExtendConfig& e, bool& no_drift) {
    app->add_option("--drift-window", e.drift_window, "trailing trend days for the drift line; 0 = one period")
        ->capture_default_str();
    app->add_flag("--no-drift", no_drift, "hold the last trend value instead of extending a drift line");
}

void add_cost_options(CLI::App* app, inventory::CostParams& c) {
    app->add_option("--cost-delivery", c.routine_delivery, "routine delivery cost per order")->capture_default_str();
    app->add_option("--cost-holding", c.holding, "holding cost per unit per day")->capture_default_str();
    app->add_option("--cost-urgent", c.urgent, "urgent delivery cost per unit")->capture_default_str();
    app->add_option("--cost-wastage", c.wastage, "wastage cost per expired unit")->capture_default_str();
}

const std::map<std::string, forecast::ResidualKind> kKinds{
    {"gbrt", forecast::ResidualKind::gbrt}, {"linear", forecast::ResidualKind::linear}, {"none", forecast::ResidualKind::none}};
const std::map<std::string, policy::Objective> kObjectives{{"cost_gap", policy::Objective::cost_gap},
                                                          {"min_cost", policy::Objective::min_cost}};

json report_metrics(const forecast::ForecastReport& r) {
    json j{{"days", r.dates.size()}, {"rmse", r.rmse}};
    j["mape_percent"] = r.mape ? json(100.0 * *r.mape) : json(nullptr);
    return j;
}

std::string search_csv(const policy::SearchResult& r, const std::string& name) {
    std::string out = fmt::format("{},average_cost,objective\n", name);
    for (std::size_t i = 0; i < r.candidates.size(); ++i)
        out += fmt::format("{},{},{}\n", r.candidates[i], io::num(r.average_cost[i]), io::num(r.objective[i]));
    return out;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string out;
    datagen::GenConfig gen;
    std::string start = "2009-01-01";
    double effect = 10.0;
    int lag = 7;
    std::string nonlinearity = "none";
};

void cmd_generate(const GenerateArgs& a, const CLI::App& sub) {
    datagen::GenConfig g = a.gen;
    g.start_date = parse_date(a.start);
    for (auto& c : g.covariates) {
        c.effect_size = a.effect;
        c.lag = a.lag;
        c.nonlinearity = a.nonlinearity == "threshold" ? datagen::Nonlinearity::threshold : datagen::Nonlinearity::none;
    }
    g.validate();
    Run run("generate", a.out, sub);
    const auto out = datagen::generate(g);
    run.output("dataset.csv", io::dataset_csv(out.data));
    run.output("truth.csv", io::truth_csv(out.truth));
    const auto d = out.data.demands();
    run.finish({{"days", out.data.size()}, {"mean_demand", mean(d)}, {"sd_demand", sample_sd(d)}});
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeArgs {
    std::string out;
    std::string data;
    int period = 7;
    StlOptions stl;
};

void cmd_decompose(const DecomposeArgs& a, const CLI::App& sub) {
    const auto stl = a.stl.resolve();
    Run run("decompose", a.out, sub);
    const auto ds = io::read_dataset_text(run.input(a.data), a.data);
    if (ds.empty()) throw CliError("schema", fmt::format("'{}' has no rows", a.data), kExitInput);
    const ts::Series series{ds.records.front().date, ds.demands(), a.period};
    const auto dec = ts::stl_decompose(series, stl);
    run.output("decomposition.csv", io::decomposition_csv(series, dec));
    run.finish({{"days", ds.size()}, {"s_window", stl.s_window}, {"t_window", stl.resolved_t_window(a.period)}});
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string out;
    std::string data;
    std::string kind = "gbrt";
    std::size_t train_days = 0;
    StlOptions stl;
    gbrt::GbrtConfig gbrt;
    ts::ExtendConfig extend{true, 365};
    bool no_drift = false;
    std::vector<int> cv_s_window;
    int cv_folds = 5;
    bool select = false;
    double importance_threshold = 0.005;
};

void cmd_train(const TrainArgs& a, const CLI::App& sub) {
    forecast::HybridConfig config{a.stl.resolve(), a.gbrt};
    config.gbrt.validate();
    ts::ExtendConfig extend = a.extend;
    extend.drift = !a.no_drift;
    const auto kind = kKinds.at(a.kind);
    Run run("train", a.out, sub);
    auto ds = io::read_dataset_text(run.input(a.data), a.data);
    if (a.train_days > 0) {
        if (a.train_days > ds.size())
            throw CliError("parameter", fmt::format("--train-days {} exceeds the {} rows of '{}'", a.train_days, ds.size(), a.data),
                           kExitParameter);
        ds = ds.slice(0, a.train_days);
    }
    json summary{{"train_days", ds.size()}, {"residual_kind", a.kind}};

    if (!a.cv_s_window.empty()) {
        forecast::GridSpec grid;
        grid.base = config;
        grid.s_window = a.cv_s_window;
        grid.t_window = {config.stl.t_window};
        grid.n_rounds = {config.gbrt.n_rounds};
        grid.learning_rate = {config.gbrt.learning_rate};
        grid.max_depth = {config.gbrt.max_depth};
        grid.min_child_weight = {config.gbrt.min_child_weight};
        grid.subsample_rows = {config.gbrt.subsample_rows};
        grid.subsample_cols = {config.gbrt.subsample_cols};
        grid.lambda = {config.gbrt.lambda};
        const auto lattice = grid.expand();
        const auto cv = forecast::grid_search_cv(ds, lattice, a.cv_folds, extend);
        std::string csv = "s_window,cv_rmse\n";
        for (std::size_t i = 0; i < lattice.size(); ++i)
            csv += fmt::format("{},{}\n", lattice[i].stl.s_window, io::num(cv.scores[i]));
        run.output("cv.csv", csv);
        config = cv.best;
        summary["cv_s_window"] = config.stl.s_window;
    }
    if (a.select) {
        const auto sel = forecast::iterative_feature_selection(ds, config, a.importance_threshold, 0.2, extend);
        std::string csv = "step,holdout_rmse,features\n";
        for (std::size_t i = 0; i < sel.history.size(); ++i) {
            std::string names;
            for (const auto& f : sel.history[i].features) names += (names.empty() ? "" : ";") + f;
            csv += fmt::format("{},{},{}\n", i + 1, io::num(sel.history[i].holdout_rmse), policy::csv_escape(names));
        }
        run.output("selection.csv", csv);
        ds = ds.select(sel.features);
        summary["selected_features"] = sel.features;
    }

    const auto model = forecast::fit_model(ds, config, kind, extend);
    run.output("model.json", io::to_json(model).dump(2) + "\n");
    const auto fitted = forecast::make_report(ds.records, forecast::fitted_values(model, ds.records));
    run.output("fitted.csv", io::report_csv(fitted));
    if (const auto* e = std::get_if<gbrt::Ensemble>(&model.residual_model)) {
        std::string csv = "feature,importance\n";
        for (const auto& [name, v] : gbrt::variable_importance(*e)) csv += fmt::format("{},{}\n", name, io::num(v));
        run.output("importance.csv", csv);
    }
    summary["fitted"] = report_metrics(fitted);
    run.finish(summary);
}

// ---------------------------------------------------------------------------
// forecast

struct ForecastArgs {
    std::string out;
    std::string model;
    std::string data;
    long horizon = -1;
};

void cmd_forecast(const ForecastArgs& a, const CLI::App& sub) {
    Run run("forecast", a.out, sub);
    json doc;
    try {
        doc = json::parse(run.input(a.model));
    } catch (const json::exception& e) {
        throw CliError("schema", fmt::format("'{}' is not valid JSON: {}", a.model, e.what()), kExitInput);
    }
    const auto model = io::hybrid_from_json(doc);
    std::vector<forecast::DailyRecord> future;
    if (a.horizon != 0) {
        const auto ds = io::read_dataset_text(run.input(a.data), a.data);
        for (const auto& r : ds.records)
            if (r.date > model.train_end) future.push_back(r);
        if (a.horizon > 0) {
            if (static_cast<std::size_t>(a.horizon) > future.size())
                throw CliError("parameter",
                               fmt::format("horizon {} exceeds the {} days after training in '{}'", a.horizon, future.size(), a.data),
                               kExitParameter);
            future.resize(static_cast<std::size_t>(a.horizon));
        }
    }
    const auto report = forecast::make_report(future, forecast::predict_daily(model, future));
    run.output("report.csv", io::report_csv(report));
    const auto metrics = report_metrics(report);
    if (!future.empty())
        fmt::print("days {}  RMSE {:.3f}  MAPE {}\n", future.size(), report.rmse,
                   report.mape ? fmt::format("{:.2f}%", 100.0 * *report.mape) : std::string("n/a"));
    run.finish(metrics);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string out;
    std::string orders;
    std::string orders_column;
    std::string demands;
    std::string demands_column;
    std::string forecast;
    std::string strategy = "daily";
    Units target = 0;
    Units reorder = 0;
    Units initial = 780;
    int shelf_life = inventory::kDefaultShelfLife;
    inventory::CostParams costs;
};

void cmd_simulate(const SimulateArgs& a, const CLI::App& sub) {
    a.costs.validate();
    if (a.forecast.empty() == a.orders.empty())
        throw CliError("usage", "give either --orders with --demands, or --forecast", kExitUsage);
    Run run("simulate", a.out, sub);
    inventory::SimulationResult sim;
    std::optional<policy::StrategySummary> summary;
    if (!a.orders.empty()) {
        if (a.demands.empty()) throw CliError("usage", "--orders needs --demands", kExitUsage);
        const auto z = io::read_unit_column_text(run.input(a.orders), a.orders, a.orders_column);
        const auto y = io::read_unit_column_text(run.input(a.demands), a.demands, a.demands_column);
        if (z.size() != y.size())
            throw CliError("parameter",
                           fmt::format("order stream has {} periods but demand stream has {}", z.size(), y.size()),
                           kExitParameter);
        const double mean_y = y.empty() ? 0.0 : static_cast<double>(std::accumulate(y.begin(), y.end(), Units{0})) /
                                                     static_cast<double>(y.size());
        const auto init = inventory::AgeProfile::young(a.initial, mean_y, a.shelf_life);
        sim = inventory::simulate(init, z, y, a.costs);
        summary = policy::summarize("orders", sim.outcomes, true);
    } else {
        const auto report = io::read_report_text(run.input(a.forecast), a.forecast);
        const auto y = policy::to_units(report.actual);
        const auto init = inventory::AgeProfile::young(a.initial, mean(report.actual), a.shelf_life);
        policy::Strategy s;
        switch (policy::parse_strategy_kind(a.strategy)) {
            case policy::Strategy::Kind::gold: s = policy::Strategy::gold(); break;
            case policy::Strategy::Kind::baseline: s = policy::Strategy::baseline(a.target); break;
            case policy::Strategy::Kind::daily: s = policy::Strategy::daily(a.target, a.reorder); break;
            case policy::Strategy::Kind::semiweekly: s = policy::Strategy::semiweekly(a.target, a.reorder); break;
        }
        const Date first = report.dates.empty() ? Date{} : report.dates.front();
        summary = policy::evaluate_strategy(s, report.predicted, y, init, a.costs, first);
    }
    run.output("trajectory.csv", io::trajectory_csv(summary->trajectory));
    const std::vector<policy::StrategySummary> one{*summary};
    const auto table = policy::comparison_table(one);
    run.output("summary.csv", policy::to_csv(table));
    fmt::print("{}", policy::to_text(table));
    double average = 0.0;
    for (const auto& o : summary->trajectory) average += o.cost;
    if (!summary->trajectory.empty()) average /= static_cast<double>(summary->trajectory.size());
    run.finish({{"periods", summary->trajectory.size()}, {"average_cost", average}});
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeArgs {
    std::string out;
    std::string forecast;
    Units initial = 780;
    int shelf_life = inventory::kDefaultShelfLife;
    Units target_min = -1;  // default: initial inventory
    Units target_max = -1;  // default: twice the initial inventory
    Units step = 10;
    std::string objective = "cost_gap";
    inventory::CostParams costs;
};

void cmd_optimize(const OptimizeArgs& a, const CLI::App& sub) {
    a.costs.validate();
    const Units lo = a.target_min >= 0 ? a.target_min : a.initial;
    const Units hi = a.target_max >= 0 ? a.target_max : 2 * a.initial;
    if (lo > hi) throw CliError("parameter", fmt::format("target range [{}, {}] is empty", lo, hi), kExitParameter);
    const auto objective = kObjectives.at(a.objective);
    Run run("optimize", a.out, sub);
    const auto report = io::read_report_text(run.input(a.forecast), a.forecast);
    if (report.dates.empty()) throw CliError("schema", fmt::format("'{}' has no rows", a.forecast), kExitInput);
    const auto y = policy::to_units(report.actual);
    const auto init = inventory::AgeProfile::young(a.initial, mean(report.actual), a.shelf_life);
    const auto target = policy::optimize_target(report.predicted, y, init, a.costs, policy::grid_range(lo, hi, a.step), objective);
    const auto reorder_grid = policy::grid_range(0, target.best, a.step);
    const Date first = report.dates.front();
    const auto daily = policy::optimize_reorder(report.predicted, y, init, a.costs, target.best, reorder_grid,
                                                policy::Schedule::daily, first, objective);
    const auto semi = policy::optimize_reorder(report.predicted, y, init, a.costs, target.best, reorder_grid,
                                               policy::Schedule::semiweekly, first, objective);
    run.output("target_search.csv", search_csv(target, "target"));
    run.output("reorder_daily.csv", search_csv(daily, "reorder"));
    run.output("reorder_semiweekly.csv", search_csv(semi, "reorder"));
    const json result{{"target", target.best},
                      {"reorder_daily", daily.best},
                      {"reorder_semiweekly", semi.best},
                      {"gold_cost", target.gold_cost}};
    run.output("policy.json", result.dump(2) + "\n");
    fmt::print("S* = {}  s*(daily) = {}  s*(semiweekly) = {}  gold cost = {:.2f}\n", target.best, daily.best, semi.best,
               target.gold_cost);
    run.finish(result);
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
    std::string out;
    std::string data;
    pipeline::StudyConfig study;
    StlOptions stl;
    Units baseline_target = -1;
    bool no_drift = false;
    std::string objective = "cost_gap";
};

void cmd_compare(const CompareArgs& a, const CLI::App& sub) {
    pipeline::StudyConfig config = a.study;
    config.model.stl = a.stl.resolve();
    config.model.gbrt.validate();
    config.costs.validate();
    config.extend.drift = !a.no_drift;
    config.objective = kObjectives.at(a.objective);
    if (a.baseline_target >= 0) config.baseline_target = a.baseline_target;
    Run run("compare", a.out, sub);
    const auto ds = io::read_dataset_text(run.input(a.data), a.data);
    const auto r = pipeline::run_policy_study(ds, config);
    const auto table = policy::comparison_table(r.summaries);
    run.output("comparison.csv", policy::to_csv(table));
    run.output("comparison.txt", policy::to_text(table));
    run.output("learn_report.csv", io::report_csv(r.learn_report));
    run.output("test_report.csv", io::report_csv(r.test_report));
    for (const auto& s : r.summaries) run.output(fmt::format("trajectory_{}.csv", s.label), io::trajectory_csv(s.trajectory));
    run.output("target_search.csv", search_csv(r.target_search, "target"));
    run.output("reorder_daily.csv", search_csv(r.reorder_daily_search, "reorder"));
    run.output("reorder_semiweekly.csv", search_csv(r.reorder_semiweekly_search, "reorder"));
    fmt::print("{}", policy::to_text(table));
    fmt::print("test RMSE {:.3f}  MAPE {}\n", r.test_report.rmse,
               r.test_report.mape ? fmt::format("{:.2f}%", 100.0 * *r.test_report.mape) : std::string("n/a"));
    run.finish({{"s_window", r.model.stl.s_window},
                {"target", r.target},
                {"reorder_daily", r.reorder_daily},
                {"reorder_semiweekly", r.reorder_semiweekly},
                {"baseline_target", config.resolved_baseline_target()},
                {"test", report_metrics(r.test_report)}});
}

void print_error(const std::string& kind, const std::string& message, const json& extra = json::object()) {
    json j{{"error", kind}, {"message", message}};
    j.update(extra);
    std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blood-product demand forecasting and inventory ordering policies", "stockwise"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "TOML file with one [command] table; flags override its values");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "write a seeded synthetic demand dataset");
    g->add_option("--out", gen.out, "run directory (default $STOCKWISE_OUTPUT_ROOT/generate-<time>)");
    g->add_option("--seed", gen.gen.seed, "random seed")->capture_default_str();
    g->add_option("--days", gen.gen.n_days, "number of days")->capture_default_str()->check(CLI::PositiveNumber);
    g->add_option("--start", gen.start, "first date (YYYY-MM-DD)")->capture_default_str();
    g->add_option("--base", gen.gen.base_level, "base demand level")->capture_default_str();
    g->add_option("--slope", gen.gen.trend_slope, "trend per day")->capture_default_str();
    g->add_option("--noise", gen.gen.noise_sd, "noise standard deviation")->capture_default_str();
    g->add_option("--effect", gen.effect, "effect size of every covariate")->capture_default_str();
    g->add_option("--lag", gen.lag, "covariate lag in days (1 or 7)")->capture_default_str();
    g->add_option("--nonlinearity", gen.nonlinearity, "covariate response")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "threshold"}));

    DecomposeArgs dec;
    auto* d = app.add_subcommand("decompose", "STL decomposition of a dataset's demand");
    d->add_option("--out", dec.out, "run directory");
    d->add_option("--data", dec.data, "dataset CSV (date,demand,features...)")->required();
    d->add_option("--period", dec.period, "seasonal period")->capture_default_str();
    dec.stl.add(d);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "fit a hybrid STL + residual model");
    t->add_option("--out", tr.out, "run directory");
    t->add_option("--data", tr.data, "dataset CSV")->required();
    t->add_option("--kind", tr.kind, "residual model")->capture_default_str()->check(CLI::IsMember({"gbrt", "linear", "none"}));
    t->add_option("--train-days", tr.train_days, "use only the first N rows (0 = all)")->capture_default_str();
    tr.stl.add(t);
    add_gbrt_options(t, tr.gbrt);
    add_extend_options(t, tr.extend, tr.no_drift);
    t->add_option("--cv-s-window", tr.cv_s_window, "seasonal windows to tune by blocked cross-validation");
    t->add_option("--cv-folds", tr.cv_folds, "cross-validation folds")->capture_default_str();
    t->add_flag("--select", tr.select, "run iterative feature selection before the final fit");
    t->add_option("--importance-threshold", tr.importance_threshold, "minimum normalized importance kept")
        ->capture_default_str();

    ForecastArgs fc;
    auto* f = app.add_subcommand("forecast", "forecast the days after a model's training window");
    f->add_option("--out", fc.out, "run directory");
    f->add_option("--model", fc.model, "model.json from train")->required();
    f->add_option("--data", fc.data, "dataset CSV holding the days to forecast");
    f->add_option("--horizon", fc.horizon, "days to forecast (-1 = every day after training)")->capture_default_str();

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "simulate FIFO inventory for an order stream or a strategy");
    s->add_option("--out", sim.out, "run directory");
    s->add_option("--orders", sim.orders, "CSV with the order stream");
    s->add_option("--orders-column", sim.orders_column, "column of --orders (default: the only column)");
    s->add_option("--demands", sim.demands, "CSV with the demand stream");
    s->add_option("--demands-column", sim.demands_column, "column of --demands (default: the only column)");
    s->add_option("--forecast", sim.forecast, "forecast report CSV (date,actual,predicted) to run a strategy on");
    s->add_option("--strategy", sim.strategy, "strategy for --forecast")
        ->capture_default_str()
        ->check(CLI::IsMember({"gold", "baseline", "daily", "semiweekly"}));
    s->add_option("--target", sim.target, "inventory target S (baseline: fixed target)")->capture_default_str();
    s->add_option("--reorder", sim.reorder, "reorder level s")->capture_default_str();
    s->add_option("--initial", sim.initial, "initial inventory")->capture_default_str();
    s->add_option("--shelf-life", sim.shelf_life, "shelf life M in days")->capture_default_str();
    add_cost_options(s, sim.costs);

    OptimizeArgs opt;
    auto* o = app.add_subcommand("optimize", "learn the inventory target and reorder levels from a forecast report");
    o->add_option("--out", opt.out, "run directory");
    o->add_option("--forecast", opt.forecast, "forecast report CSV (date,actual,predicted)")->required();
    o->add_option("--initial", opt.initial, "initial inventory")->capture_default_str();
    o->add_option("--shelf-life", opt.shelf_life, "shelf life M in days")->capture_default_str();
    o->add_option("--target-min", opt.target_min, "smallest target candidate (-1 = initial inventory)")->capture_default_str();
    o->add_option("--target-max", opt.target_max, "largest target candidate (-1 = twice the initial inventory)")
        ->capture_default_str();
    o->add_option("--step", opt.step, "grid step")->capture_default_str()->check(CLI::PositiveNumber);
    o->add_option("--objective", opt.objective, "search objective")
        ->capture_default_str()
        ->check(CLI::IsMember({"cost_gap", "min_cost"}));
    add_cost_options(o, opt.costs);

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "train, learn the policy and compare four ordering strategies");
    c->add_option("--out", cmp.out, "run directory");
    c->add_option("--data", cmp.data, "dataset CSV")->required();
    c->add_option("--test-days", cmp.study.test_days, "final days held out for the comparison")->capture_default_str();
    c->add_option("--learn-days", cmp.study.learn_days, "trailing training days used to learn S and s")->capture_default_str();
    c->add_option("--initial", cmp.study.initial_inventory, "initial inventory")->capture_default_str();
    c->add_option("--shelf-life", cmp.study.shelf_life, "shelf life M in days")->capture_default_str();
    c->add_option("--baseline-target", cmp.baseline_target, "baseline fixed target (-1 = 1.8 x initial)")->capture_default_str();
    c->add_option("--step", cmp.study.grid_step, "policy grid step")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--objective", cmp.objective, "policy search objective")
        ->capture_default_str()
        ->check(CLI::IsMember({"cost_gap", "min_cost"}));
    c->add_option("--cv-s-window", cmp.study.s_window_grid, "seasonal windows tuned by blocked CV (empty: none)")
        ->capture_default_str();
    c->add_option("--cv-folds", cmp.study.cv_folds, "cross-validation folds")->capture_default_str();
    cmp.stl.add(c);
    add_gbrt_options(c, cmp.study.model.gbrt);
    add_extend_options(c, cmp.study.extend, cmp.no_drift);
    add_cost_options(c, cmp.study.costs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error(dynamic_cast<const CLI::FileError*>(&e) || dynamic_cast<const CLI::ConfigError*>(&e) ? "config" : "usage",
                    e.what());
        return kExitUsage;
    }

    try {
        if (g->parsed()) cmd_generate(gen, *g);
        if (d->parsed()) cmd_decompose(dec, *d);
        if (t->parsed()) cmd_train(tr, *t);
        if (f->parsed()) cmd_forecast(fc, *f);
        if (s->parsed()) cmd_simulate(sim, *s);
        if (o->parsed()) cmd_optimize(opt, *o);
        if (c->parsed()) cmd_compare(cmp, *c);
    } catch (const CliError& e) {
        print_error(e.kind(), e.what());
        return e.exit_code();
    } catch (const io::SchemaError& e) {
        print_error("schema", e.what(), {{"file", e.file()}, {"row", e.row()}, {"column", e.column()}});
        return kExitInput;
    } catch (const ParameterError& e) {
        print_error("parameter", e.what());
        return kExitParameter;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return kExitInternal;
    }
    return 0;
}
