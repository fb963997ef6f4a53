// Command-line front end: fit SSANOVA models from CSV, evaluate components,
// group differences with confidence bands, summaries, and synthetic data.
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssanova/data.hpp"
#include "ssanova/inference.hpp"
#include "ssanova/model_io.hpp"
#include "ssanova/solver.hpp"
#include "ssanova/svg.hpp"

namespace fs = std::filesystem;
using namespace ssanova;

namespace {

// ------------------------------------------------------------- config ----

// Every tunable in one place. Resolution order per field:
// command-line flag > config-file value > built-in default.
struct RunConfig {
    std::string input;
    std::string out_dir = ".";
    double grid_minutes = 1.0;
    double level = 0.95;
    std::string transform = "log1p";
    std::string criterion = "gcv";
    int knots = 0;          // 0 = auto
    std::uint64_t seed = 1;
    bool seed_set = false;  // simulate defaults to the scenario seed otherwise
    bool plot = false;
    // CSV schema
    std::string subject_col = "subject";
    std::string day_col = "day";
    std::string minute_col = "minute";
    std::string vm_col = "vm";
    std::string time_format = "minutes";
    std::vector<std::string> factor_cols = {"group"};
    std::string aggregate = "stack_days";
    // model structure
    std::string group_factor = "group";
    std::vector<std::string> extra_factors;
    bool random_intercept = true;
    // simulate
    int sim_subjects_per_group = 10;
    int sim_minutes_per_subject = 144;
    double sim_sigma_b = 0.5;
    double sim_sigma_eps = 1.0;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ArgumentError("config key '" + key + "': expected a boolean, got '" +
                        v + "'");
}

double parse_num(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ArgumentError("config key '" + key + "': expected a number, got '" +
                            v + "'");
    }
}

void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& val) {
    if (key == "input") cfg.input = val;
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "grid_minutes") cfg.grid_minutes = parse_num(key, val);
    else if (key == "level") cfg.level = parse_num(key, val);
    else if (key == "transform") cfg.transform = val;
    else if (key == "criterion") cfg.criterion = val;
    else if (key == "knots") cfg.knots = static_cast<int>(parse_num(key, val));
    else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_num(key, val));
        cfg.seed_set = true;
    } else if (key == "plot") cfg.plot = parse_bool(key, val);
    else if (key == "subject_col") cfg.subject_col = val;
    else if (key == "day_col") cfg.day_col = val;
    else if (key == "minute_col") cfg.minute_col = val;
    else if (key == "vm_col") cfg.vm_col = val;
    else if (key == "time_format") cfg.time_format = val;
    else if (key == "factor_cols") cfg.factor_cols = split_list(val);
    else if (key == "aggregate") cfg.aggregate = val;
    else if (key == "group_factor") cfg.group_factor = val;
    else if (key == "extra_factors") cfg.extra_factors = split_list(val);
    else if (key == "random_intercept") cfg.random_intercept = parse_bool(key, val);
    else if (key == "sim_subjects_per_group")
        cfg.sim_subjects_per_group = static_cast<int>(parse_num(key, val));
    else if (key == "sim_minutes_per_subject")
        cfg.sim_minutes_per_subject = static_cast<int>(parse_num(key, val));
    else if (key == "sim_sigma_b") cfg.sim_sigma_b = parse_num(key, val);
    else if (key == "sim_sigma_eps") cfg.sim_sigma_eps = parse_num(key, val);
    else throw ArgumentError("unknown config key '" + key + "'");
}

void load_config_file(const std::string& path, RunConfig& cfg) {
    std::istringstream in(read_text(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos)
            line.erase(pos);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("config line " + std::to_string(lineno) +
                                ": expected key = value");
        apply_config_key(cfg, trim(line.substr(0, eq)),
                         trim(line.substr(eq + 1)));
    }
}

std::string num(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + v[i];
    return out;
}

void print_config(const RunConfig& c) {
    std::cout << "input = " << c.input << "\n"
              << "out_dir = " << c.out_dir << "\n"
              << "grid_minutes = " << num(c.grid_minutes) << "\n"
              << "level = " << num(c.level) << "\n"
              << "transform = " << c.transform << "\n"
              << "criterion = " << c.criterion << "\n"
              << "knots = " << c.knots << "\n"
              << "seed = " << c.seed << "\n"
              << "plot = " << (c.plot ? "true" : "false") << "\n"
              << "subject_col = " << c.subject_col << "\n"
              << "day_col = " << c.day_col << "\n"
              << "minute_col = " << c.minute_col << "\n"
              << "vm_col = " << c.vm_col << "\n"
              << "time_format = " << c.time_format << "\n"
              << "factor_cols = " << join(c.factor_cols) << "\n"
              << "aggregate = " << c.aggregate << "\n"
              << "group_factor = " << c.group_factor << "\n"
              << "extra_factors = " << join(c.extra_factors) << "\n"
              << "random_intercept = " << (c.random_intercept ? "true" : "false")
              << "\n"
              << "sim_subjects_per_group = " << c.sim_subjects_per_group << "\n"
              << "sim_minutes_per_subject = " << c.sim_minutes_per_subject << "\n"
              << "sim_sigma_b = " << num(c.sim_sigma_b) << "\n"
              << "sim_sigma_eps = " << num(c.sim_sigma_eps) << "\n";
}

// ------------------------------------------------------------ plumbing ---

void validate_common(const RunConfig& cfg) {
    if (!(cfg.level > 0.0 && cfg.level < 1.0))
        throw ArgumentError("level must be in (0,1)");
    if (!(cfg.grid_minutes > 0.0))
        throw ArgumentError("grid-minutes must be positive");
    if (cfg.knots < 0) throw ArgumentError("knots must be >= 0");
    if (cfg.aggregate != "stack_days" && cfg.aggregate != "mean_over_days")
        throw ArgumentError(
            "aggregate must be 'stack_days' or 'mean_over_days'");
}

SchemaConfig schema_of(const RunConfig& cfg) {
    SchemaConfig s;
    s.subject = cfg.subject_col;
    s.day = cfg.day_col;
    s.minute = cfg.minute_col;
    s.vm = cfg.vm_col;
    s.factor_columns = cfg.factor_cols;
    s.time_format = cfg.time_format;
    return s;
}

// Malformed or unreadable input files are I/O failures (exit 2), unlike
// semantic validation problems found later in checked tables (exit 1).
ObservationTable read_table(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ArgumentError("--input is required");
    ReadReport rep;
    ObservationTable table;
    try {
        table = read_csv(cfg.input, schema_of(cfg), &rep);
    } catch (const DataError& e) {
        throw IoError(e.what());
    }
    if (rep.n_dropped > 0)
        std::cout << "dropped " << rep.n_dropped
                  << " rows with missing " << cfg.vm_col << "\n";
    if (cfg.aggregate == "mean_over_days")
        table = aggregate_daily(table, AggregateMode::mean_over_days);
    return table;
}

FittedModel read_model(const RunConfig& cfg) {
    if (cfg.input.empty())
        throw ArgumentError("--input is required (model file)");
    try {
        return load_model(cfg.input);
    } catch (const DataError& e) {
        throw IoError(e.what());
    }
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec)
        throw IoError("cannot create directory '" + cfg.out_dir +
                      "': " + ec.message());
    return (fs::path(cfg.out_dir) / name).string();
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                c == '.')
                   ? c
                   : '_';
    return out;
}

ModelSpec spec_of(const RunConfig& cfg) {
    ModelSpec spec;
    if (cfg.group_factor.empty()) {
        spec.terms.push_back(TermSpec::make(TermKind::constant));
        spec.terms.push_back(TermSpec::make(TermKind::time_linear));
        spec.terms.push_back(TermSpec::make(TermKind::time_smooth));
        for (const auto& f : cfg.extra_factors)
            spec.terms.push_back(TermSpec::make(TermKind::nominal_main, f));
        if (cfg.random_intercept)
            spec.terms.push_back(TermSpec::make(TermKind::random_intercept));
    } else {
        spec = ModelSpec::standard(cfg.group_factor, cfg.extra_factors,
                                   cfg.random_intercept);
    }
    spec.transform = parse_transform(cfg.transform);
    spec.criterion = parse_criterion(cfg.criterion);
    spec.knot_count = cfg.knots;
    spec.seed = cfg.seed;
    return spec;
}

// CSV emission for the three curve shapes.
std::string curve_csv_time(const CurveEstimate& c) {
    std::string out = "grid_minute,value,se,lower,upper\n";
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        out += num(c.grid[i]) + "," + num(c.value[i]) + "," + num(c.se[i]) +
               "," + num(c.lower[i]) + "," + num(c.upper[i]) + "\n";
    return out;
}

std::string curve_csv_nominal(const CurveEstimate& c) {
    std::string out = "level,value,se,lower,upper\n";
    for (std::size_t i = 0; i < c.labels.size(); ++i)
        out += c.labels[i] + "," + num(c.value[i]) + "," + num(c.se[i]) + "," +
               num(c.lower[i]) + "," + num(c.upper[i]) + "\n";
    return out;
}

std::string curves_csv_by_level(const std::vector<std::string>& levels,
                                const std::vector<CurveEstimate>& curves) {
    std::string out = "level,grid_minute,value,se,lower,upper\n";
    for (std::size_t l = 0; l < curves.size(); ++l)
        for (std::size_t i = 0; i < curves[l].grid.size(); ++i)
            out += levels[l] + "," + num(curves[l].grid[i]) + "," +
                   num(curves[l].value[i]) + "," + num(curves[l].se[i]) + "," +
                   num(curves[l].lower[i]) + "," + num(curves[l].upper[i]) +
                   "\n";
    return out;
}

SvgSeries to_series(const std::string& label, const CurveEstimate& c) {
    SvgSeries s;
    s.label = label;
    s.x = c.grid;
    s.y = c.value;
    s.lo = c.lower;
    s.hi = c.upper;
    return s;
}

// Factors whose levels a full prediction must pin down.
std::set<std::string> factors_read(const FittedModel& model) {
    std::set<std::string> names;
    for (const auto& t : model.layout)
        if (t.factor_index >= 0)
            names.insert(model.plan.factors[t.factor_index].name);
    return names;
}

// --------------------------------------------------------- subcommands ---

void run_fit(const RunConfig& cfg) {
    ObservationTable table = read_table(cfg);
    FittedModel model = fit(table, spec_of(cfg));
    FitReport rep = summarize_fit(model);

    std::string model_path = out_path(cfg, "model.json");
    save_model(model, model_path);
    write_text_atomic(out_path(cfg, "fit_report.json"), report_to_json(rep));

    std::printf("n            %d\n", rep.n);
    std::printf("subjects     %d\n", rep.subjects);
    std::printf("knots        %d\n", rep.knots);
    std::printf("null dim     %d\n", rep.null_dim);
    std::printf("transform    %s\n", rep.transform.c_str());
    std::printf("%-12s %.6g\n", rep.criterion.c_str(), rep.criterion_value);
    std::printf("lambda       %.6g\n", rep.lambda);
    if (rep.sigma_b > 0) std::printf("lambda_b     %.6g\n", rep.lambda_b);
    for (const auto& [name, th] : rep.theta)
        std::printf("theta[%s] %.6g\n", name.c_str(), th);
    std::printf("R^2          %.4f\n", rep.r_squared);
    std::printf("sigma_eps    %.6g\n", rep.sigma_eps);
    if (rep.sigma_b > 0) std::printf("sigma_b      %.6g\n", rep.sigma_b);
    std::printf("trace(A)     %.4f\n", rep.trace_A);
    std::printf("model        %s\n", model_path.c_str());
}

void run_components(const RunConfig& cfg) {
    FittedModel model = read_model(cfg);
    std::vector<double> grid = uniform_grid_minutes(cfg.grid_minutes);

    for (const auto& t : model.layout) {
        if (t.kind == TermKind::random_intercept) continue;
        std::string content;
        if (t.kind == TermKind::nominal_main) {
            content = curve_csv_nominal(
                eval_component(model, t.name, {}, cfg.level));
        } else if (t.kind == TermKind::time_by_nominal_linear ||
                   t.kind == TermKind::time_by_nominal_smooth) {
            const auto& levels = model.plan.factors[t.factor_index].levels;
            std::vector<CurveEstimate> slices;
            for (const auto& lv : levels)
                slices.push_back(
                    eval_component(model, t.name, grid, cfg.level, lv));
            content = curves_csv_by_level(levels, slices);
        } else {
            content = curve_csv_time(
                eval_component(model, t.name, grid, cfg.level));
        }
        std::string path = out_path(cfg, sanitize(t.name) + ".csv");
        write_text_atomic(path, content);
        std::cout << "wrote " << path << "\n";
    }

    if (cfg.plot) {
        std::set<std::string> read = factors_read(model);
        std::map<std::string, std::string> at;
        for (const auto& f : model.plan.factors)
            if (read.count(f.name)) at[f.name] = f.levels.front();

        const TermLayout* group = nullptr;
        for (const auto& t : model.layout)
            if (t.kind == TermKind::nominal_main) { group = &t; break; }

        std::vector<SvgSeries> series;
        if (group) {
            for (const auto& lv :
                 model.plan.factors[group->factor_index].levels) {
                at[model.plan.factors[group->factor_index].name] = lv;
                series.push_back(
                    to_series(lv, predict(model, grid, at, cfg.level)));
            }
        } else {
            series.push_back(
                to_series("fit", predict(model, grid, at, cfg.level)));
        }
        SvgOptions opt;
        opt.title = "Fitted daily profiles";
        opt.y_label = std::string("response (") +
                      transform_name(model.plan.spec.transform) + " scale)";
        std::string path = out_path(cfg, "components.svg");
        write_text_atomic(path, render_svg(series, opt));
        std::cout << "wrote " << path << "\n";
    }
}

void run_diff(const RunConfig& cfg, const std::string& g,
              const std::string& g_star) {
    FittedModel model = read_model(cfg);
    std::vector<double> grid = uniform_grid_minutes(cfg.grid_minutes);
    CurveEstimate delta = difference_curve(model, g, g_star, grid, cfg.level);
    RegionSet regions = significant_regions(delta);

    std::string tag = sanitize(g) + "_vs_" + sanitize(g_star);
    std::string csv_path = out_path(cfg, "diff_" + tag + ".csv");
    write_text_atomic(csv_path, curve_csv_time(delta));
    std::string json_path = out_path(cfg, "regions_" + tag + ".json");
    write_text_atomic(json_path, regions_to_json(regions));
    std::cout << "wrote " << csv_path << "\n" << "wrote " << json_path << "\n";

    if (cfg.plot) {
        SvgOptions opt;
        opt.title = "Difference: " + g + " vs " + g_star;
        opt.y_label = "delta";
        opt.zero_line = true;
        std::string path = out_path(cfg, "diff_" + tag + ".svg");
        write_text_atomic(
            path, render_svg({to_series(g + " - " + g_star, delta)}, opt));
        std::cout << "wrote " << path << "\n";
    }

    if (regions.intervals.empty()) {
        std::cout << "no significant regions at level " << cfg.level << "\n";
    } else {
        std::cout << regions.intervals.size() << " significant region(s):";
        for (const auto& [a, b] : regions.intervals)
            std::cout << " [" << a << "," << b << "]";
        std::cout << "\n";
    }
}

void run_predict(const RunConfig& cfg,
                 const std::vector<std::string>& assigns) {
    FittedModel model = read_model(cfg);
    std::map<std::string, std::string> at;
    for (const auto& a : assigns) {
        auto eq = a.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("expected factor=level, got '" + a + "'");
        at[trim(a.substr(0, eq))] = trim(a.substr(eq + 1));
    }
    std::vector<double> grid = uniform_grid_minutes(cfg.grid_minutes);
    CurveEstimate curve = predict(model, grid, at, cfg.level);
    std::string path = out_path(cfg, "predict.csv");
    write_text_atomic(path, curve_csv_time(curve));
    std::cout << "wrote " << path << "\n";
}

void run_summary(const RunConfig& cfg) {
    ObservationTable table = read_table(cfg);
    SummaryTable st = summarize(table, cfg.group_factor);

    std::string csv = "group,n_rows,n_subjects,vm_mean,vm_std,vm_min,"
                      "vm_median,vm_max,time_mean,time_std,time_min,"
                      "time_median,time_max";
    if (!st.groups.empty())
        for (const auto& [f, _] : st.groups.front().binary_percent)
            csv += ",pct_" + f;
    csv += "\n";
    std::printf("%-12s %8s %10s %10s %10s %10s\n", st.group_factor.c_str(),
                "n_rows", "subjects", "vm_mean", "vm_std", "vm_median");
    for (const auto& gs : st.groups) {
        csv += gs.group + "," + std::to_string(gs.n_rows) + "," +
               std::to_string(gs.n_subjects) + "," + num(gs.vm_mean) + "," +
               num(gs.vm_std) + "," + num(gs.vm_min) + "," +
               num(gs.vm_median) + "," + num(gs.vm_max) + "," +
               num(gs.time_mean) + "," + num(gs.time_std) + "," +
               num(gs.time_min) + "," + num(gs.time_median) + "," +
               num(gs.time_max);
        for (const auto& [_, pct] : gs.binary_percent) csv += "," + num(pct);
        csv += "\n";
        std::printf("%-12s %8zu %10zu %10.4g %10.4g %10.4g\n",
                    gs.group.c_str(), gs.n_rows, gs.n_subjects, gs.vm_mean,
                    gs.vm_std, gs.vm_median);
    }
    std::string path = out_path(cfg, "summary.csv");
    write_text_atomic(path, csv);
    std::cout << "wrote " << path << "\n";
}

void run_simulate(const RunConfig& cfg) {
    SyntheticScenario sc = SyntheticScenario::default_scenario();
    sc.sigma_b = cfg.sim_sigma_b;
    sc.sigma_eps = cfg.sim_sigma_eps;
    sc.subjects_per_group = cfg.sim_subjects_per_group;
    sc.minutes_per_subject = cfg.sim_minutes_per_subject;
    if (cfg.seed_set) sc.seed = cfg.seed;

    auto [table, truth] = synthesize(sc);

    SchemaConfig schema = schema_of(cfg);
    schema.time_format = "minutes";
    schema.factor_columns.clear();
    for (const auto& f : table.factors) schema.factor_columns.push_back(f.name);
    std::string csv_path = out_path(cfg, "activity.csv");
    write_csv(table, csv_path, schema);

    // Truth samples on the generated minute grid, joinable on (minute, group).
    std::ostringstream js;
    js << "{\n \"eta0\": " << num(truth.eta0) << ",\n \"groups\": [";
    for (std::size_t g = 0; g < truth.groups.size(); ++g)
        js << (g ? "," : "") << "\"" << truth.groups[g] << "\"";
    js << "],\n \"minutes\": [";
    std::vector<double> minutes;
    for (int k = 0; k < sc.minutes_per_subject; ++k)
        minutes.push_back(1440.0 * k / sc.minutes_per_subject);
    for (std::size_t i = 0; i < minutes.size(); ++i)
        js << (i ? "," : "") << num(minutes[i]);
    js << "],\n \"eta1\": [";
    for (std::size_t i = 0; i < minutes.size(); ++i)
        js << (i ? "," : "") << num(truth.eta1(minutes[i]));
    js << "],\n \"eta2\": [";
    for (std::size_t g = 0; g < truth.eta2.size(); ++g)
        js << (g ? "," : "") << num(truth.eta2[g]);
    js << "],\n \"eta\": {";
    for (std::size_t g = 0; g < truth.groups.size(); ++g) {
        js << (g ? "," : "") << "\n  \"" << truth.groups[g] << "\": [";
        for (std::size_t i = 0; i < minutes.size(); ++i)
            js << (i ? "," : "")
               << num(truth.eta(minutes[i], static_cast<int>(g)));
        js << "]";
    }
    if (truth.groups.empty()) {
        js << "\n  \"\": [";
        for (std::size_t i = 0; i < minutes.size(); ++i)
            js << (i ? "," : "") << num(truth.eta(minutes[i], 0));
        js << "]";
    }
    js << "\n }\n}\n";
    std::string truth_path = out_path(cfg, "truth.json");
    write_text_atomic(truth_path, js.str());

    std::cout << "wrote " << csv_path << " (" << table.n() << " rows)\n"
              << "wrote " << truth_path << "\n";
}

// ------------------------------------------------------------- wiring ----

// One bundle of flag storage + option handles per subcommand, so explicit
// command-line use is detectable for the per-field precedence rule.
struct Flags {
    std::string input, config, out_dir, transform, criterion;
    double grid_minutes = 0, level = 0;
    int knots = 0;
    std::uint64_t seed = 0;
    bool plot = false, print = false;

    CLI::Option *o_input = nullptr, *o_out = nullptr, *o_grid = nullptr,
                *o_level = nullptr, *o_transform = nullptr,
                *o_criterion = nullptr, *o_knots = nullptr, *o_seed = nullptr,
                *o_plot = nullptr;

    void attach_common(CLI::App* cmd, const std::string& input_desc) {
        if (!input_desc.empty())
            o_input = cmd->add_option("-i,--input", input, input_desc);
        cmd->add_option("-c,--config", config,
                        "flat key = value configuration file");
        o_out = cmd->add_option("-o,--out-dir", out_dir,
                                "output directory (default .)");
        cmd->add_flag("--print-config", print,
                      "print the resolved configuration and exit");
    }
    void attach_grid(CLI::App* cmd) {
        o_grid = cmd->add_option("--grid-minutes", grid_minutes,
                                 "grid step in minutes (default 1)");
        o_level = cmd->add_option("--level", level,
                                  "confidence level (default 0.95)");
    }
    void attach_fit(CLI::App* cmd) {
        o_transform = cmd->add_option("--transform", transform,
                                      "response transform: identity|log1p");
        o_criterion = cmd->add_option("--criterion", criterion,
                                      "smoothing criterion: gcv|gml");
        o_knots = cmd->add_option("--knots", knots, "knot count (0 = auto)");
        o_seed = cmd->add_option("--seed", seed, "RNG seed");
    }
    void attach_plot(CLI::App* cmd) {
        o_plot = cmd->add_flag("--plot", plot, "also render an SVG plot");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config.empty()) load_config_file(config, cfg);
        auto given = [](CLI::Option* o) { return o && o->count() > 0; };
        if (given(o_input)) cfg.input = input;
        if (given(o_out)) cfg.out_dir = out_dir;
        if (given(o_grid)) cfg.grid_minutes = grid_minutes;
        if (given(o_level)) cfg.level = level;
        if (given(o_transform)) cfg.transform = transform;
        if (given(o_criterion)) cfg.criterion = criterion;
        if (given(o_knots)) cfg.knots = knots;
        if (given(o_seed)) {
            cfg.seed = seed;
            cfg.seed_set = true;
        }
        if (given(o_plot)) cfg.plot = plot;
        validate_common(cfg);
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-effects smoothing spline ANOVA for daily activity "
                 "profiles"};
    app.require_subcommand(1);

    Flags f_fit, f_comp, f_diff, f_pred, f_summ, f_sim;
    std::string diff_g, diff_gstar;
    std::vector<std::string> pred_assigns;

    CLI::App* c_fit = app.add_subcommand("fit", "fit a model from a CSV file");
    f_fit.attach_common(c_fit, "input CSV file");
    f_fit.attach_fit(c_fit);

    CLI::App* c_comp = app.add_subcommand(
        "components", "evaluate ANOVA components of a fitted model");
    f_comp.attach_common(c_comp, "fitted model JSON file");
    f_comp.attach_grid(c_comp);
    f_comp.attach_plot(c_comp);

    CLI::App* c_diff = app.add_subcommand(
        "diff", "group-difference curve with confidence band and regions");
    f_diff.attach_common(c_diff, "fitted model JSON file");
    f_diff.attach_grid(c_diff);
    f_diff.attach_plot(c_diff);
    c_diff->add_option("group", diff_g, "group level g")->required();
    c_diff->add_option("reference", diff_gstar, "reference level g*")
        ->required();

    CLI::App* c_pred = app.add_subcommand(
        "predict", "full fixed-effect prediction at a covariate assignment");
    f_pred.attach_common(c_pred, "fitted model JSON file");
    f_pred.attach_grid(c_pred);
    c_pred->add_option("assign", pred_assigns,
                       "factor=level assignments (one per factor)");

    CLI::App* c_summ =
        app.add_subcommand("summary", "per-group summary of a CSV file");
    f_summ.attach_common(c_summ, "input CSV file");

    CLI::App* c_sim = app.add_subcommand(
        "simulate", "generate a synthetic cohort with known truth");
    f_sim.attach_common(c_sim, "");
    f_sim.o_seed = c_sim->add_option("--seed", f_sim.seed, "RNG seed");

    try {
        app.parse(argc, argv);

        auto dispatch = [&](CLI::App* cmd, Flags& f, auto&& run) {
            if (!cmd->parsed()) return;
            RunConfig cfg = f.resolve();
            if (f.print)
                print_config(cfg);
            else
                run(cfg);
        };
        dispatch(c_fit, f_fit, [&](const RunConfig& c) { run_fit(c); });
        dispatch(c_comp, f_comp,
                 [&](const RunConfig& c) { run_components(c); });
        dispatch(c_diff, f_diff,
                 [&](const RunConfig& c) { run_diff(c, diff_g, diff_gstar); });
        dispatch(c_pred, f_pred,
                 [&](const RunConfig& c) { run_predict(c, pred_assigns); });
        dispatch(c_summ, f_summ, [&](const RunConfig& c) { run_summary(c); });
        dispatch(c_sim, f_sim, [&](const RunConfig& c) { run_simulate(c); });
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
