// Command-line front end: analyze an event log, simulate one, or run the
// Monte Carlo benchmarks.
//
// Exit codes: 0 success, 2 input error, 3 degraded (partial report),
// 4 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cohortlte/bench.hpp"
#include "cohortlte/cohort_panel.hpp"
#include "cohortlte/csv.hpp"
#include "cohortlte/report_io.hpp"
#include "cohortlte/simulate.hpp"
#include "cohortlte/value_metrics.hpp"

namespace fs = std::filesystem;
using namespace cohortlte;

namespace {

enum ExitCode : int { kOk = 0, kInputError = 2, kDegraded = 3, kInternal = 4 };

struct Flags {
    std::string input;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<int> bootstrap;
    std::optional<int> window;
    std::optional<int> horizon;
    std::vector<std::string> methods;
    unsigned jobs = 0;
    std::optional<int> users;
    std::optional<int> sims;
};

std::uint64_t resolve_seed(const Flags& flags) {
    if (flags.seed) return *flags.seed;
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cerr << "no --seed given; using seed " << seed << '\n';
    return seed;
}

std::vector<Method> resolve_methods(const Flags& flags, std::vector<Method> fallback) {
    if (flags.methods.empty()) return fallback;
    std::vector<Method> out;
    for (const auto& name : flags.methods) {
        const Method m = parse_method(name);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    return out;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir.string() + "'");
}

int cmd_analyze(const Flags& flags) {
    const auto records = read_event_csv_file(flags.input);
    const int horizon = infer_horizon(records);

    AnalysisOptions options;
    options.methods = resolve_methods(flags, options.methods);
    if (flags.window) options.window = *flags.window;
    if (flags.horizon) options.erlv.horizon = *flags.horizon;
    const int replicates = flags.bootstrap.value_or(200);
    if (replicates != 0 && replicates < 50) {
        throw InputError("--bootstrap must be 0 (disabled) or at least 50");
    }

    std::cerr << "analyzing " << records.size() << " users over " << horizon << " days\n";
    AnalysisReport report;
    if (replicates == 0) {
        report = analyze(records, options);
    } else {
        report = bootstrap_report(records, replicates, resolve_seed(flags), options, flags.jobs);
    }

    std::ostringstream curves;
    write_report_curves_csv(curves, report);
    std::ostringstream panel;
    write_panel_csv(panel, build_panel(records, horizon, PanelMode::Metric));
    std::ostringstream presence;
    write_panel_csv(presence, build_panel(records, horizon, PanelMode::Presence));

    const fs::path dir(flags.output);
    ensure_dir(dir);
    write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_file(dir / "curves.csv", curves.str());
    write_file(dir / "panel_metric.csv", panel.str());
    write_file(dir / "panel_presence.csv", presence.str());

    if (!report.complete() || report.unstable) {
        std::cerr << "report is partial:\n";
        for (const auto& d : report.diagnostics) std::cerr << "  " << d << '\n';
        return kDegraded;
    }
    return kOk;
}

int cmd_simulate(const Flags& flags) {
    const json config_json = read_json_file(flags.input);
    SimConfig config = config_json.get<SimConfig>();
    if (flags.seed) config.seed = *flags.seed;
    else if (!config_json.contains("seed")) config.seed = resolve_seed(flags);
    if (flags.users) config.n_users = *flags.users;
    validate(config);

    std::cerr << "simulating " << config.n_users << " users over " << config.T << " days\n";
    const auto records = generate(config, flags.jobs);
    std::ostringstream csv;
    write_event_csv(csv, records);
    const int horizon = flags.horizon.value_or(config.T);

    fs::path out(flags.output);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    fs::path truth = out;
    truth.replace_extension(".truth.json");
    write_file(out, csv.str());
    write_file(truth, truth_sidecar(config, horizon).dump(2) + "\n");
    return kOk;
}

int cmd_bench(const Flags& flags) {
    json spec_json = read_json_file(flags.input);
    BenchSpec spec = bench_spec_from_json(spec_json);
    if (flags.sims) spec.n_sims = *flags.sims;
    if (flags.users) spec.n_users = *flags.users;
    if (flags.seed) spec.seed = *flags.seed;
    else if (!spec_json.contains("seed")) spec.seed = resolve_seed(flags);
    if (flags.bootstrap) spec.bootstrap = *flags.bootstrap;
    if (flags.horizon) spec.horizon = *flags.horizon;
    if (flags.window) spec.window = *flags.window;
    spec.methods = resolve_methods(flags, spec.methods);
    spec.jobs = flags.jobs;
    spec.check();

    std::cerr << "running " << spec.n_sims << " simulations of " << spec.n_users << " users\n";
    const BenchReport report = run_bench(spec);

    std::ostringstream rows;
    write_bench_rows_csv(rows, report);
    const fs::path dir(flags.output);
    ensure_dir(dir);
    write_file(dir / "bench_report.json", bench_report_to_json(report).dump(2) + "\n");
    write_file(dir / "bench_sims.csv", rows.str());
    if (report.scenario == Scenario::Scenario2) {
        std::ostringstream curves;
        write_bench_curves_csv(curves, report);
        write_file(dir / "bench_curves.csv", curves.str());
    }
    std::cerr << report.failed_sims << " of " << report.rows.size() << " simulations failed\n";
    return kOk;
}

void report_error(int code, const std::string& message) {
    std::cerr << json{{"error", message}, {"exit_code", code}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-term effect and lifetime value estimation for staggered A/B tests"};
    app.require_subcommand(1);
    Flags flags;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--input", flags.input, "Input file")->required();
        sub->add_option("--output", flags.output, "Output path")->required();
        sub->add_option("--seed", flags.seed, "Random seed");
        sub->add_option("--jobs", flags.jobs, "Worker threads (0 = all cores)");
    };

    auto* analyze_cmd = app.add_subcommand("analyze", "Estimate STE, LTE and dERLV from an event log");
    common(analyze_cmd);
    analyze_cmd->add_option("--bootstrap", flags.bootstrap, "Bootstrap replicates (0 disables)");
    analyze_cmd->add_option("--window", flags.window, "Short-term window in days")->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--horizon", flags.horizon, "Lifetime-value horizon T*")->check(CLI::NonNegativeNumber);
    analyze_cmd->add_option("--methods", flags.methods, "Subset of CCD, DiD, MC")->delimiter(',');

    auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic event log");
    common(simulate_cmd);
    simulate_cmd->add_option("--users", flags.users, "Number of users")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--horizon", flags.horizon, "Horizon of the ground-truth dERLV")->check(CLI::NonNegativeNumber);

    auto* bench_cmd = app.add_subcommand("bench", "Run a Monte Carlo benchmark");
    common(bench_cmd);
    bench_cmd->add_option("--sims", flags.sims, "Number of simulations")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--users", flags.users, "Users per simulation")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--bootstrap", flags.bootstrap, "Bootstrap replicates per simulation");
    bench_cmd->add_option("--window", flags.window, "Short-term window in days")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--horizon", flags.horizon, "Fixed dERLV horizon T*")->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--methods", flags.methods, "Subset of CCD, DiD, MC")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error(kInputError, e.what());
        return kInputError;
    }

    try {
        if (analyze_cmd->parsed()) return cmd_analyze(flags);
        if (simulate_cmd->parsed()) return cmd_simulate(flags);
        return cmd_bench(flags);
    } catch (const InputError& e) {
        report_error(kInputError, e.what());
        return kInputError;
    } catch (const ConfigError& e) {
        report_error(kInputError, e.what());
        return kInputError;
    } catch (const json::exception& e) {
        report_error(kInputError, e.what());
        return kInputError;
    } catch (const std::exception& e) {
        report_error(kInternal, e.what());
        return kInternal;
    }
}
