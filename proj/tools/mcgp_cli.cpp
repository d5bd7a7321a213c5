// Command-line driver: run one experiment, a suite grid, or collect reports.

#include "mcgp/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct Overrides {
    std::string config;
    std::string experiment;
    std::string method;
    std::string n_virtual;
    std::string samples;
    std::string burn_in;
    std::string seed;
    std::string out;
    bool no_timing = false;
    std::vector<std::string> sets;
};

mcgp::ExperimentConfig resolve(const Overrides& o)
{
    mcgp::ExperimentConfig cfg;
    if (!o.config.empty())
        cfg = mcgp::load_config(o.config);
    const std::pair<const char*, const std::string*> flags[] = {
        {"experiment", &o.experiment}, {"method", &o.method}, {"n_virtual", &o.n_virtual}, {"samples", &o.samples},
        {"burn_in", &o.burn_in},       {"seed", &o.seed},     {"out", &o.out},
    };
    for (const auto& [key, value] : flags) {
        if (!value->empty())
            mcgp::apply_setting(cfg, key, *value);
    }
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw mcgp::ConfigError("--set expects key=value, got '" + kv + "'");
        mcgp::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.no_timing)
        cfg.timing = false;
    cfg.validate();
    return cfg;
}

void add_run_flags(CLI::App* app, Overrides& o)
{
    app->add_option("--experiment", o.experiment, "Experiment id (1d-1 .. 2d-3, sir, convdiff)");
    app->add_option("--method", o.method, "Method id");
    app->add_option("--n-virtual", o.n_virtual, "Number of virtual points");
    app->add_option("--samples", o.samples, "Total iterations including burn-in");
    app->add_option("--burn-in", o.burn_in, "Burn-in iterations (ignored by rlrto)");
    app->add_option("--seed", o.seed, "Run seed");
    app->add_option("--out", o.out, "Output directory");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monotonicity-constrained GP surrogates with virtual points"};
    app.require_subcommand(1);

    Overrides run_o;
    auto* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
    run->add_option("--config", run_o.config, "key=value config file");
    add_run_flags(run, run_o);
    run->add_flag("--no-timing", run_o.no_timing, "Write NA for wall-clock columns");
    run->add_option("--set", run_o.sets, "Extra key=value setting (repeatable)");

    Overrides suite_o;
    auto* suite = app.add_subcommand("suite", "Run the experiment x method x virtual-count grid");
    suite->add_option("--config", suite_o.config, "key=value config file")->required();
    suite->add_option("--out", suite_o.out, "Output directory")->required();
    suite->add_option("--samples", suite_o.samples, "Total iterations including burn-in");
    suite->add_option("--burn-in", suite_o.burn_in, "Burn-in iterations");
    suite->add_option("--seed", suite_o.seed, "Run seed");
    suite->add_flag("--no-timing", suite_o.no_timing, "Write NA for wall-clock columns");
    suite->add_option("--set", suite_o.sets, "Extra key=value setting (repeatable)");

    std::string report_in;
    std::string report_format = "csv";
    auto* report = app.add_subcommand("report", "Collect metrics files from a directory");
    report->add_option("--in", report_in, "Directory with *.metrics.csv files")->required();
    report->add_option("--format", report_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            const mcgp::ExperimentConfig cfg = resolve(run_o);
            const mcgp::RunResult r = mcgp::run_experiment(cfg);
            mcgp::emit_artifacts(r, cfg.out_dir);
            std::cout << mcgp::kMetricsHeader << '\n' << mcgp::metrics_csv_row(r) << '\n';
        } else if (*suite) {
            const mcgp::ExperimentConfig cfg = resolve(suite_o);
            const auto rows = mcgp::run_suite(cfg);
            int failures = 0;
            for (const auto& row : rows) {
                if (!row.error.empty()) {
                    ++failures;
                    std::cerr << row.experiment << ' ' << row.method << ' ' << row.n_virtual << ": " << row.error
                              << '\n';
                }
            }
            std::cout << rows.size() << " rows, " << failures << " failed; summary in " << cfg.out_dir
                      << "/summary.csv\n";
        } else if (*report) {
            std::cout << mcgp::collect_report(report_in, report_format);
        }
    } catch (const mcgp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const mcgp::ArgumentError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
