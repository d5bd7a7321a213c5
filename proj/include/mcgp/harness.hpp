#ifndef MCGP_HARNESS_HPP
#define MCGP_HARNESS_HPP

#include "mcgp/constrained.hpp"
#include "mcgp/design.hpp"
#include "mcgp/diagnostics.hpp"
#include "mcgp/gp_core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace mcgp {

/// Configuration problems (unknown keys, bad values, inconsistent settings).
class ConfigError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

struct SyntheticSpec {
    std::string id;
    int n_observations = 0;
    double noise_sd = 0.0;
    DomainBox box;
    std::function<double(const Eigen::Ref<const Vector>&)> f;
};

/// The six benchmark functions, in id order.
const std::vector<SyntheticSpec>& synthetic_specs();
const SyntheticSpec& synthetic_spec(const std::string& id);

/// Every experiment id, synthetic ones first.
const std::vector<std::string>& experiment_ids();
const std::vector<std::string>& method_ids();
bool is_synthetic(const std::string& experiment);

/// Virtual-point counts allowed for the synthetic benchmarks.
inline constexpr std::array<int, 6> kSyntheticVirtualCounts{4, 8, 16, 32, 64, 128};

/// Default observation locations for 1d-1.
inline const std::vector<double> kDefault1d1Points{-4.5, -2.0, 1.0, 4.0};

/// Observation inputs from a Latin hypercube (1d-1: `fixed_points` if given),
/// values f(inputs) plus N(0, noise_sd^2) noise.
Dataset generate_dataset(const SyntheticSpec& spec, std::uint64_t seed,
                         std::optional<double> noise_override = std::nullopt,
                         const std::vector<double>& fixed_points = kDefault1d1Points);

struct ExperimentConfig {
    std::string experiment = "1d-1";
    std::string method = method::kRlrto;
    int n_virtual = 32;
    int n_samples = 51000;
    int burn_in = 1000;
    std::uint64_t seed = 0;
    std::string out_dir = "out";

    /// When false, wall-clock columns are written as NA so metrics files are
    /// reproducible byte for byte; timings still go to the manifest.
    bool timing = true;
    bool warm_start = true;
    int fit_max_iter = 20000;
    double fit_learning_rate = 0.01;
    std::optional<double> noise_sd;
    /// "known": the GP carries the data's noise variance; "none": the
    /// interpolating model with jitter only.
    std::string noise_model = "known";
    std::vector<double> points_1d1 = kDefault1d1Points;
    int grid_1d = 200;
    int grid_2d = 50;
    int grid_3d = 15;
    int nuts_max_depth = 10;
    double nuts_target_accept = 0.8;
    int lsq_max_iter = 5000;

    // Suite grid.
    std::vector<std::string> suite_experiments;
    std::vector<std::string> suite_methods;
    std::vector<int> suite_n_virtual{4, 8, 16, 32, 64, 128};

    /// Checks ranges and ids; throws ConfigError.
    void validate() const;

    /// Key=value echo of every setting, in a stable order.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Applies one key=value setting. Throws ConfigError on unknown keys or
/// unparsable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Parses a flat key=value file ('#' starts a comment).
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});

/// Data, fitted model and evaluation grid shared by all methods of one
/// (experiment, seed).
struct ExperimentSetup {
    std::string experiment;
    Dataset data;
    double mean_const = 0.0;
    double noise_variance = 0.0;
    FitResult fit;
    DomainBox box;
    std::vector<int> constrained_dims;
    Matrix test_points;
    Vector truth;
};

/// Caches ExperimentSetup per (experiment, seed, noise model) so every method
/// of a suite uses bit-identical hyperparameters.
class SetupCache {
public:
    const ExperimentSetup& get(const ExperimentConfig& cfg);

private:
    std::map<std::tuple<std::string, std::uint64_t, std::string>, ExperimentSetup> entries_;
};

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

/// Virtual design for a run: scrambled Sobol prefix of length n_virtual.
VirtualDesign virtual_design_for(const ExperimentSetup& setup, const ExperimentConfig& cfg);

struct RunResult {
    ExperimentConfig config;
    MetricsReport metrics;
    bool iat_applicable = false;
    int zero_variance_components = 0;
    Matrix test_points;
    Vector truth;
    ConstrainedPrediction prediction;
    KernelParams params;
    FitResult fit;
    /// Sampler statistics; empty for unconstrained runs.
    std::optional<SampleBatch> batch_stats;
    /// Fraction of derivative draws with a component exactly zero after the
    /// method's push-forward (ReLU for the ReLU methods). NaN when unconstrained.
    double boundary_fraction = std::numeric_limits<double>::quiet_NaN();
    double total_seconds = 0.0;
    double prediction_seconds = 0.0;
    double jitter = 0.0;
};

RunResult run_experiment(const ExperimentConfig& cfg, SetupCache* cache = nullptr);

/// CSV header shared by run and suite outputs.
inline constexpr const char* kMetricsHeader = "experiment,method,n_virtual,mse,ci_width,iat,ess_per_sec,runtime_s,seed";

std::string metrics_csv_row(const RunResult& r);

/// One entry per suite row. `error` is empty on success.
struct SuiteRow {
    std::string experiment;
    std::string method;
    int n_virtual = 0;
    std::uint64_t seed = 0;
    std::string csv_row;
    std::string error;
};

/// Row keys for a suite grid: unconstrained once per experiment (n_virtual 0),
/// every constrained method at every virtual count; sorted.
std::vector<ExperimentConfig> suite_grid(const ExperimentConfig& base);

/// Runs the grid, writing per-row artifacts and summary.csv / suite.json to
/// base.out_dir. Failing rows are recorded and the suite continues.
std::vector<SuiteRow> run_suite(const ExperimentConfig& base);

/// File stem used for a run's artifacts.
std::string artifact_stem(const ExperimentConfig& cfg);

/// Writes <stem>.metrics.csv, <stem>.predictions.json and <stem>.manifest.json.
void emit_artifacts(const RunResult& r, const std::string& out_dir);

/// Checks a predictions document against the fixed schema; returns the list
/// of violations (empty when valid).
std::vector<std::string> validate_predictions_json(const std::string& text);

/// Collects every *.metrics.csv under `dir` into one table (csv or json).
std::string collect_report(const std::string& dir, const std::string& format);

} // namespace mcgp

#endif
