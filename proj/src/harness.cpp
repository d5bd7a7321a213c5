#include "mcgp/harness.hpp"

#include "mcgp/applications.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mcgp {

namespace {

using Clock = std::chrono::steady_clock;

// Stream ids under the run seed.
constexpr std::uint64_t kStreamInputs = 1;
constexpr std::uint64_t kStreamNoise = 2;
constexpr std::uint64_t kStreamSobol = 3;
constexpr std::uint64_t kStreamSampler = 100;
constexpr std::uint64_t kStreamPredict = 200;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Re-throws module errors with the pipeline stage prepended.
template <typename F>
auto staged(const std::string& stage, F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const NumericalError& e) {
        throw NumericalError(stage + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(stage + ": " + e.what());
    }
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
    std::istringstream is(value);
    T out{};
    is >> out;
    if (is.fail() || !is.eof())
        throw ConfigError("config: cannot parse '" + value + "' for key '" + key + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw ConfigError("config: expected a boolean for key '" + key + "', got '" + value + "'");
}

template <typename T>
std::string join(const std::vector<T>& v)
{
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << v[i];
    return os.str();
}

std::uint64_t method_index(const std::string& m)
{
    const auto& ids = method_ids();
    const auto it = std::find(ids.begin(), ids.end(), m);
    return static_cast<std::uint64_t>(it - ids.begin());
}

std::string format_number(double v)
{
    if (!std::isfinite(v))
        return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

Matrix uniform_points(Eigen::Index n, const DomainBox& box, RngStream& rng)
{
    Matrix unit(n, box.dim());
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < box.dim(); ++j)
            unit(i, j) = rng.uniform();
    return box.from_unit(unit);
}

/// Groups row indices by the value in column `col` so each ODE/PDE solve
/// serves every point sharing that parameter.
std::map<double, std::vector<Eigen::Index>> group_by(const Matrix& pts, int col)
{
    std::map<double, std::vector<Eigen::Index>> out;
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        out[pts(i, col)].push_back(i);
    return out;
}

// SIR inputs are (t, R0).
Vector sir_truth(const Matrix& pts)
{
    Vector out(pts.rows());
    for (const auto& [r0, idx] : group_by(pts, 1)) {
        Vector times(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k)
            times[static_cast<Eigen::Index>(k)] = pts(idx[k], 0);
        const Vector r = solve_sir(r0, times);
        for (std::size_t k = 0; k < idx.size(); ++k)
            out[idx[k]] = r[static_cast<Eigen::Index>(k)];
    }
    return out;
}

// Convection-diffusion inputs are (x, t, v) with velocity b = -v, which makes
// u nondecreasing in every input.
Vector convdiff_truth(const Matrix& pts)
{
    Vector out(pts.rows());
    for (const auto& [v, idx] : group_by(pts, 2)) {
        const ConvDiffSolution sol(-v);
        for (auto i : idx)
            out[i] = sol(pts(i, 0), pts(i, 1));
    }
    return out;
}

DomainBox sir_box()
{
    const SirConfig c;
    return DomainBox(Vector{{c.t_range[0], c.r0_range[0]}}, Vector{{c.t_range[1], c.r0_range[1]}});
}

DomainBox convdiff_box()
{
    const ConvDiffConfig c;
    return DomainBox(Vector{{0.0, 0.0, -c.b_range[1]}}, Vector{{1.0, c.t_final, -c.b_range[0]}});
}

constexpr int kApplicationObservations = 64;

} // namespace

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

const std::vector<SyntheticSpec>& synthetic_specs()
{
    static const std::vector<SyntheticSpec> specs = [] {
        const DomainBox line = DomainBox::cube(1, -5.0, 5.0);
        const DomainBox square = DomainBox::cube(2, -5.0, 5.0);
        std::vector<SyntheticSpec> s;
        s.push_back({"1d-1", 4, 1e-1, line, [](const Eigen::Ref<const Vector>& x) { return std::log(x[0] + 5.1); }});
        s.push_back({"1d-2", 64, 1e-1, line, [](const Eigen::Ref<const Vector>& x) {
                         const double t = x[0];
                         if (t < -3.0)
                             return t + 3.0;
                         if (t < 3.0)
                             return 0.0;
                         return t - 3.0;
                     }});
        s.push_back({"1d-3", 50, 3e-1, line,
                     [](const Eigen::Ref<const Vector>& x) { return 4.0 / (1.0 + std::exp(4.0 - x[0])); }});
        s.push_back({"2d-1", 16, 1e-3, square, [](const Eigen::Ref<const Vector>& x) { return std::sin(x[1]); }});
        s.push_back({"2d-2", 16, 1e-3, square, [](const Eigen::Ref<const Vector>& x) {
                         return std::log(x[0] + 6.0) * (1.0 - std::cos(x[1]));
                     }});
        s.push_back({"2d-3", 64, 1e-3, square, [](const Eigen::Ref<const Vector>& x) {
                         const double c = std::cos(x[1]);
                         return x[0] * c * c;
                     }});
        return s;
    }();
    return specs;
}

const SyntheticSpec& synthetic_spec(const std::string& id)
{
    for (const auto& s : synthetic_specs()) {
        if (s.id == id)
            return s;
    }
    throw ConfigError("unknown synthetic experiment '" + id + "'");
}

const std::vector<std::string>& experiment_ids()
{
    static const std::vector<std::string> ids{"1d-1", "1d-2", "1d-3", "2d-1", "2d-2", "2d-3", "sir", "convdiff"};
    return ids;
}

const std::vector<std::string>& method_ids()
{
    static const std::vector<std::string> ids{method::kUnconstrained, method::kTruncatedGibbs, method::kTruncatedNuts,
                                              method::kReluGibbs,     method::kReluNuts,       method::kRlrto};
    return ids;
}

bool is_synthetic(const std::string& experiment)
{
    return experiment != "sir" && experiment != "convdiff";
}

Dataset generate_dataset(const SyntheticSpec& spec, std::uint64_t seed, std::optional<double> noise_override,
                         const std::vector<double>& fixed_points)
{
    const double noise = noise_override.value_or(spec.noise_sd);
    if (!(noise >= 0.0))
        throw ArgumentError("generate_dataset: noise sd must be nonnegative");
    Dataset data;
    data.noise_sd = noise;
    if (spec.id == "1d-1" && !fixed_points.empty()) {
        data.inputs.resize(static_cast<Eigen::Index>(fixed_points.size()), 1);
        for (std::size_t i = 0; i < fixed_points.size(); ++i)
            data.inputs(static_cast<Eigen::Index>(i), 0) = fixed_points[i];
    } else {
        RngStream rng(seed, kStreamInputs);
        data.inputs = latin_hypercube(spec.n_observations, spec.box, rng);
    }
    RngStream noise_rng(seed, kStreamNoise);
    data.values.resize(data.inputs.rows());
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
        const Vector x = data.inputs.row(i).transpose();
        data.values[i] = spec.f(x) + (noise > 0.0 ? noise * noise_rng.normal() : 0.0);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const
{
    const auto& exps = experiment_ids();
    const auto& meths = method_ids();
    auto check_experiment = [&](const std::string& e) {
        if (std::find(exps.begin(), exps.end(), e) == exps.end())
            throw ConfigError("config: unknown experiment '" + e + "'");
    };
    auto check_method = [&](const std::string& m) {
        if (std::find(meths.begin(), meths.end(), m) == meths.end())
            throw ConfigError("config: unknown method '" + m + "'");
    };
    check_experiment(experiment);
    check_method(method);
    for (const auto& e : suite_experiments)
        check_experiment(e);
    for (const auto& m : suite_methods)
        check_method(m);
    if (method != method::kUnconstrained && n_virtual < 1)
        throw ConfigError("config: n_virtual must be positive for constrained methods");
    if (method != method::kUnconstrained && is_synthetic(experiment)
        && std::find(kSyntheticVirtualCounts.begin(), kSyntheticVirtualCounts.end(), n_virtual)
               == kSyntheticVirtualCounts.end())
        throw ConfigError("config: synthetic experiments use 4, 8, 16, 32, 64 or 128 virtual points");
    if (n_samples < 1 || burn_in < 0 || n_samples <= burn_in)
        throw ConfigError("config: need samples > burn_in >= 0");
    if (n_samples - burn_in < 100)
        throw ConfigError("config: at least 100 retained samples are needed for the diagnostics");
    if (fit_max_iter < 0 || !(fit_learning_rate > 0.0))
        throw ConfigError("config: fit_max_iter must be >= 0 and fit_lr > 0");
    if (noise_sd && !(*noise_sd >= 0.0))
        throw ConfigError("config: noise_sd must be nonnegative");
    if (noise_model != "known" && noise_model != "none")
        throw ConfigError("config: noise_model must be 'known' or 'none'");
    if (grid_1d < 2 || grid_2d < 2 || grid_3d < 2)
        throw ConfigError("config: test grids need at least two points per axis");
    if (nuts_max_depth < 1 || !(nuts_target_accept > 0.0 && nuts_target_accept < 1.0))
        throw ConfigError("config: invalid NUTS settings");
    if (lsq_max_iter < 1)
        throw ConfigError("config: lsq_max_iter must be positive");
    for (int k : suite_n_virtual) {
        if (k < 1)
            throw ConfigError("config: suite virtual-point counts must be positive");
    }
    if (out_dir.empty())
        throw ConfigError("config: output directory must not be empty");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const
{
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("experiment", experiment);
    e.emplace_back("method", method);
    e.emplace_back("n_virtual", std::to_string(n_virtual));
    e.emplace_back("samples", std::to_string(n_samples));
    e.emplace_back("burn_in", std::to_string(burn_in));
    e.emplace_back("seed", std::to_string(seed));
    e.emplace_back("out", out_dir);
    e.emplace_back("timing", timing ? "wall" : "off");
    e.emplace_back("warm_start", warm_start ? "true" : "false");
    e.emplace_back("fit_max_iter", std::to_string(fit_max_iter));
    e.emplace_back("fit_lr", format_number(fit_learning_rate));
    e.emplace_back("noise_sd", noise_sd ? format_number(*noise_sd) : "default");
    e.emplace_back("noise_model", noise_model);
    e.emplace_back("points_1d1", join(points_1d1));
    e.emplace_back("grid_1d", std::to_string(grid_1d));
    e.emplace_back("grid_2d", std::to_string(grid_2d));
    e.emplace_back("grid_3d", std::to_string(grid_3d));
    e.emplace_back("nuts_max_depth", std::to_string(nuts_max_depth));
    e.emplace_back("nuts_target_accept", format_number(nuts_target_accept));
    e.emplace_back("lsq_max_iter", std::to_string(lsq_max_iter));
    e.emplace_back("suite_experiments", join(suite_experiments));
    e.emplace_back("suite_methods", join(suite_methods));
    e.emplace_back("suite_n_virtual", join(suite_n_virtual));
    return e;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    if (key == "experiment")
        cfg.experiment = value;
    else if (key == "method")
        cfg.method = value;
    else if (key == "n_virtual")
        cfg.n_virtual = parse_number<int>(key, value);
    else if (key == "samples")
        cfg.n_samples = parse_number<int>(key, value);
    else if (key == "burn_in")
        cfg.burn_in = parse_number<int>(key, value);
    else if (key == "seed")
        cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "out")
        cfg.out_dir = value;
    else if (key == "timing") {
        if (value != "wall" && value != "off")
            throw ConfigError("config: timing must be 'wall' or 'off'");
        cfg.timing = value == "wall";
    } else if (key == "warm_start")
        cfg.warm_start = parse_bool(key, value);
    else if (key == "fit_max_iter")
        cfg.fit_max_iter = parse_number<int>(key, value);
    else if (key == "fit_lr")
        cfg.fit_learning_rate = parse_number<double>(key, value);
    else if (key == "noise_sd") {
        if (value == "default")
            cfg.noise_sd.reset();
        else
            cfg.noise_sd = parse_number<double>(key, value);
    } else if (key == "noise_model")
        cfg.noise_model = value;
    else if (key == "points_1d1") {
        cfg.points_1d1.clear();
        for (const auto& item : split_list(value))
            cfg.points_1d1.push_back(parse_number<double>(key, item));
    } else if (key == "grid_1d")
        cfg.grid_1d = parse_number<int>(key, value);
    else if (key == "grid_2d")
        cfg.grid_2d = parse_number<int>(key, value);
    else if (key == "grid_3d")
        cfg.grid_3d = parse_number<int>(key, value);
    else if (key == "nuts_max_depth")
        cfg.nuts_max_depth = parse_number<int>(key, value);
    else if (key == "nuts_target_accept")
        cfg.nuts_target_accept = parse_number<double>(key, value);
    else if (key == "lsq_max_iter")
        cfg.lsq_max_iter = parse_number<int>(key, value);
    else if (key == "suite_experiments")
        cfg.suite_experiments = split_list(value);
    else if (key == "suite_methods")
        cfg.suite_methods = split_list(value);
    else if (key == "suite_n_virtual") {
        cfg.suite_n_virtual.clear();
        for (const auto& item : split_list(value))
            cfg.suite_n_virtual.push_back(parse_number<int>(key, item));
    } else
        throw ConfigError("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base)
{
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg)
{
    ExperimentSetup s;
    s.experiment = cfg.experiment;
    staged("data", [&] {
        if (is_synthetic(cfg.experiment)) {
            const SyntheticSpec& spec = synthetic_spec(cfg.experiment);
            s.data = generate_dataset(spec, cfg.seed, cfg.noise_sd, cfg.points_1d1);
            s.box = spec.box;
            s.constrained_dims = {0};
            const int per_axis = spec.box.dim() == 1 ? cfg.grid_1d : cfg.grid_2d;
            s.test_points = grid_points(spec.box, per_axis);
            s.truth.resize(s.test_points.rows());
            for (Eigen::Index i = 0; i < s.test_points.rows(); ++i)
                s.truth[i] = spec.f(s.test_points.row(i).transpose());
            return;
        }
        const bool sir = cfg.experiment == "sir";
        s.box = sir ? sir_box() : convdiff_box();
        s.constrained_dims = sir ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 2};
        RngStream rng(cfg.seed, kStreamInputs);
        s.data.inputs = uniform_points(kApplicationObservations, s.box, rng);
        s.data.values = sir ? sir_truth(s.data.inputs) : convdiff_truth(s.data.inputs);
        s.data.noise_sd = cfg.noise_sd.value_or(0.0);
        if (s.data.noise_sd > 0.0) {
            RngStream noise_rng(cfg.seed, kStreamNoise);
            for (Eigen::Index i = 0; i < s.data.values.size(); ++i)
                s.data.values[i] += s.data.noise_sd * noise_rng.normal();
        }
        s.test_points = grid_points(s.box, sir ? cfg.grid_2d : cfg.grid_3d);
        s.truth = sir ? sir_truth(s.test_points) : convdiff_truth(s.test_points);
    });

    staged("fit", [&] {
        s.mean_const = s.data.values.mean();
        s.noise_variance = cfg.noise_model == "known" ? s.data.noise_sd * s.data.noise_sd : 0.0;
        FitOptions opts;
        opts.noise_variance = s.noise_variance;
        opts.learning_rate = cfg.fit_learning_rate;
        opts.max_iter = cfg.fit_max_iter;
        opts.mean_const = s.mean_const;
        s.fit = fit_hyperparameters(s.data, default_initial_params(s.data), opts);
    });
    return s;
}

const ExperimentSetup& SetupCache::get(const ExperimentConfig& cfg)
{
    const auto key = std::make_tuple(cfg.experiment, cfg.seed, cfg.noise_model);
    auto it = entries_.find(key);
    if (it == entries_.end())
        it = entries_.emplace(key, prepare_experiment(cfg)).first;
    return it->second;
}

VirtualDesign virtual_design_for(const ExperimentSetup& setup, const ExperimentConfig& cfg)
{
    const std::uint64_t scramble = RngStream(cfg.seed, kStreamSobol)();
    return make_virtual_design(sobol_points(cfg.n_virtual, setup.box, scramble), setup.constrained_dims);
}

RunResult run_experiment(const ExperimentConfig& cfg, SetupCache* cache)
{
    cfg.validate();
    const auto start = Clock::now();
    std::optional<ExperimentSetup> local;
    const ExperimentSetup* setup;
    if (cache) {
        setup = &cache->get(cfg);
    } else {
        local = prepare_experiment(cfg);
        setup = &*local;
    }

    RunResult r;
    r.config = cfg;
    r.params = setup->fit.params;
    r.fit = setup->fit;
    r.test_points = setup->test_points;
    r.truth = setup->truth;
    const int retained = cfg.n_samples - cfg.burn_in;
    const GpModel model = staged("model", [&] {
        return GpModel(setup->fit.params, setup->data, setup->mean_const, setup->noise_variance);
    });
    r.jitter = model.jitter();

    RngStream predict_rng(cfg.seed, kStreamPredict + method_index(cfg.method));
    if (cfg.method == method::kUnconstrained) {
        r.config.n_virtual = 0;
        const auto t0 = Clock::now();
        r.prediction = staged("predict", [&] {
            return predict_unconstrained(model, setup->test_points, retained, predict_rng, setup->truth);
        });
        r.prediction_seconds = seconds_since(t0);
        r.metrics.mean_iat = std::numeric_limits<double>::quiet_NaN();
        r.metrics.ess_per_second = std::numeric_limits<double>::quiet_NaN();
        r.metrics.runtime_seconds = r.prediction_seconds;
    } else {
        const ConstrainedProblem prob = staged("problem", [&] {
            return build_problem(model, virtual_design_for(*setup, cfg));
        });
        SamplerBudget budget;
        const bool rlrto = cfg.method == method::kRlrto;
        budget.n_samples = rlrto ? retained : cfg.n_samples - cfg.burn_in;
        budget.burn_in = rlrto ? 0 : cfg.burn_in;
        budget.warm_start = cfg.warm_start;
        budget.nuts.max_depth = cfg.nuts_max_depth;
        budget.nuts.target_accept = cfg.nuts_target_accept;
        budget.lsq.max_iter = cfg.lsq_max_iter;
        if (rlrto)
            r.config.burn_in = 0;

        RngStream sampler_rng(cfg.seed, kStreamSampler + method_index(cfg.method));
        SampleBatch batch = staged("sample", [&] {
            return sample_constrained(cfg.method, prob, setup->data.values, budget, sampler_rng);
        });
        const auto t0 = Clock::now();
        r.prediction = staged("predict", [&] {
            return predict_constrained(prob, setup->data.values, batch, setup->test_points, predict_rng,
                                       setup->truth);
        });
        r.prediction_seconds = seconds_since(t0);

        const MeanIat mi = staged("diagnostics", [&] { return mean_iat(batch.draws); });
        r.iat_applicable = true;
        r.zero_variance_components = mi.zero_variance_components;
        r.metrics.mean_iat = mi.mean;
        r.metrics.runtime_seconds = batch.seconds;
        r.metrics.ess_per_second = batch.seconds > 0.0
                                       ? ess_per_second(static_cast<double>(batch.size()), mi.mean, batch.seconds)
                                       : std::numeric_limits<double>::infinity();
        const Matrix pushed = is_relu_method(cfg.method) ? Matrix(batch.draws.cwiseMax(0.0)) : batch.draws;
        r.boundary_fraction = (pushed.array() == 0.0).rowwise().any().cast<double>().mean();
        batch.draws.resize(0, 0); // only the statistics are kept
        r.batch_stats = std::move(batch);
    }
    r.metrics.n_samples = retained;
    r.metrics.mse = r.prediction.mse.value_or(std::numeric_limits<double>::quiet_NaN());
    r.metrics.mean_ci_width = (r.prediction.upper - r.prediction.lower).mean();
    r.total_seconds = seconds_since(start);
    return r;
}

std::string metrics_csv_row(const RunResult& r)
{
    const auto& c = r.config;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream os;
    os << c.experiment << ',' << c.method << ',' << c.n_virtual << ',' << format_number(r.metrics.mse) << ','
       << format_number(r.metrics.mean_ci_width) << ',' << format_number(r.iat_applicable ? r.metrics.mean_iat : nan)
       << ',' << format_number(c.timing && r.iat_applicable ? r.metrics.ess_per_second : nan) << ','
       << format_number(c.timing ? r.metrics.runtime_seconds : nan) << ',' << c.seed;
    return os.str();
}

} // namespace mcgp
