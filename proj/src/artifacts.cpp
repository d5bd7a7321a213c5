#include "mcgp/harness.hpp"

#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <set>
#include <tuple>

namespace mcgp {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json to_json(const Vector& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

json to_json(const Matrix& m)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        a.push_back(to_json(Vector(m.row(i).transpose())));
    return a;
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json nan_safe(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json manifest(const RunResult& r)
{
    json m;
    json cfg = json::object();
    for (const auto& [k, v] : r.config.entries())
        cfg[k] = v;
    m["config"] = cfg;
    m["seed"] = r.config.seed;
    m["versions"] = {
        {"mcgp", kVersion},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "."
                      + std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "."
                      + std::to_string(BOOST_VERSION % 100)},
    };
    m["kernel"] = {{"variance", r.params.variance}, {"lengthscales", to_json(r.params.lengthscales)}};
    m["fit"] = {{"lml", r.fit.lml}, {"iterations", r.fit.iterations}, {"converged", r.fit.converged}};
    m["jitter"] = r.jitter;
    m["metrics"] = {{"mse", nan_safe(r.metrics.mse)},
                    {"ci_width", nan_safe(r.metrics.mean_ci_width)},
                    {"iat", r.iat_applicable ? nan_safe(r.metrics.mean_iat) : json(nullptr)},
                    {"ess_per_sec", r.iat_applicable ? nan_safe(r.metrics.ess_per_second) : json(nullptr)},
                    {"n_samples", r.metrics.n_samples},
                    {"zero_variance_components", r.zero_variance_components},
                    {"boundary_fraction", nan_safe(r.boundary_fraction)}};
    if (r.batch_stats) {
        const SampleBatch& b = *r.batch_stats;
        m["sampler"] = {{"method", b.method},
                        {"burn_in", b.burn_in},
                        {"degraded", b.degraded},
                        {"step_size", nan_safe(b.step_size)},
                        {"mean_accept", nan_safe(b.mean_accept)},
                        {"mean_tree_depth", nan_safe(b.mean_tree_depth)},
                        {"divergences", b.divergences},
                        {"burn_in_divergences", b.burn_in_divergences},
                        {"divergence_flag", b.divergence_flag},
                        {"gradient_evals", b.gradient_evals}};
    }
    m["wall_clock"] = {{"finished_utc", utc_timestamp()},
                       {"sampler_seconds", r.metrics.runtime_seconds},
                       {"prediction_seconds", r.prediction_seconds},
                       {"total_seconds", r.total_seconds}};
    return m;
}

std::string predictions_document(const RunResult& r)
{
    json p;
    p["experiment"] = r.config.experiment;
    p["method"] = r.config.method;
    p["n_virtual"] = r.config.n_virtual;
    p["seed"] = r.config.seed;
    p["dim"] = r.test_points.cols();
    p["points"] = to_json(r.test_points);
    p["mean"] = to_json(r.prediction.mean);
    p["lower"] = to_json(r.prediction.lower);
    p["upper"] = to_json(r.prediction.upper);
    p["truth"] = to_json(r.truth);
    return p.dump() + "\n";
}

struct RowKey {
    std::string experiment;
    std::string method;
    int n_virtual;
    bool operator<(const RowKey& o) const
    {
        return std::tie(experiment, method, n_virtual) < std::tie(o.experiment, o.method, o.n_virtual);
    }
};

} // namespace

std::string artifact_stem(const ExperimentConfig& cfg)
{
    const int nv = cfg.method == method::kUnconstrained ? 0 : cfg.n_virtual;
    return cfg.experiment + "_" + cfg.method + "_" + std::to_string(nv) + "_s" + std::to_string(cfg.seed);
}

void emit_artifacts(const RunResult& r, const std::string& out_dir)
{
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const std::string stem = artifact_stem(r.config);
    write_file(dir / (stem + ".metrics.csv"), std::string(kMetricsHeader) + "\n" + metrics_csv_row(r) + "\n");
    write_file(dir / (stem + ".predictions.json"), predictions_document(r));
    write_file(dir / (stem + ".manifest.json"), manifest(r).dump(2) + "\n");
}

std::vector<std::string> validate_predictions_json(const std::string& text)
{
    std::vector<std::string> errors;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        return {std::string("not valid JSON: ") + e.what()};
    }
    if (!doc.is_object())
        return {"document must be an object"};

    auto require = [&](const char* key, auto pred, const char* what) {
        if (!doc.contains(key))
            errors.push_back(std::string("missing field '") + key + "'");
        else if (!pred(doc[key]))
            errors.push_back(std::string("field '") + key + "' must be " + what);
    };
    auto is_string = [](const json& v) { return v.is_string(); };
    auto is_uint = [](const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); };
    auto is_num_array = [](const json& v) {
        return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
    };
    require("experiment", is_string, "a string");
    require("method", is_string, "a string");
    require("n_virtual", is_uint, "a nonnegative integer");
    require("seed", is_uint, "a nonnegative integer");
    require("dim", is_uint, "a nonnegative integer");
    require("points", [](const json& v) { return v.is_array(); }, "an array");
    for (const char* k : {"mean", "lower", "upper", "truth"})
        require(k, is_num_array, "an array of numbers");
    if (!errors.empty())
        return errors;

    const std::size_t n = doc["points"].size();
    const auto dim = doc["dim"].get<std::size_t>();
    for (const auto& pt : doc["points"]) {
        if (!is_num_array(pt) || pt.size() != dim) {
            errors.push_back("every point must be an array of 'dim' numbers");
            break;
        }
    }
    for (const char* k : {"mean", "lower", "upper", "truth"}) {
        if (doc[k].size() != n)
            errors.push_back(std::string("field '") + k + "' must have one entry per point");
    }
    if (errors.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = doc["lower"][i].get<double>();
            const double hi = doc["upper"][i].get<double>();
            if (lo > hi) {
                errors.push_back("lower exceeds upper at point " + std::to_string(i));
                break;
            }
        }
    }
    const std::set<std::string> allowed{"experiment", "method", "n_virtual", "seed", "dim",
                                        "points",     "mean",   "lower",     "upper", "truth"};
    for (const auto& item : doc.items()) {
        if (!allowed.count(item.key()))
            errors.push_back("unexpected field '" + item.key() + "'");
    }
    return errors;
}

std::vector<ExperimentConfig> suite_grid(const ExperimentConfig& base)
{
    const auto& exps = base.suite_experiments.empty()
                           ? std::vector<std::string>(experiment_ids().begin(), experiment_ids().begin() + 6)
                           : base.suite_experiments;
    const auto& meths = base.suite_methods.empty() ? method_ids() : base.suite_methods;
    std::map<RowKey, ExperimentConfig> rows;
    for (const auto& e : exps) {
        for (const auto& m : meths) {
            if (m == method::kUnconstrained) {
                ExperimentConfig c = base;
                c.experiment = e;
                c.method = m;
                c.n_virtual = 0;
                rows.emplace(RowKey{e, m, 0}, c);
                continue;
            }
            for (int k : base.suite_n_virtual) {
                ExperimentConfig c = base;
                c.experiment = e;
                c.method = m;
                c.n_virtual = k;
                rows.emplace(RowKey{e, m, k}, c);
            }
        }
    }
    std::vector<ExperimentConfig> out;
    out.reserve(rows.size());
    for (auto& [key, cfg] : rows)
        out.push_back(std::move(cfg));
    return out;
}

std::vector<SuiteRow> run_suite(const ExperimentConfig& base)
{
    base.validate();
    const fs::path dir(base.out_dir);
    fs::create_directories(dir);
    SetupCache cache;
    std::vector<SuiteRow> rows;
    json summary = json::array();
    for (const auto& cfg : suite_grid(base)) {
        SuiteRow row{cfg.experiment, cfg.method, cfg.n_virtual, cfg.seed, {}, {}};
        json entry = {{"experiment", cfg.experiment},
                      {"method", cfg.method},
                      {"n_virtual", cfg.n_virtual},
                      {"seed", cfg.seed}};
        try {
            const RunResult r = run_experiment(cfg, &cache);
            emit_artifacts(r, base.out_dir);
            row.csv_row = metrics_csv_row(r);
            entry["status"] = "ok";
            entry["seconds"] = r.total_seconds;
        } catch (const std::exception& e) {
            row.error = e.what();
            row.csv_row = cfg.experiment + "," + cfg.method + "," + std::to_string(cfg.n_virtual)
                          + ",NA,NA,NA,NA,NA," + std::to_string(cfg.seed);
            entry["status"] = "error";
            entry["error"] = row.error;
        }
        summary.push_back(entry);
        rows.push_back(std::move(row));
    }
    std::string csv = std::string(kMetricsHeader) + "\n";
    for (const auto& r : rows)
        csv += r.csv_row + "\n";
    write_file(dir / "summary.csv", csv);
    json doc = {{"rows", summary}, {"finished_utc", utc_timestamp()}};
    write_file(dir / "suite.json", doc.dump(2) + "\n");
    return rows;
}

std::string collect_report(const std::string& dir_name, const std::string& format)
{
    if (format != "csv" && format != "json")
        throw ConfigError("report: format must be csv or json");
    const fs::path dir(dir_name);
    if (!fs::is_directory(dir))
        throw ConfigError("report: '" + dir_name + "' is not a directory");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 12 && name.ends_with(".metrics.csv"))
            files.push_back(entry.path());
    }
    std::map<std::tuple<std::string, std::string, int, std::string>, std::vector<std::string>> rows;
    for (const auto& f : files) {
        std::istringstream is(read_file(f));
        std::string line;
        std::getline(is, line);
        if (line != kMetricsHeader)
            throw ConfigError("report: '" + f.string() + "' does not carry the metrics header");
        while (std::getline(is, line)) {
            if (line.empty())
                continue;
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ','))
                cells.push_back(cell);
            if (cells.size() != 9)
                throw ConfigError("report: malformed row in '" + f.string() + "'");
            rows[{cells[0], cells[1], std::stoi(cells[2]), cells[8]}] = cells;
        }
    }

    if (format == "csv") {
        std::string out = std::string(kMetricsHeader) + "\n";
        for (const auto& [key, cells] : rows) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                out += (i ? "," : "") + cells[i];
            out += "\n";
        }
        return out;
    }
    static const char* names[] = {"experiment", "method", "n_virtual", "mse", "ci_width",
                                  "iat",        "ess_per_sec", "runtime_s", "seed"};
    json arr = json::array();
    for (const auto& [key, cells] : rows) {
        json obj;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& c = cells[i];
            if (i <= 1)
                obj[names[i]] = c;
            else if (c == "NA")
                obj[names[i]] = nullptr;
            else if (i == 2 || i == 8)
                obj[names[i]] = std::stoull(c);
            else
                obj[names[i]] = std::stod(c);
        }
        arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
}

} // namespace mcgp
