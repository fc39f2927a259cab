#include "rkhsid/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rkhsid::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    return in;
}

json read_json_file(const std::string& path) {
    std::ifstream in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

// two-column CSV with a header line
std::vector<std::pair<double, double>> read_two_column_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV: " + path);
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ConfigError("malformed CSV row in " + path);
        try {
            rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ConfigError("non-numeric CSV row in " + path + ": " + line);
        }
    }
    if (rows.empty()) throw ConfigError("CSV has no data rows: " + path);
    return rows;
}

}  // namespace

void write_signal_csv(const Signal& s, const std::string& path) {
    s.validate();
    std::ofstream out = open_out(path);
    out << "t,value\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_double(s.time_of(i)) << "," << format_double(s.samples[i]) << "\n";
}

Signal read_signal_csv(const std::string& path) {
    const auto rows = read_two_column_csv(path);
    Signal s;
    if (rows.size() == 1) {
        s.start_index = static_cast<std::int64_t>(std::llround(rows[0].first));
        s.sample_period = 1.0;
        s.samples = {rows[0].second};
        return s;
    }
    const double period = rows[1].first - rows[0].first;
    if (!(period > 0.0)) throw ConfigError("signal timestamps must increase: " + path);
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const double step = rows[i].first - rows[i - 1].first;
        if (std::abs(step - period) > 1e-9 * std::max(1.0, std::abs(period)))
            throw ConfigError("signal must be uniformly sampled: " + path);
    }
    s.sample_period = period;
    const double idx = rows[0].first / period;
    if (std::abs(idx - std::round(idx)) > 1e-6)
        throw ConfigError("signal start time must be a multiple of the period: " + path);
    s.start_index = static_cast<std::int64_t>(std::llround(idx));
    s.samples.reserve(rows.size());
    for (const auto& r : rows) s.samples.push_back(r.second);
    s.validate();
    return s;
}

std::string sidecar_path_for(const std::string& dataset_csv) {
    fs::path p(dataset_csv);
    p.replace_extension(".json");
    return p.string();
}

namespace {

const char* kind_name(RegressorSpec::Kind k) {
    switch (k) {
        case RegressorSpec::Kind::finite_memory: return "finite-memory";
        case RegressorSpec::Kind::truncated_infinite: return "truncated-infinite";
        case RegressorSpec::Kind::sampled_trajectory: return "sampled-trajectory";
    }
    return "?";
}

}  // namespace

void write_dataset(const std::vector<double>& timestamps, const std::vector<double>& outputs,
                   const RegressorSpec& spec, const std::string& csv_path) {
    if (timestamps.size() != outputs.size()) throw Error("dataset timestamp/output mismatch");
    std::ofstream out = open_out(csv_path);
    out << "t,y\n";
    for (std::size_t i = 0; i < timestamps.size(); ++i)
        out << format_double(timestamps[i]) << "," << format_double(outputs[i]) << "\n";

    json j;
    json r;
    r["kind"] = kind_name(spec.kind);
    switch (spec.kind) {
        case RegressorSpec::Kind::finite_memory:
            r["memory"] = spec.memory;
            r["zero_pad"] = spec.zero_pad;
            break;
        case RegressorSpec::Kind::truncated_infinite:
            r["horizon"] = spec.horizon;
            r["zero_pad"] = spec.zero_pad;
            break;
        case RegressorSpec::Kind::sampled_trajectory:
            r["grid"] = spec.grid;
            if (spec.window) r["window"] = *spec.window;
            break;
    }
    r["input"] = spec.input_path;
    j["regressors"] = std::move(r);
    std::ofstream side = open_out(sidecar_path_for(csv_path));
    side << j.dump(2) << "\n";
}

RegressorSpec read_regressor_sidecar(const std::string& sidecar_path) {
    const json j = read_json_file(sidecar_path);
    if (!j.contains("regressors")) throw ConfigError("sidecar missing 'regressors': " + sidecar_path);
    const json& r = j.at("regressors");
    RegressorSpec spec;
    const std::string kind = r.at("kind").get<std::string>();
    if (kind == "finite-memory") {
        spec.kind = RegressorSpec::Kind::finite_memory;
        spec.memory = r.at("memory").get<int>();
        spec.zero_pad = r.value("zero_pad", false);
    } else if (kind == "truncated-infinite") {
        spec.kind = RegressorSpec::Kind::truncated_infinite;
        spec.horizon = r.at("horizon").get<int>();
        spec.zero_pad = r.value("zero_pad", false);
    } else if (kind == "sampled-trajectory") {
        spec.kind = RegressorSpec::Kind::sampled_trajectory;
        spec.grid = r.at("grid").get<std::vector<double>>();
        if (r.contains("window")) spec.window = r.at("window").get<double>();
    } else {
        throw ConfigError("unknown regressor kind: " + kind);
    }
    spec.input_path = r.at("input").get<std::string>();
    return spec;
}

Dataset load_dataset(const std::string& csv_path) {
    const auto rows = read_two_column_csv(csv_path);
    const std::string sidecar = sidecar_path_for(csv_path);
    const RegressorSpec spec = read_regressor_sidecar(sidecar);

    fs::path input = fs::path(sidecar).parent_path() / spec.input_path;
    const Signal u = read_signal_csv(input.string());

    Dataset data;
    data.outputs.resize(static_cast<Eigen::Index>(rows.size()));
    data.timestamps.reserve(rows.size());
    data.locations.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double t = rows[i].first;
        data.timestamps.push_back(t);
        data.outputs(static_cast<Eigen::Index>(i)) = rows[i].second;
        switch (spec.kind) {
            case RegressorSpec::Kind::finite_memory:
            case RegressorSpec::Kind::truncated_infinite: {
                const double ti = t / u.sample_period;
                if (std::abs(ti - std::round(ti)) > 1e-6)
                    throw ConfigError("dataset time " + std::to_string(t) +
                                      " is not on the input sampling grid");
                const auto tt = static_cast<std::int64_t>(std::llround(ti));
                const bool finite = spec.kind == RegressorSpec::Kind::finite_memory;
                auto locs = make_regressors(u,
                                            finite ? std::optional<int>(spec.memory)
                                                   : std::nullopt,
                                            spec.horizon, tt, tt, spec.zero_pad);
                data.locations.push_back(std::move(locs.front()));
                break;
            }
            case RegressorSpec::Kind::sampled_trajectory:
                data.locations.push_back(sample_past_trajectory(u, t, spec.grid, spec.window));
                break;
        }
    }
    data.validate();
    return data;
}

// --- model -----------------------------------------------------------------------

namespace {

json location_to_json(const InputLocation& loc) {
    json j;
    j["kind"] = loc.kind == InputLocation::Kind::finite_memory        ? "finite-memory"
                : loc.kind == InputLocation::Kind::truncated_infinite ? "truncated-infinite"
                                                                      : "sampled-trajectory";
    j["values"] = loc.values;
    if (!loc.grid.empty()) j["grid"] = loc.grid;
    return j;
}

InputLocation location_from_json(const json& j) {
    InputLocation loc;
    const std::string kind = j.at("kind").get<std::string>();
    loc.kind = kind == "finite-memory"        ? InputLocation::Kind::finite_memory
               : kind == "truncated-infinite" ? InputLocation::Kind::truncated_infinite
                                              : InputLocation::Kind::sampled_trajectory;
    loc.values = j.at("values").get<std::vector<double>>();
    if (j.contains("grid")) loc.grid = j.at("grid").get<std::vector<double>>();
    return loc;
}

}  // namespace

void save_model(const rn::RNModel& model, const std::string& path) {
    json j;
    j["kernel"] = json::parse(kernels::to_json_string(model.kernel, -1));
    j["gamma"] = model.gamma;
    j["residual"] = model.residual;
    json locs = json::array();
    for (const auto& loc : model.locations) locs.push_back(location_to_json(loc));
    j["locations"] = std::move(locs);
    j["coefficients"] = std::vector<double>(model.coefficients.data(),
                                            model.coefficients.data() + model.coefficients.size());
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

rn::RNModel load_model(const std::string& path) {
    const json j = read_json_file(path);
    rn::RNModel model;
    model.kernel = kernels::kernel_from_json_string(j.at("kernel").dump());
    model.gamma = j.at("gamma").get<double>();
    model.residual = j.value("residual", 0.0);
    for (const auto& lj : j.at("locations")) model.locations.push_back(location_from_json(lj));
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    model.coefficients.resize(static_cast<Eigen::Index>(coeffs.size()));
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        model.coefficients(static_cast<Eigen::Index>(i)) = coeffs[i];
    if (model.locations.size() != coeffs.size())
        throw ConfigError("model locations/coefficients mismatch in " + path);
    return model;
}

void write_predictions_csv(const std::vector<double>& timestamps, const Eigen::VectorXd& y_hat,
                           const std::string& path) {
    if (static_cast<Eigen::Index>(timestamps.size()) != y_hat.size())
        throw Error("prediction timestamp mismatch");
    std::ofstream out = open_out(path);
    out << "t,y_hat\n";
    for (std::size_t i = 0; i < timestamps.size(); ++i)
        out << format_double(timestamps[i]) << ","
            << format_double(y_hat(static_cast<Eigen::Index>(i))) << "\n";
}

void save_tune_result(const hyper::TuneResult& result, const std::string& path) {
    json j;
    json best;
    for (const auto& [name, value] : result.best.kernel_params) best[name] = value;
    best["lambda"] = result.best.lambda;
    best["sigma2"] = result.best.sigma2;
    best["at_boundary"] = result.best.at_boundary;
    j["best"] = std::move(best);
    j["nll"] = result.nll_value;
    j["starts_tried"] = result.starts_tried;
    j["rn_gamma"] = result.rn_gamma;
    j["rn_kernel"] = json::parse(kernels::to_json_string(result.rn_kernel, -1));
    json trace = json::array();
    for (const auto& rec : result.trace) {
        json t;
        t["nll"] = rec.nll_value;
        t["evals"] = rec.evals;
        t["at_boundary"] = rec.best.at_boundary;
        trace.push_back(std::move(t));
    }
    j["starts"] = std::move(trace);
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_mercer_check_csv(const mercer::MercerCheck& check, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "t,s,truncated,exact,abs_err\n";
    for (const auto& row : check.rows)
        out << format_double(row.t) << "," << format_double(row.s) << ","
            << format_double(row.truncated) << "," << format_double(row.exact) << ","
            << format_double(row.abs_err) << "\n";
}

void write_consistency_csv(const mercer::ConsistencyCurve& curve, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "N,seed,error\n";
    for (const auto& cell : curve.cells) {
        if (!cell.ok) continue;
        out << cell.n << "," << cell.seed << "," << format_double(cell.error) << "\n";
    }
}

void write_consistency_summary(const mercer::ConsistencyCurve& curve, const std::string& path) {
    json j;
    j["alpha"] = curve.alpha;
    j["n_grid"] = curve.n_grid;
    j["median_error"] = curve.median_error;
    j["q1_error"] = curve.q1_error;
    j["q3_error"] = curve.q3_error;
    json failures = json::array();
    for (const auto& cell : curve.cells)
        if (!cell.ok) {
            json f;
            f["N"] = cell.n;
            f["seed"] = cell.seed;
            f["message"] = cell.message;
            failures.push_back(std::move(f));
        }
    j["failures"] = std::move(failures);
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

mercer::ConsistencyConfig load_consistency_config(const std::string& path) {
    const json j = read_json_file(path);
    mercer::ConsistencyConfig cfg;
    cfg.beta = j.value("beta", cfg.beta);
    cfg.lag_window = j.value("lag_window", cfg.lag_window);
    cfg.lag_step = j.value("lag_step", cfg.lag_step);
    cfg.sampling_spacing = j.value("sampling_spacing", cfg.sampling_spacing);
    cfg.input_ma_decay = j.value("input_ma_decay", cfg.input_ma_decay);
    cfg.input_std = j.value("input_std", cfg.input_std);
    cfg.noise_std = j.value("noise_std", cfg.noise_std);
    cfg.gamma0 = j.value("gamma0", cfg.gamma0);
    cfg.alpha = j.value("alpha", cfg.alpha);
    if (j.contains("n_grid")) cfg.n_grid = j.at("n_grid").get<std::vector<int>>();
    cfg.test_draws = j.value("test_draws", cfg.test_draws);
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("num_seeds")) {
        const int count = j.at("num_seeds").get<int>();
        cfg.seeds.clear();
        for (int i = 1; i <= count; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
    }
    cfg.workers = j.value("workers", cfg.workers);
    if (j.contains("section_centers"))
        cfg.section_centers = j.at("section_centers").get<std::vector<double>>();
    if (j.contains("section_weights"))
        cfg.section_weights = j.at("section_weights").get<std::vector<double>>();
    cfg.validate();
    return cfg;
}

}  // namespace rkhsid::io
