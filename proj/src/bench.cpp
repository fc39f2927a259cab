#include "rkhsid/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rkhsid/hyper.hpp"
#include "rkhsid/parallel.hpp"
#include "rkhsid/rn.hpp"
#include "rkhsid/rng.hpp"

namespace rkhsid::bench {

using json = nlohmann::json;

namespace {

constexpr const char* kOracleName = "gaussian-with-oracle";
constexpr const char* kNssName = "nss";
constexpr const char* kOracleNote = "oracle baseline (not implementable in practice)";

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

void BenchmarkConfig::validate() const {
    if (scenario != "s1" && scenario != "s2") throw ConfigError("scenario must be s1 or s2");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (n_test < 2) throw ConfigError("n_test must be >= 2");
    if (n_train < 32) throw ConfigError("n_train must be >= 32");
    if (estimators.empty()) throw ConfigError("estimator list must be nonempty");
    for (const auto& e : estimators)
        if (e != kOracleName && e != kNssName) throw ConfigError("unknown estimator: " + e);
    if (m_min < 1 || m_max < m_min) throw ConfigError("bad oracle m grid");
    if (nss_truncation < 8) throw ConfigError("nss truncation too small");
    if (!(input_variance > 0.0)) throw ConfigError("input variance must be positive");
    if (noise_variance < 0.0) throw ConfigError("noise variance must be nonnegative");
}

namespace {

Signal white_signal(std::uint64_t seed, std::int64_t start, std::size_t n, double std_dev) {
    Signal s;
    s.start_index = start;
    s.samples.resize(n);
    Rng rng(seed);
    for (double& v : s.samples) v = rng.gaussian(0.0, std_dev);
    return s;
}

Signal slice_signal(const Signal& s, std::int64_t t_begin, std::int64_t t_end) {
    Signal out;
    out.start_index = t_begin;
    out.sample_period = s.sample_period;
    const auto offset = static_cast<std::size_t>(t_begin - s.start_index);
    out.samples.assign(s.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                       s.samples.begin() + static_cast<std::ptrdiff_t>(offset) +
                           (t_end - t_begin + 1));
    return out;
}

struct RunData {
    Signal u_train, y_train;       // sliced to the training window
    Signal u_test, y_test;         // y_test noiseless
    int burn = 0;
};

RunData make_run_data(const BenchmarkConfig& cfg, std::uint64_t run_base) {
    const double input_sd = std::sqrt(cfg.input_variance);

    LinearSystem sys;
    std::size_t theta_len = 0;
    if (cfg.scenario == "s2") {
        sys = random_linear_system(cfg.system_order, cfg.pole_radius, cfg.system_l2,
                                   derive_seed(run_base, 4));
        theta_len = sys.impulse_response.size() + static_cast<std::size_t>(sys.first_lag);
    }

    const int burn = static_cast<int>(
        std::max<std::size_t>({static_cast<std::size_t>(cfg.m_max),
                               static_cast<std::size_t>(cfg.nss_truncation), theta_len, 7}));

    const auto make_pair = [&](std::uint64_t u_seed, std::uint64_t e_seed, int n,
                               double noise_var, Signal* u_out, Signal* y_out) {
        Signal u = white_signal(u_seed, 0, static_cast<std::size_t>(burn + n), input_sd);
        Signal y = cfg.scenario == "s2" ? simulate_s2(u, sys, noise_var, e_seed)
                                        : simulate_s1(u, noise_var, e_seed);
        const std::int64_t t0 = burn;
        const std::int64_t t1 = burn + n - 1;
        *y_out = slice_signal(y, t0, t1);
        *u_out = std::move(u);
    };

    RunData data;
    data.burn = burn;
    make_pair(derive_seed(run_base, 1), derive_seed(run_base, 2), cfg.n_train,
              cfg.noise_variance, &data.u_train, &data.y_train);
    // test outputs are noiseless
    make_pair(derive_seed(run_base, 3), derive_seed(run_base, 5), cfg.n_test, 0.0, &data.u_test,
              &data.y_test);
    return data;
}

Eigen::VectorXd to_vector(const Signal& s) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = s.samples[static_cast<std::size_t>(i)];
    return v;
}

FitRecord run_oracle(const BenchmarkConfig& cfg, const RunData& data, int run,
                     std::uint64_t run_base) {
    FitRecord rec;
    rec.run = run;
    rec.estimator = kOracleName;
    const double t0 = now_seconds();
    try {
        std::vector<int> m_grid;
        for (int m = cfg.m_min; m <= cfg.m_max; ++m) m_grid.push_back(m);
        hyper::TuneOptions opt;
        opt.starts = cfg.tuner.oracle_starts;
        opt.max_evals_per_start = cfg.tuner.oracle_max_evals;
        opt.seed = derive_seed(run_base, 10);
        const hyper::OracleResult oracle =
            hyper::oracle_select_m(data.u_train, data.y_train, data.u_test, data.y_test, m_grid,
                                   opt);
        rec.fit = oracle.best_fit;
        rec.oracle_m = oracle.best_m;
        rec.ok = true;
    } catch (const Error& e) {
        rec.error = e.what();
    }
    rec.seconds = now_seconds() - t0;
    return rec;
}

FitRecord run_nss(const BenchmarkConfig& cfg, const RunData& data, int run,
                  std::uint64_t run_base) {
    FitRecord rec;
    rec.run = run;
    rec.estimator = kNssName;
    const double t0 = now_seconds();
    try {
        const int p = cfg.nss_truncation;
        Dataset train;
        train.locations =
            make_regressors(data.u_train, std::nullopt, p, data.y_train.start_index,
                            data.y_train.start_index +
                                static_cast<std::int64_t>(data.y_train.size()) - 1);
        train.outputs = to_vector(data.y_train);

        hyper::TuneOptions opt;
        opt.starts = cfg.tuner.nss_starts;
        opt.max_evals_per_start = cfg.tuner.nss_max_evals;
        opt.seed = derive_seed(run_base, 11);
        const hyper::TuneResult tuned = hyper::tune_ml(hyper::KernelFamily::nss, train, opt);

        const rn::RNModel model = rn::fit_rn(tuned.rn_kernel, train, tuned.rn_gamma);
        const std::vector<InputLocation> test_locs =
            make_regressors(data.u_test, std::nullopt, p, data.y_test.start_index,
                            data.y_test.start_index +
                                static_cast<std::int64_t>(data.y_test.size()) - 1);
        const Eigen::VectorXd y_hat = rn::predict(model, test_locs);
        rec.fit = fit_metric(to_vector(data.y_test), y_hat);
        rec.ok = true;
    } catch (const Error& e) {
        rec.error = e.what();
    }
    rec.seconds = now_seconds() - t0;
    return rec;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
    config.validate();
    const double t0 = now_seconds();

    const auto n_est = config.estimators.size();
    std::vector<FitRecord> fits(static_cast<std::size_t>(config.runs) * n_est);

    parallel_for(config.runs, config.workers, [&](int run) {
        const std::uint64_t run_base = derive_seed(config.master_seed, static_cast<std::uint64_t>(run));
        const RunData data = make_run_data(config, run_base);
        for (std::size_t e = 0; e < n_est; ++e) {
            FitRecord rec = config.estimators[e] == kOracleName
                                ? run_oracle(config, data, run, run_base)
                                : run_nss(config, data, run, run_base);
            fits[static_cast<std::size_t>(run) * n_est + e] = std::move(rec);
        }
    });

    BenchmarkReport report;
    report.config = config;
    report.fits = std::move(fits);
    report.summary = summarize(config.estimators, report.fits);
    report.total_seconds = now_seconds() - t0;
    return report;
}

std::vector<EstimatorSummary> summarize(const std::vector<std::string>& estimators,
                                        const std::vector<FitRecord>& fits) {
    std::vector<EstimatorSummary> out;
    for (const auto& name : estimators) {
        std::vector<double> values;
        for (const auto& rec : fits)
            if (rec.ok && rec.estimator == name) values.push_back(rec.fit);
        std::sort(values.begin(), values.end());
        EstimatorSummary s;
        s.estimator = name;
        if (name == kOracleName) s.note = kOracleNote;
        s.count = static_cast<int>(values.size());
        if (!values.empty()) {
            const auto quantile = [&](double q) {
                const double pos = q * (static_cast<double>(values.size()) - 1.0);
                const auto lo = static_cast<std::size_t>(std::floor(pos));
                const auto hi = std::min(lo + 1, values.size() - 1);
                const double w = pos - static_cast<double>(lo);
                return (1.0 - w) * values[lo] + w * values[hi];
            };
            s.median = quantile(0.5);
            s.q1 = quantile(0.25);
            s.q3 = quantile(0.75);
            s.min = values.front();
            s.max = values.back();
        }
        out.push_back(std::move(s));
    }
    return out;
}

// --- serialization ------------------------------------------------------------------

namespace {

json config_to_json(const BenchmarkConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["runs"] = c.runs;
    j["n_train"] = c.n_train;
    j["n_test"] = c.n_test;
    j["estimators"] = c.estimators;
    j["m_min"] = c.m_min;
    j["m_max"] = c.m_max;
    j["nss_truncation"] = c.nss_truncation;
    j["input_variance"] = c.input_variance;
    j["noise_variance"] = c.noise_variance;
    j["system_order"] = c.system_order;
    j["pole_radius"] = c.pole_radius;
    j["system_l2"] = c.system_l2;
    j["tuner"] = {{"oracle_starts", c.tuner.oracle_starts},
                  {"oracle_max_evals", c.tuner.oracle_max_evals},
                  {"nss_starts", c.tuner.nss_starts},
                  {"nss_max_evals", c.tuner.nss_max_evals}};
    j["master_seed"] = c.master_seed;
    j["workers"] = c.workers;
    return j;
}

BenchmarkConfig config_from_json(const json& j) {
    BenchmarkConfig c;
    c.scenario = j.value("scenario", c.scenario);
    c.runs = j.value("runs", c.runs);
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    if (j.contains("estimators")) c.estimators = j.at("estimators").get<std::vector<std::string>>();
    c.m_min = j.value("m_min", c.m_min);
    c.m_max = j.value("m_max", c.m_max);
    c.nss_truncation = j.value("nss_truncation", c.nss_truncation);
    c.input_variance = j.value("input_variance", c.input_variance);
    c.noise_variance = j.value("noise_variance", c.noise_variance);
    c.system_order = j.value("system_order", c.system_order);
    c.pole_radius = j.value("pole_radius", c.pole_radius);
    c.system_l2 = j.value("system_l2", c.system_l2);
    if (j.contains("tuner")) {
        const json& t = j.at("tuner");
        c.tuner.oracle_starts = t.value("oracle_starts", c.tuner.oracle_starts);
        c.tuner.oracle_max_evals = t.value("oracle_max_evals", c.tuner.oracle_max_evals);
        c.tuner.nss_starts = t.value("nss_starts", c.tuner.nss_starts);
        c.tuner.nss_max_evals = t.value("nss_max_evals", c.tuner.nss_max_evals);
    }
    c.master_seed = j.value("master_seed", c.master_seed);
    c.workers = j.value("workers", c.workers);
    c.validate();
    return c;
}

json report_to_json(const BenchmarkReport& r) {
    json j;
    j["config"] = config_to_json(r.config);
    json fits = json::array();
    for (const auto& rec : r.fits) {
        json f;
        f["run"] = rec.run;
        f["estimator"] = rec.estimator;
        f["ok"] = rec.ok;
        if (rec.ok)
            f["fit"] = rec.fit;
        else
            f["error"] = rec.error;
        f["seconds"] = rec.seconds;
        if (rec.oracle_m >= 0) f["oracle_m"] = rec.oracle_m;
        fits.push_back(std::move(f));
    }
    j["fits"] = std::move(fits);
    json summary = json::array();
    for (const auto& s : r.summary) {
        json e;
        e["estimator"] = s.estimator;
        if (!s.note.empty()) e["note"] = s.note;
        e["count"] = s.count;
        e["median"] = s.median;
        e["q1"] = s.q1;
        e["q3"] = s.q3;
        e["min"] = s.min;
        e["max"] = s.max;
        summary.push_back(std::move(e));
    }
    j["summary"] = std::move(summary);
    j["total_seconds"] = r.total_seconds;
    return j;
}

}  // namespace

void emit_report_json(const BenchmarkReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write report: " + path);
    out << report_to_json(report).dump(2) << "\n";
}

void emit_report_csv(const BenchmarkReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write report: " + path);
    out << "run,estimator,fit\n";
    char buf[40];
    for (const auto& rec : report.fits) {
        if (!rec.ok) continue;
        std::snprintf(buf, sizeof(buf), "%.17g", rec.fit);
        out << rec.run << "," << rec.estimator << "," << buf << "\n";
    }
}

void emit_report_svg(const BenchmarkReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write report: " + path);

    const auto& summary = report.summary;
    const int box_w = 90, gap = 60, margin = 70;
    const int width = margin * 2 + static_cast<int>(summary.size()) * (box_w + gap);
    const int height = 360, plot_top = 40, plot_bottom = 300;

    double lo = 0.0, hi = 100.0;
    for (const auto& s : summary)
        if (s.count > 0) {
            lo = std::min(lo, s.min);
            hi = std::max(hi, s.max);
        }
    const double pad = 0.05 * std::max(hi - lo, 1.0);
    lo -= pad;
    hi += pad;
    const auto ypix = [&](double v) {
        return plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - plot_top);
    };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "  <text x=\"" << margin << "\" y=\"20\" font-size=\"14\">test-set fit (%), scenario "
        << report.config.scenario << ", " << report.config.runs << " runs</text>\n";
    for (std::size_t i = 0; i < summary.size(); ++i) {
        const auto& s = summary[i];
        const int x0 = margin + static_cast<int>(i) * (box_w + gap);
        const int xc = x0 + box_w / 2;
        out << "  <g class=\"box\" data-estimator=\"" << s.estimator << "\">\n";
        if (s.count > 0) {
            out << "    <line x1=\"" << xc << "\" y1=\"" << ypix(s.min) << "\" x2=\"" << xc
                << "\" y2=\"" << ypix(s.max) << "\" stroke=\"black\"/>\n";
            out << "    <rect x=\"" << x0 << "\" y=\"" << ypix(s.q3) << "\" width=\"" << box_w
                << "\" height=\"" << ypix(s.q1) - ypix(s.q3)
                << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
            out << "    <line x1=\"" << x0 << "\" y1=\"" << ypix(s.median) << "\" x2=\""
                << x0 + box_w << "\" y2=\"" << ypix(s.median)
                << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        }
        out << "    <text x=\"" << x0 << "\" y=\"" << plot_bottom + 20 << "\" font-size=\"12\">"
            << s.estimator << "</text>\n";
        if (!s.note.empty())
            out << "    <text x=\"" << x0 << "\" y=\"" << plot_bottom + 38
                << "\" font-size=\"9\">" << s.note << "</text>\n";
        out << "  </g>\n";
    }
    out << "</svg>\n";
}

BenchmarkConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open benchmark config: " + path);
    try {
        return config_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid benchmark config: ") + e.what());
    }
}

std::string config_to_json_string(const BenchmarkConfig& config) {
    return config_to_json(config).dump(2);
}

BenchmarkReport report_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid report JSON: ") + e.what());
    }
    BenchmarkReport r;
    r.config = config_from_json(j.at("config"));
    for (const auto& f : j.at("fits")) {
        FitRecord rec;
        rec.run = f.at("run").get<int>();
        rec.estimator = f.at("estimator").get<std::string>();
        rec.ok = f.at("ok").get<bool>();
        if (rec.ok) rec.fit = f.at("fit").get<double>();
        if (f.contains("error")) rec.error = f.at("error").get<std::string>();
        rec.seconds = f.value("seconds", 0.0);
        rec.oracle_m = f.value("oracle_m", -1);
        r.fits.push_back(std::move(rec));
    }
    for (const auto& e : j.at("summary")) {
        EstimatorSummary s;
        s.estimator = e.at("estimator").get<std::string>();
        s.note = e.value("note", "");
        s.count = e.at("count").get<int>();
        s.median = e.at("median").get<double>();
        s.q1 = e.at("q1").get<double>();
        s.q3 = e.at("q3").get<double>();
        s.min = e.at("min").get<double>();
        s.max = e.at("max").get<double>();
        r.summary.push_back(std::move(s));
    }
    r.total_seconds = j.value("total_seconds", 0.0);
    return r;
}

}  // namespace rkhsid::bench
