// rkhsid: kernel-based system identification toolkit.
//
// Subcommands: simulate, fit, predict, tune, stability-check, mercer,
// consistency, benchmark. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkhsid/bench.hpp"
#include "rkhsid/hyper.hpp"
#include "rkhsid/io.hpp"
#include "rkhsid/kernels.hpp"
#include "rkhsid/mercer.hpp"
#include "rkhsid/rn.hpp"
#include "rkhsid/rng.hpp"
#include "rkhsid/stability.hpp"

namespace fs = std::filesystem;
using namespace rkhsid;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = ".";
};

fs::path out_path(const GlobalOptions& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return fs::path(g.out_dir) / name;
}

int run_simulate(const GlobalOptions& g, const std::string& scenario, int n, double input_var,
                 double noise_var, int burn) {
    const double input_sd = std::sqrt(input_var);
    Signal u;
    u.start_index = 0;
    u.samples.resize(static_cast<std::size_t>(n + burn));
    Rng rng(derive_seed(g.seed, 1));
    for (double& v : u.samples) v = rng.gaussian(0.0, input_sd);

    Signal y;
    if (scenario == "s1") {
        y = simulate_s1(u, noise_var, derive_seed(g.seed, 2));
    } else if (scenario == "s2") {
        const LinearSystem sys = random_linear_system(10, 0.95, 10.0, derive_seed(g.seed, 3));
        y = simulate_s2(u, sys, noise_var, derive_seed(g.seed, 2));
        nlohmann::json sj;
        sj["order"] = sys.order;
        sj["first_lag"] = sys.first_lag;
        sj["max_pole_modulus"] = sys.max_pole_modulus;
        sj["impulse_response"] = sys.impulse_response;
        std::ofstream out(out_path(g, "system.json"));
        out << sj.dump(2) << "\n";
    } else {
        throw ConfigError("scenario must be s1 or s2");
    }
    io::write_signal_csv(u, out_path(g, "u.csv").string());
    io::write_signal_csv(y, out_path(g, "y.csv").string());
    std::cout << "wrote " << out_path(g, "u.csv").string() << " and "
              << out_path(g, "y.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rkhsid: regularization networks over RKHSs of dynamic systems"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--seed", g.seed, "master random seed");
    app.add_option("--workers", g.workers, "worker thread count");
    app.add_option("--out-dir", g.out_dir, "output directory");

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate benchmark data (S1/S2)")->fallthrough();
    std::string sim_scenario = "s1";
    int sim_n = 1000, sim_burn = 200;
    double sim_input_var = 4.0, sim_noise_var = 4.0;
    sim->add_option("--scenario", sim_scenario, "s1 or s2");
    sim->add_option("--n", sim_n, "output samples after burn-in");
    sim->add_option("--burn", sim_burn, "burn-in samples");
    sim->add_option("--input-var", sim_input_var, "input variance");
    sim->add_option("--noise-var", sim_noise_var, "noise variance");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a regularization network")->fallthrough();
    std::string fit_kernel, fit_data, fit_out = "model.json";
    double fit_gamma = 0.1;
    fit->add_option("--kernel", fit_kernel, "kernel spec JSON")->required();
    fit->add_option("--data", fit_data, "training dataset CSV (with sidecar)")->required();
    fit->add_option("--gamma", fit_gamma, "regularization parameter");
    fit->add_option("--out", fit_out, "output model JSON");

    // predict
    auto* pred = app.add_subcommand("predict", "predict with a fitted model")->fallthrough();
    std::string pred_model, pred_data, pred_out = "pred.csv";
    pred->add_option("--model", pred_model, "model JSON")->required();
    pred->add_option("--data", pred_data, "dataset CSV naming prediction times")->required();
    pred->add_option("--out", pred_out, "output CSV t,y_hat");

    // tune
    auto* tune = app.add_subcommand("tune", "marginal-likelihood hyperparameter tuning")->fallthrough();
    std::string tune_family = "nss", tune_data, tune_out = "hyper.json";
    int tune_starts = 8;
    tune->add_option("--kernel-family", tune_family, "nss or gaussian");
    tune->add_option("--data", tune_data, "training dataset CSV")->required();
    tune->add_option("--starts", tune_starts, "multistart count");
    tune->add_option("--out", tune_out, "output hyperparameter JSON");

    // stability-check
    auto* stab = app.add_subcommand("stability-check", "certify kernel stability")->fallthrough();
    std::string stab_kernel, stab_out;
    stab->add_option("--kernel", stab_kernel, "kernel spec JSON")->required();
    stab->add_option("--out", stab_out, "write the verdict JSON here (default stdout)");

    // mercer
    auto* mer = app.add_subcommand("mercer", "stable spline eigenexpansion check")->fallthrough();
    double mer_beta = 1.0, mer_tmax = 5.0;
    int mer_L = 2000, mer_grid = 100;
    std::string mer_out = "check.csv";
    mer->add_option("--beta", mer_beta, "stable spline decay");
    mer->add_option("--L", mer_L, "eigenexpansion truncation");
    mer->add_option("--grid", mer_grid, "grid points per axis");
    mer->add_option("--t-max", mer_tmax, "grid upper end");
    mer->add_option("--out", mer_out, "output CSV");

    // consistency
    auto* cons = app.add_subcommand("consistency", "RN consistency experiment")->fallthrough();
    std::string cons_config, cons_out = "curve.csv", cons_summary = "curve_summary.json";
    cons->add_option("--config", cons_config, "experiment config JSON")->required();
    cons->add_option("--out", cons_out, "output CSV N,seed,error");
    cons->add_option("--summary", cons_summary, "output summary JSON");

    // benchmark
    auto* ben = app.add_subcommand("benchmark", "Monte Carlo S1/S2 benchmark")->fallthrough();
    std::string ben_config;
    bool ben_full_scale = false;
    ben->add_option("--config", ben_config, "benchmark config JSON (defaults when omitted)");
    ben->add_flag("--full-scale", ben_full_scale,
                  "100 runs, 1000 train/test samples, oracle m up to 50");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return run_simulate(g, sim_scenario, sim_n, sim_input_var, sim_noise_var, sim_burn);

        if (fit->parsed()) {
            const kernels::KernelSpec kernel = kernels::load_kernel(fit_kernel);
            const Dataset data = io::load_dataset(fit_data);
            const rn::RNModel model = rn::fit_rn(kernel, data, fit_gamma);
            io::save_model(model, out_path(g, fit_out).string());
            std::cout << "fit " << data.size() << " samples, residual " << model.residual
                      << ", wrote " << out_path(g, fit_out).string() << "\n";
            return 0;
        }

        if (pred->parsed()) {
            const rn::RNModel model = io::load_model(pred_model);
            const Dataset data = io::load_dataset(pred_data);
            const Eigen::VectorXd y_hat = rn::predict(model, data.locations);
            io::write_predictions_csv(data.timestamps, y_hat, out_path(g, pred_out).string());
            std::cout << "wrote " << out_path(g, pred_out).string() << "\n";
            return 0;
        }

        if (tune->parsed()) {
            const Dataset data = io::load_dataset(tune_data);
            hyper::TuneOptions opt;
            opt.starts = tune_starts;
            opt.seed = g.seed;
            opt.workers = g.workers;
            const hyper::TuneResult result =
                hyper::tune_ml(hyper::family_from_name(tune_family), data, opt);
            io::save_tune_result(result, out_path(g, tune_out).string());
            std::cout << "best nll " << result.nll_value << ", wrote "
                      << out_path(g, tune_out).string() << "\n";
            return 0;
        }

        if (stab->parsed()) {
            const kernels::KernelSpec kernel = kernels::load_kernel(stab_kernel);
            const stability::StabilityVerdict verdict = stability::composed_stability(kernel);
            const std::string text = stability::to_json_string(verdict);
            if (stab_out.empty()) {
                std::cout << text << "\n";
            } else {
                std::ofstream out(out_path(g, stab_out));
                out << text << "\n";
            }
            return 0;
        }

        if (mer->parsed()) {
            const mercer::MercerCheck check =
                mercer::mercer_grid_check(mer_beta, mer_L, mer_grid, mer_tmax);
            io::write_mercer_check_csv(check, out_path(g, mer_out).string());
            std::cout << "max abs err " << check.max_abs_err << ", wrote "
                      << out_path(g, mer_out).string() << "\n";
            return 0;
        }

        if (cons->parsed()) {
            mercer::ConsistencyConfig cfg = io::load_consistency_config(cons_config);
            if (g.workers > 1) cfg.workers = g.workers;
            const mercer::ConsistencyCurve curve = mercer::consistency_experiment(cfg);
            io::write_consistency_csv(curve, out_path(g, cons_out).string());
            io::write_consistency_summary(curve, out_path(g, cons_summary).string());
            std::cout << "wrote " << out_path(g, cons_out).string() << " and "
                      << out_path(g, cons_summary).string() << "\n";
            return 0;
        }

        if (ben->parsed()) {
            bench::BenchmarkConfig cfg;
            if (!ben_config.empty()) cfg = bench::config_from_json_file(ben_config);
            if (ben_full_scale) {
                cfg.runs = 100;
                cfg.n_train = 1000;
                cfg.n_test = 1000;
                cfg.m_max = 50;
                cfg.tuner.oracle_starts = 4;
                cfg.tuner.nss_starts = 8;
            }
            if (g.workers > 1) cfg.workers = g.workers;
            if (ben_config.empty()) cfg.master_seed = g.seed;
            const bench::BenchmarkReport report = bench::run_benchmark(cfg);
            bench::emit_report_json(report, out_path(g, "report.json").string());
            bench::emit_report_csv(report, out_path(g, "report.csv").string());
            bench::emit_report_svg(report, out_path(g, "report.svg").string());
            for (const auto& s : report.summary)
                std::cout << s.estimator << ": median " << s.median << " (q1 " << s.q1 << ", q3 "
                          << s.q3 << ", n " << s.count << ")"
                          << (s.note.empty() ? "" : " [" + s.note + "]") << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
