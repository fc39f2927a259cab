#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rkhsid/signal.hpp"

namespace rkhsid::bench {

struct TunerSettings {
    int oracle_starts = 2;
    int oracle_max_evals = 60;
    int nss_starts = 8;
    int nss_max_evals = 90;
};

// Desk-scale defaults of the Monte Carlo benchmark; the full-scale
// protocol (100 runs, 1000/1000 samples, m up to 50) is available through
// the CLI's --full-scale flag.
struct BenchmarkConfig {
    std::string scenario = "s2";  // "s1" or "s2"
    int runs = 20;
    int n_train = 500;
    int n_test = 500;
    std::vector<std::string> estimators{"gaussian-with-oracle", "nss"};
    int m_min = 1;
    int m_max = 25;
    int nss_truncation = 128;
    double input_variance = 4.0;
    double noise_variance = 4.0;
    int system_order = 10;         // S2 random systems
    double pole_radius = 0.95;
    double system_l2 = 10.0;
    TunerSettings tuner;
    std::uint64_t master_seed = 1;
    int workers = 1;

    void validate() const;
};

struct FitRecord {
    int run = 0;
    std::string estimator;
    double fit = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
    double seconds = 0.0;
    int oracle_m = -1;  // chosen regressor dimension, oracle estimator only
};

struct EstimatorSummary {
    std::string estimator;
    std::string note;
    int count = 0;
    double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

struct BenchmarkReport {
    BenchmarkConfig config;
    std::vector<FitRecord> fits;  // ordered by (run, estimator position)
    std::vector<EstimatorSummary> summary;
    double total_seconds = 0.0;
};

// One Monte Carlo run per (master_seed, run index) stream: fresh input and
// noise draws, a fresh random system for S2, noiseless test outputs, one
// fit per configured estimator.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

// Boxplot statistics (type-7 quantiles) from the successful fits.
std::vector<EstimatorSummary> summarize(const std::vector<std::string>& estimators,
                                        const std::vector<FitRecord>& fits);

void emit_report_json(const BenchmarkReport& report, const std::string& path);
void emit_report_csv(const BenchmarkReport& report, const std::string& path);
void emit_report_svg(const BenchmarkReport& report, const std::string& path);

BenchmarkConfig config_from_json_file(const std::string& path);
std::string config_to_json_string(const BenchmarkConfig& config);
BenchmarkReport report_from_json_file(const std::string& path);

}  // namespace rkhsid::bench
