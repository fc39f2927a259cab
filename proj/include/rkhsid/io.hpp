#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rkhsid/hyper.hpp"
#include "rkhsid/mercer.hpp"
#include "rkhsid/rn.hpp"
#include "rkhsid/signal.hpp"

namespace rkhsid::io {

// Signals travel as CSV with header "t,value".
void write_signal_csv(const Signal& s, const std::string& path);
Signal read_signal_csv(const std::string& path);

// Datasets travel as CSV "t,y" plus a JSON sidecar (same stem, .json)
// describing how regressors are built from an input signal file.
struct RegressorSpec {
    enum class Kind { finite_memory, truncated_infinite, sampled_trajectory };
    Kind kind = Kind::finite_memory;
    int memory = 1;
    int horizon = 1;
    std::vector<double> grid;
    std::optional<double> window;
    bool zero_pad = false;
    std::string input_path;  // relative to the sidecar's directory
};

std::string sidecar_path_for(const std::string& dataset_csv);
void write_dataset(const std::vector<double>& timestamps, const std::vector<double>& outputs,
                   const RegressorSpec& spec, const std::string& csv_path);
RegressorSpec read_regressor_sidecar(const std::string& sidecar_path);

// Reads the dataset CSV, its sidecar, and the referenced input signal, and
// builds the input locations.
Dataset load_dataset(const std::string& csv_path);

// Fitted models: kernel spec, training locations, coefficients, gamma.
void save_model(const rn::RNModel& model, const std::string& path);
rn::RNModel load_model(const std::string& path);

void write_predictions_csv(const std::vector<double>& timestamps, const Eigen::VectorXd& y_hat,
                           const std::string& path);

void save_tune_result(const hyper::TuneResult& result, const std::string& path);

void write_mercer_check_csv(const mercer::MercerCheck& check, const std::string& path);

void write_consistency_csv(const mercer::ConsistencyCurve& curve, const std::string& path);
void write_consistency_summary(const mercer::ConsistencyCurve& curve, const std::string& path);

mercer::ConsistencyConfig load_consistency_config(const std::string& path);

}  // namespace rkhsid::io
