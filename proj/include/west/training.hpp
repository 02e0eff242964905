#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "west/graphcore.hpp"
#include "west/mobility.hpp"
#include "west/model.hpp"

namespace west {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    int epochs = 500;
    double learning_rate = 1e-3;
    int batch_size = 32;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int early_stop_patience = 50; // 0 disables early stopping
    std::uint64_t seed = 0;
};

struct MetricsReport {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    std::vector<double> per_region_mae, per_region_mse, per_region_rmse;
    std::vector<double> per_step_mae, per_step_mse, per_step_rmse;
};

/// Flattened MAE/MSE/RMSE over all (window, region, step) values, plus
/// per-region and per-step marginals. Inputs must already be in count units.
MetricsReport compute_metrics(const std::vector<Tensor>& pred, const std::vector<Tensor>& truth);

std::string metrics_to_json(const MetricsReport& report, int k = -1);

struct TrainHistory {
    std::vector<double> train_loss; // one entry per epoch
    std::vector<double> val_loss;   // empty when no validation slice exists
    int best_epoch = -1;            // epoch whose parameters were kept
};

std::string history_to_csv(const TrainHistory& history);

struct TrainResult {
    WestParams params;
    TrainHistory history;
};

/// Minimizes MSE over the training windows in fixed chronological order. The
/// last tenth of the windows is held out as a validation slice for early
/// stopping; the best-validation parameters are restored on return.
TrainResult train(const WestConfig& model_config, const DTDGDataset& train_ds,
                  const RenormalizedAdjacency& a_norm, const TrainConfig& tcfg);

/// Hash of the test protocol: window start steps and integer-rounded target
/// counts. Equal hashes mean two evaluations scored identical test windows.
std::uint64_t test_window_hash(const DTDGDataset& test);

struct EvalOutcome {
    MetricsReport report;
    std::uint64_t window_hash = 0;
    std::vector<Tensor> pred_counts;  // per test window, count units
    std::vector<Tensor> truth_counts; // integer-rounded targets
};

EvalOutcome evaluate_model(const WestConfig& config, const WestParams& params,
                           const RenormalizedAdjacency& a_norm, const DTDGDataset& test);

struct PipelineOptions {
    int gcn_hidden = 16;
    int lstm_hidden = 32;
    EncoderMode encoder_mode = EncoderMode::perstep;
    HeadMode head = HeadMode::per_node;
    bool biases = true;
    bool scale = true;
    double train_fraction = 0.8;
    HopsWindow hops_window = HopsWindow::alg3;
    DistanceMode distance_mode = DistanceMode::ordered;
    std::uint64_t seed = 0;
};

struct PerKGroup {
    int k_layers = 0;
    std::vector<int> population_ids;
    std::int64_t entity_count = 0;
    Checkpoint checkpoint;
    TrainHistory history;
    MetricsReport report; // this group's own series
};

struct PerKResult {
    HopsResult hops;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<PerKGroup> groups;
    MetricsReport aggregate; // summed group predictions vs total counts
    std::uint64_t window_hash = 0;
};

/// Adjustable-hops pipeline: one dedicated model per distinct K, each trained
/// on the traffic of its own population group over a shared time grid; the
/// total forecast is the sum of the group forecasts.
PerKResult per_k_pipeline(const std::vector<TrajectoryPoint>& trajectories,
                          const std::vector<Region>& regions, const std::vector<double>& speeds,
                          const Classification& cls, int u_in, int u_out,
                          const TrainConfig& tcfg, const PipelineOptions& opts);

} // namespace west
