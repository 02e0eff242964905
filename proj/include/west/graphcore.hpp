#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "west/autodiff.hpp"
#include "west/geometry.hpp"
#include "west/mobility.hpp"

namespace west {

/// D^{-1/2} (A + I) D^{-1/2}: the propagation operator of each GCN layer.
struct RenormalizedAdjacency {
    int n = 0;
    Tensor matrix;
};

RenormalizedAdjacency renormalize(const WeightedAdjacency& a);

struct MinMaxScaler {
    double lo = 0.0;
    double hi = 0.0;

    double scale(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }
    double unscale(double v) const { return hi > lo ? lo + v * (hi - lo) : lo; }
};

struct SampleWindow {
    Tensor x;                   // n_regions x u_in, oldest column first
    Tensor y;                   // n_regions x u_out
    std::int64_t start_step = 0; // time index of the first x column
};

/// Chronologically ordered sliding windows over a traffic series. Window
/// access is counted so tests can audit which windows a training run touched
/// (counters are not synchronized; keep one reader per dataset).
class DTDGDataset {
public:
    DTDGDataset() = default;
    DTDGDataset(std::vector<SampleWindow> windows, int n_regions, int u_in, int u_out,
                MinMaxScaler scaler, double t_window);

    const SampleWindow& window(std::size_t i) const;
    std::size_t window_count() const { return windows_.size(); }
    int n_regions() const { return n_regions_; }
    int u_in() const { return u_in_; }
    int u_out() const { return u_out_; }
    double t_window() const { return t_window_; }
    const MinMaxScaler& scaler() const { return scaler_; }

    const std::vector<std::uint64_t>& access_counts() const { return access_counts_; }
    void reset_access_counts() const;

private:
    std::vector<SampleWindow> windows_;
    int n_regions_ = 0;
    int u_in_ = 0;
    int u_out_ = 0;
    MinMaxScaler scaler_;
    double t_window_ = 0.0;
    mutable std::vector<std::uint64_t> access_counts_;
};

/// Stride-1 windows of (u_in past, u_out future) steps. With scale on, the
/// min/max is fitted on the first floor(train_fraction * W) time steps — the
/// portion a leak-free chrono_split leaves in train — and applied everywhere.
DTDGDataset window_dataset(const TrafficSeries& series, int u_in, int u_out, bool scale,
                           double train_fraction = 0.8);

/// First floor(f*W) windows go to train, the rest to test; train windows whose
/// targets overlap any test feature are dropped so no time index leaks.
std::pair<DTDGDataset, DTDGDataset> chrono_split(const DTDGDataset& ds, double train_fraction);

/// Series rows a chrono_split at this fraction leaves visible to training.
std::int64_t train_series_rows(std::int64_t total_steps, int u_in, int u_out, double train_fraction);

WeightedAdjacency baseline_adjacency_binary(const std::vector<Region>& regions);
WeightedAdjacency baseline_adjacency_centers(const std::vector<Point>& centers);

/// Pearson correlation of per-region count series, negatives clipped to zero;
/// expects the training portion only.
WeightedAdjacency baseline_adjacency_traffic(const TrafficSeries& train_series);

// persistence ---------------------------------------------------------------

void save_dataset(const std::string& dir, const DTDGDataset& ds);
DTDGDataset load_dataset(const std::string& dir);

} // namespace west
