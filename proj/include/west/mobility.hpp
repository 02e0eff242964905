#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "west/geometry.hpp"

namespace west {

struct TrajectoryPoint {
    std::int64_t entity_id = 0;
    double t = 0.0; // seconds
    Point pos;
};

struct PopulationSpec {
    int population_id = 0;
    double speed = 0.0; // length units per second
};

/// Regional occupancy counts, one row per time-step of duration t_window.
struct TrafficSeries {
    int n_regions = 0;
    double t_window = 0.0;
    std::vector<std::int64_t> counts; // steps x n_regions, row-major

    std::int64_t steps() const {
        return n_regions == 0 ? 0 : static_cast<std::int64_t>(counts.size()) / n_regions;
    }
    std::int64_t& at(std::int64_t step, int region) {
        return counts[static_cast<std::size_t>(step) * n_regions + region];
    }
    std::int64_t at(std::int64_t step, int region) const {
        return counts[static_cast<std::size_t>(step) * n_regions + region];
    }
};

enum class DistanceMode { ordered, unordered };
enum class HopsWindow { alg3, base };

/// Mean pairwise center distance. The default sums every ordered pair
/// including self-pairs and divides by N^2; `unordered` averages the
/// N(N-1)/2 distinct pairs instead.
double average_center_distance(const std::vector<Point>& centers,
                               DistanceMode mode = DistanceMode::ordered);

struct HopsResult {
    double d = 0.0;        // average center distance
    double t_window = 0.0; // snapshot duration, seconds
    std::vector<int> k;    // stacked-convolution count per population
};

/// Adjustable Hops Policy: picks t_window from the slowest population so it
/// traverses one region per step (scaled by u/2 for multi-step horizons under
/// the default window rule), then k_p = round(speed_p * t_window / d),
/// half-away-from-zero, floored at 1.
HopsResult adjustable_hops(const std::vector<double>& speeds, const std::vector<Point>& centers,
                           int u, HopsWindow window = HopsWindow::alg3,
                           DistanceMode mode = DistanceMode::ordered);

struct Classification {
    std::map<std::int64_t, int> population;       // entity -> speed bucket
    std::map<std::int64_t, double> mean_speed;    // path length / elapsed time
    std::vector<std::int64_t> singletons;         // < 2 samples, excluded
};

/// Buckets entities by mean speed against strictly increasing boundaries; a
/// speed equal to a boundary lands in the upper bucket.
Classification classify_populations(const std::vector<TrajectoryPoint>& trajectories,
                                    const std::vector<double>& boundaries);

/// Mean of member entity speeds per nonempty population bucket.
std::map<int, double> population_mean_speeds(const Classification& cls);

/// Instantaneous occupancy at each step-end instant, linearly interpolated
/// between the bracketing samples. Positions outside the regions' bounding box
/// are not counted; boundary points go to the lowest region index.
TrafficSeries aggregate_traffic(const std::vector<TrajectoryPoint>& trajectories,
                                const std::vector<Region>& regions, double t_window,
                                double t_start, double t_end);

// synthetic generator --------------------------------------------------------

enum class MobilityMode { waypoint, border_flux };

struct PopulationConfig {
    int count = 0;
    double speed = 0.0;
};

struct GeneratorConfig {
    BBox bbox{0.0, 0.0, 100.0, 100.0};
    std::vector<PopulationConfig> populations;
    double horizon_s = 0.0;
    double sample_period_s = 1.0;
    std::vector<double> region_attraction; // also fixes the latent region count
    std::uint64_t seed = 0;
    double seasonal_period_s = 86400.0;    // trip-intensity sinusoid period
    double trip_rate_per_s = 0.5;          // base trip-start rate while idle
    MobilityMode mobility = MobilityMode::border_flux;
};

struct SynthResult {
    std::vector<TrajectoryPoint> trajectories; // sorted by (entity_id, t)
    std::vector<int> population_of_entity;     // ground-truth labels
    std::vector<Point> latent_centers;         // the generator's own partition
};

/// Deterministic random-waypoint walkers over a seeded latent partition of
/// bbox. Idle entities start trips at a sinusoidally modulated rate; in
/// border_flux mode the next region is drawn proportionally to the shared
/// border length with the current one.
SynthResult synth_generate(const GeneratorConfig& config, std::uint64_t seed);

// persistence ---------------------------------------------------------------

std::string trajectories_to_csv(const std::vector<TrajectoryPoint>& trajectories);
void save_trajectories(const std::string& path, const std::vector<TrajectoryPoint>& trajectories);
std::vector<TrajectoryPoint> load_trajectories(const std::string& path);

std::string series_to_csv(const TrafficSeries& series);
void save_series(const std::string& path, const TrafficSeries& series);
TrafficSeries load_series(const std::string& path, double t_window);

} // namespace west
