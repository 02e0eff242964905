#include "west/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "west/errors.hpp"
#include "west/util.hpp"

namespace west {

namespace {

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct Track {
    std::vector<double> t;
    std::vector<Point> pos;
};

// Per-entity tracks sorted by time; throws on duplicate timestamps.
std::map<std::int64_t, Track> group_by_entity(const std::vector<TrajectoryPoint>& trajectories) {
    std::map<std::int64_t, std::vector<std::pair<double, Point>>> raw;
    for (const auto& tp : trajectories) raw[tp.entity_id].push_back({tp.t, tp.pos});
    std::map<std::int64_t, Track> tracks;
    for (auto& [id, samples] : raw) {
        std::stable_sort(samples.begin(), samples.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Track trk;
        trk.t.reserve(samples.size());
        trk.pos.reserve(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
                throw InvalidConfig("entity " + std::to_string(id) +
                                    " has non-increasing timestamps");
            }
            trk.t.push_back(samples[i].first);
            trk.pos.push_back(samples[i].second);
        }
        tracks.emplace(id, std::move(trk));
    }
    return tracks;
}

double path_length(const Track& trk) {
    double total = 0.0;
    for (std::size_t i = 1; i < trk.pos.size(); ++i) total += dist(trk.pos[i - 1], trk.pos[i]);
    return total;
}

} // namespace

double average_center_distance(const std::vector<Point>& centers, DistanceMode mode) {
    const std::size_t n = centers.size();
    if (n < 2) throw DegenerateInput("average_center_distance: need at least 2 centers");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) total += dist(centers[i], centers[j]);
    }
    if (mode == DistanceMode::ordered) {
        // every ordered pair counted, self-pairs contribute zero
        return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n));
    }
    return total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

HopsResult adjustable_hops(const std::vector<double>& speeds, const std::vector<Point>& centers,
                           int u, HopsWindow window, DistanceMode mode) {
    if (speeds.empty()) throw EmptyInput("adjustable_hops: no speeds");
    for (double s : speeds) {
        if (!(s > 0.0)) throw NonPositiveSpeed("adjustable_hops: speed " + format_double(s));
    }
    if (u < 1) throw InvalidConfig("adjustable_hops: u must be >= 1");

    HopsResult res;
    res.d = average_center_distance(centers, mode);
    const double min_speed = *std::min_element(speeds.begin(), speeds.end());
    res.t_window = res.d / min_speed;
    if (window == HopsWindow::alg3 && u > 1) res.t_window *= static_cast<double>(u) / 2.0;

    res.k.reserve(speeds.size());
    for (double s : speeds) {
        const double k_raw = std::round(s * res.t_window / res.d); // half away from zero
        res.k.push_back(std::max(1, static_cast<int>(k_raw)));
    }
    return res;
}

Classification classify_populations(const std::vector<TrajectoryPoint>& trajectories,
                                    const std::vector<double>& boundaries) {
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (!(boundaries[i] > boundaries[i - 1])) {
            throw InvalidConfig("classify_populations: boundaries must be strictly increasing");
        }
    }
    Classification cls;
    for (const auto& [id, trk] : group_by_entity(trajectories)) {
        if (trk.t.size() < 2) {
            cls.singletons.push_back(id);
            continue;
        }
        const double elapsed = trk.t.back() - trk.t.front();
        const double speed = path_length(trk) / elapsed;
        const int bucket = static_cast<int>(
            std::upper_bound(boundaries.begin(), boundaries.end(), speed) - boundaries.begin());
        cls.population[id] = bucket;
        cls.mean_speed[id] = speed;
    }
    return cls;
}

std::map<int, double> population_mean_speeds(const Classification& cls) {
    std::map<int, double> sums;
    std::map<int, std::size_t> counts;
    for (const auto& [id, pop] : cls.population) {
        sums[pop] += cls.mean_speed.at(id);
        counts[pop] += 1;
    }
    std::map<int, double> means;
    for (const auto& [pop, sum] : sums) means[pop] = sum / static_cast<double>(counts.at(pop));
    return means;
}

namespace {

BBox regions_extent(const std::vector<Region>& regions) {
    BBox b;
    bool first = true;
    for (const auto& r : regions) {
        for (const auto& v : r.vertices()) {
            if (first) {
                b = BBox{v.x, v.y, v.x, v.y};
                first = false;
            } else {
                b.xmin = std::min(b.xmin, v.x);
                b.ymin = std::min(b.ymin, v.y);
                b.xmax = std::max(b.xmax, v.x);
                b.ymax = std::max(b.ymax, v.y);
            }
        }
    }
    return b;
}

int locate_region(const std::vector<Region>& regions, const BBox& bbox, const Point& p, double tol) {
    if (!bbox.contains(p)) return -1;
    int best = -1;
    for (const auto& r : regions) {
        if (region_contains(r, p, tol) && (best == -1 || r.index < best)) best = r.index;
    }
    if (best >= 0) return best;
    // numerical sliver between cells: fall back to the nearest center
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& r : regions) {
        double d = dist(p, r.center);
        if (d < best_d) {
            best_d = d;
            best = r.index;
        }
    }
    return best;
}

} // namespace

TrafficSeries aggregate_traffic(const std::vector<TrajectoryPoint>& trajectories,
                                const std::vector<Region>& regions, double t_window,
                                double t_start, double t_end) {
    if (regions.empty()) throw EmptyInput("aggregate_traffic: no regions");
    if (!(t_window > 0.0)) throw InvalidConfig("aggregate_traffic: t_window must be positive");
    if (!(t_end > t_start)) throw InvalidConfig("aggregate_traffic: t_end must exceed t_start");
    const auto steps = static_cast<std::int64_t>(std::floor((t_end - t_start) / t_window + 1e-9));
    if (steps < 1) throw EmptyWindow("aggregate_traffic: horizon shorter than one t_window");

    const int n = static_cast<int>(regions.size());
    TrafficSeries series;
    series.n_regions = n;
    series.t_window = t_window;
    series.counts.assign(static_cast<std::size_t>(steps) * n, 0);

    const BBox bbox = regions_extent(regions);
    const double tol = default_border_tol(bbox);

    for (const auto& [id, trk] : group_by_entity(trajectories)) {
        std::size_t cursor = 1;
        for (std::int64_t m = 0; m < steps; ++m) {
            const double instant = t_start + static_cast<double>(m + 1) * t_window;
            if (instant < trk.t.front() || instant > trk.t.back()) continue;
            while (cursor < trk.t.size() && trk.t[cursor] < instant) ++cursor;
            Point p;
            if (cursor >= trk.t.size()) {
                p = trk.pos.back();
            } else if (trk.t[cursor] == instant || cursor == 0) {
                p = trk.pos[cursor];
            } else {
                const double a = (instant - trk.t[cursor - 1]) / (trk.t[cursor] - trk.t[cursor - 1]);
                p = Point{trk.pos[cursor - 1].x + a * (trk.pos[cursor].x - trk.pos[cursor - 1].x),
                          trk.pos[cursor - 1].y + a * (trk.pos[cursor].y - trk.pos[cursor - 1].y)};
            }
            const int region = locate_region(regions, bbox, p, tol);
            if (region >= 0) series.at(m, region) += 1;
        }
    }
    return series;
}

// synthetic generator ---------------------------------------------------------

namespace {

Point random_point_in_bbox(Rng& rng, const BBox& b) {
    return Point{rng.uniform(b.xmin, b.xmax), rng.uniform(b.ymin, b.ymax)};
}

Point random_point_in_region(Rng& rng, const Region& r) {
    BBox b;
    bool first = true;
    for (const auto& v : r.vertices()) {
        if (first) {
            b = BBox{v.x, v.y, v.x, v.y};
            first = false;
        } else {
            b.xmin = std::min(b.xmin, v.x);
            b.ymin = std::min(b.ymin, v.y);
            b.xmax = std::max(b.xmax, v.x);
            b.ymax = std::max(b.ymax, v.y);
        }
    }
    for (int tries = 0; tries < 256; ++tries) {
        Point p = random_point_in_bbox(rng, b);
        if (region_contains(r, p, 0.0)) return p;
    }
    return r.center;
}

void validate_generator_config(const GeneratorConfig& c) {
    if (!(c.horizon_s > 0.0)) throw InvalidConfig("generator: horizon_s must be positive");
    if (!(c.sample_period_s > 0.0)) throw InvalidConfig("generator: sample_period_s must be positive");
    if (!(c.bbox.width() > 0.0) || !(c.bbox.height() > 0.0)) {
        throw InvalidConfig("generator: bbox must have positive extent");
    }
    if (!(c.seasonal_period_s > 0.0)) throw InvalidConfig("generator: seasonal_period_s must be positive");
    if (c.trip_rate_per_s < 0.0) throw InvalidConfig("generator: trip_rate_per_s must be nonnegative");
    for (const auto& p : c.populations) {
        if (!(p.speed > 0.0)) throw InvalidConfig("generator: populations.speed must be positive");
        if (p.count < 0) throw InvalidConfig("generator: populations.count must be nonnegative");
    }
    double attraction_sum = 0.0;
    for (double w : c.region_attraction) {
        if (w < 0.0) throw InvalidConfig("generator: region_attraction must be nonnegative");
        attraction_sum += w;
    }
    if (!c.region_attraction.empty() && attraction_sum <= 0.0) {
        throw InvalidConfig("generator: region_attraction must not be all zero");
    }
}

} // namespace

SynthResult synth_generate(const GeneratorConfig& config, std::uint64_t seed) {
    validate_generator_config(config);
    const double horizon = config.horizon_s;
    const double period = config.sample_period_s;
    const double tiny = 1e-9 * period;

    SynthResult result;

    // latent partition for destination choice
    const int n_latent = static_cast<int>(config.region_attraction.size());
    std::vector<Region> latent;
    WeightedAdjacency borders;
    if (n_latent >= 2) {
        Rng lrng(mix64(seed, 0));
        const double mx = 0.05 * config.bbox.width();
        const double my = 0.05 * config.bbox.height();
        const BBox inner{config.bbox.xmin + mx, config.bbox.ymin + my,
                         config.bbox.xmax - mx, config.bbox.ymax - my};
        std::vector<Point> candidates;
        for (int i = 0; i < 4 * n_latent; ++i) candidates.push_back(random_point_in_bbox(lrng, inner));
        std::vector<Point> centers;
        centers.push_back(candidates[lrng.uniform_index(candidates.size())]);
        while (static_cast<int>(centers.size()) < n_latent) {
            std::size_t far_idx = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                double d = std::numeric_limits<double>::infinity();
                for (const auto& c : centers) d = std::min(d, dist(candidates[i], c));
                if (d > far_d) {
                    far_d = d;
                    far_idx = i;
                }
            }
            centers.push_back(candidates[far_idx]);
        }
        latent = voronoi_partition(centers, config.bbox);
        borders = shared_borders_adjacency(latent, default_border_tol(config.bbox));
        result.latent_centers = centers;
    }

    std::int64_t entity_id = 0;
    for (std::size_t p = 0; p < config.populations.size(); ++p) {
        const auto& pop = config.populations[p];
        for (int e = 0; e < pop.count; ++e, ++entity_id) {
            result.population_of_entity.push_back(static_cast<int>(p));
            Rng rng(mix64(seed, static_cast<std::uint64_t>(entity_id) + 1));

            int cur_region = -1;
            Point pos;
            if (n_latent >= 2) {
                cur_region = static_cast<int>(rng.weighted_choice(config.region_attraction));
                pos = random_point_in_region(rng, latent[cur_region]);
            } else {
                pos = random_point_in_bbox(rng, config.bbox);
            }

            std::int64_t ks = 0; // next sample index; sample times are ks * period
            auto emit_static = [&](double until) {
                while (static_cast<double>(ks) * period <= std::min(until, horizon) + tiny) {
                    result.trajectories.push_back({entity_id, static_cast<double>(ks) * period, pos});
                    ++ks;
                }
            };
            auto emit_moving = [&](double t0, double t1, const Point& from, const Point& to) {
                while (static_cast<double>(ks) * period <= std::min(t1, horizon) + tiny) {
                    const double ts = static_cast<double>(ks) * period;
                    double a = (t1 > t0) ? (ts - t0) / (t1 - t0) : 1.0;
                    a = std::clamp(a, 0.0, 1.0);
                    result.trajectories.push_back(
                        {entity_id, ts,
                         Point{from.x + a * (to.x - from.x), from.y + a * (to.y - from.y)}});
                    ++ks;
                }
            };

            double t_now = 0.0;
            while (t_now < horizon) {
                const double rate =
                    config.trip_rate_per_s *
                    (1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * t_now / config.seasonal_period_s));
                double wait = (rate > 1e-12) ? rng.exponential(rate) : (horizon - t_now + period);
                wait = std::max(wait, 1e-6);
                const double idle_end = std::min(t_now + wait, horizon);
                emit_static(idle_end);
                t_now = idle_end;
                if (t_now >= horizon) break;

                Point dest;
                int dest_region = cur_region;
                if (n_latent >= 2) {
                    if (config.mobility == MobilityMode::border_flux) {
                        std::vector<double> weights(static_cast<std::size_t>(n_latent), 0.0);
                        double total = 0.0;
                        for (int j = 0; j < n_latent; ++j) {
                            if (j == cur_region) continue;
                            weights[j] = borders.at(cur_region, j);
                            total += weights[j];
                        }
                        dest_region = total > 0.0
                                          ? static_cast<int>(rng.weighted_choice(weights))
                                          : static_cast<int>(rng.weighted_choice(config.region_attraction));
                    } else {
                        dest_region = static_cast<int>(rng.weighted_choice(config.region_attraction));
                    }
                    dest = random_point_in_region(rng, latent[dest_region]);
                } else {
                    dest = random_point_in_bbox(rng, config.bbox);
                }

                const double trip_dist = dist(pos, dest);
                if (trip_dist <= 0.0) continue;
                const double arrive = t_now + trip_dist / pop.speed;
                emit_moving(t_now, arrive, pos, dest);
                if (arrive >= horizon) {
                    const double a = (horizon - t_now) / (arrive - t_now);
                    pos = Point{pos.x + a * (dest.x - pos.x), pos.y + a * (dest.y - pos.y)};
                    t_now = horizon;
                    break;
                }
                pos = dest;
                cur_region = dest_region;
                t_now = arrive;
            }
            emit_static(horizon);
        }
    }
    return result;
}

// persistence -----------------------------------------------------------------

std::string trajectories_to_csv(const std::vector<TrajectoryPoint>& trajectories) {
    std::ostringstream out;
    out << "entity_id,t,x,y\n";
    for (const auto& tp : trajectories) {
        out << tp.entity_id << ',' << format_double(tp.t) << ',' << format_double(tp.pos.x) << ','
            << format_double(tp.pos.y) << '\n';
    }
    return out.str();
}

void save_trajectories(const std::string& path, const std::vector<TrajectoryPoint>& trajectories) {
    write_text_file(path, trajectories_to_csv(trajectories));
}

std::vector<TrajectoryPoint> load_trajectories(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw InvalidConfig("load_trajectories: empty file");
    std::vector<TrajectoryPoint> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw InvalidConfig("load_trajectories: line " + std::to_string(line_no) +
                                " has " + std::to_string(fields.size()) + " fields, expected 4");
        }
        TrajectoryPoint tp;
        tp.entity_id = std::stoll(fields[0]);
        tp.t = parse_double(fields[1]);
        tp.pos = Point{parse_double(fields[2]), parse_double(fields[3])};
        out.push_back(tp);
    }
    return out;
}

std::string series_to_csv(const TrafficSeries& series) {
    std::ostringstream out;
    out << "step";
    for (int j = 0; j < series.n_regions; ++j) out << ",region_" << j;
    out << '\n';
    for (std::int64_t m = 0; m < series.steps(); ++m) {
        out << m;
        for (int j = 0; j < series.n_regions; ++j) out << ',' << series.at(m, j);
        out << '\n';
    }
    return out.str();
}

void save_series(const std::string& path, const TrafficSeries& series) {
    write_text_file(path, series_to_csv(series));
}

TrafficSeries load_series(const std::string& path, double t_window) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw InvalidConfig("load_series: empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "step") throw InvalidConfig("load_series: bad header");
    TrafficSeries series;
    series.n_regions = static_cast<int>(header.size()) - 1;
    series.t_window = t_window;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) throw InvalidConfig("load_series: ragged row");
        for (std::size_t j = 1; j < fields.size(); ++j) {
            series.counts.push_back(std::stoll(fields[j]));
        }
    }
    if (series.counts.empty()) throw InvalidConfig("load_series: no rows");
    return series;
}

} // namespace west
