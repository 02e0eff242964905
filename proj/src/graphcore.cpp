#include "west/graphcore.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "west/errors.hpp"
#include "west/util.hpp"

namespace west {

RenormalizedAdjacency renormalize(const WeightedAdjacency& a) {
    const int n = a.n;
    if (n < 1) throw EmptyInput("renormalize: empty adjacency");
    Tensor hat(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) hat.at(i, j) = a.at(i, j) + (i == j ? 1.0 : 0.0);

    std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += hat.at(i, j);
        inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg); // deg >= 1 by self-loop
    }
    RenormalizedAdjacency out;
    out.n = n;
    out.matrix = Tensor(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.matrix.at(i, j) = inv_sqrt_deg[static_cast<std::size_t>(i)] * hat.at(i, j) *
                                  inv_sqrt_deg[static_cast<std::size_t>(j)];
    return out;
}

// dataset ---------------------------------------------------------------------

DTDGDataset::DTDGDataset(std::vector<SampleWindow> windows, int n_regions, int u_in, int u_out,
                         MinMaxScaler scaler, double t_window)
    : windows_(std::move(windows)),
      n_regions_(n_regions),
      u_in_(u_in),
      u_out_(u_out),
      scaler_(scaler),
      t_window_(t_window),
      access_counts_(windows_.size(), 0) {}

const SampleWindow& DTDGDataset::window(std::size_t i) const {
    if (i >= windows_.size()) throw Error("window index out of range");
    ++access_counts_[i];
    return windows_[i];
}

void DTDGDataset::reset_access_counts() const {
    std::fill(access_counts_.begin(), access_counts_.end(), 0);
}

std::int64_t train_series_rows(std::int64_t total_steps, int u_in, int u_out,
                               double train_fraction) {
    const std::int64_t n_windows = total_steps - u_in - u_out + 1;
    if (n_windows < 1) return 0;
    return static_cast<std::int64_t>(std::floor(train_fraction * static_cast<double>(n_windows)));
}

DTDGDataset window_dataset(const TrafficSeries& series, int u_in, int u_out, bool scale,
                           double train_fraction) {
    if (u_in < 1 || u_out < 1) throw InvalidConfig("window_dataset: u_in and u_out must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidConfig("window_dataset: train_fraction must be in (0,1)");
    }
    const std::int64_t steps = series.steps();
    const std::int64_t n_windows = steps - u_in - u_out + 1;
    if (n_windows < 1) {
        throw TooShort("window_dataset: series has " + std::to_string(steps) +
                       " steps, need at least " + std::to_string(u_in + u_out));
    }

    MinMaxScaler scaler;
    if (scale) {
        const std::int64_t fit_rows = train_series_rows(steps, u_in, u_out, train_fraction);
        const std::int64_t until = std::max<std::int64_t>(fit_rows, 1);
        scaler.lo = static_cast<double>(series.at(0, 0));
        scaler.hi = scaler.lo;
        for (std::int64_t m = 0; m < until; ++m) {
            for (int r = 0; r < series.n_regions; ++r) {
                const double v = static_cast<double>(series.at(m, r));
                scaler.lo = std::min(scaler.lo, v);
                scaler.hi = std::max(scaler.hi, v);
            }
        }
    }

    std::vector<SampleWindow> windows;
    windows.reserve(static_cast<std::size_t>(n_windows));
    for (std::int64_t m = 0; m < n_windows; ++m) {
        SampleWindow w;
        w.start_step = m;
        w.x = Tensor(series.n_regions, u_in);
        w.y = Tensor(series.n_regions, u_out);
        for (int r = 0; r < series.n_regions; ++r) {
            for (int c = 0; c < u_in; ++c) {
                double v = static_cast<double>(series.at(m + c, r));
                w.x.at(r, c) = scale ? scaler.scale(v) : v;
            }
            for (int c = 0; c < u_out; ++c) {
                double v = static_cast<double>(series.at(m + u_in + c, r));
                w.y.at(r, c) = scale ? scaler.scale(v) : v;
            }
        }
        windows.push_back(std::move(w));
    }
    return DTDGDataset(std::move(windows), series.n_regions, u_in, u_out, scaler, series.t_window);
}

std::pair<DTDGDataset, DTDGDataset> chrono_split(const DTDGDataset& ds, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidConfig("chrono_split: train_fraction must be in (0,1)");
    }
    const std::int64_t total = static_cast<std::int64_t>(ds.window_count());
    const std::int64_t boundary =
        static_cast<std::int64_t>(std::floor(train_fraction * static_cast<double>(total)));
    // train targets reach start + u_in + u_out - 1; they must stay below the
    // first test feature index (= boundary)
    const std::int64_t keep = boundary - (ds.u_in() + ds.u_out() - 1);
    if (keep < 1) throw EmptySplit("chrono_split: no train windows survive the leakage cut");
    if (boundary >= total) throw EmptySplit("chrono_split: empty test side");

    std::vector<SampleWindow> train_w, test_w;
    for (std::int64_t i = 0; i < keep; ++i) train_w.push_back(ds.window(static_cast<std::size_t>(i)));
    for (std::int64_t i = boundary; i < total; ++i) test_w.push_back(ds.window(static_cast<std::size_t>(i)));
    DTDGDataset train(std::move(train_w), ds.n_regions(), ds.u_in(), ds.u_out(), ds.scaler(), ds.t_window());
    DTDGDataset test(std::move(test_w), ds.n_regions(), ds.u_in(), ds.u_out(), ds.scaler(), ds.t_window());
    return {std::move(train), std::move(test)};
}

// baseline adjacencies ---------------------------------------------------------

WeightedAdjacency baseline_adjacency_binary(const std::vector<Region>& regions) {
    const BBox extent = bbox_of_points(
        [&] {
            std::vector<Point> vs;
            for (const auto& r : regions)
                for (const auto& v : r.vertices()) vs.push_back(v);
            return vs;
        }(),
        0.0);
    const WeightedAdjacency shared = shared_borders_adjacency(regions, default_border_tol(extent));
    WeightedAdjacency out(shared.n);
    for (int i = 0; i < shared.n; ++i) {
        out.at(i, i) = 1.0;
        for (int j = 0; j < shared.n; ++j) {
            if (i != j && shared.at(i, j) > 0.0) out.at(i, j) = 1.0;
        }
    }
    return out;
}

WeightedAdjacency baseline_adjacency_centers(const std::vector<Point>& centers) {
    const int n = static_cast<int>(centers.size());
    if (n < 2) throw DegenerateInput("baseline_adjacency_centers: need at least 2 centers");
    WeightedAdjacency out(n);
    double max_w = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = dist(centers[static_cast<std::size_t>(i)], centers[static_cast<std::size_t>(j)]);
            if (d < 1e-12) {
                throw DuplicateCenters("baseline_adjacency_centers: centers " + std::to_string(i) +
                                       " and " + std::to_string(j) + " coincide");
            }
            const double w = 1.0 / d;
            out.at(i, j) = w;
            out.at(j, i) = w;
            max_w = std::max(max_w, w);
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j) out.at(i, j) /= max_w;
        }
        out.at(i, i) = 1.0;
    }
    return out;
}

WeightedAdjacency baseline_adjacency_traffic(const TrafficSeries& train_series) {
    const int n = train_series.n_regions;
    const std::int64_t steps = train_series.steps();
    if (n < 1 || steps < 1) throw EmptyInput("baseline_adjacency_traffic: empty series");

    std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < n; ++r) {
        for (std::int64_t m = 0; m < steps; ++m) mean[static_cast<std::size_t>(r)] += static_cast<double>(train_series.at(m, r));
        mean[static_cast<std::size_t>(r)] /= static_cast<double>(steps);
    }
    std::vector<double> var(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < n; ++r) {
        for (std::int64_t m = 0; m < steps; ++m) {
            const double d = static_cast<double>(train_series.at(m, r)) - mean[static_cast<std::size_t>(r)];
            var[static_cast<std::size_t>(r)] += d * d;
        }
    }

    WeightedAdjacency out(n);
    for (int i = 0; i < n; ++i) {
        out.at(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            double cov = 0.0;
            for (std::int64_t m = 0; m < steps; ++m) {
                cov += (static_cast<double>(train_series.at(m, i)) - mean[static_cast<std::size_t>(i)]) *
                       (static_cast<double>(train_series.at(m, j)) - mean[static_cast<std::size_t>(j)]);
            }
            const double denom = var[static_cast<std::size_t>(i)] * var[static_cast<std::size_t>(j)];
            double rho = denom > 0.0 ? cov / std::sqrt(denom) : 0.0;
            rho = std::max(0.0, rho); // keep the matrix nonnegative
            out.at(i, j) = rho;
            out.at(j, i) = rho;
        }
    }
    return out;
}

// persistence -----------------------------------------------------------------

void save_dataset(const std::string& dir, const DTDGDataset& ds) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["n_regions"] = ds.n_regions();
    meta["u_in"] = ds.u_in();
    meta["u_out"] = ds.u_out();
    meta["t_window"] = ds.t_window();
    meta["scaler"] = {{"lo", ds.scaler().lo}, {"hi", ds.scaler().hi}};
    nlohmann::json starts = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.window_count(); ++i) starts.push_back(ds.window(i).start_step);
    meta["start_steps"] = starts;
    write_text_file(dir + "/meta.json", meta.dump(2) + "\n");

    std::ostringstream rows;
    for (std::size_t i = 0; i < ds.window_count(); ++i) {
        const auto& w = ds.window(i);
        bool first = true;
        for (double v : w.x.data) {
            if (!first) rows << ',';
            rows << format_double(v);
            first = false;
        }
        for (double v : w.y.data) {
            rows << ',' << format_double(v);
        }
        rows << '\n';
    }
    write_text_file(dir + "/windows.csv", rows.str());
}

DTDGDataset load_dataset(const std::string& dir) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(dir + "/meta.json"));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("load_dataset: " + std::string(e.what()));
    }
    const int n = meta.at("n_regions");
    const int u_in = meta.at("u_in");
    const int u_out = meta.at("u_out");
    MinMaxScaler scaler{meta.at("scaler").at("lo"), meta.at("scaler").at("hi")};
    const double t_window = meta.at("t_window");
    std::vector<std::int64_t> starts = meta.at("start_steps").get<std::vector<std::int64_t>>();

    std::istringstream in(read_text_file(dir + "/windows.csv"));
    std::string line;
    std::vector<SampleWindow> windows;
    const std::size_t x_len = static_cast<std::size_t>(n) * u_in;
    const std::size_t y_len = static_cast<std::size_t>(n) * u_out;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != x_len + y_len) throw InvalidConfig("load_dataset: ragged window row");
        SampleWindow w;
        w.x = Tensor(n, u_in);
        w.y = Tensor(n, u_out);
        for (std::size_t i = 0; i < x_len; ++i) w.x.data[i] = parse_double(fields[i]);
        for (std::size_t i = 0; i < y_len; ++i) w.y.data[i] = parse_double(fields[x_len + i]);
        w.start_step = windows.size() < starts.size() ? starts[windows.size()] : static_cast<std::int64_t>(windows.size());
        windows.push_back(std::move(w));
    }
    return DTDGDataset(std::move(windows), n, u_in, u_out, scaler, t_window);
}

} // namespace west
