#include "west/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "west/errors.hpp"
#include "west/util.hpp"

namespace west {

// metrics ----------------------------------------------------------------------

MetricsReport compute_metrics(const std::vector<Tensor>& pred, const std::vector<Tensor>& truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw ShapeMismatch("compute_metrics: " + std::to_string(pred.size()) + " predictions vs " +
                            std::to_string(truth.size()) + " targets");
    }
    const int n = pred[0].rows;
    const int u = pred[0].cols;
    for (std::size_t w = 0; w < pred.size(); ++w) {
        if (pred[w].rows != n || pred[w].cols != u || truth[w].rows != n || truth[w].cols != u) {
            throw ShapeMismatch("compute_metrics: window " + std::to_string(w) + " is " +
                                pred[w].shape_str() + " vs " + truth[w].shape_str());
        }
    }

    MetricsReport rep;
    rep.per_region_mae.assign(static_cast<std::size_t>(n), 0.0);
    rep.per_region_mse.assign(static_cast<std::size_t>(n), 0.0);
    rep.per_region_rmse.assign(static_cast<std::size_t>(n), 0.0);
    rep.per_step_mae.assign(static_cast<std::size_t>(u), 0.0);
    rep.per_step_mse.assign(static_cast<std::size_t>(u), 0.0);
    rep.per_step_rmse.assign(static_cast<std::size_t>(u), 0.0);

    for (std::size_t w = 0; w < pred.size(); ++w) {
        for (int r = 0; r < n; ++r) {
            for (int s = 0; s < u; ++s) {
                const double d = pred[w].at(r, s) - truth[w].at(r, s);
                rep.mae += std::fabs(d);
                rep.mse += d * d;
                rep.per_region_mae[static_cast<std::size_t>(r)] += std::fabs(d);
                rep.per_region_mse[static_cast<std::size_t>(r)] += d * d;
                rep.per_step_mae[static_cast<std::size_t>(s)] += std::fabs(d);
                rep.per_step_mse[static_cast<std::size_t>(s)] += d * d;
            }
        }
    }
    const double total = static_cast<double>(pred.size()) * n * u;
    rep.mae /= total;
    rep.mse /= total;
    rep.rmse = std::sqrt(rep.mse);
    const double per_region_count = static_cast<double>(pred.size()) * u;
    const double per_step_count = static_cast<double>(pred.size()) * n;
    for (int r = 0; r < n; ++r) {
        rep.per_region_mae[static_cast<std::size_t>(r)] /= per_region_count;
        rep.per_region_mse[static_cast<std::size_t>(r)] /= per_region_count;
        rep.per_region_rmse[static_cast<std::size_t>(r)] = std::sqrt(rep.per_region_mse[static_cast<std::size_t>(r)]);
    }
    for (int s = 0; s < u; ++s) {
        rep.per_step_mae[static_cast<std::size_t>(s)] /= per_step_count;
        rep.per_step_mse[static_cast<std::size_t>(s)] /= per_step_count;
        rep.per_step_rmse[static_cast<std::size_t>(s)] = std::sqrt(rep.per_step_mse[static_cast<std::size_t>(s)]);
    }
    return rep;
}

std::string metrics_to_json(const MetricsReport& report, int k) {
    nlohmann::json j;
    j["mae"] = report.mae;
    j["mse"] = report.mse;
    j["rmse"] = report.rmse;
    nlohmann::json per_region = nlohmann::json::array();
    for (std::size_t r = 0; r < report.per_region_mae.size(); ++r) {
        per_region.push_back({{"mae", report.per_region_mae[r]},
                              {"mse", report.per_region_mse[r]},
                              {"rmse", report.per_region_rmse[r]}});
    }
    j["per_region"] = per_region;
    nlohmann::json per_step = nlohmann::json::array();
    for (std::size_t s = 0; s < report.per_step_mae.size(); ++s) {
        per_step.push_back({{"mae", report.per_step_mae[s]},
                            {"mse", report.per_step_mse[s]},
                            {"rmse", report.per_step_rmse[s]}});
    }
    j["per_step"] = per_step;
    if (k >= 0) j["k"] = k;
    return j.dump(2);
}

std::string history_to_csv(const TrainHistory& history) {
    std::ostringstream out;
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        out << e << ',' << format_double(history.train_loss[e]) << ',';
        if (e < history.val_loss.size()) out << format_double(history.val_loss[e]);
        out << '\n';
    }
    return out.str();
}

// training ----------------------------------------------------------------------

namespace {

void validate_train_config(const TrainConfig& c) {
    if (c.epochs < 1) throw InvalidConfig("train: epochs must be >= 1");
    if (!(c.learning_rate >= 0.0)) throw InvalidConfig("train: learning_rate must be nonnegative");
    if (c.batch_size < 1) throw InvalidConfig("train: batch_size must be >= 1");
    if (!(c.beta1 > 0.0 && c.beta1 < 1.0) || !(c.beta2 > 0.0 && c.beta2 < 1.0)) {
        throw InvalidConfig("train: beta1 and beta2 must lie in (0,1)");
    }
    if (!(c.epsilon > 0.0)) throw InvalidConfig("train: epsilon must be positive");
    if (c.early_stop_patience < 0) throw InvalidConfig("train: early_stop_patience must be >= 0");
}

Tensor head_target(const Tensor& y, const WestConfig& cfg) {
    if (cfg.head == HeadMode::per_node) return y;
    Tensor flat(1, y.rows * y.cols);
    flat.data = y.data;
    return flat;
}

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long step = 0;
};

void optimizer_step(const TrainConfig& tcfg, std::vector<Parameter*>& params, AdamState& adam) {
    if (tcfg.optimizer == OptimizerKind::sgd) {
        for (auto* p : params) {
            for (std::size_t i = 0; i < p->value.data.size(); ++i) {
                p->value.data[i] -= tcfg.learning_rate * p->grad.data[i];
            }
            p->reset_grad();
        }
        return;
    }
    if (adam.m.empty()) {
        for (auto* p : params) {
            adam.m.push_back(Tensor(p->value.rows, p->value.cols));
            adam.v.push_back(Tensor(p->value.rows, p->value.cols));
        }
    }
    adam.step += 1;
    const double bc1 = 1.0 - std::pow(tcfg.beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(tcfg.beta2, static_cast<double>(adam.step));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter* p = params[pi];
        Tensor& m = adam.m[pi];
        Tensor& v = adam.v[pi];
        for (std::size_t i = 0; i < p->value.data.size(); ++i) {
            const double g = p->grad.data[i];
            m.data[i] = tcfg.beta1 * m.data[i] + (1.0 - tcfg.beta1) * g;
            v.data[i] = tcfg.beta2 * v.data[i] + (1.0 - tcfg.beta2) * g * g;
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            p->value.data[i] -= tcfg.learning_rate * m_hat / (std::sqrt(v_hat) + tcfg.epsilon);
        }
        p->reset_grad();
    }
}

double dataset_loss(const WestConfig& cfg, const WestParams& params, const RenormalizedAdjacency& a,
                    const DTDGDataset& ds, std::size_t from, std::size_t to) {
    double total = 0.0;
    for (std::size_t i = from; i < to; ++i) {
        const auto& w = ds.window(i);
        const Tensor pred = forward(w.x, a, params, cfg);
        total += mse_loss(pred, w.y).data[0];
    }
    return total / static_cast<double>(to - from);
}

} // namespace

TrainResult train(const WestConfig& model_config, const DTDGDataset& train_ds,
                  const RenormalizedAdjacency& a_norm, const TrainConfig& tcfg) {
    validate_train_config(tcfg);
    const std::size_t total = train_ds.window_count();
    if (total == 0) throw EmptyInput("train: no training windows");
    if (a_norm.n != model_config.n_regions) {
        throw ShapeMismatch("train: adjacency n=" + std::to_string(a_norm.n) + " vs config n=" +
                            std::to_string(model_config.n_regions));
    }

    const std::size_t n_val = tcfg.early_stop_patience > 0 ? total / 10 : 0;
    const std::size_t n_fit = total - n_val;
    const bool use_val = n_val >= 1;

    WestParams params = init_params(model_config, model_config.seed);
    auto trainable = params.all(model_config.biases);
    AdamState adam;

    TrainHistory history;
    WestParams best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n_fit; start += static_cast<std::size_t>(tcfg.batch_size)) {
            const std::size_t stop = std::min(n_fit, start + static_cast<std::size_t>(tcfg.batch_size));
            const std::size_t count = stop - start;

            Tape tape;
            Var m = tape.leaf(a_norm.matrix);
            ParamVars pv = register_params(tape, params);
            Var batch_loss{-1};
            for (std::size_t i = start; i < stop; ++i) {
                const auto& w = train_ds.window(i);
                Var pred = forward_on_tape(tape, w.x, m, pv, model_config);
                Var loss = tape.mse_loss(pred, tape.leaf(head_target(w.y, model_config)));
                batch_loss = (i == start) ? loss : tape.add(batch_loss, loss);
            }
            if (count > 1) {
                batch_loss = tape.hadamard(
                    batch_loss, tape.leaf(Tensor::full(1, 1, 1.0 / static_cast<double>(count))));
            }
            const double loss_value = tape.value(batch_loss).data[0];
            if (!std::isfinite(loss_value)) {
                throw Diverged("train: non-finite loss at epoch " + std::to_string(epoch));
            }
            tape.backward(batch_loss);
            optimizer_step(tcfg, trainable, adam);

            epoch_loss += loss_value * static_cast<double>(count);
            seen += count;
        }
        epoch_loss /= static_cast<double>(seen);
        history.train_loss.push_back(epoch_loss);

        if (use_val) {
            const double val = dataset_loss(model_config, params, a_norm, train_ds, n_fit, total);
            if (!std::isfinite(val)) {
                throw Diverged("train: non-finite validation loss at epoch " + std::to_string(epoch));
            }
            history.val_loss.push_back(val);
            if (val < best_val - 1e-12) {
                best_val = val;
                best_params = params;
                history.best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= tcfg.early_stop_patience) {
                break;
            }
        }
    }

    TrainResult result;
    if (use_val && history.best_epoch >= 0) {
        result.params = std::move(best_params);
    } else {
        result.params = std::move(params);
        history.best_epoch = static_cast<int>(history.train_loss.size()) - 1;
    }
    result.history = std::move(history);
    return result;
}

// evaluation --------------------------------------------------------------------

std::uint64_t test_window_hash(const DTDGDataset& test) {
    std::uint64_t h = fnv1a_init();
    fnv1a_append_u64(h, static_cast<std::uint64_t>(test.n_regions()));
    fnv1a_append_u64(h, static_cast<std::uint64_t>(test.u_in()));
    fnv1a_append_u64(h, static_cast<std::uint64_t>(test.u_out()));
    fnv1a_append_u64(h, test.window_count());
    for (std::size_t i = 0; i < test.window_count(); ++i) {
        const auto& w = test.window(i);
        fnv1a_append_u64(h, static_cast<std::uint64_t>(w.start_step));
        for (double v : w.y.data) {
            fnv1a_append_u64(h, static_cast<std::uint64_t>(
                                    std::llround(test.scaler().unscale(v))));
        }
    }
    return h;
}

EvalOutcome evaluate_model(const WestConfig& config, const WestParams& params,
                           const RenormalizedAdjacency& a_norm, const DTDGDataset& test) {
    if (test.window_count() == 0) throw EmptyInput("evaluate_model: no test windows");
    EvalOutcome out;
    out.window_hash = test_window_hash(test);
    const MinMaxScaler& sc = test.scaler();
    for (std::size_t i = 0; i < test.window_count(); ++i) {
        const auto& w = test.window(i);
        Tensor pred = forward(w.x, a_norm, params, config);
        Tensor truth(w.y.rows, w.y.cols);
        for (std::size_t e = 0; e < pred.data.size(); ++e) {
            pred.data[e] = sc.unscale(pred.data[e]);
            truth.data[e] = static_cast<double>(std::llround(sc.unscale(w.y.data[e])));
        }
        out.pred_counts.push_back(std::move(pred));
        out.truth_counts.push_back(std::move(truth));
    }
    out.report = compute_metrics(out.pred_counts, out.truth_counts);
    return out;
}

// per-K pipeline ------------------------------------------------------------------

PerKResult per_k_pipeline(const std::vector<TrajectoryPoint>& trajectories,
                          const std::vector<Region>& regions, const std::vector<double>& speeds,
                          const Classification& cls, int u_in, int u_out,
                          const TrainConfig& tcfg, const PipelineOptions& opts) {
    if (trajectories.empty()) throw EmptyInput("per_k_pipeline: no trajectories");
    if (cls.population.empty()) throw EmptyInput("per_k_pipeline: empty classification");

    std::vector<Point> centers;
    centers.reserve(regions.size());
    for (const auto& r : regions) centers.push_back(r.center);

    PerKResult result;
    result.hops = adjustable_hops(speeds, centers, u_out, opts.hops_window, opts.distance_mode);

    double t_start = trajectories[0].t;
    double t_end = trajectories[0].t;
    for (const auto& tp : trajectories) {
        t_start = std::min(t_start, tp.t);
        t_end = std::max(t_end, tp.t);
    }
    result.t_start = t_start;
    result.t_end = t_end;

    // group populations by their K
    std::map<int, std::vector<int>> pops_by_k;
    for (std::size_t p = 0; p < speeds.size(); ++p) {
        pops_by_k[result.hops.k[p]].push_back(static_cast<int>(p));
    }

    std::vector<Tensor> agg_pred, agg_truth;
    std::vector<std::int64_t> test_start_steps;
    bool first_group_done = false;

    for (const auto& [k_layers, population_ids] : pops_by_k) {
        std::set<int> member_pops(population_ids.begin(), population_ids.end());
        std::set<std::int64_t> member_entities;
        for (const auto& [entity, pop] : cls.population) {
            if (member_pops.count(pop) > 0) member_entities.insert(entity);
        }
        if (member_entities.empty()) continue;

        std::vector<TrajectoryPoint> subset;
        for (const auto& tp : trajectories) {
            if (member_entities.count(tp.entity_id) > 0) subset.push_back(tp);
        }

        TrafficSeries series =
            aggregate_traffic(subset, regions, result.hops.t_window, t_start, t_end);
        DTDGDataset ds = window_dataset(series, u_in, u_out, opts.scale, opts.train_fraction);
        auto [train_ds, test_ds] = chrono_split(ds, opts.train_fraction);

        WestConfig mcfg;
        mcfg.n_regions = static_cast<int>(regions.size());
        mcfg.u_in = u_in;
        mcfg.u_out = u_out;
        mcfg.k_layers = k_layers;
        mcfg.gcn_hidden = opts.gcn_hidden;
        mcfg.lstm_hidden = opts.lstm_hidden;
        mcfg.encoder_mode = opts.encoder_mode;
        mcfg.head = opts.head;
        mcfg.biases = opts.biases;
        mcfg.seed = opts.seed + static_cast<std::uint64_t>(k_layers);

        const WeightedAdjacency shared = shared_borders_adjacency(
            regions, default_border_tol(bbox_of_points(centers, 0.0)));
        const RenormalizedAdjacency a_norm = renormalize(normalize_adjacency_weights(shared));

        TrainResult trained = train(mcfg, train_ds, a_norm, tcfg);
        EvalOutcome eval = evaluate_model(mcfg, trained.params, a_norm, test_ds);

        if (!first_group_done) {
            agg_pred = eval.pred_counts;
            agg_truth = eval.truth_counts;
            for (std::size_t i = 0; i < test_ds.window_count(); ++i) {
                test_start_steps.push_back(test_ds.window(i).start_step);
            }
            first_group_done = true;
        } else {
            if (agg_pred.size() != eval.pred_counts.size()) {
                throw ShapeMismatch("per_k_pipeline: group window counts differ");
            }
            for (std::size_t i = 0; i < agg_pred.size(); ++i) {
                agg_pred[i] = add(agg_pred[i], eval.pred_counts[i]);
                agg_truth[i] = add(agg_truth[i], eval.truth_counts[i]);
            }
        }

        PerKGroup group;
        group.k_layers = k_layers;
        group.population_ids = population_ids;
        group.entity_count = static_cast<std::int64_t>(member_entities.size());
        group.checkpoint = Checkpoint{kCheckpointFormatVersion, mcfg, a_norm,
                                      std::move(trained.params), ds.scaler()};
        group.history = std::move(trained.history);
        group.report = std::move(eval.report);
        result.groups.push_back(std::move(group));
    }

    if (result.groups.empty()) throw EmptyInput("per_k_pipeline: no populated groups");
    result.aggregate = compute_metrics(agg_pred, agg_truth);

    // same basis as test_window_hash, over the aggregate (total-count) targets,
    // so every adjacency mode scoring the same period reports the same value
    std::uint64_t h = fnv1a_init();
    fnv1a_append_u64(h, static_cast<std::uint64_t>(regions.size()));
    fnv1a_append_u64(h, static_cast<std::uint64_t>(u_in));
    fnv1a_append_u64(h, static_cast<std::uint64_t>(u_out));
    fnv1a_append_u64(h, agg_truth.size());
    for (std::size_t i = 0; i < agg_truth.size(); ++i) {
        fnv1a_append_u64(h, static_cast<std::uint64_t>(test_start_steps[i]));
        for (double v : agg_truth[i].data) {
            fnv1a_append_u64(h, static_cast<std::uint64_t>(std::llround(v)));
        }
    }
    result.window_hash = h;
    return result;
}

} // namespace west
