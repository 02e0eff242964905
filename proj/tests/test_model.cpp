#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support.hpp"
#include "west/errors.hpp"
#include "west/model.hpp"
#include "west/util.hpp"

using namespace west;

namespace {

WestConfig small_config(EncoderMode enc = EncoderMode::perstep, HeadMode head = HeadMode::per_node) {
    WestConfig c;
    c.n_regions = 3;
    c.u_in = 2;
    c.u_out = 2;
    c.k_layers = 2;
    c.gcn_hidden = 4;
    c.lstm_hidden = 4;
    c.seed = 7;
    c.encoder_mode = enc;
    c.head = head;
    return c;
}

RenormalizedAdjacency renorm_identity(int n) {
    return renormalize(WeightedAdjacency(n));
}

RenormalizedAdjacency path_graph_renorm(int n) {
    WeightedAdjacency a(n);
    for (int i = 0; i < n; ++i) {
        a.at(i, i) = 1.0;
        if (i + 1 < n) {
            a.at(i, i + 1) = 1.0;
            a.at(i + 1, i) = 1.0;
        }
    }
    return renormalize(a);
}

Tensor random_tensor(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
    Tensor t(r, c);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("init_params: deterministic, bounded, centered") {
    auto cfg = small_config();
    auto a = init_params(cfg, 99);
    auto b = init_params(cfg, 99);
    CHECK(a.w_f.value.data == b.w_f.value.data);
    CHECK(a.gcn_weights[1].value.data == b.gcn_weights[1].value.data);
    auto c = init_params(cfg, 100);
    CHECK(a.w_f.value.data != c.w_f.value.data);

    for (auto* p : a.all()) {
        const double bound = std::sqrt(6.0 / (p->value.rows + p->value.cols));
        for (double v : p->value.data) CHECK(std::fabs(v) <= bound);
    }
    CHECK(a.b_f.value.data == Tensor::zeros(1, 4).data);

    // law-of-large-numbers check on a 100x100 block
    WestConfig big = cfg;
    big.gcn_hidden = 100;
    auto p = init_params(big, 3);
    const Tensor& w = p.gcn_weights[1].value; // gcn_hidden x gcn_hidden
    REQUIRE(w.rows == 100);
    REQUIRE(w.cols == 100);
    double mean = 0.0;
    for (double v : w.data) mean += v;
    mean /= static_cast<double>(w.data.size());
    CHECK(std::fabs(mean) < 0.02);
}

TEST_CASE("gcn_encode: identity propagation and the averaging fixture") {
    WestConfig cfg;
    cfg.n_regions = 2;
    cfg.u_in = 1;
    cfg.u_out = 1;
    cfg.k_layers = 1;
    cfg.gcn_hidden = 1;
    cfg.lstm_hidden = 2;
    cfg.encoder_mode = EncoderMode::block;
    auto params = init_params(cfg, 0);
    params.gcn_weights[0].value = Tensor{{1.0}};

    const Tensor z{{2.0}, {0.5}};
    auto out = gcn_encode(z, renorm_identity(2), params, 1);
    CHECK(out.at(0, 0) == doctest::Approx(2.0));
    CHECK(out.at(1, 0) == doctest::Approx(0.5));

    RenormalizedAdjacency mix;
    mix.n = 2;
    mix.matrix = Tensor{{0.5, 0.5}, {0.5, 0.5}};
    auto averaged = gcn_encode(Tensor{{2.0}, {0.0}}, mix, params, 1);
    CHECK(averaged.at(0, 0) == doctest::Approx(1.0));
    CHECK(averaged.at(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("gcn_encode: permutation equivariance and nonnegative codomain") {
    Rng rng(1010);
    WestConfig cfg;
    cfg.n_regions = 5;
    cfg.u_in = 3;
    cfg.u_out = 1;
    cfg.k_layers = 2;
    cfg.gcn_hidden = 4;
    cfg.lstm_hidden = 2;
    cfg.encoder_mode = EncoderMode::block;

    for (int trial = 0; trial < 10; ++trial) {
        auto params = init_params(cfg, 100 + static_cast<std::uint64_t>(trial));
        // random symmetric normalized adjacency
        WeightedAdjacency a(5);
        for (int i = 0; i < 5; ++i)
            for (int j = i; j < 5; ++j) {
                const double v = (i == j) ? 1.0 : (rng.uniform() < 0.5 ? rng.uniform() : 0.0);
                a.at(i, j) = v;
                a.at(j, i) = v;
            }
        auto m = renormalize(a);
        const Tensor z = random_tensor(rng, 5, 3);
        const Tensor base = gcn_encode(z, m, params, 2);
        for (double v : base.data) CHECK(v >= 0.0);

        // random permutation
        std::vector<int> perm = {0, 1, 2, 3, 4};
        for (int i = 4; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);

        Tensor zp(5, 3);
        RenormalizedAdjacency mp;
        mp.n = 5;
        mp.matrix = Tensor(5, 5);
        for (int i = 0; i < 5; ++i) {
            for (int c = 0; c < 3; ++c) zp.at(perm[static_cast<std::size_t>(i)], c) = z.at(i, c);
            for (int j = 0; j < 5; ++j) {
                mp.matrix.at(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = m.matrix.at(i, j);
            }
        }
        const Tensor permuted = gcn_encode(zp, mp, params, 2);
        for (int i = 0; i < 5; ++i)
            for (int c = 0; c < 4; ++c) {
                CHECK(permuted.at(perm[static_cast<std::size_t>(i)], c) ==
                      doctest::Approx(base.at(i, c)).epsilon(1e-10));
            }
    }
}

TEST_CASE("hop locality: K bounds the receptive field on a path graph") {
    Rng rng(555);
    WestConfig cfg;
    cfg.n_regions = 5;
    cfg.u_in = 3;
    cfg.u_out = 1;
    cfg.k_layers = 1;
    cfg.gcn_hidden = 4;
    cfg.lstm_hidden = 2;
    cfg.encoder_mode = EncoderMode::block;
    auto params1 = init_params(cfg, 1);
    cfg.k_layers = 2;
    auto params2 = init_params(cfg, 1);

    auto m = path_graph_renorm(5);
    const Tensor z = random_tensor(rng, 5, 3, 0.1, 1.0);
    Tensor z_masked = z;
    for (int node : {0, 4}) { // both are >= 2 hops from node 2
        for (int c = 0; c < 3; ++c) z_masked.at(node, c) = 0.0;
    }

    const Tensor k1_full = gcn_encode(z, m, params1, 1);
    const Tensor k1_masked = gcn_encode(z_masked, m, params1, 1);
    double delta1 = 0.0;
    for (int c = 0; c < 4; ++c) delta1 = std::max(delta1, std::fabs(k1_full.at(2, c) - k1_masked.at(2, c)));
    CHECK(delta1 < 1e-12);

    const Tensor k2_full = gcn_encode(z, m, params2, 2);
    const Tensor k2_masked = gcn_encode(z_masked, m, params2, 2);
    double delta2 = 0.0;
    for (int c = 0; c < 4; ++c) delta2 = std::max(delta2, std::fabs(k2_full.at(2, c) - k2_masked.at(2, c)));
    CHECK(delta2 > 1e-6);
}

TEST_CASE("lstm_decode: zero input with zero biases stays at rest") {
    WestConfig cfg;
    cfg.n_regions = 3;
    cfg.u_in = 4;
    cfg.u_out = 1;
    cfg.k_layers = 1;
    cfg.gcn_hidden = 4;
    cfg.lstm_hidden = 5;
    cfg.encoder_mode = EncoderMode::block;
    auto params = init_params(cfg, 21);

    const Tensor h_enc = Tensor::zeros(3, 4);
    auto hidden = lstm_decode(h_enc, params);
    REQUIRE(hidden.rows == 3);
    REQUIRE(hidden.cols == 5);
    for (double v : hidden.data) CHECK(v == 0.0);
}

TEST_CASE("lstm_decode: cell and hidden bounds over long sequences") {
    Rng rng(8);
    WestConfig cfg;
    cfg.n_regions = 2;
    cfg.u_in = 4;
    cfg.u_out = 1;
    cfg.k_layers = 1;
    cfg.gcn_hidden = 6;
    cfg.lstm_hidden = 6;
    cfg.encoder_mode = EncoderMode::block;
    auto params = init_params(cfg, 77);
    const Tensor h_enc = random_tensor(rng, 2, 6, -3.0, 3.0);
    auto hidden = lstm_decode(h_enc, params);
    for (double v : hidden.data) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("lstm_decode: saturated forget gate matches the hand-evaluated cell") {
    WestConfig cfg;
    cfg.n_regions = 1;
    cfg.u_in = 1;
    cfg.u_out = 1;
    cfg.k_layers = 1;
    cfg.gcn_hidden = 1;
    cfg.lstm_hidden = 3;
    cfg.encoder_mode = EncoderMode::block;
    auto params = init_params(cfg, 3);

    // one step, scalar input 0.7; U matrices irrelevant (previous hidden is 0)
    const double x = 0.7;
    params.w_f.value = Tensor::zeros(1, 3);
    params.b_f.value = Tensor::full(1, 3, 50.0);
    params.w_i.value = Tensor{{0.2, -0.4, 0.9}};
    params.b_i.value = Tensor{{0.1, 0.0, -0.2}};
    params.w_c.value = Tensor{{-0.5, 0.3, 0.8}};
    params.b_c.value = Tensor{{0.0, 0.25, -0.1}};
    params.w_o.value = Tensor{{1.0, 0.6, -0.7}};
    params.b_o.value = Tensor{{0.0, -0.3, 0.2}};

    auto hidden = lstm_decode(Tensor{{x}}, params);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int j = 0; j < 3; ++j) {
        const double input_gate = sig(x * params.w_i.value.at(0, j) + params.b_i.value.at(0, j));
        const double cand = std::tanh(x * params.w_c.value.at(0, j) + params.b_c.value.at(0, j));
        const double cell = input_gate * cand; // forget term vanishes against zero cell
        const double out_gate = sig(x * params.w_o.value.at(0, j) + params.b_o.value.at(0, j));
        CHECK(hidden.at(0, j) == doctest::Approx(out_gate * std::tanh(cell)).epsilon(1e-12));
        // forget gate itself saturates at 1 within double precision
        CHECK(sig(50.0) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("forward: shape contract and determinism across modes") {
    Rng rng(31);
    for (EncoderMode enc : {EncoderMode::perstep, EncoderMode::block}) {
        for (HeadMode head : {HeadMode::per_node, HeadMode::global}) {
            auto cfg = small_config(enc, head);
            auto params = init_params(cfg, 5);
            auto m = path_graph_renorm(cfg.n_regions);
            const Tensor x = random_tensor(rng, cfg.n_regions, cfg.u_in, 0.0, 1.0);
            auto y1 = forward(x, m, params, cfg);
            auto y2 = forward(x, m, params, cfg);
            CHECK(y1.rows == cfg.n_regions);
            CHECK(y1.cols == cfg.u_out);
            CHECK(y1.data == y2.data);
        }
    }
}

TEST_CASE("forward: full-model gradients agree with finite differences") {
    Rng rng(606);
    for (EncoderMode enc : {EncoderMode::perstep, EncoderMode::block}) {
        for (HeadMode head : {HeadMode::per_node, HeadMode::global}) {
            auto cfg = small_config(enc, head);
            auto params = init_params(cfg, 11);
            auto m = path_graph_renorm(cfg.n_regions);
            const Tensor x = random_tensor(rng, cfg.n_regions, cfg.u_in, 0.0, 1.0);
            const Tensor y = random_tensor(rng, cfg.n_regions, cfg.u_out, 0.0, 1.0);
            Tensor y_target = y;
            if (head == HeadMode::global) {
                y_target = Tensor(1, cfg.n_regions * cfg.u_out);
                y_target.data = y.data;
            }

            auto build = [&](Tape& t) {
                Var mv = t.leaf(m.matrix);
                ParamVars pv = register_params(t, params);
                Var pred = forward_on_tape(t, x, mv, pv, cfg);
                return t.mse_loss(pred, t.leaf(y_target));
            };
            auto trainable = params.all();
            // h large enough that cancellation noise stays clear of the
            // near-zero gradients flowing through saturated gates
            const double err = finite_diff_check(build, trainable, 1e-4);
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("checkpoint: lossless round-trip and version guard") {
    auto cfg = small_config();
    auto params = init_params(cfg, 13);
    auto m = path_graph_renorm(cfg.n_regions);

    Checkpoint ckpt{kCheckpointFormatVersion, cfg, m, std::move(params), MinMaxScaler{2.0, 97.0}};
    const std::string path = "ckpt_tmp.json";
    save_checkpoint(path, ckpt);
    auto loaded = load_checkpoint(path);

    CHECK(loaded.config.n_regions == cfg.n_regions);
    CHECK(loaded.scaler.lo == 2.0);
    CHECK(loaded.scaler.hi == 97.0);
    auto lhs = ckpt.params.all();
    auto rhs = loaded.params.all();
    REQUIRE(lhs.size() == rhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        CHECK(lhs[i]->value.data == rhs[i]->value.data);
    }

    Rng rng(2);
    const Tensor x = random_tensor(rng, cfg.n_regions, cfg.u_in, 0.0, 1.0);
    auto before = forward(x, ckpt.adjacency, ckpt.params, ckpt.config);
    auto after = forward(x, loaded.adjacency, loaded.params, loaded.config);
    CHECK(before.data == after.data);

    // truncation corrupts
    const std::string full = read_text_file(path);
    write_text_file(path, full.substr(0, full.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(path), CorruptCheckpoint);

    // future version is refused with both versions named
    std::string bumped = full;
    const auto pos = bumped.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 2");
    write_text_file(path, bumped);
    try {
        load_checkpoint(path);
        FAIL("expected VersionMismatch");
    } catch (const VersionMismatch& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2") != std::string::npos);
        CHECK(msg.find("1") != std::string::npos);
    }
    std::filesystem::remove(path);
}
