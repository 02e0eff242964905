#include "west/model.hpp"

#include <cmath>

#include <json.hpp>

#include "west/errors.hpp"
#include "west/util.hpp"

namespace west {

std::vector<Parameter*> WestParams::all(bool include_biases) {
    std::vector<Parameter*> out;
    for (auto& w : gcn_weights) out.push_back(&w);
    out.push_back(&w_f);
    out.push_back(&u_f);
    if (include_biases) out.push_back(&b_f);
    out.push_back(&w_i);
    out.push_back(&u_i);
    if (include_biases) out.push_back(&b_i);
    out.push_back(&w_c);
    out.push_back(&u_c);
    if (include_biases) out.push_back(&b_c);
    out.push_back(&w_o);
    out.push_back(&u_o);
    if (include_biases) out.push_back(&b_o);
    out.push_back(&dense_w);
    if (include_biases) out.push_back(&dense_b);
    return out;
}

namespace {

void validate_config(const WestConfig& c) {
    if (c.n_regions < 1 || c.u_in < 1 || c.u_out < 1 || c.k_layers < 1 || c.gcn_hidden < 1 ||
        c.lstm_hidden < 1) {
        throw InvalidConfig("model config: all dimensions must be positive");
    }
}

int lstm_input_width(const WestConfig& c) {
    return c.encoder_mode == EncoderMode::perstep ? c.gcn_hidden : 1;
}

int gcn_layer_input(const WestConfig& c, int layer) {
    if (layer > 0) return c.gcn_hidden;
    return c.encoder_mode == EncoderMode::perstep ? 1 : c.u_in;
}

int head_input(const WestConfig& c) {
    return c.head == HeadMode::per_node ? c.lstm_hidden : c.n_regions * c.lstm_hidden;
}

int head_output(const WestConfig& c) {
    return c.head == HeadMode::per_node ? c.u_out : c.n_regions * c.u_out;
}

Parameter glorot(Rng& rng, const std::string& name, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w(fan_in, fan_out);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    return Parameter(name, std::move(w));
}

} // namespace

WestParams init_params(const WestConfig& config, std::uint64_t seed) {
    validate_config(config);
    Rng rng(seed);
    WestParams p;
    for (int l = 0; l < config.k_layers; ++l) {
        p.gcn_weights.push_back(
            glorot(rng, "gcn_" + std::to_string(l), gcn_layer_input(config, l), config.gcn_hidden));
    }
    const int in = lstm_input_width(config);
    const int hid = config.lstm_hidden;
    p.w_f = glorot(rng, "w_f", in, hid);
    p.u_f = glorot(rng, "u_f", hid, hid);
    p.w_i = glorot(rng, "w_i", in, hid);
    p.u_i = glorot(rng, "u_i", hid, hid);
    p.w_c = glorot(rng, "w_c", in, hid);
    p.u_c = glorot(rng, "u_c", hid, hid);
    p.w_o = glorot(rng, "w_o", in, hid);
    p.u_o = glorot(rng, "u_o", hid, hid);
    p.b_f = Parameter("b_f", Tensor(1, hid));
    p.b_i = Parameter("b_i", Tensor(1, hid));
    p.b_c = Parameter("b_c", Tensor(1, hid));
    p.b_o = Parameter("b_o", Tensor(1, hid));
    p.dense_w = glorot(rng, "dense_w", head_input(config), head_output(config));
    p.dense_b = Parameter("dense_b", Tensor(1, head_output(config)));
    return p;
}

ParamVars register_params(Tape& tape, WestParams& params) {
    ParamVars pv;
    for (auto& w : params.gcn_weights) pv.gcn.push_back(tape.param(w));
    pv.w_f = tape.param(params.w_f);
    pv.u_f = tape.param(params.u_f);
    pv.b_f = tape.param(params.b_f);
    pv.w_i = tape.param(params.w_i);
    pv.u_i = tape.param(params.u_i);
    pv.b_i = tape.param(params.b_i);
    pv.w_c = tape.param(params.w_c);
    pv.u_c = tape.param(params.u_c);
    pv.b_c = tape.param(params.b_c);
    pv.w_o = tape.param(params.w_o);
    pv.u_o = tape.param(params.u_o);
    pv.b_o = tape.param(params.b_o);
    pv.dense_w = tape.param(params.dense_w);
    pv.dense_b = tape.param(params.dense_b);
    return pv;
}

namespace {

// leaf registration for inference paths that never run backward
ParamVars register_param_values(Tape& tape, const WestParams& params) {
    ParamVars pv;
    for (const auto& w : params.gcn_weights) pv.gcn.push_back(tape.leaf(w.value));
    pv.w_f = tape.leaf(params.w_f.value);
    pv.u_f = tape.leaf(params.u_f.value);
    pv.b_f = tape.leaf(params.b_f.value);
    pv.w_i = tape.leaf(params.w_i.value);
    pv.u_i = tape.leaf(params.u_i.value);
    pv.b_i = tape.leaf(params.b_i.value);
    pv.w_c = tape.leaf(params.w_c.value);
    pv.u_c = tape.leaf(params.u_c.value);
    pv.b_c = tape.leaf(params.b_c.value);
    pv.w_o = tape.leaf(params.w_o.value);
    pv.u_o = tape.leaf(params.u_o.value);
    pv.b_o = tape.leaf(params.b_o.value);
    pv.dense_w = tape.leaf(params.dense_w.value);
    pv.dense_b = tape.leaf(params.dense_b.value);
    return pv;
}

struct LstmState {
    Var hidden;
    Var cell;
};

LstmState lstm_step(Tape& t, Var z, LstmState s, const ParamVars& pv, bool biases) {
    auto gate = [&](Var wx, Var uh, Var b) {
        Var pre = t.add(t.matmul(z, wx), t.matmul(s.hidden, uh));
        if (biases) pre = t.add(pre, b);
        return pre;
    };
    Var forget = t.sigmoid(gate(pv.w_f, pv.u_f, pv.b_f));
    Var input = t.sigmoid(gate(pv.w_i, pv.u_i, pv.b_i));
    Var cand = t.tanh_(gate(pv.w_c, pv.u_c, pv.b_c));
    Var cell = t.add(t.hadamard(forget, s.cell), t.hadamard(input, cand));
    Var output = t.sigmoid(gate(pv.w_o, pv.u_o, pv.b_o));
    Var hidden = t.hadamard(output, t.tanh_(cell));
    return {hidden, cell};
}

Var gcn_stack(Tape& t, Var h, Var m, const std::vector<Var>& weights) {
    for (Var w : weights) h = t.relu(t.matmul(t.matmul(m, h), w));
    return h;
}

} // namespace

Var forward_on_tape(Tape& t, const Tensor& x, Var a_norm, const ParamVars& pv,
                    const WestConfig& config) {
    validate_config(config);
    if (x.rows != config.n_regions || x.cols != config.u_in) {
        throw ShapeMismatch("forward: features " + x.shape_str() + ", expected (" +
                            std::to_string(config.n_regions) + "x" + std::to_string(config.u_in) + ")");
    }

    std::vector<Var> seq;
    if (config.encoder_mode == EncoderMode::perstep) {
        Var xv = t.leaf(x);
        for (int s = 0; s < config.u_in; ++s) {
            seq.push_back(gcn_stack(t, t.slice_cols(xv, s, s + 1), a_norm, pv.gcn));
        }
    } else {
        Var h = gcn_stack(t, t.leaf(x), a_norm, pv.gcn);
        for (int s = 0; s < config.gcn_hidden; ++s) seq.push_back(t.slice_cols(h, s, s + 1));
    }

    LstmState state{t.leaf(Tensor(config.n_regions, config.lstm_hidden)),
                    t.leaf(Tensor(config.n_regions, config.lstm_hidden))};
    for (Var z : seq) state = lstm_step(t, z, state, pv, config.biases);

    Var head_in = state.hidden;
    if (config.head == HeadMode::global) {
        // flatten node rows into one vector via one-hot row selectors
        Var flat{-1};
        for (int r = 0; r < config.n_regions; ++r) {
            Tensor selector(1, config.n_regions);
            selector.at(0, r) = 1.0;
            Var row = t.matmul(t.leaf(std::move(selector)), state.hidden);
            flat = (r == 0) ? row : t.concat_cols(flat, row);
        }
        head_in = flat;
    }
    Var pred = t.matmul(head_in, pv.dense_w);
    if (config.biases) pred = t.add(pred, pv.dense_b);
    return pred;
}

Tensor prediction_matrix(const Tensor& raw, const WestConfig& config) {
    if (config.head == HeadMode::per_node) return raw;
    if (raw.rows != 1 || raw.cols != config.n_regions * config.u_out) {
        throw ShapeMismatch("prediction_matrix: " + raw.shape_str());
    }
    Tensor out(config.n_regions, config.u_out);
    out.data = raw.data; // row-major flattening is node-major
    return out;
}

Tensor gcn_encode(const Tensor& z, const RenormalizedAdjacency& a_norm, const WestParams& params,
                  int k) {
    if (k < 1 || k > static_cast<int>(params.gcn_weights.size())) {
        throw InvalidConfig("gcn_encode: k=" + std::to_string(k) + " with " +
                            std::to_string(params.gcn_weights.size()) + " layer weights");
    }
    Tape t;
    Var m = t.leaf(a_norm.matrix);
    Var h = t.leaf(z);
    for (int l = 0; l < k; ++l) {
        h = t.relu(t.matmul(t.matmul(m, h), t.leaf(params.gcn_weights[static_cast<std::size_t>(l)].value)));
    }
    return t.value(h);
}

Tensor lstm_decode(const Tensor& h_enc, const WestParams& params) {
    std::vector<Tensor> steps;
    for (int c = 0; c < h_enc.cols; ++c) steps.push_back(slice_cols(h_enc, c, c + 1));
    return lstm_decode_sequence(steps, params);
}

Tensor lstm_decode_sequence(const std::vector<Tensor>& steps, const WestParams& params) {
    if (steps.empty()) throw EmptyInput("lstm_decode: no input steps");
    Tape t;
    ParamVars pv = register_param_values(t, params);
    const int n = steps[0].rows;
    const int hid = params.u_f.value.rows;
    LstmState state{t.leaf(Tensor(n, hid)), t.leaf(Tensor(n, hid))};
    const bool biases = true; // zero-initialized biases are a no-op when unused
    for (const auto& z : steps) state = lstm_step(t, t.leaf(z), state, pv, biases);
    return t.value(state.hidden);
}

Tensor forward(const Tensor& x, const RenormalizedAdjacency& a_norm, const WestParams& params,
               const WestConfig& config) {
    Tape t;
    Var m = t.leaf(a_norm.matrix);
    ParamVars pv = register_param_values(t, params);
    Var pred = forward_on_tape(t, x, m, pv, config);
    return prediction_matrix(t.value(pred), config);
}

// checkpoint ------------------------------------------------------------------

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
    nlohmann::json j;
    j["rows"] = t.rows;
    j["cols"] = t.cols;
    nlohmann::json data = nlohmann::json::array();
    for (double v : t.data) data.push_back(format_double(v));
    j["data"] = data;
    return j;
}

Tensor tensor_from_json(const nlohmann::json& j) {
    Tensor t(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& data = j.at("data");
    if (data.size() != t.data.size()) throw CorruptCheckpoint("tensor payload size mismatch");
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = parse_double(data[i].get<std::string>());
    return t;
}

const char* encoder_mode_name(EncoderMode m) { return m == EncoderMode::perstep ? "perstep" : "block"; }
const char* head_mode_name(HeadMode m) { return m == HeadMode::per_node ? "per_node" : "global"; }

EncoderMode encoder_mode_from(const std::string& s) {
    if (s == "perstep") return EncoderMode::perstep;
    if (s == "block") return EncoderMode::block;
    throw CorruptCheckpoint("unknown encoder_mode '" + s + "'");
}

HeadMode head_mode_from(const std::string& s) {
    if (s == "per_node") return HeadMode::per_node;
    if (s == "global") return HeadMode::global;
    throw CorruptCheckpoint("unknown head '" + s + "'");
}

} // namespace

std::string checkpoint_to_json_string(const Checkpoint& ckpt) {
    nlohmann::json j;
    j["format_version"] = ckpt.format_version;
    j["config"] = {{"n_regions", ckpt.config.n_regions},
                   {"u_in", ckpt.config.u_in},
                   {"u_out", ckpt.config.u_out},
                   {"k_layers", ckpt.config.k_layers},
                   {"gcn_hidden", ckpt.config.gcn_hidden},
                   {"lstm_hidden", ckpt.config.lstm_hidden},
                   {"seed", ckpt.config.seed},
                   {"encoder_mode", encoder_mode_name(ckpt.config.encoder_mode)},
                   {"head", head_mode_name(ckpt.config.head)},
                   {"biases", ckpt.config.biases}};
    j["adjacency"] = tensor_to_json(ckpt.adjacency.matrix);
    j["scaler"] = {{"lo", format_double(ckpt.scaler.lo)}, {"hi", format_double(ckpt.scaler.hi)}};

    nlohmann::json params;
    for (std::size_t l = 0; l < ckpt.params.gcn_weights.size(); ++l) {
        params["gcn_" + std::to_string(l)] = tensor_to_json(ckpt.params.gcn_weights[l].value);
    }
    auto put = [&](const char* name, const Parameter& p) { params[name] = tensor_to_json(p.value); };
    put("w_f", ckpt.params.w_f);
    put("u_f", ckpt.params.u_f);
    put("b_f", ckpt.params.b_f);
    put("w_i", ckpt.params.w_i);
    put("u_i", ckpt.params.u_i);
    put("b_i", ckpt.params.b_i);
    put("w_c", ckpt.params.w_c);
    put("u_c", ckpt.params.u_c);
    put("b_c", ckpt.params.b_c);
    put("w_o", ckpt.params.w_o);
    put("u_o", ckpt.params.u_o);
    put("b_o", ckpt.params.b_o);
    put("dense_w", ckpt.params.dense_w);
    put("dense_b", ckpt.params.dense_b);
    j["params"] = params;
    return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("unparsable document: ") + e.what());
    }
    int version = 0;
    try {
        version = j.at("format_version").get<int>();
    } catch (const nlohmann::json::exception&) {
        throw CorruptCheckpoint("missing format_version");
    }
    if (version != kCheckpointFormatVersion) {
        throw VersionMismatch("checkpoint has format_version " + std::to_string(version) +
                              ", this build reads " + std::to_string(kCheckpointFormatVersion));
    }
    try {
        Checkpoint c;
        c.format_version = version;
        const auto& jc = j.at("config");
        c.config.n_regions = jc.at("n_regions");
        c.config.u_in = jc.at("u_in");
        c.config.u_out = jc.at("u_out");
        c.config.k_layers = jc.at("k_layers");
        c.config.gcn_hidden = jc.at("gcn_hidden");
        c.config.lstm_hidden = jc.at("lstm_hidden");
        c.config.seed = jc.at("seed");
        c.config.encoder_mode = encoder_mode_from(jc.at("encoder_mode"));
        c.config.head = head_mode_from(jc.at("head"));
        c.config.biases = jc.at("biases");

        c.adjacency.matrix = tensor_from_json(j.at("adjacency"));
        c.adjacency.n = c.adjacency.matrix.rows;
        c.scaler.lo = parse_double(j.at("scaler").at("lo").get<std::string>());
        c.scaler.hi = parse_double(j.at("scaler").at("hi").get<std::string>());

        const auto& jp = j.at("params");
        auto get = [&](const char* name) {
            return Parameter(name, tensor_from_json(jp.at(name)));
        };
        for (int l = 0; l < c.config.k_layers; ++l) {
            const std::string key = "gcn_" + std::to_string(l);
            c.params.gcn_weights.push_back(Parameter(key, tensor_from_json(jp.at(key))));
        }
        c.params.w_f = get("w_f");
        c.params.u_f = get("u_f");
        c.params.b_f = get("b_f");
        c.params.w_i = get("w_i");
        c.params.u_i = get("u_i");
        c.params.b_i = get("b_i");
        c.params.w_c = get("w_c");
        c.params.u_c = get("u_c");
        c.params.b_c = get("b_c");
        c.params.w_o = get("w_o");
        c.params.u_o = get("u_o");
        c.params.b_o = get("b_o");
        c.params.dense_w = get("dense_w");
        c.params.dense_b = get("dense_b");
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    write_text_file(path, checkpoint_to_json_string(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_json_string(read_text_file(path));
}

} // namespace west
