#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "west/autodiff.hpp"
#include "west/graphcore.hpp"

namespace west {

/// perstep runs the stacked convolution on each look-back column and feeds the
/// resulting sequence to the LSTM; block encodes the whole n x u_in signal once
/// and treats encoder feature columns as LSTM time-steps.
enum class EncoderMode { perstep, block };

/// per_node shares one dense head across regions; global flattens the final
/// hidden state and maps it to every region-step output jointly.
enum class HeadMode { per_node, global };

struct WestConfig {
    int n_regions = 0;
    int u_in = 0;
    int u_out = 0;
    int k_layers = 1;
    int gcn_hidden = 32;
    int lstm_hidden = 64;
    std::uint64_t seed = 0;
    EncoderMode encoder_mode = EncoderMode::perstep;
    HeadMode head = HeadMode::per_node;
    bool biases = true;
};

struct WestParams {
    std::vector<Parameter> gcn_weights; // layer l: in_width x gcn_hidden
    Parameter w_f, w_i, w_c, w_o;       // lstm input x lstm_hidden
    Parameter u_f, u_i, u_c, u_o;       // lstm_hidden x lstm_hidden
    Parameter b_f, b_i, b_c, b_o;       // 1 x lstm_hidden
    Parameter dense_w;                  // head input x head output
    Parameter dense_b;                  // 1 x head output

    /// Trainable parameters in a fixed order (biases omitted when disabled).
    std::vector<Parameter*> all(bool include_biases = true);
};

/// Glorot-uniform weights, zero biases; deterministic per seed.
WestParams init_params(const WestConfig& config, std::uint64_t seed);

/// Registered tape handles for one forward/backward pass.
struct ParamVars {
    std::vector<Var> gcn;
    Var w_f, w_i, w_c, w_o;
    Var u_f, u_i, u_c, u_o;
    Var b_f, b_i, b_c, b_o;
    Var dense_w, dense_b;
};

ParamVars register_params(Tape& tape, WestParams& params);

/// Builds the model graph for one window. The prediction Var is
/// n_regions x u_out for the per-node head, 1 x (n_regions * u_out) for the
/// global head; `prediction_matrix` restores the matrix layout.
Var forward_on_tape(Tape& tape, const Tensor& x, Var a_norm, const ParamVars& pv,
                    const WestConfig& config);

Tensor prediction_matrix(const Tensor& raw, const WestConfig& config);

/// K stacked convolutions over the renormalized adjacency: relu(M h W) per layer.
Tensor gcn_encode(const Tensor& z, const RenormalizedAdjacency& a_norm, const WestParams& params,
                  int k);

/// LSTM over the columns of h_enc (one column per time-step); returns the final
/// hidden state per node.
Tensor lstm_decode(const Tensor& h_enc, const WestParams& params);

/// LSTM over an explicit sequence of per-step inputs.
Tensor lstm_decode_sequence(const std::vector<Tensor>& steps, const WestParams& params);

/// Full prediction for one window in scaled space.
Tensor forward(const Tensor& x, const RenormalizedAdjacency& a_norm, const WestParams& params,
               const WestConfig& config);

struct Checkpoint {
    int format_version = 1;
    WestConfig config;
    RenormalizedAdjacency adjacency;
    WestParams params;
    MinMaxScaler scaler;
};

inline constexpr int kCheckpointFormatVersion = 1;

std::string checkpoint_to_json_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json_string(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace west
