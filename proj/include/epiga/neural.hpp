#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "epiga/rng.hpp"
#include "epiga/tape.hpp"

namespace epiga::nn {

enum class Activation { identity, sigmoid, tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
    ad::Tensor weight;  // out_dim x in_dim
    ad::Tensor bias;    // out_dim
    Activation act = Activation::identity;

    std::size_t out_dim() const { return weight.shape.rows(); }
    std::size_t in_dim() const { return weight.shape.cols(); }
};

// Plain fully-connected stack. The only constraint that matters downstream is
// the output shape, so depth/width live entirely in construction.
struct Mlp {
    std::vector<DenseLayer> layers;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
};

// Glorot-uniform weights, zero biases. Deterministic given the generator.
Mlp init_mlp(std::size_t in_dim, const std::vector<std::size_t>& hidden_dims, std::size_t out_dim,
             Activation hidden_act, Activation output_act, Rng& rng);

std::size_t parameter_count(const Mlp& net);

// Mlp parameters recorded on a tape (leaves when trainable, constants when
// frozen). Order: weight then bias, layer by layer.
struct BoundMlp {
    const Mlp* net = nullptr;
    std::vector<ad::Var> params;
};

BoundMlp bind(ad::Tape& tape, const Mlp& net, bool trainable);
ad::Var forward(ad::Tape& tape, const BoundMlp& bound, ad::Var input);

// One-off evaluation on a scratch tape.
ad::Tensor mlp_forward(const Mlp& net, const ad::Tensor& input);

using ParamRefs = std::vector<ad::Tensor*>;
ParamRefs parameters(Mlp& net);

struct AdamState {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<std::vector<double>> m;  // first moments, aligned with the param set
    std::vector<std::vector<double>> v;  // second moments
};

AdamState make_adam(const ParamRefs& params, double lr = 1e-2, double beta1 = 0.9,
                    double beta2 = 0.999, double eps = 1e-8);

// Standard bias-corrected Adam update, in place.
void adam_step(ParamRefs& params, std::span<const std::span<const double>> grads, AdamState& state);
void adam_step(ParamRefs& params, const ad::GradientMap& grads, const std::vector<ad::Var>& handles,
               AdamState& state);

// Snapshot text format: one record per layer,
//   layer <index> <out_dim> <in_dim> <activation>
// followed by whitespace-separated weights (row-major) then biases, with 17
// significant digits so 64-bit floats round-trip exactly.
void write_mlp(std::ostream& out, const Mlp& net, std::size_t& layer_index);

struct LayerRecord {
    std::size_t index;
    DenseLayer layer;
};

// Reads layer records until the stream is exhausted.
std::vector<LayerRecord> read_layer_records(std::istream& in);

// Greedily groups a flat record list into an Mlp with the declared
// input/output dimensions: the net ends at the first layer whose output
// matches `out_dim` (all nets in this project are one-hidden-layer stacks, so
// the grouping is unambiguous).
Mlp take_mlp(std::span<const LayerRecord>& records, std::size_t in_dim, std::size_t out_dim);

}  // namespace epiga::nn
