#pragma once

#include "epiga/neural.hpp"

namespace epiga::attn {

// One self-reinforcement-attention head: two inference networks produce the
// query and key matrices (d_v rows of dimension d_k) from the raw chromosome;
// the reinforcement weight for component i is gain * act(q_i . k_i / sqrt(d_k)).
struct AttentionHead {
    nn::Mlp net_q;  // chromosome -> d_v*d_k, reshaped to (d_v, d_k)
    nn::Mlp net_k;
    std::size_t d_k = 0;
    nn::Activation act = nn::Activation::sigmoid;
    double gain = 2.0;

    std::size_t d_v() const { return d_k == 0 ? 0 : net_q.out_dim / d_k; }
    std::size_t input_dim() const { return net_q.in_dim; }
};

// Shared default for the inference nets: one hidden layer, tanh, linear output.
AttentionHead make_head(std::size_t input_dim, std::size_t d_v, std::size_t d_k,
                        std::size_t hidden_width, double gain, Rng& rng);

struct BoundHead {
    const AttentionHead* head = nullptr;
    nn::BoundMlp q;
    nn::BoundMlp k;
};

BoundHead bind(ad::Tape& tape, const AttentionHead& head, bool trainable);

// a_i = gain * act(q_i . k_i / sqrt(d_k)); returns the weight vector (d_v).
ad::Var attention_weights(ad::Tape& tape, const BoundHead& bound, ad::Var x);

// One-off evaluation on a scratch tape.
std::vector<double> attention_weights(const AttentionHead& head, std::span<const double> x);

// o_i = a_i * v_i (element-wise reinforcement).
std::vector<double> reinforce(std::span<const double> a, std::span<const double> v);

// N parallel heads over the same values vector; output o^h per head.
std::vector<std::vector<double>> multi_head_reinforce(std::span<const AttentionHead> heads,
                                                      std::span<const double> x,
                                                      std::span<const double> v);

}  // namespace epiga::attn
