#include "epiga/attention.hpp"

#include <cmath>

namespace epiga::attn {

AttentionHead make_head(std::size_t input_dim, std::size_t d_v, std::size_t d_k,
                        std::size_t hidden_width, double gain, Rng& rng) {
    if (d_v == 0 || d_k == 0) throw StructuralError("make_head: d_v and d_k must be positive");
    AttentionHead head;
    head.d_k = d_k;
    head.gain = gain;
    head.net_q = nn::init_mlp(input_dim, {hidden_width}, d_v * d_k, nn::Activation::tanh,
                              nn::Activation::identity, rng);
    head.net_k = nn::init_mlp(input_dim, {hidden_width}, d_v * d_k, nn::Activation::tanh,
                              nn::Activation::identity, rng);
    return head;
}

BoundHead bind(ad::Tape& tape, const AttentionHead& head, bool trainable) {
    if (head.net_q.out_dim != head.net_k.out_dim || head.net_q.out_dim % head.d_k != 0)
        throw StructuralError("attention head: net_Q/net_K output shapes must equal d_v x d_k");
    return {&head, nn::bind(tape, head.net_q, trainable), nn::bind(tape, head.net_k, trainable)};
}

ad::Var attention_weights(ad::Tape& tape, const BoundHead& bound, ad::Var x) {
    const AttentionHead& head = *bound.head;
    const std::size_t d_v = head.d_v();
    const ad::Shape qk_shape = ad::Shape::matrix(d_v, head.d_k);
    ad::Var q = tape.reshape(nn::forward(tape, bound.q, x), qk_shape);
    ad::Var k = tape.reshape(nn::forward(tape, bound.k, x), qk_shape);
    // q_i . k_i for every row i, scaled by 1/sqrt(d_k).
    ad::Var scores = tape.scale(tape.row_sums(tape.mul(q, k)), 1.0 / std::sqrt(static_cast<double>(head.d_k)));
    ad::Var activated;
    switch (head.act) {
        case nn::Activation::sigmoid: activated = tape.sigmoid(scores); break;
        case nn::Activation::tanh: activated = tape.tanh(scores); break;
        case nn::Activation::identity: activated = scores; break;
    }
    return tape.scale(activated, head.gain);
}

std::vector<double> attention_weights(const AttentionHead& head, std::span<const double> x) {
    if (x.size() != head.input_dim())
        throw StructuralError("attention_weights: input dimension mismatch");
    ad::Tape tape;
    BoundHead bound = bind(tape, head, false);
    ad::Var in = tape.constant(ad::Tensor::vector({x.begin(), x.end()}));
    ad::Var a = attention_weights(tape, bound, in);
    auto v = a.values();
    return {v.begin(), v.end()};
}

std::vector<double> reinforce(std::span<const double> a, std::span<const double> v) {
    if (a.size() != v.size()) throw StructuralError("reinforce: dimension mismatch");
    std::vector<double> o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] * v[i];
    return o;
}

std::vector<std::vector<double>> multi_head_reinforce(std::span<const AttentionHead> heads,
                                                      std::span<const double> x,
                                                      std::span<const double> v) {
    if (heads.empty()) throw StructuralError("multi_head_reinforce: no heads");
    const std::size_t d_v = heads.front().d_v();
    for (const AttentionHead& h : heads)
        if (h.d_v() != d_v) throw StructuralError("multi_head_reinforce: heads disagree on d_v");
    if (v.size() != d_v) throw StructuralError("multi_head_reinforce: values vector dimension mismatch");
    std::vector<std::vector<double>> out;
    out.reserve(heads.size());
    for (const AttentionHead& h : heads) out.push_back(reinforce(attention_weights(h, x), v));
    return out;
}

}  // namespace epiga::attn
