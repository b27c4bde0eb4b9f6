#include "epiga/neural.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace epiga::nn {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation tag: " + s);
}

Mlp init_mlp(std::size_t in_dim, const std::vector<std::size_t>& hidden_dims, std::size_t out_dim,
             Activation hidden_act, Activation output_act, Rng& rng) {
    if (in_dim == 0 || out_dim == 0) throw StructuralError("init_mlp: dimensions must be positive");
    for (std::size_t h : hidden_dims)
        if (h == 0) throw StructuralError("init_mlp: dimensions must be positive");

    Mlp net;
    net.in_dim = in_dim;
    net.out_dim = out_dim;
    std::size_t prev = in_dim;
    auto add_layer = [&](std::size_t out, Activation act) {
        const double bound = std::sqrt(6.0 / static_cast<double>(prev + out));
        std::vector<double> w(out * prev);
        for (double& x : w) x = rng.uniform(-bound, bound);
        DenseLayer layer{ad::Tensor::matrix(out, prev, std::move(w)),
                         ad::Tensor::vector(std::vector<double>(out, 0.0)), act};
        net.layers.push_back(std::move(layer));
        prev = out;
    };
    for (std::size_t h : hidden_dims) add_layer(h, hidden_act);
    add_layer(out_dim, output_act);
    return net;
}

std::size_t parameter_count(const Mlp& net) {
    std::size_t n = 0;
    for (const DenseLayer& l : net.layers) n += l.weight.size() + l.bias.size();
    return n;
}

BoundMlp bind(ad::Tape& tape, const Mlp& net, bool trainable) {
    BoundMlp b;
    b.net = &net;
    b.params.reserve(net.layers.size() * 2);
    for (const DenseLayer& l : net.layers) {
        b.params.push_back(trainable ? tape.leaf(l.weight) : tape.constant(l.weight));
        b.params.push_back(trainable ? tape.leaf(l.bias) : tape.constant(l.bias));
    }
    return b;
}

ad::Var forward(ad::Tape& tape, const BoundMlp& bound, ad::Var input) {
    if (input.shape().rank != 1 || input.shape().count() != bound.net->in_dim)
        throw StructuralError("mlp_forward: input dimension mismatch");
    ad::Var x = input;
    for (std::size_t i = 0; i < bound.net->layers.size(); ++i) {
        ad::Var z = tape.add(tape.matmul(bound.params[2 * i], x), bound.params[2 * i + 1]);
        switch (bound.net->layers[i].act) {
            case Activation::identity: x = z; break;
            case Activation::sigmoid: x = tape.sigmoid(z); break;
            case Activation::tanh: x = tape.tanh(z); break;
        }
    }
    return x;
}

ad::Tensor mlp_forward(const Mlp& net, const ad::Tensor& input) {
    ad::Tape tape;
    BoundMlp b = bind(tape, net, false);
    ad::Var out = forward(tape, b, tape.constant(input));
    auto v = out.values();
    return ad::Tensor(out.shape(), std::vector<double>(v.begin(), v.end()));
}

ParamRefs parameters(Mlp& net) {
    ParamRefs refs;
    refs.reserve(net.layers.size() * 2);
    for (DenseLayer& l : net.layers) {
        refs.push_back(&l.weight);
        refs.push_back(&l.bias);
    }
    return refs;
}

AdamState make_adam(const ParamRefs& params, double lr, double beta1, double beta2, double eps) {
    AdamState s;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    for (const ad::Tensor* p : params) {
        s.m.emplace_back(p->size(), 0.0);
        s.v.emplace_back(p->size(), 0.0);
    }
    return s;
}

void adam_step(ParamRefs& params, std::span<const std::span<const double>> grads, AdamState& state) {
    if (grads.size() != params.size() || state.m.size() != params.size())
        throw StructuralError("adam_step: gradient set does not cover the parameter set");
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        ad::Tensor& p = *params[i];
        std::span<const double> g = grads[i];
        if (g.size() != p.size()) throw StructuralError("adam_step: gradient shape mismatch");
        std::vector<double>& m = state.m[i];
        std::vector<double>& v = state.v[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

void adam_step(ParamRefs& params, const ad::GradientMap& grads, const std::vector<ad::Var>& handles,
               AdamState& state) {
    if (handles.size() != params.size())
        throw StructuralError("adam_step: gradient set does not cover the parameter set");
    std::vector<std::span<const double>> spans;
    spans.reserve(handles.size());
    for (ad::Var h : handles) {
        const ad::Tensor& g = grads.at(h);  // throws if missing
        spans.emplace_back(g.values.data(), g.values.size());
    }
    adam_step(params, spans, state);
}

namespace {
void write_values(std::ostream& out, const ad::Tensor& t) {
    char buf[40];
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", t[i]);
        out << (i ? " " : "") << buf;
    }
    out << "\n";
}
}  // namespace

void write_mlp(std::ostream& out, const Mlp& net, std::size_t& layer_index) {
    for (const DenseLayer& l : net.layers) {
        out << "layer " << layer_index++ << " " << l.out_dim() << " " << l.in_dim() << " "
            << to_string(l.act) << "\n";
        write_values(out, l.weight);
        write_values(out, l.bias);
    }
}

std::vector<LayerRecord> read_layer_records(std::istream& in) {
    std::vector<LayerRecord> records;
    std::string tag;
    while (in >> tag) {
        if (tag != "layer") throw ConfigError("snapshot: expected 'layer' record, got '" + tag + "'");
        std::size_t index = 0, out_dim = 0, in_dim = 0;
        std::string act;
        if (!(in >> index >> out_dim >> in_dim >> act))
            throw ConfigError("snapshot: malformed layer header");
        std::vector<double> w(out_dim * in_dim), b(out_dim);
        for (double& x : w)
            if (!(in >> x)) throw ConfigError("snapshot: truncated weight block");
        for (double& x : b)
            if (!(in >> x)) throw ConfigError("snapshot: truncated bias block");
        records.push_back({index,
                           DenseLayer{ad::Tensor::matrix(out_dim, in_dim, std::move(w)),
                                      ad::Tensor::vector(std::move(b)), activation_from_string(act)}});
    }
    return records;
}

Mlp take_mlp(std::span<const LayerRecord>& records, std::size_t in_dim, std::size_t out_dim) {
    Mlp net;
    net.in_dim = in_dim;
    net.out_dim = out_dim;
    std::size_t prev = in_dim;
    std::size_t used = 0;
    for (const LayerRecord& r : records) {
        if (r.layer.in_dim() != prev)
            throw ConfigError("snapshot: layer chain broken while reassembling a net");
        net.layers.push_back(r.layer);
        prev = r.layer.out_dim();
        ++used;
        if (prev == out_dim) break;
    }
    if (prev != out_dim) throw ConfigError("snapshot: ran out of layers before reaching the net output");
    records = records.subspan(used);
    return net;
}

}  // namespace epiga::nn
