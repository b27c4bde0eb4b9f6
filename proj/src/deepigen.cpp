#include "epiga/deepigen.hpp"
#include <algorithm>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace epiga::dg {

namespace {

void validate(const DeepiGenConfig& cfg, std::size_t p) {
    if (p == 0) throw StructuralError("deepigen: chromosome length must be positive");
    if (cfg.d_k == 0 || cfg.d_v == 0 || cfg.heads == 0)
        throw StructuralError("deepigen: d_k, d_v and N must be positive");
    if (!cfg.embed && cfg.d_v != p)
        throw StructuralError("deepigen: d_v must equal p when embed is off");
    if (cfg.r_diff < 0.0 || cfg.r_diff > 1.0)
        throw StructuralError("deepigen: r_diff must lie in [0,1]");
}

struct BoundModel {
    const DeepiGenModel* model = nullptr;
    std::optional<nn::BoundMlp> v;
    std::vector<attn::BoundHead> heads;
    nn::BoundMlp decoder;
    std::vector<ad::Var> params;  // aligned with parameters(model)
};

BoundModel bind_model(ad::Tape& tape, const DeepiGenModel& model, bool trainable) {
    BoundModel b;
    b.model = &model;
    auto absorb = [&](const nn::BoundMlp& m) {
        b.params.insert(b.params.end(), m.params.begin(), m.params.end());
    };
    if (model.net_v) {
        b.v = nn::bind(tape, *model.net_v, trainable);
        absorb(*b.v);
    }
    b.heads.reserve(model.heads.size());
    for (const attn::AttentionHead& h : model.heads) {
        b.heads.push_back(attn::bind(tape, h, trainable));
        absorb(b.heads.back().q);
        absorb(b.heads.back().k);
    }
    b.decoder = nn::bind(tape, model.decoder, trainable);
    absorb(b.decoder);
    return b;
}

// Decoder output squashed onto the domain box: s_d = lo_d + sigma(z_d)*(hi_d - lo_d).
// sigma's open range keeps the result strictly inside the box.
ad::Var decode_on_tape(ad::Tape& tape, const BoundModel& b, ad::Var epi, const bench::Problem& problem) {
    ad::Var z = nn::forward(tape, b.decoder, epi);
    ad::Var sig = tape.sigmoid(z);
    ad::Var span = tape.constant(ad::Tensor::vector(
        {problem.box[0].hi - problem.box[0].lo, problem.box[1].hi - problem.box[1].lo}));
    ad::Var lo = tape.constant(ad::Tensor::vector({problem.box[0].lo, problem.box[1].lo}));
    return tape.add(tape.mul(sig, span), lo);
}

struct ChromosomeGraph {
    std::vector<ad::Var> solutions;  // decoded point per head (vector of dim 2)
    std::vector<ad::Var> sx, sy;     // scalar components
};

ChromosomeGraph build_chromosome_graph(ad::Tape& tape, const BoundModel& b, const Chromosome& chrom,
                                       const bench::Problem& problem) {
    const DeepiGenModel& model = *b.model;
    if (chrom.size() != model.p) throw StructuralError("deepigen: chromosome length mismatch");
    ad::Var xin = tape.constant(ad::Tensor::vector(chrom.as_reals()));
    ad::Var x_vec = b.v ? nn::forward(tape, *b.v, xin) : xin;
    ChromosomeGraph g;
    for (const attn::BoundHead& head : b.heads) {
        ad::Var a = attn::attention_weights(tape, head, xin);
        ad::Var epi = tape.mul(a, x_vec);
        ad::Var s = decode_on_tape(tape, b, epi, problem);
        g.solutions.push_back(s);
        g.sx.push_back(tape.element(s, 0));
        g.sy.push_back(tape.element(s, 1));
    }
    return g;
}

// 1/(pooled + eps) plus the diffusion term when requested; the smooth fitness
// route is recorded so gradients flow into the decoded coordinates.
ad::Var chromosome_loss_term(ad::Tape& tape, const BoundModel& b, const ChromosomeGraph& g,
                             const bench::Problem& problem, bool diffusion) {
    const DeepiGenModel& model = *b.model;
    std::vector<ad::Var> scores;
    scores.reserve(g.sx.size());
    for (std::size_t h = 0; h < g.sx.size(); ++h)
        scores.push_back(problem.value_on_tape(tape, g.sx[h], g.sy[h]));
    ad::Var pooled = scores.size() == 1 ? scores[0] : tape.max(tape.stack(scores));
    ad::Var term = tape.div(tape.constant_scalar(1.0),
                            tape.add(pooled, tape.constant_scalar(kScoreEps)));
    if (diffusion && scores.size() > 1) {
        ad::Var var_x = tape.variance(tape.stack(g.sx));
        ad::Var var_y = tape.variance(tape.stack(g.sy));
        term = tape.sub(term, tape.scale(tape.add(var_x, var_y), model.cfg.lambda_diff));
    }
    return term;
}

// One full-population forward(+backward) pass. With backward enabled the
// parameter adjoints accumulate across chromosomes, yielding d(total)/d(param).
double population_pass(ad::Tape& tape, const DeepiGenModel& model, const Population& pop,
                       const bench::Problem& problem, bool diffusion, bool trainable,
                       BoundModel* bound_out) {
    tape.reset();
    BoundModel b = bind_model(tape, model, trainable);
    const ad::Tape::Mark mark = tape.mark();
    double total = 0.0;
    for (const Chromosome& chrom : pop.members) {
        ChromosomeGraph g = build_chromosome_graph(tape, b, chrom, problem);
        ad::Var term = chromosome_loss_term(tape, b, g, problem, diffusion);
        total += term.scalar_value();
        if (trainable) tape.backward(term);
        tape.truncate(mark);
    }
    if (bound_out) *bound_out = std::move(b);
    return total;
}

}  // namespace

DeepiGenModel make_model(const DeepiGenConfig& cfg, std::size_t p, Rng& rng) {
    validate(cfg, p);
    DeepiGenModel model;
    model.cfg = cfg;
    model.p = p;
    if (cfg.embed) {
        Rng r = rng.fork(Stream::network_init, 1000);
        model.net_v = nn::init_mlp(p, {cfg.value_hidden}, cfg.d_v, nn::Activation::tanh,
                                   nn::Activation::identity, r);
    }
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        Rng r = rng.fork(Stream::network_init, h);
        model.heads.push_back(attn::make_head(p, cfg.d_v, cfg.d_k, cfg.qk_hidden, cfg.gain, r));
    }
    Rng r = rng.fork(Stream::network_init, 2000);
    model.decoder = nn::init_mlp(cfg.d_v, {cfg.decoder_hidden}, 2, nn::Activation::tanh,
                                 nn::Activation::identity, r);
    model.opt = nn::make_adam(parameters(model), cfg.learning_rate);
    return model;
}

nn::ParamRefs parameters(DeepiGenModel& model) {
    nn::ParamRefs refs;
    auto absorb = [&](nn::Mlp& net) {
        nn::ParamRefs r = nn::parameters(net);
        refs.insert(refs.end(), r.begin(), r.end());
    };
    if (model.net_v) absorb(*model.net_v);
    for (attn::AttentionHead& h : model.heads) {
        absorb(h.net_q);
        absorb(h.net_k);
    }
    absorb(model.decoder);
    return refs;
}

std::pair<double, int> pool_max(std::span<const double> values) {
    if (values.empty()) throw StructuralError("pool_max: empty score list");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[arg]) arg = i;
    return {values[arg], static_cast<int>(arg) + 1};
}

std::vector<EpiChromosome> encode(const DeepiGenModel& model, const Chromosome& x) {
    if (x.size() != model.p) throw StructuralError("encode: chromosome length mismatch");
    const std::vector<double> bits = x.as_reals();
    std::vector<double> x_vec = model.net_v
        ? nn::mlp_forward(*model.net_v, ad::Tensor::vector(bits)).values
        : bits;
    std::vector<EpiChromosome> out;
    out.reserve(model.heads.size());
    for (std::size_t h = 0; h < model.heads.size(); ++h) {
        std::vector<double> a = attn::attention_weights(model.heads[h], bits);
        out.push_back({static_cast<int>(h) + 1, attn::reinforce(a, x_vec)});
    }
    return out;
}

Point decode(const DeepiGenModel& model, const EpiChromosome& epi, const bench::Problem& problem) {
    if (epi.x.size() != model.cfg.d_v) throw StructuralError("decode: epi-chromosome dimension mismatch");
    ad::Tape tape;
    BoundModel b;
    b.model = &model;
    b.decoder = nn::bind(tape, model.decoder, false);
    ad::Var s = decode_on_tape(tape, b, tape.constant(ad::Tensor::vector(epi.x)), problem);
    auto v = s.values();
    return {v[0], v[1]};
}

std::vector<TranscriptionSet> evaluate_population(const DeepiGenModel& model, const Population& pop,
                                                  const bench::Problem& problem) {
    ad::Tape tape;
    BoundModel b = bind_model(tape, model, false);
    const ad::Tape::Mark mark = tape.mark();
    std::vector<TranscriptionSet> out;
    out.reserve(pop.size());
    for (std::size_t n = 0; n < pop.size(); ++n) {
        TranscriptionSet ts;
        try {
            ChromosomeGraph g = build_chromosome_graph(tape, b, pop.members[n], problem);
            for (ad::Var s : g.solutions) {
                auto v = s.values();
                ts.solutions.push_back({v[0], v[1]});
                ts.fitness.push_back(bench::fitness(problem, v[0], v[1]));
            }
        } catch (const std::runtime_error& e) {
            throw StructuralError("evaluate_population: chromosome " + std::to_string(n) + ": " + e.what());
        }
        auto [pooled, head] = pool_max(ts.fitness);
        ts.pooled = pooled;
        ts.best_head = head;
        out.push_back(std::move(ts));
        tape.truncate(mark);
    }
    return out;
}

double training_loss(std::span<const double> scores) {
    double loss = 0.0;
    for (double s : scores) loss += 1.0 / (s + kScoreEps);
    return loss;
}

double diffusion_penalty(std::span<const TranscriptionSet> transcriptions) {
    if (transcriptions.empty()) throw StructuralError("diffusion_penalty: empty transcription list");
    double total_var = 0.0;
    for (const TranscriptionSet& ts : transcriptions) {
        const std::size_t n = ts.solutions.size();
        if (n < 2) throw StructuralError("diffusion_penalty: needs more than one head");
        for (std::size_t d = 0; d < 2; ++d) {
            double mu = 0.0;
            for (const Point& s : ts.solutions) mu += s[d];
            mu /= static_cast<double>(n);
            double var = 0.0;
            for (const Point& s : ts.solutions) var += (s[d] - mu) * (s[d] - mu);
            total_var += var / static_cast<double>(n);
        }
    }
    return -total_var;
}

FitReport fit(DeepiGenModel& model, const Population& pop, const bench::Problem& problem,
              Rng& diffusion_rng) {
    FitReport report;
    report.diffusion_generation =
        model.cfg.heads > 1 && model.cfg.r_diff > 0.0 && diffusion_rng.bernoulli(model.cfg.r_diff);
    if (model.cfg.epochs_per_generation == 0 || pop.size() == 0) return report;

    nn::ParamRefs params = parameters(model);
    ad::Tape tape;
    for (std::size_t epoch = 0; epoch < model.cfg.epochs_per_generation; ++epoch) {
        BoundModel bound;
        double loss = 0.0;
        try {
            loss = population_pass(tape, model, pop, problem, report.diffusion_generation, true, &bound);
        } catch (const NumericError& e) {
            throw NumericError("fit: epoch " + std::to_string(epoch) + ": " + e.what());
        }
        std::vector<std::span<const double>> grads;
        grads.reserve(bound.params.size());
        for (ad::Var v : bound.params) grads.push_back(tape.grad_view(v));
        nn::adam_step(params, grads, model.opt);
        if (epoch == 0) report.first_epoch_loss = loss;
        report.last_epoch_loss = loss;
    }
    return report;
}

double fit_loss_value(const DeepiGenModel& model, const Population& pop,
                      const bench::Problem& problem, bool diffusion) {
    ad::Tape tape;
    return population_pass(tape, model, pop, problem, diffusion, false, nullptr);
}

std::pair<double, std::vector<ad::Tensor>> fit_loss_gradients(DeepiGenModel& model,
                                                              const Population& pop,
                                                              const bench::Problem& problem,
                                                              bool diffusion) {
    ad::Tape tape;
    BoundModel bound;
    const double loss = population_pass(tape, model, pop, problem, diffusion, true, &bound);
    std::vector<ad::Tensor> grads;
    grads.reserve(bound.params.size());
    for (ad::Var v : bound.params) grads.push_back(tape.grad(v));
    return {loss, std::move(grads)};
}

namespace {

// Deterministic per-chromosome offset inside [-radius, radius]^2, keyed on the
// bits. Pretraining to a point target collapses the decoder into a constant
// map (its output saturates and chromosome variation stops reaching new
// regions); anchoring each chromosome to its own nearby target keeps the
// decoder input-sensitive while still clustering the cloud.
Point jitter_for(const Chromosome& chrom, double rx, double ry) {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (std::uint8_t b : chrom.bits) {
        h ^= b + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        h *= 0xBF58476D1CE4E5B9ULL;
    }
    Rng rng(h);
    return {rng.uniform(-rx, rx), rng.uniform(-ry, ry)};
}

}  // namespace

void biased_init(DeepiGenModel& model, const Population& pop, const bench::Problem& problem,
                 Point target, std::size_t steps) {
    if (target[0] < problem.box[0].lo || target[0] > problem.box[0].hi ||
        target[1] < problem.box[1].lo || target[1] > problem.box[1].hi)
        throw DomainError("biased_init: target outside the domain box");
    if (steps == 0 || pop.size() == 0) return;
    nn::ParamRefs params = parameters(model);
    nn::AdamState opt = nn::make_adam(params, model.cfg.learning_rate);
    const double norm = 1.0 / static_cast<double>(pop.size() * model.heads.size());
    const double rx = 0.02 * (problem.box[0].hi - problem.box[0].lo);
    const double ry = 0.02 * (problem.box[1].hi - problem.box[1].lo);
    auto clamp = [](double v, const bench::Interval& iv) { return std::clamp(v, iv.lo, iv.hi); };
    ad::Tape tape;
    for (std::size_t step = 0; step < steps; ++step) {
        tape.reset();
        BoundModel b = bind_model(tape, model, true);
        const ad::Tape::Mark mark = tape.mark();
        for (const Chromosome& chrom : pop.members) {
            ChromosomeGraph g = build_chromosome_graph(tape, b, chrom, problem);
            // Mean squared distance between every decoded point and the
            // chromosome's anchored target.
            const Point off = jitter_for(chrom, rx, ry);
            ad::Var tx = tape.constant_scalar(clamp(target[0] + off[0], problem.box[0]));
            ad::Var ty = tape.constant_scalar(clamp(target[1] + off[1], problem.box[1]));
            ad::Var acc = tape.constant_scalar(0.0);
            for (std::size_t h = 0; h < g.sx.size(); ++h) {
                ad::Var d = tape.add(tape.square(tape.sub(g.sx[h], tx)),
                                     tape.square(tape.sub(g.sy[h], ty)));
                acc = tape.add(acc, d);
            }
            tape.backward(tape.scale(acc, norm));
            tape.truncate(mark);
        }
        std::vector<std::span<const double>> grads;
        grads.reserve(b.params.size());
        for (ad::Var v : b.params) grads.push_back(tape.grad_view(v));
        nn::adam_step(params, grads, opt);
    }
}

ModelSnapshot snapshot(const DeepiGenModel& model) {
    std::ostringstream out;
    out << "epiga-snapshot v1\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", model.cfg.gain);
    out << "config d_k=" << model.cfg.d_k << " d_v=" << model.cfg.d_v << " N=" << model.cfg.heads
        << " embed=" << (model.cfg.embed ? "true" : "false") << " gain=" << buf << "\n";
    std::size_t layer_index = 0;
    if (model.net_v) nn::write_mlp(out, *model.net_v, layer_index);
    for (const attn::AttentionHead& h : model.heads) {
        nn::write_mlp(out, h.net_q, layer_index);
        nn::write_mlp(out, h.net_k, layer_index);
    }
    nn::write_mlp(out, model.decoder, layer_index);
    return {out.str()};
}

DeepiGenModel restore(const ModelSnapshot& snap) {
    std::istringstream in(snap.text);
    std::string line;
    if (!std::getline(in, line) || line != "epiga-snapshot v1")
        throw ConfigError("snapshot: missing 'epiga-snapshot v1' header");
    if (!std::getline(in, line) || line.rfind("config ", 0) != 0)
        throw ConfigError("snapshot: missing config record");

    DeepiGenConfig cfg;
    std::istringstream cfg_in(line.substr(7));
    std::string token;
    while (cfg_in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw ConfigError("snapshot: malformed config token " + token);
        const std::string key = token.substr(0, eq), val = token.substr(eq + 1);
        if (key == "d_k") cfg.d_k = std::stoul(val);
        else if (key == "d_v") cfg.d_v = std::stoul(val);
        else if (key == "N") cfg.heads = std::stoul(val);
        else if (key == "embed") cfg.embed = (val == "true");
        else if (key == "gain") cfg.gain = std::stod(val);
        else throw ConfigError("snapshot: unknown config key " + key);
    }

    std::vector<nn::LayerRecord> records = nn::read_layer_records(in);
    if (records.empty()) throw ConfigError("snapshot: no layer records");
    std::span<const nn::LayerRecord> span(records);

    DeepiGenModel model;
    model.cfg = cfg;
    model.p = span.front().layer.in_dim();
    if (cfg.embed) model.net_v = nn::take_mlp(span, model.p, cfg.d_v);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        attn::AttentionHead head;
        head.d_k = cfg.d_k;
        head.gain = cfg.gain;
        head.net_q = nn::take_mlp(span, model.p, cfg.d_v * cfg.d_k);
        head.net_k = nn::take_mlp(span, model.p, cfg.d_v * cfg.d_k);
        model.heads.push_back(std::move(head));
    }
    if (span.empty()) throw ConfigError("snapshot: missing decoder layers");
    model.decoder = nn::take_mlp(span, cfg.d_v, span.back().layer.out_dim());
    if (!span.empty()) throw ConfigError("snapshot: trailing layer records");
    if (!model.decoder.layers.empty()) {
        model.cfg.decoder_hidden = model.decoder.layers.front().out_dim();
    }
    model.opt = nn::make_adam(parameters(model), model.cfg.learning_rate);
    return model;
}

BestResult find_best(const DeepiGenModel& model, const Population& pop, const bench::Problem& problem) {
    return find_best_from(model, pop, evaluate_population(model, pop, problem));
}

BestResult find_best_from(const DeepiGenModel& model, const Population& pop,
                          std::span<const TranscriptionSet> transcriptions) {
    if (pop.size() == 0 || transcriptions.size() != pop.size())
        throw StructuralError("find_best: empty population or mismatched transcriptions");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < transcriptions.size(); ++i)
        if (transcriptions[i].pooled > transcriptions[arg].pooled) arg = i;
    const TranscriptionSet& ts = transcriptions[arg];
    BestResult best;
    best.index = arg;
    best.chromosome = pop.members[arg];
    best.point = ts.solutions[static_cast<std::size_t>(ts.best_head - 1)];
    best.fitness = ts.pooled;
    best.head = ts.best_head;
    best.callback = snapshot(model);
    return best;
}

}  // namespace epiga::dg
