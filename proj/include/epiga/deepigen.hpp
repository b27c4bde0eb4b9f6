#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "epiga/attention.hpp"
#include "epiga/benchmarks.hpp"
#include "epiga/chromosome.hpp"

namespace epiga::dg {

using Point = std::array<double, 2>;

struct DeepiGenConfig {
    std::size_t d_k = 32;
    bool embed = false;
    std::size_t d_v = 16;  // must equal p when embed == false
    std::size_t heads = 1;
    double r_diff = 0.0;  // diffusion-generation probability, used when heads > 1
    std::size_t epochs_per_generation = 20;
    double learning_rate = 1e-2;
    double lambda_diff = 1.0;
    double gain = 2.0;
    std::size_t decoder_hidden = 32;
    std::size_t qk_hidden = 32;
    std::size_t value_hidden = 32;
};

// The learnable epigenetic layer: a value network (identity when embed is
// off), N attention heads producing reinforcement weights, and the phenotype
// decoder mapping an epi-chromosome into the problem's domain box.
struct DeepiGenModel {
    DeepiGenConfig cfg;
    std::size_t p = 0;  // chromosome length
    std::optional<nn::Mlp> net_v;
    std::vector<attn::AttentionHead> heads;
    nn::Mlp decoder;
    nn::AdamState opt;  // persists across generations within a run
};

DeepiGenModel make_model(const DeepiGenConfig& cfg, std::size_t p, Rng& rng);

nn::ParamRefs parameters(DeepiGenModel& model);

// One head's reinforced view of the encoded chromosome. Head indices are
// 1-based throughout the public surface.
struct EpiChromosome {
    int head = 1;
    std::vector<double> x;  // e_vec^h (element-wise) x_vec, dimension d_v
};

// Per-chromosome transcription results: one decoded solution and fitness per
// head, pooled by maximum.
struct TranscriptionSet {
    std::vector<Point> solutions;
    std::vector<double> fitness;
    double pooled = 0.0;
    int best_head = 1;
};

// Pooled maximum with its 1-based index; ties go to the lower index.
std::pair<double, int> pool_max(std::span<const double> values);

std::vector<EpiChromosome> encode(const DeepiGenModel& model, const Chromosome& x);
Point decode(const DeepiGenModel& model, const EpiChromosome& epi, const bench::Problem& problem);

std::vector<TranscriptionSet> evaluate_population(const DeepiGenModel& model, const Population& pop,
                                                  const bench::Problem& problem);

// L = sum_n 1 / (score[n] + eps_s); the guard absorbs exact zeros.
inline constexpr double kScoreEps = 1e-8;
double training_loss(std::span<const double> scores);

// Negated variance of the decoded coordinates across heads, summed over
// chromosomes and dimensions. Requires more than one head.
double diffusion_penalty(std::span<const TranscriptionSet> transcriptions);

struct FitReport {
    bool diffusion_generation = false;
    double first_epoch_loss = 0.0;
    double last_epoch_loss = 0.0;
};

// One generation of training: epochs_per_generation passes of
// forward / training_loss (+ diffusion term on diffusion generations) /
// backward / adam. Backpropagates through the smooth fitness route.
FitReport fit(DeepiGenModel& model, const Population& pop, const bench::Problem& problem,
              Rng& diffusion_rng);

// Differentiable population loss (one forward), for gradient checks: returns
// the loss value and d(loss)/d(parameter) for every model parameter.
double fit_loss_value(const DeepiGenModel& model, const Population& pop,
                      const bench::Problem& problem, bool diffusion);
std::pair<double, std::vector<ad::Tensor>> fit_loss_gradients(DeepiGenModel& model,
                                                              const Population& pop,
                                                              const bench::Problem& problem,
                                                              bool diffusion);

// Pretrains the model so decoded population points cluster near the target:
// minimizes the mean squared decoded-to-target distance over all chromosomes
// and heads with a transient Adam state.
void biased_init(DeepiGenModel& model, const Population& pop, const bench::Problem& problem,
                 Point target, std::size_t steps);

// Serialized copy of all parameters plus config; restoring reproduces decoded
// solutions bit-exactly.
struct ModelSnapshot {
    std::string text;
};

ModelSnapshot snapshot(const DeepiGenModel& model);
DeepiGenModel restore(const ModelSnapshot& snap);

struct BestResult {
    std::size_t index = 0;  // population index (ties -> lowest)
    Chromosome chromosome;
    Point point{};
    double fitness = 0.0;
    int head = 1;
    ModelSnapshot callback;
};

BestResult find_best(const DeepiGenModel& model, const Population& pop, const bench::Problem& problem);
BestResult find_best_from(const DeepiGenModel& model, const Population& pop,
                          std::span<const TranscriptionSet> transcriptions);

}  // namespace epiga::dg
