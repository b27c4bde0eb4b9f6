#pragma once

#include <functional>
#include <optional>

#include "epiga/deepigen.hpp"

namespace epiga::ga {

using dg::Point;

struct GaConfig {
    std::size_t population_size = 128;   // N_i
    std::size_t chromosome_length = 16;  // p
    double mutation_rate = 0.1;          // per-bit flip probability
    double crossover_rate = 0.7;
    std::size_t max_generations = 100;  // nb_iter
    std::uint64_t seed = 1;
    std::optional<double> target_fitness;  // stop once best is within 1e-3 of this
};

void validate(const GaConfig& cfg);

// Per-generation log line backing the best-per-generation curves.
struct GenerationRecord {
    std::size_t generation = 0;
    double best_fitness = 0.0;  // best so far, monotone non-decreasing
    Point best_point{};
    double mean_fitness = 0.0;
    bool diffusion = false;
    std::size_t best_found_generation = 0;  // generation that produced the current best
};

Population init_population(const GaConfig& cfg, Rng& rng);

// Fitness-proportional sampling with replacement; the best member is always
// included once, at index 0. All-zero scores fall back to uniform sampling.
Population select(const Population& pop, std::span<const double> scores, Rng& rng);

// Deterministic single-point exchange at `cut` in [1, p-1].
std::pair<Chromosome, Chromosome> single_point_cross(const Chromosome& a, const Chromosome& b,
                                                     std::size_t cut);

// Parents paired in order; each pair crosses with probability `crossover_rate`
// (odd survivor sets are padded by repeating the elite).
Population crossover(const Population& survivors, double crossover_rate, Rng& rng);

// Independent per-bit flips.
void mutate(Population& children, double mutation_rate, Rng& rng);

// Next generation: the children, with the elite survivor injected at index 0.
Population update_population(const Population& children, const Population& survivors);

// Snapshot of a generation handed to observers; returning true stops the run.
struct GenerationView {
    std::size_t generation;
    const Population& population;
    const std::vector<dg::TranscriptionSet>& transcriptions;
    const GenerationRecord& record;
    const dg::DeepiGenModel& model;
};
using GenerationObserver = std::function<bool(const GenerationView&)>;

struct EpigealOptions {
    std::optional<Point> bias_target;  // pretrain the decoder toward this point
    std::size_t bias_steps = 200;
    GenerationObserver observer;
};

struct EpigealResult {
    Chromosome best;
    Point point{};
    double score = 0.0;
    dg::ModelSnapshot callback;
    std::vector<GenerationRecord> records;
};

// Algorithm main loop: fit, evaluate, find best, select, crossover, mutate,
// update, until the generation budget or the fitness target is reached.
EpigealResult run_epigeal(const GaConfig& cfg, const dg::DeepiGenConfig& dcfg,
                          const bench::Problem& problem, const EpigealOptions& opts = {});

// Fixed binary-to-real decoding for the plain-GA baseline: the two
// big-endian halves of the chromosome map linearly onto the box.
Point plain_decode(const Chromosome& chrom, const bench::Problem& problem);

struct PlainGaOptions {
    std::optional<Point> bias_target;  // seed the initial population near this point
    double bias_spread = 0.3;          // L-inf radius of the seeded cloud
};

struct PlainGaResult {
    Chromosome best;
    Point point{};
    double score = 0.0;
    std::vector<GenerationRecord> records;
};

// Same GA loop with fixed decoding and no learning anywhere.
PlainGaResult run_plain_ga(const GaConfig& cfg, const bench::Problem& problem,
                           const PlainGaOptions& opts = {});

}  // namespace epiga::ga
