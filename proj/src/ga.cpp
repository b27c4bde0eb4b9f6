#include "epiga/ga.hpp"

#include <algorithm>
#include <cmath>

namespace epiga::ga {

namespace {
constexpr std::uint64_t kPlainGaSalt = 0x706C61696EULL;  // keeps baseline streams off the EpiGeAl ones
constexpr double kTargetSlack = 1e-3;
}  // namespace

void validate(const GaConfig& cfg) {
    if (cfg.population_size == 0 || cfg.chromosome_length == 0)
        throw StructuralError("ga: population size and chromosome length must be positive");
    if (cfg.mutation_rate < 0.0 || cfg.mutation_rate > 1.0)
        throw StructuralError("ga: mutation rate must lie in [0,1]");
    if (cfg.crossover_rate < 0.0 || cfg.crossover_rate > 1.0)
        throw StructuralError("ga: crossover rate must lie in [0,1]");
    if (cfg.max_generations == 0) throw StructuralError("ga: max_generations must be >= 1");
}

Population init_population(const GaConfig& cfg, Rng& rng) {
    Population pop;
    pop.members.resize(cfg.population_size);
    for (Chromosome& c : pop.members) {
        c.bits.resize(cfg.chromosome_length);
        for (auto& b : c.bits) b = rng.bernoulli(0.5) ? 1 : 0;
    }
    return pop;
}

Population select(const Population& pop, std::span<const double> scores, Rng& rng) {
    if (pop.size() == 0 || scores.size() != pop.size())
        throw StructuralError("select: scores must align with the population");
    double total = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < 0.0) throw StructuralError("select: scores must be non-negative");
        total += scores[i];
        if (scores[i] > scores[best]) best = i;
    }
    Population out;
    out.generation = pop.generation;
    out.members.reserve(pop.size());
    out.members.push_back(pop.members[best]);  // elitism
    if (total > 0.0) {
        std::vector<double> cumulative(scores.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            acc += scores[i];
            cumulative[i] = acc;
        }
        for (std::size_t n = 1; n < pop.size(); ++n) {
            const double u = rng.next_double() * total;
            const std::size_t i = static_cast<std::size_t>(
                std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
            out.members.push_back(pop.members[std::min(i, pop.size() - 1)]);
        }
    } else {
        for (std::size_t n = 1; n < pop.size(); ++n)
            out.members.push_back(pop.members[rng.index(pop.size())]);
    }
    return out;
}

std::pair<Chromosome, Chromosome> single_point_cross(const Chromosome& a, const Chromosome& b,
                                                     std::size_t cut) {
    if (a.size() != b.size() || cut == 0 || cut >= a.size())
        throw StructuralError("single_point_cross: cut must lie in [1, p-1]");
    Chromosome c1 = a, c2 = b;
    for (std::size_t i = cut; i < a.size(); ++i) {
        c1.bits[i] = b.bits[i];
        c2.bits[i] = a.bits[i];
    }
    return {std::move(c1), std::move(c2)};
}

Population crossover(const Population& survivors, double crossover_rate, Rng& rng) {
    Population parents = survivors;
    if (parents.size() % 2 != 0) parents.members.push_back(parents.members.front());
    Population children;
    children.generation = survivors.generation;
    children.members.reserve(parents.size());
    const std::size_t p = parents.members.front().size();
    for (std::size_t i = 0; i + 1 < parents.size(); i += 2) {
        if (p > 1 && rng.bernoulli(crossover_rate)) {
            const std::size_t cut = 1 + rng.index(p - 1);
            auto [c1, c2] = single_point_cross(parents.members[i], parents.members[i + 1], cut);
            children.members.push_back(std::move(c1));
            children.members.push_back(std::move(c2));
        } else {
            children.members.push_back(parents.members[i]);
            children.members.push_back(parents.members[i + 1]);
        }
    }
    return children;
}

void mutate(Population& children, double mutation_rate, Rng& rng) {
    if (mutation_rate == 0.0) return;
    for (Chromosome& c : children.members)
        for (auto& b : c.bits)
            if (rng.bernoulli(mutation_rate)) b ^= 1;
}

Population update_population(const Population& children, const Population& survivors) {
    if (survivors.size() == 0) throw StructuralError("update_population: empty survivor set");
    Population next;
    next.generation = children.generation + 1;
    const std::size_t target = survivors.size();
    next.members.assign(children.members.begin(),
                        children.members.begin() +
                            static_cast<std::ptrdiff_t>(std::min(target, children.size())));
    while (next.members.size() < target) next.members.push_back(survivors.members.front());
    next.members[0] = survivors.members.front();  // keep the elite
    return next;
}

EpigealResult run_epigeal(const GaConfig& cfg, const dg::DeepiGenConfig& dcfg,
                          const bench::Problem& problem, const EpigealOptions& opts) {
    validate(cfg);
    const Rng root(cfg.seed);
    Rng r_init = root.fork(Stream::population_init);
    Rng r_select = root.fork(Stream::selection);
    Rng r_cross = root.fork(Stream::crossover);
    Rng r_mutate = root.fork(Stream::mutation);
    Rng r_diffusion = root.fork(Stream::diffusion);
    Rng r_net = root.fork(Stream::network_init);

    Population pop = init_population(cfg, r_init);
    dg::DeepiGenModel model = dg::make_model(dcfg, cfg.chromosome_length, r_net);
    if (opts.bias_target) dg::biased_init(model, pop, problem, *opts.bias_target, opts.bias_steps);

    EpigealResult result;
    double best_fitness = -1.0;
    std::size_t best_generation = 0;
    bool stop = false;
    for (std::size_t t = 0; t < cfg.max_generations && !stop; ++t) {
        pop.generation = t;
        try {
            const dg::FitReport fr = dg::fit(model, pop, problem, r_diffusion);
            const auto transcriptions = dg::evaluate_population(model, pop, problem);
            dg::BestResult gen_best = dg::find_best_from(model, pop, transcriptions);
            if (gen_best.fitness > best_fitness) {
                best_fitness = gen_best.fitness;
                best_generation = t;
                result.best = gen_best.chromosome;
                result.point = gen_best.point;
                result.score = gen_best.fitness;
                result.callback = std::move(gen_best.callback);
            }
            double mean = 0.0;
            for (const auto& ts : transcriptions) mean += ts.pooled;
            mean /= static_cast<double>(transcriptions.size());
            result.records.push_back({t, best_fitness, result.point, mean, fr.diffusion_generation,
                                      best_generation});

            if (opts.observer &&
                opts.observer({t, pop, transcriptions, result.records.back(), model}))
                stop = true;
            if (cfg.target_fitness && best_fitness >= *cfg.target_fitness - kTargetSlack) stop = true;

            if (!stop && t + 1 < cfg.max_generations) {
                std::vector<double> scores;
                scores.reserve(transcriptions.size());
                for (const auto& ts : transcriptions) scores.push_back(ts.pooled);
                Population survivors = select(pop, scores, r_select);
                Population children = crossover(survivors, cfg.crossover_rate, r_cross);
                mutate(children, cfg.mutation_rate, r_mutate);
                pop = update_population(children, survivors);
            }
        } catch (const StructuralError&) {
            throw;
        } catch (const std::runtime_error& e) {
            throw NumericError("run_epigeal: generation " + std::to_string(t) + ": " + e.what());
        }
    }
    return result;
}

Point plain_decode(const Chromosome& chrom, const bench::Problem& problem) {
    const std::size_t p = chrom.size();
    if (p % 2 != 0 || p == 0) throw StructuralError("plain_decode: chromosome length must be even");
    const std::size_t half = p / 2;
    const auto to_real = [&](std::size_t offset, const bench::Interval& iv) {
        std::uint64_t value = 0;
        for (std::size_t i = 0; i < half; ++i) value = (value << 1) | chrom.bits[offset + i];
        const double denom = std::pow(2.0, static_cast<double>(half)) - 1.0;
        return iv.lo + static_cast<double>(value) / denom * (iv.hi - iv.lo);
    };
    return {to_real(0, problem.box[0]), to_real(half, problem.box[1])};
}

namespace {
Chromosome plain_encode(Point pt, const bench::Problem& problem, std::size_t p) {
    const std::size_t half = p / 2;
    Chromosome chrom;
    chrom.bits.resize(p, 0);
    for (std::size_t d = 0; d < 2; ++d) {
        const bench::Interval& iv = problem.box[d];
        const double clamped = std::clamp(pt[d], iv.lo, iv.hi);
        const double denom = std::pow(2.0, static_cast<double>(half)) - 1.0;
        const std::uint64_t value =
            static_cast<std::uint64_t>(std::llround((clamped - iv.lo) / (iv.hi - iv.lo) * denom));
        for (std::size_t i = 0; i < half; ++i)
            chrom.bits[d * half + i] = static_cast<std::uint8_t>((value >> (half - 1 - i)) & 1u);
    }
    return chrom;
}
}  // namespace

PlainGaResult run_plain_ga(const GaConfig& cfg, const bench::Problem& problem,
                           const PlainGaOptions& opts) {
    validate(cfg);
    if (cfg.chromosome_length % 2 != 0)
        throw StructuralError("run_plain_ga: chromosome length must be even");
    const Rng root(cfg.seed);
    Rng r_init = root.fork(Stream::population_init, kPlainGaSalt);
    Rng r_select = root.fork(Stream::selection, kPlainGaSalt);
    Rng r_cross = root.fork(Stream::crossover, kPlainGaSalt);
    Rng r_mutate = root.fork(Stream::mutation, kPlainGaSalt);

    Population pop;
    if (opts.bias_target) {
        pop.members.reserve(cfg.population_size);
        for (std::size_t n = 0; n < cfg.population_size; ++n) {
            Point pt{(*opts.bias_target)[0] + r_init.uniform(-opts.bias_spread, opts.bias_spread),
                     (*opts.bias_target)[1] + r_init.uniform(-opts.bias_spread, opts.bias_spread)};
            pop.members.push_back(plain_encode(pt, problem, cfg.chromosome_length));
        }
    } else {
        pop = init_population(cfg, r_init);
    }

    PlainGaResult result;
    double best_fitness = -1.0;
    std::size_t best_generation = 0;
    bool stop = false;
    for (std::size_t t = 0; t < cfg.max_generations && !stop; ++t) {
        pop.generation = t;
        std::vector<double> scores;
        scores.reserve(pop.size());
        double mean = 0.0;
        for (std::size_t n = 0; n < pop.size(); ++n) {
            const Point pt = plain_decode(pop.members[n], problem);
            const double f = bench::fitness(problem, pt[0], pt[1]);
            scores.push_back(f);
            mean += f;
            if (f > best_fitness) {
                best_fitness = f;
                best_generation = t;
                result.best = pop.members[n];
                result.point = pt;
                result.score = f;
            }
        }
        mean /= static_cast<double>(pop.size());
        result.records.push_back({t, best_fitness, result.point, mean, false, best_generation});

        if (cfg.target_fitness && best_fitness >= *cfg.target_fitness - kTargetSlack) stop = true;
        if (!stop && t + 1 < cfg.max_generations) {
            Population survivors = select(pop, scores, r_select);
            Population children = crossover(survivors, cfg.crossover_rate, r_cross);
            mutate(children, cfg.mutation_rate, r_mutate);
            pop = update_population(children, survivors);
        }
    }
    return result;
}

}  // namespace epiga::ga
