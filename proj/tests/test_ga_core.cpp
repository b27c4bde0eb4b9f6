#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "epiga/ga.hpp"
#include "test_util.hpp"

using namespace epiga;

namespace {
ga::GaConfig tiny_ga(std::uint64_t seed) {
    ga::GaConfig cfg;
    cfg.population_size = 8;
    cfg.chromosome_length = 8;
    cfg.max_generations = 3;
    cfg.seed = seed;
    return cfg;
}

dg::DeepiGenConfig tiny_model() {
    dg::DeepiGenConfig cfg;
    cfg.d_k = 4;
    cfg.d_v = 8;
    cfg.qk_hidden = 6;
    cfg.decoder_hidden = 6;
    cfg.epochs_per_generation = 2;
    return cfg;
}

std::multiset<std::vector<std::uint8_t>> bit_multiset(const Population& pop) {
    std::multiset<std::vector<std::uint8_t>> ms;
    for (const Chromosome& c : pop.members) ms.insert(c.bits);
    return ms;
}
}  // namespace

TEST_CASE("init_population: sizes, determinism, bit frequency") {
    ga::GaConfig cfg;
    cfg.population_size = 128;
    cfg.chromosome_length = 16;
    Rng r1(1), r2(1);
    const Population a = ga::init_population(cfg, r1);
    const Population b = ga::init_population(cfg, r2);
    REQUIRE(a.size() == 128);
    for (const Chromosome& c : a.members) CHECK(c.size() == 16);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.members[i] == b.members[i]);

    // Bit frequency over >= 10,000 draws concentrates around 1/2.
    ga::GaConfig big;
    big.population_size = 640;
    big.chromosome_length = 16;
    Rng r3(7);
    const Population large = ga::init_population(big, r3);
    double ones = 0.0, total = 0.0;
    for (const Chromosome& c : large.members)
        for (auto bit : c.bits) {
            ones += bit;
            total += 1.0;
        }
    CHECK(total >= 10000);
    CHECK(std::abs(ones / total - 0.5) <= 0.02);
}

TEST_CASE("select: degenerate roulette, elitism, output size") {
    Population pop;
    pop.members = {Chromosome{{0, 0}}, Chromosome{{0, 1}}, Chromosome{{1, 0}}};
    Rng rng(2);
    const Population survivors = ga::select(pop, std::vector<double>{1.0, 0.0, 0.0}, rng);
    CHECK(survivors.size() == 3);
    for (const Chromosome& c : survivors.members) CHECK(c == pop.members[0]);

    CHECK_THROWS_AS(ga::select(pop, std::vector<double>{1.0}, rng), StructuralError);
    CHECK_THROWS_AS(ga::select(pop, std::vector<double>{1.0, -0.1, 0.0}, rng), StructuralError);
}

TEST_CASE("select: equal scores sample uniformly within 3 sigma over 10,000 draws") {
    const std::size_t members = 10;
    Population pop;
    for (std::size_t i = 0; i < members; ++i)
        pop.members.push_back(Chromosome{{static_cast<std::uint8_t>(i & 1),
                                          static_cast<std::uint8_t>((i >> 1) & 1),
                                          static_cast<std::uint8_t>((i >> 2) & 1),
                                          static_cast<std::uint8_t>((i >> 3) & 1)}});
    const std::vector<double> scores(members, 1.0);
    std::map<std::vector<std::uint8_t>, int> counts;
    Rng rng(3);
    const int rounds = 10000 / (members - 1) + 1;
    int draws = 0;
    for (int rep = 0; rep < rounds; ++rep) {
        const Population survivors = ga::select(pop, scores, rng);
        for (std::size_t i = 1; i < survivors.size(); ++i) {  // skip the elitist copy
            counts[survivors.members[i].bits] += 1;
            ++draws;
        }
    }
    const double expected = static_cast<double>(draws) / members;
    const double sigma = std::sqrt(static_cast<double>(draws) * (1.0 / members) * (1.0 - 1.0 / members));
    for (const auto& [bits, count] : counts)
        CHECK(std::abs(count - expected) <= 3.0 * sigma);
}

TEST_CASE("select: all-zero scores fall back to uniform sampling") {
    Population pop;
    for (int i = 0; i < 4; ++i)
        pop.members.push_back(Chromosome{{static_cast<std::uint8_t>(i & 1),
                                          static_cast<std::uint8_t>(i >> 1)}});
    Rng rng(4);
    const Population survivors = ga::select(pop, std::vector<double>{0, 0, 0, 0}, rng);
    CHECK(survivors.size() == 4);
    std::set<std::vector<std::uint8_t>> seen;
    for (int rep = 0; rep < 50; ++rep) {
        const Population s = ga::select(pop, std::vector<double>{0, 0, 0, 0}, rng);
        for (const Chromosome& c : s.members) seen.insert(c.bits);
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("single-point crossover at cut 2") {
    const Chromosome a{{0, 0, 0, 0}}, b{{1, 1, 1, 1}};
    const auto [c1, c2] = ga::single_point_cross(a, b, 2);
    CHECK(c1.bits == std::vector<std::uint8_t>{0, 0, 1, 1});
    CHECK(c2.bits == std::vector<std::uint8_t>{1, 1, 0, 0});
    CHECK_THROWS_AS(ga::single_point_cross(a, b, 0), StructuralError);
    CHECK_THROWS_AS(ga::single_point_cross(a, b, 4), StructuralError);
}

TEST_CASE("crossover: r_c = 0 copies parents; pairs conserve per-position bits") {
    Rng rng(5);
    ga::GaConfig cfg;
    cfg.population_size = 10;
    cfg.chromosome_length = 12;
    Rng init(6);
    Population parents = ga::init_population(cfg, init);
    const Population copies = ga::crossover(parents, 0.0, rng);
    REQUIRE(copies.size() == parents.size());
    for (std::size_t i = 0; i < parents.size(); ++i) CHECK(copies.members[i] == parents.members[i]);

    for (int rep = 0; rep < 100; ++rep) {
        const Population crossed = ga::crossover(parents, 1.0, rng);
        for (std::size_t pair = 0; pair + 1 < crossed.size(); pair += 2)
            for (std::size_t pos = 0; pos < 12; ++pos) {
                const int before = parents.members[pair].bits[pos] + parents.members[pair + 1].bits[pos];
                const int after = crossed.members[pair].bits[pos] + crossed.members[pair + 1].bits[pos];
                CHECK(before == after);
            }
    }
}

TEST_CASE("mutate: identity at 0, exact complement at 1, binomial mean flips") {
    ga::GaConfig cfg;
    cfg.population_size = 50;
    cfg.chromosome_length = 16;
    Rng init(7);
    Population pop = ga::init_population(cfg, init);
    Population zero = pop;
    Rng r0(8);
    ga::mutate(zero, 0.0, r0);
    CHECK(bit_multiset(zero) == bit_multiset(pop));

    Population inverted = pop;
    Rng r1(9);
    ga::mutate(inverted, 1.0, r1);
    for (std::size_t i = 0; i < pop.size(); ++i)
        for (std::size_t j = 0; j < 16; ++j)
            CHECK(inverted.members[i].bits[j] == (1 - pop.members[i].bits[j]));

    ga::GaConfig big;
    big.population_size = 10000;
    big.chromosome_length = 16;
    Rng init2(10);
    Population large = ga::init_population(big, init2);
    const Population before = large;
    Rng rmut(11);
    ga::mutate(large, 0.1, rmut);
    double flips = 0.0;
    for (std::size_t i = 0; i < large.size(); ++i)
        for (std::size_t j = 0; j < 16; ++j)
            flips += large.members[i].bits[j] != before.members[i].bits[j];
    CHECK(std::abs(flips / 10000.0 - 1.6) <= 0.1);
}

TEST_CASE("update_population: size, elitism, identity composition") {
    ga::GaConfig cfg;
    cfg.population_size = 9;
    cfg.chromosome_length = 6;
    Rng init(12);
    Population pop = ga::init_population(cfg, init);
    std::vector<double> scores(9, 1.0);
    scores[4] = 5.0;
    Rng rng(13);
    const Population survivors = ga::select(pop, scores, rng);
    CHECK(survivors.members[0] == pop.members[4]);  // elite first

    const Population children = ga::crossover(survivors, 0.0, rng);
    Population mutated = children;
    ga::mutate(mutated, 0.0, rng);
    const Population next = ga::update_population(mutated, survivors);
    CHECK(next.size() == 9);
    CHECK(next.members[0] == pop.members[4]);  // elite survives
    // r_mut = 0 and r_c = 0: the next population equals the selected parents.
    for (std::size_t i = 0; i < next.size(); ++i) CHECK(next.members[i] == survivors.members[i]);
    CHECK(next.generation == children.generation + 1);
}

TEST_CASE("run_epigeal: record count, determinism, monotone best, constant size") {
    const bench::Problem problem = bench::bumpy();
    ga::GaConfig cfg = tiny_ga(21);
    cfg.max_generations = 1;
    const ga::EpigealResult one = ga::run_epigeal(cfg, tiny_model(), problem);
    CHECK(one.records.size() == 1);

    cfg.max_generations = 4;
    std::vector<std::size_t> sizes;
    ga::EpigealOptions opts;
    opts.observer = [&](const ga::GenerationView& view) {
        sizes.push_back(view.population.size());
        return false;
    };
    const ga::EpigealResult a = ga::run_epigeal(cfg, tiny_model(), problem, opts);
    const ga::EpigealResult b = ga::run_epigeal(cfg, tiny_model(), problem);
    REQUIRE(a.records.size() == 4);
    REQUIRE(b.records.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.records[i].best_fitness == b.records[i].best_fitness);
        CHECK(a.records[i].mean_fitness == b.records[i].mean_fitness);
        CHECK(a.records[i].best_point == b.records[i].best_point);
        if (i > 0) CHECK(a.records[i].best_fitness >= a.records[i - 1].best_fitness);
    }
    for (std::size_t s : sizes) CHECK(s == cfg.population_size);
    CHECK(a.score == a.records.back().best_fitness);
    CHECK(!a.callback.text.empty());
}

TEST_CASE("run_epigeal: fitness target stops the loop early") {
    const bench::Problem problem = bench::bumpy();
    ga::GaConfig cfg = tiny_ga(22);
    cfg.max_generations = 50;
    cfg.target_fitness = 1e-9;  // any positive fitness terminates immediately
    const ga::EpigealResult r = ga::run_epigeal(cfg, tiny_model(), problem);
    CHECK(r.records.size() <= 2);
}

TEST_CASE("plain_decode: endpoints and the published example") {
    bench::Problem unit = bench::stalagmite();
    Chromosome zeros{std::vector<std::uint8_t>(16, 0)}, ones{std::vector<std::uint8_t>(16, 1)};
    CHECK(ga::plain_decode(zeros, unit) == dg::Point{0.0, 0.0});
    CHECK(ga::plain_decode(ones, unit) == dg::Point{1.0, 1.0});

    const bench::Problem bumpy = bench::bumpy();
    Chromosome c{{1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}};
    const dg::Point pt = ga::plain_decode(c, bumpy);
    CHECK(std::abs(pt[0] - 5.0196) <= 1e-3);
    CHECK(pt[1] == doctest::Approx(1e-6));

    Chromosome odd{std::vector<std::uint8_t>(7, 0)};
    CHECK_THROWS_AS(ga::plain_decode(odd, unit), StructuralError);
}

TEST_CASE("run_plain_ga: runs, deterministic, never above the problem ceiling") {
    const bench::Problem problem = bench::stalagmite();
    ga::GaConfig cfg = tiny_ga(31);
    cfg.chromosome_length = 16;
    cfg.max_generations = 10;
    const ga::PlainGaResult a = ga::run_plain_ga(cfg, problem);
    const ga::PlainGaResult b = ga::run_plain_ga(cfg, problem);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i)
        CHECK(a.records[i].best_fitness == b.records[i].best_fitness);
    CHECK(a.score <= 1.0);
    for (std::size_t i = 1; i < a.records.size(); ++i)
        CHECK(a.records[i].best_fitness >= a.records[i - 1].best_fitness);
}

TEST_CASE("run_plain_ga: biased start clusters the initial decoded cloud") {
    const bench::Problem problem = bench::bumpy();
    ga::GaConfig cfg = tiny_ga(32);
    cfg.population_size = 64;
    cfg.chromosome_length = 16;
    cfg.max_generations = 1;
    ga::PlainGaOptions opts;
    opts.bias_target = dg::Point{0.031, 1.441};
    const ga::PlainGaResult r = ga::run_plain_ga(cfg, problem, opts);
    CHECK(r.records.size() == 1);
    // The generation-0 best must already sit near the target region.
    CHECK(std::abs(r.point[0] - 0.031) <= 0.35);
    CHECK(std::abs(r.point[1] - 1.441) <= 0.35);
}

TEST_CASE("biased_init: zero steps change nothing, 200 steps cluster the cloud, deterministic") {
    const bench::Problem problem = bench::bumpy();
    dg::DeepiGenConfig mcfg;  // experiment-1 scale
    mcfg.d_k = 32;
    mcfg.d_v = 16;
    ga::GaConfig cfg;
    cfg.population_size = 128;
    cfg.chromosome_length = 16;
    Rng init(41);
    Population pop = ga::init_population(cfg, init);

    Rng net(42);
    dg::DeepiGenModel model = dg::make_model(mcfg, 16, net);
    const dg::ModelSnapshot before = dg::snapshot(model);
    dg::biased_init(model, pop, problem, {0.031, 1.441}, 0);
    CHECK(dg::snapshot(model).text == before.text);

    dg::biased_init(model, pop, problem, {0.031, 1.441}, 200);
    const auto ts = dg::evaluate_population(model, pop, problem);
    int close = 0;
    for (const auto& t : ts)
        for (const dg::Point& s : t.solutions)
            close += (std::abs(s[0] - 0.031) <= 0.3 && std::abs(s[1] - 1.441) <= 0.3) ? 1 : 0;
    CHECK(close >= static_cast<int>(0.9 * static_cast<double>(pop.size())));

    // Determinism: same inputs, same pretrained parameters.
    Rng net2(42);
    dg::DeepiGenModel model2 = dg::make_model(mcfg, 16, net2);
    dg::biased_init(model2, pop, problem, {0.031, 1.441}, 200);
    CHECK(dg::snapshot(model2).text == dg::snapshot(model).text);

    CHECK_THROWS_AS(dg::biased_init(model, pop, problem, {42.0, 0.5}, 1), DomainError);
}

TEST_CASE("rng substreams are independent") {
    const Rng root(1234);
    Rng a1 = root.fork(Stream::selection);
    Rng b = root.fork(Stream::mutation);
    // Draw a lot from b; a's stream is unaffected.
    for (int i = 0; i < 1000; ++i) (void)b.next_u64();
    Rng a2 = root.fork(Stream::selection);
    for (int i = 0; i < 10; ++i) CHECK(a1.next_u64() == a2.next_u64());
}

TEST_CASE("epigeal and plain ga results are unaffected by running the other first") {
    const bench::Problem problem = bench::bumpy();
    ga::GaConfig cfg = tiny_ga(55);
    const ga::EpigealResult solo = ga::run_epigeal(cfg, tiny_model(), problem);
    (void)ga::run_plain_ga(cfg, problem);
    const ga::EpigealResult after = ga::run_epigeal(cfg, tiny_model(), problem);
    REQUIRE(solo.records.size() == after.records.size());
    for (std::size_t i = 0; i < solo.records.size(); ++i)
        CHECK(solo.records[i].best_fitness == after.records[i].best_fitness);
}
