#include <doctest.h>

#include "epiga/deepigen.hpp"
#include "test_util.hpp"

using namespace epiga;

namespace {

dg::DeepiGenConfig tiny_config(std::size_t p, std::size_t heads = 1, bool embed = false) {
    dg::DeepiGenConfig cfg;
    cfg.d_k = 4;
    cfg.embed = embed;
    cfg.d_v = embed ? 4 : p;
    cfg.heads = heads;
    cfg.qk_hidden = 6;
    cfg.decoder_hidden = 6;
    cfg.value_hidden = 6;
    return cfg;
}

Population random_population(std::size_t n, std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    Population pop;
    pop.members.resize(n);
    for (Chromosome& c : pop.members) {
        c.bits.resize(p);
        for (auto& b : c.bits) b = rng.bernoulli(0.5) ? 1 : 0;
    }
    return pop;
}

// Forces every head to produce a == 1 everywhere: zero net parameters give
// sigmoid(0) = 1/2, so gain 2 turns the weights into exact ones.
void force_identity_heads(dg::DeepiGenModel& model) {
    for (attn::AttentionHead& head : model.heads)
        for (auto* net : {&head.net_q, &head.net_k})
            for (auto& layer : net->layers) {
                for (double& w : layer.weight.values) w = 0.0;
                for (double& b : layer.bias.values) b = 0.0;
            }
}

}  // namespace

TEST_CASE("encode: identity epigenetics and silencing with embed off") {
    Rng rng(1);
    dg::DeepiGenModel model = dg::make_model(tiny_config(8), 8, rng);
    force_identity_heads(model);
    Chromosome x{{1, 0, 1, 1, 0, 0, 1, 0}};
    const auto epis = dg::encode(model, x);
    REQUIRE(epis.size() == 1);
    CHECK(epis[0].head == 1);
    CHECK(epis[0].x == x.as_reals());  // a == 1 everywhere: bits pass through

    // Zero-bit positions stay silenced no matter the weights.
    Rng rng2(2);
    dg::DeepiGenModel noisy = dg::make_model(tiny_config(8), 8, rng2);
    const auto noisy_epis = dg::encode(noisy, x);
    for (std::size_t i = 0; i < x.bits.size(); ++i)
        if (x.bits[i] == 0) CHECK(noisy_epis[0].x[i] == 0.0);
}

TEST_CASE("encode: sixteen heads give sixteen distinct epi-chromosomes") {
    Rng rng(3);
    dg::DeepiGenModel model = dg::make_model(tiny_config(16, 16), 16, rng);
    Chromosome x{{0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0}};
    const auto epis = dg::encode(model, x);
    REQUIRE(epis.size() == 16);
    for (std::size_t i = 0; i < epis.size(); ++i) {
        CHECK(epis[i].head == static_cast<int>(i) + 1);
        for (std::size_t j = i + 1; j < epis.size(); ++j) CHECK(epis[i].x != epis[j].x);
    }
}

TEST_CASE("decode: zeroed decoder lands on the box midpoint; outputs stay inside the box") {
    const bench::Problem bumpy = bench::bumpy();
    Rng rng(4);
    dg::DeepiGenModel model = dg::make_model(tiny_config(8), 8, rng);
    for (auto& layer : model.decoder.layers) {
        for (double& w : layer.weight.values) w = 0.0;
        for (double& b : layer.bias.values) b = 0.0;
    }
    const dg::Point mid = dg::decode(model, dg::EpiChromosome{1, std::vector<double>(8, 0.3)}, bumpy);
    CHECK(std::abs(mid[0] - 5.0) <= 1e-5);  // sigma(0) = 0.5 maps to the midpoint
    CHECK(std::abs(mid[1] - 5.0) <= 1e-5);

    const bench::Problem stal = bench::stalagmite();
    Rng rng2(5);
    dg::DeepiGenModel wild = dg::make_model(tiny_config(8), 8, rng2);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> epi(8);
        for (double& e : epi) e = rng2.uniform(-4, 4);
        const dg::Point pt = dg::decode(wild, dg::EpiChromosome{1, epi}, stal);
        CHECK(pt[0] > 0.0);
        CHECK(pt[0] < 1.0);
        CHECK(pt[1] > 0.0);
        CHECK(pt[1] < 1.0);
    }
}

TEST_CASE("pool_max picks the maximum with 1-based head index, ties to the lower") {
    const auto [v, h] = dg::pool_max(std::vector<double>{0.3, 0.67, 0.1});
    CHECK(v == 0.67);
    CHECK(h == 2);
    const auto [v2, h2] = dg::pool_max(std::vector<double>{0.5, 0.2, 0.5});
    CHECK(v2 == 0.5);
    CHECK(h2 == 1);
    CHECK_THROWS_AS(dg::pool_max(std::vector<double>{}), StructuralError);
}

TEST_CASE("evaluate_population: pooled fitness, determinism, single head") {
    const bench::Problem problem = bench::bumpy();
    Rng rng(6);
    dg::DeepiGenModel model = dg::make_model(tiny_config(8, 4), 8, rng);
    Population pop = random_population(6, 8, 7);
    pop.members[3] = pop.members[0];  // identical chromosomes
    const auto ts = dg::evaluate_population(model, pop, problem);
    REQUIRE(ts.size() == 6);
    for (const auto& t : ts) {
        REQUIRE(t.solutions.size() == 4);
        const auto [pooled, head] = dg::pool_max(t.fitness);
        CHECK(t.pooled == pooled);
        CHECK(t.best_head == head);
        for (double f : t.fitness) CHECK(t.pooled >= f);
    }
    CHECK(ts[0].solutions == ts[3].solutions);
    CHECK(ts[0].pooled == ts[3].pooled);

    Rng rng2(6);
    dg::DeepiGenModel single = dg::make_model(tiny_config(8, 1), 8, rng2);
    const auto ts1 = dg::evaluate_population(single, pop, problem);
    for (const auto& t : ts1) {
        CHECK(t.pooled == t.fitness[0]);
        CHECK(t.best_head == 1);
    }
}

TEST_CASE("training_loss formula and guard") {
    CHECK(dg::training_loss(std::vector<double>{1, 2, 4}) == doctest::Approx(1.75).epsilon(1e-7));
    const std::vector<double> ones(128, 1.0);
    CHECK(dg::training_loss(ones) == doctest::Approx(128.0).epsilon(1e-6));
    const double guarded = dg::training_loss(std::vector<double>{0.0});
    CHECK(std::isfinite(guarded));
    CHECK(guarded <= 1.0 / dg::kScoreEps);
}

TEST_CASE("loss monotonicity: raising every score lowers the loss") {
    Rng rng(8);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> scores(10), raised(10);
        for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] = rng.uniform(0.05, 1.0);
            raised[i] = scores[i] + rng.uniform(0.01, 0.5);
        }
        CHECK(dg::training_loss(raised) < dg::training_loss(scores));
    }
}

TEST_CASE("diffusion_penalty: zero for collapsed heads, worked example, never positive") {
    dg::TranscriptionSet same;
    same.solutions = {{0.4, 0.6}, {0.4, 0.6}, {0.4, 0.6}};
    same.fitness = {0.1, 0.1, 0.1};
    // Zero up to the roundoff of the mean (0.4*3/3 is not exactly 0.4).
    CHECK(std::abs(dg::diffusion_penalty(std::vector<dg::TranscriptionSet>{same})) <= 1e-30);

    dg::TranscriptionSet spread;
    spread.solutions = {{0.0, 0.0}, {2.0, 0.0}};
    spread.fitness = {0.1, 0.2};
    CHECK(dg::diffusion_penalty(std::vector<dg::TranscriptionSet>{spread}) ==
          doctest::Approx(-1.0));

    Rng rng(9);
    for (int rep = 0; rep < 100; ++rep) {
        dg::TranscriptionSet ts;
        for (int h = 0; h < 4; ++h)
            ts.solutions.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
        ts.fitness.assign(4, 0.5);
        CHECK(dg::diffusion_penalty(std::vector<dg::TranscriptionSet>{ts}) <= 0.0);
    }

    dg::TranscriptionSet lone;
    lone.solutions = {{0.1, 0.2}};
    lone.fitness = {0.5};
    CHECK_THROWS_AS(dg::diffusion_penalty(std::vector<dg::TranscriptionSet>{lone}), StructuralError);
}

TEST_CASE("pooling argmax is stable under positive rescaling") {
    Rng rng(10);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> scores(6);
        for (double& s : scores) s = rng.uniform(0.0, 1.0);
        const double c = rng.uniform(0.1, 9.0);
        std::vector<double> scaled = scores;
        for (double& s : scaled) s *= c;
        CHECK(dg::pool_max(scores).second == dg::pool_max(scaled).second);
    }
}

TEST_CASE("fit: zero epochs change nothing; fixed seed is deterministic") {
    const bench::Problem problem = bench::bumpy();
    dg::DeepiGenConfig cfg = tiny_config(8);
    cfg.epochs_per_generation = 0;
    Rng rng(11);
    dg::DeepiGenModel model = dg::make_model(cfg, 8, rng);
    const dg::ModelSnapshot before = dg::snapshot(model);
    Population pop = random_population(4, 8, 12);
    Rng diff(1);
    dg::fit(model, pop, problem, diff);
    CHECK(dg::snapshot(model).text == before.text);

    auto trained = [&](std::uint64_t seed) {
        dg::DeepiGenConfig c = tiny_config(8);
        c.epochs_per_generation = 3;
        Rng r(seed);
        dg::DeepiGenModel m = dg::make_model(c, 8, r);
        Rng d(seed);
        dg::fit(m, pop, problem, d);
        return dg::snapshot(m).text;
    };
    CHECK(trained(33) == trained(33));
}

TEST_CASE("fit: 20 epochs decrease the training loss in at least 9 of 10 seeded trials") {
    const bench::Problem problem = bench::bumpy();
    int decreased = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        dg::DeepiGenConfig cfg = tiny_config(8);
        cfg.epochs_per_generation = 20;
        Rng rng(seed * 101);
        dg::DeepiGenModel model = dg::make_model(cfg, 8, rng);
        Population pop = random_population(16, 8, seed * 77);
        auto loss_of = [&] {
            const auto ts = dg::evaluate_population(model, pop, problem);
            std::vector<double> scores;
            for (const auto& t : ts) scores.push_back(t.pooled);
            return dg::training_loss(scores);
        };
        const double before = loss_of();
        Rng diff(seed);
        dg::fit(model, pop, problem, diff);
        if (loss_of() < before) ++decreased;
    }
    CHECK(decreased >= 9);
}

TEST_CASE("fit gradients match finite differences on a 4-chromosome toy instance") {
    const bench::Problem problem = bench::bumpy();
    Rng rng(14);
    dg::DeepiGenModel model = dg::make_model(tiny_config(8, 2), 8, rng);
    Population pop = random_population(4, 8, 15);
    for (const bool diffusion : {false, true}) {
        CAPTURE(diffusion);
        auto [loss, grads] = dg::fit_loss_gradients(model, pop, problem, diffusion);
        CHECK(std::isfinite(loss));
        nn::ParamRefs params = dg::parameters(model);
        REQUIRE(grads.size() == params.size());
        const double h = 1e-6;
        double worst = 0.0;
        // Spot-check a handful of coordinates in every parameter tensor.
        Rng pick(16);
        for (std::size_t k = 0; k < params.size(); ++k) {
            for (int probe = 0; probe < 3; ++probe) {
                const std::size_t i = pick.index(params[k]->size());
                const double saved = (*params[k])[i];
                (*params[k])[i] = saved + h;
                const double up = dg::fit_loss_value(model, pop, problem, diffusion);
                (*params[k])[i] = saved - h;
                const double down = dg::fit_loss_value(model, pop, problem, diffusion);
                (*params[k])[i] = saved;
                const double fd = (up - down) / (2 * h);
                worst = std::max(worst, std::abs(grads[k][i] - fd) /
                                            std::max({std::abs(grads[k][i]), std::abs(fd), 1.0}));
            }
        }
        CHECK(worst <= 1e-3);
    }
}

TEST_CASE("epigenetic layer is removable end to end") {
    // a == 1 heads with embed off: decoding the encoded chromosome equals
    // decoding the raw bits.
    const bench::Problem problem = bench::stalagmite();
    Rng rng(17);
    dg::DeepiGenModel model = dg::make_model(tiny_config(8), 8, rng);
    force_identity_heads(model);
    Chromosome x{{1, 0, 0, 1, 1, 0, 1, 0}};
    const auto epis = dg::encode(model, x);
    const dg::Point via_layer = dg::decode(model, epis[0], problem);
    const dg::Point direct = dg::decode(model, dg::EpiChromosome{1, x.as_reals()}, problem);
    CHECK(via_layer == direct);
}

TEST_CASE("find_best: ties break to the lowest index, snapshot restores bit-exactly") {
    const bench::Problem problem = bench::bumpy();
    Rng rng(18);
    dg::DeepiGenModel model = dg::make_model(tiny_config(8, 2), 8, rng);
    Population pop = random_population(5, 8, 19);
    pop.members[2] = pop.members[0];

    CHECK_THROWS_AS(dg::find_best(model, Population{}, problem), StructuralError);

    const dg::BestResult best = dg::find_best(model, pop, problem);
    const auto ts = dg::evaluate_population(model, pop, problem);
    std::size_t expect = 0;
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i].pooled > ts[expect].pooled) expect = i;
    CHECK(best.index == expect);
    CHECK(best.fitness == ts[expect].pooled);

    // Single member: that chromosome.
    Population one;
    one.members = {pop.members[1]};
    CHECK(dg::find_best(model, one, problem).index == 0);

    // Restoring the snapshot reproduces decoded points bit-exactly.
    const dg::DeepiGenModel restored = dg::restore(best.callback);
    CHECK(restored.p == model.p);
    const auto ts2 = dg::evaluate_population(restored, pop, problem);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        REQUIRE(ts2[i].solutions.size() == ts[i].solutions.size());
        for (std::size_t h = 0; h < ts[i].solutions.size(); ++h) {
            CHECK(ts2[i].solutions[h][0] == ts[i].solutions[h][0]);
            CHECK(ts2[i].solutions[h][1] == ts[i].solutions[h][1]);
        }
    }
}

TEST_CASE("snapshot text format") {
    Rng rng(20);
    dg::DeepiGenModel model = dg::make_model(tiny_config(8, 2, true), 8, rng);
    const dg::ModelSnapshot snap = dg::snapshot(model);
    CHECK(snap.text.rfind("epiga-snapshot v1\n", 0) == 0);
    CHECK(snap.text.find("config d_k=4 d_v=4 N=2 embed=true gain=2\n") != std::string::npos);
    CHECK(snap.text.find("layer 0 6 8 tanh\n") != std::string::npos);
    const dg::DeepiGenModel back = dg::restore(snap);
    CHECK(dg::snapshot(back).text == snap.text);
}

TEST_CASE("model validation: embed=false forces d_v == p") {
    dg::DeepiGenConfig cfg = tiny_config(8);
    cfg.d_v = 5;
    Rng rng(21);
    CHECK_THROWS_AS(dg::make_model(cfg, 8, rng), StructuralError);
}
