#include "epiga/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace epiga::exp {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t thread_budget() {
    if (const char* env = std::getenv("EPIGA_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && n >= 1) return static_cast<std::size_t>(std::min(n, 64L));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace {

// Runs tasks 0..count-1 on up to thread_budget() workers; each task owns its
// own output slot, so results are independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min(thread_budget(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

[[noreturn]] void fail_key(const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
}

double require_number(const json& j, const std::string& key) {
    if (!j.is_number()) fail_key(key, "expected a number");
    return j.get<double>();
}

std::size_t require_positive_int(const json& j, const std::string& key) {
    if (!j.is_number_unsigned() || j.get<std::uint64_t>() == 0)
        fail_key(key, "expected a positive integer");
    return j.get<std::size_t>();
}

double require_rate(const json& j, const std::string& key) {
    const double v = require_number(j, key);
    if (v < 0.0 || v > 1.0) fail_key(key, "must lie in [0,1]");
    return v;
}

}  // namespace

bench::Problem ExperimentConfig::make_problem() const {
    if (constrained) {
        if (problem != "stalagmite" && problem != "constrained_stalagmite")
            throw ConfigError("config key 'constrained': only supported for stalagmite");
        return bench::constrained_stalagmite(rho);
    }
    return bench::problem_by_name(problem, rho);
}

double ExperimentConfig::success_threshold() const {
    if (ga.target_fitness) return *ga.target_fitness;
    if (problem == "bumpy") return 0.67;
    if (constrained || problem == "constrained_stalagmite") return 0.80;
    return 0.995;  // stalagmite
}

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    ExperimentConfig cfg;
    bool have_d_v = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "problem") {
            cfg.problem = value.get<std::string>();
            if (cfg.problem != "bumpy" && cfg.problem != "stalagmite" &&
                cfg.problem != "constrained_stalagmite")
                fail_key(key, "unknown problem '" + cfg.problem + "'");
            if (cfg.problem == "constrained_stalagmite") cfg.constrained = true;
        } else if (key == "seeds") {
            if (!value.is_array() || value.empty()) fail_key(key, "expected a non-empty array");
            cfg.seeds.clear();
            for (const auto& s : value) cfg.seeds.push_back(s.get<std::uint64_t>());
        } else if (key == "N_i") {
            cfg.ga.population_size = require_positive_int(value, key);
        } else if (key == "p") {
            cfg.ga.chromosome_length = require_positive_int(value, key);
        } else if (key == "r_mut") {
            cfg.ga.mutation_rate = require_rate(value, key);
        } else if (key == "r_c") {
            cfg.ga.crossover_rate = require_rate(value, key);
        } else if (key == "nb_iter") {
            cfg.ga.max_generations = require_positive_int(value, key);
        } else if (key == "target_fitness") {
            cfg.ga.target_fitness = require_number(value, key);
        } else if (key == "d_k") {
            cfg.model.d_k = require_positive_int(value, key);
        } else if (key == "embed") {
            if (!value.is_boolean()) fail_key(key, "expected a boolean");
            cfg.model.embed = value.get<bool>();
        } else if (key == "d_v") {
            cfg.model.d_v = require_positive_int(value, key);
            have_d_v = true;
        } else if (key == "N") {
            cfg.model.heads = require_positive_int(value, key);
        } else if (key == "r_diff") {
            cfg.model.r_diff = require_rate(value, key);
        } else if (key == "epochs") {
            if (!value.is_number_unsigned()) fail_key(key, "expected a non-negative integer");
            cfg.model.epochs_per_generation = value.get<std::size_t>();
        } else if (key == "lr") {
            cfg.model.learning_rate = require_number(value, key);
            if (cfg.model.learning_rate <= 0.0) fail_key(key, "must be positive");
        } else if (key == "lambda_diff") {
            cfg.model.lambda_diff = require_number(value, key);
            if (cfg.model.lambda_diff < 0.0) fail_key(key, "must be non-negative");
        } else if (key == "gain") {
            cfg.model.gain = require_number(value, key);
            if (cfg.model.gain <= 0.0) fail_key(key, "must be positive");
        } else if (key == "decoder_hidden") {
            cfg.model.decoder_hidden = require_positive_int(value, key);
        } else if (key == "qk_hidden") {
            cfg.model.qk_hidden = require_positive_int(value, key);
        } else if (key == "value_hidden") {
            cfg.model.value_hidden = require_positive_int(value, key);
        } else if (key == "bias_target") {
            if (!value.is_array() || value.size() != 2) fail_key(key, "expected [x, y]");
            cfg.bias_target = Point{value[0].get<double>(), value[1].get<double>()};
        } else if (key == "bias_steps") {
            if (!value.is_number_unsigned()) fail_key(key, "expected a non-negative integer");
            cfg.bias_steps = value.get<std::size_t>();
        } else if (key == "constrained") {
            if (!value.is_boolean()) fail_key(key, "expected a boolean");
            cfg.constrained = value.get<bool>();
        } else if (key == "rho") {
            cfg.rho = require_number(value, key);
            if (cfg.rho < 0.0) fail_key(key, "must be non-negative");
        } else if (key == "out_dir") {
            cfg.out_dir = value.get<std::string>();
        } else {
            fail_key(key, "unknown key");
        }
    }
    if (!have_d_v) cfg.model.d_v = cfg.model.embed ? 16 : cfg.ga.chromosome_length;
    if (!cfg.model.embed && cfg.model.d_v != cfg.ga.chromosome_length)
        fail_key("d_v", "must equal p when embed is false");
    ga::validate(cfg.ga);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_to_text(const ExperimentConfig& cfg) {
    json j;
    j["problem"] = cfg.problem;
    j["seeds"] = cfg.seeds;
    j["N_i"] = cfg.ga.population_size;
    j["p"] = cfg.ga.chromosome_length;
    j["r_mut"] = cfg.ga.mutation_rate;
    j["r_c"] = cfg.ga.crossover_rate;
    j["nb_iter"] = cfg.ga.max_generations;
    if (cfg.ga.target_fitness) j["target_fitness"] = *cfg.ga.target_fitness;
    j["d_k"] = cfg.model.d_k;
    j["embed"] = cfg.model.embed;
    j["d_v"] = cfg.model.d_v;
    j["N"] = cfg.model.heads;
    j["r_diff"] = cfg.model.r_diff;
    j["epochs"] = cfg.model.epochs_per_generation;
    j["lr"] = cfg.model.learning_rate;
    j["lambda_diff"] = cfg.model.lambda_diff;
    j["gain"] = cfg.model.gain;
    j["decoder_hidden"] = cfg.model.decoder_hidden;
    j["qk_hidden"] = cfg.model.qk_hidden;
    j["value_hidden"] = cfg.model.value_hidden;
    if (cfg.bias_target) j["bias_target"] = {(*cfg.bias_target)[0], (*cfg.bias_target)[1]};
    j["bias_steps"] = cfg.bias_steps;
    j["constrained"] = cfg.constrained;
    j["rho"] = cfg.rho;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2) + "\n";
}

std::string records_csv(std::span<const ga::GenerationRecord> records) {
    std::string out = "generation,best_fitness,best_x,best_y,mean_fitness,diffusion_flag\n";
    char buf[256];
    for (const ga::GenerationRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%d\n", r.generation,
                      r.best_fitness, r.best_point[0], r.best_point[1], r.mean_fitness,
                      r.diffusion ? 1 : 0);
        out += buf;
    }
    return out;
}

std::vector<HeadAssignment> assign_heads_to_peaks(const dg::TranscriptionSet& ts,
                                                  const bench::Problem& problem,
                                                  double max_distance) {
    std::vector<HeadAssignment> out;
    for (std::size_t h = 0; h < ts.solutions.size(); ++h) {
        HeadAssignment a;
        a.head = static_cast<int>(h) + 1;
        a.point = ts.solutions[h];
        a.fitness = ts.fitness[h];
        a.peak_index = -1;
        double best = max_distance;
        for (std::size_t k = 0; k < problem.peaks.size(); ++k) {
            const double d = std::max(std::abs(a.point[0] - problem.peaks[k].x),
                                      std::abs(a.point[1] - problem.peaks[k].y));
            if (d <= best) {
                best = d;
                a.peak_index = static_cast<int>(k);
            }
        }
        a.distance = a.peak_index >= 0 ? best : -1.0;
        out.push_back(a);
    }
    return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string points_csv(std::span<const svg::PopulationPoint> points) {
    std::string out = "generation,member,head,x,y\n";
    char buf[160];
    for (const svg::PopulationPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%d,%.17g,%.17g\n", p.generation, p.member, p.head,
                      p.x, p.y);
        out += buf;
    }
    return out;
}

json summary_json(const ExperimentConfig& cfg, const SeedResult& sr, int max_distinct_peaks) {
    json j;
    j["config"] = json::parse(config_to_text(cfg));
    j["seed"] = sr.seed;
    j["success"] = sr.success;
    j["best_fitness"] = sr.run.score;
    j["generations_to_success"] =
        sr.generations_to_success == SIZE_MAX ? -1 : static_cast<long>(sr.generations_to_success);
    if (max_distinct_peaks >= 0) j["max_distinct_peaks"] = max_distinct_peaks;
    return j;
}

struct Exp2Tracking {
    std::vector<svg::PopulationPoint> points;
    std::string heads_csv = "generation,head,x,y,fitness\n";
    int max_distinct_peaks = 0;
    dg::TranscriptionSet last_best_ts;
};

// Shared per-seed runner. exp2 tracking adds head logging and peak coverage.
SeedResult run_one_seed(const ExperimentConfig& cfg, const bench::Problem& problem,
                        std::uint64_t seed, bool exp2, Exp2Tracking* tracking) {
    // tracking is always supplied; the exp2 flag controls head logging.
    const auto t0 = std::chrono::steady_clock::now();
    const double threshold = cfg.success_threshold();

    ga::GaConfig g = cfg.ga;
    g.seed = seed;
    if (!g.target_fitness) g.target_fitness = threshold + 1e-3;

    ga::EpigealOptions opts;
    if (cfg.bias_target) opts.bias_target = cfg.bias_target;
    opts.bias_steps = cfg.bias_steps;

    std::vector<svg::PopulationPoint>* points = &tracking->points;

    opts.observer = [&](const ga::GenerationView& view) {
        for (std::size_t n = 0; n < view.transcriptions.size(); ++n)
            for (std::size_t h = 0; h < view.transcriptions[n].solutions.size(); ++h)
                points->push_back({view.generation, n, static_cast<int>(h) + 1,
                                   view.transcriptions[n].solutions[h][0],
                                   view.transcriptions[n].solutions[h][1]});
        if (!exp2) return false;

        // Best chromosome of this generation, logged per head.
        std::size_t arg = 0;
        for (std::size_t n = 1; n < view.transcriptions.size(); ++n)
            if (view.transcriptions[n].pooled > view.transcriptions[arg].pooled) arg = n;
        const dg::TranscriptionSet& ts = view.transcriptions[arg];
        char buf[160];
        for (std::size_t h = 0; h < ts.solutions.size(); ++h) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g\n", view.generation, h + 1,
                          ts.solutions[h][0], ts.solutions[h][1], ts.fitness[h]);
            tracking->heads_csv += buf;
        }
        tracking->last_best_ts = ts;

        std::set<int> covered;
        for (const HeadAssignment& a : assign_heads_to_peaks(ts, problem))
            if (a.peak_index >= 0) covered.insert(a.peak_index);
        tracking->max_distinct_peaks =
            std::max(tracking->max_distinct_peaks, static_cast<int>(covered.size()));
        // Twins reached and the fitness target met: nothing left to show.
        return tracking->max_distinct_peaks >= 2 && view.record.best_fitness >= threshold;
    };

    SeedResult sr;
    sr.seed = seed;
    sr.run = ga::run_epigeal(g, cfg.model, problem, opts);
    for (const ga::GenerationRecord& r : sr.run.records)
        if (r.best_fitness >= threshold) {
            sr.generations_to_success = r.generation;
            break;
        }
    sr.success = sr.generations_to_success != SIZE_MAX;
    sr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sr;
}

std::vector<SeedResult> run_experiment(const ExperimentConfig& cfg, bool exp2) {
    const bench::Problem problem = cfg.make_problem();
    fs::create_directories(cfg.out_dir);
    std::vector<SeedResult> results(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), [&](std::size_t i) {
        const std::uint64_t seed = cfg.seeds[i];
        Exp2Tracking tracking;
        results[i] = run_one_seed(cfg, problem, seed, exp2, &tracking);

        const fs::path dir = fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);
        write_file(dir / "generations.csv", records_csv(results[i].run.records));
        write_file(dir / "points.csv", points_csv(tracking.points));
        if (exp2) {
            write_file(dir / "heads.csv", tracking.heads_csv);
            std::string report = "head,x,y,fitness,nearest_peak,distance\n";
            char buf[200];
            for (const HeadAssignment& a : assign_heads_to_peaks(tracking.last_best_ts, problem)) {
                if (a.peak_index >= 0)
                    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%d,%.9g\n", a.head,
                                  a.point[0], a.point[1], a.fitness, a.peak_index, a.distance);
                else
                    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,none,\n", a.head, a.point[0],
                                  a.point[1], a.fitness);
                report += buf;
            }
            write_file(dir / "peak_report.csv", report);
            write_file(dir / "summary.json",
                       summary_json(cfg, results[i], tracking.max_distinct_peaks).dump(2) + "\n");
        } else {
            write_file(dir / "summary.json", summary_json(cfg, results[i], -1).dump(2) + "\n");
        }
    });
    return results;
}

}  // namespace

std::vector<SeedResult> run_experiment1(const ExperimentConfig& cfg_in) {
    if (cfg_in.model.heads != 1) throw ConfigError("experiment 1 requires N == 1");
    ExperimentConfig cfg = cfg_in;
    if (!cfg.bias_target && cfg.problem == "bumpy") cfg.bias_target = Point{0.031, 1.441};
    return run_experiment(cfg, false);
}

std::vector<SeedResult> run_experiment2(const ExperimentConfig& cfg) {
    if (cfg.model.heads < 2) throw ConfigError("experiment 2 requires N >= 2");
    return run_experiment(cfg, true);
}

SweepGrid::SweepGrid() {
    for (int i = 5; i <= 30; ++i) mutation_rates.push_back(i / 100.0);
    for (int i = 1; i <= 6; ++i) r_diff.push_back(i * 0.05);
}

namespace {
bool near_any(double v, std::initializer_list<double> set) {
    for (double s : set)
        if (std::abs(v - s) < 1e-9) return true;
    return false;
}
}  // namespace

void SweepGrid::validate() const {
    if (problem != "bumpy" && problem != "stalagmite")
        throw ConfigError("sweep grid: problem must be bumpy or stalagmite");
    auto check_set = [](const auto& values, std::initializer_list<std::size_t> allowed,
                        const char* key) {
        if (values.empty()) throw ConfigError(std::string("sweep grid: empty ") + key);
        for (auto v : values) {
            bool ok = false;
            for (auto a : allowed) ok = ok || v == a;
            if (!ok)
                throw ConfigError("sweep grid: " + std::to_string(v) + " not allowed for " + key);
        }
    };
    check_set(population_sizes, {32, 64, 128, 256, 512, 1024}, "N_i");
    check_set(chromosome_lengths, {8, 16, 32}, "p");
    check_set(d_k, {16, 32, 64}, "d_k");
    check_set(d_v, {8, 16, 32, 64}, "d_v");
    check_set(heads, {1, 8, 16}, "N");
    if (mutation_rates.empty()) throw ConfigError("sweep grid: empty r_mut");
    for (double v : mutation_rates) {
        const double steps = v * 100.0;
        if (v < 0.05 - 1e-9 || v > 0.3 + 1e-9 || std::abs(steps - std::round(steps)) > 1e-6)
            throw ConfigError("sweep grid: r_mut " + std::to_string(v) +
                              " not on the 0.05..0.30 step 0.01 grid");
    }
    if (crossover_rates.empty()) throw ConfigError("sweep grid: empty r_c");
    for (double v : crossover_rates)
        if (!near_any(v, {0.7, 0.8, 0.9}))
            throw ConfigError("sweep grid: r_c " + std::to_string(v) + " not in {0.7,0.8,0.9}");
    if (r_diff.empty()) throw ConfigError("sweep grid: empty r_diff");
    for (double v : r_diff)
        if (!near_any(v, {0.05, 0.10, 0.15, 0.20, 0.25, 0.30}))
            throw ConfigError("sweep grid: r_diff " + std::to_string(v) +
                              " not on the 0.05..0.30 step 0.05 grid");
    if (embed.empty()) throw ConfigError("sweep grid: empty embed");
}

SweepGrid parse_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("sweep grid: cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep grid: malformed JSON: ") + e.what());
    }
    SweepGrid grid;
    for (const auto& [key, value] : j.items()) {
        if (key == "problem") grid.problem = value.get<std::string>();
        else if (key == "N_i") grid.population_sizes = value.get<std::vector<std::size_t>>();
        else if (key == "p") grid.chromosome_lengths = value.get<std::vector<std::size_t>>();
        else if (key == "r_mut") grid.mutation_rates = value.get<std::vector<double>>();
        else if (key == "r_c") grid.crossover_rates = value.get<std::vector<double>>();
        else if (key == "d_k") grid.d_k = value.get<std::vector<std::size_t>>();
        else if (key == "d_v") grid.d_v = value.get<std::vector<std::size_t>>();
        else if (key == "N") grid.heads = value.get<std::vector<std::size_t>>();
        else if (key == "r_diff") grid.r_diff = value.get<std::vector<double>>();
        else if (key == "embed") grid.embed = value.get<std::vector<bool>>();
        else fail_key(key, "unknown sweep grid key");
    }
    grid.validate();
    return grid;
}

SweepSummary run_sweep(const SweepGrid& grid, std::size_t budget, std::uint64_t seed,
                       const std::string& out_dir) {
    grid.validate();
    if (budget == 0) throw ConfigError("sweep: budget must be positive");
    fs::create_directories(out_dir);

    // Draw all configurations up front so sampling is independent of the
    // worker schedule.
    Rng rng = Rng(seed).fork(Stream::sweep);
    std::vector<ExperimentConfig> configs(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        ExperimentConfig& c = configs[i];
        c.problem = grid.problem;
        c.ga.population_size = grid.population_sizes[rng.index(grid.population_sizes.size())];
        c.ga.chromosome_length = grid.chromosome_lengths[rng.index(grid.chromosome_lengths.size())];
        c.ga.mutation_rate = grid.mutation_rates[rng.index(grid.mutation_rates.size())];
        c.ga.crossover_rate = grid.crossover_rates[rng.index(grid.crossover_rates.size())];
        c.ga.max_generations = 100;
        c.model.d_k = grid.d_k[rng.index(grid.d_k.size())];
        c.model.embed = grid.embed[rng.index(grid.embed.size())];
        c.model.d_v = c.model.embed ? grid.d_v[rng.index(grid.d_v.size())]
                                    : c.ga.chromosome_length;
        c.model.heads = grid.heads[rng.index(grid.heads.size())];
        c.model.r_diff = c.model.heads > 1 ? grid.r_diff[rng.index(grid.r_diff.size())] : 0.0;
        c.seeds = {seed + i};
        c.out_dir = out_dir;
    }

    SweepSummary summary;
    summary.rows.resize(budget);
    parallel_for(budget, [&](std::size_t i) {
        SweepRow& row = summary.rows[i];
        row.index = i;
        row.config = configs[i];
        row.seed = configs[i].seeds[0];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const bench::Problem problem = configs[i].make_problem();
            ga::GaConfig g = configs[i].ga;
            g.seed = row.seed;
            g.target_fitness = configs[i].success_threshold() + 1e-3;
            const ga::EpigealResult run = ga::run_epigeal(g, configs[i].model, problem);
            row.best_fitness = run.score;
            for (const ga::GenerationRecord& r : run.records)
                if (r.best_fitness >= configs[i].success_threshold()) {
                    row.generations_to_success = r.generation;
                    break;
                }
            row.success = row.generations_to_success != SIZE_MAX;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    std::size_t successes = 0;
    for (const SweepRow& row : summary.rows) successes += row.success ? 1 : 0;
    summary.success_rate = static_cast<double>(successes) / static_cast<double>(budget);

    std::string csv =
        "index,N_i,p,r_mut,r_c,d_k,embed,d_v,N,r_diff,seed,success,best_fitness,"
        "generations_to_success,seconds\n";
    char buf[320];
    json rows = json::array();
    for (const SweepRow& row : summary.rows) {
        const ExperimentConfig& c = row.config;
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.9g,%.9g,%zu,%d,%zu,%zu,%.9g,%llu,%d,%.9g,%ld,%.3f\n",
                      row.index, c.ga.population_size, c.ga.chromosome_length, c.ga.mutation_rate,
                      c.ga.crossover_rate, c.model.d_k, c.model.embed ? 1 : 0, c.model.d_v,
                      c.model.heads, c.model.r_diff,
                      static_cast<unsigned long long>(row.seed), row.success ? 1 : 0,
                      row.best_fitness,
                      row.generations_to_success == SIZE_MAX
                          ? -1L
                          : static_cast<long>(row.generations_to_success),
                      row.seconds);
        csv += buf;
        json r;
        r["config"] = json::parse(config_to_text(c));
        r["seed"] = row.seed;
        r["success"] = row.success;
        r["best_fitness"] = row.best_fitness;
        r["generations_to_success"] = row.generations_to_success == SIZE_MAX
                                          ? -1L
                                          : static_cast<long>(row.generations_to_success);
        if (!row.error.empty()) r["error"] = row.error;
        rows.push_back(r);
    }
    json top;
    top["rows"] = rows;
    top["success_rate"] = summary.success_rate;
    write_file(fs::path(out_dir) / "sweep_summary.csv", csv);
    write_file(fs::path(out_dir) / "sweep_summary.json", top.dump(2) + "\n");
    return summary;
}

std::vector<svg::PopulationPoint> read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("generation,member,head,x,y", 0) != 0)
        throw ConfigError("points csv: missing 'generation,member,head,x,y' header in " + path);
    std::vector<svg::PopulationPoint> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        svg::PopulationPoint p;
        if (std::sscanf(line.c_str(), "%zu,%zu,%d,%lf,%lf", &p.generation, &p.member, &p.head,
                        &p.x, &p.y) != 5)
            throw ConfigError("points csv: malformed row: " + line);
        points.push_back(p);
    }
    return points;
}

}  // namespace epiga::exp
