#pragma once

#include "epiga/ga.hpp"
#include "epiga/svg_plot.hpp"

namespace epiga::exp {

using dg::Point;

struct ExperimentConfig {
    std::string problem = "bumpy";
    std::vector<std::uint64_t> seeds{1};
    ga::GaConfig ga;
    dg::DeepiGenConfig model;
    std::optional<Point> bias_target;
    std::size_t bias_steps = 200;
    bool constrained = false;
    double rho = 0.1;
    std::string out_dir = "out";

    bench::Problem make_problem() const;
    // Default success threshold: the configured target if any, else per-problem
    // (0.67 bumpy, 0.995 stalagmite, 0.80 constrained stalagmite).
    double success_threshold() const;
};

// JSON text with the original parameter names (N_i, p, r_mut, r_c, nb_iter,
// d_k, embed, d_v, N, r_diff, ...). Unknown keys and out-of-range values are
// rejected with the offending key in the message.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);
std::string config_to_text(const ExperimentConfig& cfg);

struct SeedResult {
    std::uint64_t seed = 0;
    ga::EpigealResult run;
    bool success = false;
    std::size_t generations_to_success = SIZE_MAX;  // SIZE_MAX when never reached
    double seconds = 0.0;
};

// Experiment 1 (single head, biased initialization toward the competing peak):
// per seed writes generations.csv, points.csv and summary.json under
// <out_dir>/seed_<s>/.
std::vector<SeedResult> run_experiment1(const ExperimentConfig& cfg);

// Experiment 2 (multi-head twins): additionally writes heads.csv (per-head
// decoded solutions of the best chromosome each generation) and
// peak_report.csv (nearest known peak per head within L-inf 0.25).
std::vector<SeedResult> run_experiment2(const ExperimentConfig& cfg);

struct HeadAssignment {
    int head = 1;
    Point point{};
    double fitness = 0.0;
    int peak_index = -1;  // index into problem.peaks, -1 when nothing within range
    double distance = 0.0;
};

std::vector<HeadAssignment> assign_heads_to_peaks(const dg::TranscriptionSet& ts,
                                                  const bench::Problem& problem,
                                                  double max_distance = 0.25);

// One axis of the parameter grid; values are validated against the published
// ranges before sampling.
struct SweepGrid {
    std::string problem = "bumpy";
    std::vector<std::size_t> population_sizes{32, 64, 128, 256, 512, 1024};
    std::vector<std::size_t> chromosome_lengths{8, 16, 32};
    std::vector<double> mutation_rates;  // defaults to 0.05..0.30 step 0.01
    std::vector<double> crossover_rates{0.7, 0.8, 0.9};
    std::vector<std::size_t> d_k{16, 32, 64};
    std::vector<std::size_t> d_v{8, 16, 32, 64};  // used when embed is drawn true
    std::vector<std::size_t> heads{1, 8, 16};
    std::vector<double> r_diff;  // defaults to 0.05..0.30 step 0.05, drawn when heads > 1
    std::vector<bool> embed{false, true};

    SweepGrid();
    void validate() const;
};

SweepGrid parse_grid(const std::string& path);

struct SweepRow {
    std::size_t index = 0;
    ExperimentConfig config;
    std::uint64_t seed = 0;
    bool success = false;
    double best_fitness = 0.0;
    std::size_t generations_to_success = SIZE_MAX;
    double seconds = 0.0;
    std::string error;  // non-empty when the run failed and was skipped
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    double success_rate = 0.0;
};

// Samples `budget` configurations uniformly from the grid, runs one seed each
// and writes sweep_summary.{csv,json} under out_dir.
SweepSummary run_sweep(const SweepGrid& grid, std::size_t budget, std::uint64_t seed,
                       const std::string& out_dir);

// Worker-count cap from EPIGA_THREADS (defaults to the hardware concurrency).
std::size_t thread_budget();

// generation,best_fitness,best_x,best_y,mean_fitness,diffusion_flag
std::string records_csv(std::span<const ga::GenerationRecord> records);

std::vector<svg::PopulationPoint> read_points_csv(const std::string& path);

}  // namespace epiga::exp
