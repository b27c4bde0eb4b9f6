#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "epiga/experiment.hpp"

namespace {

void print_seed_results(const std::vector<epiga::exp::SeedResult>& results) {
    std::size_t successes = 0;
    for (const auto& r : results) {
        std::printf("seed %llu: best %.4f at (%.4f, %.4f), %s", static_cast<unsigned long long>(r.seed),
                    r.run.score, r.run.point[0], r.run.point[1], r.success ? "success" : "no success");
        if (r.generations_to_success != SIZE_MAX)
            std::printf(" (generation %zu)", r.generations_to_success);
        std::printf(", %.1fs\n", r.seconds);
        successes += r.success ? 1 : 0;
    }
    std::printf("success rate: %zu/%zu\n", successes, results.size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EpiGeAl experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, grid_path, problem_name = "bumpy", records_path, out_path;
    std::size_t budget = 20;
    std::uint64_t sweep_seed = 1;
    double step = 0.001, rho = 0.1;

    CLI::App* exp1 = app.add_subcommand("exp1", "single-head run with biased initialization");
    exp1->add_option("--config", config_path, "experiment config (JSON)")->required();
    exp1->add_option("--out", out_dir, "output directory override");

    CLI::App* exp2 = app.add_subcommand("exp2", "multi-head twins run");
    exp2->add_option("--config", config_path, "experiment config (JSON)")->required();
    exp2->add_option("--out", out_dir, "output directory override");

    CLI::App* sweep = app.add_subcommand("sweep", "sampled parameter-grid robustness sweep");
    sweep->add_option("--grid", grid_path, "grid spec (JSON); defaults to the full published grid");
    sweep->add_option("--budget", budget, "number of sampled configurations")->required();
    sweep->add_option("--seed", sweep_seed, "base seed");
    sweep->add_option("--out", out_dir, "output directory");

    CLI::App* oracle = app.add_subcommand("oracle", "brute-force grid peak search");
    oracle->add_option("--problem", problem_name, "bumpy | stalagmite | constrained_stalagmite")
        ->required();
    oracle->add_option("--step", step, "grid step");
    oracle->add_option("--rho", rho, "exclusion radius for the constrained variant");
    oracle->add_option("--out", out_path, "write the peak table CSV here (default stdout)");

    CLI::App* plot = app.add_subcommand("plot", "render population migration panels as SVG");
    plot->add_option("--records", records_path, "points CSV (generation,member,head,x,y)")->required();
    plot->add_option("--problem", problem_name, "problem for the heatmap")->required();
    plot->add_option("--rho", rho, "exclusion radius for the constrained variant");
    plot->add_option("--out", out_path, "output SVG path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (exp1->parsed() || exp2->parsed()) {
            epiga::exp::ExperimentConfig cfg = epiga::exp::parse_config(config_path);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            const auto results =
                exp1->parsed() ? epiga::exp::run_experiment1(cfg) : epiga::exp::run_experiment2(cfg);
            print_seed_results(results);
        } else if (sweep->parsed()) {
            epiga::exp::SweepGrid grid;
            if (!grid_path.empty()) grid = epiga::exp::parse_grid(grid_path);
            const auto summary =
                epiga::exp::run_sweep(grid, budget, sweep_seed, out_dir.empty() ? "sweep_out" : out_dir);
            for (const auto& row : summary.rows)
                if (!row.error.empty())
                    std::fprintf(stderr, "config %zu failed: %s\n", row.index, row.error.c_str());
            std::printf("success rate: %.0f%% (%zu configs)\n", summary.success_rate * 100.0,
                        summary.rows.size());
        } else if (oracle->parsed()) {
            const auto problem = epiga::bench::problem_by_name(problem_name, rho);
            const auto peaks = epiga::bench::grid_oracle(problem, step);
            std::string csv = "name,x,y,height\n";
            char buf[160];
            for (const auto& p : peaks) {
                std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g\n", problem.name.c_str(), p.x,
                              p.y, p.height);
                csv += buf;
            }
            if (out_path.empty()) {
                std::fputs(csv.c_str(), stdout);
            } else {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw epiga::IoError("cannot open " + out_path);
                out << csv;
            }
        } else if (plot->parsed()) {
            const auto problem = epiga::bench::problem_by_name(problem_name, rho);
            const auto points = epiga::exp::read_points_csv(records_path);
            epiga::svg::render_population_svg_file(points, problem, out_path);
            std::printf("wrote %s\n", out_path.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
