#pragma once

#include <span>
#include <string>

#include "epiga/benchmarks.hpp"

namespace epiga::svg {

// One decoded population point: `member` indexes the chromosome, `head` the
// attention head that produced the transcription (1-based).
struct PopulationPoint {
    std::size_t generation = 0;
    std::size_t member = 0;
    int head = 1;
    double x = 0.0;
    double y = 0.0;
};

// Standalone SVG: one panel per recorded generation (capped at 8, evenly
// spaced), each a fitness heatmap sampled at grid step 0.01 with the decoded
// points overlaid. Output bytes are a pure function of the inputs.
std::string render_population_svg(std::span<const PopulationPoint> points,
                                  const bench::Problem& problem);

void render_population_svg_file(std::span<const PopulationPoint> points,
                                const bench::Problem& problem, const std::string& path);

}  // namespace epiga::svg
