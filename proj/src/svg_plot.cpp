#include "epiga/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <vector>

namespace epiga::svg {

namespace {

constexpr double kHeatStep = 0.01;
constexpr int kLevels = 24;
constexpr int kPanelSize = 300;
constexpr int kMargin = 28;
constexpr int kMaxPanels = 8;

// Dark-blue to yellow ramp, interpolated across quantization levels.
std::string level_color(int level) {
    static const double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                       {94, 201, 98}, {253, 231, 37}};
    const double t = static_cast<double>(level) / (kLevels - 1);
    const double pos = t * 4.0;
    const int lo = std::min(3, static_cast<int>(pos));
    const double frac = pos - lo;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(stops[lo][0] + frac * (stops[lo + 1][0] - stops[lo][0])),
                  static_cast<int>(stops[lo][1] + frac * (stops[lo + 1][1] - stops[lo][1])),
                  static_cast<int>(stops[lo][2] + frac * (stops[lo + 1][2] - stops[lo][2])));
    return buf;
}

const char* head_color(int head) {
    static const char* palette[8] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
                                     "#ff7f00", "#a65628", "#f781bf", "#222222"};
    return palette[(head - 1) % 8];
}

void append(std::string& out, const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    out += buf;
}

}  // namespace

std::string render_population_svg(std::span<const PopulationPoint> points,
                                  const bench::Problem& problem) {
    if (points.empty()) throw StructuralError("render_population_svg: no points");

    std::set<std::size_t> generation_set;
    for (const PopulationPoint& p : points) generation_set.insert(p.generation);
    std::vector<std::size_t> generations(generation_set.begin(), generation_set.end());
    if (generations.size() > kMaxPanels) {
        std::vector<std::size_t> pick;
        for (int i = 0; i < kMaxPanels; ++i) {
            const std::size_t idx =
                (generations.size() - 1) * static_cast<std::size_t>(i) / (kMaxPanels - 1);
            pick.push_back(generations[idx]);
        }
        pick.erase(std::unique(pick.begin(), pick.end()), pick.end());
        generations = pick;
    }

    const bench::Interval bx = problem.box[0], by = problem.box[1];
    const double sx = kPanelSize / (bx.hi - bx.lo);
    const double sy = kPanelSize / (by.hi - by.lo);
    const auto px = [&](double x) { return (x - bx.lo) * sx; };
    const auto py = [&](double y) { return kPanelSize - (y - by.lo) * sy; };

    // Heatmap grid, shared by every panel through <use>.
    const int nx = std::max(1, static_cast<int>(std::round((bx.hi - bx.lo) / kHeatStep)));
    const int ny = std::max(1, static_cast<int>(std::round((by.hi - by.lo) / kHeatStep)));
    std::vector<std::vector<int>> levels(static_cast<std::size_t>(ny));
    double fmax = 0.0;
    std::vector<std::vector<double>> vals(static_cast<std::size_t>(ny),
                                          std::vector<double>(static_cast<std::size_t>(nx)));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = bx.lo + (i + 0.5) * (bx.hi - bx.lo) / nx;
            const double y = by.lo + (j + 0.5) * (by.hi - by.lo) / ny;
            const double f = problem.value(x, y);
            vals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = f;
            fmax = std::max(fmax, f);
        }
    if (fmax <= 0.0) fmax = 1.0;
    for (int j = 0; j < ny; ++j) {
        levels[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(nx));
        for (int i = 0; i < nx; ++i)
            levels[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = std::min(
                kLevels - 1,
                static_cast<int>(vals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] /
                                 fmax * kLevels));
    }

    const int panels = static_cast<int>(generations.size());
    const int cols = std::min(panels, 4);
    const int rows = (panels + cols - 1) / cols;
    const int width = cols * (kPanelSize + kMargin) + kMargin;
    const int height = rows * (kPanelSize + kMargin) + kMargin;

    std::string out;
    out.reserve(1 << 20);
    append(out,
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
           "viewBox=\"0 0 %d %d\">\n",
           width, height, width, height);
    out += "<defs>\n<g id=\"heatmap\">\n";
    const double cw = static_cast<double>(kPanelSize) / nx;
    const double ch = static_cast<double>(kPanelSize) / ny;
    for (int j = 0; j < ny; ++j) {
        const auto& row = levels[static_cast<std::size_t>(j)];
        int i = 0;
        while (i < nx) {
            int k = i;
            while (k < nx && row[static_cast<std::size_t>(k)] == row[static_cast<std::size_t>(i)]) ++k;
            // SVG y grows downward; grid row j counts upward from the box floor.
            append(out, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n",
                   i * cw, kPanelSize - (j + 1) * ch, (k - i) * cw, ch,
                   level_color(row[static_cast<std::size_t>(i)]).c_str());
            i = k;
        }
    }
    out += "</g>\n</defs>\n";

    for (int panel = 0; panel < panels; ++panel) {
        const std::size_t gen = generations[static_cast<std::size_t>(panel)];
        const int ox = kMargin + (panel % cols) * (kPanelSize + kMargin);
        const int oy = kMargin + (panel / cols) * (kPanelSize + kMargin);
        append(out, "<g transform=\"translate(%d,%d)\">\n", ox, oy);
        out += "<use href=\"#heatmap\"/>\n";
        for (const PopulationPoint& p : points) {
            if (p.generation != gen) continue;
            append(out, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\" fill=\"%s\" fill-opacity=\"0.8\"/>\n",
                   px(p.x), py(p.y), head_color(p.head));
        }
        append(out, "<text x=\"4\" y=\"-6\" font-size=\"12\" font-family=\"sans-serif\">generation %zu</text>\n",
               gen);
        append(out, "<rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"#444\"/>\n",
               kPanelSize, kPanelSize);
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

void render_population_svg_file(std::span<const PopulationPoint> points,
                                const bench::Problem& problem, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << render_population_svg(points, problem);
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace epiga::svg
