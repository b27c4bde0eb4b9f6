#include "epiga/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace epiga::bench {

namespace {

constexpr double kBumpyLo = 1e-6;
constexpr double kStalCenter = 0.0667;

// 1-D maximizers of the STALAGMITE factor product, located by dense search;
// the paper's (0.06, 0.06) and (0.262, 0.067) are rounded versions of these.
constexpr double kStalU1 = 0.066832;
constexpr double kStalU2 = 0.261813;

double bumpy_value(double x, double y) {
    const double s1 = std::sin(x - y);
    const double s2 = std::sin(x + y);
    return s1 * s1 * s2 * s2 / std::sqrt(x * x + 2.0 * y * y);
}

double stal_axis(double u) {
    const double s = std::sin(5.1 * M_PI * u + 0.5);
    const double s2 = s * s;
    const double d = u - kStalCenter;
    return s2 * s2 * s2 * std::exp(-4.0 * std::log(2.0) * d * d / 0.64);
}

// g(x) * g(y); the commutative product keeps f(x,y) == f(y,x) bit-exact.
double stal_value(double x, double y) { return stal_axis(x) * stal_axis(y); }

ad::Var bumpy_tape(ad::Tape& t, ad::Var x, ad::Var y) {
    ad::Var num = t.mul(t.square(t.sin(t.sub(x, y))), t.square(t.sin(t.add(x, y))));
    ad::Var den = t.sqrt(t.add(t.square(x), t.scale(t.square(y), 2.0)));
    return t.div(num, den);
}

ad::Var stal_axis_tape(ad::Tape& t, ad::Var u) {
    ad::Var f1 = t.power(t.sin(t.add(t.scale(u, 5.1 * M_PI), t.constant_scalar(0.5))), 6.0);
    ad::Var d = t.sub(u, t.constant_scalar(kStalCenter));
    ad::Var f2 = t.exp(t.scale(t.square(d), -4.0 * std::log(2.0) / 0.64));
    return t.mul(f1, f2);
}

ad::Var stal_tape(ad::Tape& t, ad::Var x, ad::Var y) {
    return t.mul(stal_axis_tape(t, x), stal_axis_tape(t, y));
}

// |u| as sqrt(u^2): composed from guarded primitives, smooth away from 0.
ad::Var abs_tape(ad::Tape& t, ad::Var u) { return t.sqrt(t.square(u)); }

ad::Var max2_tape(ad::Tape& t, ad::Var a, ad::Var b) {
    // max(a,b) = (a + b + |a - b|) / 2
    return t.scale(t.add(t.add(a, b), abs_tape(t, t.sub(a, b))), 0.5);
}

ad::Var relu_tape(ad::Tape& t, ad::Var u) { return t.scale(t.add(u, abs_tape(t, u)), 0.5); }

}  // namespace

double fitness(const Problem& problem, double x, double y) {
    if (x < problem.box[0].lo || x > problem.box[0].hi || y < problem.box[1].lo || y > problem.box[1].hi)
        throw DomainError(problem.name + ": point outside the domain box");
    return problem.value(x, y);
}

Problem bumpy() {
    Problem p;
    p.name = "bumpy";
    p.box = {Interval{kBumpyLo, 10.0}, Interval{kBumpyLo, 10.0}};
    // Peak table from the source material; fitness at each position matches
    // the listed height within 0.005 (the positions themselves are grid
    // artifacts of the original plots, see the project notes).
    p.peaks = {{1.393, 0.006, 0.675},
               {0.031, 1.441, 0.47},
               {1.593, 0.471, 0.365},
               {0.475, 1.578, 0.274}};
    p.value = bumpy_value;
    p.value_on_tape = bumpy_tape;
    return p;
}

Problem stalagmite() {
    Problem p;
    p.name = "stalagmite";
    p.box = {Interval{0.0, 1.0}, Interval{0.0, 1.0}};
    p.peaks = {{kStalU1, kStalU1, 1.0},
               {kStalU2, kStalU1, 0.847173},
               {kStalU1, kStalU2, 0.847173}};
    p.value = stal_value;
    p.value_on_tape = stal_tape;
    return p;
}

Problem constrained_stalagmite(double rho) {
    Problem p = stalagmite();
    p.name = "constrained_stalagmite";
    // The global peak is excluded, so it leaves the registry.
    p.peaks = {{kStalU2, kStalU1, 0.847173}, {kStalU1, kStalU2, 0.847173}};
    const double cx = kStalU1, cy = kStalU1;
    p.value = [rho, cx, cy](double x, double y) {
        if (std::max(std::abs(x - cx), std::abs(y - cy)) <= rho) return 0.0;
        return stal_value(x, y);
    };
    // Smooth suppression for the training route: multiply by
    // exp(-relu(rho - Linf)^2 / tau). Outside the ball the factor is exactly 1.
    constexpr double tau = 1e-3;
    p.value_on_tape = [rho, cx, cy](ad::Tape& t, ad::Var x, ad::Var y) {
        ad::Var dist = max2_tape(t, abs_tape(t, t.sub(x, t.constant_scalar(cx))),
                                 abs_tape(t, t.sub(y, t.constant_scalar(cy))));
        ad::Var pen = relu_tape(t, t.sub(t.constant_scalar(rho), dist));
        ad::Var factor = t.exp(t.scale(t.square(pen), -1.0 / tau));
        return t.mul(stal_tape(t, x, y), factor);
    };
    return p;
}

Problem problem_by_name(const std::string& name, double rho) {
    if (name == "bumpy") return bumpy();
    if (name == "stalagmite") return stalagmite();
    if (name == "constrained_stalagmite") return constrained_stalagmite(rho);
    throw ConfigError("unknown problem: " + name);
}

std::vector<Peak> grid_oracle(const Problem& problem, double step) {
    if (step <= 0.0) throw StructuralError("grid_oracle: step must be positive");
    const auto axis_range = [&](const Interval& iv) {
        const long k0 = static_cast<long>(std::ceil(iv.lo / step - 1e-9));
        const long k1 = static_cast<long>(std::floor(iv.hi / step + 1e-9));
        return std::pair<long, long>{k0, k1};
    };
    const auto [kx0, kx1] = axis_range(problem.box[0]);
    const auto [ky0, ky1] = axis_range(problem.box[1]);
    const long nx = kx1 - kx0 + 1, ny = ky1 - ky0 + 1;
    if (nx < 10 || ny < 10) throw StructuralError("grid_oracle: step too coarse for the box");

    const auto& f = problem.value;
    std::vector<double> ys(static_cast<std::size_t>(ny));
    for (long j = 0; j < ny; ++j) ys[static_cast<std::size_t>(j)] = static_cast<double>(ky0 + j) * step;

    // Rolling three-row window; rows indexed by x.
    std::vector<std::vector<double>> rows(3, std::vector<double>(static_cast<std::size_t>(ny)));
    auto fill_row = [&](long i, std::vector<double>& row) {
        const double x = static_cast<double>(kx0 + i) * step;
        for (long j = 0; j < ny; ++j) row[static_cast<std::size_t>(j)] = f(x, ys[static_cast<std::size_t>(j)]);
    };

    std::vector<Peak> peaks;
    fill_row(0, rows[0]);
    if (nx > 1) fill_row(1, rows[1]);
    for (long i = 0; i < nx; ++i) {
        const std::vector<double>* below = (i > 0) ? &rows[(i - 1) % 3] : nullptr;
        const std::vector<double>& cur = rows[i % 3];
        const std::vector<double>* above = nullptr;
        if (i + 1 < nx) {
            if (i + 1 >= 2) fill_row(i + 1, rows[(i + 1) % 3]);
            above = &rows[(i + 1) % 3];
        }
        for (long j = 0; j < ny; ++j) {
            const double c = cur[static_cast<std::size_t>(j)];
            bool is_peak = true;
            for (int dj = -1; dj <= 1 && is_peak; ++dj) {
                const long jj = j + dj;
                if (jj < 0 || jj >= ny) continue;
                if (below && c <= (*below)[static_cast<std::size_t>(jj)]) is_peak = false;
                if (above && c <= (*above)[static_cast<std::size_t>(jj)]) is_peak = false;
                if (dj != 0 && c <= cur[static_cast<std::size_t>(jj)]) is_peak = false;
            }
            if (is_peak)
                peaks.push_back({static_cast<double>(kx0 + i) * step, ys[static_cast<std::size_t>(j)], c});
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.height != b.height) return a.height > b.height;
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });
    return peaks;
}

void write_peak_csv(std::ostream& out, const Problem& problem) {
    out << "name,x,y,height\n";
    char buf[128];
    for (const Peak& p : problem.peaks) {
        std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g\n", problem.name.c_str(), p.x, p.y, p.height);
        out << buf;
    }
}

}  // namespace epiga::bench
