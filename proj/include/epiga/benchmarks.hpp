#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "epiga/tape.hpp"

namespace epiga::bench {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

struct Peak {
    double x = 0.0;
    double y = 0.0;
    double height = 0.0;
};

// A 2-D maximization benchmark: a domain box, the objective in two routes
// (plain doubles for evaluation/reporting, tape expression for training), and
// a registry of known peaks. fitness at a registered position matches the
// registered height within 0.005.
struct Problem {
    std::string name;
    std::array<Interval, 2> box;
    std::vector<Peak> peaks;
    std::function<double(double, double)> value;
    std::function<ad::Var(ad::Tape&, ad::Var, ad::Var)> value_on_tape;
};

// Domain-checked evaluation (the hard route).
double fitness(const Problem& problem, double x, double y);

// sin^2(x-y) sin^2(x+y) / sqrt(x^2 + 2y^2); half-open (0,10]^2 handled as the
// box [1e-6, 10]^2 to avoid the singular origin.
Problem bumpy();

// Product of four factors on [0,1]^2: [sin(5.1 pi u + 0.5)]^6 times a
// Gaussian-like envelope centred at 0.0667, per axis.
Problem stalagmite();

// STALAGMITE with the global peak suppressed: evaluation returns 0 inside the
// L-inf ball of radius rho around the global maximizer; the training route
// multiplies by a smooth suppression factor instead.
Problem constrained_stalagmite(double rho = 0.1);

Problem problem_by_name(const std::string& name, double rho = 0.1);

// Exhaustive evaluation on the regular grid of multiples of `step` inside the
// box. Returns grid points strictly greater than all existing neighbors
// (points on the grid edge compare against the neighbors they have), sorted
// by height descending, then by x, then y.
std::vector<Peak> grid_oracle(const Problem& problem, double step);

// Registry export: header then one `name,x,y,height` row per peak.
void write_peak_csv(std::ostream& out, const Problem& problem);

}  // namespace epiga::bench
