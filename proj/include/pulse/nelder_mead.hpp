#pragma once

#include <functional>
#include <vector>

namespace pulse {

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct SimplexOptions {
    int max_iterations = 10000;
    double tolerance = 1e-8;  // simplex diameter convergence threshold
    double initial_step = 0.05;
};

// Nelder-Mead descent with box constraints handled by projection: every
// candidate vertex is clamped into [lower, upper] before evaluation. The
// initial point is always a vertex, so the result never exceeds f(x0).
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& lower,
                          const std::vector<double>& upper,
                          const SimplexOptions& options = {});

}  // namespace pulse
