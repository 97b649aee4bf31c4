#include "pulse/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pulse {

namespace {

void clamp(std::vector<double>& x, const std::vector<double>& lo,
           const std::vector<double>& hi) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& lower,
                          const std::vector<double>& upper, const SimplexOptions& options) {
    const std::size_t n = x0.size();
    if (lower.size() != n || upper.size() != n)
        throw std::invalid_argument("bound dimensions do not match the start point");
    for (std::size_t i = 0; i < n; ++i)
        if (!(lower[i] <= upper[i])) throw std::invalid_argument("lower bound above upper");
    clamp(x0, lower, upper);

    std::vector<std::vector<double>> vertices;
    vertices.push_back(x0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v = x0;
        double step = options.initial_step * std::max(1.0, std::fabs(v[i]));
        if (v[i] + step > upper[i] && v[i] - step >= lower[i]) step = -step;
        v[i] += step;
        clamp(v, lower, upper);
        vertices.push_back(v);
    }
    std::vector<double> values(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) values[i] = f(vertices[i]);

    SimplexResult result;
    int iter = 0;
    std::vector<std::size_t> order(vertices.size());
    while (iter < options.max_iterations) {
        ++iter;
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::size_t best = order.front();
        std::size_t worst = order.back();
        std::size_t second_worst = order[order.size() - 2];

        // Simplex diameter in parameter space.
        double diameter = 0.0;
        for (std::size_t i = 1; i < order.size(); ++i)
            for (std::size_t d = 0; d < n; ++d)
                diameter = std::max(diameter,
                                    std::fabs(vertices[order[i]][d] - vertices[best][d]));
        if (diameter < options.tolerance) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i + 1 < order.size(); ++i)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += vertices[order[i]][d];
        for (double& c : centroid) c /= static_cast<double>(order.size() - 1);

        auto blend = [&](double coeff) {
            std::vector<double> x(n);
            for (std::size_t d = 0; d < n; ++d)
                x[d] = centroid[d] + coeff * (centroid[d] - vertices[worst][d]);
            clamp(x, lower, upper);
            return x;
        };

        std::vector<double> reflected = blend(1.0);
        double fr = f(reflected);
        if (fr < values[best]) {
            std::vector<double> expanded = blend(2.0);
            double fe = f(expanded);
            if (fe < fr) {
                vertices[worst] = std::move(expanded);
                values[worst] = fe;
            } else {
                vertices[worst] = std::move(reflected);
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second_worst]) {
            vertices[worst] = std::move(reflected);
            values[worst] = fr;
            continue;
        }
        std::vector<double> contracted = blend(fr < values[worst] ? 0.5 : -0.5);
        double fc = f(contracted);
        if (fc < std::min(fr, values[worst])) {
            vertices[worst] = std::move(contracted);
            values[worst] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i < order.size(); ++i) {
            std::size_t v = order[i];
            for (std::size_t d = 0; d < n; ++d)
                vertices[v][d] = 0.5 * (vertices[v][d] + vertices[best][d]);
            clamp(vertices[v], lower, upper);
            values[v] = f(vertices[v]);
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    result.x = vertices[best];
    result.value = values[best];
    result.iterations = iter;
    return result;
}

}  // namespace pulse
