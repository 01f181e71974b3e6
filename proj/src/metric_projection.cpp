#include <lbo/errors.hpp>
#include <lbo/metric_projection.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lbo {

double default_metric_margin(std::span<const double> lengths)
{
    const double mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(lengths.size());
    return 1e-4 * mean;
}

double min_triangle_margin(const Mesh& mesh, std::span<const double> d)
{
    double worst = std::numeric_limits<double>::infinity();
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto& fe = mesh.face_edges(f);
        for (int r = 0; r < 3; ++r)
            worst = std::min(worst, d[fe[(r + 1) % 3]] + d[fe[(r + 2) % 3]] - d[fe[r]]);
    }
    return worst;
}

MetricFixResult fix_metric(const Mesh& mesh, std::span<const double> target, double epsilon, int max_sweeps)
{
    if (static_cast<int>(target.size()) != mesh.num_edges())
        throw std::invalid_argument("target length count does not match edge count");
    for (size_t e = 0; e < target.size(); ++e) {
        if (!(target[e] > 0.0)) throw std::invalid_argument("target length of edge " + std::to_string(e) + " is not positive");
    }

    MetricFixResult out;
    out.lengths.assign(target.begin(), target.end());
    out.edge_modified.assign(target.size(), 0);
    out.epsilon = epsilon;
    auto& d = out.lengths;

    // Exact updates can trade ulps between neighboring faces forever. After a
    // few sweeps, aim slightly above epsilon so the remaining repairs stick.
    const double overshoot = 1e-12 * *std::max_element(d.begin(), d.end());
    constexpr int exact_sweeps = 8;

    for (out.sweeps = 0; out.sweeps < max_sweeps; ++out.sweeps) {
        const double aim = epsilon + (out.sweeps < exact_sweeps ? 0.0 : overshoot);
        bool changed = false;
        for (int f = 0; f < mesh.num_faces(); ++f) {
            const auto& fe = mesh.face_edges(f);
            for (int r = 0; r < 3; ++r) {
                const int eij = fe[r], eik = fe[(r + 1) % 3], ejk = fe[(r + 2) % 3];
                const double margin = d[eik] + d[ejk] - d[eij];
                if (margin >= epsilon) continue;
                const double c = (d[eij] - d[eik] - d[ejk] + aim) / 3.0;
                d[eij] -= c;
                d[eik] += c;
                d[ejk] += c;
                // Rounding can leave the margin a few ulps short.
                while (d[eik] + d[ejk] - d[eij] < epsilon) d[eij] = std::nextafter(d[eij], 0.0);
                out.tape.push_back({f, {eij, eik, ejk}});
                out.edge_modified[eij] = out.edge_modified[eik] = out.edge_modified[ejk] = 1;
                changed = true;
            }
        }
        if (!changed) return out;
    }

    const double worst = min_triangle_margin(mesh, d);
    if (worst >= epsilon) return out;
    std::ostringstream msg;
    msg << "metric projection did not converge after " << max_sweeps << " sweeps; worst margin "
        << worst << " (required " << epsilon << ")";
    throw NumericalError(msg.str());
}

std::vector<double> fix_metric_backward(const MetricFixResult& fix, std::span<const double> grad_lengths)
{
    std::vector<double> g(grad_lengths.begin(), grad_lengths.end());
    // out = in + c * (-1, 1, 1) with c = (in0 - in1 - in2 + eps) / 3
    for (auto it = fix.tape.rbegin(); it != fix.tape.rend(); ++it) {
        const auto& e = it->edges;
        const double gc = -g[e[0]] + g[e[1]] + g[e[2]];
        g[e[0]] += gc / 3.0;
        g[e[1]] -= gc / 3.0;
        g[e[2]] -= gc / 3.0;
    }
    return g;
}

std::vector<double> fix_metric_forward(const MetricFixResult& fix, std::span<const double> tangent)
{
    std::vector<double> t(tangent.begin(), tangent.end());
    for (const auto& step : fix.tape) {
        const auto& e = step.edges;
        const double c = (t[e[0]] - t[e[1]] - t[e[2]]) / 3.0;
        t[e[0]] -= c;
        t[e[1]] += c;
        t[e[2]] += c;
    }
    return t;
}

} // namespace lbo
