#pragma once

#include <lbo/mesh.hpp>

#include <array>
#include <span>
#include <vector>

namespace lbo {

/// One applied triangle-fixing update: `edges[0]` was too long relative to
/// `edges[1] + edges[2]`; it shrank by c and the others grew by c, where
/// c = (d0 - d1 - d2 + epsilon) / 3. Late sweeps add 1e-12 * max length to
/// epsilon so that rounding cannot undo a repair.
struct MetricFixStep {
    int face = -1;
    std::array<int, 3> edges{};
};

struct MetricFixResult {
    std::vector<double> lengths;
    std::vector<MetricFixStep> tape; ///< updates in application order
    std::vector<char> edge_modified;
    int sweeps = 0;
    double epsilon = 0.0;

    bool modified() const { return !tape.empty(); }
};

/// Default margin: 1e-4 times the mean of `lengths`.
double default_metric_margin(std::span<const double> lengths);

/// Projects per-edge target lengths onto lengths satisfying
/// d_ik + d_jk - d_ij >= epsilon for every rotation of every face, by cyclic
/// triangle-fixing sweeps over faces in index order. Inputs that already
/// satisfy the margin are returned unchanged. Throws NumericalError (with the
/// worst remaining violation) after `max_sweeps`.
MetricFixResult fix_metric(const Mesh& mesh, std::span<const double> target, double epsilon,
                           int max_sweeps = 100);

/// Vector-Jacobian product of fix_metric: maps dL/d(output lengths) to
/// dL/d(target lengths) by replaying the recorded updates in reverse.
std::vector<double> fix_metric_backward(const MetricFixResult& fix, std::span<const double> grad_lengths);

/// Jacobian-vector product of fix_metric: maps a perturbation of the target
/// lengths to the perturbation of the output lengths.
std::vector<double> fix_metric_forward(const MetricFixResult& fix, std::span<const double> tangent);

/// Smallest margin d_ik + d_jk - d_ij over all face rotations.
double min_triangle_margin(const Mesh& mesh, std::span<const double> lengths);

} // namespace lbo
