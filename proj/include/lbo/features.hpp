#pragma once

#include <lbo/curvature.hpp>
#include <lbo/mesh.hpp>

#include <Eigen/Core>

namespace lbo {

enum class ElementKind { Vertex, Edge, Face };

/// Per-element feature rows with columns (H, K, S, C): mean curvature,
/// Gaussian curvature, shape index and curvedness.
struct FeatureField {
    ElementKind kind = ElementKind::Vertex;
    Eigen::MatrixXd values;
};

struct IntrinsicFeatures {
    FeatureField vertex_raw; ///< before standardization
    FeatureField vertex;     ///< zero mean, unit variance per column over the mesh
    FeatureField edge;       ///< mean of the two endpoint rows of `vertex`
    FeatureField face;       ///< mean of the three corner rows of `vertex`
};

/// Koenderink shape index for kappa1 >= kappa2, in [-1, 1]. Umbilics take the
/// limiting value (-1 convex, +1 concave); flat points (both below `flat_tol`
/// in magnitude) map to 0.
double shape_index(double kappa1, double kappa2, double flat_tol);
double curvedness(double kappa1, double kappa2);

IntrinsicFeatures intrinsic_features(const Mesh& mesh, const CurvatureField& curvature);
IntrinsicFeatures intrinsic_features(const Mesh& mesh);

/// Element coordinates used for neighborhoods: vertex positions, edge
/// midpoints, face centroids.
Eigen::MatrixXd element_coordinates(const Mesh& mesh, ElementKind kind);

} // namespace lbo
