#pragma once

#include <lbo/mesh.hpp>

#include <Eigen/Core>

#include <vector>

namespace lbo {

/// Principal-curvature frame of a face. `v_max` is the principal direction with
/// the larger absolute curvature; `v_min = normal x v_max`. `angle` is the
/// counterclockwise angle (about `normal`) from the face's first edge
/// (corner 0 -> corner 1) to `v_max`, which lets the frame be laid out on an
/// intrinsic chart of the triangle.
struct FaceFrame {
    Eigen::Vector3d v_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d v_max = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();
    double kappa_min = 0.0; ///< curvature along v_min, |kappa_min| <= |kappa_max|
    double kappa_max = 0.0; ///< curvature along v_max
    double angle = 0.0;
};

struct CurvatureField {
    std::vector<FaceFrame> faces;
    /// Per-vertex principal curvatures (kappa1 >= kappa2). Positive on convex
    /// regions with outward normals.
    std::vector<Eigen::Vector2d> vertex_curvatures;
    std::vector<Eigen::Vector3d> vertex_normals;
};

/// Curvature tensors from normal variation along face edges, averaged to
/// vertices and then back to faces. Throws MeshError(IsolatedVertex).
CurvatureField curvature_frames(const Mesh& mesh);

} // namespace lbo
