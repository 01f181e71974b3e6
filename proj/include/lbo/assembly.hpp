#pragma once

#include <lbo/curvature.hpp>
#include <lbo/geometry.hpp>
#include <lbo/mesh.hpp>
#include <lbo/metric_projection.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <span>
#include <vector>

namespace lbo {

/// Per-face anisotropy: conductivity a1 along the (rotated) maximum-curvature
/// direction, a2 across it, rotation theta (radians, period pi).
struct FaceAniso {
    double a1 = 1.0;
    double a2 = 1.0;
    double theta = 0.0;
};

/// Everything a learner may modify. The identity element (default-constructed
/// entries) reproduces the standard cotangent operator.
struct OperatorParams {
    std::vector<double> edge_log_scale;    ///< effective length = length * exp(.)
    std::vector<FaceAniso> face_aniso;
    std::vector<double> vertex_log_weight; ///< mass = voronoi * exp(.)

    static OperatorParams identity(const Mesh& mesh);
    /// Throws std::invalid_argument on size mismatch or non-positive a1/a2.
    void validate(const Mesh& mesh) const;
};

/// Column-major sparse matrix with full (both triangles) symmetric storage.
/// The pattern is vertex adjacency plus the diagonal, independent of values.
using SparseSymmetric = Eigen::SparseMatrix<double>;

/// Stiffness W (positive off-diagonals, diagonal = -row sum) and lumped mass.
struct OperatorPair {
    SparseSymmetric W;
    Eigen::VectorXd A;
    std::vector<double> edge_weight; ///< W(i, j) per mesh edge
};

/// Builds W from per-edge off-diagonal weights with the adjacency pattern.
SparseSymmetric stiffness_from_edge_weights(const Mesh& mesh, std::span<const double> edge_weight);

/// Cotangent weights (cot a1 + cot a2) / 2 per edge; one term on boundary edges.
std::vector<double> cotangent_edge_weights(const Mesh& mesh, const GeometryCache& geom);
SparseSymmetric assemble_stiffness(const Mesh& mesh, const GeometryCache& geom);

/// exp(vertex_log_weight) * voronoi (clamped). An empty weight span means zeros.
Eigen::VectorXd assemble_mass(const GeometryCache& geom, std::span<const double> vertex_log_weight = {});

/// 3x3 in-plane conductivity a1 u u^T + a2 w w^T, where (u, w) is the frame
/// (v_max, v_min) rotated by theta about the face normal.
Eigen::Matrix3d conductivity_tensor(const FaceFrame& frame, const FaceAniso& aniso);

/// Per-face anisotropic contribution to the three edge weights (index = corner
/// opposite the edge) plus its derivatives. Evaluated on the intrinsic layout of
/// the triangle, with the frame placed at `frame_angle` from the first edge.
struct AnisoFaceTerms {
    std::array<double, 3> weight{};
    std::array<std::array<double, 3>, 3> d_length{}; ///< [corner][length b]
    std::array<double, 3> d_a1{};
    std::array<double, 3> d_a2{};
    std::array<double, 3> d_theta{};
};
AnisoFaceTerms aniso_face_terms(const Triangle& tri, double frame_angle, const FaceAniso& aniso);

std::vector<double> anisotropic_edge_weights(const Mesh& mesh, const GeometryCache& geom,
                                             std::span<const FaceFrame> frames,
                                             std::span<const FaceAniso> aniso);
SparseSymmetric assemble_anisotropic_stiffness(const Mesh& mesh, const GeometryCache& geom,
                                               std::span<const FaceFrame> frames,
                                               std::span<const FaceAniso> aniso);

enum class OperatorMode { Isotropic, Anisotropic };

/// Result of the full forward composition, retaining the intermediates that
/// the gradient code needs.
struct ModifiedOperator {
    OperatorMode mode = OperatorMode::Isotropic;
    OperatorPair ops;
    GeometryCache geom;
    std::vector<double> base_length;   ///< embedding lengths
    std::vector<double> target_length; ///< base_length * exp(edge_log_scale)
    MetricFixResult fix;               ///< projection of target_length
};

struct OperatorOptions {
    double metric_margin = -1.0; ///< negative: default_metric_margin(base lengths)
    int metric_max_sweeps = 100;
};

/// fix_metric -> geometry -> stiffness (isotropic or anisotropic) and mass.
/// Anisotropic mode requires one frame per face.
ModifiedOperator modified_operator(const Mesh& mesh, const OperatorParams& params, OperatorMode mode,
                                   std::span<const FaceFrame> frames = {}, const OperatorOptions& options = {});

/// "row col value" lines, 0-based, every stored entry.
void write_triplets(const SparseSymmetric& M, std::ostream& out);
/// Dense comma-separated rows; intended for small debugging meshes.
void write_dense_csv(const SparseSymmetric& M, std::ostream& out);

} // namespace lbo
