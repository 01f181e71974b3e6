#pragma once

#include <lbo/assembly.hpp>
#include <lbo/eigensolver.hpp>

#include <Eigen/Core>

#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace lbo {

enum class ParamFamily { EdgeScale, A1, A2, Theta, VertexWeight };

struct ParamId {
    ParamFamily family = ParamFamily::EdgeScale;
    int index = 0;
};

/// Derivative of the operator pair with respect to one scalar. Stored sparsely:
/// off-diagonal stiffness changes per edge (the diagonal follows as minus the
/// row sum) and mass changes per vertex.
struct ElementDerivative {
    std::vector<std::pair<int, double>> dW; ///< (edge, d W(i, j))
    std::vector<std::pair<int, double>> dA; ///< (vertex, d A_ii)
    bool clamped = false;   ///< touches a vertex whose area is clamped
    bool projected = false; ///< passes through a metric-projection update

    SparseSymmetric stiffness(const Mesh& mesh) const;
    Eigen::VectorXd mass(int num_vertices) const;
    /// x^T dK y with K = -W.
    double stiffness_form(const Mesh& mesh, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    /// dK x.
    Eigen::VectorXd apply_stiffness(const Mesh& mesh, const Eigen::VectorXd& x) const;
    /// Sums duplicate entries and drops exact zeros.
    void compress();
};

/// +1 or -1: sign of (e_ki x e_kj) . (e_kj x v); a zero product counts as +1.
int dot_sign(const Eigen::Vector3d& e_ki, const Eigen::Vector3d& e_kj, const Eigen::Vector3d& v);

// Derivatives with respect to one effective (post-projection) edge length.
ElementDerivative mass_metric_derivative(const Mesh& mesh, const GeometryCache& geom, int edge,
                                         std::span<const double> vertex_log_weight = {});
ElementDerivative stiffness_metric_derivative_iso(const Mesh& mesh, const GeometryCache& geom, int edge);
ElementDerivative stiffness_metric_derivative_aniso(const Mesh& mesh, const GeometryCache& geom,
                                                    std::span<const FaceFrame> frames,
                                                    std::span<const FaceAniso> aniso, int edge);

/// d W / d a1 or d a2 of one face (`which` is A1 or A2).
ElementDerivative stiffness_aniso_derivative(const Mesh& mesh, const GeometryCache& geom,
                                             std::span<const FaceFrame> frames, std::span<const FaceAniso> aniso,
                                             int face, ParamFamily which);
/// d W / d theta of one face.
ElementDerivative stiffness_rotation_derivative(const Mesh& mesh, const GeometryCache& geom,
                                                std::span<const FaceFrame> frames,
                                                std::span<const FaceAniso> aniso, int face);
/// d A / d vertex_log_weight[vertex].
ElementDerivative mass_weight_derivative(const Eigen::VectorXd& A, int vertex);

/// Total derivative of the modified operator with respect to a raw parameter,
/// including the metric projection (or bypassing it when `straight_through`).
ElementDerivative parameter_derivative(const Mesh& mesh, const ModifiedOperator& op, const OperatorParams& params,
                                       std::span<const FaceFrame> frames, ParamId id, bool straight_through = false);

enum class NelsonVariant { Full, StiffnessOnly, MassOnly };

struct PairDerivative {
    double d_value = 0.0;
    Eigen::VectorXd d_vector;
};

/// Solves (K - lambda A) y = b restricted to y_m = 0, where m is the index of
/// the largest |phi| (lowest index on ties).
class PinnedSolver {
public:
    PinnedSolver(const SparseSymmetric& W, const Eigen::VectorXd& A, double lambda, const Eigen::VectorXd& phi);
    ~PinnedSolver();
    PinnedSolver(PinnedSolver&&) noexcept;
    PinnedSolver& operator=(PinnedSolver&&) noexcept;

    Eigen::VectorXd solve(Eigen::VectorXd rhs) const;
    int pinned_index() const { return m_pin; }
    bool used_fallback() const;

private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
    int m_pin = 0;
};

/// Forward (Nelson) derivative of one eigenpair. Caches the pinned
/// factorization so several parameters can be swept cheaply.
class NelsonSolver {
public:
    NelsonSolver(const SparseSymmetric& W, const Eigen::VectorXd& A, double lambda, Eigen::VectorXd phi);

    PairDerivative solve(const Mesh& mesh, const ElementDerivative& d, NelsonVariant variant = NelsonVariant::Full) const;

private:
    Eigen::VectorXd m_A;
    double m_lambda;
    Eigen::VectorXd m_phi;
    PinnedSolver m_pinned;
};

PairDerivative nelson_forward(const Mesh& mesh, const SparseSymmetric& W, const Eigen::VectorXd& A, double lambda,
                              const Eigen::VectorXd& phi, const ElementDerivative& d,
                              NelsonVariant variant = NelsonVariant::Full);

/// Loss cotangents with respect to the retained spectrum (index j = retained pair j).
struct SpectralCotangent {
    Eigen::VectorXd d_values;  ///< k
    Eigen::MatrixXd d_vectors; ///< n x k; may be empty when only eigenvalues matter

    static SpectralCotangent zeros(int n, int k);
};

/// Pulls dL/dh (vertices x times) back onto the retained eigenpairs.
SpectralCotangent hks_pullback(const EigenSystem& es, std::span<const double> times, const Eigen::MatrixXd& d_hks);

/// Cotangents with respect to the operator entries.
struct OperatorCotangent {
    std::vector<double> edge_weight; ///< dL / d W(i, j) per edge
    Eigen::VectorXd mass;            ///< dL / d A_ii
    int masked_pairs = 0;            ///< degenerate pairs whose contribution was dropped
};

/// One pinned solve per eigenpair with a nonzero vector cotangent.
OperatorCotangent spectral_pullback(const Mesh& mesh, const OperatorPair& ops, const EigenSystem& es,
                                    const SpectralCotangent& ct);

/// Gradients with respect to the raw operator parameters.
struct ParamGradient {
    std::vector<double> edge_log_scale;
    std::vector<double> a1;
    std::vector<double> a2;
    std::vector<double> theta;
    std::vector<double> vertex_log_weight;

    static ParamGradient zeros(const Mesh& mesh);
};

/// Pulls operator cotangents back through assembly, geometry and the metric
/// projection (or straight through it).
ParamGradient operator_pullback(const Mesh& mesh, const ModifiedOperator& op, const OperatorParams& params,
                                std::span<const FaceFrame> frames, const OperatorCotangent& ct,
                                bool straight_through = false);

struct GradientBundle {
    ParamGradient params;
    OperatorCotangent op;
};

GradientBundle reverse_gradient(const Mesh& mesh, const ModifiedOperator& op, const OperatorParams& params,
                                std::span<const FaceFrame> frames, const EigenSystem& es,
                                const SpectralCotangent& ct, bool straight_through = false);

/// Global-norm clipping applied separately to each parameter family.
void clip_gradients(ParamGradient& g, double max_norm);

} // namespace lbo
