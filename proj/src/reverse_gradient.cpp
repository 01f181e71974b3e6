#include <lbo/parallel.hpp>
#include <lbo/sensitivity.hpp>

#include <cmath>
#include <stdexcept>

namespace lbo {

SpectralCotangent SpectralCotangent::zeros(int n, int k)
{
    return {Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(n, k)};
}

SpectralCotangent hks_pullback(const EigenSystem& es, std::span<const double> times, const Eigen::MatrixXd& d_hks)
{
    const int k = es.retained();
    const Eigen::Index n = es.vectors.rows();
    if (d_hks.rows() != n || d_hks.cols() != static_cast<Eigen::Index>(times.size()))
        throw std::invalid_argument("HKS cotangent shape does not match vertices x times");
    SpectralCotangent ct = SpectralCotangent::zeros(static_cast<int>(n), k);
    for (int j = 0; j < k; ++j) {
        const auto phi = es.vector(j);
        const double lambda = es.value(j);
        Eigen::VectorXd weighted = Eigen::VectorXd::Zero(n); // sum_t G(:, t) exp(-t lambda)
        double dl = 0.0;
        for (size_t t = 0; t < times.size(); ++t) {
            const double e = std::exp(-times[t] * lambda);
            weighted += e * d_hks.col(t);
            dl += -times[t] * e * d_hks.col(t).dot(phi.cwiseProduct(phi));
        }
        ct.d_values(j) = dl;
        ct.d_vectors.col(j) = 2.0 * weighted.cwiseProduct(phi);
    }
    return ct;
}

OperatorCotangent spectral_pullback(const Mesh& mesh, const OperatorPair& ops, const EigenSystem& es,
                                    const SpectralCotangent& ct)
{
    const int k = es.retained();
    const int n = mesh.num_vertices();
    if (ct.d_values.size() != k) throw std::invalid_argument("eigenvalue cotangent size does not match retained pairs");
    const bool has_vectors = ct.d_vectors.size() > 0;
    if (has_vectors && (ct.d_vectors.rows() != n || ct.d_vectors.cols() != k))
        throw std::invalid_argument("eigenvector cotangent shape does not match the eigensystem");

    // psi_j = s phi - y and the mass coefficient per pair; contracted serially below.
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n, k);
    Eigen::MatrixXd mass_term = Eigen::MatrixXd::Zero(n, k);
    std::vector<char> active(k, 0);
    OperatorCotangent out;

    for (int j = 0; j < k; ++j) {
        const bool nonzero = ct.d_values(j) != 0.0 || (has_vectors && !ct.d_vectors.col(j).isZero(0.0));
        if (!nonzero) continue;
        if (es.is_degenerate(j)) {
            ++out.masked_pairs;
            continue;
        }
        active[j] = 1;
    }

    parallel_for(0, k, [&](int j) {
        if (!active[j]) return;
        const Eigen::VectorXd phi = es.vector(j);
        const double lambda = es.value(j);
        const double g_lambda = ct.d_values(j);
        const Eigen::VectorXd Aphi = ops.A.cwiseProduct(phi);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
        double beta = 0.0;
        if (has_vectors && !ct.d_vectors.col(j).isZero(0.0)) {
            const Eigen::VectorXd g = ct.d_vectors.col(j);
            beta = g.dot(phi);
            y = PinnedSolver(ops.W, ops.A, lambda, phi).solve(g - beta * Aphi);
        }
        const double s = g_lambda + y.dot(Aphi);
        psi.col(j) = s * phi - y;
        mass_term.col(j) = -lambda * psi.col(j).cwiseProduct(phi) - 0.5 * beta * phi.cwiseProduct(phi);
    });

    out.edge_weight.assign(mesh.num_edges(), 0.0);
    out.mass = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < k; ++j) {
        if (!active[j]) continue;
        const auto phi = es.vector(j);
        for (int e = 0; e < mesh.num_edges(); ++e) {
            const auto [a, b] = mesh.edge(e);
            out.edge_weight[e] += (phi(a) - phi(b)) * (psi(a, j) - psi(b, j));
        }
        out.mass += mass_term.col(j);
    }
    return out;
}

GradientBundle reverse_gradient(const Mesh& mesh, const ModifiedOperator& op, const OperatorParams& params,
                                std::span<const FaceFrame> frames, const EigenSystem& es,
                                const SpectralCotangent& ct, bool straight_through)
{
    GradientBundle out;
    out.op = spectral_pullback(mesh, op.ops, es, ct);
    out.params = operator_pullback(mesh, op, params, frames, out.op, straight_through);
    return out;
}

} // namespace lbo
