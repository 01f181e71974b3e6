#include <lbo/errors.hpp>
#include <lbo/sensitivity.hpp>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <optional>

namespace lbo {

namespace {

int pivot_index(const Eigen::VectorXd& phi)
{
    Eigen::Index m = 0;
    for (Eigen::Index i = 1; i < phi.size(); ++i)
        if (std::abs(phi(i)) > std::abs(phi(m))) m = i;
    return static_cast<int>(m);
}

} // namespace

struct PinnedSolver::Impl {
    SparseSymmetric M;
    Eigen::SimplicialLDLT<SparseSymmetric> ldlt;
    bool ldlt_ok = false;
    mutable std::optional<Eigen::SparseLU<SparseSymmetric>> lu;

    Eigen::VectorXd lu_solve(const Eigen::VectorXd& b) const
    {
        if (!lu) {
            lu.emplace();
            lu->analyzePattern(M);
            lu->factorize(M);
            if (lu->info() != Eigen::Success) throw NumericalError("pinned Nelson system is singular");
        }
        return lu->solve(b);
    }
};

PinnedSolver::PinnedSolver(const SparseSymmetric& W, const Eigen::VectorXd& A, double lambda, const Eigen::VectorXd& phi)
    : m_impl(std::make_unique<Impl>()), m_pin(pivot_index(phi))
{
    const int n = static_cast<int>(A.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(W.nonZeros() + 1);
    for (int col = 0; col < W.outerSize(); ++col) {
        for (SparseSymmetric::InnerIterator it(W, col); it; ++it) {
            const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            if (r == m_pin || c == m_pin) continue;
            double v = -it.value();
            if (r == c) v -= lambda * A(r);
            trip.emplace_back(r, c, v);
        }
    }
    trip.emplace_back(m_pin, m_pin, 1.0);
    m_impl->M.resize(n, n);
    m_impl->M.setFromTriplets(trip.begin(), trip.end());
    m_impl->M.makeCompressed();
    m_impl->ldlt.compute(m_impl->M);
    m_impl->ldlt_ok = m_impl->ldlt.info() == Eigen::Success;
}

PinnedSolver::~PinnedSolver() = default;
PinnedSolver::PinnedSolver(PinnedSolver&&) noexcept = default;
PinnedSolver& PinnedSolver::operator=(PinnedSolver&&) noexcept = default;

bool PinnedSolver::used_fallback() const { return m_impl->lu.has_value(); }

Eigen::VectorXd PinnedSolver::solve(Eigen::VectorXd rhs) const
{
    rhs(m_pin) = 0.0;
    const auto& M = m_impl->M;
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());

    Eigen::VectorXd y;
    if (m_impl->ldlt_ok && !m_impl->lu) {
        y = m_impl->ldlt.solve(rhs);
        y += m_impl->ldlt.solve(rhs - M * y); // one step of refinement
        const double res = (M * y - rhs).norm();
        if (!y.allFinite() || res > 1e-8 * bnorm) y = m_impl->lu_solve(rhs);
    } else {
        y = m_impl->lu_solve(rhs);
    }
    if (m_impl->lu) y += m_impl->lu_solve(rhs - M * y);
    if (!y.allFinite()) throw NumericalError("pinned Nelson solve produced non-finite values");
    y(m_pin) = 0.0;
    return y;
}

NelsonSolver::NelsonSolver(const SparseSymmetric& W, const Eigen::VectorXd& A, double lambda, Eigen::VectorXd phi)
    : m_A(A), m_lambda(lambda), m_phi(std::move(phi)), m_pinned(W, A, lambda, m_phi)
{
}

PairDerivative NelsonSolver::solve(const Mesh& mesh, const ElementDerivative& d, NelsonVariant variant) const
{
    const bool use_k = variant != NelsonVariant::MassOnly;
    const bool use_a = variant != NelsonVariant::StiffnessOnly;
    const int n = static_cast<int>(m_phi.size());

    Eigen::VectorXd dKphi = use_k ? d.apply_stiffness(mesh, m_phi) : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd dAphi = Eigen::VectorXd::Zero(n);
    if (use_a)
        for (const auto& [v, a] : d.dA) dAphi(v) += a * m_phi(v);

    PairDerivative out;
    out.d_value = m_phi.dot(dKphi) - m_lambda * m_phi.dot(dAphi);
    const Eigen::VectorXd rhs = -(dKphi - m_lambda * dAphi - out.d_value * m_A.cwiseProduct(m_phi));
    Eigen::VectorXd mu = m_pinned.solve(rhs);
    const double c = -m_phi.dot(m_A.cwiseProduct(mu)) - 0.5 * m_phi.dot(dAphi);
    out.d_vector = mu + c * m_phi;
    return out;
}

PairDerivative nelson_forward(const Mesh& mesh, const SparseSymmetric& W, const Eigen::VectorXd& A, double lambda,
                              const Eigen::VectorXd& phi, const ElementDerivative& d, NelsonVariant variant)
{
    return NelsonSolver(W, A, lambda, phi).solve(mesh, d, variant);
}

} // namespace lbo
