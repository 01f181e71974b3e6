#include <lbo/losses.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lbo {

LossValue softmax_cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels, std::span<const int> rows)
{
    if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
        throw std::invalid_argument("one label per row required");
    std::vector<int> all;
    if (rows.empty()) {
        all.resize(logits.rows());
        std::iota(all.begin(), all.end(), 0);
        rows = all;
    }
    LossValue out;
    out.grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (int r : rows) {
        const int y = labels[r];
        if (y < 0 || y >= logits.cols()) throw std::invalid_argument("label out of range");
        const double mx = logits.row(r).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
        const double z = e.sum();
        out.value += (std::log(z) + mx - logits(r, y)) * inv;
        out.grad.row(r) = e / z * inv;
        out.grad(r, y) -= inv;
    }
    return out;
}

TripletValue triplet_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& p, const Eigen::VectorXd& n, double margin)
{
    TripletValue out;
    out.d_anchor = Eigen::VectorXd::Zero(a.size());
    out.d_positive = Eigen::VectorXd::Zero(a.size());
    out.d_negative = Eigen::VectorXd::Zero(a.size());
    const double dp = (a - p).norm(), dn = (a - n).norm();
    const double v = dp - dn + margin;
    if (v <= 0.0) return out;
    out.value = v;
    if (dp > 0.0) {
        const Eigen::VectorXd u = (a - p) / dp;
        out.d_anchor += u;
        out.d_positive -= u;
    }
    if (dn > 0.0) {
        const Eigen::VectorXd u = (a - n) / dn;
        out.d_anchor -= u;
        out.d_negative += u;
    }
    return out;
}

AlignmentValue spectral_alignment(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("eigenvalue bands differ in length");
    AlignmentValue out;
    const Eigen::VectorXd d = a - b;
    out.value = d.squaredNorm();
    out.d_a = 2.0 * d;
    out.d_b = -2.0 * d;
    return out;
}

LossValue descriptor_distance(const Eigen::MatrixXd& D, const Eigen::MatrixXd& T)
{
    if (D.rows() != T.rows() || D.cols() != T.cols()) throw std::invalid_argument("descriptor shapes differ");
    const double inv = 1.0 / static_cast<double>(D.rows());
    return {(D - T).squaredNorm() * inv, 2.0 * inv * (D - T)};
}

Eigen::RowVectorXd average_pool(const Descriptor& d, std::span<const double> weights)
{
    if (weights.empty()) return d.values.colwise().mean();
    if (static_cast<Eigen::Index>(weights.size()) != d.values.rows())
        throw std::invalid_argument("one pooling weight per vertex required");
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return (w.transpose() * d.values) / w.sum();
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& P)
{
    Eigen::MatrixXd D(P.rows(), P.rows());
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < P.rows(); ++j) D(i, j) = (P.row(i) - P.row(j)).norm();
    return D;
}

} // namespace lbo
