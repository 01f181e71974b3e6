#pragma once

#include <lbo/descriptors.hpp>

#include <Eigen/Core>

#include <span>
#include <vector>

namespace lbo {

/// Scalar loss with the gradient w.r.t. its (matrix) input.
struct LossValue {
    double value = 0.0;
    Eigen::MatrixXd grad;
};

/// Mean softmax cross-entropy over `rows` (all rows when empty).
LossValue softmax_cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels,
                                std::span<const int> rows = {});

struct TripletValue {
    double value = 0.0;
    Eigen::VectorXd d_anchor, d_positive, d_negative;
};

/// max(0, |a - p| - |a - n| + margin). The distance gradient is taken as zero
/// where a distance vanishes.
TripletValue triplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                          const Eigen::VectorXd& negative, double margin);

struct AlignmentValue {
    double value = 0.0;
    Eigen::VectorXd d_a; ///< dL/d lambda_a
    Eigen::VectorXd d_b; ///< dL/d lambda_b
};

/// sum_k (a_k - b_k)^2 over equally sized eigenvalue bands.
AlignmentValue spectral_alignment(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// |D - T|_F^2 / rows.
LossValue descriptor_distance(const Eigen::MatrixXd& D, const Eigen::MatrixXd& target);

/// Per-channel mean over vertices, optionally weighted (weights need not be
/// normalized; empty means uniform).
Eigen::RowVectorXd average_pool(const Descriptor& d, std::span<const double> weights = {});

/// Pairwise Euclidean distances between pooled rows.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& pooled);

} // namespace lbo
