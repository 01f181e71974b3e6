#pragma once

#include <lbo/assembly.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace lbo {

struct EigenOptions {
    int k = 64;                 ///< retained pairs
    int skip = 1;               ///< smallest pairs computed but not retained
    double tolerance = 1e-10;   ///< target for ||K phi - lambda A phi||_inf / max(1, lambda)
    double accept = 1e-8;       ///< residual still accepted once restarts run out or stall
    int max_restarts = 300;
    int block_size = 8;         ///< must be at least the largest eigenvalue multiplicity
    std::uint64_t seed = 0x5eed;
    double degeneracy_gap = 1e-6;
    int dense_threshold = 200;  ///< dense solve at or below max(this, 3 (k + skip + 1)) rows
};

/// Smallest generalized eigenpairs of K phi = lambda A phi with K = -W.
/// Columns of `vectors` are A-orthonormal; the largest-magnitude entry of
/// each column is positive.
struct EigenSystem {
    Eigen::VectorXd values;       ///< ascending, skip + k entries
    Eigen::MatrixXd vectors;      ///< n x (skip + k)
    int skip = 0;
    std::vector<char> degenerate; ///< relative gap to a neighbor below degeneracy_gap
    double shift = 0.0;
    int restarts = 0;
    Eigen::VectorXd residuals;    ///< ||K phi - lambda A phi||_inf / max(1, lambda) per pair
    double max_residual = 0.0;
    bool dense = false;           ///< solved with the dense fallback
    bool capped = false;          ///< k reduced because the mesh has too few vertices

    int retained() const { return static_cast<int>(values.size()) - skip; }
    double value(int j) const { return values(skip + j); }
    auto vector(int j) const { return vectors.col(skip + j); }
    Eigen::VectorXd retained_values() const { return values.tail(retained()); }
    Eigen::MatrixXd retained_vectors() const { return vectors.rightCols(retained()); }
    bool is_degenerate(int j) const { return degenerate[skip + j] != 0; }
};

/// Throws NumericalError when the iteration does not reach the tolerance.
EigenSystem solve_gep(const SparseSymmetric& W, const Eigen::VectorXd& A, const EigenOptions& options = {});

/// CSV with columns index,eigenvalue,degenerate (retained pairs only).
void write_eigenvalues_csv(const EigenSystem& es, std::ostream& out);

} // namespace lbo
