#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lbo::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Trainable array with its accumulated gradient.
struct Tensor {
    std::string name;
    Matrix value;
    Matrix grad;

    void init(std::string n, Eigen::Index rows, Eigen::Index cols)
    {
        name = std::move(n);
        value = Matrix::Zero(rows, cols);
        grad = Matrix::Zero(rows, cols);
    }
    void zero_grad() { grad.setZero(); }
};

/// Y = X W^T + b, rows are elements.
class Linear {
public:
    Linear() = default;
    Linear(const std::string& name, int in, int out);

    /// Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
    void init_uniform(std::mt19937_64& rng);
    void init_zero();

    Matrix forward(const Matrix& X);
    /// Accumulates parameter gradients; returns dL/dX.
    Matrix backward(const Matrix& dY);

    Tensor weight, bias;

private:
    Matrix m_input;
};

/// Per-channel normalization with statistics over the rows (mesh elements).
class BatchNorm {
public:
    BatchNorm() = default;
    BatchNorm(const std::string& name, int channels);

    Matrix forward(const Matrix& X, bool training);
    Matrix backward(const Matrix& dY);

    Tensor gamma, beta;
    Vector running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;

private:
    Matrix m_xhat;
    Vector m_inv_std;
    bool m_training = true;
};

Matrix leaky_relu(const Matrix& X, double slope);
Matrix leaky_relu_backward(const Matrix& X, const Matrix& dY, double slope);

/// k nearest neighbors by Euclidean distance, self excluded, ties by lower
/// index. Throws std::invalid_argument if k >= number of points.
IndexMatrix knn(const Matrix& points, int k);

enum class Aggregation { Max, Mean };

/// out_i = agg_j LeakyReLU(Linear([f_i, f_j - f_i])) over the neighbors j of i.
class EdgeConv {
public:
    EdgeConv() = default;
    EdgeConv(const std::string& name, int in, int out, double slope, Aggregation agg = Aggregation::Max);

    Matrix forward(const Matrix& F, const IndexMatrix& neighbors);
    Matrix backward(const Matrix& dY);

    Linear linear; ///< acts on [f_i, f_j - f_i], weight is out x 2 in
    double slope = 0.01;
    Aggregation aggregation = Aggregation::Max;

private:
    Matrix m_input, m_pre; ///< m_pre: per (element, channel) for max, per (pair, channel) for mean
    IndexMatrix m_argmax, m_neighbors;
};

/// Sequence of Linear -> BatchNorm -> LeakyReLU blocks followed by a final Linear.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::string& name, int in, const std::vector<int>& hidden, int out, double slope);

    void init_uniform(std::mt19937_64& rng);
    Matrix forward(const Matrix& X, bool training);
    Matrix backward(const Matrix& dY);
    std::vector<Tensor*> tensors();

    std::vector<Linear> linear; ///< hidden layers then the output layer
    std::vector<BatchNorm> norm;
    double slope = 0.01;

private:
    std::vector<Matrix> m_pre; ///< BatchNorm outputs before activation
};

/// Adam with bias correction, one state per tensor.
class Adam {
public:
    Adam(std::vector<Tensor*> tensors, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step();
    void zero_grad();
    double lr;

private:
    std::vector<Tensor*> m_tensors;
    std::vector<Matrix> m_m, m_v;
    double m_beta1, m_beta2, m_eps;
    long m_t = 0;
};

} // namespace lbo::nn
