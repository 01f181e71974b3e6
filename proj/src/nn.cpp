#include <lbo/nn.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lbo::nn {

Linear::Linear(const std::string& name, int in, int out)
{
    weight.init(name + ".weight", out, in);
    bias.init(name + ".bias", 1, out);
}

void Linear::init_uniform(std::mt19937_64& rng)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(weight.value.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value(i) = u(rng);
    bias.value.setZero();
}

void Linear::init_zero()
{
    weight.value.setZero();
    bias.value.setZero();
}

Matrix Linear::forward(const Matrix& X)
{
    m_input = X;
    Matrix Y = X * weight.value.transpose();
    Y.rowwise() += bias.value.row(0);
    return Y;
}

Matrix Linear::backward(const Matrix& dY)
{
    weight.grad += dY.transpose() * m_input;
    bias.grad.row(0) += dY.colwise().sum();
    return dY * weight.value;
}

BatchNorm::BatchNorm(const std::string& name, int channels)
{
    gamma.init(name + ".gamma", 1, channels);
    gamma.value.setOnes();
    beta.init(name + ".beta", 1, channels);
    running_mean = Vector::Zero(channels);
    running_var = Vector::Ones(channels);
}

Matrix BatchNorm::forward(const Matrix& X, bool training)
{
    m_training = training;
    const double n = static_cast<double>(X.rows());
    Vector mean, var;
    if (training) {
        mean = X.colwise().mean().transpose();
        var = ((X.rowwise() - mean.transpose()).array().square().colwise().sum() / n).transpose();
        running_mean = (1 - momentum) * running_mean + momentum * mean;
        running_var = (1 - momentum) * running_var + momentum * var;
    } else {
        mean = running_mean;
        var = running_var;
    }
    m_inv_std = (var.array() + eps).rsqrt();
    m_xhat = (X.rowwise() - mean.transpose()) * m_inv_std.asDiagonal();
    Matrix Y = m_xhat * gamma.value.row(0).asDiagonal();
    Y.rowwise() += beta.value.row(0);
    return Y;
}

Matrix BatchNorm::backward(const Matrix& dY)
{
    gamma.grad.row(0) += (dY.array() * m_xhat.array()).colwise().sum().matrix();
    beta.grad.row(0) += dY.colwise().sum();
    const Matrix dxhat = dY * gamma.value.row(0).asDiagonal();
    if (!m_training) return dxhat * m_inv_std.asDiagonal();
    const double n = static_cast<double>(dY.rows());
    const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dx = (dxhat.array() * m_xhat.array()).colwise().sum();
    Matrix dX = (n * dxhat).rowwise() - sum_d;
    dX -= m_xhat * sum_dx.asDiagonal();
    return dX * (m_inv_std / n).asDiagonal();
}

Matrix leaky_relu(const Matrix& X, double slope)
{
    return X.unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
}

Matrix leaky_relu_backward(const Matrix& X, const Matrix& dY, double slope)
{
    return dY.binaryExpr(X, [slope](double d, double x) { return x > 0 ? d : slope * d; });
}

IndexMatrix knn(const Matrix& points, int k)
{
    const int n = static_cast<int>(points.rows());
    if (k < 1 || k >= n)
        throw std::invalid_argument("neighborhood size " + std::to_string(k) + " needs more than " + std::to_string(k) +
                                    " elements, have " + std::to_string(n));
    IndexMatrix out(n, k);
    std::vector<int> idx;
    std::vector<double> dist(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) dist[j] = (points.row(j) - points.row(i)).squaredNorm();
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
        auto less = [&](int a, int b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
        idx.erase(idx.begin() + i);
        std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), less);
        for (int c = 0; c < k; ++c) out(i, c) = idx[c];
    }
    return out;
}

EdgeConv::EdgeConv(const std::string& name, int in, int out, double slope_, Aggregation agg)
    : linear(name + ".linear", 2 * in, out), slope(slope_), aggregation(agg)
{
}

Matrix EdgeConv::forward(const Matrix& F, const IndexMatrix& nb)
{
    // W [f_i, f_j - f_i] + b = (W1 - W2) f_i + W2 f_j + b. For max aggregation
    // LeakyReLU is monotone, so only the largest W2 f_j per channel matters.
    const Eigen::Index d = F.cols();
    if (linear.weight.value.cols() != 2 * d) throw std::invalid_argument("edgeconv feature width mismatch");
    if (nb.rows() != F.rows()) throw std::invalid_argument("edgeconv needs one neighbor row per element");
    const Matrix& W = linear.weight.value;
    const Matrix W1 = W.leftCols(d), W2 = W.rightCols(d);
    Matrix P = F * (W1 - W2).transpose();
    P.rowwise() += linear.bias.value.row(0);
    const Matrix Q = F * W2.transpose();

    const Eigen::Index n = F.rows(), c = W.rows(), k = nb.cols();
    m_input = F;
    m_neighbors = nb;
    if (aggregation == Aggregation::Mean) {
        m_pre.resize(n * k, c);
        Matrix out = Matrix::Zero(n, c);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index q = 0; q < k; ++q) {
                m_pre.row(i * k + q) = P.row(i) + Q.row(nb(i, q));
                out.row(i) += leaky_relu(m_pre.row(i * k + q), slope);
            }
        return out / static_cast<double>(k);
    }
    m_argmax.resize(n, c);
    m_pre.resize(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index ch = 0; ch < c; ++ch) {
            int best = nb(i, 0);
            for (Eigen::Index q = 1; q < k; ++q)
                if (Q(nb(i, q), ch) > Q(best, ch)) best = nb(i, q);
            m_argmax(i, ch) = best;
            m_pre(i, ch) = P(i, ch) + Q(best, ch);
        }
    }
    return leaky_relu(m_pre, slope);
}

Matrix EdgeConv::backward(const Matrix& dY)
{
    const Eigen::Index n = m_input.rows(), c = dY.cols();
    Matrix dP = Matrix::Zero(n, c);
    Matrix dQ = Matrix::Zero(n, c);
    if (aggregation == Aggregation::Mean) {
        const Eigen::Index k = m_neighbors.cols();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index q = 0; q < k; ++q) {
                const Matrix g = leaky_relu_backward(m_pre.row(i * k + q), dY.row(i), slope) / static_cast<double>(k);
                dP.row(i) += g;
                dQ.row(m_neighbors(i, q)) += g;
            }
    } else {
        dP = leaky_relu_backward(m_pre, dY, slope);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index ch = 0; ch < c; ++ch) dQ(m_argmax(i, ch), ch) += dP(i, ch);
    }

    const Eigen::Index d = m_input.cols();
    const Matrix& W = linear.weight.value;
    const Matrix W1 = W.leftCols(d), W2 = W.rightCols(d);
    const Matrix gP = dP.transpose() * m_input; // d/d(W1 - W2)
    const Matrix gQ = dQ.transpose() * m_input; // d/dW2
    linear.weight.grad.leftCols(d) += gP;
    linear.weight.grad.rightCols(d) += gQ - gP;
    linear.bias.grad.row(0) += dP.colwise().sum();
    return dP * (W1 - W2) + dQ * W2;
}

Mlp::Mlp(const std::string& name, int in, const std::vector<int>& hidden, int out, double slope_) : slope(slope_)
{
    int prev = in;
    for (size_t l = 0; l < hidden.size(); ++l) {
        linear.emplace_back(name + ".fc" + std::to_string(l), prev, hidden[l]);
        norm.emplace_back(name + ".bn" + std::to_string(l), hidden[l]);
        prev = hidden[l];
    }
    linear.emplace_back(name + ".out", prev, out);
}

void Mlp::init_uniform(std::mt19937_64& rng)
{
    for (auto& l : linear) l.init_uniform(rng);
}

Matrix Mlp::forward(const Matrix& X, bool training)
{
    m_pre.resize(norm.size());
    Matrix h = X;
    for (size_t l = 0; l < norm.size(); ++l) {
        m_pre[l] = norm[l].forward(linear[l].forward(h), training);
        h = leaky_relu(m_pre[l], slope);
    }
    return linear.back().forward(h);
}

Matrix Mlp::backward(const Matrix& dY)
{
    Matrix g = linear.back().backward(dY);
    for (size_t l = norm.size(); l-- > 0;) {
        g = leaky_relu_backward(m_pre[l], g, slope);
        g = linear[l].backward(norm[l].backward(g));
    }
    return g;
}

std::vector<Tensor*> Mlp::tensors()
{
    std::vector<Tensor*> out;
    for (size_t l = 0; l < linear.size(); ++l) {
        out.push_back(&linear[l].weight);
        out.push_back(&linear[l].bias);
        if (l < norm.size()) {
            out.push_back(&norm[l].gamma);
            out.push_back(&norm[l].beta);
        }
    }
    return out;
}

Adam::Adam(std::vector<Tensor*> tensors, double lr_, double beta1, double beta2, double eps)
    : lr(lr_), m_tensors(std::move(tensors)), m_beta1(beta1), m_beta2(beta2), m_eps(eps)
{
    if (!(lr > 0.0)) throw std::invalid_argument("step size must be positive");
    for (auto* t : m_tensors) {
        m_m.push_back(Matrix::Zero(t->value.rows(), t->value.cols()));
        m_v.push_back(Matrix::Zero(t->value.rows(), t->value.cols()));
    }
}

void Adam::step()
{
    ++m_t;
    const double c1 = 1.0 - std::pow(m_beta1, static_cast<double>(m_t));
    const double c2 = 1.0 - std::pow(m_beta2, static_cast<double>(m_t));
    for (size_t i = 0; i < m_tensors.size(); ++i) {
        auto& t = *m_tensors[i];
        m_m[i] = m_beta1 * m_m[i] + (1 - m_beta1) * t.grad;
        m_v[i] = m_beta2 * m_v[i] + (1 - m_beta2) * t.grad.cwiseAbs2();
        t.value.array() -= lr * (m_m[i].array() / c1) / ((m_v[i].array() / c2).sqrt() + m_eps);
    }
}

void Adam::zero_grad()
{
    for (auto* t : m_tensors) t->zero_grad();
}

} // namespace lbo::nn
