#include <lbo/descriptors.hpp>

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace lbo {

Descriptor hks(const EigenSystem& es, std::span<const double> times)
{
    const int k = es.retained();
    if (k <= 0) throw std::invalid_argument("HKS needs at least one retained eigenpair");
    if (times.empty()) throw std::invalid_argument("HKS needs at least one time");
    for (size_t t = 0; t < times.size(); ++t) {
        if (!(times[t] > 0.0)) throw std::invalid_argument("HKS times must be positive");
        if (t > 0 && !(times[t] > times[t - 1])) throw std::invalid_argument("HKS times must be ascending");
    }

    const Eigen::MatrixXd phi2 = es.retained_vectors().array().square();
    const Eigen::VectorXd lambda = es.retained_values();
    Eigen::MatrixXd decay(k, times.size());
    for (size_t t = 0; t < times.size(); ++t) decay.col(t) = (-times[t] * lambda.array()).exp();

    Descriptor d;
    d.kind = DescriptorKind::HKS;
    d.values = phi2 * decay;
    d.channels.assign(times.begin(), times.end());
    return d;
}

std::vector<int> nonzero_pairs(const EigenSystem& es)
{
    std::vector<int> out;
    if (es.retained() == 0) return out;
    const double floor = 1e-8 * es.value(es.retained() - 1);
    for (int j = 0; j < es.retained(); ++j)
        if (es.value(j) >= floor && es.value(j) > 0.0) out.push_back(j);
    return out;
}

Descriptor gps(const EigenSystem& es, int count)
{
    const auto nz = nonzero_pairs(es);
    if (count < 1 || count > static_cast<int>(nz.size()))
        throw std::invalid_argument("GPS requests " + std::to_string(count) + " components but only " +
                                    std::to_string(nz.size()) + " nonzero eigenpairs are retained");
    Descriptor d;
    d.kind = DescriptorKind::GPS;
    d.values.resize(es.vectors.rows(), count);
    for (int m = 0; m < count; ++m) {
        d.values.col(m) = es.vector(nz[m]) / std::sqrt(es.value(nz[m]));
        d.channels.push_back(nz[m]);
    }
    return d;
}

std::vector<double> log_time_samples(const EigenSystem& es, int count)
{
    const auto nz = nonzero_pairs(es);
    if (nz.size() < 2) throw std::invalid_argument("time sampling needs at least two nonzero eigenvalues");
    if (count < 2) throw std::invalid_argument("time sampling needs at least two samples");
    const double lmin = es.value(nz.front());
    const double lmax = es.value(nz.back());
    if (!(lmax > lmin)) throw std::invalid_argument("degenerate spectrum: largest and smallest nonzero eigenvalue agree");

    const double c = 4.0 * std::log(10.0);
    const double lo = std::log(c / lmax), hi = std::log(c / lmin);
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i) t[i] = std::exp(lo + (hi - lo) * i / (count - 1));
    t.front() = c / lmax;
    t.back() = c / lmin;
    return t;
}

void write_descriptor_csv(const Descriptor& d, std::ostream& out)
{
    const auto old = out.precision(17);
    const char* prefix = d.kind == DescriptorKind::HKS ? "hks_" : "gps_";
    out << "vertex";
    for (size_t c = 0; c < d.channels.size(); ++c) out << ',' << prefix << c;
    out << '\n';
    for (Eigen::Index r = 0; r < d.values.rows(); ++r) {
        out << r;
        for (Eigen::Index c = 0; c < d.values.cols(); ++c) out << ',' << d.values(r, c);
        out << '\n';
    }
    out.precision(old);
}

std::string descriptor_metadata_json(const Descriptor& d)
{
    nlohmann::json j;
    j["kind"] = d.kind == DescriptorKind::HKS ? "hks" : "gps";
    j["rows"] = d.values.rows();
    if (d.kind == DescriptorKind::HKS) {
        j["times"] = d.channels;
    } else {
        std::vector<int> idx;
        for (double c : d.channels) idx.push_back(static_cast<int>(c));
        j["eigenpair_index"] = idx;
    }
    return j.dump(2);
}

} // namespace lbo
