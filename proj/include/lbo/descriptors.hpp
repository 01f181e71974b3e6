#pragma once

#include <lbo/eigensolver.hpp>

#include <Eigen/Core>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lbo {

enum class DescriptorKind { HKS, GPS };

/// Vertex rows by channel columns. `channels` holds the HKS time or the GPS
/// component's eigenpair index (retained numbering) per column.
struct Descriptor {
    DescriptorKind kind = DescriptorKind::HKS;
    Eigen::MatrixXd values;
    std::vector<double> channels;
};

/// h_t(i) = sum over retained pairs of exp(-t lambda) phi(i)^2.
Descriptor hks(const EigenSystem& es, std::span<const double> times);

/// phi_m(i) / sqrt(lambda_m) over the first `count` retained pairs with
/// lambda >= 1e-8 times the largest retained eigenvalue.
Descriptor gps(const EigenSystem& es, int count);

/// `count` log-uniform times in [4 ln 10 / lambda_max, 4 ln 10 / lambda_min+].
std::vector<double> log_time_samples(const EigenSystem& es, int count = 16);

/// Retained indices whose eigenvalue counts as nonzero.
std::vector<int> nonzero_pairs(const EigenSystem& es);

void write_descriptor_csv(const Descriptor& d, std::ostream& out);
/// Channel metadata as a JSON document.
std::string descriptor_metadata_json(const Descriptor& d);

} // namespace lbo
