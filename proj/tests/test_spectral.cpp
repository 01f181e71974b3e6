#include <doctest.h>

#include <lbo/assembly.hpp>
#include <lbo/descriptors.hpp>
#include <lbo/eigensolver.hpp>
#include <lbo/errors.hpp>
#include <lbo/geometry.hpp>
#include <lbo/shapes.hpp>

#include <Eigen/Geometry>
#include <cmath>
#include <sstream>

using namespace lbo;
using doctest::Approx;

namespace {

struct Solved {
    ModifiedOperator op;
    EigenSystem es;
};

Solved solve(const Mesh& m, int k, int skip = 1)
{
    Solved s{modified_operator(m, OperatorParams::identity(m), OperatorMode::Isotropic), {}};
    EigenOptions eo;
    eo.k = k;
    eo.skip = skip;
    s.es = solve_gep(s.op.ops.W, s.op.ops.A, eo);
    return s;
}

Mesh rigid(const Mesh& m)
{
    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    return shapes::transformed(m, R, Eigen::Vector3d(0.3, -2.0, 5.0));
}

} // namespace

TEST_CASE("property: eigensystem invariants")
{
    for (const Mesh& m : {shapes::jitter(shapes::icosphere(3), 0.15, 1), shapes::torus(1.0, 0.4, 24, 12)}) {
        const auto s = solve(m, 32);
        const auto& es = s.es;
        const auto& A = s.op.ops.A;
        const Eigen::MatrixXd G = es.vectors.transpose() * A.asDiagonal() * es.vectors;
        CHECK((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() <= 1e-8);
        const Eigen::MatrixXd KPhi = -(s.op.ops.W * es.vectors);
        for (Eigen::Index j = 0; j < es.values.size(); ++j) {
            const double res = (KPhi.col(j) - es.values(j) * A.cwiseProduct(es.vectors.col(j))).cwiseAbs().maxCoeff();
            CHECK(res <= 1e-8 * std::max(1.0, es.values(j)));
            if (j > 0) CHECK(es.values(j) >= es.values(j - 1));
            Eigen::Index at;
            es.vectors.col(j).cwiseAbs().maxCoeff(&at);
            CHECK(es.vectors(at, j) > 0);
        }
    }
}

TEST_CASE("eigensolver: null space, skip, tetrahedron")
{
    const Mesh m = shapes::jitter(shapes::icosphere(2), 0.1, 3);
    const auto s0 = solve(m, 10, 0), s1 = solve(m, 9, 1);
    CHECK(std::abs(s0.es.values(0)) <= 1e-8);
    const auto phi = s0.es.vectors.col(0);
    CHECK((phi.maxCoeff() - phi.minCoeff()) / phi.mean() < 1e-6);
    CHECK(s1.es.value(0) == Approx(s0.es.values(1)).epsilon(1e-10));

    const auto tet = solve(shapes::regular_tetrahedron(), 32);
    CHECK(tet.es.capped);
    CHECK(tet.es.retained() == 3);
}

TEST_CASE("eigensolver: unit icosphere level 4 matches l(l+1)")
{
    const auto s = solve(shapes::icosphere(4), 10);
    const double expect[] = {2, 2, 2, 6, 6, 6, 6, 6, 12, 12};
    for (int j = 0; j < 10; ++j) CHECK(s.es.value(j) == Approx(expect[j]).epsilon(0.05));
    for (int j = 0; j < 8; ++j) CHECK(s.es.is_degenerate(j));
}

TEST_CASE("property: spectrum under rigid motion, scaling and repetition")
{
    const Mesh m = shapes::jitter(shapes::icosphere(3), 0.1, 4);
    const auto a = solve(m, 20), b = solve(rigid(m), 20), c = solve(shapes::scaled(m, 2.5), 20), d = solve(m, 20);
    for (int j = 0; j < 20; ++j) {
        CHECK(b.es.value(j) == Approx(a.es.value(j)).epsilon(1e-10));
        CHECK(c.es.value(j) == Approx(a.es.value(j) / 6.25).epsilon(1e-9));
        CHECK(d.es.value(j) == a.es.value(j));
        if (!a.es.is_degenerate(j))
            CHECK((b.es.vector(j) - a.es.vector(j)).cwiseAbs().maxCoeff() <= 1e-8);
    }
    CHECK((d.es.vectors - a.es.vectors).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("eigensolver: CSV export and bad mass")
{
    const auto s = solve(shapes::icosphere(2), 4);
    std::ostringstream out;
    write_eigenvalues_csv(s.es, out);
    CHECK(out.str().rfind("index,eigenvalue,degenerate\n", 0) == 0);
    Eigen::VectorXd A = s.op.ops.A;
    A(0) = 0.0;
    CHECK_THROWS_AS(solve_gep(s.op.ops.W, A), NumericalError);
}

TEST_CASE("hks: large time limit, sphere uniformity, positivity")
{
    const Mesh m = shapes::jitter(shapes::icosphere(3), 0.1, 5);
    const auto s = solve(m, 20, 0);
    const double area = s.op.ops.A.sum();
    const double t_big = 100.0 / s.es.values(1);
    const auto h = hks(s.es, std::vector<double>{t_big});
    CHECK((h.values.array() - 1.0 / area).abs().maxCoeff() <= 1e-9);

    const auto sphere = solve(shapes::icosphere(3), 32);
    const auto times = log_time_samples(sphere.es, 16);
    const auto hs = hks(sphere.es, times);
    CHECK(hs.values.rows() == shapes::icosphere(3).num_vertices());
    CHECK(hs.values.minCoeff() > 0);
    for (int c = 0; c < hs.values.cols(); ++c) {
        const auto col = hs.values.col(c);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().mean());
        CHECK(sd / mean < 1e-2);
    }
}

TEST_CASE("property: hks decay, truncation and equivariance")
{
    const Mesh m = shapes::jitter(shapes::torus(1.0, 0.4, 18, 9), 0.05, 6);
    const auto s = solve(m, 24);
    const auto times = log_time_samples(s.es, 16);
    const auto h = hks(s.es, times);
    for (int c = 1; c < h.values.cols(); ++c) CHECK((h.values.col(c) - h.values.col(c - 1)).maxCoeff() <= 0.0);

    EigenSystem fewer = s.es;
    fewer.values.conservativeResize(fewer.values.size() - 1);
    fewer.vectors.conservativeResize(Eigen::NoChange, fewer.vectors.cols() - 1);
    fewer.degenerate.pop_back();
    const auto hf = hks(fewer, times);
    const int last = static_cast<int>(s.es.values.size()) - 1;
    for (size_t c = 0; c < times.size(); ++c) {
        const Eigen::VectorXd dropped =
            std::exp(-times[c] * s.es.values(last)) * s.es.vectors.col(last).array().square().matrix();
        CHECK((h.values.col(c) - hf.values.col(c) - dropped).cwiseAbs().maxCoeff() <= 1e-14);
    }

    // Relabel vertices by reversing their order.
    const int n = m.num_vertices();
    Positions P = m.positions().colwise().reverse();
    Faces F = m.faces();
    for (int i = 0; i < F.size(); ++i) F.data()[i] = n - 1 - F.data()[i];
    const auto r = solve(Mesh(P, F), 24);
    const auto hr = hks(r.es, times);
    CHECK((hr.values.colwise().reverse() - h.values).cwiseAbs().maxCoeff() <= 1e-9 * h.values.maxCoeff());
}

TEST_CASE("gps: definition, scale invariance, sign")
{
    const Mesh m = shapes::jitter(shapes::icosphere(3), 0.1, 7);
    const auto s = solve(m, 16);
    const auto g = gps(s.es, 8);
    CHECK(g.values(5, 0) == s.es.vector(0)(5) / std::sqrt(s.es.value(0)));
    CHECK(g.channels[0] == 0);

    const auto big = solve(shapes::scaled(m, 3.0), 16);
    const auto gb = gps(big.es, 8);
    for (int c = 0; c < 8; ++c)
        if (!s.es.is_degenerate(c)) CHECK((gb.values.col(c) - g.values.col(c)).cwiseAbs().maxCoeff() <= 1e-8);

    EigenSystem flipped = s.es;
    flipped.vectors.col(flipped.skip + 2) *= -1;
    CHECK((gps(flipped, 8).values.col(2) + g.values.col(2)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(gps(s.es, 100), std::invalid_argument);
}

TEST_CASE("gps: zero modes are excluded")
{
    const auto s = solve(shapes::icosphere(2), 8, 0);
    const auto nz = nonzero_pairs(s.es);
    CHECK(nz.front() == 1);
    const auto g = gps(s.es, 3);
    CHECK(g.channels == std::vector<double>{1, 2, 3});
}

TEST_CASE("log_time_samples: endpoints, ordering, scaling")
{
    const auto s = solve(shapes::jitter(shapes::icosphere(3), 0.1, 8), 16);
    const auto two = log_time_samples(s.es, 2);
    const double lmin = s.es.value(0), lmax = s.es.values(s.es.values.size() - 1);
    CHECK(two[0] == Approx(4 * std::log(10.0) / lmax).epsilon(1e-14));
    CHECK(two[1] == Approx(4 * std::log(10.0) / lmin).epsilon(1e-14));
    const auto t = log_time_samples(s.es, 16);
    CHECK(t.front() > 0);
    for (size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);

    EigenSystem quarter = s.es;
    quarter.values /= 4;
    const auto tq = log_time_samples(quarter, 16);
    for (size_t i = 0; i < t.size(); ++i) CHECK(tq[i] == Approx(4 * t[i]).epsilon(1e-12));
}

TEST_CASE("property: descriptors invariant under rigid motion and scale")
{
    const Mesh m = shapes::jitter(shapes::icosphere(3), 0.1, 9);
    const auto a = solve(m, 32), b = solve(rigid(m), 32);
    const auto times = log_time_samples(a.es, 16);
    CHECK((hks(a.es, times).values - hks(b.es, times).values).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("descriptor export")
{
    const auto s = solve(shapes::icosphere(1), 6);
    const auto d = hks(s.es, std::vector<double>{0.1, 1.0});
    std::ostringstream out;
    write_descriptor_csv(d, out);
    CHECK(std::ranges::count(out.str(), '\n') == 1 + d.values.rows());
    CHECK(descriptor_metadata_json(d).find("\"hks\"") != std::string::npos);
}
