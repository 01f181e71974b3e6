// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <lbo/assembly.hpp>
#include <lbo/curvature.hpp>
#include <lbo/descriptors.hpp>
#include <lbo/eigensolver.hpp>
#include <lbo/features.hpp>
#include <lbo/geometry.hpp>
#include <lbo/gradcheck.hpp>
#include <lbo/head.hpp>
#include <lbo/metric_projection.hpp>
#include <lbo/sensitivity.hpp>
#include <lbo/shapes.hpp>
#include <lbo/train.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace lbo;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

struct Timed {
    ModifiedOperator op;
    EigenSystem es;
    double seconds = 0.0;
};

Timed solve(const Mesh& m, int k, int skip = 1)
{
    Timed t{modified_operator(m, OperatorParams::identity(m), OperatorMode::Isotropic), {}, 0.0};
    EigenOptions eo;
    eo.k = k;
    eo.skip = skip;
    const auto t0 = Clock::now();
    t.es = solve_gep(t.op.ops.W, t.op.ops.A, eo);
    t.seconds = seconds_since(t0);
    return t;
}

double max_abs(const Eigen::MatrixXd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

// ---------------------------------------------------------------------------

void eigensolver_correctness(Outcome& o)
{
    const Eigen::Matrix3d S = Eigen::Vector3d(1.0, 0.7, 1.4).asDiagonal();
    const Mesh nonuniform = shapes::transformed(shapes::jitter(shapes::geodesic_sphere(7), 0.2, 11), S,
                                                Eigen::Vector3d::Zero());
    const std::pair<const char*, Mesh> meshes[] = {{"tetrahedron", shapes::regular_tetrahedron()},
                                                   {"icosphere3", shapes::icosphere(3)},
                                                   {"icosphere4", shapes::icosphere(4)},
                                                   {"nonuniform", nonuniform}};
    for (const auto& [name, m] : meshes) {
        const auto t = solve(m, 32, 1);
        const auto& es = t.es;
        const auto& A = t.op.ops.A;
        const Eigen::MatrixXd G = es.vectors.transpose() * A.asDiagonal() * es.vectors;
        const double orth = max_abs(G - Eigen::MatrixXd::Identity(G.rows(), G.cols()));
        const Eigen::MatrixXd KPhi = -(t.op.ops.W * es.vectors);
        double res = 0.0;
        for (Eigen::Index j = 0; j < es.values.size(); ++j)
            res = std::max(res, max_abs(KPhi.col(j) - es.values(j) * A.cwiseProduct(es.vectors.col(j))) /
                                    std::max(1.0, es.values(j)));
        o.detail << " " << name << "(n=" << m.num_vertices() << " pairs=" << es.values.size() << " res=" << res
                 << " orth=" << orth << " t=" << t.seconds << "s)";
        o.require(res <= 1e-8, std::string(name) + " residual");
        o.require(orth <= 1e-8, std::string(name) + " orthonormality");
        o.require(t.seconds < 2.0, std::string(name) + " runtime");
    }
}

void analytic_spectrum(Outcome& o)
{
    const auto t = solve(shapes::icosphere(4), 10, 1);
    const double expect[] = {2, 2, 2, 6, 6, 6, 6, 6};
    double worst = 0.0;
    for (int j = 0; j < 8; ++j) worst = std::max(worst, std::abs(t.es.value(j) - expect[j]) / expect[j]);
    // Groups are maximal runs of neighbors flagged degenerate and within the gap.
    std::vector<int> sizes{1};
    const double gap = EigenOptions{}.degeneracy_gap;
    for (int j = 1; j < 8; ++j) {
        const double a = t.es.value(j - 1), b = t.es.value(j);
        if (t.es.is_degenerate(j) && t.es.is_degenerate(j - 1) && (b - a) / std::max(std::abs(b), 1e-300) < gap)
            ++sizes.back();
        else
            sizes.push_back(1);
    }
    o.detail << " max_rel_err=" << worst << " groups=";
    for (int s : sizes) o.detail << s << ";";
    o.require(worst <= 0.05, "eigenvalues within 5%");
    o.require(sizes == std::vector<int>{3, 5}, "degeneracy grouping 3+5");
}

void identity_reductions(Outcome& o)
{
    double worst_aniso = 0.0;
    for (const Mesh& m : {shapes::jitter(shapes::icosphere(3), 0.1, 7), shapes::torus(1.0, 0.4, 20, 10)}) {
        const auto geom = geometry(m);
        const auto frames = curvature_frames(m).faces;
        const Eigen::MatrixXd W = assemble_stiffness(m, geom);
        const std::vector<FaceAniso> unit(m.num_faces());
        const Eigen::MatrixXd Wa = assemble_anisotropic_stiffness(m, geom, frames, unit);
        worst_aniso = std::max(worst_aniso, max_abs(W - Wa));
    }
    o.detail << " aniso_vs_cot=" << worst_aniso;
    o.require(worst_aniso <= 1e-12, "anisotropic identity");

    const Mesh m = shapes::jitter(shapes::sphere_on_cylinder(10, 16).mesh, 0.05, 4);
    double worst_head = 0.0;
    for (HeadMode mode : {HeadMode::Direct, HeadMode::Mlp}) {
        HeadConfig hc;
        hc.mode = mode;
        for (auto name : {"riemann", "albo_plus", "voronoi"}) hc.enable(name);
        TrainConfig tc;
        Pipeline p(m, hc, tc);
        const auto op = modified_operator(m, OperatorParams::identity(m), OperatorMode::Isotropic);
        const auto es = solve_gep(op.ops.W, op.ops.A, p.eigen_options());
        const Eigen::MatrixXd frozen = (hks(es, p.hks_times()).values.array() + 1e-12).log().matrix();
        worst_head = std::max(worst_head, max_abs(p.log_hks() - frozen));
    }
    o.detail << " head_vs_frozen=" << worst_head;
    o.require(worst_head <= 1e-9, "zero-initialized head");
}

Mesh audit_mesh() { return shapes::jitter(shapes::torus(1.0, 0.4, 20, 10), 0.05, 3); }

GradcheckReport& audit_report()
{
    static GradcheckReport report = run_gradcheck(audit_mesh());
    return report;
}

void gradient_audit(Outcome& o)
{
    const auto& r = audit_report();
    o.detail << " n=" << r.vertices << " pairs=" << r.pairs.size() << " t=" << r.seconds << "s";
    for (const auto& f : r.families) {
        o.detail << " " << family_name(f.family) << "(checked=" << f.checked << " matrix=" << f.matrix_max
                 << " eigen=" << f.eigen_max << " loss=" << f.loss_max << ")";
        o.require(f.checked >= 50, family_name(f.family) + " sample count");
        o.require(f.matrix_max <= 1e-6, family_name(f.family) + " matrix level");
        o.require(f.eigen_max <= 1e-4, family_name(f.family) + " eigen level");
        o.require(f.loss_max <= 1e-3, family_name(f.family) + " loss level");
    }
    o.require(r.families.size() == 5, "five families");
    o.require(r.vertices == 200, "200 vertices");
    o.require(r.pairs.size() == 16, "16 non-degenerate pairs");
    o.require(r.seconds < 600.0, "runtime");
    for (const auto& f : r.failures) o.detail << " {" << f << "}";
}

void forward_reverse(Outcome& o)
{
    const auto& r = audit_report();
    o.detail << " max_rel=" << r.forward_reverse_max;
    o.require(r.forward_reverse_max <= 1e-8, "forward/reverse agreement");
}

void homogeneity(Outcome& o)
{
    const Mesh m = shapes::jitter(shapes::icosphere(2), 0.1, 21);
    const auto t = solve(m, 15, 1); // lambda_2 .. lambda_16
    const auto p = OperatorParams::identity(m);
    std::vector<ElementDerivative> edge, vert;
    for (int e = 0; e < m.num_edges(); ++e)
        edge.push_back(parameter_derivative(m, t.op, p, {}, {ParamFamily::EdgeScale, e}));
    for (int v = 0; v < m.num_vertices(); ++v)
        vert.push_back(parameter_derivative(m, t.op, p, {}, {ParamFamily::VertexWeight, v}));
    double we = 0.0, wv = 0.0;
    int checked = 0;
    for (int j = 0; j < t.es.retained(); ++j) {
        if (t.es.is_degenerate(j)) continue;
        const double lam = t.es.value(j);
        const NelsonSolver solver(t.op.ops.W, t.op.ops.A, lam, t.es.vector(j));
        double se = 0.0, sv = 0.0;
        for (const auto& d : edge) se += solver.solve(m, d).d_value;
        for (const auto& d : vert) sv += solver.solve(m, d).d_value;
        we = std::max(we, std::abs(se + 2 * lam) / (2 * lam));
        wv = std::max(wv, std::abs(sv + lam) / lam);
        ++checked;
    }
    o.detail << " pairs=" << checked << " edge_rel=" << we << " vertex_rel=" << wv;
    o.require(checked == 15, "all pairs non-degenerate");
    o.require(we <= 1e-6, "edge identity");
    o.require(wv <= 1e-6, "vertex identity");
}

void metric_projection(Outcome& o)
{
    const Mesh tri = shapes::single_triangle();
    const int long_edge = tri.find_edge(0, 1);
    std::vector<double> target(3, 1.0);
    target[long_edge] = 3.0;
    const auto r = fix_metric(tri, target, 0.0);
    bool exact = r.tape.size() == 1;
    for (int e = 0; e < 3; ++e) exact = exact && r.lengths[e] == (e == long_edge ? 8.0 / 3.0 : 4.0 / 3.0);
    o.detail << " one_pass=(" << r.lengths[long_edge] << ")";
    o.require(exact, "(3,1,1) -> (8/3,4/3,4/3)");

    const Mesh m = shapes::jitter(shapes::icosphere(3), 0.1, 3);
    const auto base = embedding_lengths(m);
    const double eps = default_metric_margin(base);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 0.6);
    double worst_margin = std::numeric_limits<double>::infinity(), worst_drift = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> t = base;
        for (double& l : t) l *= std::exp(n(rng));
        const auto once = fix_metric(m, t, eps);
        worst_margin = std::min(worst_margin, min_triangle_margin(m, once.lengths));
        const auto twice = fix_metric(m, once.lengths, eps);
        for (size_t e = 0; e < t.size(); ++e)
            worst_drift = std::max(worst_drift, std::abs(twice.lengths[e] - once.lengths[e]));
    }
    const auto untouched = fix_metric(m, base, eps);
    o.detail << " eps=" << eps << " min_margin=" << worst_margin << " idempotence_drift=" << worst_drift;
    o.require(worst_margin >= eps, "margin");
    o.require(worst_drift == 0.0, "idempotence");
    o.require(untouched.lengths == base, "valid input unchanged");
}

void alignment_toy(Outcome& o)
{
    const Mesh target = shapes::jitter(shapes::geodesic_sphere(7), 0.1, 3, true);
    const Eigen::Matrix3d S = Eigen::Vector3d(1.0, 1.0, 1.3).asDiagonal();
    const Mesh a = shapes::transformed(shapes::jitter(shapes::geodesic_sphere(7), 0.1, 5, true), S,
                                       Eigen::Vector3d::Zero());
    HeadConfig hc;
    hc.enable("riemann");
    hc.enable("voronoi");
    TrainConfig tc;
    tc.epochs = 200;
    const auto t0 = Clock::now();
    Pipeline p(a, hc, tc);
    EigenOptions eo = p.eigen_options();
    p.set_alignment_target(baseline_spectrum(target, eo));
    const auto r = train(p, tc);
    const double secs = seconds_since(t0);
    const double reduction = 1.0 - r.final_loss / r.initial_loss;
    o.detail << " n=" << a.num_vertices() << " loss " << r.initial_loss << " -> " << r.final_loss
             << " reduction=" << reduction << " iterations=" << r.log.size() << " t=" << secs << "s";
    o.require(r.log.size() <= 200, "iteration budget");
    o.require(reduction >= 0.8, "80% reduction");
    o.require(secs < 900.0, "runtime");
}

double segmentation_accuracy(const std::string& modules, int seed)
{
    static const auto train_shape = shapes::sphere_on_cylinder(20, 44, 1.0, 0.85, 2.0);
    static const auto test_shape = shapes::sphere_on_cylinder(16, 36, 1.0, 0.85, 2.0);
    HeadConfig hc;
    hc.mode = HeadMode::Mlp;
    std::string tok;
    for (char ch : modules + ",") {
        if (ch != ',') {
            tok += ch;
        } else if (!tok.empty()) {
            hc.enable(tok);
            tok.clear();
        }
    }
    TrainConfig tc;
    tc.loss = LossKind::SegmentationCe;
    tc.epochs = 100;
    tc.seed = 100 + seed;
    const Mesh mtr = shapes::jitter(train_shape.mesh, 0.05, 1 + 2 * seed);
    const Mesh mte = shapes::jitter(test_shape.mesh, 0.05, 2 + 2 * seed);
    std::vector<int> rows(mtr.num_vertices());
    std::iota(rows.begin(), rows.end(), 0);
    Pipeline p(mtr, hc, tc);
    p.set_segmentation(train_shape.labels, rows);
    train(p, tc);
    Pipeline q(mte, hc, tc);
    std::vector<int> all(mte.num_vertices());
    std::iota(all.begin(), all.end(), 0);
    q.set_segmentation(test_shape.labels, all);
    q.copy_state_from(p);
    return q.accuracy(all);
}

void segmentation_trend(Outcome& o)
{
    const std::pair<const char*, const char*> configs[] = {{"baseline", ""},
                                                           {"voronoi", "voronoi"},
                                                           {"riemann", "riemann"},
                                                           {"albo_plus", "albo_plus"},
                                                           {"all", "riemann,albo_plus,voronoi"}};
    const auto t0 = Clock::now();
    std::vector<double> mean;
    for (const auto& [name, modules] : configs) {
        double sum = 0.0;
        for (int s = 0; s < 5; ++s) sum += segmentation_accuracy(modules, s);
        mean.push_back(sum / 5);
        o.detail << " " << name << "=" << mean.back();
    }
    o.detail << " t=" << seconds_since(t0) << "s";
    constexpr double gap = 0.005;
    o.require(mean[1] - mean[0] >= gap, "baseline < voronoi");
    o.require(mean[2] - mean[1] >= gap, "voronoi < riemann");
    o.require(mean[3] >= mean[2], "riemann <= albo_plus");
    o.require(mean[4] - mean[3] >= gap, "albo_plus < all");
}

void performance(Outcome& o)
{
    const Mesh small = shapes::jitter(shapes::geodesic_sphere(10), 0.05, 2, true);
    const Mesh large = shapes::jitter(shapes::geodesic_sphere(20), 0.05, 2, true);
    const auto a = time_reverse_gradient(small, 32);
    const auto b = time_reverse_gradient(large, 32);
    const double ratio = b.backward_seconds / a.backward_seconds;
    o.detail << " n=" << a.vertices << " backward=" << a.backward_seconds << "s (solve " << a.solve_seconds
             << "s) n=" << b.vertices << " backward=" << b.backward_seconds << "s (solve " << b.solve_seconds
             << "s) ratio=" << ratio;
    o.require(a.backward_seconds < 20.0, "small mesh runtime");
    o.require(b.backward_seconds < 120.0, "large mesh runtime");
    o.require(ratio <= 50.0, "scaling ratio");
}

void invariance(Outcome& o)
{
    const Mesh m = shapes::jitter(shapes::icosphere(3), 0.1, 9);
    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    const Mesh moved = shapes::transformed(m, R, Eigen::Vector3d(0.3, -2.0, 5.0));
    constexpr double s = 2.5;
    const Mesh big = shapes::scaled(m, s);
    const auto a = solve(m, 32), b = solve(moved, 32), c = solve(big, 32);
    bool simple = true;
    for (int j = 0; j < a.es.retained(); ++j) simple = simple && !a.es.is_degenerate(j);
    o.require(simple, "simple spectrum");

    double spec = 0.0, scale = 0.0;
    for (int j = 0; j < a.es.retained(); ++j) {
        spec = std::max(spec, std::abs(b.es.value(j) - a.es.value(j)));
        scale = std::max(scale, std::abs(c.es.value(j) * s * s - a.es.value(j)) / a.es.value(j));
    }
    const auto times = log_time_samples(a.es, 16);
    const double h = max_abs(hks(a.es, times).values - hks(b.es, times).values);
    const auto ga = gps(a.es, 16).values;
    const double g_rigid = max_abs(gps(b.es, 16).values - ga);
    const double g_scale = max_abs(gps(c.es, 16).values - ga);
    o.detail << " spectrum=" << spec << " hks=" << h << " gps=" << g_rigid << " scale_rel=" << scale
             << " gps_scale=" << g_scale;
    o.require(spec <= 1e-9, "rigid spectrum");
    o.require(h <= 1e-9, "rigid hks");
    o.require(g_rigid <= 1e-9, "rigid gps");
    o.require(scale <= 1e-9, "scaled spectrum");
    o.require(g_scale <= 1e-8, "scaled gps");
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
        {"eigensolver correctness", eigensolver_correctness},
        {"analytic sphere spectrum", analytic_spectrum},
        {"identity reductions", identity_reductions},
        {"gradient audit", gradient_audit},
        {"forward/reverse equivalence", forward_reverse},
        {"homogeneity identities", homogeneity},
        {"metric-nearness projection", metric_projection},
        {"spectral alignment toy", alignment_toy},
        {"segmentation trend", segmentation_trend},
        {"reverse gradient scaling", performance},
        {"rigid and scale invariance", invariance},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.contains(id)) continue;
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failed += !o.pass;
        std::printf("%s %2d %s:%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
