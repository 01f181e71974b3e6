#include <doctest.h>

#include <lbo/assembly.hpp>
#include <lbo/config_io.hpp>
#include <lbo/descriptors.hpp>
#include <lbo/eigensolver.hpp>
#include <lbo/features.hpp>
#include <lbo/head.hpp>
#include <lbo/losses.hpp>
#include <lbo/manifest.hpp>
#include <lbo/nn.hpp>
#include <lbo/shapes.hpp>
#include <lbo/train.hpp>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

using namespace lbo;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

nn::Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    nn::Matrix M(r, c);
    for (auto& x : M.reshaped()) x = n(rng);
    return M;
}

// Central differences of sum(C .* f()) with respect to every entry of `x`.
template <class F>
nn::Matrix numeric_grad(nn::Matrix& x, const nn::Matrix& C, F&& f, double h = 1e-6)
{
    nn::Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x(i);
        x(i) = v + h;
        const double lp = (C.array() * f().array()).sum();
        x(i) = v - h;
        const double lm = (C.array() * f().array()).sum();
        x(i) = v;
        g(i) = (lp - lm) / (2 * h);
    }
    return g;
}

double rel(const nn::Matrix& a, const nn::Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-12); }

fs::path temp_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("lbo_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("nn: linear and batch norm gradients")
{
    std::mt19937_64 rng(1);
    nn::Linear lin("lin", 4, 3);
    lin.init_uniform(rng);
    nn::Matrix X = random_matrix(7, 4, rng);
    const nn::Matrix C = random_matrix(7, 3, rng);
    lin.forward(X);
    const nn::Matrix dX = lin.backward(C);
    CHECK(rel(dX, numeric_grad(X, C, [&] { return lin.forward(X); })) <= 1e-8);
    CHECK(rel(lin.weight.grad, numeric_grad(lin.weight.value, C, [&] { return lin.forward(X); })) <= 1e-8);

    nn::BatchNorm bn("bn", 3);
    nn::Matrix Y = random_matrix(9, 3, rng, 2.0);
    bn.gamma.value = random_matrix(1, 3, rng);
    const nn::Matrix D = random_matrix(9, 3, rng);
    bn.forward(Y, true);
    const nn::Matrix dY = bn.backward(D);
    CHECK(rel(dY, numeric_grad(Y, D, [&] { return bn.forward(Y, true); })) <= 1e-6);
    CHECK(rel(bn.gamma.grad, numeric_grad(bn.gamma.value, D, [&] { return bn.forward(Y, true); })) <= 1e-6);

    // Evaluation mode uses the running statistics.
    nn::BatchNorm fresh("f", 3);
    const nn::Matrix out = fresh.forward(Y, false);
    CHECK(rel(out, Y / std::sqrt(1 + fresh.eps)) <= 1e-12);
}

TEST_CASE("nn: knn excludes self and breaks ties by index")
{
    nn::Matrix P(5, 1);
    P << 0, 1, -1, 2, 3;
    const auto idx = nn::knn(P, 2);
    CHECK(idx(0, 0) == 1);
    CHECK(idx(0, 1) == 2);
    CHECK(idx(3, 0) == 1);
    CHECK(idx(3, 1) == 4);
    CHECK_THROWS_AS(nn::knn(P, 5), std::invalid_argument);
}

TEST_CASE("nn: EdgeConv gradients, zero differences, neighbor permutation")
{
    std::mt19937_64 rng(2);
    const nn::Matrix pts = random_matrix(12, 3, rng);
    const auto nbr = nn::knn(pts, 4);
    for (auto agg : {nn::Aggregation::Max, nn::Aggregation::Mean}) {
        nn::EdgeConv conv("ec", 3, 5, 0.01, agg);
        conv.linear.init_uniform(rng);
        nn::Matrix F = random_matrix(12, 3, rng);
        const nn::Matrix C = random_matrix(12, 5, rng);
        conv.forward(F, nbr);
        const nn::Matrix dF = conv.backward(C);
        CHECK(rel(dF, numeric_grad(F, C, [&] { return conv.forward(F, nbr); })) <= 1e-5);
        CHECK(rel(conv.linear.weight.grad,
                  numeric_grad(conv.linear.weight.value, C, [&] { return conv.forward(F, nbr); })) <= 1e-5);

        auto shuffled = nbr;
        for (Eigen::Index i = 0; i < shuffled.rows(); ++i) {
            std::vector<int> row(shuffled.row(i).data(), shuffled.row(i).data() + shuffled.cols());
            std::reverse(row.begin(), row.end());
            for (size_t j = 0; j < row.size(); ++j) shuffled(i, j) = row[j];
        }
        CHECK((conv.forward(F, nbr) - conv.forward(F, shuffled)).cwiseAbs().maxCoeff() <= 1e-14);

        // Identical features: only the center half of the weight matters.
        const nn::Matrix same = nn::Matrix::Constant(12, 3, 0.7);
        const nn::Matrix center = (same * conv.linear.weight.value.leftCols(3).transpose()).rowwise() +
                                  conv.linear.bias.value.row(0);
        CHECK((conv.forward(same, nbr) - nn::leaky_relu(center, 0.01)).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("nn: MLP gradients and Adam")
{
    std::mt19937_64 rng(3);
    nn::Mlp mlp("mlp", 4, {6, 5}, 2, 0.01);
    mlp.init_uniform(rng);
    nn::Matrix X = random_matrix(10, 4, rng);
    const nn::Matrix C = random_matrix(10, 2, rng);
    mlp.forward(X, true);
    const nn::Matrix dX = mlp.backward(C);
    CHECK(rel(dX, numeric_grad(X, C, [&] { return mlp.forward(X, true); })) <= 1e-5);
    CHECK(mlp.tensors().size() == 3 * 2 + 2 * 2);

    // Adam on a quadratic bowl moves each coordinate by about lr per step.
    nn::Tensor t;
    t.init("t", 1, 2);
    t.value << 1.0, -2.0;
    nn::Adam opt({&t}, 0.1);
    t.grad = 2 * t.value;
    opt.step();
    CHECK(t.value(0) == Approx(0.9).epsilon(1e-6));
    CHECK(t.value(1) == Approx(-1.9).epsilon(1e-6));
}

TEST_CASE("losses: cross entropy")
{
    const Eigen::MatrixXd uniform = Eigen::MatrixXd::Zero(4, 2);
    const std::vector<int> labels = {0, 1, 1, 0};
    CHECK(softmax_cross_entropy(uniform, labels).value == Approx(std::log(2.0)).epsilon(1e-15));

    Eigen::MatrixXd sure = Eigen::MatrixXd::Zero(4, 2);
    for (int i = 0; i < 4; ++i) sure(i, labels[i]) = 40.0;
    CHECK(softmax_cross_entropy(sure, labels).value < 1e-15);

    std::mt19937_64 rng(4);
    Eigen::MatrixXd L = random_matrix(6, 3, rng);
    const std::vector<int> lab = {0, 2, 1, 1, 0, 2};
    const std::vector<int> rows = {0, 2, 3, 5};
    const auto lv = softmax_cross_entropy(L, lab, rows);
    const nn::Matrix one = nn::Matrix::Ones(1, 1);
    const nn::Matrix fd = numeric_grad(L, one, [&] {
        return nn::Matrix::Constant(1, 1, softmax_cross_entropy(L, lab, rows).value);
    });
    CHECK(rel(lv.grad, fd) <= 1e-6);
    CHECK(lv.grad.row(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("losses: triplet")
{
    const Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd p(2), n(2);
    p << 0.2, 0.0;
    n << 0.0, 0.9;
    const auto inactive = triplet_loss(a, p, n, 0.3);
    CHECK(inactive.value == 0.0);
    CHECK(inactive.d_anchor.cwiseAbs().maxCoeff() == 0.0);
    CHECK(inactive.d_positive.cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd q(2);
    q << 0.0, 0.2;
    CHECK(triplet_loss(a, p, q, 0.3).value == Approx(0.3).epsilon(1e-15));

    std::mt19937_64 rng(5);
    Eigen::MatrixXd A = random_matrix(1, 4, rng), P = random_matrix(1, 4, rng) * 0.1, N = random_matrix(1, 4, rng);
    P += A;
    const double margin = 5.0;
    auto value = [&] {
        return nn::Matrix::Constant(
            1, 1, triplet_loss(A.row(0).transpose(), P.row(0).transpose(), N.row(0).transpose(), margin).value);
    };
    const auto tv = triplet_loss(A.row(0).transpose(), P.row(0).transpose(), N.row(0).transpose(), margin);
    REQUIRE(tv.value > 0);
    const nn::Matrix one = nn::Matrix::Ones(1, 1);
    CHECK(rel(tv.d_anchor.transpose(), numeric_grad(A, one, value)) <= 1e-6);
    CHECK(rel(tv.d_positive.transpose(), numeric_grad(P, one, value)) <= 1e-6);
    CHECK(rel(tv.d_negative.transpose(), numeric_grad(N, one, value)) <= 1e-6);
}

TEST_CASE("losses: spectral alignment, descriptor distance, pooling")
{
    Eigen::VectorXd a(3), b(3);
    a << 1, 2, 3;
    b << 1.5, 2, 2;
    CHECK(spectral_alignment(a, a).value == 0.0);
    const auto al = spectral_alignment(a, b);
    CHECK(al.value == Approx(1.25));
    CHECK((al.d_a - 2 * (a - b)).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd D(2, 2), T(2, 2);
    D << 1, 2, 3, 4;
    T << 1, 1, 1, 1;
    const auto dd = descriptor_distance(D, T);
    CHECK(dd.value == Approx((0 + 1 + 4 + 9) / 2.0));
    CHECK((dd.grad - (D - T)).cwiseAbs().maxCoeff() == 0.0);

    Descriptor c;
    c.values = Eigen::MatrixXd::Constant(5, 3, 2.5);
    CHECK((average_pool(c).array() - 2.5).abs().maxCoeff() <= 1e-15);
    Descriptor r;
    std::mt19937_64 rng(6);
    r.values = random_matrix(6, 4, rng);
    Descriptor rp = r;
    rp.values = r.values.colwise().reverse();
    CHECK((average_pool(r) - average_pool(rp)).cwiseAbs().maxCoeff() <= 1e-15);
    const std::vector<double> w = {1, 0, 0, 0, 0, 0};
    CHECK((average_pool(r, w) - r.values.row(0)).cwiseAbs().maxCoeff() <= 1e-15);

    Eigen::MatrixXd pooled(3, 2);
    pooled << 0, 0, 3, 4, 0, 1;
    const auto dist = pairwise_distances(pooled);
    CHECK(dist(0, 1) == Approx(5.0));
    CHECK(dist(1, 0) == dist(0, 1));
    CHECK(dist(2, 2) == 0.0);
}

TEST_CASE("head config validation and JSON")
{
    HeadConfig c;
    c.enable("albo");
    c.enable("albo_plus");
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(c.enable("nope"), std::invalid_argument);
    HeadConfig d;
    d.k = 0;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);

    HeadConfig e;
    e.mode = HeadMode::Mlp;
    e.enable("voronoi");
    e.enable("riemann");
    const auto back = head_config_from_json(to_json(e));
    CHECK(back.mode == HeadMode::Mlp);
    CHECK(back.modules() == std::vector<std::string>{"riemann", "voronoi"});

    TrainConfig t;
    t.epochs = -1;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t.epochs = 0;
    CHECK_NOTHROW(t.validate());
    t.loss = LossKind::Triplet;
    t.band_first = 3;
    const auto tb = train_config_from_json(to_json(t));
    CHECK(tb.loss == LossKind::Triplet);
    CHECK(tb.band_first == 3);
}

TEST_CASE("head: identity at initialization, positivity, direct round trip")
{
    const Mesh m = shapes::jitter(shapes::icosphere(2), 0.05, 3);
    const auto feats = intrinsic_features(m);
    HeadConfig mlp;
    mlp.mode = HeadMode::Mlp;
    for (auto name : {"riemann", "albo_plus", "voronoi"}) mlp.enable(name);
    Head h(m, feats, mlp, 7);
    const auto p = h.forward(true);
    for (double x : p.edge_log_scale) CHECK(x == 0.0);
    for (double x : p.vertex_log_weight) CHECK(x == 0.0);
    for (const auto& a : p.face_aniso) {
        CHECK(a.a1 == 1.0);
        CHECK(a.a2 == 1.0);
        CHECK(a.theta == 0.0);
    }

    HeadConfig direct;
    for (auto name : {"riemann", "albo_plus", "voronoi"}) direct.enable(name);
    Head d(m, feats, direct, 7);
    std::mt19937_64 rng(8);
    const nn::Matrix edges = random_matrix(m.num_edges(), 1, rng);
    const nn::Matrix faces = random_matrix(m.num_faces(), 3, rng, 30.0);
    d.set_raw("riemann", edges);
    d.set_raw("albo_plus", faces);
    const auto q = d.forward(true);
    for (int e = 0; e < m.num_edges(); ++e) CHECK(q.edge_log_scale[e] == edges(e, 0));
    for (int f = 0; f < m.num_faces(); ++f) {
        CHECK(q.face_aniso[f].a1 > 0);
        CHECK(q.face_aniso[f].a2 > 0);
        CHECK(q.face_aniso[f].theta == faces(f, 2));
    }

    HeadConfig albo;
    albo.enable("albo");
    Head a(m, feats, albo, 1);
    a.set_raw("albo", nn::Matrix::Constant(m.num_faces(), 2, 0.5));
    const auto r = a.forward(true);
    CHECK(r.face_aniso[0].a1 == Approx(std::exp(0.5)));
    CHECK(r.face_aniso[0].a2 == 1.0);
}

TEST_CASE("head: backward matches finite differences in MLP mode")
{
    const Mesh m = shapes::jitter(shapes::icosphere(1), 0.05, 4);
    HeadConfig c;
    c.mode = HeadMode::Mlp;
    c.k = 6;
    c.widths = {6, 5};
    c.enable("albo_plus");
    c.enable("voronoi");
    Head h(m, intrinsic_features(m), c, 3);
    std::mt19937_64 rng(9);
    for (auto* t : h.tensors()) t->value = random_matrix(t->value.rows(), t->value.cols(), rng, 0.3);
    auto g = ParamGradient::zeros(m);
    std::normal_distribution<double> n;
    for (auto* v : {&g.a1, &g.a2, &g.theta, &g.vertex_log_weight})
        for (double& x : *v) x = n(rng);
    auto scalar = [&] {
        const auto p = h.forward(true);
        double s = 0.0;
        for (int f = 0; f < m.num_faces(); ++f)
            s += g.a1[f] * p.face_aniso[f].a1 + g.a2[f] * p.face_aniso[f].a2 + g.theta[f] * p.face_aniso[f].theta;
        for (int v = 0; v < m.num_vertices(); ++v) s += g.vertex_log_weight[v] * p.vertex_log_weight[v];
        return s;
    };
    for (auto* t : h.tensors()) t->zero_grad();
    h.forward(true);
    h.backward(g);
    for (auto* t : h.tensors()) {
        const nn::Matrix one = nn::Matrix::Ones(1, 1);
        const nn::Matrix fd = numeric_grad(t->value, one, [&] { return nn::Matrix::Constant(1, 1, scalar()); });
        // Biases feeding a normalization layer have an exactly zero gradient.
        CHECK_MESSAGE((t->grad - fd).norm() <= 1e-5 * std::max(fd.norm(), 1e-3), t->name);
    }
}

namespace {

struct Alignment {
    Mesh a = shapes::scaled(shapes::jitter(shapes::torus(1.0, 0.4, 20, 10), 0.05, 1), 1.0);
    Mesh b = shapes::jitter(shapes::torus(1.0, 0.3, 20, 10), 0.05, 2);
    HeadConfig head = [] {
        HeadConfig h;
        h.enable("riemann");
        h.enable("albo_plus");
        h.enable("voronoi");
        return h;
    }();
    TrainConfig cfg = [] {
        TrainConfig c;
        c.k = 16;
        return c;
    }();

    std::unique_ptr<Pipeline> make()
    {
        auto p = std::make_unique<Pipeline>(a, head, cfg);
        p->set_alignment_target(baseline_spectrum(b, p->eigen_options()));
        return p;
    }
};

} // namespace

TEST_CASE("train: zero epochs is the frozen operator")
{
    Alignment s;
    s.cfg.epochs = 0;
    auto p = s.make();
    const auto r = train(*p, s.cfg);
    CHECK(r.log.empty());
    const auto& prm = p->params();
    for (double x : prm.edge_log_scale) CHECK(x == 0.0);

    const auto op = modified_operator(s.a, OperatorParams::identity(s.a), OperatorMode::Isotropic);
    const auto es = solve_gep(op.ops.W, op.ops.A, p->eigen_options());
    const Eigen::MatrixXd frozen = (hks(es, p->hks_times()).values.array() + 1e-12).log().matrix();
    CHECK((p->log_hks() - frozen).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("train: end-to-end gradient audit on a 200-vertex mesh")
{
    Alignment s;
    s.cfg.epochs = 3;
    auto p = s.make();
    REQUIRE(s.a.num_vertices() == 200);
    train(*p, s.cfg);
    const auto audit = audit_gradient(*p, 20, 5);
    CHECK(audit.max_rel_error <= 1e-3);
}

TEST_CASE("train: MLP-mode audit with the classifier")
{
    // Jittered so that no eigenpair is degenerate (masked pairs carry no gradient).
    auto lm = shapes::sphere_on_cylinder(8, 12);
    lm.mesh = shapes::jitter(lm.mesh, 0.05, 3);
    HeadConfig h;
    h.mode = HeadMode::Mlp;
    h.k = 8;
    h.widths = {8, 8};
    h.enable("riemann");
    h.enable("voronoi");
    TrainConfig c;
    c.loss = LossKind::SegmentationCe;
    c.k = 16;
    c.hks_times = 8;
    c.classifier_widths = {8};
    Pipeline p(lm.mesh, h, c);
    std::vector<int> rows(lm.mesh.num_vertices());
    std::iota(rows.begin(), rows.end(), 0);
    p.set_segmentation(lm.labels, rows);
    std::mt19937_64 rng(2);
    for (auto* t : p.head_tensors())
        if (t->name.find("out") != std::string::npos) t->value = random_matrix(t->value.rows(), t->value.cols(), rng, 0.05);
    const auto audit = audit_gradient(p, 20, 7);
    CHECK(audit.max_rel_error <= 1e-3);
}

TEST_CASE("train: deterministic trajectory and loss decrease")
{
    Alignment s;
    s.cfg.epochs = 6;
    auto p1 = s.make(), p2 = s.make();
    const auto r1 = train(*p1, s.cfg), r2 = train(*p2, s.cfg);
    REQUIRE(r1.log.size() == r2.log.size());
    for (size_t i = 0; i < r1.log.size(); ++i) CHECK(std::abs(r1.log[i].loss - r2.log[i].loss) <= 1e-10);
    CHECK(r1.final_loss < r1.initial_loss);
}

TEST_CASE("train: clipping keeps each family's direction")
{
    Alignment s;
    auto p = s.make();
    auto raw = p->evaluate(true, false).raw_grad;
    auto clipped = raw;
    clip_gradients(clipped, 1e-3);
    for (auto [x, y] : {std::pair{&raw.edge_log_scale, &clipped.edge_log_scale}, {&raw.a1, &clipped.a1},
                        {&raw.a2, &clipped.a2}, {&raw.theta, &clipped.theta},
                        {&raw.vertex_log_weight, &clipped.vertex_log_weight}}) {
        const Eigen::Map<const Eigen::VectorXd> a(x->data(), x->size()), b(y->data(), y->size());
        if (a.norm() == 0) continue;
        CHECK(a.dot(b) / (a.norm() * b.norm()) == Approx(1.0).epsilon(1e-12));
        CHECK(b.norm() <= 1e-3 * (1 + 1e-12));
    }
}

TEST_CASE("train: metric CSV and checkpoint round trip")
{
    Alignment s;
    s.cfg.epochs = 2;
    auto p = s.make();
    const auto r = train(*p, s.cfg);
    std::ostringstream csv;
    write_metric_csv(r.log, csv);
    CHECK(csv.str().rfind("step,loss,diagnostic,", 0) == 0);

    const auto dir = temp_dir("ckpt");
    save_checkpoint((dir / "c").string(), *p, R"({"note":1})");
    auto q = s.make();
    load_checkpoint((dir / "c").string(), *q);
    const auto a = p->head_tensors(), b = q->head_tensors();
    for (size_t i = 0; i < a.size(); ++i) CHECK((a[i]->value - b[i]->value).cwiseAbs().maxCoeff() == 0.0);
    CHECK(q->evaluate(false, false).loss == p->evaluate(false, false).loss);

    std::ifstream js(dir / "c.json");
    const auto manifest = nlohmann::json::parse(js);
    CHECK(manifest["extra"]["note"] == 1);

    HeadConfig other;
    other.enable("voronoi");
    Pipeline wrong(s.a, other, s.cfg);
    CHECK_THROWS(load_checkpoint((dir / "c").string(), wrong));
}

TEST_CASE("config: manifest hash ignores key order")
{
    const auto a = nlohmann::json::parse(R"({"b": 1, "a": {"y": [1, 2], "x": "s"}})");
    const auto b = nlohmann::json::parse(R"({"a": {"x": "s", "y": [1, 2]}, "b": 1})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    CHECK(config_hash(a) != config_hash(nlohmann::json::parse(R"({"b": 2})")));

    RunManifest m;
    m.command = "info";
    m.config = a;
    const auto dir = temp_dir("manifest");
    const auto path = m.write(dir);
    CHECK(path.filename() == "manifest_info.json");
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    CHECK(j["config_hash"] == config_hash(a));
    CHECK(j["tool_version"] == kToolVersion);
}

TEST_CASE("config: params CSV round trip and errors")
{
    const Mesh m = shapes::icosphere(1);
    OperatorParams p = OperatorParams::identity(m);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (double& x : p.edge_log_scale) x = n(rng);
    for (auto& a : p.face_aniso) a = {std::exp(n(rng)), std::exp(n(rng)), n(rng)};
    const auto dir = temp_dir("params");
    write_params_csv((dir / "e.csv").string(), p, "edge_log_scale");
    write_params_csv((dir / "f.csv").string(), p, "a1,a2,theta");
    OperatorParams q = OperatorParams::identity(m);
    read_params_csv((dir / "e.csv").string(), m, q);
    read_params_csv((dir / "f.csv").string(), m, q);
    CHECK(q.edge_log_scale == p.edge_log_scale);
    for (int f = 0; f < m.num_faces(); ++f) CHECK(q.face_aniso[f].theta == p.face_aniso[f].theta);

    std::ofstream(dir / "short.csv") << "vertex_log_weight\n0.1\n";
    CHECK_THROWS_AS(read_params_csv((dir / "short.csv").string(), m, q), std::invalid_argument);
    std::ofstream(dir / "bad.csv") << "unknown\n0.1\n";
    CHECK_THROWS_AS(read_params_csv((dir / "bad.csv").string(), m, q), std::invalid_argument);
}

TEST_CASE("config: mesh specs")
{
    const auto lm = mesh_from_spec(nlohmann::json::parse(R"({"shape": "sphere_on_cylinder", "profile_points": 8,
                                                            "segments": 12})"));
    CHECK(lm.labels.size() == static_cast<size_t>(lm.mesh.num_vertices()));
    const auto st = mesh_from_spec(nlohmann::json::parse(R"({"shape": "icosphere", "level": 2,
                                                            "scale": [1, 1, 1.3]})"));
    CHECK(st.mesh.positions().col(2).maxCoeff() == Approx(1.3));
    CHECK_THROWS_AS(mesh_from_spec(nlohmann::json::parse(R"({"shape": "teapot"})")), std::invalid_argument);
}
