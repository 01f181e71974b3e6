#include <lbo/curvature.hpp>
#include <lbo/descriptors.hpp>
#include <lbo/gradcheck.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace lbo {

std::string family_name(ParamFamily f)
{
    switch (f) {
    case ParamFamily::EdgeScale: return "edge";
    case ParamFamily::A1: return "a1";
    case ParamFamily::A2: return "a2";
    case ParamFamily::Theta: return "theta";
    case ParamFamily::VertexWeight: return "vertex";
    }
    return "unknown";
}

ParamFamily parse_family(const std::string& name)
{
    if (name == "edge" || name == "riemann") return ParamFamily::EdgeScale;
    if (name == "a1") return ParamFamily::A1;
    if (name == "a2") return ParamFamily::A2;
    if (name == "theta") return ParamFamily::Theta;
    if (name == "vertex" || name == "voronoi") return ParamFamily::VertexWeight;
    throw std::invalid_argument("unknown parameter family '" + name + "'");
}

std::vector<ParamFamily> all_families()
{
    return {ParamFamily::EdgeScale, ParamFamily::A1, ParamFamily::A2, ParamFamily::Theta, ParamFamily::VertexWeight};
}

nlohmann::json GradcheckReport::to_json() const
{
    nlohmann::json j;
    j["vertices"] = vertices;
    j["pairs"] = pairs;
    j["masked_pairs"] = masked_pairs;
    j["forward_reverse_max_rel"] = forward_reverse_max;
    j["seconds"] = seconds;
    j["passed"] = passed;
    j["failures"] = failures;
    for (const auto& f : families) {
        j["families"][family_name(f.family)] = {
            {"checked", f.checked},       {"excluded", f.excluded},
            {"matrix_max", f.matrix_max}, {"matrix_mean", f.matrix_mean},
            {"eigen_max", f.eigen_max},   {"eigen_mean", f.eigen_mean},
            {"loss_max", f.loss_max},     {"loss_mean", f.loss_mean},
        };
    }
    return j;
}

namespace {

int family_size(const Mesh& mesh, ParamFamily f)
{
    switch (f) {
    case ParamFamily::EdgeScale: return mesh.num_edges();
    case ParamFamily::VertexWeight: return mesh.num_vertices();
    default: return mesh.num_faces();
    }
}

double& param_ref(OperatorParams& p, ParamId id)
{
    switch (id.family) {
    case ParamFamily::EdgeScale: return p.edge_log_scale[id.index];
    case ParamFamily::A1: return p.face_aniso[id.index].a1;
    case ParamFamily::A2: return p.face_aniso[id.index].a2;
    case ParamFamily::Theta: return p.face_aniso[id.index].theta;
    case ParamFamily::VertexWeight: return p.vertex_log_weight[id.index];
    }
    throw std::logic_error("bad family");
}

const std::vector<double>& gradient_of(const ParamGradient& g, ParamFamily f)
{
    switch (f) {
    case ParamFamily::EdgeScale: return g.edge_log_scale;
    case ParamFamily::A1: return g.a1;
    case ParamFamily::A2: return g.a2;
    case ParamFamily::Theta: return g.theta;
    case ParamFamily::VertexWeight: return g.vertex_log_weight;
    }
    throw std::logic_error("bad family");
}

Eigen::VectorXd stack(const std::vector<double>& w, const Eigen::VectorXd& a)
{
    Eigen::VectorXd v(w.size() + a.size());
    v.head(w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    v.tail(a.size()) = a;
    return v;
}

/// Eigenvector of `es` for retained pair j, sign-aligned with `ref` in the A inner product.
Eigen::VectorXd aligned(const EigenSystem& es, int j, const Eigen::VectorXd& ref, const Eigen::VectorXd& A)
{
    Eigen::VectorXd v = es.vector(j);
    if (v.dot(A.cwiseProduct(ref)) < 0) v = -v;
    return v;
}

struct Accumulator {
    double max = 0.0, sum = 0.0;
    int count = 0;
    void add(double e)
    {
        max = std::max(max, e);
        sum += e;
        ++count;
    }
    double mean() const { return count ? sum / count : 0.0; }
};

} // namespace

GradcheckReport run_gradcheck(const Mesh& mesh, const GradcheckOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    GradcheckReport report;
    report.vertices = mesh.num_vertices();
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(-std::numbers::pi / 2, std::numbers::pi / 2);

    OperatorParams params = OperatorParams::identity(mesh);
    for (auto& s : params.edge_log_scale) s = opt.base_edge_scale * gauss(rng);
    for (auto& a : params.face_aniso) {
        a.a1 = std::exp(opt.base_log_aniso * gauss(rng));
        a.a2 = std::exp(opt.base_log_aniso * gauss(rng));
        a.theta = opt.base_log_aniso > 0 ? unif(rng) : 0.0;
    }
    for (auto& v : params.vertex_log_weight) v = opt.base_vertex_scale * gauss(rng);

    const auto frames = curvature_frames(mesh).faces;
    const auto mode = OperatorMode::Anisotropic;
    const auto base = modified_operator(mesh, params, mode, frames);
    const auto es = solve_gep(base.ops.W, base.ops.A, opt.eigen);

    for (int j = 0; j < es.retained() && static_cast<int>(report.pairs.size()) < opt.pairs; ++j) {
        if (es.is_degenerate(j))
            ++report.masked_pairs;
        else
            report.pairs.push_back(j);
    }

    std::vector<NelsonSolver> nelson;
    for (int j : report.pairs) nelson.emplace_back(base.ops.W, base.ops.A, es.value(j), es.vector(j));

    // End-to-end loss: random weights on an HKS built from the checked pairs.
    const auto times = log_time_samples(es, 4);
    Eigen::MatrixXd G(mesh.num_vertices(), times.size());
    for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = gauss(rng);
    auto loss_of = [&](const EigenSystem& sys) {
        double L = 0.0;
        for (int j : report.pairs) {
            const Eigen::VectorXd phi2 = sys.vector(j).cwiseAbs2();
            for (size_t t = 0; t < times.size(); ++t) L += std::exp(-times[t] * sys.value(j)) * G.col(t).dot(phi2);
        }
        return L;
    };
    double loss_scale = 0.0;
    for (int j : report.pairs)
        for (size_t t = 0; t < times.size(); ++t)
            loss_scale += std::exp(-times[t] * es.value(j)) * G.col(t).cwiseAbs().dot(es.vector(j).cwiseAbs2());

    SpectralCotangent ct = hks_pullback(es, times, G);
    {
        std::vector<char> keep(es.retained(), 0);
        for (int j : report.pairs) keep[j] = 1;
        for (int j = 0; j < es.retained(); ++j) {
            if (keep[j]) continue;
            ct.d_values(j) = 0.0;
            ct.d_vectors.col(j).setZero();
        }
    }
    const auto bundle = reverse_gradient(mesh, base, params, frames, es, ct);

    const Eigen::VectorXd base_stack = stack(base.ops.edge_weight, base.ops.A);
    const double matrix_floor = 1e-8 * base_stack.lpNorm<Eigen::Infinity>();
    const double corrupt = 1.0 + opt.corrupt;

    for (ParamFamily fam : opt.families) {
        FamilyReport fr;
        fr.family = fam;
        Accumulator acc_m, acc_e, acc_l;
        struct EigenSample {
            double an_value, fd_value, vector_diff, fd_vector;
        };
        std::vector<std::vector<EigenSample>> eig_samples(report.pairs.size());
        const int size = family_size(mesh, fam);
        std::vector<int> idx(size);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min(size, opt.samples));

        for (int index : idx) {
            const ParamId id{fam, index};
            ElementDerivative d = parameter_derivative(mesh, base, params, frames, id);
            if (d.clamped || d.projected) {
                ++fr.excluded;
                continue;
            }
            for (auto& [e, v] : d.dW) v *= corrupt;
            for (auto& [e, v] : d.dA) v *= corrupt;
            const double value = param_ref(params, id);
            const double scale = (fam == ParamFamily::A1 || fam == ParamFamily::A2) ? value : 1.0;

            auto perturbed = [&](double h) {
                OperatorParams p = params;
                param_ref(p, id) = value + h;
                return modified_operator(mesh, p, mode, frames);
            };

            // Matrix level.
            const double hm = 1e-6 * scale;
            const auto mp = perturbed(hm), mm = perturbed(-hm);
            if (mp.fix.modified() || mm.fix.modified()) {
                ++fr.excluded;
                continue;
            }
            const Eigen::VectorXd fd_m = (stack(mp.ops.edge_weight, mp.ops.A) - stack(mm.ops.edge_weight, mm.ops.A)) / (2 * hm);
            std::vector<double> dw(mesh.num_edges(), 0.0);
            for (const auto& [e, v] : d.dW) dw[e] += v;
            const Eigen::VectorXd an_m = stack(dw, d.mass(mesh.num_vertices()));
            acc_m.add((an_m - fd_m).norm() / std::max(fd_m.norm(), matrix_floor));

            // Eigen and loss level.
            const double he = 1e-5 * scale;
            const auto ep = perturbed(he), em = perturbed(-he);
            if (ep.fix.modified() || em.fix.modified()) {
                ++fr.excluded;
                continue;
            }
            const auto sp = solve_gep(ep.ops.W, ep.ops.A, opt.eigen);
            const auto sm = solve_gep(em.ops.W, em.ops.A, opt.eigen);
            for (size_t q = 0; q < report.pairs.size(); ++q) {
                const int j = report.pairs[q];
                const Eigen::VectorXd phi = es.vector(j);
                const auto an = nelson[q].solve(mesh, d);
                const Eigen::VectorXd fd_v =
                    (aligned(sp, j, phi, base.ops.A) - aligned(sm, j, phi, base.ops.A)) / (2 * he);
                eig_samples[q].push_back({an.d_value, (sp.value(j) - sm.value(j)) / (2 * he),
                                          (an.d_vector - fd_v).lpNorm<Eigen::Infinity>(), fd_v.lpNorm<Eigen::Infinity>()});
            }
            const double fd_loss = (loss_of(sp) - loss_of(sm)) / (2 * he);
            const double an_loss = corrupt * gradient_of(bundle.params, fam)[index];
            acc_l.add(std::abs(an_loss - fd_loss) / std::max(std::abs(fd_loss), 1e-6 * loss_scale));
        }

        // Errors relative to the FD derivative, floored at 1% of the RMS
        // magnitude over the sampled parameters for that pair: derivatives far
        // below the typical scale sit inside the FD noise of the eigensolver.
        for (const auto& samples : eig_samples) {
            double rms_l = 0.0, rms_v = 0.0;
            for (const auto& e : samples) {
                rms_l += e.fd_value * e.fd_value;
                rms_v += e.fd_vector * e.fd_vector;
            }
            if (samples.empty()) continue;
            rms_l = std::sqrt(rms_l / samples.size());
            rms_v = std::sqrt(rms_v / samples.size());
            for (const auto& e : samples) {
                const double el = std::abs(e.an_value - e.fd_value) / std::max({std::abs(e.fd_value), 1e-2 * rms_l, 1e-300});
                const double ev = e.vector_diff / std::max({e.fd_vector, 1e-2 * rms_v, 1e-300});
                acc_e.add(std::max(el, ev));
            }
        }

        fr.checked = acc_m.count;
        fr.matrix_max = acc_m.max;
        fr.matrix_mean = acc_m.mean();
        fr.eigen_max = acc_e.max;
        fr.eigen_mean = acc_e.mean();
        fr.loss_max = acc_l.max;
        fr.loss_mean = acc_l.mean();
        const std::string name = family_name(fam);
        if (fr.matrix_max > opt.matrix_tol) report.failures.push_back(name + ": matrix-level error " + std::to_string(fr.matrix_max));
        if (fr.eigen_max > opt.eigen_tol) report.failures.push_back(name + ": eigen-level error " + std::to_string(fr.eigen_max));
        if (fr.loss_max > opt.loss_tol) report.failures.push_back(name + ": loss-level error " + std::to_string(fr.loss_max));
        report.families.push_back(fr);
    }

    if (opt.check_forward_reverse) {
        for (ParamFamily fam : opt.families) {
            const auto& rev = gradient_of(bundle.params, fam);
            const int size = family_size(mesh, fam);
            std::vector<double> fwd(size, 0.0);
            for (int index = 0; index < size; ++index) {
                ElementDerivative d = parameter_derivative(mesh, base, params, frames, {fam, index});
                for (auto& [e, v] : d.dW) v *= corrupt;
                for (auto& [e, v] : d.dA) v *= corrupt;
                for (size_t q = 0; q < report.pairs.size(); ++q) {
                    const int j = report.pairs[q];
                    const auto pd = nelson[q].solve(mesh, d);
                    fwd[index] += ct.d_values(j) * pd.d_value + ct.d_vectors.col(j).dot(pd.d_vector);
                }
            }
            const double fam_scale = std::abs(*std::max_element(fwd.begin(), fwd.end(), [](double a, double b) {
                return std::abs(a) < std::abs(b);
            }));
            for (int index = 0; index < size; ++index) {
                const double err = std::abs(rev[index] - fwd[index]) / std::max(std::abs(fwd[index]), 1e-10 * fam_scale);
                report.forward_reverse_max = std::max(report.forward_reverse_max, err);
            }
        }
        if (report.forward_reverse_max > opt.forward_reverse_tol)
            report.failures.push_back("forward/reverse mismatch " + std::to_string(report.forward_reverse_max));
    }

    report.passed = report.failures.empty();
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

TimingSample time_reverse_gradient(const Mesh& mesh, int k, std::uint64_t seed)
{
    using clock = std::chrono::steady_clock;
    TimingSample out;
    out.vertices = mesh.num_vertices();
    const auto frames = curvature_frames(mesh).faces;
    const auto params = OperatorParams::identity(mesh);
    const auto op = modified_operator(mesh, params, OperatorMode::Anisotropic, frames);
    EigenOptions eo;
    eo.k = k;
    eo.skip = 1;
    eo.seed = seed;

    const auto t0 = clock::now();
    const auto es = solve_gep(op.ops.W, op.ops.A, eo);
    const auto t1 = clock::now();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    SpectralCotangent ct = SpectralCotangent::zeros(mesh.num_vertices(), es.retained());
    for (Eigen::Index i = 0; i < ct.d_values.size(); ++i) ct.d_values(i) = gauss(rng);
    for (Eigen::Index i = 0; i < ct.d_vectors.size(); ++i) ct.d_vectors(i) = gauss(rng);
    const auto t2 = clock::now();
    const auto bundle = reverse_gradient(mesh, op, params, frames, es, ct);
    const auto t3 = clock::now();
    (void)bundle;

    out.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
    out.backward_seconds = std::chrono::duration<double>(t3 - t2).count();
    return out;
}

} // namespace lbo
