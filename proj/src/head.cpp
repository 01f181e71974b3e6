#include <lbo/head.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace lbo {

void HeadConfig::validate() const
{
    if (albo && albo_plus) throw std::invalid_argument("albo and albo_plus are mutually exclusive");
    if (k < 1) throw std::invalid_argument("EdgeConv neighborhood size must be at least 1");
    if (widths.empty()) throw std::invalid_argument("head needs at least one layer width");
    for (int w : widths)
        if (w < 1) throw std::invalid_argument("layer widths must be positive");
}

std::vector<std::string> HeadConfig::modules() const
{
    std::vector<std::string> out;
    if (riemann) out.push_back("riemann");
    if (albo) out.push_back("albo");
    if (albo_plus) out.push_back("albo_plus");
    if (voronoi) out.push_back("voronoi");
    return out;
}

void HeadConfig::enable(const std::string& m)
{
    if (m == "riemann") riemann = true;
    else if (m == "albo") albo = true;
    else if (m == "albo_plus") albo_plus = true;
    else if (m == "voronoi") voronoi = true;
    else throw std::invalid_argument("unknown module '" + m + "'");
}

namespace {

nn::Matrix element_features(const Mesh& mesh, const IntrinsicFeatures& f, ElementKind kind, bool normalized)
{
    const FeatureField* field = nullptr;
    switch (kind) {
    case ElementKind::Vertex: field = normalized ? &f.vertex : &f.vertex_raw; break;
    case ElementKind::Edge: field = &f.edge; break;
    case ElementKind::Face: field = &f.face; break;
    }
    if (!normalized && kind != ElementKind::Vertex) {
        const auto& V = f.vertex_raw.values;
        nn::Matrix out(kind == ElementKind::Edge ? mesh.num_edges() : mesh.num_faces(), V.cols());
        if (kind == ElementKind::Edge) {
            for (int e = 0; e < mesh.num_edges(); ++e)
                out.row(e) = (V.row(mesh.edge(e)[0]) + V.row(mesh.edge(e)[1])) / 2.0;
        } else {
            for (int t = 0; t < mesh.num_faces(); ++t) {
                const auto c = mesh.face(t);
                out.row(t) = (V.row(c[0]) + V.row(c[1]) + V.row(c[2])) / 3.0;
            }
        }
        return out;
    }
    const int expected = kind == ElementKind::Vertex ? mesh.num_vertices()
                         : kind == ElementKind::Edge ? mesh.num_edges()
                                                     : mesh.num_faces();
    if (field->values.rows() != expected) throw std::invalid_argument("missing element features for an enabled module");
    return field->values;
}

} // namespace

Head::Head(const Mesh& mesh, const IntrinsicFeatures& features, const HeadConfig& config, std::uint64_t seed)
    : m_mesh(&mesh), m_config(config)
{
    m_config.validate();
    std::mt19937_64 rng(seed);
    const auto names = m_config.modules();
    m_modules.reserve(names.size());
    for (const auto& name : names) {
        Module m;
        m.name = name;
        if (name == "riemann") m.kind = ElementKind::Edge;
        else if (name == "voronoi") m.kind = ElementKind::Vertex;
        else m.kind = ElementKind::Face;
        m.out = name == "albo" ? 2 : name == "albo_plus" ? 3 : 1;
        const int rows = m.kind == ElementKind::Vertex ? mesh.num_vertices()
                         : m.kind == ElementKind::Edge ? mesh.num_edges()
                                                       : mesh.num_faces();
        if (m_config.mode == HeadMode::Direct) {
            m.direct.init(name + ".raw", rows, m.out);
        } else {
            m.features = element_features(mesh, features, m.kind, m_config.normalize_features);
            m.neighbors = nn::knn(element_coordinates(mesh, m.kind), m_config.k);
            const int in = static_cast<int>(m.features.cols());
            const std::vector<int>& w = m_config.widths;
            m.conv = nn::EdgeConv(name + ".conv", in, w[0], m_config.slope, m_config.aggregation);
            m.conv.linear.init_uniform(rng);
            m.norm = nn::BatchNorm(name + ".conv_bn", w[0]);
            m.mlp = nn::Mlp(name + ".mlp", w[0], std::vector<int>(w.begin() + 1, w.end()), m.out, m_config.slope);
            m.mlp.init_uniform(rng);
            m.mlp.linear.back().init_zero();
        }
        m.raw = nn::Matrix::Zero(rows, m.out);
        m_modules.push_back(std::move(m));
    }
}

OperatorParams Head::forward(bool training)
{
    OperatorParams p = OperatorParams::identity(*m_mesh);
    for (auto& m : m_modules) {
        if (m_config.mode == HeadMode::Direct) {
            m.raw = m.direct.value;
        } else {
            nn::Matrix h = m.conv.forward(m.features, m.neighbors);
            h = m.norm.forward(h, training);
            m.raw = m.mlp.forward(h, training);
        }
        const auto& r = m.raw;
        if (m.name == "riemann") {
            for (Eigen::Index e = 0; e < r.rows(); ++e) p.edge_log_scale[e] = r(e, 0);
        } else if (m.name == "voronoi") {
            for (Eigen::Index v = 0; v < r.rows(); ++v) p.vertex_log_weight[v] = r(v, 0);
        } else if (m.name == "albo") {
            for (Eigen::Index f = 0; f < r.rows(); ++f) p.face_aniso[f] = {std::exp(r(f, 0)), 1.0, r(f, 1)};
        } else {
            for (Eigen::Index f = 0; f < r.rows(); ++f)
                p.face_aniso[f] = {std::exp(r(f, 0)), std::exp(r(f, 1)), r(f, 2)};
        }
    }
    return p;
}

void Head::backward(const ParamGradient& g)
{
    for (auto& m : m_modules) {
        const auto& r = m.raw;
        nn::Matrix d(r.rows(), r.cols());
        if (m.name == "riemann") {
            for (Eigen::Index e = 0; e < r.rows(); ++e) d(e, 0) = g.edge_log_scale[e];
        } else if (m.name == "voronoi") {
            for (Eigen::Index v = 0; v < r.rows(); ++v) d(v, 0) = g.vertex_log_weight[v];
        } else if (m.name == "albo") {
            for (Eigen::Index f = 0; f < r.rows(); ++f) {
                d(f, 0) = g.a1[f] * std::exp(r(f, 0));
                d(f, 1) = g.theta[f];
            }
        } else {
            for (Eigen::Index f = 0; f < r.rows(); ++f) {
                d(f, 0) = g.a1[f] * std::exp(r(f, 0));
                d(f, 1) = g.a2[f] * std::exp(r(f, 1));
                d(f, 2) = g.theta[f];
            }
        }
        if (m_config.mode == HeadMode::Direct) {
            m.direct.grad += d;
        } else {
            m.conv.backward(m.norm.backward(m.mlp.backward(d)));
        }
    }
}

std::vector<nn::Tensor*> Head::tensors()
{
    std::vector<nn::Tensor*> out;
    for (auto& m : m_modules) {
        if (m_config.mode == HeadMode::Direct) {
            out.push_back(&m.direct);
            continue;
        }
        out.push_back(&m.conv.linear.weight);
        out.push_back(&m.conv.linear.bias);
        out.push_back(&m.norm.gamma);
        out.push_back(&m.norm.beta);
        for (auto* t : m.mlp.tensors()) out.push_back(t);
    }
    return out;
}

std::vector<std::pair<std::string, nn::Vector*>> Head::buffers()
{
    std::vector<std::pair<std::string, nn::Vector*>> out;
    if (m_config.mode == HeadMode::Direct) return out;
    for (auto& m : m_modules) {
        out.emplace_back(m.name + ".conv_bn.running_mean", &m.norm.running_mean);
        out.emplace_back(m.name + ".conv_bn.running_var", &m.norm.running_var);
        for (size_t l = 0; l < m.mlp.norm.size(); ++l) {
            const std::string base = m.name + ".mlp.bn" + std::to_string(l);
            out.emplace_back(base + ".running_mean", &m.mlp.norm[l].running_mean);
            out.emplace_back(base + ".running_var", &m.mlp.norm[l].running_var);
        }
    }
    return out;
}

std::vector<nn::BatchNorm*> Head::norms()
{
    std::vector<nn::BatchNorm*> out;
    if (m_config.mode == HeadMode::Direct) return out;
    for (auto& m : m_modules) {
        out.push_back(&m.norm);
        for (auto& n : m.mlp.norm) out.push_back(&n);
    }
    return out;
}

Head::Module& Head::find(const std::string& name)
{
    for (auto& m : m_modules)
        if (m.name == name) return m;
    throw std::invalid_argument("module '" + name + "' is not enabled");
}

const Head::Module& Head::find(const std::string& name) const
{
    return const_cast<Head*>(this)->find(name);
}

const nn::Matrix& Head::raw(const std::string& module) const { return find(module).raw; }

void Head::set_raw(const std::string& module, const nn::Matrix& values)
{
    if (m_config.mode != HeadMode::Direct) throw std::logic_error("set_raw needs direct mode");
    Module& m = find(module);
    if (values.rows() != m.direct.value.rows() || values.cols() != m.direct.value.cols())
        throw std::invalid_argument("raw values for '" + module + "' have the wrong shape");
    m.direct.value = values;
}

} // namespace lbo
