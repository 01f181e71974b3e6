#include <lbo/config_io.hpp>

#include <lbo/mesh_io.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lbo {

using nlohmann::json;

HeadConfig head_config_from_json(const json& j)
{
    HeadConfig c;
    const std::string mode = j.value("mode", "direct");
    if (mode == "direct") c.mode = HeadMode::Direct;
    else if (mode == "mlp") c.mode = HeadMode::Mlp;
    else throw std::invalid_argument("head mode must be direct or mlp, got '" + mode + "'");
    for (const auto& m : j.value("modules", std::vector<std::string>{})) c.enable(m);
    c.k = j.value("k", c.k);
    c.widths = j.value("widths", c.widths);
    c.slope = j.value("slope", c.slope);
    c.normalize_features = j.value("normalize_features", c.normalize_features);
    const std::string agg = j.value("aggregation", "max");
    if (agg == "max") c.aggregation = nn::Aggregation::Max;
    else if (agg == "mean") c.aggregation = nn::Aggregation::Mean;
    else throw std::invalid_argument("aggregation must be max or mean");
    c.validate();
    return c;
}

json to_json(const HeadConfig& c)
{
    return {{"mode", c.mode == HeadMode::Direct ? "direct" : "mlp"},
            {"modules", c.modules()},
            {"k", c.k},
            {"widths", c.widths},
            {"slope", c.slope},
            {"normalize_features", c.normalize_features},
            {"aggregation", c.aggregation == nn::Aggregation::Max ? "max" : "mean"}};
}

TrainConfig train_config_from_json(const json& j)
{
    TrainConfig c;
    if (j.contains("loss")) c.loss = parse_loss(j["loss"].get<std::string>());
    c.lr = j.value("lr", c.lr);
    c.classifier_lr = j.value("classifier_lr", c.classifier_lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.epochs = j.value("epochs", c.epochs);
    c.clip = j.value("clip", c.clip);
    c.k = j.value("k", c.k);
    c.skip = j.value("skip", c.skip);
    if (j.contains("band")) {
        const auto b = j["band"].get<std::vector<int>>();
        if (b.size() != 2) throw std::invalid_argument("band must be [first, last]");
        c.band_first = b[0];
        c.band_last = b[1];
    }
    c.hks_times = j.value("hks_times", c.hks_times);
    c.classifier_widths = j.value("classifier_widths", c.classifier_widths);
    c.pretrain = j.value("pretrain", c.pretrain);
    c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
    c.straight_through = j.value("straight_through", c.straight_through);
    c.abort_after_increases = j.value("abort_after_increases", c.abort_after_increases);
    c.triplet_margin = j.value("triplet_margin", c.triplet_margin);
    c.triplets_per_step = j.value("triplets_per_step", c.triplets_per_step);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

json to_json(const TrainConfig& c)
{
    return {{"loss", loss_name(c.loss)},
            {"lr", c.lr},
            {"classifier_lr", c.classifier_lr},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"epochs", c.epochs},
            {"clip", c.clip},
            {"k", c.k},
            {"skip", c.skip},
            {"band", {c.band_first, c.band_last}},
            {"hks_times", c.hks_times},
            {"classifier_widths", c.classifier_widths},
            {"pretrain", c.pretrain},
            {"pretrain_epochs", c.pretrain_epochs},
            {"straight_through", c.straight_through},
            {"abort_after_increases", c.abort_after_increases},
            {"triplet_margin", c.triplet_margin},
            {"triplets_per_step", c.triplets_per_step},
            {"seed", c.seed}};
}

namespace {

std::vector<int> read_labels(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read labels file " + path.string());
    std::vector<int> out;
    int v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) throw std::invalid_argument("labels file " + path.string() + " has a non-integer entry");
    return out;
}

shapes::LabeledMesh generate(const json& s)
{
    const std::string name = s.at("shape").get<std::string>();
    if (name == "single_triangle") return {shapes::single_triangle(s.value("side", 1.0)), {}};
    if (name == "strip") return {shapes::strip(), {}};
    if (name == "tetrahedron") return {shapes::regular_tetrahedron(), {}};
    if (name == "icosahedron") return {shapes::icosahedron(), {}};
    if (name == "icosphere") return {shapes::icosphere(s.value("level", 3)), {}};
    if (name == "geodesic_sphere") return {shapes::geodesic_sphere(s.value("frequency", 7)), {}};
    if (name == "grid") return {shapes::grid(s.value("nx", 10), s.value("ny", 10), s.value("size", 1.0)), {}};
    if (name == "cylinder")
        return {shapes::cylinder(s.value("radius", 1.0), s.value("height", 2.0), s.value("rings", 10),
                                 s.value("segments", 24)),
                {}};
    if (name == "torus")
        return {shapes::torus(s.value("major", 1.0), s.value("minor", 0.4), s.value("nu", 24), s.value("nv", 12)), {}};
    if (name == "sphere_on_cylinder")
        return shapes::sphere_on_cylinder(s.value("profile_points", 20), s.value("segments", 44),
                                          s.value("sphere_radius", 1.0), s.value("cylinder_radius", 0.85),
                                          s.value("cylinder_length", 2.0));
    throw std::invalid_argument("unknown shape '" + name + "'");
}

} // namespace

shapes::LabeledMesh mesh_from_spec(const json& spec, const std::filesystem::path& base)
{
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() || base.empty() ? path : base / path;
    };
    if (spec.is_string()) return {load_mesh(resolve(spec.get<std::string>()).string()), {}};
    if (!spec.is_object()) throw std::invalid_argument("mesh spec must be a path or an object");

    shapes::LabeledMesh out = spec.contains("path")
                                  ? shapes::LabeledMesh{load_mesh(resolve(spec["path"].get<std::string>()).string(),
                                                                  parse_mesh_format(spec.value("format", "auto"))),
                                                        {}}
                                  : generate(spec);
    if (spec.value("jitter", 0.0) > 0.0)
        out.mesh = shapes::jitter(out.mesh, spec["jitter"].get<double>(), spec.value("jitter_seed", 1ULL),
                                  spec.value("project", false));
    if (spec.contains("scale")) {
        const auto sc = spec["scale"].get<std::vector<double>>();
        if (sc.size() != 3) throw std::invalid_argument("scale must have three entries");
        out.mesh = shapes::transformed(out.mesh, Eigen::Vector3d(sc[0], sc[1], sc[2]).asDiagonal(),
                                       Eigen::Vector3d::Zero());
    }
    if (spec.contains("labels")) out.labels = read_labels(resolve(spec["labels"].get<std::string>()));
    if (!out.labels.empty() && static_cast<int>(out.labels.size()) != out.mesh.num_vertices())
        throw std::invalid_argument("labels do not match the vertex count");
    return out;
}

void read_params_csv(const std::string& path, const Mesh& mesh, OperatorParams& params)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read params file " + path);
    std::string header;
    std::getline(in, header);
    while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) header.pop_back();

    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": not a number '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }

    auto expect = [&](size_t count, size_t cols, const char* what) {
        if (rows.size() != count)
            throw std::invalid_argument(path + ": expected " + std::to_string(count) + " rows (one per " + what +
                                        "), found " + std::to_string(rows.size()));
        for (size_t r = 0; r < rows.size(); ++r)
            if (rows[r].size() != cols)
                throw std::invalid_argument(path + ": row " + std::to_string(r + 2) + " needs " +
                                            std::to_string(cols) + " values");
    };
    if (params.edge_log_scale.empty()) params = OperatorParams::identity(mesh);
    if (header == "edge_log_scale") {
        expect(mesh.num_edges(), 1, "edge");
        for (size_t e = 0; e < rows.size(); ++e) params.edge_log_scale[e] = rows[e][0];
    } else if (header == "vertex_log_weight") {
        expect(mesh.num_vertices(), 1, "vertex");
        for (size_t v = 0; v < rows.size(); ++v) params.vertex_log_weight[v] = rows[v][0];
    } else if (header == "a1,a2,theta") {
        expect(mesh.num_faces(), 3, "face");
        for (size_t f = 0; f < rows.size(); ++f) params.face_aniso[f] = {rows[f][0], rows[f][1], rows[f][2]};
    } else {
        throw std::invalid_argument(path + ": header must be edge_log_scale, vertex_log_weight or a1,a2,theta");
    }
    params.validate(mesh);
}

void write_params_csv(const std::string& path, const OperatorParams& p, const std::string& family)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    if (family == "edge_log_scale") {
        out << "edge_log_scale\n";
        for (double x : p.edge_log_scale) out << x << '\n';
    } else if (family == "vertex_log_weight") {
        out << "vertex_log_weight\n";
        for (double x : p.vertex_log_weight) out << x << '\n';
    } else if (family == "a1,a2,theta") {
        out << "a1,a2,theta\n";
        for (const auto& a : p.face_aniso) out << a.a1 << ',' << a.a2 << ',' << a.theta << '\n';
    } else {
        throw std::invalid_argument("unknown params family '" + family + "'");
    }
}

} // namespace lbo
