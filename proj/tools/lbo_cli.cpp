// lbo: command-line front end for spectra, descriptors, gradient audits and
// training of modified Laplace-Beltrami operators.

#include <lbo/assembly.hpp>
#include <lbo/config_io.hpp>
#include <lbo/curvature.hpp>
#include <lbo/descriptors.hpp>
#include <lbo/eigensolver.hpp>
#include <lbo/errors.hpp>
#include <lbo/geometry.hpp>
#include <lbo/gradcheck.hpp>
#include <lbo/losses.hpp>
#include <lbo/manifest.hpp>
#include <lbo/mesh_io.hpp>
#include <lbo/shapes.hpp>
#include <lbo/train.hpp>

#include "CLI11.hpp"
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kNumerical = 3 };

struct Options {
    std::string mesh;
    std::string format = "auto";
    std::string out_dir = ".";
    std::string config;
    std::string data_dir;
    std::uint64_t seed = 1;
    std::vector<std::string> params;
    std::string mode = "isotropic";
    int k = 32;
    int skip = 1;
    std::string times;
    int count = 16;
    std::string families;
    int pairs = 16;
    int samples = 50;
    double corrupt = 0.0;
    std::string ladder;
    std::string checkpoint;
    std::string spec;
    std::string shape;
    std::string out;
    std::string labels_out;
};

class Clock {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - m_t0).count(); }

private:
    std::chrono::steady_clock::time_point m_t0 = std::chrono::steady_clock::now();
};

std::vector<std::string> split(const std::string& s, char sep = ',')
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> parse_doubles(const std::string& s)
{
    std::vector<double> out;
    for (const auto& t : split(s)) {
        try {
            out.push_back(std::stod(t));
        } catch (const std::exception&) {
            throw std::invalid_argument("not a number: '" + t + "'");
        }
    }
    return out;
}

lbo::Mesh load(const Options& o)
{
    if (o.mesh.empty()) throw std::invalid_argument("--mesh is required");
    return lbo::load_mesh(o.mesh, lbo::parse_mesh_format(o.format));
}

lbo::OperatorMode parse_mode(const std::string& m)
{
    if (m == "isotropic") return lbo::OperatorMode::Isotropic;
    if (m == "anisotropic") return lbo::OperatorMode::Anisotropic;
    throw std::invalid_argument("--mode must be isotropic or anisotropic");
}

lbo::EigenSystem spectrum(const lbo::Mesh& mesh, const Options& o, json& info)
{
    lbo::OperatorParams params = lbo::OperatorParams::identity(mesh);
    for (const auto& p : o.params) lbo::read_params_csv(p, mesh, params);
    const auto mode = parse_mode(o.mode);
    std::vector<lbo::FaceFrame> frames;
    if (mode == lbo::OperatorMode::Anisotropic) frames = lbo::curvature_frames(mesh).faces;
    const auto op = lbo::modified_operator(mesh, params, mode, frames);
    lbo::EigenOptions eo;
    eo.k = o.k;
    eo.skip = o.skip;
    eo.seed = o.seed;
    auto es = lbo::solve_gep(op.ops.W, op.ops.A, eo);
    info["vertices"] = mesh.num_vertices();
    info["retained"] = es.retained();
    info["max_residual"] = es.max_residual;
    info["metric_fix_steps"] = op.fix.tape.size();
    info["k_capped"] = es.capped;
    return es;
}

fs::path out_path(const Options& o, const std::string& name)
{
    fs::create_directories(o.out_dir);
    return fs::path(o.out_dir) / name;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

// ---- info -----------------------------------------------------------------

int cmd_info(const Options& o, lbo::RunManifest& m)
{
    const auto mesh = load(o);
    m.inputs.push_back(o.mesh);
    const auto geom = lbo::geometry(mesh);
    int obtuse = 0;
    for (const auto& t : geom.triangle)
        if (t.cot[0] < 0 || t.cot[1] < 0 || t.cot[2] < 0) ++obtuse;
    std::cout << "V=" << mesh.num_vertices() << " E=" << mesh.num_edges() << " F=" << mesh.num_faces()
              << " χ=" << mesh.euler_characteristic() << '\n'
              << "boundary_edges=" << mesh.num_boundary_edges() << '\n'
              << "components=" << mesh.num_components() << '\n'
              << "area=" << mesh.surface_area() << '\n'
              << "obtuse_fraction=" << static_cast<double>(obtuse) / mesh.num_faces() << '\n';
    return kOk;
}

// ---- spectrum / descriptors -------------------------------------------------

int cmd_spectrum(const Options& o, lbo::RunManifest& m)
{
    const auto mesh = load(o);
    m.inputs.push_back(o.mesh);
    for (const auto& p : o.params) m.inputs.push_back(p);
    json info;
    const auto es = spectrum(mesh, o, info);
    const auto path = out_path(o, "eigenvalues.csv");
    auto f = open_out(path);
    lbo::write_eigenvalues_csv(es, f);
    m.outputs.push_back(path.string());
    m.config["result"] = info;
    std::cout << "wrote " << es.retained() << " eigenvalues to " << path.string() << '\n';
    return kOk;
}

int cmd_descriptor(const Options& o, lbo::RunManifest& m, bool is_hks)
{
    const auto mesh = load(o);
    m.inputs.push_back(o.mesh);
    for (const auto& p : o.params) m.inputs.push_back(p);
    json info;
    const auto es = spectrum(mesh, o, info);
    lbo::Descriptor d;
    if (is_hks) {
        const auto times = o.times.empty() ? lbo::log_time_samples(es, o.count) : parse_doubles(o.times);
        d = lbo::hks(es, times);
    } else {
        d = lbo::gps(es, o.count);
    }
    const std::string stem = is_hks ? "hks" : "gps";
    const auto csv = out_path(o, stem + ".csv"), meta = out_path(o, stem + ".json");
    auto f = open_out(csv);
    lbo::write_descriptor_csv(d, f);
    auto g = open_out(meta);
    g << lbo::descriptor_metadata_json(d) << '\n';
    m.outputs = {csv.string(), meta.string()};
    m.config["result"] = info;
    std::cout << "wrote " << d.values.rows() << " x " << d.values.cols() << " " << stem << " to " << csv.string()
              << '\n';
    return kOk;
}

// ---- gradcheck ---------------------------------------------------------------

int cmd_gradcheck(const Options& o, lbo::RunManifest& m)
{
    const auto mesh = load(o);
    m.inputs.push_back(o.mesh);
    lbo::GradcheckOptions g;
    if (!o.families.empty()) {
        g.families.clear();
        for (const auto& f : split(o.families)) g.families.push_back(lbo::parse_family(f));
    }
    g.pairs = o.pairs;
    g.samples = o.samples;
    g.seed = o.seed;
    g.corrupt = o.corrupt;
    const auto report = lbo::run_gradcheck(mesh, g);
    json j = report.to_json();

    if (!o.ladder.empty()) {
        json ladder = json::array();
        for (const auto& f : split(o.ladder)) {
            const int freq = std::stoi(f);
            const auto t = lbo::time_reverse_gradient(lbo::shapes::geodesic_sphere(freq), 32, o.seed);
            ladder.push_back({{"vertices", t.vertices},
                              {"solve_seconds", t.solve_seconds},
                              {"backward_seconds", t.backward_seconds}});
            m.timings["ladder_" + std::to_string(t.vertices)] = t.backward_seconds;
        }
        j["timing_ladder"] = ladder;
    }

    const auto path = out_path(o, "gradcheck.json");
    auto f = open_out(path);
    f << j.dump(2) << '\n';
    m.outputs.push_back(path.string());
    std::cout << (report.passed ? "PASS" : "FAIL") << " gradcheck on " << report.vertices << " vertices, "
              << report.pairs.size() << " pairs, masked " << report.masked_pairs << ", "
              << report.seconds << " s\n";
    for (const auto& fr : report.families)
        std::cout << "  " << lbo::family_name(fr.family) << ": matrix " << fr.matrix_max << " eigen " << fr.eigen_max
                  << " loss " << fr.loss_max << '\n';
    for (const auto& msg : report.failures) std::cout << "  failure: " << msg << '\n';
    return report.passed ? kOk : kNumerical;
}

// ---- train / eval ------------------------------------------------------------

struct Task {
    json config;
    fs::path base;
    std::string kind;
    lbo::HeadConfig head;
    lbo::TrainConfig train;
    std::optional<lbo::shapes::LabeledMesh> mesh, target, test;
    double train_fraction = 1.0;
};

Task load_task(const Options& o)
{
    if (o.config.empty()) throw std::invalid_argument("--config is required");
    std::ifstream in(o.config);
    if (!in) throw std::invalid_argument("cannot read config " + o.config);
    Task t;
    t.config = json::parse(in);
    t.base = o.data_dir.empty() ? fs::path(o.config).parent_path() : fs::path(o.data_dir);
    t.kind = t.config.value("task", "alignment");
    t.head = lbo::head_config_from_json(t.config.value("head", json::object()));
    json tj = t.config.value("train", json::object());
    if (!tj.contains("loss")) {
        static const std::map<std::string, std::string> loss_for = {{"alignment", "spectral_alignment"},
                                                                    {"segmentation", "segmentation_ce"},
                                                                    {"descriptor", "descriptor_distance"},
                                                                    {"triplet", "triplet"}};
        const auto it = loss_for.find(t.kind);
        if (it == loss_for.end()) throw std::invalid_argument("unknown task '" + t.kind + "'");
        tj["loss"] = it->second;
    }
    t.train = lbo::train_config_from_json(tj);
    if (o.seed != 0 && !tj.contains("seed")) t.train.seed = o.seed;
    t.train_fraction = t.config.value("train_fraction", 1.0);
    if (!(t.train_fraction > 0.0 && t.train_fraction <= 1.0))
        throw std::invalid_argument("train_fraction must be in (0, 1]");
    if (!t.config.contains("mesh")) throw std::invalid_argument("config needs a mesh");
    t.mesh = lbo::mesh_from_spec(t.config["mesh"], t.base);
    if (t.config.contains("target")) t.target = lbo::mesh_from_spec(t.config["target"], t.base);
    if (t.config.contains("test_mesh")) t.test = lbo::mesh_from_spec(t.config["test_mesh"], t.base);
    return t;
}

std::vector<int> train_rows(const Task& t)
{
    const int n = t.mesh->mesh.num_vertices();
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (t.train_fraction >= 1.0) return idx;
    std::mt19937_64 rng(t.train.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::max(1, static_cast<int>(t.train_fraction * n)));
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<int> held_out_rows(const Task& t)
{
    const auto tr = train_rows(t);
    std::vector<char> used(t.mesh->mesh.num_vertices(), 0);
    for (int r : tr) used[r] = 1;
    std::vector<int> out;
    for (int v = 0; v < static_cast<int>(used.size()); ++v)
        if (!used[v]) out.push_back(v);
    return out;
}

/// Pipeline on the training mesh with its objective attached.
std::unique_ptr<lbo::Pipeline> make_pipeline(const Task& t)
{
    auto p = std::make_unique<lbo::Pipeline>(t.mesh->mesh, t.head, t.train);
    auto need_target = [&]() -> const lbo::Mesh& {
        if (!t.target) throw std::invalid_argument("task '" + t.kind + "' needs a target mesh");
        return t.target->mesh;
    };
    switch (t.train.loss) {
    case lbo::LossKind::SpectralAlignment:
        p->set_alignment_target(lbo::baseline_spectrum(need_target(), p->eigen_options()));
        break;
    case lbo::LossKind::SegmentationCe:
        if (t.mesh->labels.empty()) throw std::invalid_argument("segmentation needs per-vertex labels");
        p->set_segmentation(t.mesh->labels, train_rows(t));
        break;
    case lbo::LossKind::DescriptorDistance:
    case lbo::LossKind::Triplet: {
        lbo::HeadConfig none;
        lbo::Pipeline other(need_target(), none, t.train);
        other.set_hks_times(p->hks_times());
        const Eigen::MatrixXd target = other.log_hks();
        if (t.train.loss == lbo::LossKind::Triplet) p->set_triplet_target(target);
        else p->set_descriptor_target(target);
        break;
    }
    }
    return p;
}

/// Pipeline on another mesh sharing the trained state. Direct-mode operator
/// parameters belong to the training mesh, so other meshes use the identity.
std::unique_ptr<lbo::Pipeline> transfer(const Task& t, lbo::Pipeline& trained, const lbo::shapes::LabeledMesh& lm)
{
    lbo::TrainConfig cfg = t.train;
    if (cfg.loss != lbo::LossKind::SegmentationCe || lm.labels.empty()) cfg.loss = lbo::LossKind::SpectralAlignment;
    const bool mlp = t.head.mode == lbo::HeadMode::Mlp;
    auto q = std::make_unique<lbo::Pipeline>(lm.mesh, mlp ? t.head : lbo::HeadConfig{}, cfg);
    if (cfg.loss == lbo::LossKind::SegmentationCe) {
        std::vector<int> all(lm.mesh.num_vertices());
        std::iota(all.begin(), all.end(), 0);
        q->set_segmentation(lm.labels, all);
        q->copy_state_from(trained, mlp);
    } else if (mlp) {
        for (auto [a, b] : {std::pair{q->head_tensors(), trained.head_tensors()}})
            for (size_t i = 0; i < a.size(); ++i) a[i]->value = b[i]->value;
        auto qb = q->buffers(), tb = trained.buffers();
        for (size_t i = 0; i < qb.size() && i < tb.size(); ++i) *qb[i].second = *tb[i].second;
    }
    q->set_hks_times(trained.hks_times());
    return q;
}

json task_summary(const Task& t)
{
    return {{"task", t.kind},
            {"vertices", t.mesh->mesh.num_vertices()},
            {"head", lbo::to_json(t.head)},
            {"train", lbo::to_json(t.train)},
            {"train_fraction", t.train_fraction}};
}

int cmd_train(const Options& o, lbo::RunManifest& m)
{
    Clock clock;
    Task t = load_task(o);
    m.inputs.push_back(o.config);
    m.config = t.config;
    m.seed = t.train.seed;
    auto p = make_pipeline(t);
    m.timings["setup_seconds"] = clock.seconds();

    lbo::TrainResult r;
    if (t.train.epochs > 0) {
        r = lbo::train(*p, t.train);
    } else {
        r.initial_loss = r.final_loss = p->evaluate(true, false).loss;
    }
    m.timings["train_seconds"] = clock.seconds() - m.timings["setup_seconds"].get<double>();

    const auto prefix = out_path(o, "checkpoint");
    json extra = task_summary(t);
    extra["hks_times"] = p->hks_times();
    lbo::save_checkpoint(prefix.string(), *p, extra.dump());
    const auto metrics = out_path(o, "metrics.csv");
    auto f = open_out(metrics);
    lbo::write_metric_csv(r.log, f);
    json summary = {{"initial_loss", r.initial_loss},
                    {"final_loss", r.final_loss},
                    {"reduction", r.initial_loss > 0 ? 1.0 - r.final_loss / r.initial_loss : 0.0},
                    {"steps", r.log.size()},
                    {"skipped_steps", std::count_if(r.log.begin(), r.log.end(), [](auto& s) { return s.skipped; })},
                    {"aborted", r.aborted}};
    const auto sp = out_path(o, "train_summary.json");
    auto g = open_out(sp);
    g << summary.dump(2) << '\n';
    m.outputs = {prefix.string() + ".bin", prefix.string() + ".json", metrics.string(), sp.string()};
    std::cout << "loss " << r.initial_loss << " -> " << r.final_loss << " over " << r.log.size() << " steps"
              << (r.aborted ? " (aborted)" : "") << '\n';
    return r.aborted ? kNumerical : kOk;
}

int cmd_eval(const Options& o, lbo::RunManifest& m)
{
    Task t = load_task(o);
    m.inputs.push_back(o.config);
    m.config = t.config;
    m.seed = t.train.seed;
    auto p = make_pipeline(t);
    const std::string prefix = o.checkpoint.empty() ? (fs::path(o.out_dir) / "checkpoint").string() : o.checkpoint;
    lbo::load_checkpoint(prefix, *p);
    m.inputs.push_back(prefix + ".bin");
    {
        std::ifstream js(prefix + ".json");
        const json manifest = json::parse(js);
        if (manifest.contains("extra") && manifest["extra"].contains("hks_times"))
            p->set_hks_times(manifest["extra"]["hks_times"].get<std::vector<double>>());
    }

    json result = task_summary(t);
    result["loss"] = p->evaluate(false, false).loss;

    struct Entry {
        std::string name;
        Eigen::RowVectorXd pooled;
    };
    std::vector<Entry> pooled;
    auto pool = [&](const std::string& name, lbo::Pipeline& q) {
        lbo::Descriptor d;
        d.values = q.log_hks(false);
        pooled.push_back({name, lbo::average_pool(d)});
    };
    pool("mesh", *p);

    if (p->has_classifier()) {
        result["train_accuracy"] = p->accuracy(train_rows(t));
        if (const auto held = held_out_rows(t); !held.empty()) result["held_out_accuracy"] = p->accuracy(held);
    }
    if (t.test) {
        auto q = transfer(t, *p, *t.test);
        pool("test_mesh", *q);
        if (q->has_classifier()) {
            std::vector<int> all(t.test->mesh.num_vertices());
            std::iota(all.begin(), all.end(), 0);
            result["test_accuracy"] = q->accuracy(all);
        }
    }
    if (t.target) {
        auto q = transfer(t, *p, *t.target);
        pool("target", *q);
    }

    Eigen::MatrixXd P(pooled.size(), pooled.front().pooled.size());
    for (size_t i = 0; i < pooled.size(); ++i) P.row(i) = pooled[i].pooled;
    const Eigen::MatrixXd D = lbo::pairwise_distances(P);

    const auto pp = out_path(o, "pooled.csv"), dp = out_path(o, "distances.csv"), ep = out_path(o, "eval.json");
    auto f = open_out(pp);
    f.precision(17);
    f << "name";
    for (Eigen::Index c = 0; c < P.cols(); ++c) f << ",hks_" << c;
    f << '\n';
    for (const auto& e : pooled) {
        f << e.name;
        for (Eigen::Index c = 0; c < e.pooled.size(); ++c) f << ',' << e.pooled(c);
        f << '\n';
    }
    auto g = open_out(dp);
    g.precision(17);
    g << "name";
    for (const auto& e : pooled) g << ',' << e.name;
    g << '\n';
    for (size_t i = 0; i < pooled.size(); ++i) {
        g << pooled[i].name;
        for (size_t j = 0; j < pooled.size(); ++j) g << ',' << D(i, j);
        g << '\n';
    }
    auto h = open_out(ep);
    h << result.dump(2) << '\n';
    m.outputs = {pp.string(), dp.string(), ep.string()};
    std::cout << result.dump(2) << '\n';
    return kOk;
}

// ---- generate ----------------------------------------------------------------

int cmd_generate(const Options& o, lbo::RunManifest& m)
{
    json spec;
    if (!o.spec.empty()) spec = json::parse(o.spec);
    else if (!o.shape.empty()) spec = {{"shape", o.shape}};
    else throw std::invalid_argument("generate needs --spec or --shape");
    m.config = spec;
    const auto lm = lbo::mesh_from_spec(spec);
    if (o.out.empty()) throw std::invalid_argument("--out is required");
    lbo::save_off(lm.mesh, o.out);
    m.outputs.push_back(o.out);
    if (!o.labels_out.empty()) {
        if (lm.labels.empty()) throw std::invalid_argument("shape has no labels");
        auto f = open_out(o.labels_out);
        for (int l : lm.labels) f << l << '\n';
        m.outputs.push_back(o.labels_out);
    }
    std::cout << "wrote " << lm.mesh.num_vertices() << " vertices to " << o.out << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Learned Laplace-Beltrami operators: spectra, descriptors, gradient audits and training"};
    app.require_subcommand(1);
    Options o;

    auto add_mesh = [&](CLI::App* c) {
        c->add_option("--mesh", o.mesh, "Input mesh (OFF, OBJ or ASCII PLY)")->required();
        c->add_option("--format", o.format, "auto, off, obj or ply");
    };
    auto add_out = [&](CLI::App* c) { c->add_option("--out-dir", o.out_dir, "Output directory"); };
    auto add_op = [&](CLI::App* c) {
        c->add_option("--params", o.params, "Per-element parameter CSV (repeatable)");
        c->add_option("--mode", o.mode, "isotropic or anisotropic");
        c->add_option("--k", o.k, "Eigenpairs to keep");
        c->add_option("--skip", o.skip, "Lowest pairs to drop");
        c->add_option("--seed", o.seed, "Random seed");
    };

    auto* info = app.add_subcommand("info", "Mesh statistics");
    add_mesh(info);
    add_out(info);

    auto* spec = app.add_subcommand("spectrum", "Eigenvalues of the (modified) operator");
    add_mesh(spec);
    add_out(spec);
    add_op(spec);

    auto* hks = app.add_subcommand("hks", "Heat kernel signature");
    add_mesh(hks);
    add_out(hks);
    add_op(hks);
    hks->add_option("--times", o.times, "Comma-separated diffusion times (default: log-spaced)");
    hks->add_option("--n", o.count, "Number of log-spaced times when --times is absent");

    auto* gps = app.add_subcommand("gps", "Global point signature");
    add_mesh(gps);
    add_out(gps);
    add_op(gps);
    gps->add_option("--n", o.count, "Number of components");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference audit of the operator gradients");
    add_mesh(gc);
    add_out(gc);
    gc->add_option("--families", o.families, "Comma list of edge, a1, a2, theta, vertex");
    gc->add_option("--pairs", o.pairs, "Non-degenerate eigenpairs to check");
    gc->add_option("--samples", o.samples, "Random parameters per family");
    gc->add_option("--seed", o.seed, "Random seed");
    gc->add_option("--ladder", o.ladder, "Comma list of geodesic-sphere frequencies to time");
    gc->add_option("--corrupt", o.corrupt, "Test hook: relative error injected into analytic derivatives")
        ->group("");

    auto* tr = app.add_subcommand("train", "Train a parameter head from a JSON config");
    tr->add_option("--config", o.config, "Task configuration (JSON)")->required();
    tr->add_option("--data-dir", o.data_dir, "Base directory for relative mesh paths");
    tr->add_option("--seed", o.seed, "Seed when the config does not set one");
    add_out(tr);

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    ev->add_option("--config", o.config, "Task configuration (JSON)")->required();
    ev->add_option("--data-dir", o.data_dir, "Base directory for relative mesh paths");
    ev->add_option("--checkpoint", o.checkpoint, "Checkpoint prefix (default <out-dir>/checkpoint)");
    ev->add_option("--seed", o.seed, "Seed when the config does not set one");
    add_out(ev);

    auto* gen = app.add_subcommand("generate", "Write a procedural test shape as OFF");
    gen->add_option("--spec", o.spec, "JSON shape spec, e.g. {\"shape\":\"icosphere\",\"level\":3}");
    gen->add_option("--shape", o.shape, "Shape name with default arguments");
    gen->add_option("--out", o.out, "Output OFF path");
    gen->add_option("--labels-out", o.labels_out, "Per-vertex labels for labeled shapes");
    gen->add_option("--out-dir", o.out_dir, "Directory for the run manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    CLI::App* cmd = app.get_subcommands().front();
    lbo::RunManifest manifest;
    manifest.command = cmd->get_name();
    manifest.seed = o.seed;
    if (manifest.config.empty() || manifest.config.is_object()) {
        manifest.config["mode"] = o.mode;
        manifest.config["k"] = o.k;
        manifest.config["skip"] = o.skip;
    }
    Clock clock;
    int code = kOk;
    try {
        const std::string name = cmd->get_name();
        if (name == "info") code = cmd_info(o, manifest);
        else if (name == "spectrum") code = cmd_spectrum(o, manifest);
        else if (name == "hks") code = cmd_descriptor(o, manifest, true);
        else if (name == "gps") code = cmd_descriptor(o, manifest, false);
        else if (name == "gradcheck") code = cmd_gradcheck(o, manifest);
        else if (name == "train") code = cmd_train(o, manifest);
        else if (name == "eval") code = cmd_eval(o, manifest);
        else code = cmd_generate(o, manifest);
    } catch (const lbo::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        code = kNumerical;
    } catch (const lbo::MeshError& e) {
        std::cerr << "invalid mesh: " << e.what() << '\n';
        code = kInput;
    } catch (const json::exception& e) {
        std::cerr << "invalid JSON: " << e.what() << '\n';
        code = kInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        code = kInput;
    }

    manifest.wall_seconds = clock.seconds();
    manifest.exit_code = code;
    try {
        manifest.write(o.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "could not write run manifest: " << e.what() << '\n';
        if (code == kOk) code = kInput;
    }
    return code;
}
