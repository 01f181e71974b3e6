#include <lbo/train.hpp>

#include <lbo/errors.hpp>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace lbo {

namespace {

constexpr double kLogFloor = 1e-12; // log(h + floor) keeps the classifier input finite

double family_norm(const std::vector<double>& g)
{
    double s = 0.0;
    for (double x : g) s += x * x;
    return std::sqrt(s);
}

} // namespace

std::string loss_name(LossKind kind)
{
    switch (kind) {
    case LossKind::SegmentationCe: return "segmentation_ce";
    case LossKind::Triplet: return "triplet";
    case LossKind::SpectralAlignment: return "spectral_alignment";
    case LossKind::DescriptorDistance: return "descriptor_distance";
    }
    return "?";
}

LossKind parse_loss(const std::string& name)
{
    for (auto k : {LossKind::SegmentationCe, LossKind::Triplet, LossKind::SpectralAlignment,
                   LossKind::DescriptorDistance})
        if (loss_name(k) == name) return k;
    throw std::invalid_argument("unknown loss '" + name + "'");
}

void TrainConfig::validate() const
{
    if (lr < 0.0 || !(classifier_lr > 0.0)) throw std::invalid_argument("step size must be positive");
    if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
    if (k < 1 || skip < 0) throw std::invalid_argument("eigen count must be positive");
    if (band_first < 1 || band_last < band_first || band_last > k + skip)
        throw std::invalid_argument("alignment band must lie within the computed eigenvalues");
    if (band_first <= skip) throw std::invalid_argument("alignment band must start after the skipped pairs");
    if (hks_times < 1) throw std::invalid_argument("need at least one HKS time");
    if (pretrain_epochs < 0) throw std::invalid_argument("pretrain epochs must be nonnegative");
}

Eigen::VectorXd baseline_spectrum(const Mesh& mesh, const EigenOptions& options)
{
    const auto op = modified_operator(mesh, OperatorParams::identity(mesh), OperatorMode::Isotropic);
    return solve_gep(op.ops.W, op.ops.A, options).values;
}

Pipeline::Pipeline(const Mesh& mesh, const HeadConfig& head, const TrainConfig& config)
    : m_mesh(&mesh),
      m_head_config(head),
      m_config(config),
      m_curvature(curvature_frames(mesh)),
      m_head(mesh, intrinsic_features(mesh, m_curvature), head, config.seed),
      m_rng(config.seed ^ 0x7f4a7c15ULL)
{
    m_config.validate();
    const auto op = modified_operator(mesh, OperatorParams::identity(mesh), OperatorMode::Isotropic);
    m_times = log_time_samples(solve_gep(op.ops.W, op.ops.A, eigen_options()), m_config.hks_times);
}

EigenOptions Pipeline::eigen_options() const
{
    EigenOptions o;
    o.k = m_config.k;
    o.skip = m_config.skip;
    return o;
}

void Pipeline::set_alignment_target(const Eigen::VectorXd& values)
{
    if (values.size() < m_config.band_last) throw std::invalid_argument("alignment target shorter than the band");
    m_align_target = values;
}

void Pipeline::set_segmentation(std::vector<int> labels, std::vector<int> train_rows)
{
    if (static_cast<int>(labels.size()) != m_mesh->num_vertices())
        throw std::invalid_argument("one label per vertex required");
    if (train_rows.empty()) throw std::invalid_argument("no training vertices");
    const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
    m_labels = std::move(labels);
    m_train_rows = std::move(train_rows);
    std::mt19937_64 rng(m_config.seed * 0x9e3779b97f4a7c15ULL + 11);
    m_classifier.emplace("classifier", m_config.hks_times, m_config.classifier_widths, std::max(classes, 2),
                         m_head_config.slope);
    m_classifier->init_uniform(rng);
}

void Pipeline::set_descriptor_target(const Eigen::MatrixXd& target)
{
    if (target.rows() != m_mesh->num_vertices() || target.cols() != m_config.hks_times)
        throw std::invalid_argument("descriptor target must be vertices x HKS times");
    m_descriptor_target = target;
}

void Pipeline::set_triplet_target(const Eigen::MatrixXd& other)
{
    if (other.rows() != m_mesh->num_vertices() || other.cols() != m_config.hks_times)
        throw std::invalid_argument("triplet target must be vertices x HKS times");
    m_triplet_other = other;
    resample_triplets();
}

void Pipeline::resample_triplets()
{
    if (m_triplet_other.size() == 0) return;
    const int n = m_mesh->num_vertices();
    std::uniform_int_distribution<int> pick(0, n - 1);
    m_triplets.clear();
    for (int t = 0; t < m_config.triplets_per_step; ++t) {
        const int a = pick(m_rng);
        int b = pick(m_rng);
        while (b == a) b = pick(m_rng);
        m_triplets.emplace_back(a, b);
    }
}

std::vector<nn::Tensor*> Pipeline::classifier_tensors()
{
    if (!m_classifier) return {};
    return m_classifier->tensors();
}

std::vector<std::pair<std::string, nn::Vector*>> Pipeline::buffers()
{
    auto out = m_head.buffers();
    if (m_classifier) {
        for (size_t l = 0; l < m_classifier->norm.size(); ++l) {
            const std::string base = "classifier.bn" + std::to_string(l);
            out.emplace_back(base + ".running_mean", &m_classifier->norm[l].running_mean);
            out.emplace_back(base + ".running_var", &m_classifier->norm[l].running_var);
        }
    }
    return out;
}

void Pipeline::zero_grad()
{
    for (auto* t : head_tensors()) t->zero_grad();
    for (auto* t : classifier_tensors()) t->zero_grad();
}

void Pipeline::set_hks_times(std::vector<double> times)
{
    if (static_cast<int>(times.size()) != m_config.hks_times)
        throw std::invalid_argument("expected " + std::to_string(m_config.hks_times) + " HKS times");
    m_times = std::move(times);
}

void Pipeline::copy_state_from(Pipeline& other, bool include_head)
{
    std::vector<nn::Tensor*> mine, theirs;
    if (include_head) {
        mine = head_tensors();
        theirs = other.head_tensors();
    }
    for (auto* t : classifier_tensors()) mine.push_back(t);
    for (auto* t : other.classifier_tensors()) theirs.push_back(t);
    if (mine.size() != theirs.size()) throw std::invalid_argument("pipelines have different tensor sets");
    for (size_t i = 0; i < mine.size(); ++i) {
        if (mine[i]->name != theirs[i]->name || mine[i]->value.rows() != theirs[i]->value.rows() ||
            mine[i]->value.cols() != theirs[i]->value.cols())
            throw std::invalid_argument("tensor '" + mine[i]->name + "' does not match");
        mine[i]->value = theirs[i]->value;
    }
    auto mb = include_head ? buffers() : std::vector<std::pair<std::string, nn::Vector*>>{};
    auto tb = include_head ? other.buffers() : std::vector<std::pair<std::string, nn::Vector*>>{};
    if (!include_head && m_classifier && other.m_classifier)
        for (size_t l = 0; l < m_classifier->norm.size(); ++l) {
            m_classifier->norm[l].running_mean = other.m_classifier->norm[l].running_mean;
            m_classifier->norm[l].running_var = other.m_classifier->norm[l].running_var;
        }
    if (mb.size() != tb.size()) throw std::invalid_argument("pipelines have different buffers");
    for (size_t i = 0; i < mb.size(); ++i) *mb[i].second = *tb[i].second;
    m_times = other.m_times;
}

void Pipeline::calibrate_normalization()
{
    auto layers = m_head.norms();
    if (m_classifier)
        for (auto& n : m_classifier->norm) layers.push_back(&n);
    if (layers.empty()) return;
    std::vector<double> saved;
    for (auto* n : layers) {
        saved.push_back(n->momentum);
        n->momentum = 1.0;
    }
    evaluate(true, false);
    for (size_t i = 0; i < layers.size(); ++i) layers[i]->momentum = saved[i];
}

void Pipeline::solve(bool training)
{
    m_params = m_head.forward(training);
    m_op = modified_operator(*m_mesh, m_params, m_head_config.operator_mode(), m_curvature.faces);
    m_es = solve_gep(m_op->ops.W, m_op->ops.A, eigen_options());
}

Eigen::MatrixXd Pipeline::log_hks(bool training)
{
    solve(training);
    return (hks(m_es, m_times).values.array() + kLogFloor).log().matrix();
}

double Pipeline::accuracy(std::span<const int> rows)
{
    if (!m_classifier) throw std::logic_error("accuracy needs a segmentation classifier");
    const Eigen::MatrixXd logits = m_classifier->forward(log_hks(false), false);
    int correct = 0;
    for (int r : rows) {
        Eigen::Index best;
        logits.row(r).maxCoeff(&best);
        if (best == m_labels[r]) ++correct;
    }
    return rows.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(rows.size());
}

Pipeline::Evaluation Pipeline::evaluate(bool training, bool backward, bool update_operator, bool clip)
{
    solve(training);
    const int n = m_mesh->num_vertices();
    const int kept = m_es.retained();
    Evaluation ev;
    SpectralCotangent ct = SpectralCotangent::zeros(n, kept);

    if (m_config.loss == LossKind::SpectralAlignment) {
        if (m_align_target.size() == 0) throw std::logic_error("alignment target not set");
        const int first = m_config.band_first - 1;
        const int len = m_config.band_last - m_config.band_first + 1;
        if (m_es.values.size() < m_config.band_last) throw NumericalError("too few eigenvalues for the band");
        const auto al = spectral_alignment(m_es.values.segment(first, len), m_align_target.segment(first, len));
        ev.loss = al.value;
        for (int i = 0; i < len; ++i) ct.d_values(first + i - m_es.skip) = al.d_a(i);
        const Eigen::Index beyond = std::min<Eigen::Index>(m_es.values.size(), m_align_target.size()) - m_config.band_last;
        if (beyond > 0)
            ev.diagnostic = (m_es.values.segment(m_config.band_last, beyond) -
                             m_align_target.segment(m_config.band_last, beyond)).squaredNorm();
    } else {
        const Eigen::MatrixXd H = hks(m_es, m_times).values;
        const Eigen::MatrixXd L = (H.array() + kLogFloor).log().matrix();
        Eigen::MatrixXd dL;
        switch (m_config.loss) {
        case LossKind::SegmentationCe: {
            if (!m_classifier) throw std::logic_error("segmentation labels not set");
            const Eigen::MatrixXd logits = m_classifier->forward(L, training);
            auto ce = softmax_cross_entropy(logits, m_labels, m_train_rows);
            ev.loss = ce.value;
            if (backward) dL = m_classifier->backward(ce.grad);
            break;
        }
        case LossKind::DescriptorDistance: {
            if (m_descriptor_target.size() == 0) throw std::logic_error("descriptor target not set");
            auto dd = descriptor_distance(L, m_descriptor_target);
            ev.loss = dd.value;
            dL = dd.grad;
            break;
        }
        case LossKind::Triplet: {
            if (m_triplets.empty()) throw std::logic_error("triplet target not set");
            dL = Eigen::MatrixXd::Zero(L.rows(), L.cols());
            const double inv = 1.0 / static_cast<double>(m_triplets.size());
            for (auto [a, b] : m_triplets) {
                auto tl = triplet_loss(L.row(a).transpose(), m_triplet_other.row(a).transpose(),
                                       m_triplet_other.row(b).transpose(), m_config.triplet_margin);
                ev.loss += tl.value * inv;
                dL.row(a) += inv * tl.d_anchor.transpose();
            }
            break;
        }
        default: break;
        }
        if (backward && update_operator) {
            ct = hks_pullback(m_es, m_times, (dL.array() / (H.array() + kLogFloor)).matrix());
        }
    }

    if (backward && update_operator && !m_head_config.modules().empty()) {
        auto bundle = reverse_gradient(*m_mesh, *m_op, m_params, m_curvature.faces, m_es, ct, m_config.straight_through);
        ev.raw_grad = bundle.params;
        ev.masked_pairs = bundle.op.masked_pairs;
        ParamGradient g = bundle.params;
        if (clip && m_config.clip > 0.0) clip_gradients(g, m_config.clip);
        m_head.backward(g);
    } else {
        ev.raw_grad = ParamGradient::zeros(*m_mesh);
    }
    return ev;
}

TrainResult train(Pipeline& pipe, const TrainConfig& cfg)
{
    cfg.validate();
    TrainResult result;
    nn::Adam head_opt(pipe.head_tensors(), cfg.head_lr(pipe.head().config().mode), cfg.beta1, cfg.beta2, cfg.adam_eps);
    nn::Adam cls_opt(pipe.classifier_tensors(), cfg.classifier_lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

    double prev = std::numeric_limits<double>::infinity();
    int increases = 0;
    bool first = true;
    for (int step = 0; step < cfg.epochs; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        StepRecord rec;
        rec.step = step;
        pipe.resample_triplets();
        pipe.zero_grad();
        const bool op_update = !(cfg.pretrain && step < cfg.pretrain_epochs);
        try {
            const auto ev = pipe.evaluate(true, true, op_update);
            rec.loss = ev.loss;
            rec.diagnostic = ev.diagnostic;
            const auto& g = ev.raw_grad;
            rec.grad_norm = {family_norm(g.edge_log_scale), family_norm(g.a1), family_norm(g.a2), family_norm(g.theta),
                             family_norm(g.vertex_log_weight)};
            if (ev.masked_pairs > 0) rec.note = "masked=" + std::to_string(ev.masked_pairs);
        } catch (const NumericalError& e) {
            rec.skipped = true;
            rec.note = e.what();
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.log.push_back(rec);
            continue;
        }
        if (first) {
            result.initial_loss = rec.loss;
            first = false;
        }
        if (op_update) head_opt.step();
        cls_opt.step();
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(rec);

        increases = rec.loss > prev ? increases + 1 : 0;
        prev = rec.loss;
        if (cfg.abort_after_increases > 0 && increases >= cfg.abort_after_increases) {
            result.aborted = true;
            break;
        }
    }
    if (!result.log.empty()) pipe.calibrate_normalization();
    result.final_loss = pipe.evaluate(true, false).loss;
    if (first) result.initial_loss = result.final_loss;
    return result;
}

void write_metric_csv(const std::vector<StepRecord>& log, std::ostream& out)
{
    out << "step,loss,diagnostic,grad_edge,grad_a1,grad_a2,grad_theta,grad_vertex,seconds,skipped,note\n";
    out.precision(17);
    for (const auto& r : log) {
        out << r.step << ',' << r.loss << ',' << r.diagnostic;
        for (double g : r.grad_norm) out << ',' << g;
        out << ',' << r.seconds << ',' << (r.skipped ? 1 : 0) << ",\"" << r.note << "\"\n";
    }
}

namespace {

struct NamedArray {
    std::string name;
    double* data;
    Eigen::Index rows, cols;
};

std::vector<NamedArray> checkpoint_arrays(Pipeline& pipe)
{
    std::vector<NamedArray> out;
    for (auto* t : pipe.head_tensors()) out.push_back({t->name, t->value.data(), t->value.rows(), t->value.cols()});
    for (auto* t : pipe.classifier_tensors())
        out.push_back({t->name, t->value.data(), t->value.rows(), t->value.cols()});
    for (auto& [name, v] : pipe.buffers()) out.push_back({name, v->data(), v->size(), 1});
    return out;
}

} // namespace

void save_checkpoint(const std::string& prefix, Pipeline& pipe, const std::string& extra_json)
{
    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + prefix + ".bin");
    nlohmann::json manifest;
    manifest["format"] = "lbo-checkpoint";
    manifest["version"] = 1;
    manifest["dtype"] = "float64";
    manifest["arrays"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& a : checkpoint_arrays(pipe)) {
        const std::size_t count = static_cast<std::size_t>(a.rows * a.cols);
        bin.write(reinterpret_cast<const char*>(a.data), static_cast<std::streamsize>(count * sizeof(double)));
        manifest["arrays"].push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}, {"offset", offset}});
        offset += count;
    }
    manifest["extra"] = nlohmann::json::parse(extra_json);
    std::ofstream js(prefix + ".json");
    if (!js) throw std::runtime_error("cannot write " + prefix + ".json");
    js << manifest.dump(2) << '\n';
}

void load_checkpoint(const std::string& prefix, Pipeline& pipe)
{
    std::ifstream js(prefix + ".json");
    if (!js) throw std::runtime_error("cannot read " + prefix + ".json");
    const auto manifest = nlohmann::json::parse(js);
    std::ifstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot read " + prefix + ".bin");
    auto arrays = checkpoint_arrays(pipe);
    for (const auto& e : manifest.at("arrays")) {
        const auto name = e.at("name").get<std::string>();
        if (std::none_of(arrays.begin(), arrays.end(), [&](const auto& a) { return a.name == name; }))
            throw std::runtime_error("checkpoint array '" + name + "' does not belong to this pipeline");
    }
    for (auto& a : arrays) {
        const nlohmann::json* entry = nullptr;
        for (const auto& e : manifest.at("arrays"))
            if (e.at("name") == a.name) entry = &e;
        if (!entry) throw std::runtime_error("checkpoint has no array '" + a.name + "'");
        if ((*entry)["rows"].get<Eigen::Index>() != a.rows || (*entry)["cols"].get<Eigen::Index>() != a.cols)
            throw std::runtime_error("checkpoint array '" + a.name + "' has the wrong shape");
        bin.seekg(static_cast<std::streamoff>((*entry)["offset"].get<std::size_t>() * sizeof(double)));
        bin.read(reinterpret_cast<char*>(a.data), static_cast<std::streamsize>(a.rows * a.cols * sizeof(double)));
        if (!bin) throw std::runtime_error("checkpoint data for '" + a.name + "' is truncated");
    }
}

AuditResult audit_gradient(Pipeline& pipe, int count, std::uint64_t seed, double h)
{
    std::vector<nn::Tensor*> tensors = pipe.head_tensors();
    for (auto* t : pipe.classifier_tensors()) tensors.push_back(t);
    std::vector<std::pair<nn::Tensor*, Eigen::Index>> entries;
    for (auto* t : tensors)
        for (Eigen::Index i = 0; i < t->value.size(); ++i) entries.emplace_back(t, i);
    if (entries.empty()) throw std::invalid_argument("nothing to audit");

    std::mt19937_64 rng(seed);
    std::shuffle(entries.begin(), entries.end(), rng);
    entries.resize(std::min<std::size_t>(entries.size(), static_cast<std::size_t>(count)));

    pipe.zero_grad();
    pipe.evaluate(true, true, true, false);
    AuditResult out;
    for (auto [t, i] : entries) {
        out.analytic.push_back(t->grad(i));
        const double x = t->value(i);
        t->value(i) = x + h;
        const double lp = pipe.evaluate(true, false).loss;
        t->value(i) = x - h;
        const double lm = pipe.evaluate(true, false).loss;
        t->value(i) = x;
        out.numeric.push_back((lp - lm) / (2 * h));
    }
    const Eigen::Map<const Eigen::VectorXd> a(out.analytic.data(), static_cast<Eigen::Index>(out.analytic.size()));
    const Eigen::Map<const Eigen::VectorXd> f(out.numeric.data(), static_cast<Eigen::Index>(out.numeric.size()));
    const double rms = f.norm() / std::sqrt(static_cast<double>(f.size()));
    for (Eigen::Index j = 0; j < f.size(); ++j)
        out.max_rel_error = std::max(out.max_rel_error, std::abs(a(j) - f(j)) / std::max(std::abs(f(j)), 1e-2 * rms));
    out.vector_rel_error = (a - f).norm() / std::max(f.norm(), 1e-300);
    return out;
}

} // namespace lbo
