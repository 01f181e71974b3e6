#pragma once

#include <lbo/descriptors.hpp>
#include <lbo/eigensolver.hpp>
#include <lbo/head.hpp>
#include <lbo/losses.hpp>

#include <cstdint>
#include <array>
#include <iosfwd>
#include <random>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lbo {

enum class LossKind { SegmentationCe, Triplet, SpectralAlignment, DescriptorDistance };

std::string loss_name(LossKind kind);
/// segmentation_ce | triplet | spectral_alignment | descriptor_distance.
LossKind parse_loss(const std::string& name);

struct TrainConfig {
    LossKind loss = LossKind::SpectralAlignment;
    double lr = 0.0;            ///< head step size; 0 picks 1e-2 (direct) or 1e-3 (mlp)
    double classifier_lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 200;
    double clip = 1.0;          ///< per-family gradient norm threshold; <= 0 disables
    int k = 32;
    int skip = 1;
    int band_first = 2;         ///< alignment band, 1-based over all eigenvalues (lambda_1 = 0)
    int band_last = 16;
    int hks_times = 16;
    std::vector<int> classifier_widths{32, 32};
    bool pretrain = false;      ///< train the classifier on the frozen operator first
    int pretrain_epochs = 0;
    bool straight_through = false;
    int abort_after_increases = 25;
    double triplet_margin = 0.1;
    int triplets_per_step = 64;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on non-positive step sizes, negative epochs or
    /// bad bands. Zero epochs is allowed and leaves the parameters at identity.
    void validate() const;
    double head_lr(HeadMode mode) const { return lr > 0 ? lr : (mode == HeadMode::Direct ? 1e-2 : 1e-3); }
};

/// One mesh with its modifiable operator, the objective data and the
/// optional classifier backend.
class Pipeline {
public:
    Pipeline(const Mesh& mesh, const HeadConfig& head, const TrainConfig& config);

    /// Target eigenvalues, all of them including the zero mode (at least
    /// band_last entries). Pairs past the band feed the diagnostic only.
    void set_alignment_target(const Eigen::VectorXd& values);
    /// Per-vertex labels; the loss uses `train_rows` only.
    void set_segmentation(std::vector<int> labels, std::vector<int> train_rows);
    void set_descriptor_target(const Eigen::MatrixXd& target);
    /// Triplets between this mesh and fixed descriptor rows of another shape
    /// with vertex correspondence i <-> i.
    void set_triplet_target(const Eigen::MatrixXd& other);
    /// Draws new (anchor, negative) pairs for the triplet objective.
    void resample_triplets();

    struct Evaluation {
        double loss = 0.0;
        double diagnostic = 0.0; ///< alignment: squared error on pairs beyond the band
        ParamGradient raw_grad;  ///< before clipping
        int masked_pairs = 0;
    };

    /// Forward pass and loss; with `backward` also accumulates gradients into
    /// the trainable tensors (after per-family clipping when enabled).
    Evaluation evaluate(bool training, bool backward, bool update_operator = true, bool clip = true);

    /// Head tensors followed by classifier tensors.
    std::vector<nn::Tensor*> head_tensors() { return m_head.tensors(); }
    std::vector<nn::Tensor*> classifier_tensors();
    std::vector<std::pair<std::string, nn::Vector*>> buffers();
    void zero_grad();

    /// Copies every trainable tensor and normalization buffer from a pipeline
    /// with the same configuration (MLP mode transfers across meshes), plus
    /// its HKS times. Without `include_head` only the classifier and times are
    /// copied (direct-mode parameters do not transfer between meshes). Throws
    /// std::invalid_argument on name or shape mismatch.
    void copy_state_from(Pipeline& other, bool include_head = true);
    void set_hks_times(std::vector<double> times);

    /// Replaces the running normalization statistics with the exact statistics
    /// of one training-mode pass at the current parameters.
    void calibrate_normalization();

    /// log HKS of the current operator in evaluation mode.
    Eigen::MatrixXd log_hks(bool training = false);
    /// Fraction of correctly classified rows (evaluation mode).
    double accuracy(std::span<const int> rows);

    const Mesh& mesh() const { return *m_mesh; }
    Head& head() { return m_head; }
    const std::vector<double>& hks_times() const { return m_times; }
    const EigenSystem& spectrum() const { return m_es; }
    const OperatorParams& params() const { return m_params; }
    bool has_classifier() const { return m_classifier.has_value(); }
    EigenOptions eigen_options() const;

private:
    void solve(bool training);

    const Mesh* m_mesh;
    HeadConfig m_head_config;
    TrainConfig m_config;
    CurvatureField m_curvature;
    Head m_head;
    std::vector<double> m_times;
    std::optional<nn::Mlp> m_classifier;
    std::mt19937_64 m_rng;

    Eigen::VectorXd m_align_target;
    std::vector<int> m_labels, m_train_rows;
    Eigen::MatrixXd m_descriptor_target;
    Eigen::MatrixXd m_triplet_other;
    std::vector<std::pair<int, int>> m_triplets;

    OperatorParams m_params;
    std::optional<ModifiedOperator> m_op;
    EigenSystem m_es;
};

struct StepRecord {
    int step = 0;
    double loss = 0.0;
    double diagnostic = 0.0;
    std::array<double, 5> grad_norm{}; ///< edge, a1, a2, theta, vertex (before clipping)
    double seconds = 0.0;
    bool skipped = false;
    std::string note;
};

struct TrainResult {
    std::vector<StepRecord> log;
    double initial_loss = 0.0;
    double final_loss = 0.0; ///< loss after the last update
    bool aborted = false;
};

/// Runs `config.epochs` steps (one mesh, one step per epoch). A failed
/// eigensolve skips the step; `abort_after_increases` consecutive loss
/// increases stop the run. Normalization statistics are recalibrated at the end.
TrainResult train(Pipeline& pipeline, const TrainConfig& config);

void write_metric_csv(const std::vector<StepRecord>& log, std::ostream& out);

/// Flat little-endian doubles in `<prefix>.bin` with a JSON manifest
/// `<prefix>.json` naming each array and its shape.
void save_checkpoint(const std::string& prefix, Pipeline& pipeline, const std::string& extra_json = "{}");
/// Restores every array named in the manifest; throws std::runtime_error on
/// missing names or shape mismatches.
void load_checkpoint(const std::string& prefix, Pipeline& pipeline);

/// Central-FD audit of the total loss against the backpropagated gradient
/// for `count` random raw entries (clipping off). Returns the max relative error.
struct AuditResult {
    double max_rel_error = 0.0; ///< entrywise, floored at 1% of the RMS FD value
    double vector_rel_error = 0.0; ///< |analytic - fd| / |fd| over the sampled set
    std::vector<double> analytic, numeric;
};
AuditResult audit_gradient(Pipeline& pipeline, int count, std::uint64_t seed, double h = 1e-6);

/// All eigenvalues (zero mode included) of the unmodified operator.
Eigen::VectorXd baseline_spectrum(const Mesh& mesh, const EigenOptions& options);

} // namespace lbo
