#pragma once

#include <lbo/assembly.hpp>
#include <lbo/features.hpp>
#include <lbo/nn.hpp>
#include <lbo/sensitivity.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lbo {

enum class HeadMode { Direct, Mlp };

struct HeadConfig {
    HeadMode mode = HeadMode::Direct;
    bool riemann = false;   ///< per-edge log length scale
    bool albo = false;      ///< per-face a1 = exp(raw), a2 = 1, theta
    bool albo_plus = false; ///< per-face a1, a2 = exp(raw), theta
    bool voronoi = false;   ///< per-vertex log mass weight
    int k = 20;             ///< EdgeConv neighborhood size
    std::vector<int> widths{32, 32};
    double slope = 0.01;
    bool normalize_features = true;
    nn::Aggregation aggregation = nn::Aggregation::Max;

    /// Throws std::invalid_argument on albo + albo_plus, k < 1 or empty widths.
    void validate() const;
    bool anisotropic() const { return albo || albo_plus; }
    OperatorMode operator_mode() const { return anisotropic() ? OperatorMode::Anisotropic : OperatorMode::Isotropic; }
    /// Enabled module names in canonical order (riemann, albo, albo_plus, voronoi).
    std::vector<std::string> modules() const;
    /// Enables the named module; throws std::invalid_argument on unknown names.
    void enable(const std::string& module);
};

/// Produces OperatorParams for one mesh, either from free per-element raw
/// values (direct mode) or from EdgeConv + shared MLP networks over intrinsic
/// features (one network per module). All outputs start at zero raw values,
/// which is the identity operator.
class Head {
public:
    Head(const Mesh& mesh, const IntrinsicFeatures& features, const HeadConfig& config, std::uint64_t seed);

    OperatorParams forward(bool training);
    /// Chains a gradient w.r.t. OperatorParams (a1, a2, theta by value; edge and
    /// vertex entries by log) into the trainable tensors. Call after forward.
    void backward(const ParamGradient& g);

    std::vector<nn::Tensor*> tensors();
    const HeadConfig& config() const { return m_config; }

    /// Raw outputs of the last forward pass, rows = elements.
    const nn::Matrix& raw(const std::string& module) const;
    /// Direct mode only: overwrite the free raw values of a module.
    void set_raw(const std::string& module, const nn::Matrix& values);

    /// Every normalization layer (for momentum changes).
    std::vector<nn::BatchNorm*> norms();

    /// Normalization statistics (not trained) for checkpoints.
    std::vector<std::pair<std::string, nn::Vector*>> buffers();

private:
    struct Module {
        std::string name;
        ElementKind kind = ElementKind::Vertex;
        int out = 1;
        nn::Matrix features;
        nn::IndexMatrix neighbors;
        nn::Tensor direct;
        nn::EdgeConv conv;
        nn::BatchNorm norm;
        nn::Mlp mlp;
        nn::Matrix raw;
    };

    Module& find(const std::string& name);
    const Module& find(const std::string& name) const;

    const Mesh* m_mesh;
    HeadConfig m_config;
    std::vector<Module> m_modules;
};

} // namespace lbo
