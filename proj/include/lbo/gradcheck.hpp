#pragma once

#include <lbo/assembly.hpp>
#include <lbo/eigensolver.hpp>
#include <lbo/sensitivity.hpp>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lbo {

std::string family_name(ParamFamily f);
/// Accepts edge|riemann, a1, a2, theta, vertex|voronoi. Throws std::invalid_argument.
ParamFamily parse_family(const std::string& name);
std::vector<ParamFamily> all_families();

struct GradcheckOptions {
    std::vector<ParamFamily> families = all_families();
    int pairs = 16;          ///< non-degenerate pairs checked
    int samples = 50;        ///< random parameters per family
    std::uint64_t seed = 1;
    double matrix_tol = 1e-6;
    double eigen_tol = 1e-4;
    double loss_tol = 1e-3;
    double forward_reverse_tol = 1e-8;
    bool check_forward_reverse = true;
    /// Random non-identity base point so every family is exercised away from
    /// the identity. Zero scales keep the identity.
    double base_edge_scale = 0.05;
    double base_log_aniso = 0.3;
    double base_vertex_scale = 0.1;
    /// Test hook: perturbs every analytic derivative by this relative amount.
    double corrupt = 0.0;
    EigenOptions eigen = [] {
        EigenOptions e;
        e.k = 24;
        e.skip = 1;
        return e;
    }();
};

struct FamilyReport {
    ParamFamily family = ParamFamily::EdgeScale;
    int checked = 0;
    int excluded = 0; ///< clamped or projected elements
    double matrix_max = 0.0, matrix_mean = 0.0;
    double eigen_max = 0.0, eigen_mean = 0.0;
    double loss_max = 0.0, loss_mean = 0.0;
};

struct GradcheckReport {
    int vertices = 0;
    std::vector<FamilyReport> families;
    std::vector<int> pairs;      ///< retained indices checked
    int masked_pairs = 0;        ///< degenerate pairs skipped while selecting
    double forward_reverse_max = 0.0;
    double seconds = 0.0;
    bool passed = true;
    std::vector<std::string> failures;

    nlohmann::json to_json() const;
};

/// Central finite-difference audit of the element derivatives, Nelson
/// derivatives and an end-to-end HKS loss, in anisotropic mode so that every
/// family is active.
GradcheckReport run_gradcheck(const Mesh& mesh, const GradcheckOptions& options = {});

struct TimingSample {
    int vertices = 0;
    double solve_seconds = 0.0;
    double backward_seconds = 0.0;
};

/// Wall time of solve_gep and of a full-bundle reverse_gradient (all five
/// families, eigenvalue and eigenvector cotangents on k pairs).
TimingSample time_reverse_gradient(const Mesh& mesh, int k, std::uint64_t seed = 1);

} // namespace lbo
