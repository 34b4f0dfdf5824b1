#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfgc/coupler.hpp"
#include "mfgc/models.hpp"

namespace mfgc::cli {

/// Raised for anything wrong with a config file. The message names the key and,
/// when known, the line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// c + sum_k cos_k cos(2 pi k x) + sin_k sin(2 pi k x), or a von Mises bump.
struct Profile {
    enum class Kind { Fourier, VonMises };
    Kind kind = Kind::Fourier;
    double constant = 0.0;
    std::vector<double> cos;
    std::vector<double> sin;
    double center = 0.5;
    double concentration = 1.0;

    double operator()(double x) const;
};

struct KernelSpec {
    enum class Kind { Cosine, Gaussian, Constant };
    Kind kind = Kind::Cosine;
    double kappa = 0.5;
    double weight = 1.0;
    double length = 0.2;
    double value = 1.0;

    KernelTable build(const TorusGrid& grid) const;
};

struct ModelBlock {
    std::string variant;
    double eps = 1.0;           ///< linear_demand
    double coupling = 0.0;      ///< neg_corr_resources
    double eps_tilde = 0.25;    ///< price_impact
    double theta = 0.5;         ///< crowd_motion
    double lambda_tilde = 0.5;
    double a = 2.0;
    double b = 2.0;
    double q0 = 2.0;
    KernelSpec kernel;
};

struct CheckBlock {
    std::size_t samples = 10000;
    double p_max = 10.0;
    std::size_t h4_tuples = 0;
};

struct RunConfig {
    ModelBlock model;
    Profile f0;
    double local_coupling = 0.0;
    Profile g0;
    double density_coupling = 0.0;
    Profile m0{Profile::Kind::Fourier, 1.0, {}, {}, 0.5, 1.0};
    std::size_t n = 128;
    double T = 1.0;
    std::size_t nt = 256;
    SolverConfig solver;
    std::optional<StructuralConstants> constants;
    std::string output_dir = "out";
    std::vector<std::string> formats{"csv", "json"};
    std::uint64_t seed = 0;
    CheckBlock check;
    /// The parsed document, echoed into summary.json.
    nlohmann::json echo;
};

/// Parses TOML text; `origin` labels error messages. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// Re-parses the config after setting the dotted key (e.g. "model.eps") to `value`.
RunConfig with_override(const std::string& text, const std::string& origin, const std::string& key, double value);

/// Rebuilds the parsed config from a config echo stored in summary.json.
RunConfig config_from_echo(const nlohmann::json& echo);

Model build_model(const RunConfig& cfg);
ScalarField build_initial_density(const RunConfig& cfg, const TorusGrid& grid);

/// MFGC_OUT when set, else the configured directory.
std::string resolve_output_dir(const RunConfig& cfg);

} // namespace mfgc::cli
