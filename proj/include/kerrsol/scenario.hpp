#pragma once

// Named, reproducible experiments wired from the library modules, their
// configuration (key = value file plus command-line overrides) and the
// command-line entry point.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kerrsol/detection.hpp"
#include "kerrsol/fluctuations.hpp"

namespace kerrsol {

inline constexpr const char* version_string = "1.0.0";

const std::vector<std::string>& scenario_names();

enum class GreenMethod { linearized, difference };
const char* to_string(GreenMethod m) noexcept;

struct ScenarioConfig {
    std::string scenario = "fig1";
    std::size_t n = 256;
    double half_width = 16.0;
    double dz = 1e-3;
    std::vector<double> zeta;  // empty: the scenario's own grid
    LoModel lo = LoModel::matched;
    PolarizationBasis basis = PolarizationBasis::circular;
    std::uint64_t seed = 1;
    std::string out = "out";
    bool plots = true;

    // Vector bound state and stability runs.
    double mu_plus = 0.4;
    double mu_minus = 1.0;
    double xpm_ratio = 7.0;
    double photons_per_unit = 1e8;
    std::size_t runs = 200;
    double zeta_max = 100.0;
    double threshold = 0.5;

    // Detection geometry.
    double fourier_width = 0.25;   // total width, cycles per unit r
    double stop_half_width = 0.5;  // central stop in the direct plane

    GreenMethod method = GreenMethod::linearized;
    double epsilon = 1e-4;
    bool cache = true;
    bool vector_field = false;  // custom scenario: bound state instead of sech
};

/// Parses flags (and the file named by --config). Flags override the file;
/// unknown keys in either are rejected with ErrorCode::ConfigError.
/// `help` receives the usage text when --help is given.
ScenarioConfig parse_arguments(const std::vector<std::string>& args, std::string* help = nullptr,
                               bool* validate_only = nullptr);

/// Canonical key = value rendering, loadable again with --config.
std::string resolved_config_text(const ScenarioConfig& config);
std::string config_hash(const ScenarioConfig& config);

/// Propagation distances the scenario will evaluate.
std::vector<double> effective_zeta(const ScenarioConfig& config);

struct ValidationEntry {
    enum class Severity { warning, error };
    Severity severity = Severity::warning;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool ok() const noexcept;  // no error entries
    /// "ok" when there are no entries, otherwise one "warning: ..." or
    /// "error: ..." line per entry.
    std::string text() const;
};

/// Dry-run checks; never propagates.
ValidationReport validate(const ScenarioConfig& config);

struct ScenarioResult {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> summary;  // key = value lines
};

/// Runs one scenario and writes its CSV (and SVG unless disabled) files
/// under config.out. Throws Error on any failure.
ScenarioResult run_scenario(const ScenarioConfig& config, std::ostream* log = nullptr);

/// Single-line machine-readable failure report.
std::string error_line(const std::string& code, const std::string& message);

/// Exit status 0 on success, 2 on configuration errors, 1 on run failures.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kerrsol
