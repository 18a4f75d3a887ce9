#pragma once

#include <cstdint>
#include <string>

#include "switchheat/spectral.hpp"

namespace switchheat::cli {

enum class ExampleKind { dd, dn, ode1d };

[[nodiscard]] std::string to_string(ExampleKind e);
[[nodiscard]] ExampleKind example_from_string(const std::string& s);

/// One run's worth of knobs: which example, physical parameters, sizes,
/// seed, tolerance, and the output path prefix. Parses from a flat JSON
/// object with exactly these keys (unknown keys rejected, missing keys
/// keep their defaults).
struct RunConfig {
    ExampleKind example = ExampleKind::dd;
    double r0 = 1.0;
    double r1 = 1.0;
    double D = 1.0;
    double L = 1.0;
    double b = 1.0;
    int K = 64;               ///< spectral modes
    std::int64_t N = 10000;   ///< Monte Carlo samples
    std::uint64_t seed = 42;
    int G = 64;               ///< grid cells; interior points are j L / G
    double tol = 1e-10;       ///< pullback residual tolerance
    std::string output;       ///< path prefix; empty means stdout

    void validate() const;

    [[nodiscard]] spectral::Params params() const;
    [[nodiscard]] spectral::Example spectral_example() const;
    /// ode1d is the single-mode coefficient ODE; everything else keeps K.
    [[nodiscard]] int effective_modes() const;
};

[[nodiscard]] RunConfig parse_config(const std::string& json_text);
[[nodiscard]] std::string serialize_config(const RunConfig& config);
[[nodiscard]] RunConfig load_config_file(const std::string& path);

} // namespace switchheat::cli
