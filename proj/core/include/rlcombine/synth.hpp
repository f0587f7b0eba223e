#pragma once

#include "rlcombine/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rlcombine {

/// Synthetic panel blueprint: piecewise-constant noise regimes around a base
/// series. Model `a` forecasts y(t) plus Gaussian noise with the standard
/// deviation the active regime assigns to `a`, so "which model is best" is
/// controlled per regime.
struct RegimeSpec {
    enum class Base { Constant, RandomWalk };

    struct Regime {
        Eigen::Index length = 0;
        std::vector<double> model_stds; ///< one per model
    };

    Eigen::Index n_models = 0;
    std::vector<Regime> regimes;
    std::uint64_t seed = 0;
    Base base = Base::Constant;
    std::string series_id; ///< defaults to synth-<seed>
};

/// Throws ValidationError on structural problems.
void validate_spec(const RegimeSpec& spec);

/// Key=value text, one per line, `#` comments:
///   n_models=4
///   seed=42
///   base=constant            # or random_walk
///   regime=150:0.5,1.5,1.5,1.5   # length:std per model; repeatable
RegimeSpec load_regime_spec(const std::filesystem::path& path);

/// Deterministic given the spec: the same seed reproduces the panel
/// bit-for-bit. The noise stream is consumed in a fixed order (base series
/// first, then period-major model draws), so regimes that only rescale the
/// stds reuse the same underlying draws.
ForecastPanel generate(const RegimeSpec& spec);

} // namespace rlcombine
