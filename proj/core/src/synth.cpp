#include "rlcombine/synth.hpp"

#include "csv_util.hpp"
#include "rlcombine/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace rlcombine {

namespace {

// Box-Muller over raw mt19937_64 output. std::normal_distribution is
// implementation-defined; this keeps the draw sequence under our control.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    // 53-bit mantissa in [0, 1)
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    // (0, 1], safe for log()
    double uniform_pos() {
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace

void validate_spec(const RegimeSpec& spec) {
    if (spec.n_models < 1) throw ValidationError("regime spec: n_models must be positive");
    if (spec.regimes.empty()) throw ValidationError("regime spec: at least one regime");
    for (const auto& regime : spec.regimes) {
        if (regime.length < 1) throw ValidationError("regime spec: lengths must be positive");
        if (static_cast<Eigen::Index>(regime.model_stds.size()) != spec.n_models) {
            throw ValidationError("regime spec: each regime needs one std per model");
        }
        for (const double s : regime.model_stds) {
            if (!(s >= 0.0)) throw ValidationError("regime spec: stds must be nonnegative");
        }
    }
}

RegimeSpec load_regime_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    RegimeSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "n_models") {
            spec.n_models =
                static_cast<Eigen::Index>(detail::parse_cell(value, line_no, "n_models"));
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(std::stoull(value));
        } else if (key == "base") {
            if (value == "constant") {
                spec.base = RegimeSpec::Base::Constant;
            } else if (value == "random_walk") {
                spec.base = RegimeSpec::Base::RandomWalk;
            } else {
                throw ParseError("base must be constant or random_walk", line_no);
            }
        } else if (key == "series_id") {
            spec.series_id = value;
        } else if (key == "regime") {
            const auto colon = value.find(':');
            if (colon == std::string::npos) {
                throw ParseError("regime must be <length>:<std,std,...>", line_no);
            }
            RegimeSpec::Regime regime;
            regime.length = static_cast<Eigen::Index>(
                detail::parse_cell(detail::trim(value.substr(0, colon)), line_no, "length"));
            for (const auto& cell : detail::split_csv(value.substr(colon + 1))) {
                regime.model_stds.push_back(detail::parse_cell(cell, line_no, "std"));
            }
            spec.regimes.push_back(std::move(regime));
        } else {
            throw ParseError("unknown key '" + key + "'", line_no);
        }
    }
    validate_spec(spec);
    return spec;
}

ForecastPanel generate(const RegimeSpec& spec) {
    validate_spec(spec);
    Eigen::Index T = 0;
    for (const auto& regime : spec.regimes) T += regime.length;
    const Eigen::Index n = spec.n_models;

    GaussianSampler noise(spec.seed);

    ForecastPanel panel;
    panel.series_id =
        spec.series_id.empty() ? "synth-" + std::to_string(spec.seed) : spec.series_id;
    panel.horizon = 1;
    panel.y.resize(T);
    panel.forecasts.resize(T, n);
    panel.available = BoolMask::Constant(T, n, true);
    panel.time_labels.reserve(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) panel.time_labels.push_back(std::to_string(t));
    panel.model_names.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) {
        panel.model_names.push_back("m" + std::to_string(a + 1));
    }

    if (spec.base == RegimeSpec::Base::Constant) {
        panel.y.setZero();
    } else {
        double level = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            level += noise.next();
            panel.y[t] = level;
        }
    }

    Eigen::Index t = 0;
    for (const auto& regime : spec.regimes) {
        for (Eigen::Index j = 0; j < regime.length; ++j, ++t) {
            for (Eigen::Index a = 0; a < n; ++a) {
                const double draw = noise.next();
                panel.forecasts(t, a) =
                    panel.y[t] + regime.model_stds[static_cast<std::size_t>(a)] * draw;
            }
        }
    }
    validate_panel(panel);
    return panel;
}

} // namespace rlcombine
