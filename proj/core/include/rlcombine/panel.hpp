#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rlcombine {

using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Column name of the equal-weight benchmark appended by
/// append_benchmark_average().
inline constexpr std::string_view kSimpleAverageName = "simple_average";

/// Realized target series plus an aligned matrix of competing forecasts.
///
/// forecasts(t, a) holds the forecast of model `a` for period `t`, issued
/// `horizon` periods earlier. Cells without a forecast are masked out in
/// `available` (their stored value is NaN and must not be read).
///
/// A panel is immutable after construction and safe to share across
/// concurrent runs.
struct ForecastPanel {
    std::string series_id;
    std::vector<std::string> time_labels; ///< original `t` column, strictly increasing
    Eigen::VectorXd y;                    ///< realized values, length T
    Eigen::MatrixXd forecasts;            ///< T x n
    BoolMask available;                   ///< T x n
    std::vector<std::string> model_names; ///< n labels
    Eigen::Index horizon = 1;

    Eigen::Index periods() const { return y.size(); }
    Eigen::Index models() const { return forecasts.cols(); }

    /// Index of a model column, or -1 when absent.
    Eigen::Index model_index(std::string_view name) const;
};

/// Throws ValidationError when the panel invariants do not hold:
/// consistent dimensions, strictly increasing time labels, finite y,
/// at least one available forecast per row, unique model names.
void validate_panel(const ForecastPanel& panel);

enum class PanelFormat { WideCsv, M4Pair };

/// Wide CSV: header `t,y,<model1>,...,<modeln>`, empty cell = missing
/// forecast. Rows with empty `y` are trimmed from the window ends only;
/// an empty `y` strictly inside the window is a ValidationError.
ForecastPanel load_wide_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal formatting; reloading reproduces the panel
/// bit-for-bit.
void save_wide_csv(const ForecastPanel& panel, const std::filesystem::path& path);

/// M4-pair convenience importer. `dir` holds `actuals.csv` (one row per
/// series: id,v1,v2,...) plus one forecast CSV per method with identical row
/// shape; the method name is the file stem. Returns one panel per series,
/// in actuals order.
std::vector<ForecastPanel> load_m4_directory(const std::filesystem::path& dir);

/// Single-panel entry point. For M4Pair the directory must contain exactly
/// one series; use load_m4_directory for multi-series inputs.
ForecastPanel load_panel(const std::filesystem::path& path, PanelFormat format);

/// Mapping model/forecaster column -> group label. Group order is the order
/// of first appearance in the source file.
struct GroupMap {
    std::vector<std::pair<std::string, std::string>> entries;

    std::vector<std::string> group_order() const;
};

/// CSV with header `model,group`.
GroupMap load_group_map(const std::filesystem::path& path);

/// Collapses the panel to one column per group: the arithmetic mean of the
/// available member forecasts. A group cell is available iff at least one
/// member is. Members are summed in panel column order, so the result does
/// not depend on the order of entries in `groups`.
ForecastPanel group_mean_panel(const ForecastPanel& panel, const GroupMap& groups);

/// Returns a copy with one extra column (kSimpleAverageName): the mean of
/// the available forecasts at each period, available whenever any model is.
/// The original columns are unchanged.
ForecastPanel append_benchmark_average(const ForecastPanel& panel);

/// Mean of the available forecasts in row `t`; nullopt when none is
/// available. The single source of the simple-average arithmetic -- the
/// benchmark column and the agent fallback both call this, so their values
/// are bit-identical.
std::optional<double> mean_available_forecast(const ForecastPanel& panel, Eigen::Index t);

} // namespace rlcombine
