#pragma once

#include "rlcombine/agent.hpp"
#include "rlcombine/eval.hpp"
#include "rlcombine/panel.hpp"
#include "rlcombine/synth.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rlcombine {

/// Batch-run configuration. Inputs may be wide-CSV files, directories of
/// wide CSVs, or M4-pair directories depending on `format`.
struct RunConfig {
    std::vector<std::filesystem::path> inputs;
    PanelFormat format = PanelFormat::WideCsv;
    AgentConfig agent;
    std::filesystem::path output_dir;
    int jobs = 1;
    bool debug_dumps = false;
    /// Add the simple-average benchmark to the agent's action set (it is
    /// always scored and written either way).
    bool include_average_action = true;
    RankMethod rank_method = RankMethod::CompetitionMin;
    /// Also write report_postwarmup.{csv,json} scored over post-warm-up
    /// targets only.
    bool post_warmup_report = false;
};

struct SimulationSummary {
    struct Run {
        int index = 0;
        std::uint64_t seed = 0;
        double rl_mse = 0.0;
        double avg_mse = 0.0;
        bool rl_win = false;
    };
    std::vector<Run> per_run;
    int runs = 0;
    int rl_wins = 0;
    double win_rate = 0.0;
    double mean_rl_mse = 0.0;
    double mean_avg_mse = 0.0;
};

/// Loads every input series, runs the agent on each (in parallel up to
/// cfg.jobs), writes `<series_id>_forecast.csv` and `<series_id>_decisions.csv`
/// per series plus `report.csv`, `aggregate.csv`, `report.json` and the
/// effective configuration. Output bytes are independent of cfg.jobs.
/// Throws on invalid input; returns the built report.
ScoreReport execute_run(const RunConfig& cfg);

/// Generates `runs` panels from the spec (seed + run index), pits the agent
/// against the simple average on each, and writes runs.csv / summary.csv
/// under cfg.output_dir.
SimulationSummary execute_simulate(const std::filesystem::path& spec_path, int runs,
                                   const RunConfig& cfg);

/// Re-scores existing panels without running the agent. When forecasts_dir
/// holds a `<series_id>_forecast.csv` for a series, its `rl` column joins
/// the scored models.
ScoreReport execute_report(const RunConfig& cfg,
                           const std::filesystem::path& forecasts_dir = {});

/// Flat configuration file: one key=value per line, `#` starts a comment.
/// Order is preserved and keys may repeat.
std::vector<std::pair<std::string, std::string>>
load_key_value_file(const std::filesystem::path& path);

/// Exit-status wrappers: 0 success, 1 parse/validation failure, 2 runtime
/// failure; diagnostics go to stderr.
int cmd_run(const RunConfig& cfg) noexcept;
int cmd_simulate(const std::filesystem::path& spec_path, int runs,
                 const RunConfig& cfg) noexcept;
int cmd_report(const RunConfig& cfg, const std::filesystem::path& forecasts_dir) noexcept;

} // namespace rlcombine
