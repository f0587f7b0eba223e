#include "rlcombine/runner.hpp"

#include "csv_util.hpp"
#include "rlcombine/errors.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_set>

namespace rlcombine {

namespace {

std::vector<ForecastPanel> load_inputs(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw ValidationError("no inputs given");
    std::vector<ForecastPanel> panels;
    for (const auto& input : cfg.inputs) {
        if (cfg.format == PanelFormat::M4Pair) {
            auto batch = load_m4_directory(input);
            std::move(batch.begin(), batch.end(), std::back_inserter(panels));
        } else if (std::filesystem::is_directory(input)) {
            std::vector<std::filesystem::path> files;
            for (const auto& entry : std::filesystem::directory_iterator(input)) {
                if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            if (files.empty()) {
                throw ValidationError("no .csv panels in '" + input.string() + "'");
            }
            for (const auto& f : files) panels.push_back(load_wide_csv(f));
        } else {
            panels.push_back(load_wide_csv(input));
        }
    }
    std::unordered_set<std::string> ids;
    for (const auto& panel : panels) {
        if (!ids.insert(panel.series_id).second) {
            throw ValidationError("duplicate series id '" + panel.series_id + "'");
        }
    }
    return panels;
}

/// Panel with a guaranteed simple-average benchmark column.
ForecastPanel with_benchmark(const ForecastPanel& panel) {
    if (panel.model_index(kSimpleAverageName) >= 0) return panel;
    return append_benchmark_average(panel);
}

void parallel_for(Eigen::Index count, int jobs, const std::function<void(Eigen::Index)>& fn) {
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (workers == 1) {
        for (Eigen::Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const Eigen::Index i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void write_forecast_csv(const ForecastPanel& bench, const Eigen::VectorXd& rl,
                        const std::filesystem::path& path) {
    const Eigen::Index avg = bench.model_index(kSimpleAverageName);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t,y,rl,simple_average\n";
    for (Eigen::Index t = 0; t < bench.periods(); ++t) {
        out << bench.time_labels[static_cast<std::size_t>(t)] << ','
            << detail::format_double(bench.y[t]) << ',' << detail::format_double(rl[t])
            << ',' << detail::format_double(bench.forecasts(t, avg)) << '\n';
    }
}

void write_feature_dump(const ForecastPanel& panel, const std::filesystem::path& path) {
    const FeatureMatrix feats = build_features(panel, panel.periods());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "feature";
    for (Eigen::Index j = 0; j < feats.values.cols(); ++j) {
        out << ',' << panel.time_labels[static_cast<std::size_t>(j)];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < feats.values.rows(); ++i) {
        out << feats.feature_names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < feats.values.cols(); ++j) {
            out << ',' << detail::format_double(feats.values(i, j));
        }
        out << '\n';
    }
}

void write_embedding_dump(const QTable& table, const ForecastPanel& panel,
                          const std::filesystem::path& path) {
    Eigen::Index k_max = 0;
    for (Eigen::Index i = 0; i < table.size(); ++i) {
        k_max = std::max(k_max, table.row(i).embedding.scores.size());
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t";
    for (Eigen::Index j = 0; j < k_max; ++j) out << ",pc" << (j + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < table.size(); ++i) {
        const QTableRow& row = table.row(i);
        out << panel.time_labels[static_cast<std::size_t>(row.t)];
        for (Eigen::Index j = 0; j < k_max; ++j) {
            out << ',';
            if (j < row.embedding.scores.size()) {
                out << detail::format_double(row.embedding.scores[j]);
            }
        }
        out << '\n';
    }
}

const char* fallback_name(FallbackPolicy p) {
    return p == FallbackPolicy::SimpleAverage ? "simple_average" : "named_model";
}

const char* rank_name(RankMethod m) {
    return m == RankMethod::CompetitionMin ? "competition" : "average";
}

void write_effective_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "alpha=" << detail::format_double(cfg.agent.alpha) << '\n'
        << "eta=" << detail::format_double(cfg.agent.eta) << '\n'
        << "gamma=" << detail::format_double(cfg.agent.gamma) << '\n'
        << "k_max=" << cfg.agent.k_max << '\n'
        << "var_target=" << detail::format_double(cfg.agent.var_target) << '\n'
        << "warmup=" << cfg.agent.warmup << '\n'
        << "horizon=" << cfg.agent.horizon << '\n'
        << "fallback=" << fallback_name(cfg.agent.fallback) << '\n'
        << "fallback_model=" << cfg.agent.fallback_model << '\n'
        << "average_action=" << (cfg.include_average_action ? 1 : 0) << '\n'
        << "rank_method=" << rank_name(cfg.rank_method) << '\n'
        << "jobs=" << cfg.jobs << '\n';
}

std::map<std::string, double> score_models(const ForecastPanel& bench,
                                           const Eigen::VectorXd* rl,
                                           Eigen::Index from_target = 0) {
    const Eigen::Index T = bench.periods();
    BoolVecRef window = BoolVecRef::Constant(T, true);
    for (Eigen::Index t = 0; t < std::min(from_target, T); ++t) window[t] = false;

    std::map<std::string, double> scores;
    for (Eigen::Index a = 0; a < bench.models(); ++a) {
        const auto& name = bench.model_names[static_cast<std::size_t>(a)];
        const BoolVecRef mask = window && bench.available.col(a).array();
        try {
            scores[name] = mse(bench.y, bench.forecasts.col(a), mask);
        } catch (const ValidationError&) {
            throw ValidationError("series '" + bench.series_id + "': model '" + name +
                                  "' has no evaluable point in the scoring window");
        }
    }
    if (rl) scores["rl"] = mse(bench.y, *rl, window);
    return scores;
}

struct SeriesOutcome {
    ForecastPanel bench;  ///< scored panel (benchmark column guaranteed)
    RunResult result;     ///< decisions/forecasts of the agent run
    ForecastPanel agent_panel; ///< panel the agent actually ran on
};

} // namespace

ScoreReport execute_run(const RunConfig& cfg) {
    validate_config(cfg.agent);
    if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");
    if (cfg.output_dir.empty()) throw ValidationError("output directory required");
    std::filesystem::create_directories(cfg.output_dir);

    const std::vector<ForecastPanel> panels = load_inputs(cfg);
    const auto count = static_cast<Eigen::Index>(panels.size());
    std::vector<SeriesOutcome> outcomes(static_cast<std::size_t>(count));

    parallel_for(count, cfg.jobs, [&](Eigen::Index i) {
        const ForecastPanel& raw = panels[static_cast<std::size_t>(i)];
        SeriesOutcome& outcome = outcomes[static_cast<std::size_t>(i)];
        outcome.bench = with_benchmark(raw);
        outcome.agent_panel = cfg.include_average_action ? outcome.bench : raw;
        outcome.result = run(outcome.agent_panel, cfg.agent);
    });

    std::vector<std::string> ids;
    std::vector<std::map<std::string, double>> mse_maps;
    std::vector<std::map<std::string, double>> mse_maps_post;
    for (Eigen::Index i = 0; i < count; ++i) {
        const SeriesOutcome& outcome = outcomes[static_cast<std::size_t>(i)];
        const auto& id = outcome.bench.series_id;
        write_forecast_csv(outcome.bench, outcome.result.forecasts,
                           cfg.output_dir / (id + "_forecast.csv"));
        save_decision_log(outcome.result.decisions, outcome.agent_panel,
                          cfg.output_dir / (id + "_decisions.csv"));
        if (cfg.debug_dumps) {
            write_feature_dump(outcome.agent_panel, cfg.output_dir / (id + "_features.csv"));
            write_embedding_dump(outcome.result.qtable, outcome.agent_panel,
                                 cfg.output_dir / (id + "_embeddings.csv"));
            save_qtable(outcome.result.qtable, outcome.agent_panel,
                        cfg.output_dir / (id + "_qtable.csv"));
        }
        ids.push_back(id);
        mse_maps.push_back(score_models(outcome.bench, &outcome.result.forecasts));
        if (cfg.post_warmup_report) {
            mse_maps_post.push_back(score_models(outcome.bench, &outcome.result.forecasts,
                                                 cfg.agent.warmup + cfg.agent.horizon));
        }
    }

    ScoreReport report = build_score_report(ids, mse_maps, cfg.rank_method);
    write_report_csv(report, cfg.output_dir / "report.csv");
    write_aggregate_csv(report, cfg.output_dir / "aggregate.csv");
    write_report_json(report, cfg.output_dir / "report.json");
    if (cfg.post_warmup_report) {
        const ScoreReport post = build_score_report(ids, mse_maps_post, cfg.rank_method);
        write_report_csv(post, cfg.output_dir / "report_postwarmup.csv");
        write_aggregate_csv(post, cfg.output_dir / "aggregate_postwarmup.csv");
        write_report_json(post, cfg.output_dir / "report_postwarmup.json");
    }
    write_effective_config(cfg, cfg.output_dir / "effective_config.txt");
    return report;
}

SimulationSummary execute_simulate(const std::filesystem::path& spec_path, int runs,
                                   const RunConfig& cfg) {
    validate_config(cfg.agent);
    if (runs < 1) throw ValidationError("runs must be >= 1");
    if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");
    if (cfg.output_dir.empty()) throw ValidationError("output directory required");
    std::filesystem::create_directories(cfg.output_dir);

    const RegimeSpec base_spec = load_regime_spec(spec_path);

    SimulationSummary summary;
    summary.runs = runs;
    summary.per_run.resize(static_cast<std::size_t>(runs));

    parallel_for(runs, cfg.jobs, [&](Eigen::Index i) {
        RegimeSpec spec = base_spec;
        spec.seed = base_spec.seed + static_cast<std::uint64_t>(i);
        spec.series_id.clear(); // one id per seed
        const ForecastPanel raw = generate(spec);
        const ForecastPanel bench = with_benchmark(raw);
        const ForecastPanel& agent_panel = cfg.include_average_action ? bench : raw;
        const RunResult result = run(agent_panel, cfg.agent);

        const Eigen::Index avg = bench.model_index(kSimpleAverageName);
        auto& row = summary.per_run[static_cast<std::size_t>(i)];
        row.index = static_cast<int>(i);
        row.seed = spec.seed;
        row.rl_mse = mse(bench.y, result.forecasts);
        row.avg_mse = mse(bench.y, bench.forecasts.col(avg));
        row.rl_win = row.rl_mse < row.avg_mse;
    });

    double sum_rl = 0.0, sum_avg = 0.0;
    for (const auto& row : summary.per_run) {
        sum_rl += row.rl_mse;
        sum_avg += row.avg_mse;
        if (row.rl_win) ++summary.rl_wins;
    }
    summary.win_rate = static_cast<double>(summary.rl_wins) / runs;
    summary.mean_rl_mse = sum_rl / runs;
    summary.mean_avg_mse = sum_avg / runs;

    {
        std::ofstream out(cfg.output_dir / "runs.csv");
        if (!out) throw std::runtime_error("cannot write runs.csv");
        out << "run,seed,rl_mse,avg_mse,rl_win\n";
        for (const auto& row : summary.per_run) {
            out << row.index << ',' << row.seed << ',' << detail::format_double(row.rl_mse)
                << ',' << detail::format_double(row.avg_mse) << ',' << (row.rl_win ? 1 : 0)
                << '\n';
        }
    }
    {
        std::ofstream out(cfg.output_dir / "summary.csv");
        if (!out) throw std::runtime_error("cannot write summary.csv");
        out << "runs,rl_wins,win_rate,mean_rl_mse,mean_avg_mse\n";
        out << summary.runs << ',' << summary.rl_wins << ','
            << detail::format_double(summary.win_rate) << ','
            << detail::format_double(summary.mean_rl_mse) << ','
            << detail::format_double(summary.mean_avg_mse) << '\n';
    }
    write_effective_config(cfg, cfg.output_dir / "effective_config.txt");
    return summary;
}

namespace {

/// `rl` column of a previously written forecast CSV, validated against the
/// panel's period count.
Eigen::VectorXd load_rl_column(const std::filesystem::path& path, Eigen::Index T) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty forecast file", 1);
    const auto header = detail::split_csv(line);
    const auto rl_it = std::find(header.begin(), header.end(), "rl");
    if (rl_it == header.end()) throw ParseError("no rl column in '" + path.string() + "'", 1);
    const auto rl_col = static_cast<std::size_t>(rl_it - header.begin());
    Eigen::VectorXd rl(T);
    Eigen::Index t = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        if (t >= T) throw ValidationError("forecast file longer than panel");
        const auto cells = detail::split_csv(line);
        if (cells.size() <= rl_col) throw ParseError("short row", line_no);
        rl[t++] = detail::parse_cell(cells[rl_col], line_no, "rl");
    }
    if (t != T) throw ValidationError("forecast file shorter than panel");
    return rl;
}

} // namespace

ScoreReport execute_report(const RunConfig& cfg, const std::filesystem::path& forecasts_dir) {
    if (cfg.output_dir.empty()) throw ValidationError("output directory required");
    std::filesystem::create_directories(cfg.output_dir);
    const std::vector<ForecastPanel> panels = load_inputs(cfg);

    std::vector<std::string> ids;
    std::vector<std::map<std::string, double>> mse_maps;
    for (const auto& raw : panels) {
        const ForecastPanel bench = with_benchmark(raw);
        std::map<std::string, double> scores;
        if (!forecasts_dir.empty()) {
            const auto path = forecasts_dir / (bench.series_id + "_forecast.csv");
            if (!std::filesystem::exists(path)) {
                throw ValidationError("no forecast file for series '" + bench.series_id + "'");
            }
            const Eigen::VectorXd rl = load_rl_column(path, bench.periods());
            scores = score_models(bench, &rl);
        } else {
            scores = score_models(bench, nullptr);
        }
        ids.push_back(bench.series_id);
        mse_maps.push_back(std::move(scores));
    }
    ScoreReport report = build_score_report(ids, mse_maps, cfg.rank_method);
    write_report_csv(report, cfg.output_dir / "report.csv");
    write_aggregate_csv(report, cfg.output_dir / "aggregate.csv");
    write_report_json(report, cfg.output_dir / "report.json");
    return report;
}

std::vector<std::pair<std::string, std::string>>
load_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::vector<std::pair<std::string, std::string>> entries;
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
        entries.emplace_back(detail::trim(line.substr(0, eq)),
                             detail::trim(line.substr(eq + 1)));
    }
    return entries;
}

namespace {

int guarded(const std::function<void()>& fn) noexcept {
    try {
        fn();
        return 0;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace

int cmd_run(const RunConfig& cfg) noexcept {
    return guarded([&] { execute_run(cfg); });
}

int cmd_simulate(const std::filesystem::path& spec_path, int runs,
                 const RunConfig& cfg) noexcept {
    return guarded([&] { execute_simulate(spec_path, runs, cfg); });
}

int cmd_report(const RunConfig& cfg, const std::filesystem::path& forecasts_dir) noexcept {
    return guarded([&] { execute_report(cfg, forecasts_dir); });
}

} // namespace rlcombine
