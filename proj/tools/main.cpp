// rlcombine: batch driver for the forecast-selection agent.
//
//   rlcombine run      --input panel.csv --output out/
//   rlcombine simulate --spec regimes.txt --runs 30 --output out/
//   rlcombine report   --input panels/ --forecasts out/ --output scores/
//
// Command-line flags override a --config file (key=value lines, # comments),
// which overrides the built-in defaults.

#include "rlcombine/errors.hpp"
#include "rlcombine/runner.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <string>

namespace {

struct CliState {
    rlcombine::RunConfig cfg;
    std::string fallback_model;
    std::string rank_method = "competition";
    std::string format = "wide-csv";
    std::string config_path;
    std::string spec_path;
    std::string forecasts_dir;
    int runs = 0;
};

void add_agent_flags(CLI::App& cmd, CliState& st) {
    cmd.add_option("--config", st.config_path,
                   "key=value config file; flags given here win");
    cmd.add_option("--alpha", st.cfg.agent.alpha, "learning rate in (0,1]")
        ->capture_default_str();
    cmd.add_option("--eta", st.cfg.agent.eta,
                   "similarity threshold; above 1 forces permanent fallback")
        ->capture_default_str();
    cmd.add_option("--gamma", st.cfg.agent.gamma, "discount factor (stored, not applied)")
        ->capture_default_str();
    cmd.add_option("--k-max", st.cfg.agent.k_max, "max retained principal components")
        ->capture_default_str();
    cmd.add_option("--var-target", st.cfg.agent.var_target,
                   "explained-variance target in (0,1]")
        ->capture_default_str();
    cmd.add_option("--warmup", st.cfg.agent.warmup, "forced-fallback origins at the start")
        ->capture_default_str();
    cmd.add_option("--horizon", st.cfg.agent.horizon, "forecast horizon h")
        ->capture_default_str();
    cmd.add_option("--fallback-model", st.fallback_model,
                   "fall back to this model instead of the simple average");
    cmd.add_flag("--average-action,!--no-average-action", st.cfg.include_average_action,
                 "include the simple average in the action set (default on)");
    cmd.add_option("--jobs", st.cfg.jobs, "parallel series runs")->capture_default_str();
}

void add_rank_flag(CLI::App& cmd, CliState& st) {
    cmd.add_option("--rank-method", st.rank_method, "tie rule: competition|average")
        ->check(CLI::IsMember({"competition", "average"}))
        ->capture_default_str();
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || p != value.data() + value.size()) {
        throw rlcombine::ValidationError("config: bad value '" + value + "' for " + key);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw rlcombine::ValidationError("config: bad value '" + value + "' for " + key);
}

/// Applies config-file entries to every setting the command line left at its
/// default, so explicit flags keep precedence.
void apply_config_file(const CLI::App& cmd, CliState& st) {
    const auto given = [&](const std::string& flag) { return cmd.count(flag) > 0; };
    for (const auto& [key, value] : rlcombine::load_key_value_file(st.config_path)) {
        if (key == "alpha") {
            if (!given("--alpha")) st.cfg.agent.alpha = parse_number<double>(key, value);
        } else if (key == "eta") {
            if (!given("--eta")) st.cfg.agent.eta = parse_number<double>(key, value);
        } else if (key == "gamma") {
            if (!given("--gamma")) st.cfg.agent.gamma = parse_number<double>(key, value);
        } else if (key == "k_max") {
            if (!given("--k-max")) {
                st.cfg.agent.k_max = parse_number<Eigen::Index>(key, value);
            }
        } else if (key == "var_target") {
            if (!given("--var-target")) {
                st.cfg.agent.var_target = parse_number<double>(key, value);
            }
        } else if (key == "warmup") {
            if (!given("--warmup")) {
                st.cfg.agent.warmup = parse_number<Eigen::Index>(key, value);
            }
        } else if (key == "horizon") {
            if (!given("--horizon")) {
                st.cfg.agent.horizon = parse_number<Eigen::Index>(key, value);
            }
        } else if (key == "fallback_model") {
            if (!given("--fallback-model")) st.fallback_model = value;
        } else if (key == "average_action") {
            if (!given("--average-action") && !given("--no-average-action")) {
                st.cfg.include_average_action = parse_bool(key, value);
            }
        } else if (key == "jobs") {
            if (!given("--jobs")) st.cfg.jobs = parse_number<int>(key, value);
        } else if (key == "rank_method") {
            if (!given("--rank-method")) {
                if (value != "competition" && value != "average") {
                    throw rlcombine::ValidationError("config: bad rank_method '" + value +
                                                     "'");
                }
                st.rank_method = value;
            }
        } else {
            throw rlcombine::ValidationError("config: unknown key '" + key + "'");
        }
    }
}

void finish_config(CliState& st) {
    if (!st.fallback_model.empty()) {
        st.cfg.agent.fallback = rlcombine::FallbackPolicy::NamedModel;
        st.cfg.agent.fallback_model = st.fallback_model;
    }
    st.cfg.rank_method = st.rank_method == "average"
                             ? rlcombine::RankMethod::Average
                             : rlcombine::RankMethod::CompetitionMin;
    st.cfg.format = st.format == "m4-pair" ? rlcombine::PanelFormat::M4Pair
                                           : rlcombine::PanelFormat::WideCsv;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"forecast combination by learned model selection"};
    app.require_subcommand(1);

    CliState st;

    CLI::App* run = app.add_subcommand("run", "run the agent over one or more panels");
    run->add_option("--input,-i", st.cfg.inputs, "panel CSV file(s) or directory")
        ->required()
        ->expected(-1);
    run->add_option("--format", st.format, "wide-csv|m4-pair")
        ->check(CLI::IsMember({"wide-csv", "m4-pair"}))
        ->capture_default_str();
    run->add_option("--output,-o", st.cfg.output_dir, "output directory")->required();
    run->add_flag("--debug-dumps", st.cfg.debug_dumps,
                  "also write feature/embedding/q-table CSVs");
    run->add_flag("--post-warmup-report", st.cfg.post_warmup_report,
                  "additionally score post-warm-up targets only");
    add_agent_flags(*run, st);
    add_rank_flag(*run, st);

    CLI::App* simulate = app.add_subcommand("simulate", "evaluate on generated regime panels");
    simulate->add_option("--spec", st.spec_path, "regime spec file")->required();
    simulate->add_option("--runs", st.runs, "number of seeded runs")->required();
    simulate->add_option("--output,-o", st.cfg.output_dir, "output directory")->required();
    add_agent_flags(*simulate, st);

    CLI::App* report = app.add_subcommand("report", "score panels without running the agent");
    report->add_option("--input,-i", st.cfg.inputs, "panel CSV file(s) or directory")
        ->required()
        ->expected(-1);
    report->add_option("--format", st.format, "wide-csv|m4-pair")
        ->check(CLI::IsMember({"wide-csv", "m4-pair"}))
        ->capture_default_str();
    report->add_option("--forecasts", st.forecasts_dir,
                       "directory of <series>_forecast.csv files to score as 'rl'");
    report->add_option("--output,-o", st.cfg.output_dir, "output directory")->required();
    add_rank_flag(*report, st);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!st.config_path.empty()) {
            apply_config_file(run->parsed() ? *run : *simulate, st);
        }
        finish_config(st);
    } catch (const rlcombine::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const rlcombine::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    if (run->parsed()) return rlcombine::cmd_run(st.cfg);
    if (simulate->parsed()) return rlcombine::cmd_simulate(st.spec_path, st.runs, st.cfg);
    return rlcombine::cmd_report(st.cfg, st.forecasts_dir);
}
