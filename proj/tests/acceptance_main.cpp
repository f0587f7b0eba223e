// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. The dataset-backed reproductions at the end run only when
// their inputs are supplied via environment variables:
//
//   RLC_M4_DIR      M4-pair directory (actuals.csv + one CSV per method)
//   RLC_SPF_DIR     directory of wide-CSV panels, one per survey series
//   RLC_SPF_GROUPS  model,group CSV mapping forecasters to industries
//
// Reference values checked here come from the published result tables the
// reproduction targets.

#include "rlcombine/agent.hpp"
#include "rlcombine/errors.hpp"
#include "rlcombine/eval.hpp"
#include "rlcombine/panel.hpp"
#include "rlcombine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rlcombine;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail = "") {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << '\n';
    if (!pass) ++g_failures;
}

void skip(const std::string& name, const std::string& why) {
    std::cout << "[SKIP] " << name << " -- " << why << '\n';
}

// ---------------------------------------------------------------------------
// 1. Fallback equivalence: eta = 2 makes the run the simple average, bit-equal.
// ---------------------------------------------------------------------------
void criterion_fallback_equivalence() {
    std::mt19937_64 rng(101);
    bool ok = true;
    std::string detail;
    for (int rep = 0; rep < 20 && ok; ++rep) {
        RegimeSpec spec;
        spec.n_models = 2 + static_cast<Eigen::Index>(rng() % 5);
        spec.seed = rng();
        spec.base = (rng() % 2) ? RegimeSpec::Base::RandomWalk : RegimeSpec::Base::Constant;
        const int regimes = 1 + static_cast<int>(rng() % 3);
        for (int r = 0; r < regimes; ++r) {
            RegimeSpec::Regime regime;
            regime.length = 20 + static_cast<Eigen::Index>(rng() % 30);
            for (Eigen::Index a = 0; a < spec.n_models; ++a) {
                regime.model_stds.push_back(0.1 + static_cast<double>(rng() % 200) / 100.0);
            }
            spec.regimes.push_back(std::move(regime));
        }
        const ForecastPanel panel = generate(spec);
        const ForecastPanel bench = append_benchmark_average(panel);
        AgentConfig cfg;
        cfg.eta = 2.0;
        const RunResult out = run(panel, cfg);
        const Eigen::Index avg = bench.model_index(kSimpleAverageName);
        for (Eigen::Index t = 0; t < panel.periods(); ++t) {
            if (out.forecasts[t] != bench.forecasts(t, avg)) {
                ok = false;
                detail = "panel " + std::to_string(rep) + " differs at period " +
                         std::to_string(t);
                break;
            }
        }
    }
    report("fallback equivalence (20 panels, eta=2, bit-equal)", ok, detail);
}

// ---------------------------------------------------------------------------
// 2. Dominant-model convergence: with one zero-noise model every selection
//    after the warm-up picks it.
// ---------------------------------------------------------------------------
void criterion_dominant_model() {
    RegimeSpec spec;
    spec.n_models = 4;
    spec.seed = 2024;
    spec.regimes.push_back({300, {1.0, 0.0, 1.0, 1.0}});
    const ForecastPanel panel = generate(spec);
    const Eigen::Index dominant = 1;

    AgentConfig cfg;
    cfg.eta = -1.0;
    cfg.alpha = 0.1;
    const RunResult out = run(panel, cfg);

    Eigen::Index post_warmup = 0, selections = 0, dominant_picks = 0;
    for (const auto& d : out.decisions) {
        if (d.target - cfg.horizon < cfg.warmup) continue;
        ++post_warmup;
        if (!d.used_fallback) {
            ++selections;
            if (d.action == dominant) ++dominant_picks;
        }
    }
    // the very first step has no history to match; every later one must select
    const bool ok = selections >= post_warmup - 1 && selections > 0 &&
                    dominant_picks == selections;
    std::ostringstream detail;
    detail << dominant_picks << "/" << selections << " selections, " << post_warmup
           << " post-warm-up steps";
    report("dominant-model convergence (selection frequency 100%)", ok, detail.str());
}

// ---------------------------------------------------------------------------
// 3. TD arithmetic: |q' - g| = (1 - alpha) |q - g| to 1e-12.
// ---------------------------------------------------------------------------
void criterion_td_arithmetic() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> val(-100.0, 100.0);
    std::uniform_real_distribution<double> rate(1e-6, 1.0);
    bool ok = true;
    for (int i = 0; i < 1000 && ok; ++i) {
        const double q = val(rng), g = val(rng), alpha = rate(rng);
        ActionValues qv;
        qv.values = Eigen::VectorXd::Constant(1, q);
        qv.observed = {true};
        Reward r;
        r.g.values = Eigen::VectorXd::Constant(1, g);
        r.g.observed = {true};
        const ActionValues out = td_update(qv, r, alpha);
        const double lhs = std::abs(out.values[0] - g);
        const double rhs = (1.0 - alpha) * std::abs(q - g);
        if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, rhs)) ok = false;
    }
    report("td arithmetic (1000 random triples, 1e-12)", ok);
}

// ---------------------------------------------------------------------------
// 4. PCA validity on random standardized matrices.
// ---------------------------------------------------------------------------
void criterion_pca_validity() {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> dist;
    bool ok = true;
    std::string detail;
    for (int rep = 0; rep < 100 && ok; ++rep) {
        const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng() % 9);  // <= 10
        const Eigen::Index t = 2 + static_cast<Eigen::Index>(rng() % 49); // <= 50
        FeatureMatrix f;
        f.values.resize(p, t);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < t; ++j) f.values(i, j) = dist(rng);
        f.t = t;
        const FeatureMatrix z = standardize(f);
        const PcaModel m = fit_pca(z, p, 1.0);

        const Eigen::MatrixXd gram = m.components * m.components.transpose();
        if ((gram - Eigen::MatrixXd::Identity(m.k, m.k)).cwiseAbs().maxCoeff() > 1e-10) {
            ok = false;
            detail = "orthonormality";
            break;
        }
        for (Eigen::Index i = 0; i + 1 < m.k; ++i) {
            if (m.explained_variance[i] < m.explained_variance[i + 1]) {
                ok = false;
                detail = "variance ordering";
            }
        }
        for (Eigen::Index j = 0; j < t && ok; ++j) {
            const Eigen::VectorXd col = z.values.col(j);
            const Eigen::VectorXd rec = m.components.transpose() * (m.components * col);
            if ((rec - col).norm() > 1e-8) {
                ok = false;
                detail = "reconstruction";
            }
        }
        const PcaModel m2 = fit_pca(z, p, 1.0);
        if (!(m2.components.cwiseEqual(m.components).all() &&
              m2.explained_variance.cwiseEqual(m.explained_variance).all())) {
            ok = false;
            detail = "refit determinism";
        }
    }
    report("pca validity (100 random matrices)", ok, detail);
}

// ---------------------------------------------------------------------------
// 5. Cosine similarity algebra.
// ---------------------------------------------------------------------------
void criterion_cosine_algebra() {
    std::mt19937_64 rng(505);
    std::normal_distribution<double> dist;
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    bool ok = true;
    for (int i = 0; i < 1000 && ok; ++i) {
        const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng() % 8);
        Eigen::VectorXd x(k);
        for (Eigen::Index j = 0; j < k; ++j) x[j] = dist(rng);
        if (x.norm() < 1e-6) continue;
        const double c = scale(rng);
        Eigen::VectorXd y(k);
        for (Eigen::Index j = 0; j < k; ++j) y[j] = dist(rng);

        if (std::abs(cosine_similarity(x, x) - 1.0) > 1e-12) ok = false;
        if (std::abs(cosine_similarity(x, (c * x).eval()) - 1.0) > 1e-12) ok = false;
        if (std::abs(cosine_similarity(x, (-x).eval()) + 1.0) > 1e-12) ok = false;
        if (std::abs(cosine_similarity(x, y)) > 1.0 + 1e-12) ok = false;
        if (cosine_similarity(x, Eigen::VectorXd::Zero(k)) != 0.0) ok = false;
    }
    report("cosine similarity algebra (1000 vectors)", ok);
}

// ---------------------------------------------------------------------------
// 6. Oracle equivalence: hand-simulated T=6 trace, field for field.
// ---------------------------------------------------------------------------
std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

void criterion_oracle_trace() {
    const auto fixture_dir = std::filesystem::path(RLC_FIXTURE_DIR);
    const ForecastPanel panel = load_wide_csv(fixture_dir / "tiny_panel.csv");
    AgentConfig cfg;
    cfg.alpha = 0.1;
    cfg.eta = 0.5;
    cfg.k_max = 1;
    cfg.warmup = 3;
    const RunResult out = run(panel, cfg);

    const auto tmp = std::filesystem::temp_directory_path() / "rlc_acceptance_trace.csv";
    save_decision_log(out.decisions, panel, tmp);
    const auto actual = read_csv_rows(tmp);
    const auto expected = read_csv_rows(fixture_dir / "tiny_trace_expected.csv");
    std::filesystem::remove(tmp);

    bool ok = actual.size() == expected.size();
    std::string detail;
    for (std::size_t r = 0; ok && r < expected.size(); ++r) {
        if (actual[r].size() != expected[r].size()) {
            ok = false;
            detail = "row " + std::to_string(r) + " width";
            break;
        }
        for (std::size_t c = 0; c < expected[r].size(); ++c) {
            const std::string& e = expected[r][c];
            const std::string& a = actual[r][c];
            bool cell_ok;
            if (r == 0 || c == 0 || c == 2 || c == 3 || c == 4) {
                cell_ok = a == e; // header, labels, action, flag: exact
            } else if (e.empty() || a.empty()) {
                cell_ok = a == e;
            } else if (c == 1) { // similarity: tiny float slack
                cell_ok = std::abs(std::stod(a) - std::stod(e)) <= 1e-12;
            } else { // forecast: bit-equal after parse
                cell_ok = std::stod(a) == std::stod(e);
            }
            if (!cell_ok) {
                ok = false;
                detail = "row " + std::to_string(r) + " col " + std::to_string(c) + ": '" +
                         a + "' vs '" + e + "'";
                break;
            }
        }
    }
    report("oracle equivalence (T=6 hand-simulated trace)", ok, detail);
}

// ---------------------------------------------------------------------------
// 7. Regime adaptation: the agent beats the simple average across seeds when
//    the best model swaps between regimes.
// ---------------------------------------------------------------------------
void criterion_regime_adaptation() {
    int wins = 0;
    double sum_rl = 0.0, sum_avg = 0.0;
    const int seeds = 100;
    for (int seed = 0; seed < seeds; ++seed) {
        RegimeSpec spec;
        spec.n_models = 2;
        spec.seed = static_cast<std::uint64_t>(seed);
        spec.regimes.push_back({150, {0.5, 1.5}});
        spec.regimes.push_back({150, {1.5, 0.5}});
        const ForecastPanel panel = generate(spec);
        const ForecastPanel bench = append_benchmark_average(panel);
        const Eigen::Index avg = bench.model_index(kSimpleAverageName);

        AgentConfig cfg; // defaults: alpha 0.1, eta 0.95
        const RunResult out = run(panel, cfg);
        const double rl_mse = mse(panel.y, out.forecasts);
        const double avg_mse = mse(panel.y, bench.forecasts.col(avg));
        sum_rl += rl_mse;
        sum_avg += avg_mse;
        if (rl_mse < avg_mse) ++wins;
    }
    const bool ok = wins >= 60 && sum_rl / seeds <= sum_avg / seeds;
    std::ostringstream detail;
    detail << wins << "/100 wins, mean mse " << sum_rl / seeds << " vs "
           << sum_avg / seeds;
    report("regime adaptation (>=60% wins, mean mse no worse)", ok, detail.str());
}

// ---------------------------------------------------------------------------
// Dataset-dependent reproductions (best effort, skipped without data).
// ---------------------------------------------------------------------------
void m4_reproduction() {
    const char* dir = std::getenv("RLC_M4_DIR");
    if (dir == nullptr) {
        skip("m4 hourly reproduction", "set RLC_M4_DIR to an M4-pair directory");
        return;
    }
    try {
        const auto panels = load_m4_directory(dir);
        AgentConfig cfg;

        std::vector<std::map<std::string, double>> per_series;
        std::map<std::string, double> pooled_sum;
        std::map<std::string, Eigen::Index> pooled_count;
        for (const auto& raw : panels) {
            const ForecastPanel bench = append_benchmark_average(raw);
            const RunResult out = run(bench, cfg);
            std::map<std::string, double> scores;
            for (Eigen::Index a = 0; a < bench.models(); ++a) {
                const auto& name = bench.model_names[static_cast<std::size_t>(a)];
                const BoolVecRef mask = bench.available.col(a);
                scores[name] = mse(bench.y, bench.forecasts.col(a), mask);
                double sum = 0.0;
                Eigen::Index count = 0;
                for (Eigen::Index t = 0; t < bench.periods(); ++t) {
                    if (!mask[t]) continue;
                    const double e = bench.y[t] - bench.forecasts(t, a);
                    sum += e * e;
                    ++count;
                }
                pooled_sum[name] += sum;
                pooled_count[name] += count;
            }
            scores["rl"] = mse(bench.y, out.forecasts);
            double sum = 0.0;
            for (Eigen::Index t = 0; t < bench.periods(); ++t) {
                const double e = bench.y[t] - out.forecasts[t];
                sum += e * e;
            }
            pooled_sum["rl"] += sum;
            pooled_count["rl"] += bench.periods();
            per_series.push_back(std::move(scores));
        }

        // variant A: mean of per-series MSEs (series weighted equally)
        std::map<std::string, double> mean_of_series;
        for (const auto& scores : per_series) {
            for (const auto& [name, value] : scores) mean_of_series[name] += value;
        }
        for (auto& [name, value] : mean_of_series) {
            value /= static_cast<double>(per_series.size());
        }
        // variant B: pooled squared errors
        std::map<std::string, double> pooled;
        for (const auto& [name, sum] : pooled_sum) {
            pooled[name] = sum / static_cast<double>(pooled_count[name]);
        }

        const auto rank_of = [](const std::map<std::string, double>& scores) {
            return rank_experiment(scores).at("rl");
        };
        const double rank_mean = rank_of(mean_of_series);
        const double rank_pooled = rank_of(pooled);
        const double best_rank = std::min(rank_mean, rank_pooled);

        constexpr double kPublishedRlMse = 15.235;
        const bool mse_band =
            std::abs(mean_of_series.at("rl") - kPublishedRlMse) <= 0.1 * kPublishedRlMse ||
            std::abs(pooled.at("rl") - kPublishedRlMse) <= 0.1 * kPublishedRlMse;

        std::ostringstream detail;
        detail << panels.size() << " series; rl mse mean-of-series "
               << mean_of_series.at("rl") << " (rank " << rank_mean << "), pooled "
               << pooled.at("rl") << " (rank " << rank_pooled << ")";
        if (best_rank == 2) detail << "; warning: rank 2, not 1";
        if (!mse_band) detail << "; warning: outside +/-10% of published 15.235";
        report("m4 hourly reproduction (rank 1-2 among candidates)", best_rank <= 2.0,
               detail.str());
    } catch (const std::exception& e) {
        report("m4 hourly reproduction", false, e.what());
    }
}

void spf_reproduction() {
    const char* dir = std::getenv("RLC_SPF_DIR");
    const char* groups_path = std::getenv("RLC_SPF_GROUPS");
    if (dir == nullptr || groups_path == nullptr) {
        skip("spf reproduction", "set RLC_SPF_DIR and RLC_SPF_GROUPS");
        return;
    }
    // Published per-series RL mean squared errors of the study this
    // reproduces (industry-mean benchmark construction).
    const std::map<std::string, double> published_rl{
        {"COREPCE", 95.04},  {"CPI", 230.52},    {"HOUSING", 1333.92},
        {"INDPROD", 24.61},  {"NGDP", 452.71},   {"PCE", 95.78},
        {"PGDP", 30.10},     {"RCBI", 41.63},    {"RCONSUM", 2462.81},
        {"RFEDGOV", 362.87}, {"RGDP", 2533.03},  {"RNRESIN", 380.13},
        {"RRESINV", 318.08}, {"RSLGOV", 734.47},
    };
    try {
        const GroupMap groups = load_group_map(groups_path);
        const auto groups_file = std::filesystem::weakly_canonical(groups_path);
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
                std::filesystem::weakly_canonical(entry.path()) != groups_file) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ValidationError("no series panels in RLC_SPF_DIR");

        AgentConfig cfg;
        std::vector<std::map<std::string, double>> rank_maps;
        std::ostringstream notes;
        for (const auto& file : files) {
            const ForecastPanel raw = load_wide_csv(file);
            const ForecastPanel grouped = group_mean_panel(raw, groups);
            const ForecastPanel bench = append_benchmark_average(grouped);
            const RunResult out = run(bench, cfg);

            std::map<std::string, double> scores;
            for (Eigen::Index a = 0; a < bench.models(); ++a) {
                scores[bench.model_names[static_cast<std::size_t>(a)]] =
                    mse(bench.y, bench.forecasts.col(a), bench.available.col(a));
            }
            const double rl_mse = mse(bench.y, out.forecasts);
            scores["rl"] = rl_mse;
            rank_maps.push_back(rank_experiment(scores));

            const auto ref = published_rl.find(raw.series_id);
            if (ref != published_rl.end()) {
                const double dev = std::abs(rl_mse - ref->second) / ref->second;
                if (dev > 0.05) {
                    notes << ' ' << raw.series_id << " deviates "
                          << static_cast<int>(dev * 100) << "%;";
                }
            }
        }
        const auto mean_ranks = aggregate_ranks(rank_maps);
        const double rl_rank = mean_ranks.at("rl");
        std::ostringstream detail;
        detail << files.size() << " series, rl mean rank " << rl_rank
               << " (published study: 1.93)";
        if (notes.str().length() > 0) detail << "; warnings:" << notes.str();
        report("spf reproduction (rl mean rank <= 2.5)", rl_rank <= 2.5, detail.str());
    } catch (const std::exception& e) {
        report("spf reproduction", false, e.what());
    }
}

} // namespace

int main() {
    criterion_fallback_equivalence();
    criterion_dominant_model();
    criterion_td_arithmetic();
    criterion_pca_validity();
    criterion_cosine_algebra();
    criterion_oracle_trace();
    criterion_regime_adaptation();
    m4_reproduction();
    spf_reproduction();

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
