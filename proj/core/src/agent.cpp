#include "rlcombine/agent.hpp"

#include "csv_util.hpp"
#include "rlcombine/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rlcombine {

void validate_config(const AgentConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
        throw ValidationError("alpha must be in (0, 1]");
    }
    if (cfg.eta < -1.0) throw ValidationError("eta must be >= -1");
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) {
        throw ValidationError("gamma must be in [0, 1)");
    }
    if (cfg.k_max < 1) throw ValidationError("k_max must be positive");
    if (!(cfg.var_target > 0.0 && cfg.var_target <= 1.0)) {
        throw ValidationError("var_target must be in (0, 1]");
    }
    if (cfg.warmup < 3) throw ValidationError("warmup must be at least 3");
    if (cfg.horizon < 1) throw ValidationError("horizon must be positive");
    if (cfg.fallback == FallbackPolicy::NamedModel && cfg.fallback_model.empty()) {
        throw ValidationError("named-model fallback needs a model name");
    }
}

ActionValues ActionValues::unobserved(Eigen::Index n) {
    ActionValues v;
    v.values = Eigen::VectorXd::Zero(n);
    v.observed.assign(static_cast<std::size_t>(n), false);
    return v;
}

Reward reward_at(const ForecastPanel& panel, Eigen::Index target) {
    const Eigen::Index n = panel.models();
    Reward r;
    r.g = ActionValues::unobserved(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        if (panel.available(target, a)) {
            const double err = panel.y[target] - panel.forecasts(target, a);
            r.g.values[a] = -(err * err);
            r.g.observed[static_cast<std::size_t>(a)] = true;
        }
    }
    return r;
}

void QTable::append(QTableRow row) {
    if (row.q.size() != n_actions_) {
        throw ValidationError("q-row size does not match the action count");
    }
    if (!rows_.empty() && row.t <= rows_.back().t) {
        throw ValidationError("q-table rows must have strictly increasing origins");
    }
    rows_.push_back(std::move(row));
}

QTableRow& QTable::mutable_row_at(Eigen::Index t) {
    const auto it = std::lower_bound(
        rows_.begin(), rows_.end(), t,
        [](const QTableRow& row, Eigen::Index value) { return row.t < value; });
    if (it == rows_.end() || it->t != t) {
        throw ValidationError("no q-table row for origin " + std::to_string(t));
    }
    return *it;
}

const QTableRow& QTable::row_at(Eigen::Index t) const {
    return const_cast<QTable*>(this)->mutable_row_at(t);
}

void QTable::apply_reward(Eigen::Index t, const Reward& reward, double alpha) {
    QTableRow& row = mutable_row_at(t);
    row.q = td_update(row.q, reward, alpha);
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw ValidationError("cosine_similarity: length mismatch");
    }
    const double na = std::sqrt(a.dot(a));
    const double nb = std::sqrt(b.dot(b));
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return a.dot(b) / (na * nb);
}

std::optional<Match> most_similar(const StateEmbedding& current, const QTable& history) {
    std::optional<Match> best;
    for (Eigen::Index i = 0; i < history.size(); ++i) {
        const StateEmbedding& stored = history.row(i).embedding;
        const Eigen::Index k = std::min(current.scores.size(), stored.scores.size());
        const double sim = cosine_similarity(current.scores.head(k), stored.scores.head(k));
        // >= so that equal similarity prefers the most recent origin
        if (!best || sim >= best->similarity) {
            best = Match{history.row(i).t, sim};
        }
    }
    return best;
}

std::optional<Eigen::Index> select_action(const ActionValues& q, const BoolVec& available) {
    if (q.size() != available.size()) {
        throw ValidationError("select_action: availability mask size mismatch");
    }
    std::optional<Eigen::Index> best;
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        if (!q.observed[static_cast<std::size_t>(a)] || !available[a]) continue;
        if (!best || q.values[a] > q.values[*best]) best = a;
    }
    return best;
}

double fallback_forecast(const ForecastPanel& panel, Eigen::Index target,
                         const AgentConfig& cfg) {
    if (cfg.fallback == FallbackPolicy::NamedModel) {
        const Eigen::Index a = panel.model_index(cfg.fallback_model);
        if (a >= 0 && panel.available(target, a)) return panel.forecasts(target, a);
    }
    const Eigen::Index avg = panel.model_index(kSimpleAverageName);
    if (avg >= 0 && panel.available(target, avg)) return panel.forecasts(target, avg);
    const auto mean = mean_available_forecast(panel, target);
    if (!mean) throw ValidationError("no available forecast to fall back on");
    return *mean;
}

ActionValues td_update(const ActionValues& q, const Reward& reward, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must be in (0, 1]");
    if (reward.g.size() != q.size()) throw ValidationError("td_update: size mismatch");
    ActionValues out = q;
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        if (!reward.g.observed[static_cast<std::size_t>(a)]) continue;
        const double g = reward.g.values[a];
        if (out.observed[static_cast<std::size_t>(a)]) {
            out.values[a] += alpha * (g - out.values[a]);
        } else {
            out.values[a] = g;
            out.observed[static_cast<std::size_t>(a)] = true;
        }
    }
    return out;
}

StepResult step(const ForecastPanel& panel, Eigen::Index origin, QTable& table,
                const AgentConfig& cfg) {
    const Eigen::Index target = origin + cfg.horizon;
    if (origin < cfg.warmup) throw ValidationError("step: origin still inside the warm-up");
    if (target >= panel.periods()) throw ValidationError("step: target beyond the panel");

    const FeatureMatrix z = standardize(build_features(panel, origin + 1));
    const PcaModel pca = fit_pca(z, cfg.k_max, cfg.var_target);
    const StateEmbedding state = embed(pca, z, origin);

    const auto match = most_similar(state, table);

    QTableRow row;
    row.t = origin;
    row.embedding = state;
    if (match) {
        row.matched_t0 = match->t0;
        row.similarity = match->similarity;
    }

    StepResult result;
    result.record.target = target;
    result.record.matched_t0 = row.matched_t0;
    result.record.similarity = row.similarity;

    const BoolVec available = panel.available.row(target).transpose();
    std::optional<Eigen::Index> chosen;
    if (match && match->similarity > cfg.eta) {
        row.q = table.row_at(match->t0).q; // exact copy, flags included
        chosen = select_action(row.q, available);
    } else {
        row.q = ActionValues::unobserved(panel.models());
    }

    if (chosen) {
        row.chosen_action = static_cast<int>(*chosen);
        row.used_fallback = false;
        result.forecast = panel.forecasts(target, *chosen);
    } else {
        row.chosen_action = -1;
        row.used_fallback = true;
        result.forecast = fallback_forecast(panel, target, cfg);
    }
    result.record.action = row.chosen_action;
    result.record.used_fallback = row.used_fallback;
    result.record.forecast = result.forecast;

    table.append(std::move(row));
    return result;
}

void observe(QTable& table, Eigen::Index t, const Reward& reward, double alpha) {
    table.apply_reward(t, reward, alpha);
}

RunResult run(const ForecastPanel& panel, const AgentConfig& cfg) {
    validate_config(cfg);
    validate_panel(panel);
    const Eigen::Index T = panel.periods();
    const Eigen::Index h = cfg.horizon;
    if (T <= cfg.warmup + h) {
        throw ValidationError("panel too short: need more than warmup + horizon periods");
    }

    RunResult result{Eigen::VectorXd::Zero(T), QTable(panel.models()), {}};
    result.decisions.reserve(static_cast<std::size_t>(T));

    Eigen::Index next_obs = 0; // next stored row (insertion order) awaiting its reward
    for (Eigen::Index target = 0; target < T; ++target) {
        const Eigen::Index origin = target - h;
        // Rewards realized by the current information time (origin) are
        // applied before this decision; nothing later leaks in.
        while (next_obs < result.qtable.size() &&
               result.qtable.row(next_obs).t + h <= origin) {
            const Eigen::Index t0 = result.qtable.row(next_obs).t;
            observe(result.qtable, t0, reward_at(panel, t0 + h), cfg.alpha);
            ++next_obs;
        }

        if (origin < cfg.warmup) {
            DecisionRecord rec;
            rec.target = target;
            rec.forecast = fallback_forecast(panel, target, cfg);
            result.forecasts[target] = rec.forecast;
            result.decisions.push_back(rec);
        } else {
            const StepResult s = step(panel, origin, result.qtable, cfg);
            result.forecasts[target] = s.forecast;
            result.decisions.push_back(s.record);
        }
    }

    // Targets of the remaining rows all lie inside the panel; finish the
    // bookkeeping so the final table reflects every realized reward.
    while (next_obs < result.qtable.size()) {
        const Eigen::Index t0 = result.qtable.row(next_obs).t;
        if (t0 + h < T) {
            observe(result.qtable, t0, reward_at(panel, t0 + h), cfg.alpha);
        }
        ++next_obs;
    }
    return result;
}

namespace {

std::string label_of(const ForecastPanel& panel, Eigen::Index t) {
    return panel.time_labels[static_cast<std::size_t>(t)];
}

} // namespace

void save_decision_log(const std::vector<DecisionRecord>& decisions,
                       const ForecastPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t,similarity,matched_t0,action,used_fallback,forecast\n";
    for (const auto& d : decisions) {
        out << label_of(panel, d.target) << ',';
        if (d.similarity) out << detail::format_double(*d.similarity);
        out << ',';
        if (d.matched_t0) out << label_of(panel, *d.matched_t0);
        out << ',';
        if (d.action >= 0) out << panel.model_names[static_cast<std::size_t>(d.action)];
        out << ',' << (d.used_fallback ? '1' : '0') << ','
            << detail::format_double(d.forecast) << '\n';
    }
}

void save_qtable(const QTable& table, const ForecastPanel& panel,
                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    Eigen::Index k_max = 0;
    for (Eigen::Index i = 0; i < table.size(); ++i) {
        k_max = std::max(k_max, table.row(i).embedding.scores.size());
    }
    out << "t,similarity,matched_t0,action,used_fallback";
    for (const auto& name : panel.model_names) out << ",q_" << name;
    for (Eigen::Index j = 0; j < k_max; ++j) out << ",pc" << (j + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < table.size(); ++i) {
        const QTableRow& row = table.row(i);
        out << label_of(panel, row.t) << ',';
        if (row.similarity) out << detail::format_double(*row.similarity);
        out << ',';
        if (row.matched_t0) out << label_of(panel, *row.matched_t0);
        out << ',';
        if (row.chosen_action >= 0) {
            out << panel.model_names[static_cast<std::size_t>(row.chosen_action)];
        }
        out << ',' << (row.used_fallback ? '1' : '0');
        for (Eigen::Index a = 0; a < row.q.size(); ++a) {
            out << ',';
            if (row.q.observed[static_cast<std::size_t>(a)]) {
                out << detail::format_double(row.q.values[a]);
            }
        }
        for (Eigen::Index j = 0; j < k_max; ++j) {
            out << ',';
            if (j < row.embedding.scores.size()) {
                out << detail::format_double(row.embedding.scores[j]);
            }
        }
        out << '\n';
    }
}

} // namespace rlcombine
