#pragma once

#include "rlcombine/embedding.hpp"
#include "rlcombine/panel.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rlcombine {

using BoolVec = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class FallbackPolicy { SimpleAverage, NamedModel };

struct AgentConfig {
    double alpha = 0.1;  ///< learning rate, (0, 1]
    double eta = 0.95;   ///< similarity threshold; > 1 forces permanent fallback
    double gamma = 0.0;  ///< discount, retained for configuration; the applied update is undiscounted
    Eigen::Index k_max = 3;
    double var_target = 0.9;
    Eigen::Index warmup = 5; ///< leading decision origins that always fall back, >= 3
    Eigen::Index horizon = 1;
    FallbackPolicy fallback = FallbackPolicy::SimpleAverage;
    std::string fallback_model; ///< used when fallback == NamedModel
};

/// Throws ValidationError on out-of-range fields.
void validate_config(const AgentConfig& cfg);

/// Per-action values with an explicit marker for never-updated entries.
struct ActionValues {
    Eigen::VectorXd values;     ///< finite where observed; unobserved slots hold 0
    std::vector<bool> observed; ///< one flag per action

    static ActionValues unobserved(Eigen::Index n);
    Eigen::Index size() const { return values.size(); }
};

/// Realized rewards at one period: g(a) = -(squared forecast error of a).
/// Unavailable actions are unobserved.
struct Reward {
    ActionValues g;
};

/// Reward vector for the given target period of the panel.
Reward reward_at(const ForecastPanel& panel, Eigen::Index target);

/// One stored decision state. Rows are append-only and their embeddings are
/// frozen: later refits never rewrite them.
struct QTableRow {
    Eigen::Index t = 0; ///< decision origin period
    StateEmbedding embedding;
    ActionValues q;
    int chosen_action = -1; ///< -1 when no model was selected
    std::optional<Eigen::Index> matched_t0; ///< best historical candidate, if any
    std::optional<double> similarity;       ///< its cosine similarity
    bool used_fallback = true;
};

class QTable {
public:
    QTable() = default;
    explicit QTable(Eigen::Index n_actions) : n_actions_(n_actions) {}

    /// Rows must arrive in strictly increasing origin order.
    void append(QTableRow row);

    Eigen::Index size() const { return static_cast<Eigen::Index>(rows_.size()); }
    bool empty() const { return rows_.empty(); }
    Eigen::Index n_actions() const { return n_actions_; }
    const QTableRow& row(Eigen::Index i) const { return rows_[static_cast<std::size_t>(i)]; }

    /// Row with origin `t`; throws ValidationError when absent.
    const QTableRow& row_at(Eigen::Index t) const;

    /// Replaces row t's action values with td_update(q, reward, alpha).
    /// Other rows -- including the row it may have been copied from -- are
    /// untouched.
    void apply_reward(Eigen::Index t, const Reward& reward, double alpha);

private:
    QTableRow& mutable_row_at(Eigen::Index t);

    std::vector<QTableRow> rows_;
    Eigen::Index n_actions_ = 0;
};

/// <a,b>/(|a||b|), or 0 when either norm is under 1e-12. Throws on length
/// mismatch.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct Match {
    Eigen::Index t0;
    double similarity;
};

/// Highest-similarity stored state, ties resolved toward the most recent
/// origin. Embeddings of different dimension (the retained k changed between
/// refits) are compared on their common leading components. nullopt when the
/// history is empty.
std::optional<Match> most_similar(const StateEmbedding& current, const QTable& history);

/// Argmax over actions that are both observed and available; ties go to the
/// lowest index. nullopt signals that the caller must fall back.
std::optional<Eigen::Index> select_action(const ActionValues& q, const BoolVec& available);

/// Benchmark forecast for a target period: the configured named model when
/// available, else the panel's simple-average column when present, else the
/// mean of the available forecasts.
double fallback_forecast(const ForecastPanel& panel, Eigen::Index target,
                         const AgentConfig& cfg);

/// q'(a) = q(a) + alpha * (g(a) - q(a)) for observed rewards; a first
/// observation overwrites (q'(a) = g(a)); unobserved rewards leave q(a)
/// unchanged. Applies to every action with an observed reward, not only the
/// chosen one.
ActionValues td_update(const ActionValues& q, const Reward& reward, double alpha);

/// One emitted forecast and why.
struct DecisionRecord {
    Eigen::Index target = 0;
    std::optional<double> similarity;
    std::optional<Eigen::Index> matched_t0;
    int action = -1; ///< model column index, -1 on fallback
    bool used_fallback = true;
    double forecast = 0.0;
};

struct StepResult {
    double forecast = 0.0;
    DecisionRecord record;
};

/// One decision at `origin`: refit the embedding on periods [0, origin],
/// search the frozen history, copy the matched Q-row when similarity
/// exceeds eta and emit the argmax model's forecast for origin + horizon;
/// otherwise emit the fallback and start the new row unobserved. Appends
/// the new row. Deterministic given (panel, cfg).
StepResult step(const ForecastPanel& panel, Eigen::Index origin, QTable& table,
                const AgentConfig& cfg);

/// Feeds a realized reward into row `t`.
void observe(QTable& table, Eigen::Index t, const Reward& reward, double alpha);

struct RunResult {
    Eigen::VectorXd forecasts; ///< one per panel period, aligned
    QTable qtable;
    std::vector<DecisionRecord> decisions; ///< one per panel period
};

/// Full rolling run over the panel: fallback through the warm-up, then one
/// step per origin with rewards applied as their targets realize. Strictly
/// sequential in t; independent panels can run concurrently.
RunResult run(const ForecastPanel& panel, const AgentConfig& cfg);

/// CSV `t,similarity,matched_t0,action,used_fallback,forecast`, one row per
/// panel period. Time labels come from the panel; empty cells mean
/// "not applicable".
void save_decision_log(const std::vector<DecisionRecord>& decisions,
                       const ForecastPanel& panel, const std::filesystem::path& path);

/// Debug dump of the stored rows: origin, provenance, per-action values and
/// embedding scores (columns padded to the widest embedding).
void save_qtable(const QTable& table, const ForecastPanel& panel,
                 const std::filesystem::path& path);

} // namespace rlcombine
