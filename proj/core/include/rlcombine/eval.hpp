#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rlcombine {

using BoolVecRef = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Mean squared error over the evaluable points (mask true). Throws
/// ValidationError when lengths differ or no point is evaluable.
double mse(const Eigen::VectorXd& actual, const Eigen::VectorXd& forecast,
           const BoolVecRef& mask);

/// All points evaluable.
double mse(const Eigen::VectorXd& actual, const Eigen::VectorXd& forecast);

enum class RankMethod {
    CompetitionMin, ///< ties share the smaller rank, following ranks skip
    Average,        ///< ties share the mean of the positions they span
};

/// Ascending-MSE ranks, 1 = best. Exact ties are resolved by `method`.
std::map<std::string, double> rank_experiment(const std::map<std::string, double>& mse_by_model,
                                              RankMethod method = RankMethod::CompetitionMin);

/// Arithmetic mean rank per model. Every map must cover the same model set.
std::map<std::string, double>
aggregate_ranks(const std::vector<std::map<std::string, double>>& per_experiment);

struct ModelScore {
    std::string model;
    double mse = 0.0;
    double rank = 0.0;
};

struct ExperimentScore {
    std::string series_id;
    std::vector<ModelScore> scores; ///< ordered by ascending MSE, then name
};

struct ScoreReport {
    std::vector<ExperimentScore> experiments;
    std::map<std::string, double> mean_rank;

    Eigen::Index n_experiments() const {
        return static_cast<Eigen::Index>(experiments.size());
    }
};

/// Scores + ranks for a list of experiments, plus the cross-experiment mean
/// ranks.
ScoreReport build_score_report(const std::vector<std::string>& series_ids,
                               const std::vector<std::map<std::string, double>>& mse_maps,
                               RankMethod method = RankMethod::CompetitionMin);

/// CSV `series_id,model,mse,rank`, one block per experiment.
void write_report_csv(const ScoreReport& report, const std::filesystem::path& path);

/// CSV `model,mean_rank,n_experiments`, ascending mean rank.
void write_aggregate_csv(const ScoreReport& report, const std::filesystem::path& path);

/// JSON document mirroring both CSVs.
void write_report_json(const ScoreReport& report, const std::filesystem::path& path);

} // namespace rlcombine
