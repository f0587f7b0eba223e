#include "rlcombine/eval.hpp"

#include "csv_util.hpp"
#include "rlcombine/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace rlcombine {

double mse(const Eigen::VectorXd& actual, const Eigen::VectorXd& forecast,
           const BoolVecRef& mask) {
    if (actual.size() != forecast.size() || actual.size() != mask.size()) {
        throw ValidationError("mse: length mismatch");
    }
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index t = 0; t < actual.size(); ++t) {
        if (!mask[t]) continue;
        const double err = actual[t] - forecast[t];
        sum += err * err;
        ++count;
    }
    if (count == 0) throw ValidationError("mse: no evaluable points");
    return sum / static_cast<double>(count);
}

double mse(const Eigen::VectorXd& actual, const Eigen::VectorXd& forecast) {
    return mse(actual, forecast, BoolVecRef::Constant(actual.size(), true));
}

std::map<std::string, double> rank_experiment(const std::map<std::string, double>& mse_by_model,
                                              RankMethod method) {
    if (mse_by_model.empty()) throw ValidationError("rank_experiment: no models");
    std::vector<std::pair<std::string, double>> ordered(mse_by_model.begin(),
                                                        mse_by_model.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    std::map<std::string, double> ranks;
    std::size_t i = 0;
    while (i < ordered.size()) {
        std::size_t j = i;
        while (j < ordered.size() && ordered[j].second == ordered[i].second) ++j;
        // tie block [i, j): positions i+1 .. j
        double rank = 0.0;
        switch (method) {
        case RankMethod::CompetitionMin:
            rank = static_cast<double>(i + 1);
            break;
        case RankMethod::Average:
            rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
            break;
        }
        for (std::size_t m = i; m < j; ++m) ranks[ordered[m].first] = rank;
        i = j;
    }
    return ranks;
}

std::map<std::string, double>
aggregate_ranks(const std::vector<std::map<std::string, double>>& per_experiment) {
    if (per_experiment.empty()) throw ValidationError("aggregate_ranks: no experiments");
    const auto& first = per_experiment.front();
    std::map<std::string, double> sums;
    for (const auto& [model, rank] : first) sums[model] = 0.0;
    for (const auto& experiment : per_experiment) {
        if (experiment.size() != first.size()) {
            throw ValidationError("aggregate_ranks: inconsistent model sets");
        }
        for (const auto& [model, rank] : experiment) {
            const auto it = sums.find(model);
            if (it == sums.end()) {
                throw ValidationError("aggregate_ranks: inconsistent model sets");
            }
            it->second += rank;
        }
    }
    const auto n = static_cast<double>(per_experiment.size());
    for (auto& [model, sum] : sums) sum /= n;
    return sums;
}

ScoreReport build_score_report(const std::vector<std::string>& series_ids,
                               const std::vector<std::map<std::string, double>>& mse_maps,
                               RankMethod method) {
    if (series_ids.size() != mse_maps.size()) {
        throw ValidationError("build_score_report: ids and score maps differ in length");
    }
    ScoreReport report;
    std::vector<std::map<std::string, double>> rank_maps;
    rank_maps.reserve(mse_maps.size());
    for (std::size_t i = 0; i < mse_maps.size(); ++i) {
        const auto ranks = rank_experiment(mse_maps[i], method);
        ExperimentScore exp;
        exp.series_id = series_ids[i];
        for (const auto& [model, value] : mse_maps[i]) {
            exp.scores.push_back({model, value, ranks.at(model)});
        }
        std::sort(exp.scores.begin(), exp.scores.end(), [](const auto& a, const auto& b) {
            return a.mse != b.mse ? a.mse < b.mse : a.model < b.model;
        });
        report.experiments.push_back(std::move(exp));
        rank_maps.push_back(ranks);
    }
    report.mean_rank = aggregate_ranks(rank_maps);
    return report;
}

void write_report_csv(const ScoreReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "series_id,model,mse,rank\n";
    for (const auto& exp : report.experiments) {
        for (const auto& s : exp.scores) {
            out << exp.series_id << ',' << s.model << ',' << detail::format_double(s.mse)
                << ',' << detail::format_double(s.rank) << '\n';
        }
    }
}

void write_aggregate_csv(const ScoreReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "model,mean_rank,n_experiments\n";
    std::vector<std::pair<std::string, double>> ordered(report.mean_rank.begin(),
                                                        report.mean_rank.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    for (const auto& [model, rank] : ordered) {
        out << model << ',' << detail::format_double(rank) << ',' << report.n_experiments()
            << '\n';
    }
}

void write_report_json(const ScoreReport& report, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["experiments"] = nlohmann::json::array();
    for (const auto& exp : report.experiments) {
        nlohmann::json scores = nlohmann::json::array();
        for (const auto& s : exp.scores) {
            scores.push_back({{"model", s.model}, {"mse", s.mse}, {"rank", s.rank}});
        }
        doc["experiments"].push_back(
            {{"series_id", exp.series_id}, {"scores", std::move(scores)}});
    }
    doc["aggregate"] = nlohmann::json::array();
    std::vector<std::pair<std::string, double>> ordered(report.mean_rank.begin(),
                                                        report.mean_rank.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    for (const auto& [model, rank] : ordered) {
        doc["aggregate"].push_back({{"model", model},
                                    {"mean_rank", rank},
                                    {"n_experiments", report.n_experiments()}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

} // namespace rlcombine
