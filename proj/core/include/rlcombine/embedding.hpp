#pragma once

#include "rlcombine/panel.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace rlcombine {

/// Variances and standard deviations below this are treated as zero; an
/// eigenvalue below it does not count toward the rank.
inline constexpr double kVarianceFloor = 1e-12;

/// Per-model feature history. Column j depends only on data with period
/// index <= j, so prefixes are stable as the window grows.
struct FeatureMatrix {
    Eigen::MatrixXd values; ///< p x t
    std::vector<std::string> feature_names;
    Eigen::Index t = 0; ///< periods covered, == values.cols()
};

/// Cumulative squared forecast errors per model over periods [0, upto).
/// A model missing at a period carries its previous cumulative value
/// forward (a leading gap contributes zero).
FeatureMatrix build_features(const ForecastPanel& panel, Eigen::Index upto);

/// Row-wise z-scores using the mean and population standard deviation over
/// all columns. Rows with a standard deviation under kVarianceFloor become
/// all zeros. Idempotent on already standardized rows.
FeatureMatrix standardize(const FeatureMatrix& features);

/// Principal components of a feature history, fitted on its full column
/// range. Captures the centering/scaling of the fit input so new columns
/// can be projected consistently.
struct PcaModel {
    Eigen::VectorXd means;  ///< p, per-feature mean of the fit input
    Eigen::VectorXd scales; ///< p; 0 flags a degenerate feature whose z is pinned to 0
    Eigen::MatrixXd components;         ///< k x p, orthonormal rows
    Eigen::VectorXd explained_variance; ///< k, non-increasing
    Eigen::Index k = 0;
};

/// Eigendecomposition of the population covariance (1/t convention) of the
/// centered, scaled input. Retains k = min(k_max, smallest k reaching
/// var_target of total variance, rank). Each component's largest-magnitude
/// loading is made positive (ties resolved toward the lowest feature index)
/// so refits on identical data reproduce identical loadings.
PcaModel fit_pca(const FeatureMatrix& features, Eigen::Index k_max = 3,
                 double var_target = 0.9);

/// Principal-component scores of one feature column. Once stored, an
/// embedding is never recomputed under a later refit.
struct StateEmbedding {
    Eigen::Index t = 0;
    Eigen::VectorXd scores; ///< k
};

/// Projects column `t` of `features`: scores = components * z where z is the
/// column centered and scaled by the model's recorded parameters.
StateEmbedding embed(const PcaModel& model, const FeatureMatrix& features, Eigen::Index t);

} // namespace rlcombine
