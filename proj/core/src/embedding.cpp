#include "rlcombine/embedding.hpp"

#include "rlcombine/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rlcombine {

FeatureMatrix build_features(const ForecastPanel& panel, Eigen::Index upto) {
    if (upto < 1 || upto > panel.periods()) {
        throw std::out_of_range("build_features: upto out of range");
    }
    const Eigen::Index n = panel.models();
    FeatureMatrix out;
    out.values.resize(n, upto);
    out.feature_names.reserve(static_cast<std::size_t>(n));
    for (const auto& name : panel.model_names) out.feature_names.push_back("cum_sq_err:" + name);
    out.t = upto;
    for (Eigen::Index a = 0; a < n; ++a) {
        double cum = 0.0;
        for (Eigen::Index j = 0; j < upto; ++j) {
            if (panel.available(j, a)) {
                const double err = panel.y[j] - panel.forecasts(j, a);
                cum += err * err;
            }
            out.values(a, j) = cum;
        }
    }
    return out;
}

namespace {

// Row means and population standard deviations (1/t).
void row_moments(const Eigen::MatrixXd& m, Eigen::VectorXd& means, Eigen::VectorXd& stds) {
    const auto t = static_cast<double>(m.cols());
    means = m.rowwise().mean();
    stds.resize(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        stds[i] = std::sqrt((m.row(i).array() - means[i]).square().sum() / t);
    }
}

} // namespace

FeatureMatrix standardize(const FeatureMatrix& features) {
    if (features.values.cols() < 2) {
        throw ValidationError("standardize needs at least two periods");
    }
    Eigen::VectorXd means, stds;
    row_moments(features.values, means, stds);
    FeatureMatrix out;
    out.feature_names = features.feature_names;
    out.t = features.t;
    out.values.resize(features.values.rows(), features.values.cols());
    for (Eigen::Index i = 0; i < features.values.rows(); ++i) {
        if (stds[i] < kVarianceFloor) {
            out.values.row(i).setZero();
        } else {
            out.values.row(i) = (features.values.row(i).array() - means[i]) / stds[i];
        }
    }
    return out;
}

PcaModel fit_pca(const FeatureMatrix& features, Eigen::Index k_max, double var_target) {
    const Eigen::Index p = features.values.rows();
    const Eigen::Index t = features.values.cols();
    if (t < 2) throw ValidationError("fit_pca: insufficient history (need t >= 2)");
    if (k_max < 1) throw ValidationError("fit_pca: k_max must be positive");
    if (!(var_target > 0.0 && var_target <= 1.0)) {
        throw ValidationError("fit_pca: var_target must be in (0, 1]");
    }

    PcaModel model;
    Eigen::VectorXd stds;
    row_moments(features.values, model.means, stds);
    model.scales.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        model.scales[i] = stds[i] >= kVarianceFloor ? stds[i] : 0.0;
    }

    Eigen::MatrixXd z(p, t);
    for (Eigen::Index i = 0; i < p; ++i) {
        if (model.scales[i] > 0.0) {
            z.row(i) = (features.values.row(i).array() - model.means[i]) / model.scales[i];
        } else {
            z.row(i).setZero();
        }
    }

    const Eigen::MatrixXd cov = (z * z.transpose()) / static_cast<double>(t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("fit_pca: eigendecomposition failed");
    }

    // eigh returns ascending order; walk it from the back.
    const Eigen::VectorXd& evals = solver.eigenvalues();
    const Eigen::MatrixXd& evecs = solver.eigenvectors();
    Eigen::Index rank = 0;
    double total_var = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (evals[i] >= kVarianceFloor) {
            ++rank;
            total_var += evals[i];
        }
    }

    Eigen::Index k_var = rank;
    if (total_var > 0.0) {
        double cum = 0.0;
        for (Eigen::Index i = 0; i < rank; ++i) {
            cum += evals[p - 1 - i];
            if (cum / total_var >= var_target) {
                k_var = i + 1;
                break;
            }
        }
    }
    const Eigen::Index k = std::min({k_max, k_var, rank});

    model.k = k;
    model.components.resize(k, p);
    model.explained_variance.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::RowVectorXd comp = evecs.col(p - 1 - i).transpose();
        // Deterministic orientation: largest |loading| positive, lowest
        // index winning ties, so similarity survives refits.
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double mag = std::abs(comp[j]);
            if (mag > best) {
                best = mag;
                pivot = j;
            }
        }
        if (comp[pivot] < 0.0) comp = -comp;
        model.components.row(i) = comp;
        model.explained_variance[i] = evals[p - 1 - i];
    }
    return model;
}

StateEmbedding embed(const PcaModel& model, const FeatureMatrix& features, Eigen::Index t) {
    if (t < 0 || t >= features.values.cols()) {
        throw std::out_of_range("embed: column index out of range");
    }
    if (features.values.rows() != model.means.size()) {
        throw ValidationError("embed: feature dimension does not match the fitted model");
    }
    const Eigen::Index p = features.values.rows();
    Eigen::VectorXd z(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        z[i] = model.scales[i] > 0.0
                   ? (features.values(i, t) - model.means[i]) / model.scales[i]
                   : 0.0;
    }
    StateEmbedding out;
    out.t = t;
    out.scores = model.components * z;
    return out;
}

} // namespace rlcombine
