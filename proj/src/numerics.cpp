#include "oodkit/numerics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ood {

namespace {

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Inverse of (cov + reg * I): Cholesky solve against identity, with an
/// eigenvalue-clamping fallback when the factorization fails.
Matrix regularized_inverse(const Matrix& cov, double reg) {
    const Eigen::Index d = cov.rows();
    Matrix shifted = cov + reg * Matrix::Identity(d, d);
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
        return llt.solve(Matrix::Identity(d, d));
    }
    EigenDecomposition eig = symmetric_eig(shifted);
    Vector clamped = eig.eigenvalues.cwiseMax(reg);
    if ((clamped.array() <= 0.0).any()) {
        throw std::runtime_error(
            "class_statistics: singular covariance; increase reg_lambda");
    }
    return eig.eigenvectors * clamped.cwiseInverse().asDiagonal() * eig.eigenvectors.transpose();
}

}  // namespace

GaussianClassModel class_statistics(const FeatureDataset& data, CovarianceMode mode,
                                    double reg_lambda) {
    if (!data.features.allFinite()) throw std::invalid_argument("non-finite feature");
    const auto rows = data.labeled_rows();
    if (rows.empty()) throw std::invalid_argument("empty class");
    if (reg_lambda < 0.0 && reg_lambda != kAutoRegLambda)
        throw std::invalid_argument("class_statistics: reg_lambda must be >= 0");

    const Eigen::Index d = data.dim();
    std::map<int, std::vector<Eigen::Index>> by_class;
    for (Eigen::Index r : rows) by_class[data.labels[r]].push_back(r);

    GaussianClassModel model;
    model.covariance_mode = mode;
    std::vector<Matrix> scatters;
    for (const auto& [label, members] : by_class) {
        if (members.empty()) throw std::invalid_argument("empty class");
        Vector mean = Vector::Zero(d);
        for (Eigen::Index r : members) mean += data.features.row(r).transpose();
        mean /= static_cast<double>(members.size());

        Matrix scatter = Matrix::Zero(d, d);
        for (Eigen::Index r : members) {
            const Vector diff = data.features.row(r).transpose() - mean;
            scatter.noalias() += diff * diff.transpose();
        }
        model.class_ids.push_back(label);
        model.means.push_back(std::move(mean));
        scatters.push_back(std::move(scatter));
    }

    Matrix pooled = Matrix::Zero(d, d);
    for (const Matrix& s : scatters) pooled += s;
    pooled /= static_cast<double>(rows.size());

    if (reg_lambda == kAutoRegLambda) {
        reg_lambda = 1e-6 * pooled.trace() / static_cast<double>(d);
    }
    model.reg_lambda = reg_lambda;

    if (mode == CovarianceMode::Tied) {
        model.covariances.push_back(pooled);
    } else {
        for (std::size_t c = 0; c < model.class_ids.size(); ++c) {
            const auto count = by_class[model.class_ids[c]].size();
            model.covariances.push_back(scatters[c] / static_cast<double>(count));
        }
    }
    for (const Matrix& cov : model.covariances) {
        model.precisions.push_back(regularized_inverse(cov, reg_lambda));
    }
    return model;
}

EigenDecomposition symmetric_eig(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("symmetric_eig: matrix not square");
    if (!is_symmetric(m, 1e-8)) throw std::invalid_argument("symmetric_eig: matrix not symmetric");

    const Eigen::Index n = m.rows();
    Matrix a = 0.5 * (m + m.transpose());
    Matrix v = Matrix::Identity(n, n);
    const double norm = a.norm();
    const double tol = 1e-12 * std::max(norm, 1e-300);

    constexpr int kMaxSweeps = 100;
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol) {
            converged = true;
            break;
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol / static_cast<double>(n)) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // Rotate rows/columns p and q of A and columns p, q of V.
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    if (!converged) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
        if (std::sqrt(off) > tol)
            throw std::runtime_error("symmetric_eig: no convergence within 100 sweeps");
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.eigenvalues[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.eigenvectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace ood
