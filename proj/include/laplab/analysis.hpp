#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "laplab/manifold.hpp"
#include "laplab/solver.hpp"

namespace laplab {

/// Reference vectors built from analytic eigenfunctions at the sample points:
///   PhiScaled: phi_k = rho_X psi_k / sqrt(p N)  (uniform p = 1/Vol)
///   TildePhi:  phi~_k = rho_X psi_k / sqrt(N)
enum class RefConvention { PhiScaled, TildePhi };

struct ReferenceVectors {
    Eigen::MatrixXd phi;  // N x K
    RefConvention convention = RefConvention::PhiScaled;
};

inline ReferenceVectors build_references(const SampleSet& samples,
                                         const AnalyticEigensystem& eigensystem,
                                         const DensityModel& density, int K,
                                         RefConvention convention) {
    if (K > eigensystem.eigenvalues.size())
        throw std::invalid_argument("build_references: K exceeds available eigenfunctions");
    if (convention == RefConvention::PhiScaled && !density.is_uniform())
        throw std::invalid_argument("build_references: PhiScaled requires a uniform density");
    const int n = samples.n;
    ReferenceVectors out;
    out.convention = convention;
    out.phi.resize(n, K);
    double scale = 1.0 / std::sqrt(double(n));
    if (convention == RefConvention::PhiScaled) {
        const double vol = eigensystem.kind == ManifoldKind::CircleR4 ? 1.0 : 4.0 * kPi;
        scale /= std::sqrt(1.0 / vol);
    }
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd q = samples.intrinsic.row(i).transpose();
        for (int k = 0; k < K; ++k) out.phi(i, k) = scale * eigensystem.eigenfunction(k, q);
    }
    return out;
}

/// Per-multiplicity-block orthogonal alignment and the aggregate errors
///   RelErr_lambda = sum_{k=2}^{kmax} |lambda_k - mu_k| / mu_k,
///   RelErr_v      = sum_{k=2}^{kmax} ||v_k - (Q-rotated phi)_k|| / ||phi_k||.
/// Blocks come from the analytic eigenvalues; within each block the rotation
/// Q_m is the orthogonal Procrustes optimum (SVD of the cross-Gram). The
/// scalars alpha_k are diagnostic only; the score uses alpha_k = 1.
struct AlignmentBlock {
    int start = 0;
    int size = 0;
    Eigen::MatrixXd Q;
};

struct AlignmentReport {
    std::vector<AlignmentBlock> blocks;
    Eigen::VectorXd alpha;      // least-squares scale of v_k on rotated phi_k
    Eigen::VectorXd residuals;  // per-vector ||v_k - phi'_k||
    std::vector<int> flagged;   // indices with |alpha| outside [0.5, 2]
    double rel_err_lambda = 0.0;
    double rel_err_v = 0.0;
};

inline std::vector<std::pair<int, int>> group_eigenvalues(const Eigen::VectorXd& mu,
                                                          int k_max, double gap_rel_tol) {
    std::vector<std::pair<int, int>> blocks;
    int start = 0;
    for (int k = 1; k < k_max; ++k) {
        const double gap = mu[k] - mu[k - 1];
        if (gap > gap_rel_tol * std::max({std::abs(mu[k]), std::abs(mu[k - 1]), 1e-300})) {
            blocks.emplace_back(start, k - start);
            start = k;
        }
    }
    blocks.emplace_back(start, k_max - start);
    if (mu.size() > k_max) {
        const double gap = mu[k_max] - mu[k_max - 1];
        if (gap <= gap_rel_tol * std::max({std::abs(mu[k_max]), std::abs(mu[k_max - 1]), 1e-300}))
            throw std::invalid_argument(
                "group_eigenvalues: a multiplicity block straddles k_max = " +
                std::to_string(k_max) + "; increase k_max to the next block boundary");
    }
    return blocks;
}

inline AlignmentReport align_and_score(const SpectralResult& spectral,
                                       const ReferenceVectors& refs,
                                       const Eigen::VectorXd& mu, int k_max,
                                       double gap_rel_tol = 0.05) {
    if (spectral.eigenvectors.cols() < k_max || refs.phi.cols() < k_max)
        throw std::invalid_argument("align_and_score: need at least k_max vectors");
    if (mu.size() < k_max)
        throw std::invalid_argument("align_and_score: need at least k_max analytic eigenvalues");

    AlignmentReport rep;
    rep.alpha.resize(k_max);
    rep.residuals.resize(k_max);

    for (int k = 1; k < k_max; ++k)
        rep.rel_err_lambda += std::abs(spectral.eigenvalues[k] - mu[k]) / mu[k];

    for (const auto& [start, size] : group_eigenvalues(mu, k_max, gap_rel_tol)) {
        const Eigen::MatrixXd V = spectral.eigenvectors.middleCols(start, size);
        const Eigen::MatrixXd P = refs.phi.middleCols(start, size);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(P.transpose() * V,
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
        AlignmentBlock blk;
        blk.start = start;
        blk.size = size;
        blk.Q = svd.matrixU() * svd.matrixV().transpose();
        const Eigen::MatrixXd rotated = P * blk.Q;
        for (int k = start; k < start + size; ++k) {
            const Eigen::VectorXd diff = V.col(k - start) - rotated.col(k - start);
            rep.residuals[k] = diff.norm();
            const double denom = rotated.col(k - start).squaredNorm();
            rep.alpha[k] = denom > 0.0
                               ? rotated.col(k - start).dot(V.col(k - start)) / denom
                               : 0.0;
            if (std::abs(rep.alpha[k]) < 0.5 || std::abs(rep.alpha[k]) > 2.0)
                rep.flagged.push_back(k);
            if (k >= 1) rep.rel_err_v += diff.norm() / refs.phi.col(k).norm();
        }
        rep.blocks.push_back(std::move(blk));
    }
    return rep;
}

/// Point-wise application error
///   RelErr_pt = || -L rho_X f - rho_X(Delta f) ||_1 / || rho_X(Delta f) ||_1.
/// laplacian_f holds the analytic Delta f at the samples.
inline double pointwise_error(const GraphOperators& ops, const KernelSpec& spec,
                              const Eigen::VectorXd& f_values,
                              const Eigen::VectorXd& laplacian_f_values) {
    const double denom = laplacian_f_values.lpNorm<1>();
    if (denom == 0.0)
        throw std::invalid_argument("pointwise_error: Delta f vanishes at every sample");
    const Eigen::VectorXd lhs = -laplacian_apply(ops, spec, f_values);
    return (lhs - laplacian_f_values).lpNorm<1>() / denom;
}

/// Ordinary least squares on (log10 x, log10 y).
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

inline SlopeFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (xs[i] <= 0.0 || ys[i] <= 0.0)
            throw std::invalid_argument("fit_loglog_slope: inputs must be positive");
        const double lx = std::log10(xs[i]), ly = std::log10(ys[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
    SlopeFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double ly = std::log10(ys[i]);
        const double pred = fit.slope * std::log10(xs[i]) + fit.intercept;
        ss_res += (ly - pred) * (ly - pred);
        ss_tot += (ly - mean_y) * (ly - mean_y);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace laplab
