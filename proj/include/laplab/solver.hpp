#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "laplab/graph.hpp"
#include "laplab/rng.hpp"

namespace laplab {

enum class SolverBackend { Dense, Iterative };

/// Eigenvector scaling conventions:
///   Unit2Norm:        u_k^T u_l = delta_kl                (unnormalized)
///   DNormNp:          v_k^T D v_l = delta_kl N p          (random-walk)
///   TildeDNormRecipN: N v_k^T D~ v_k = 1                  (density-corrected)
enum class Normalization { Unit2Norm, DNormNp, TildeDNormRecipN };

struct SolverMeta {
    SolverBackend backend = SolverBackend::Dense;
    int iterations = 0;       // Lanczos steps (0 for dense)
    int restarts = 0;
    double max_residual = 0.0;
};

struct SpectralResult {
    Eigen::VectorXd eigenvalues;   // ascending, size k_max + 1
    Eigen::MatrixXd eigenvectors;  // N x (k_max + 1)
    Normalization normalization = Normalization::Unit2Norm;
    SolverMeta meta;
};

struct solver_error : std::runtime_error {
    solver_error(const std::string& what, std::vector<double> partial)
        : std::runtime_error(what), partial_residuals(std::move(partial)) {}
    std::vector<double> partial_residuals;
};

struct SolveOptions {
    int max_iterations = 0;     // 0: min(N, max(400, 30 K))
    double tolerance = 1e-10;   // residual <= tolerance * sigma
};

namespace detail {

/// Symmetric form of the selected Laplacian. For the random-walk variants this
/// is S = (I - D^{-1/2} W D^{-1/2}) / (m~ eps), similar to L_rw; for the
/// unnormalized variant it is L_un itself.
inline Eigen::MatrixXd symmetric_operator(const GraphOperators& ops, const KernelSpec& spec) {
    const int n = ops.n();
    Eigen::MatrixXd S(n, n);
    if (ops.kind == LaplacianKind::Unnormalized) {
        const double scale = 0.5 * spec.m2 * ops.uniform_density * spec.epsilon * n;
        S = -ops.W / scale;
        S.diagonal() += ops.degrees / scale;
        return S;
    }
    const Eigen::VectorXd& deg =
        ops.kind == LaplacianKind::RandomWalk ? ops.degrees : ops.degrees_tilde;
    const Eigen::MatrixXd& W =
        ops.kind == LaplacianKind::RandomWalk ? ops.W : ops.W_tilde;
    const Eigen::VectorXd dm = deg.cwiseSqrt().cwiseInverse();
    const double scale = spec.m_tilde() * spec.epsilon;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) {
            const double v = -dm[i] * W(i, j) * dm[j] / scale;
            S(i, j) = v;
            S(j, i) = v;
        }
    S.diagonal().array() += 1.0 / scale;
    return S;
}

/// Lanczos with full reorthogonalization on A = sigma I - S, extracting the
/// K largest eigenpairs of A (the K smallest of S). Breakdowns restart with a
/// fresh vector orthogonal to the basis, which also lets repeated eigenvalues
/// surface reliably.
inline void lanczos_smallest(const Eigen::MatrixXd& S, int K, const SolveOptions& opt,
                             Eigen::VectorXd& values, Eigen::MatrixXd& vectors,
                             SolverMeta& meta) {
    const int n = static_cast<int>(S.rows());
    double sigma = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = S(i, i);
        for (int j = 0; j < n; ++j)
            if (j != i) row += std::abs(S(i, j));
        sigma = std::max(sigma, row);
    }
    if (sigma <= 0.0) sigma = 1.0;

    const int m_max = opt.max_iterations > 0
                          ? std::min(n, opt.max_iterations)
                          : std::min(n, std::max(400, 30 * K));
    Eigen::MatrixXd V(n, m_max);
    std::vector<double> alpha, beta;  // beta[j]: coupling between v_j and v_{j+1}
    SplitMix64 rng(0x1A2B3C4D5E6F7081ULL ^ (std::uint64_t(n) << 20) ^ std::uint64_t(K));

    auto random_orthonormal = [&](int m) {
        Eigen::VectorXd w(n);
        for (int attempt = 0; attempt < 64; ++attempt) {
            for (int i = 0; i < n; ++i) w[i] = rng.gaussian();
            for (int pass = 0; pass < 2; ++pass)
                if (m > 0) w -= V.leftCols(m) * (V.leftCols(m).transpose() * w);
            const double nw = w.norm();
            if (nw > 1e-8 * std::sqrt(double(n))) return Eigen::VectorXd(w / nw);
        }
        throw solver_error("lanczos: failed to draw a vector outside the basis", {});
    };

    V.col(0) = random_orthonormal(0);
    int m = 0;
    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd ritz_S;
    std::vector<double> residuals;

    while (m < m_max) {
        Eigen::VectorXd w = sigma * V.col(m) - S * V.col(m);
        if (m > 0 && beta[m - 1] != 0.0) w -= beta[m - 1] * V.col(m - 1);
        alpha.push_back(V.col(m).dot(w));
        w -= alpha.back() * V.col(m);
        for (int pass = 0; pass < 2; ++pass)
            w -= V.leftCols(m + 1) * (V.leftCols(m + 1).transpose() * w);
        double b = w.norm();
        ++m;
        const bool breakdown = b <= 1e-13 * sigma;
        if (breakdown) b = 0.0;  // subspace is invariant to working precision
        if (m < m_max) {
            if (breakdown) {
                V.col(m) = random_orthonormal(m);
                beta.push_back(0.0);
                ++meta.restarts;
            } else {
                V.col(m) = w / b;
                beta.push_back(b);
            }
        }

        if (m >= std::min(K, m_max) && (m % 5 == 0 || m == m_max || breakdown)) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
            for (int i = 0; i + 1 < m && i < static_cast<int>(beta.size()); ++i)
                T(i, i + 1) = T(i + 1, i) = beta[i];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            // largest K of the shifted operator are the last K columns
            residuals.assign(K, 0.0);
            bool done = true;
            for (int k = 0; k < K; ++k) {
                const int idx = m - 1 - k;
                residuals[k] = std::abs(b * es.eigenvectors()(m - 1, idx));
                if (residuals[k] > opt.tolerance * sigma) done = false;
            }
            if (done || m == m_max) {
                ritz_values.resize(K);
                ritz_S.resize(m, K);
                for (int k = 0; k < K; ++k) {
                    const int idx = m - 1 - k;
                    ritz_values[K - 1 - k] = es.eigenvalues()[idx];
                    ritz_S.col(K - 1 - k) = es.eigenvectors().col(idx);
                }
                if (!done && m == m_max) {
                    meta.iterations = m;
                    throw solver_error(
                        "lanczos: no convergence within " + std::to_string(m_max) +
                            " iterations (max residual " +
                            std::to_string(*std::max_element(residuals.begin(), residuals.end())) + ")",
                        residuals);
                }
                meta.iterations = m;
                meta.max_residual = residuals.empty()
                                        ? 0.0
                                        : *std::max_element(residuals.begin(), residuals.end());
                // map back: eigenvalue of S = sigma - theta, ascending order
                values.resize(K);
                vectors.resize(n, K);
                for (int k = 0; k < K; ++k) {
                    values[k] = sigma - ritz_values[K - 1 - k];
                    vectors.col(k) = V.leftCols(m) * ritz_S.col(K - 1 - k);
                    vectors.col(k).normalize();
                }
                return;
            }
        }
    }
    throw solver_error("lanczos: iteration loop exhausted", residuals);
}

inline void fix_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
        Eigen::Index imax = 0;
        vectors.col(k).cwiseAbs().maxCoeff(&imax);
        if (vectors(imax, k) < 0.0) vectors.col(k) = -vectors.col(k);
    }
}

} // namespace detail

/// Computes the k_max + 1 lowest eigenpairs of the selected Laplacian.
///
/// The random-walk variants are solved through the symmetric similar matrix
/// S = (I - D^{-1/2} W D^{-1/2}) / (m~ eps) and mapped back by v = D^{-1/2} u,
/// then rescaled to the variant's convention. Dense backend: full symmetric
/// eigendecomposition. Iterative backend: Lanczos with full
/// reorthogonalization on sigma I - S (sigma a Gershgorin bound).
inline SpectralResult solve_lowest(const GraphOperators& ops, const KernelSpec& spec,
                                   int k_max, SolverBackend backend,
                                   const SolveOptions& opt = {}) {
    const int n = ops.n();
    const int K = k_max + 1;
    if (K > n) throw std::invalid_argument("solve_lowest: k_max + 1 must be <= N");

    const Eigen::MatrixXd S = detail::symmetric_operator(ops, spec);
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    SolverMeta meta;
    meta.backend = backend;

    if (backend == SolverBackend::Dense) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        values = es.eigenvalues().head(K);
        vectors = es.eigenvectors().leftCols(K);
    } else {
        detail::lanczos_smallest(S, K, opt, values, vectors, meta);
    }

    SpectralResult out;
    out.meta = meta;
    out.eigenvalues = values;
    switch (ops.kind) {
        case LaplacianKind::Unnormalized: {
            out.normalization = Normalization::Unit2Norm;
            out.eigenvectors = vectors;  // orthonormal already
            break;
        }
        case LaplacianKind::RandomWalk: {
            out.normalization = Normalization::DNormNp;
            const Eigen::VectorXd dm = ops.degrees.cwiseSqrt().cwiseInverse();
            out.eigenvectors.resize(n, K);
            const double p = ops.uniform_density;
            for (int k = 0; k < K; ++k) {
                Eigen::VectorXd v = dm.cwiseProduct(vectors.col(k));
                const double s = v.cwiseAbs2().dot(ops.degrees);  // = 1 by construction
                out.eigenvectors.col(k) = v * std::sqrt(double(n) * p / s);
            }
            break;
        }
        case LaplacianKind::DensityCorrected: {
            out.normalization = Normalization::TildeDNormRecipN;
            const Eigen::VectorXd dm = ops.degrees_tilde.cwiseSqrt().cwiseInverse();
            out.eigenvectors.resize(n, K);
            for (int k = 0; k < K; ++k) {
                Eigen::VectorXd v = dm.cwiseProduct(vectors.col(k));
                const double s = v.cwiseAbs2().dot(ops.degrees_tilde);
                out.eigenvectors.col(k) = v / std::sqrt(double(n) * s);
            }
            break;
        }
    }
    detail::fix_signs(out.eigenvectors);

    // residuals on the variant operator, in its own scaling
    double maxres = 0.0;
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd v = out.eigenvectors.col(k);
        const double r = (laplacian_apply(ops, spec, v) - out.eigenvalues[k] * v).norm() /
                         ((std::abs(out.eigenvalues[k]) + 1.0) * v.norm());
        maxres = std::max(maxres, r);
    }
    out.meta.max_residual = std::max(out.meta.max_residual, maxres);
    return out;
}

/// Variational (Rayleigh) quotient of the selected variant:
///   L_un:  E_N(v) / (p |v|^2 / N)
///   L_rw:  E_N(v) / ((1/m0) N^{-2} v^T D v)
///   L~_rw: (1/m0) E~_N(v) / (v^T D~ v)
inline double rayleigh_quotient(const GraphOperators& ops, const KernelSpec& spec,
                                const Eigen::VectorXd& u) {
    if (u.norm() == 0.0) throw std::invalid_argument("rayleigh_quotient: zero vector");
    const int n = ops.n();
    switch (ops.kind) {
        case LaplacianKind::Unnormalized:
            return dirichlet_form(ops, spec, u) /
                   (ops.uniform_density * u.squaredNorm() / double(n));
        case LaplacianKind::RandomWalk:
            return dirichlet_form(ops, spec, u) /
                   (u.cwiseAbs2().dot(ops.degrees) / (spec.m0 * double(n) * n));
        case LaplacianKind::DensityCorrected:
            return dirichlet_form(ops, spec, u, FormVariant::DensityCorrected) /
                   (spec.m0 * u.cwiseAbs2().dot(ops.degrees_tilde));
    }
    throw std::logic_error("rayleigh_quotient: unknown kind");
}

} // namespace laplab
