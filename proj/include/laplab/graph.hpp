#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "laplab/kernel.hpp"
#include "laplab/manifold.hpp"

namespace laplab {

enum class LaplacianKind { Unnormalized, RandomWalk, DensityCorrected };
enum class FormVariant { Standard, DensityCorrected };

/// Raised when a sample has no off-diagonal affinity mass (indicator kernel at
/// tiny eps). The diagonal W_ii keeps D_i formally positive, so isolation is
/// the practical failure of the connectivity regime.
struct disconnected_graph_error : std::runtime_error {
    explicit disconnected_graph_error(int index)
        : std::runtime_error("disconnected graph: sample " + std::to_string(index) +
                             " has zero off-diagonal degree"),
          sample_index(index) {}
    int sample_index;
};

/// Kernel affinity matrix with degrees and, for the density-corrected variant,
/// the two-sided normalization W~ = D^{-1} W D^{-1} and its degrees D~.
///
/// W is assembled symmetrically (each pair computed once and mirrored) and the
/// diagonal W_ii = eps^{-d/2} h(0) is always included: the degree and form
/// definitions sum over all pairs.
struct GraphOperators {
    Eigen::MatrixXd W;
    Eigen::VectorXd degrees;
    LaplacianKind kind = LaplacianKind::RandomWalk;
    double uniform_density = 0.0;  // p entering the L_un normalization

    Eigen::MatrixXd W_tilde;       // empty unless kind == DensityCorrected
    Eigen::VectorXd degrees_tilde;

    int n() const { return static_cast<int>(W.rows()); }
};

/// Builds W_ij = K_eps(x_i, x_j) from ambient Euclidean distances, with
/// degrees D_i = sum_j W_ij.
///
/// For Unnormalized the (uniform) density constant p = 1/Vol(M) is recorded;
/// requesting it with a non-uniform density model is an error. An optional
/// truncation zeroes entries below 1e-15 of the peak (benchmark path only).
inline GraphOperators build_operators(const SampleSet& samples, const KernelSpec& spec,
                                      LaplacianKind kind, const ManifoldModel& model,
                                      const DensityModel& density, bool truncate = false) {
    const int n = samples.n;
    if (n < 2) throw std::invalid_argument("build_operators: need at least 2 samples");
    if (spec.epsilon <= 0.0) throw std::invalid_argument("build_operators: eps must be positive");
    if (kind == LaplacianKind::Unnormalized && !density.is_uniform())
        throw std::invalid_argument("build_operators: L_un requires a uniform density model");

    GraphOperators ops;
    ops.kind = kind;
    ops.uniform_density = 1.0 / model.volume;

    const Eigen::MatrixXd& X = samples.ambient;
    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd G = X * X.transpose();

    ops.W.resize(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i <= j; ++i) {
            const double d2 = std::max(0.0, sq[i] + sq[j] - 2.0 * G(i, j));
            const double w = spec.evaluate_sq(i == j ? 0.0 : d2);
            ops.W(i, j) = w;
            ops.W(j, i) = w;
        }
    }
    if (truncate) {
        const double floor = 1e-15 * ops.W.diagonal().maxCoeff();
        ops.W = (ops.W.array() < floor).select(0.0, ops.W);
    }

    ops.degrees = ops.W.rowwise().sum();
    for (int i = 0; i < n; ++i) {
        if (ops.degrees[i] <= 0.0 || ops.degrees[i] - ops.W(i, i) <= 0.0)
            throw disconnected_graph_error(i);
    }

    if (kind == LaplacianKind::DensityCorrected) {
        const Eigen::VectorXd inv = ops.degrees.cwiseInverse();
        ops.W_tilde = inv.asDiagonal() * ops.W * inv.asDiagonal();
        // mirror to keep bitwise symmetry after the scaling products
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < j; ++i) ops.W_tilde(j, i) = ops.W_tilde(i, j);
        ops.degrees_tilde = ops.W_tilde.rowwise().sum();
    }
    return ops;
}

/// Applies the selected graph Laplacian:
///   L_un  = (D - W) / ((m2/2) p eps N),
///   L_rw  = (I - D^{-1} W) / (m~ eps),
///   L~_rw = (I - D~^{-1} W~) / (m~ eps).
inline Eigen::VectorXd laplacian_apply(const GraphOperators& ops, const KernelSpec& spec,
                                       const Eigen::VectorXd& u) {
    const int n = ops.n();
    if (u.size() != n) throw std::invalid_argument("laplacian_apply: dimension mismatch");
    switch (ops.kind) {
        case LaplacianKind::Unnormalized: {
            const double scale = 0.5 * spec.m2 * ops.uniform_density * spec.epsilon * n;
            return (ops.degrees.asDiagonal() * u - ops.W * u) / scale;
        }
        case LaplacianKind::RandomWalk: {
            const double scale = spec.m_tilde() * spec.epsilon;
            return (u - (ops.W * u).cwiseQuotient(ops.degrees)) / scale;
        }
        case LaplacianKind::DensityCorrected: {
            const double scale = spec.m_tilde() * spec.epsilon;
            return (u - (ops.W_tilde * u).cwiseQuotient(ops.degrees_tilde)) / scale;
        }
    }
    throw std::logic_error("laplacian_apply: unknown kind");
}

namespace detail {

template <typename Mat>
double pairwise_difference_sum(const Mat& W, const Eigen::VectorXd& u) {
    const int n = static_cast<int>(W.rows());
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < j; ++i) {
            const double d = u[i] - u[j];
            acc += W(i, j) * d * d;
        }
    return 2.0 * acc;  // both orientations of each pair; i = j contributes 0
}

} // namespace detail

/// Graph Dirichlet form, computed through the pairwise-difference sum rather
/// than u^T L u (no cancellation for near-constant u):
///   E_N(u)  = (2/m2) (eps N^2)^{-1} u^T (D - W) u,
///   E~_N(u) = (2 m0^2 / m2) eps^{-1} u^T (D~ - W~) u.
inline double dirichlet_form(const GraphOperators& ops, const KernelSpec& spec,
                             const Eigen::VectorXd& u,
                             FormVariant variant = FormVariant::Standard) {
    const int n = ops.n();
    if (u.size() != n) throw std::invalid_argument("dirichlet_form: dimension mismatch");
    if (variant == FormVariant::DensityCorrected) {
        if (ops.kind != LaplacianKind::DensityCorrected)
            throw std::invalid_argument("dirichlet_form: density-corrected form needs density-corrected operators");
        return (spec.m0 * spec.m0 / spec.m2) / spec.epsilon *
               detail::pairwise_difference_sum(ops.W_tilde, u);
    }
    return (1.0 / spec.m2) / (spec.epsilon * double(n) * n) *
           detail::pairwise_difference_sum(ops.W, u);
}

/// Bilinear form by polarization, B_N(u,v) = (E_N(u+v) - E_N(u-v)) / 4.
inline double bilinear_form(const GraphOperators& ops, const KernelSpec& spec,
                            const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                            FormVariant variant = FormVariant::Standard) {
    if (u.size() != v.size()) throw std::invalid_argument("bilinear_form: dimension mismatch");
    return 0.25 * (dirichlet_form(ops, spec, u + v, variant) -
                   dirichlet_form(ops, spec, u - v, variant));
}

/// Degree concentration report: max_i |D_i/N - m0 p(x_i)| and, for the
/// density-corrected build, max_i |sum_j W_ij / D_j - 1|.
struct DegreeReport {
    double max_degree_deviation = 0.0;
    bool degree_ok = false;
    double max_rowsum_deviation = 0.0;  // NaN unless density-corrected
    bool rowsum_ok = true;
    double tolerance = 0.0;
};

inline DegreeReport degree_diagnostic(const GraphOperators& ops, const KernelSpec& spec,
                                      const SampleSet& samples, const DensityModel& density,
                                      const ManifoldModel& model, double tolerance) {
    DegreeReport rep;
    rep.tolerance = tolerance;
    const int n = ops.n();
    for (int i = 0; i < n; ++i) {
        const double target = spec.m0 * density.evaluate(model, samples.intrinsic.row(i).transpose());
        rep.max_degree_deviation =
            std::max(rep.max_degree_deviation, std::abs(ops.degrees[i] / n - target));
    }
    rep.degree_ok = rep.max_degree_deviation <= tolerance;
    if (ops.kind == LaplacianKind::DensityCorrected) {
        const Eigen::VectorXd rowsum = ops.W * ops.degrees.cwiseInverse();
        rep.max_rowsum_deviation = (rowsum.array() - 1.0).abs().maxCoeff();
        rep.rowsum_ok = rep.max_rowsum_deviation <= tolerance;
    } else {
        rep.max_rowsum_deviation = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

/// Heat-kernel quadratic forms at diffusion time s:
///   q_s(u)    = N^{-2} sum_ij u_i u_j H_s(x_i, x_j),
///   q_s^0(u)  = N^{-1} sum_i u_i^2 (N^{-1} sum_j H_s(x_i, x_j)),
///   q_s^2(u)  = (2 N^2)^{-1} sum_ij H_s(x_i, x_j) (u_i - u_j)^2,
/// with q_s = q_s^0 - q_s^2. The weighted variant divides H_s(x_i, x_j) by
/// p(x_i) p(x_j).
struct HeatForms {
    double q = 0.0;
    double q0 = 0.0;
    double q2 = 0.0;
};

inline HeatForms heat_quadratic_forms(const SampleSet& samples, const ManifoldModel& model,
                                      double s, const Eigen::VectorXd& u, bool weighted) {
    if (s <= 0.0) throw std::invalid_argument("heat_quadratic_forms: s must be positive");
    const int n = samples.n;
    if (u.size() != n) throw std::invalid_argument("heat_quadratic_forms: dimension mismatch");
    HeatForms out;
    Eigen::VectorXd hsum = Eigen::VectorXd::Zero(n);
    double q2 = 0.0;
    const double h0 = heat_kernel(model, s, samples.intrinsic.row(0).transpose(),
                                  samples.intrinsic.row(0).transpose());
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = samples.intrinsic.row(i).transpose();
        hsum[i] += weighted ? h0 / (samples.density[i] * samples.density[i]) : h0;
        for (int j = i + 1; j < n; ++j) {
            double h = heat_kernel(model, s, xi, samples.intrinsic.row(j).transpose());
            if (weighted) h /= samples.density[i] * samples.density[j];
            hsum[i] += h;
            hsum[j] += h;
            const double d = u[i] - u[j];
            q2 += h * d * d;
        }
    }
    out.q0 = u.cwiseAbs2().dot(hsum) / (double(n) * n);
    out.q2 = q2 / (double(n) * n);  // both orientations over 2
    out.q = out.q0 - out.q2;
    return out;
}

/// Binary matrix dump: 16-byte header (8-byte magic "LAPLMAT0", uint64 N),
/// then N*N row-major doubles.
inline void dump_matrix(const std::string& path, const Eigen::MatrixXd& A) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("dump_matrix: cannot open " + path);
    const char magic[8] = {'L', 'A', 'P', 'L', 'M', 'A', 'T', '0'};
    const std::uint64_t n = static_cast<std::uint64_t>(A.rows());
    f.write(magic, 8);
    f.write(reinterpret_cast<const char*>(&n), 8);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        f.write(reinterpret_cast<const char*>(A.row(i).eval().data()),
                static_cast<std::streamsize>(sizeof(double) * A.cols()));
    if (!f) throw std::runtime_error("dump_matrix: write failed for " + path);
}

inline Eigen::MatrixXd load_matrix(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_matrix: cannot open " + path);
    char magic[8];
    std::uint64_t n = 0;
    f.read(magic, 8);
    f.read(reinterpret_cast<char*>(&n), 8);
    if (!f || std::memcmp(magic, "LAPLMAT0", 8) != 0)
        throw std::runtime_error("load_matrix: bad header in " + path);
    Eigen::MatrixXd A(n, n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Eigen::VectorXd row(n);
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(sizeof(double) * n));
        A.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    if (!f) throw std::runtime_error("load_matrix: truncated file " + path);
    return A;
}

} // namespace laplab
