#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "laplab/rng.hpp"

namespace laplab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class ManifoldKind { CircleR4, SphereR3 };
enum class DensityKind { Uniform, CircleNonUniform };

/// One of the two benchmark manifolds.
///
/// CircleR4: the unit-circumference circle, embedded arclength-isometrically
/// in R^4 as
///   iota(t) = (2 pi sqrt(5))^{-1} (cos 2pi t, sin 2pi t,
///                                  (2/3) cos 6pi t, (2/3) sin 6pi t),
/// t in [0,1). SphereR3: the unit sphere in R^3, intrinsic coordinates
/// (theta, phi) = (colatitude, azimuth).
struct ManifoldModel {
    ManifoldKind kind = ManifoldKind::CircleR4;
    int ambient_dim = 4;
    int intrinsic_dim = 1;
    double volume = 1.0;

    static ManifoldModel circle_r4() { return {ManifoldKind::CircleR4, 4, 1, 1.0}; }
    static ManifoldModel sphere_r3() { return {ManifoldKind::SphereR3, 3, 2, 4.0 * kPi}; }

    Eigen::VectorXd embed(const Eigen::VectorXd& intrinsic) const {
        Eigen::VectorXd x(ambient_dim);
        if (kind == ManifoldKind::CircleR4) {
            const double t = intrinsic[0];
            const double c = 1.0 / (kTwoPi * std::sqrt(5.0));
            x << c * std::cos(kTwoPi * t), c * std::sin(kTwoPi * t),
                 c * (2.0 / 3.0) * std::cos(3.0 * kTwoPi * t),
                 c * (2.0 / 3.0) * std::sin(3.0 * kTwoPi * t);
        } else {
            const double th = intrinsic[0], ph = intrinsic[1];
            x << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
        }
        return x;
    }

    /// Geodesic distance from intrinsic coordinates. On the circle this is the
    /// wrapped arclength difference, never the ambient chord.
    double geodesic(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        if (kind == ManifoldKind::CircleR4) {
            double s = std::abs(a[0] - b[0]);
            s -= std::floor(s);
            return std::min(s, 1.0 - s);
        }
        const double ca = std::cos(a[0]), sa = std::sin(a[0]);
        const double cb = std::cos(b[0]), sb = std::sin(b[0]);
        const double dot = ca * cb + sa * sb * std::cos(a[1] - b[1]);
        return std::acos(std::clamp(dot, -1.0, 1.0));
    }
};

/// Sampling density on a manifold, normalized to integrate to 1 against dV.
///
/// CircleNonUniform is p(t) = 1 + 0.5 sin(4 pi t) + 0.3 sin(10 pi t); its
/// minimum is bounded below by 1 - 0.5 - 0.3 = 0.2.
struct DensityModel {
    DensityKind kind = DensityKind::Uniform;

    static DensityModel uniform() { return {DensityKind::Uniform}; }
    static DensityModel circle_nonuniform() { return {DensityKind::CircleNonUniform}; }

    bool is_uniform() const { return kind == DensityKind::Uniform; }

    bool compatible_with(const ManifoldModel& m) const {
        return kind == DensityKind::Uniform || m.kind == ManifoldKind::CircleR4;
    }

    double evaluate(const ManifoldModel& m, const Eigen::VectorXd& intrinsic) const {
        if (kind == DensityKind::Uniform) return 1.0 / m.volume;
        const double t = intrinsic[0];
        return 1.0 + 0.5 * std::sin(2.0 * kTwoPi * t) + 0.3 * std::sin(5.0 * kTwoPi * t);
    }

    /// CDF of the non-uniform circle density on [0,1].
    static double circle_cdf(double t) {
        return t + (1.0 - std::cos(2.0 * kTwoPi * t)) / (4.0 * kTwoPi)
                 + 0.3 * (1.0 - std::cos(5.0 * kTwoPi * t)) / (5.0 * kTwoPi);
    }
};

/// N i.i.d. samples: intrinsic coordinates, their embeddings, and density
/// values, tagged with the seed that produced them.
struct SampleSet {
    int n = 0;
    Eigen::MatrixXd intrinsic;  // N x d
    Eigen::MatrixXd ambient;    // N x D
    Eigen::VectorXd density;    // p(x_i)
    std::uint64_t seed = 0;
};

namespace detail {

/// Monotone cubic (Fritsch-Carlson) interpolant through (xs, ys), xs strictly
/// increasing. Used to invert the circle CDF from a dense table.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
        : x_(std::move(xs)), y_(std::move(ys)) {
        const std::size_t n = x_.size();
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        m_.resize(n);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) m_[i] = 0.5 * (d[i - 1] + d[i]);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0.0) { m_[i] = m_[i + 1] = 0.0; continue; }
            const double a = m_[i] / d[i], b = m_[i + 1] / d[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double tau = 3.0 / std::sqrt(s);
                m_[i] = tau * a * d[i];
                m_[i + 1] = tau * b * d[i];
            }
        }
    }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double u = (x - x_[i]) / h;
        const double u2 = u * u, u3 = u2 * u;
        return y_[i] * (2 * u3 - 3 * u2 + 1) + h * m_[i] * (u3 - 2 * u2 + u)
             + y_[i + 1] * (-2 * u3 + 3 * u2) + h * m_[i + 1] * (u3 - u2);
    }

private:
    std::vector<double> x_, y_, m_;
};

inline const MonotoneCubic& circle_inverse_cdf() {
    static const MonotoneCubic table = [] {
        constexpr std::size_t kResolution = 1u << 16;
        std::vector<double> ts(kResolution), us(kResolution);
        for (std::size_t i = 0; i < kResolution; ++i) {
            ts[i] = static_cast<double>(i) / (kResolution - 1);
            us[i] = DensityModel::circle_cdf(ts[i]);
        }
        us.front() = 0.0;
        us.back() = 1.0;
        return MonotoneCubic(std::move(us), std::move(ts));
    }();
    return table;
}

} // namespace detail

/// Draws N i.i.d. samples from (model, density) with a seeded counter-based
/// generator. Same inputs give bit-identical output.
inline SampleSet sample(const ManifoldModel& model, const DensityModel& density,
                        int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: N must be >= 1");
    if (!density.compatible_with(model))
        throw std::invalid_argument("sample: density model incompatible with manifold");

    SampleSet out;
    out.n = n;
    out.seed = seed;
    out.intrinsic.resize(n, model.intrinsic_dim);
    out.ambient.resize(n, model.ambient_dim);
    out.density.resize(n);
    SplitMix64 rng(seed);

    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd q(model.intrinsic_dim);
        if (model.kind == ManifoldKind::CircleR4) {
            q[0] = density.is_uniform() ? rng.uniform()
                                        : detail::circle_inverse_cdf()(rng.uniform());
        } else {
            double v0 = rng.gaussian(), v1 = rng.gaussian(), v2 = rng.gaussian();
            double r = std::sqrt(v0 * v0 + v1 * v1 + v2 * v2);
            while (r < 1e-300) {  // astronomically rare, but keep the map total
                v0 = rng.gaussian(); v1 = rng.gaussian(); v2 = rng.gaussian();
                r = std::sqrt(v0 * v0 + v1 * v1 + v2 * v2);
            }
            q[0] = std::acos(std::clamp(v2 / r, -1.0, 1.0));
            q[1] = std::atan2(v1 / r, v0 / r);
        }
        out.intrinsic.row(i) = q.transpose();
        out.ambient.row(i) = model.embed(q).transpose();
        out.density[i] = density.evaluate(model, q);
    }
    return out;
}

namespace detail {

/// Fully normalized associated Legendre P-bar_l^m(cos theta), so that the real
/// spherical harmonics built from them are orthonormal in L^2(S^2, dV).
inline double normalized_alp(int l, int m, double ct, double st) {
    double pmm = std::sqrt(1.0 / (4.0 * kPi));
    for (int k = 1; k <= m; ++k)
        pmm *= st * std::sqrt((2.0 * k + 1.0) / (2.0 * k));
    if (l == m) return pmm;
    double pm1 = ct * std::sqrt(2.0 * m + 3.0) * pmm;
    if (l == m + 1) return pm1;
    double plm = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        const double a = std::sqrt((4.0 * ll * ll - 1.0) / (double(ll) * ll - double(m) * m));
        const double b = std::sqrt(((2.0 * ll + 1.0) / (2.0 * ll - 3.0)) *
                                   ((double(ll - 1) * (ll - 1) - double(m) * m) /
                                    (double(ll) * ll - double(m) * m)));
        plm = a * ct * pm1 - b * pmm;
        pmm = pm1;
        pm1 = plm;
    }
    return plm;
}

} // namespace detail

/// The analytic Laplace-Beltrami eigensystem of a benchmark manifold:
/// ascending eigenvalues (with repeats), per-distinct-value multiplicities,
/// and an evaluator for L^2(M, dV)-orthonormal eigenfunctions.
///
/// Circle (unit circumference): mu = (2 pi j)^2, eigenfunctions
/// {1, sqrt2 cos 2pi j t, sqrt2 sin 2pi j t}. Sphere: mu = l(l+1) with
/// multiplicity 2l+1, real spherical harmonics.
struct AnalyticEigensystem {
    ManifoldKind kind = ManifoldKind::CircleR4;
    Eigen::VectorXd eigenvalues;
    std::vector<int> multiplicities;

    /// k is 0-based; k = 0 is the constant eigenfunction 1/sqrt(Vol).
    double eigenfunction(int k, const Eigen::VectorXd& intrinsic) const {
        if (kind == ManifoldKind::CircleR4) {
            const double t = intrinsic[0];
            if (k == 0) return 1.0;
            const int j = (k + 1) / 2;
            return (k % 2 == 1) ? std::sqrt(2.0) * std::cos(kTwoPi * j * t)
                                : std::sqrt(2.0) * std::sin(kTwoPi * j * t);
        }
        int l = 0;
        while ((l + 1) * (l + 1) <= k) ++l;
        const int r = k - l * l;
        const double th = intrinsic[0], ph = intrinsic[1];
        const double ct = std::cos(th), st = std::sin(th);
        if (r == 0) return detail::normalized_alp(l, 0, ct, st);
        const int m = (r + 1) / 2;
        const double base = std::sqrt(2.0) * detail::normalized_alp(l, m, ct, st);
        return (r % 2 == 1) ? base * std::cos(m * ph) : base * std::sin(m * ph);
    }
};

inline AnalyticEigensystem analytic_spectrum(const ManifoldModel& model, int K) {
    if (K < 1) throw std::invalid_argument("analytic_spectrum: K must be >= 1");
    AnalyticEigensystem sys;
    sys.kind = model.kind;
    sys.eigenvalues.resize(K);
    if (model.kind == ManifoldKind::CircleR4) {
        for (int k = 0; k < K; ++k) {
            const int j = (k + 1) / 2;
            sys.eigenvalues[k] = (kTwoPi * j) * (kTwoPi * j);
        }
        sys.multiplicities.push_back(1);
        for (int filled = 1; filled < K; filled += 2)
            sys.multiplicities.push_back(std::min(2, K - filled));
    } else {
        int k = 0;
        for (int l = 0; k < K; ++l) {
            const int block = std::min(2 * l + 1, K - k);
            for (int r = 0; r < block; ++r) sys.eigenvalues[k++] = double(l) * (l + 1);
            sys.multiplicities.push_back(block);
        }
    }
    return sys;
}

/// Manifold heat kernel H_t(x, y), x and y intrinsic.
///
/// Circle: wrapped Gaussian sum over Z, terms truncated below 1e-16.
/// Sphere: Legendre series sum_l e^{-l(l+1)t} (2l+1)/(4 pi) P_l(cos theta),
/// truncated when the term bound (|P_l| <= 1) falls below 1e-14.
inline double heat_kernel(const ManifoldModel& model, double t,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (t <= 0.0) throw std::invalid_argument("heat_kernel: t must be positive");
    if (model.kind == ManifoldKind::CircleR4) {
        const double s = model.geodesic(x, y);
        const double pref = 1.0 / std::sqrt(4.0 * kPi * t);
        double total = std::exp(-s * s / (4.0 * t));
        for (int n = 1; n < 1000000; ++n) {
            const double a = std::exp(-(s + n) * (s + n) / (4.0 * t));
            const double b = std::exp(-(s - n) * (s - n) / (4.0 * t));
            total += a + b;
            if (pref * (a + b) < 1e-16) break;
        }
        return pref * total;
    }
    const double theta = model.geodesic(x, y);
    const double c = std::cos(theta);
    double p_prev = 1.0, p_curr = c;
    double total = 1.0 / (4.0 * kPi);
    for (int l = 1; l < 1000000; ++l) {
        const double term_bound = std::exp(-double(l) * (l + 1) * t) * (2.0 * l + 1.0) / (4.0 * kPi);
        total += term_bound * p_curr;
        if (term_bound < 1e-14 && l > 2) break;
        const double p_next = ((2.0 * l + 1.0) * c * p_curr - l * p_prev) / (l + 1.0);
        p_prev = p_curr;
        p_curr = p_next;
    }
    return total;
}

/// Spectral-series representation of the circle heat kernel,
/// 1 + 2 sum_j e^{-(2 pi j)^2 t} cos(2 pi j s). Equal to the wrapped Gaussian
/// by Poisson summation; kept as an independent route for cross-checks.
inline double heat_kernel_circle_spectral(double t, double s) {
    if (t <= 0.0) throw std::invalid_argument("heat_kernel_circle_spectral: t must be positive");
    double total = 1.0;
    for (int j = 1; j < 1000000; ++j) {
        const double term = 2.0 * std::exp(-(kTwoPi * j) * (kTwoPi * j) * t);
        total += term * std::cos(kTwoPi * j * s);
        if (term < 1e-16) break;
    }
    return total;
}

/// Local Gaussian surrogate G_t(x,y) = (4 pi t)^{-d/2} exp(-d_M(x,y)^2 / 4t)
/// built on the exact geodesic distance.
inline double gaussian_surrogate(const ManifoldModel& model, double t,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (t <= 0.0) throw std::invalid_argument("gaussian_surrogate: t must be positive");
    const double s = model.geodesic(x, y);
    const double d = model.intrinsic_dim;
    return std::pow(4.0 * kPi * t, -0.5 * d) * std::exp(-s * s / (4.0 * t));
}

} // namespace laplab
