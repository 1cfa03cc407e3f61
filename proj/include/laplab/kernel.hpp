#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace laplab {

enum class KernelProfile { Gaussian, Indicator };

/// Kernel specification K_eps(x,y) = eps^{-d/2} h(||x-y||^2 / eps).
///
/// eps is the squared-distance (diffusion time) parameter; the local distance
/// scale is sqrt(eps). Moments:
///   m0 = integral of h(|u|^2) over R^d,
///   m2 = (1/d) integral of |u|^2 h(|u|^2) over R^d.
/// Gaussian h(xi) = (4 pi)^{-d/2} exp(-xi/4) has m0 = 1, m2 = 2.
/// Indicator h = 1_{[0,1)} has m0 = vol(B_d), m2 = vol(B_d) / (d + 2).
struct KernelSpec {
    double epsilon = 0.0;
    int dim = 1;
    KernelProfile profile = KernelProfile::Gaussian;
    double m0 = 1.0;
    double m2 = 2.0;

    double m_tilde() const { return m2 / (2.0 * m0); }

    static KernelSpec gaussian(double eps, int d) {
        require(eps, d);
        return {eps, d, KernelProfile::Gaussian, 1.0, 2.0};
    }

    static KernelSpec indicator(double eps, int d) {
        require(eps, d);
        const double ball = unit_ball_volume(d);
        return {eps, d, KernelProfile::Indicator, ball, ball / (d + 2.0)};
    }

    /// K_eps as a function of the squared ambient distance.
    double evaluate_sq(double sqdist) const {
        const double xi = sqdist / epsilon;
        const double scale = std::pow(epsilon, -0.5 * dim);
        if (profile == KernelProfile::Gaussian) {
            return scale * std::pow(4.0 * std::numbers::pi, -0.5 * dim) * std::exp(-0.25 * xi);
        }
        // strict support: h = 1 iff xi < 1
        return xi < 1.0 ? scale : 0.0;
    }

    static double unit_ball_volume(int d) {
        return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    }

private:
    static void require(double eps, int d) {
        if (eps <= 0.0) throw std::invalid_argument("KernelSpec: epsilon must be positive");
        if (d < 1) throw std::invalid_argument("KernelSpec: dimension must be >= 1");
    }
};

} // namespace laplab
