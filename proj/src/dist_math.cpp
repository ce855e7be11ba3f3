#include "lobsurv/dist_math.hpp"

#include "lobsurv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lobsurv::dist {

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double mills_ratio(double y) {
    if (y < 8.0) {
        // Direct ratio is accurate here; erfc keeps full relative precision.
        return std_normal_cdf(-y) / std_normal_pdf(y);
    }
    // Continued fraction 1/(y + 1/(y + 2/(y + 3/(y + ...)))), evaluated backwards.
    double tail = y;
    for (int k = 60; k >= 1; --k) tail = y + k / tail;
    return 1.0 / tail;
}

double log_std_normal_cdf(double x) {
    if (x > 5.0) return std::log1p(-std_normal_cdf(-x));
    if (x > -8.0) return std::log(std_normal_cdf(x));
    return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio(-x));
}

double inverse_mills_lower(double x) {
    if (x > -8.0) return std_normal_pdf(x) / std_normal_cdf(x);
    return 1.0 / mills_ratio(-x);
}

double owens_t(double h, double a) {
    if (a == 0.0) return 0.0;
    if (h == 0.0) return std::atan(a) / (2.0 * kPi);
    const double sign = a < 0.0 ? -1.0 : 1.0;
    const double span = std::abs(a);
    const double hh = 0.5 * h * h;
    if (hh > 745.0) return 0.0;
    auto integrand = [hh](double t) {
        const double s = 1.0 + t * t;
        return std::array<double, 1>{std::exp(-hh * s) / s};
    };
    // The integrand is negligible beyond t where hh * t^2 > 40.
    const double upper = std::min(span, std::sqrt(40.0 / hh) + 1.0);
    const auto r = quad::integrate<1>(integrand, 0.0, upper, 1e-15, 1e-14);
    return sign * r.value[0] / (2.0 * kPi);
}

double SkewNormalParams::b_alpha() const { return alpha / std::sqrt(1.0 + alpha * alpha); }

double sn_logpdf(const SkewNormalParams& p, double x) {
    const double z = (x - p.mu) / p.sigma;
    return std::log(2.0) - std::log(p.sigma) - kLogSqrt2Pi - 0.5 * z * z + log_std_normal_cdf(p.alpha * z);
}

double sn_pdf(const SkewNormalParams& p, double x) { return std::exp(sn_logpdf(p, x)); }

namespace {

double standard_sn_cdf(double alpha, double z) {
    return std::clamp(std_normal_cdf(z) - 2.0 * owens_t(z, alpha), 0.0, 1.0);
}

struct LowerTail {
    double p = 0.0;     // P(Z <= z)
    double mean = 0.0;  // E(Z | Z <= z); meaningless when p underflows
};

// Lower region of the standard skew normal by direct integration of the
// density, written relative to its value at the threshold so that neither
// the probability nor the conditional mean loses precision to cancellation.
LowerTail lower_tail_by_quadrature(double alpha, double z) {
    const double log_phi_alpha_z = log_std_normal_cdf(alpha * z);
    auto weight = [&](double u) {
        const double log_g = u * z - 0.5 * u * u + log_std_normal_cdf(alpha * (z - u)) - log_phi_alpha_z;
        const double g = std::exp(log_g);
        return std::array<double, 2>{g, u * g};
    };
    // g(u) <= exp(u z - u^2/2) with z < 0, so the integrand is below e^-60
    // past `upper`.
    const double upper = std::min(12.0, 60.0 / std::abs(z));
    const auto r = quad::integrate<2>(weight, 0.0, upper, 0.0, 1e-13, 400);
    LowerTail out;
    const double log_p = std::log(2.0) - kLogSqrt2Pi - 0.5 * z * z + log_phi_alpha_z + std::log(r.value[0]);
    out.p = std::exp(log_p);
    out.mean = z - r.value[1] / r.value[0];
    return out;
}

// P(Z <= z) and E(Z | Z <= z) for Z ~ SN(0, 1, alpha).
LowerTail standard_lower_tail(double alpha, double z) {
    const double phi_z = std_normal_cdf(z);
    const double f = standard_sn_cdf(alpha, z);
    if (alpha > 0.0 && z < 0.0 && !(f >= 1e-4 * phi_z)) {
        // Phi(z) - 2T(z, alpha) cancels almost completely here.
        return lower_tail_by_quadrature(alpha, z);
    }
    LowerTail out;
    out.p = f;
    const double b = alpha / std::sqrt(1.0 + alpha * alpha);
    const double c = std::sqrt(1.0 + alpha * alpha);
    const double partial =
        kSqrt2OverPi * (b * std_normal_cdf(c * z) - std::exp(-0.5 * z * z) * std_normal_cdf(alpha * z));
    out.mean = f > 0.0 ? partial / f : z;
    return out;
}

}  // namespace

double sn_cdf(const SkewNormalParams& p, double x) { return standard_sn_cdf(p.alpha, (x - p.mu) / p.sigma); }

TailMoments gaussian_tail_moments(double mu, double sigma, double x) {
    const double z = (x - mu) / sigma;
    TailMoments t;
    t.p_below = std_normal_cdf(z);
    t.p_above = std_normal_cdf(-z);
    if (t.p_below <= kDegenerateTail) {
        t.degenerate_below = true;
        t.mean_below = x;
    } else {
        t.mean_below = mu - sigma * inverse_mills_lower(z);
    }
    if (t.p_above <= kDegenerateTail) {
        t.degenerate_above = true;
        t.mean_above = x;
    } else {
        t.mean_above = mu + sigma * inverse_mills_lower(-z);
    }
    return t;
}

TailMoments sn_tail_moments(const SkewNormalParams& p, double x) {
    const double z = (x - p.mu) / p.sigma;
    const LowerTail below = standard_lower_tail(p.alpha, z);
    // Upper region through the mirror identity X > x  <=>  -X < -x, -X ~ SN(-mu, sigma, -alpha).
    const LowerTail above = standard_lower_tail(-p.alpha, -z);
    TailMoments t;
    t.p_below = below.p;
    t.p_above = above.p;
    if (t.p_below <= kDegenerateTail) {
        t.degenerate_below = true;
        t.mean_below = x;
    } else {
        t.mean_below = p.mu + p.sigma * below.mean;
    }
    if (t.p_above <= kDegenerateTail) {
        t.degenerate_above = true;
        t.mean_above = x;
    } else {
        t.mean_above = p.mu - p.sigma * above.mean;
    }
    return t;
}

MeanVar sn_mean_var(const SkewNormalParams& p) {
    const double b = p.b_alpha();
    return {p.mu + p.sigma * b * kSqrt2OverPi, p.sigma * p.sigma * (1.0 - 2.0 * b * b / kPi)};
}

double sharpe(const SkewNormalParams& p) {
    const MeanVar m = sn_mean_var(p);
    return m.mean / std::sqrt(m.variance);
}

double bvn_logpdf(const BivariateNormalParams& p, double y1, double y2) {
    const double r1 = (y1 - p.mu1) / p.sigma1;
    const double r2 = (y2 - p.mu2) / p.sigma2;
    const double d = 1.0 - p.rho * p.rho;
    const double q = (r1 * r1 - 2.0 * p.rho * r1 * r2 + r2 * r2) / d;
    return -2.0 * kLogSqrt2Pi - std::log(p.sigma1) - std::log(p.sigma2) - 0.5 * std::log(d) - 0.5 * q;
}

}  // namespace lobsurv::dist
