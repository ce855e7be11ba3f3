#pragma once

namespace lobsurv::dist {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1/sqrt(2 pi)
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

/// Probabilities at or below this are treated as impossible events.
inline constexpr double kDegenerateTail = 1e-300;

double std_normal_pdf(double x);
double std_normal_cdf(double x);
/// log Phi(x), accurate far into the lower tail.
double log_std_normal_cdf(double x);
/// Mills ratio (1 - Phi(y)) / phi(y).
double mills_ratio(double y);
/// phi(x) / Phi(x), stable for very negative x.
double inverse_mills_lower(double x);

/// Owen's T function T(h, a) = 1/(2 pi) int_0^a exp(-h^2 (1+t^2)/2) / (1+t^2) dt.
double owens_t(double h, double a);

struct SkewNormalParams {
    double mu = 0.0;
    double sigma = 1.0;
    double alpha = 0.0;

    /// alpha / sqrt(1 + alpha^2), in (-1, 1).
    double b_alpha() const;
};

struct BivariateNormalParams {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rho = 0.0;
};

double sn_pdf(const SkewNormalParams& p, double x);
double sn_logpdf(const SkewNormalParams& p, double x);
/// F_alpha((x - mu)/sigma) = Phi(z) - 2 T(z, alpha), clamped to [0, 1].
double sn_cdf(const SkewNormalParams& p, double x);

/// Threshold split of a distribution at `x`: probability of the lower region
/// and the conditional means on both sides. When a side has probability at
/// most kDegenerateTail its conditional mean is replaced by `x` and the side
/// is flagged.
struct TailMoments {
    double p_below = 0.0;     // P(X <= x)
    double p_above = 0.0;     // P(X > x), evaluated on its own tail
    double mean_below = 0.0;  // E(X | X <= x)
    double mean_above = 0.0;  // E(X | X > x)
    bool degenerate_below = false;
    bool degenerate_above = false;
};

TailMoments gaussian_tail_moments(double mu, double sigma, double x);
TailMoments sn_tail_moments(const SkewNormalParams& p, double x);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;
};

MeanVar sn_mean_var(const SkewNormalParams& p);
/// Standardized average E / sqrt(V).
double sharpe(const SkewNormalParams& p);

double bvn_logpdf(const BivariateNormalParams& p, double y1, double y2);

}  // namespace lobsurv::dist
