#pragma once

#include <span>

namespace shadowrec {

double mean(std::span<const double> values);

/// Unbiased (n-1) sample variance.
double sample_variance(std::span<const double> values);

struct WelchResult {
    double t = 0.0;
    double p = 1.0;   // two-sided
    double df = 0.0;  // Welch-Satterthwaite
};

/// Welch's unequal-variance t-test. Requires at least two values per sample
/// and non-zero variance in at least one of them.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

/// (mean(a) - mean(b)) / pooled standard deviation with n-1 weighting.
double cohens_d(std::span<const double> a, std::span<const double> b);

}  // namespace shadowrec
