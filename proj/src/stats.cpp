#include "shadowrec/stats.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "shadowrec/error.hpp"

namespace shadowrec {

double mean(std::span<const double> values) {
    if (values.empty()) {
        throw StatisticsError("mean of an empty sample");
    }
    double total = 0.0;
    for (double v : values) {
        total += v;
    }
    return total / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2) {
        throw StatisticsError("sample variance needs at least two values");
    }
    const double m = mean(values);
    double total = 0.0;
    for (double v : values) {
        total += (v - m) * (v - m);
    }
    return total / static_cast<double>(values.size() - 1);
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw StatisticsError("welch t-test needs at least two values per sample");
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sample_variance(a) / na;
    const double vb = sample_variance(b) / nb;
    const double se2 = va + vb;
    if (!(se2 > 0.0)) {
        throw StatisticsError("welch t-test is undefined when both samples have zero variance");
    }
    WelchResult out;
    out.t = (mean(a) - mean(b)) / std::sqrt(se2);
    out.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    const boost::math::students_t dist(out.df);
    out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
    if (out.p > 1.0) {
        out.p = 1.0;
    }
    return out;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw StatisticsError("cohen's d needs at least two values per sample");
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
    if (!(pooled > 0.0)) {
        throw StatisticsError("cohen's d is undefined with zero pooled standard deviation");
    }
    return (mean(a) - mean(b)) / std::sqrt(pooled);
}

}  // namespace shadowrec
