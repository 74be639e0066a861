// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "hammerlab/error.hpp"

namespace hammerlab {

struct Summary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

inline Summary summarize(std::span<const double> xs) {
    if (xs.empty()) {
        throw domain_error("cannot summarize an empty sample");
    }
    Summary s{0.0, xs[0], xs[0], xs.size()};
    for (double x : xs) {
        s.mean += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean /= static_cast<double>(xs.size());
    return s;
}

struct PairedTest {
    std::size_t n = 0;
    double mean_diff = 0.0;  // mean of a[i] - b[i]
    double sd_diff = 0.0;
    double t = 0.0;
    double p_value = 1.0;  // one-sided, H1: mean(a - b) > 0
};

/// One-sided paired t-test that a exceeds b.
inline PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw dimension_error("paired samples differ in length");
    }
    if (a.size() < 2) {
        throw domain_error("paired t-test needs at least two pairs");
    }
    PairedTest r;
    r.n = a.size();
    const double n = static_cast<double>(r.n);
    for (std::size_t i = 0; i < r.n; ++i) {
        r.mean_diff += a[i] - b[i];
    }
    r.mean_diff /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < r.n; ++i) {
        const double d = a[i] - b[i] - r.mean_diff;
        ss += d * d;
    }
    r.sd_diff = std::sqrt(ss / (n - 1.0));
    if (r.sd_diff == 0.0) {
        r.t = r.mean_diff > 0.0   ? std::numeric_limits<double>::infinity()
              : r.mean_diff < 0.0 ? -std::numeric_limits<double>::infinity()
                                  : 0.0;
        r.p_value = r.mean_diff > 0.0 ? 0.0 : 1.0;
        return r;
    }
    r.t = r.mean_diff / (r.sd_diff / std::sqrt(n));
    const boost::math::students_t dist(n - 1.0);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
    return r;
}

}  // namespace hammerlab
