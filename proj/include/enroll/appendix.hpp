#pragma once

#include <vector>

namespace enroll {

/// One row of the aggregation-error diagnostic: a K-site country with
/// identical priors (alpha 1.5, beta 150) and exposures on the uniform grid
/// round(i * 300 / K), i = 1..K. `dif` is the sup-norm distance over counts
/// 1..50 between the exact convolution of the site distributions and the
/// moment-matched PG approximation; `expected` is the reference value the
/// check validates against.
struct AggregationErrorRow {
    int sites = 0;
    double dif = 0.0;
    double expected = 0.0;
    bool pass = false;
};

std::vector<AggregationErrorRow> aggregation_error_table();

}  // namespace enroll
