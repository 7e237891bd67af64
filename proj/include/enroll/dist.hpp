#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace enroll {

/// Finite pmf over patient counts 0..size-1.
struct DiscreteDist {
    Eigen::ArrayXd pmf;

    static DiscreteDist point_mass(std::int64_t at);
    std::int64_t size() const { return pmf.size(); }
    double cdf(std::int64_t k) const;
    /// P(count > k) summed from the upper end (no cancellation).
    double sf(std::int64_t k) const;
    /// Smallest k with cdf(k) >= q.
    std::int64_t quantile(double q) const;
    double mean() const;
};

/// pmf of a process truncated at `cap`: length cap+1, the atom at cap holds
/// the complement mass 1 - P(count <= cap-1).
struct CappedDist {
    Eigen::ArrayXd pmf;
    std::int64_t cap = 0;

    DiscreteDist as_discrete() const { return DiscreteDist{pmf}; }
};

/// pmf of the sum of independent counts. FFT with power-of-two padding above
/// a small length threshold, direct convolution below it; FFT round-off is
/// clipped at zero and the vector renormalized.
DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b);

/// Convolution of many distributions, shortest pairs first.
DiscreteDist convolve_all(std::vector<DiscreteDist> dists);

}  // namespace enroll
