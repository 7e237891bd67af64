#pragma once

// Test-side oracles, kept independent of the library's computation paths:
// the negative-binomial pmf via the direct product form of the gamma ratio,
// quadratic-time convolution, and brute-force moment sums.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace oracles {

/// NB(size, p) pmf at k via Gamma(size+k)/Gamma(size) = prod_{j<k} (size+j);
/// no log-gamma involved.
inline double nb_pmf_product(double size, double p, std::int64_t k) {
    double v = std::pow(p, size);
    for (std::int64_t j = 0; j < k; ++j)
        v *= (size + static_cast<double>(j)) * (1.0 - p) / static_cast<double>(j + 1);
    return v;
}

/// PG(t, alpha, beta) pmf at k through the product-form NB identity.
inline double pg_pmf_product(double t, double alpha, double beta, std::int64_t k) {
    if (t == 0.0) return k == 0 ? 1.0 : 0.0;
    return nb_pmf_product(alpha, beta / (beta + t), k);
}

inline Eigen::ArrayXd direct_convolve(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(a.size() + b.size() - 1);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

inline double moment_sum(const Eigen::ArrayXd& pmf, int order) {
    double m = 0.0;
    for (Eigen::Index k = 1; k < pmf.size(); ++k)
        m += std::pow(static_cast<double>(k), order) * pmf[k];
    return m;
}

}  // namespace oracles
