#include "enroll/dist.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace enroll {

namespace {

// Below this output length the direct O(n m) product is both faster and exact
// to round-off, so tiny supports never see FFT noise.
constexpr std::int64_t kDirectThreshold = 64;

std::int64_t next_pow2(std::int64_t n) {
    std::int64_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

DiscreteDist DiscreteDist::point_mass(std::int64_t at) {
    if (at < 0) throw std::domain_error("point mass location must be >= 0");
    Eigen::ArrayXd pmf = Eigen::ArrayXd::Zero(at + 1);
    pmf[at] = 1.0;
    return DiscreteDist{std::move(pmf)};
}

double DiscreteDist::cdf(std::int64_t k) const {
    if (k < 0) return 0.0;
    if (k >= pmf.size()) return 1.0;
    return std::min(1.0, pmf.head(k + 1).sum());
}

double DiscreteDist::sf(std::int64_t k) const {
    if (k < 0) return 1.0;
    if (k >= pmf.size() - 1) return 0.0;
    return std::min(1.0, pmf.tail(pmf.size() - 1 - k).sum());
}

std::int64_t DiscreteDist::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("quantile level must be in (0,1)");
    double acc = 0.0;
    for (std::int64_t k = 0; k < pmf.size(); ++k) {
        acc += pmf[k];
        if (acc >= q) return k;
    }
    return pmf.size() - 1;
}

double DiscreteDist::mean() const {
    double m = 0.0;
    for (std::int64_t k = 1; k < pmf.size(); ++k) m += static_cast<double>(k) * pmf[k];
    return m;
}

DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b) {
    const std::int64_t la = a.pmf.size(), lb = b.pmf.size();
    if (la == 0 || lb == 0) throw std::invalid_argument("convolve: empty distribution");
    const std::int64_t lout = la + lb - 1;

    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(lout);
    if (lout <= kDirectThreshold || la == 1 || lb == 1) {
        for (std::int64_t i = 0; i < la; ++i) {
            if (a.pmf[i] == 0.0) continue;
            for (std::int64_t j = 0; j < lb; ++j) out[i + j] += a.pmf[i] * b.pmf[j];
        }
        return DiscreteDist{std::move(out)};
    }

    const std::int64_t n = next_pow2(lout);
    Eigen::FFT<double> fft;
    std::vector<double> pa(static_cast<std::size_t>(n), 0.0), pb(pa);
    Eigen::ArrayXd::Map(pa.data(), la) = a.pmf;
    Eigen::ArrayXd::Map(pb.data(), lb) = b.pmf;
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, pa);
    fft.fwd(fb, pb);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    std::vector<double> prod;
    fft.inv(prod, fa);

    // round-off hygiene: clip the tiny negatives FFT produces, renormalize
    double total = 0.0;
    for (std::int64_t i = 0; i < lout; ++i) {
        double v = prod[static_cast<std::size_t>(i)];
        out[i] = v > 0.0 ? v : 0.0;
        total += out[i];
    }
    if (total > 0.0) out /= total;
    return DiscreteDist{std::move(out)};
}

DiscreteDist convolve_all(std::vector<DiscreteDist> dists) {
    if (dists.empty()) return DiscreteDist::point_mass(0);
    using Entry = std::pair<std::int64_t, std::size_t>;  // (length, slot)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    for (std::size_t i = 0; i < dists.size(); ++i) pq.emplace(dists[i].pmf.size(), i);
    while (pq.size() > 1) {
        auto [l1, i1] = pq.top();
        pq.pop();
        auto [l2, i2] = pq.top();
        pq.pop();
        dists[i1] = convolve(dists[i1], dists[i2]);
        dists[i2].pmf.resize(0);
        pq.emplace(dists[i1].pmf.size(), i1);
    }
    return std::move(dists[pq.top().second]);
}

}  // namespace enroll
