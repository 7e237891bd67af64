#include "enroll/appendix.hpp"

#include <cmath>

#include "enroll/dist.hpp"
#include "enroll/model.hpp"

namespace enroll {

namespace {

constexpr double kAlpha = 1.5;
constexpr double kBeta = 150.0;
constexpr int kLen = 50;       // counts 0..50 per site vector
constexpr double kTol = 2e-4;  // acceptance band around the reference values

struct Reference {
    int sites;
    double dif;
};
constexpr Reference kReference[] = {{2, 0.0019},  {3, 0.0017},   {5, 0.0011},  {8, 0.00075},
                                    {10, 0.00059}, {15, 0.00039}, {20, 0.00029}};

}  // namespace

std::vector<AggregationErrorRow> aggregation_error_table() {
    std::vector<AggregationErrorRow> rows;
    for (const auto& ref : kReference) {
        const int k_sites = ref.sites;
        std::vector<DiscreteDist> site_dists;
        RateMoments moments;
        for (int i = 1; i <= k_sites; ++i) {
            double v = static_cast<double>(std::llround(i * 300.0 / k_sites));
            PGParams p(v, kAlpha, kBeta);
            site_dists.push_back(DiscreteDist{pg_pmf_vector(p, kLen + 1)});
            moments.mean += p.alpha / p.beta * v;
            moments.var += p.alpha / (p.beta * p.beta) * v * v;
        }
        // exact route: direct convolution of the truncated site vectors;
        // entries at counts <= 50 are unaffected by the truncation
        DiscreteDist exact = site_dists[0];
        for (std::size_t i = 1; i < site_dists.size(); ++i) {
            Eigen::ArrayXd out =
                Eigen::ArrayXd::Zero(exact.pmf.size() + site_dists[i].pmf.size() - 1);
            for (Eigen::Index a = 0; a < exact.pmf.size(); ++a)
                for (Eigen::Index b = 0; b < site_dists[i].pmf.size(); ++b)
                    out[a + b] += exact.pmf[a] * site_dists[i].pmf[b];
            exact.pmf = std::move(out);
        }

        Eigen::ArrayXd approx = pg_pmf_vector(aggregate_pg(moments).pg(), kLen + 1);
        double dif = 0.0;
        for (int c = 1; c <= kLen; ++c) dif = std::max(dif, std::abs(exact.pmf[c] - approx[c]));

        AggregationErrorRow row;
        row.sites = k_sites;
        row.dif = dif;
        row.expected = ref.dif;
        row.pass = std::abs(dif - ref.dif) <= kTol;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace enroll
