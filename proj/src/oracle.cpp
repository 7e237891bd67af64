#include "enroll/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "enroll/capped.hpp"
#include "enroll/parallel.hpp"

namespace enroll {

namespace {

// Small fast engine; each replication gets its own stream derived from
// (seed, replication), so pooling is independent of the thread partition.
struct SplitMix64 {
    using result_type = std::uint64_t;
    std::uint64_t state;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t rep) {
    SplitMix64 mix{seed ^ (0xD1B54A32D192ED03ULL * (rep + 1))};
    return mix();
}

struct ThreadAccum {
    std::vector<std::vector<std::uint32_t>> day_hist;  // [day-1][count]
    std::vector<std::uint32_t> completion_hist;        // [day], censored at horizon+1
    std::vector<std::vector<std::uint32_t>> cap_hist;  // [capped country][day]

    void init(int horizon, std::size_t n_capped) {
        day_hist.assign(static_cast<std::size_t>(horizon), {});
        completion_hist.assign(static_cast<std::size_t>(horizon) + 2, 0);
        cap_hist.assign(n_capped,
                        std::vector<std::uint32_t>(static_cast<std::size_t>(horizon) + 2, 0));
    }

    void bump_day(int day, std::int64_t count) {
        auto& h = day_hist[static_cast<std::size_t>(day - 1)];
        if (h.size() <= static_cast<std::size_t>(count))
            h.resize(static_cast<std::size_t>(count) + 1, 0);
        ++h[static_cast<std::size_t>(count)];
    }

    void merge_into(ThreadAccum& dst) const {
        for (std::size_t d = 0; d < day_hist.size(); ++d) {
            auto& a = dst.day_hist[d];
            const auto& b = day_hist[d];
            if (a.size() < b.size()) a.resize(b.size(), 0);
            for (std::size_t c = 0; c < b.size(); ++c) a[c] += b[c];
        }
        for (std::size_t i = 0; i < completion_hist.size(); ++i)
            dst.completion_hist[i] += completion_hist[i];
        for (std::size_t k = 0; k < cap_hist.size(); ++k)
            for (std::size_t i = 0; i < cap_hist[k].size(); ++i)
                dst.cap_hist[k][i] += cap_hist[k][i];
    }
};

int quantile_day(const std::vector<std::uint32_t>& hist, std::int64_t reps, double q,
                 int horizon) {
    std::int64_t need = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(reps)));
    if (need < 1) need = 1;
    std::int64_t acc = 0;
    for (int d = 0; d <= horizon; ++d) {
        acc += hist[static_cast<std::size_t>(d)];
        if (acc >= need) return d;
    }
    return horizon + 1;
}

}  // namespace

double DayHitStats::hit_prob_by(int day) const {
    std::int64_t acc = 0;
    int lim = std::min<int>(day, static_cast<int>(hit_day_hist.size()) - 2);
    for (int d = 0; d <= lim; ++d) acc += hit_day_hist[static_cast<std::size_t>(d)];
    return static_cast<double>(acc) / static_cast<double>(replications);
}

int DayHitStats::hit_day_quantile(double q) const {
    return quantile_day(hit_day_hist, replications,
                        q, static_cast<int>(hit_day_hist.size()) - 2);
}

std::int64_t SimSummary::day_quantile(int day, double q) const {
    const auto& h = day_hist[static_cast<std::size_t>(day - 1)];
    std::int64_t need = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(replications)));
    if (need < 1) need = 1;
    std::int64_t acc = 0;
    for (std::size_t c = 0; c < h.size(); ++c) {
        acc += h[c];
        if (acc >= need) return static_cast<std::int64_t>(c);
    }
    return h.empty() ? 0 : static_cast<std::int64_t>(h.size()) - 1;
}

int SimSummary::completion_day_quantile(double q) const {
    return quantile_day(completion_day_hist, replications, q, horizon);
}

SimSummary simulate(const StudyPlan& plan, const SimConfig& cfg) {
    if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");
    const int horizon = cfg.horizon > 0 ? cfg.horizon : plan.t_plan_days;
    if (horizon < plan.t_plan_days)
        throw std::invalid_argument("simulation horizon shorter than t_plan");

    std::vector<std::size_t> capped_idx;
    for (std::size_t s = 0; s < plan.countries.size(); ++s)
        if (plan.countries[s].cap) capped_idx.push_back(s);

    const unsigned workers =
        static_cast<unsigned>(std::min<std::int64_t>(thread_count(), cfg.replications));
    std::vector<ThreadAccum> acc(std::max(1u, workers));
    for (auto& a : acc) a.init(horizon, capped_idx.size());

    parallel_chunks(cfg.replications, [&](std::int64_t lo, std::int64_t hi, unsigned chunk) {
        ThreadAccum& a = acc[chunk];
        std::vector<int> arrivals;
        std::vector<std::int32_t> global_delta(static_cast<std::size_t>(horizon) + 1, 0);
        for (std::int64_t rep = lo; rep < hi; ++rep) {
            SplitMix64 eng{derive_stream(cfg.seed, static_cast<std::uint64_t>(rep))};
            std::fill(global_delta.begin(), global_delta.end(), 0);
            std::size_t cap_slot = 0;
            for (std::size_t s = 0; s < plan.countries.size(); ++s) {
                const CountryPlan& country = plan.countries[s];
                arrivals.clear();
                for (const auto& site : country.sites) {
                    int active = horizon - site.activation_day;
                    if (active <= 0) continue;
                    double lam = std::gamma_distribution<double>(
                        site.prior.alpha, 1.0 / site.prior.beta)(eng);
                    auto n_arr = std::poisson_distribution<std::int64_t>(
                        lam * static_cast<double>(active))(eng);
                    std::uniform_int_distribution<int> day_of(site.activation_day + 1, horizon);
                    for (std::int64_t i = 0; i < n_arr; ++i) arrivals.push_back(day_of(eng));
                }
                std::int64_t keep = static_cast<std::int64_t>(arrivals.size());
                if (country.cap) {
                    std::int64_t cap = *country.cap;
                    int hit_day = horizon + 1;
                    if (keep >= cap && cap >= 1) {
                        // the cap-th earliest arrival freezes the country; the
                        // overshoot on that day is discarded
                        std::nth_element(arrivals.begin(),
                                         arrivals.begin() + (cap - 1), arrivals.end());
                        hit_day = arrivals[static_cast<std::size_t>(cap - 1)];
                        keep = cap;
                    } else if (cap == 0) {
                        hit_day = 0;
                        keep = 0;
                    }
                    ++a.cap_hist[cap_slot][static_cast<std::size_t>(hit_day)];
                    ++cap_slot;
                }
                for (std::int64_t i = 0; i < keep; ++i)
                    ++global_delta[static_cast<std::size_t>(arrivals[static_cast<std::size_t>(i)])];
            }
            std::int64_t cum = 0;
            int completion = horizon + 1;
            for (int d = 1; d <= horizon; ++d) {
                cum += global_delta[static_cast<std::size_t>(d)];
                a.bump_day(d, cum);
                if (completion > horizon && cum >= plan.target_n) completion = d;
            }
            ++a.completion_hist[static_cast<std::size_t>(completion)];
        }
    });

    for (std::size_t i = 1; i < acc.size(); ++i) acc[i].merge_into(acc[0]);
    ThreadAccum& pooled = acc[0];

    SimSummary out;
    out.horizon = horizon;
    out.t_plan = plan.t_plan_days;
    out.replications = cfg.replications;
    out.day_hist = std::move(pooled.day_hist);
    out.completion_day_hist = std::move(pooled.completion_hist);

    const double reps = static_cast<double>(cfg.replications);
    out.day_mean.resize(static_cast<std::size_t>(horizon));
    out.day_sd.resize(static_cast<std::size_t>(horizon));
    out.day_q05.resize(static_cast<std::size_t>(horizon));
    out.day_q50.resize(static_cast<std::size_t>(horizon));
    out.day_q95.resize(static_cast<std::size_t>(horizon));
    for (int d = 1; d <= horizon; ++d) {
        const auto& h = out.day_hist[static_cast<std::size_t>(d - 1)];
        std::int64_t sum = 0, sum2 = 0;
        for (std::size_t c = 0; c < h.size(); ++c) {
            auto cc = static_cast<std::int64_t>(c);
            sum += cc * h[c];
            sum2 += cc * cc * h[c];
        }
        double mean = static_cast<double>(sum) / reps;
        out.day_mean[static_cast<std::size_t>(d - 1)] = mean;
        out.day_sd[static_cast<std::size_t>(d - 1)] =
            std::sqrt(std::max(0.0, static_cast<double>(sum2) / reps - mean * mean));
        out.day_q05[static_cast<std::size_t>(d - 1)] = out.day_quantile(d, 0.05);
        out.day_q50[static_cast<std::size_t>(d - 1)] = out.day_quantile(d, 0.5);
        out.day_q95[static_cast<std::size_t>(d - 1)] = out.day_quantile(d, 0.95);
    }

    std::int64_t completed = 0;
    for (int d = 0; d <= plan.t_plan_days && d <= horizon; ++d)
        completed += out.completion_day_hist[static_cast<std::size_t>(d)];
    out.pos_at_tplan = static_cast<double>(completed) / reps;
    out.pos_se = std::sqrt(std::max(0.0, out.pos_at_tplan * (1.0 - out.pos_at_tplan) / reps));

    for (std::size_t k = 0; k < capped_idx.size(); ++k) {
        DayHitStats st;
        st.country_id = plan.countries[capped_idx[k]].id;
        st.cap = *plan.countries[capped_idx[k]].cap;
        st.hit_day_hist = std::move(pooled.cap_hist[k]);
        st.replications = cfg.replications;
        out.cap_stats.push_back(std::move(st));
    }
    return out;
}

std::pair<double, double> brute_capped_moments(const PGParams& params, std::int64_t cap) {
    CappedDist d = capped_pg_dist(params, cap);
    double mean = 0.0, second = 0.0, cm = 0.0, cs = 0.0;  // Kahan pairs
    for (std::int64_t k = 1; k <= cap; ++k) {
        double kk = static_cast<double>(k);
        double term = kk * d.pmf[k];
        double y = term - cm;
        double t = mean + y;
        cm = (t - mean) - y;
        mean = t;
        term = kk * kk * d.pmf[k];
        y = term - cs;
        t = second + y;
        cs = (t - second) - y;
        second = t;
    }
    return {mean, second};
}

}  // namespace enroll
