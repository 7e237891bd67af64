#include "enroll/plan.hpp"

#include <cmath>
#include <unordered_set>

#include "enroll/errors.hpp"

namespace enroll {

std::vector<int> activation_grid(int a, int b, int n_sites) {
    if (n_sites < 0) throw std::domain_error("n_sites must be >= 0");
    if (b < a) throw std::domain_error("activation window must have a <= b");
    // midpoint rule: the grid mean equals (a+b)/2 for every n, so a realized
    // plan matches the uniform-window expectations the optimizer works with
    std::vector<int> days(static_cast<std::size_t>(n_sites));
    for (int i = 1; i <= n_sites; ++i) {
        double step = (static_cast<double>(i) - 0.5) * static_cast<double>(b - a) / n_sites;
        days[static_cast<std::size_t>(i - 1)] = a + static_cast<int>(std::llround(step));
    }
    return days;
}

void validate_plan(const StudyPlan& plan) {
    if (plan.target_n < 1) throw config_error("study.target_n", "must be >= 1");
    if (plan.t_plan_days < 1) throw config_error("study.t_plan_days", "must be >= 1");
    std::unordered_set<std::string> country_ids;
    for (const auto& c : plan.countries) {
        if (!country_ids.insert(c.id).second)
            throw config_error("countries", "duplicate country id '" + c.id + "'");
        if (c.cap && *c.cap < 0)
            throw config_error("countries." + c.id + ".cap", "must be >= 0");
        std::unordered_set<std::string> site_ids;
        for (const auto& s : c.sites) {
            if (!site_ids.insert(s.id).second)
                throw config_error("countries." + c.id + ".sites",
                                   "duplicate site id '" + s.id + "'");
            if (s.activation_day < 0)
                throw config_error("countries." + c.id + ".sites." + s.id,
                                   "activation_day must be >= 0");
            if (!(s.prior.alpha > 0.0) || !(s.prior.beta > 0.0))
                throw config_error("countries." + c.id + ".sites." + s.id,
                                   "rate prior must have positive alpha and beta");
        }
    }
}

std::optional<std::int64_t> max_attainable(const StudyPlan& plan) {
    std::int64_t total = 0;
    for (const auto& c : plan.countries) {
        if (c.sites.empty()) continue;
        if (!c.cap) return std::nullopt;
        total += *c.cap;
    }
    return total;
}

}  // namespace enroll
