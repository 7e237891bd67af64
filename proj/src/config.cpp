#include "enroll/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "enroll/errors.hpp"

namespace enroll {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw config_error(path + "." + key, "missing");
    const auto& v = j.at(key);
    if (!v.is_number()) throw config_error(path + "." + key, "must be a number");
    return v.get<double>();
}

std::int64_t require_int(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw config_error(path + "." + key, "missing");
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw config_error(path + "." + key, "must be an integer");
    return v.get<std::int64_t>();
}

CountryConfig parse_country(const json& j, std::size_t index) {
    std::string path = "countries[" + std::to_string(index) + "]";
    CountryConfig c;
    if (!j.contains("id") || !j.at("id").is_string())
        throw config_error(path + ".id", "missing or not a string");
    c.id = j.at("id").get<std::string>();
    path = "countries." + c.id;

    if (j.contains("cap")) {
        std::int64_t cap = require_int(j, path, "cap");
        if (cap < 0) throw config_error(path + ".cap", "must be >= 0");
        c.cap = cap;
    }
    if (j.contains("cost")) {
        const auto& cost = j.at("cost");
        if (!cost.is_object()) throw config_error(path + ".cost", "must be an object");
        if (cost.contains("site")) c.cost_site = require_number(cost, path + ".cost", "site");
        if (cost.contains("patient"))
            c.cost_patient = require_number(cost, path + ".cost", "patient");
        if (cost.contains("country"))
            c.cost_country = require_number(cost, path + ".cost", "country");
        if (c.cost_site < 0 || c.cost_patient < 0 || c.cost_country < 0)
            throw config_error(path + ".cost", "costs must be >= 0");
    }
    if (j.contains("bounds")) {
        const auto& b = j.at("bounds");
        if (!b.is_object()) throw config_error(path + ".bounds", "must be an object");
        c.bound_low = static_cast<int>(require_int(b, path + ".bounds", "low"));
        c.bound_high = static_cast<int>(require_int(b, path + ".bounds", "high"));
        if (*c.bound_low < 0 || *c.bound_low > *c.bound_high)
            throw config_error(path + ".bounds", "need 0 <= low <= high");
    }

    bool has_rate = j.contains("rate");
    bool has_sites = j.contains("sites");
    if (!has_rate && !has_sites)
        throw config_error(path, "one of rate{mean,cv} or sites[] is required");

    if (has_rate) {
        const auto& r = j.at("rate");
        if (!r.is_object()) throw config_error(path + ".rate", "must be an object");
        bool per_month = r.contains("mean_per_month");
        bool per_day = r.contains("mean_per_day");
        if (per_month == per_day)
            throw config_error(path + ".rate",
                               "exactly one of mean_per_month or mean_per_day is required");
        double mean = per_month ? require_number(r, path + ".rate", "mean_per_month") / kDaysPerMonth
                                : require_number(r, path + ".rate", "mean_per_day");
        double cv = require_number(r, path + ".rate", "cv");
        if (!(mean > 0.0)) throw config_error(path + ".rate", "mean must be > 0");
        if (!(cv > 0.0)) throw config_error(path + ".rate", "cv must be > 0");
        c.rate_mean_per_day = mean;
        c.rate_cv = cv;
    }
    if (has_sites) {
        const auto& sites = j.at("sites");
        if (!sites.is_array() || sites.empty())
            throw config_error(path + ".sites", "must be a non-empty array");
        int i = 0;
        for (const auto& sj : sites) {
            std::string spath = path + ".sites[" + std::to_string(i) + "]";
            SitePlan s;
            s.id = c.id + "-s" + std::to_string(i + 1);
            auto day = static_cast<int>(require_int(sj, spath, "activation_day"));
            if (day < 0) throw config_error(spath + ".activation_day", "must be >= 0");
            s.activation_day = day;
            if (sj.contains("alpha") != sj.contains("beta"))
                throw config_error(spath, "alpha and beta must be given together");
            if (sj.contains("alpha")) {
                s.prior.alpha = require_number(sj, spath, "alpha");
                s.prior.beta = require_number(sj, spath, "beta");
                if (!(s.prior.alpha > 0.0) || !(s.prior.beta > 0.0))
                    throw config_error(spath, "alpha and beta must be > 0");
            } else {
                s.prior.alpha = 0.0;  // resolved from the country rate below
            }
            c.sites.push_back(std::move(s));
            ++i;
        }
    }

    if (j.contains("activation")) {
        const auto& a = j.at("activation");
        if (!a.is_object()) throw config_error(path + ".activation", "must be an object");
        bool win = a.contains("window_days");
        bool days = a.contains("explicit_days");
        if (win == days)
            throw config_error(path + ".activation",
                               "exactly one of window_days or explicit_days is required");
        if (win) {
            const auto& wj = a.at("window_days");
            if (!wj.is_array() || wj.size() != 2 || !wj[0].is_number_integer() ||
                !wj[1].is_number_integer())
                throw config_error(path + ".activation.window_days",
                                   "must be an [a, b] integer pair");
            int lo = wj[0].get<int>(), hi = wj[1].get<int>();
            if (lo < 0 || hi < lo)
                throw config_error(path + ".activation.window_days", "need 0 <= a <= b");
            c.window_days = {lo, hi};
        } else {
            for (const auto& dj : a.at("explicit_days")) {
                if (!dj.is_number_integer() || dj.get<int>() < 0)
                    throw config_error(path + ".activation.explicit_days",
                                       "entries must be integers >= 0");
                c.explicit_days.push_back(dj.get<int>());
            }
            if (c.explicit_days.empty())
                throw config_error(path + ".activation.explicit_days", "must be non-empty");
        }
    }

    // per-site entries without an explicit prior need the country rate
    for (const auto& s : c.sites) {
        if (s.prior.alpha == 0.0 && !c.rate_mean_per_day)
            throw config_error(path + ".sites", "sites without alpha/beta need a country rate");
    }
    return c;
}

}  // namespace

StudyConfig parse_study_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw config_error("", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw config_error("", "top level must be an object");
    if (!root.contains("study") || !root.at("study").is_object())
        throw config_error("study", "missing object");
    StudyConfig cfg;
    cfg.target_n = require_int(root.at("study"), "study", "target_n");
    cfg.t_plan_days = static_cast<int>(require_int(root.at("study"), "study", "t_plan_days"));
    if (cfg.target_n < 1) throw config_error("study.target_n", "must be >= 1");
    if (cfg.t_plan_days < 1) throw config_error("study.t_plan_days", "must be >= 1");

    if (!root.contains("countries") || !root.at("countries").is_array() ||
        root.at("countries").empty())
        throw config_error("countries", "must be a non-empty array");
    std::size_t i = 0;
    for (const auto& cj : root.at("countries")) cfg.countries.push_back(parse_country(cj, i++));

    std::vector<std::string> seen;
    for (const auto& c : cfg.countries) {
        for (const auto& other : seen)
            if (other == c.id) throw config_error("countries", "duplicate id '" + c.id + "'");
        seen.push_back(c.id);
    }
    return cfg;
}

StudyConfig load_study_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("", "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_study_config(buf.str());
}

StudyPlan StudyConfig::to_plan() const {
    StudyPlan plan;
    plan.target_n = target_n;
    plan.t_plan_days = t_plan_days;
    for (const auto& c : countries) {
        CountryPlan country;
        country.id = c.id;
        country.cap = c.cap;
        if (!c.sites.empty()) {
            country.sites = c.sites;
            if (c.rate_mean_per_day) {
                RatePrior fill = RatePrior::from_mean_cv(*c.rate_mean_per_day, *c.rate_cv);
                for (auto& s : country.sites)
                    if (s.prior.alpha == 0.0) s.prior = fill;
            }
        } else if (!c.explicit_days.empty()) {
            if (!c.rate_mean_per_day)
                throw config_error("countries." + c.id, "explicit_days needs a country rate");
            RatePrior prior = RatePrior::from_mean_cv(*c.rate_mean_per_day, *c.rate_cv);
            int i = 0;
            for (int day : c.explicit_days) {
                SitePlan s;
                s.id = c.id + "-s" + std::to_string(++i);
                s.activation_day = day;
                s.prior = prior;
                country.sites.push_back(std::move(s));
            }
        } else {
            throw config_error(
                "countries." + c.id,
                "site-level activation detail required (sites[] or activation.explicit_days)");
        }
        plan.countries.push_back(std::move(country));
    }
    validate_plan(plan);
    return plan;
}

void StudyConfig::design_inputs(AllocationBounds& bounds, std::vector<CountryKinetics>& kin,
                                CostModel& costs, Caps& caps) const {
    bounds = {};
    kin.clear();
    costs = {};
    caps.clear();
    for (const auto& c : countries) {
        const std::string path = "countries." + c.id;
        if (!c.bound_low || !c.bound_high) throw config_error(path + ".bounds", "required");
        if (!c.rate_mean_per_day || !c.rate_cv)
            throw config_error(path + ".rate", "mean and cv required for optimization");
        if (!c.window_days)
            throw config_error(path + ".activation.window_days", "required for optimization");
        if (c.window_days->second > t_plan_days)
            throw config_error(path + ".activation.window_days",
                               "window must close by t_plan_days");
        bounds.low.push_back(*c.bound_low);
        bounds.high.push_back(*c.bound_high);
        double m = *c.rate_mean_per_day;
        double sd = *c.rate_cv * m;
        kin.push_back(make_kinetics(m, sd * sd, c.window_days->first, c.window_days->second,
                                    t_plan_days));
        costs.site_cost.push_back(c.cost_site);
        costs.patient_cost.push_back(c.cost_patient);
        costs.country_cost.push_back(c.cost_country);
        caps.push_back(c.cap);
    }
}

std::vector<std::string> StudyConfig::country_ids() const {
    std::vector<std::string> ids;
    ids.reserve(countries.size());
    for (const auto& c : countries) ids.push_back(c.id);
    return ids;
}

}  // namespace enroll
