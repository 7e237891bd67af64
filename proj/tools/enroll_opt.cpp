#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "enroll/appendix.hpp"
#include "enroll/config.hpp"
#include "enroll/errors.hpp"
#include "enroll/forecast.hpp"
#include "enroll/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace enroll;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    fs::path p = fs::path(dir) / name;
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

void write_json(const std::string& dir, const std::string& name, const json& j) {
    auto out = open_out(dir, name);
    out << j.dump(2) << "\n";
}

PosMethod parse_method(const std::string& m) {
    return m == "normal" ? PosMethod::normal : PosMethod::convolution;
}

// mean completion day: sum of P(tau > t) over the day grid
double completion_mean(const StudyPlan& plan, PosMethod method, int t95) {
    double mean = 0.0;
    const int guard = 8 * t95 + 2048;
    for (int t = 0; t <= guard; ++t) {
        double p = pos(plan, t, method);
        mean += 1.0 - p;
        if (p >= 1.0 - 1e-7) break;
    }
    return mean;
}

int cmd_forecast(const std::string& config_path, const std::string& method_name, double q,
                 const std::string& out_dir) {
    StudyConfig cfg = load_study_config(config_path);
    StudyPlan plan = cfg.to_plan();
    PosMethod method = parse_method(method_name);

    ForecastSeries series = forecast_series(plan, q, method);
    auto csv = open_out(out_dir, "forecast.csv");
    csv << "day,mean,median,lo,hi,pos\n";
    for (std::size_t i = 0; i < series.days.size(); ++i) {
        csv << series.days[i] << ',' << fmt(series.mean[i]) << ',' << series.median[i] << ','
            << series.lo[i] << ',' << series.hi[i] << ',' << fmt(series.pos_by_day[i]) << "\n";
    }

    json summary;
    summary["method"] = method == PosMethod::normal ? "normal" : "convolution";
    summary["q_level"] = q;
    summary["t95"] = series.t95;
    summary["completion_time"] = {
        {"mean", completion_mean(plan, method, series.t95)},
        {"lo", completion_time_quantile(plan, 0.05, method)},
        {"hi", completion_time_quantile(plan, 0.95, method)},
    };
    summary["pos_at_tplan"] = pos(plan, plan.t_plan_days, method);
    summary["t_plan_days"] = plan.t_plan_days;
    summary["target_n"] = plan.target_n;
    write_json(out_dir, "forecast_summary.json", summary);
    return 0;
}

int cmd_cap_impact(const std::string& config_path, double q, const std::string& out_dir) {
    StudyConfig cfg = load_study_config(config_path);
    StudyPlan plan = cfg.to_plan();
    bool any = false;
    for (const auto& c : plan.countries) any = any || (c.cap && *c.cap >= 1);
    if (!any) throw config_error("countries", "no capped countries");

    CapImpactReport rep = cap_impact_report(plan, q);
    auto csv = open_out(out_dir, "cap_impact.csv");
    csv << "country,cap,p_cap_by_tplan,time_to_cap_q,flagged\n";
    for (const auto& e : rep.entries) {
        csv << e.country_id << ',' << e.cap << ',' << fmt(e.p_cap_by_tplan) << ','
            << e.time_to_cap_q << ',' << (e.flagged ? 1 : 0) << "\n";
    }
    json j;
    j["q"] = rep.q;
    j["global_pos"] = rep.global_pos;
    j["global_time_q"] = rep.global_time_q;
    j["countries"] = json::array();
    for (const auto& e : rep.entries) {
        j["countries"].push_back({{"id", e.country_id},
                                  {"cap", e.cap},
                                  {"p_cap_by_tplan", e.p_cap_by_tplan},
                                  {"time_to_cap_q", e.time_to_cap_q},
                                  {"flagged", e.flagged}});
    }
    write_json(out_dir, "cap_impact.json", j);
    return 0;
}

int cmd_optimize(const std::string& config_path, double prob, const std::string& method,
                 std::uint64_t seed, const std::string& out_dir) {
    StudyConfig cfg = load_study_config(config_path);
    AllocationBounds bounds;
    std::vector<CountryKinetics> kin;
    CostModel costs;
    Caps caps;
    cfg.design_inputs(bounds, kin, costs, caps);
    const auto ids = cfg.country_ids();

    bool any_cap = false;
    std::int64_t cap_sum = 0;
    for (const auto& c : caps) {
        any_cap = any_cap || c.has_value();
        if (c) cap_sum += *c;
    }
    bool all_capped = any_cap;
    for (const auto& c : caps) all_capped = all_capped && c.has_value();
    if (all_capped && cap_sum < cfg.target_n)
        throw infeasible_error("caps sum to " + std::to_string(cap_sum) +
                               ", below the target " + std::to_string(cfg.target_n));

    const double dim = allocation_dim(bounds);
    std::string chosen = method;
    if (chosen == "auto") chosen = dim <= 1e8 ? "direct" : (any_cap ? "de" : "lp");

    AllocationResult res;
    if (chosen == "lp") {
        res = optimize_stepwise_lp(bounds, kin, costs, cfg.target_n, prob);
    } else if (chosen == "direct") {
        res = optimize_direct(bounds, kin, costs, cfg.target_n, prob, caps);
    } else if (chosen == "de") {
        DeConfig de;
        de.seed = seed;
        res = optimize_de(bounds, kin, costs, caps, cfg.target_n, prob, de);
    } else {
        throw CLI::ValidationError("--method must be auto|lp|direct|de");
    }

    // re-evaluate on the realized plan (exact activation grids)
    StudyPlan plan = realize_plan(res.alloc, kin, caps, cfg.target_n, cfg.t_plan_days, ids);
    double re_conv = pos(plan, cfg.t_plan_days, PosMethod::convolution);
    double re_norm = pos(plan, cfg.t_plan_days, PosMethod::normal);
    std::vector<CountryKinetics> exact(kin);
    for (std::size_t s = 0; s < kin.size(); ++s)
        exact[s] = grid_kinetics(kin[s], res.alloc[static_cast<Eigen::Index>(s)],
                                 cfg.t_plan_days);
    double re_pg = design_pos(res.alloc, exact, {}, cfg.target_n,
                              any_cap ? PosEval::capped_normal : PosEval::pg);

    double cost_sites = 0.0, cost_patients = 0.0, cost_countries = 0.0;
    json alloc = json::array();
    int total_sites = 0;
    for (std::size_t s = 0; s < kin.size(); ++s) {
        int ns = res.alloc[static_cast<Eigen::Index>(s)];
        total_sites += ns;
        cost_sites += costs.site_cost[s] * ns;
        cost_patients += costs.patient_cost[s] * kin[s].rate_mean * kin[s].mean_time * ns;
        if (ns > 0) cost_countries += costs.country_cost[s];
        json days = json::array();
        for (int d : activation_grid(static_cast<int>(kin[s].window_a),
                                     static_cast<int>(kin[s].window_b), ns))
            days.push_back(d);
        alloc.push_back({{"id", ids[s]}, {"sites", ns}, {"activation_days", days}});
    }

    json j;
    j["method"] = res.method;
    j["iterations"] = res.iterations;
    j["grid_dim"] = dim;
    j["requested_pos"] = prob;
    j["pos_achieved"] = res.pos_achieved;
    j["reevaluation"] = {{"convolution", re_conv}, {"normal", re_norm}, {"aggregated", re_pg}};
    j["allocation"] = alloc;
    j["total_sites"] = total_sites;
    j["cost"] = {{"total", res.total_cost},
                 {"sites", cost_sites},
                 {"patients", cost_patients},
                 {"countries", cost_countries}};
    write_json(out_dir, "optimize.json", j);
    return 0;
}

int cmd_simulate(const std::string& config_path, std::int64_t reps, std::uint64_t seed,
                 int horizon, const std::string& out_dir) {
    StudyConfig cfg = load_study_config(config_path);
    StudyPlan plan = cfg.to_plan();
    SimConfig sim_cfg;
    sim_cfg.replications = reps;
    sim_cfg.seed = seed;
    sim_cfg.horizon = horizon;
    SimSummary sum = simulate(plan, sim_cfg);

    auto csv = open_out(out_dir, "simulate.csv");
    csv << "day,mc_mean,mc_sd,mc_q05,mc_q50,mc_q95,analytic_mean,z_mean\n";
    const double root_reps = std::sqrt(static_cast<double>(sum.replications));
    for (int d = 1; d <= sum.horizon; ++d) {
        double analytic = global_moments(plan, d).mean;
        double mc = sum.day_mean[static_cast<std::size_t>(d - 1)];
        double se = sum.day_sd[static_cast<std::size_t>(d - 1)] / root_reps;
        double z = se > 0.0 ? (mc - analytic) / se : (mc == analytic ? 0.0 : 99.0);
        csv << d << ',' << fmt(mc) << ',' << fmt(sum.day_sd[static_cast<std::size_t>(d - 1)])
            << ',' << sum.day_q05[static_cast<std::size_t>(d - 1)] << ','
            << sum.day_q50[static_cast<std::size_t>(d - 1)] << ','
            << sum.day_q95[static_cast<std::size_t>(d - 1)] << ',' << fmt(analytic) << ','
            << fmt(z) << "\n";
    }

    json j;
    j["replications"] = sum.replications;
    j["seed"] = seed;
    j["horizon"] = sum.horizon;
    double pos_analytic = pos(plan, plan.t_plan_days, PosMethod::convolution);
    double z_pos = sum.pos_se > 0.0 ? (sum.pos_at_tplan - pos_analytic) / sum.pos_se
                                    : (sum.pos_at_tplan == pos_analytic ? 0.0 : 99.0);
    j["pos_at_tplan"] = {{"mc", sum.pos_at_tplan},
                         {"se", sum.pos_se},
                         {"analytic", pos_analytic},
                         {"z", z_pos}};
    j["completion_day"] = {{"q50", sum.completion_day_quantile(0.5)},
                           {"q90", sum.completion_day_quantile(0.9)}};
    j["cap_hits"] = json::array();
    for (const auto& st : sum.cap_stats) {
        const CountryPlan* country = nullptr;
        for (const auto& c : plan.countries)
            if (c.id == st.country_id) country = &c;
        double analytic_hit = country ? time_to_cap_cdf(*country, plan.t_plan_days) : 0.0;
        double emp = st.hit_prob_by(plan.t_plan_days);
        double se = std::sqrt(std::max(0.0, emp * (1.0 - emp) /
                                                static_cast<double>(st.replications)));
        j["cap_hits"].push_back({{"id", st.country_id},
                                 {"cap", st.cap},
                                 {"mc_hit_prob_by_tplan", emp},
                                 {"analytic_hit_prob_by_tplan", analytic_hit},
                                 {"z", se > 0.0 ? (emp - analytic_hit) / se
                                                : (emp == analytic_hit ? 0.0 : 99.0)},
                                 {"mc_hit_day_q90", st.hit_day_quantile(0.9)}});
    }
    write_json(out_dir, "simulate_summary.json", j);
    return 0;
}

int cmd_appendix_check(const std::string& out_dir) {
    auto rows = aggregation_error_table();
    auto csv = open_out(out_dir, "appendix_check.csv");
    csv << "sites,dif,expected,pass\n";
    bool all_pass = true;
    bool decreasing = true;
    double prev = 1.0;
    for (const auto& r : rows) {
        csv << r.sites << ',' << fmt(r.dif) << ',' << fmt(r.expected) << ','
            << (r.pass ? 1 : 0) << "\n";
        all_pass = all_pass && r.pass;
        decreasing = decreasing && r.dif < prev;
        prev = r.dif;
    }
    json j;
    j["rows"] = json::array();
    for (const auto& r : rows)
        j["rows"].push_back(
            {{"sites", r.sites}, {"dif", r.dif}, {"expected", r.expected}, {"pass", r.pass}});
    j["all_pass"] = all_pass;
    j["strictly_decreasing"] = decreasing;
    write_json(out_dir, "appendix_check.json", j);
    std::cout << (all_pass && decreasing ? "PASS" : "FAIL") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "enroll-opt: Poisson-gamma enrollment forecasting and cost-optimal site allocation.\n"
        "Monthly rates convert at 30 days/month; ENROLL_OPT_THREADS bounds parallelism "
        "(0 = auto)."};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", method = "convolution", opt_method = "auto";
    double q = 0.9, prob = 0.9;
    std::int64_t reps = 100000;
    std::uint64_t seed = 1;
    int horizon = 0;

    auto* forecast = app.add_subcommand("forecast", "Per-day forecast and completion summary");
    forecast->add_option("config", config_path, "study config JSON")->required();
    forecast->add_option("--method", method, "convolution|normal")
        ->check(CLI::IsMember({"convolution", "normal"}));
    forecast->add_option("--q", q, "predictive interval level (default 0.9)");
    forecast->add_option("--out", out_dir, "output directory");

    auto* impact = app.add_subcommand("cap-impact", "Cap-binding diagnostics per country");
    impact->add_option("config", config_path, "study config JSON")->required();
    impact->add_option("--q", q, "quantile level used in the comparison (default 0.9)");
    impact->add_option("--out", out_dir, "output directory");

    auto* optimize = app.add_subcommand("optimize", "Cost-minimal site allocation");
    optimize->add_option("config", config_path, "study config JSON")->required();
    optimize->add_option("--pos", prob, "required probability of success")->required();
    optimize->add_option("--method", opt_method, "auto|lp|direct|de")
        ->check(CLI::IsMember({"auto", "lp", "direct", "de"}));
    optimize->add_option("--seed", seed, "random seed (differential evolution)");
    optimize->add_option("--out", out_dir, "output directory");

    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo check of the analytics");
    simulate_cmd->add_option("config", config_path, "study config JSON")->required();
    simulate_cmd->add_option("--reps", reps, "replications (default 100000)");
    simulate_cmd->add_option("--seed", seed, "random seed");
    simulate_cmd->add_option("--horizon", horizon, "simulation horizon in days (default t_plan)");
    simulate_cmd->add_option("--out", out_dir, "output directory");

    auto* appendix = app.add_subcommand("appendix-check",
                                        "Country-aggregation error table vs reference values");
    appendix->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (forecast->parsed()) return cmd_forecast(config_path, method, q, out_dir);
        if (impact->parsed()) return cmd_cap_impact(config_path, q, out_dir);
        if (optimize->parsed()) return cmd_optimize(config_path, prob, opt_method, seed, out_dir);
        if (simulate_cmd->parsed()) return cmd_simulate(config_path, reps, seed, horizon, out_dir);
        if (appendix->parsed()) return cmd_appendix_check(out_dir);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const unreachable_target_error& e) {
        std::cerr << "unreachable target: " << e.what() << "\n";
        return 3;
    } catch (const infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    } catch (const no_feasible_member_error& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    } catch (const dimension_ceiling_error& e) {
        std::cerr << "dimension ceiling: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
