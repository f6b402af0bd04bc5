#include "abplan/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "abplan/allocation.hpp"
#include "abplan/decisions.hpp"
#include "abplan/errors.hpp"
#include "abplan/math/normal.hpp"
#include "abplan/exclusive.hpp"
#include "abplan/portfolio.hpp"
#include "abplan/priors.hpp"
#include "abplan/production.hpp"
#include "abplan/version.hpp"

namespace abplan::cli {

namespace {

using nlohmann::json;

// ---- formatting -------------------------------------------------------------

std::string fmt15(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- strict spec access -----------------------------------------------------

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) {
            throw ValidationError("unknown key '" + key + "' in " + where);
        }
    }
}

const json& require(const json& obj, const std::string& where, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ValidationError("missing required key '" + std::string(key) + "' in " + where);
    }
    return obj.at(key);
}

double get_num(const json& obj, const std::string& where, const char* key) {
    const json& v = require(obj, where, key);
    if (!v.is_number()) {
        throw ValidationError("key '" + std::string(key) + "' in " + where +
                              " must be a number");
    }
    return v.get<double>();
}

double get_num_or(const json& obj, const std::string& where, const char* key,
                  double fallback) {
    return obj.contains(key) ? get_num(obj, where, key) : fallback;
}

std::int64_t get_int(const json& obj, const std::string& where, const char* key) {
    const json& v = require(obj, where, key);
    if (!v.is_number_integer()) {
        throw ValidationError("key '" + std::string(key) + "' in " + where +
                              " must be an integer");
    }
    return v.get<std::int64_t>();
}

std::int64_t get_int_or(const json& obj, const std::string& where, const char* key,
                        std::int64_t fallback) {
    return obj.contains(key) ? get_int(obj, where, key) : fallback;
}

std::string get_str(const json& obj, const std::string& where, const char* key) {
    const json& v = require(obj, where, key);
    if (!v.is_string()) {
        throw ValidationError("key '" + std::string(key) + "' in " + where +
                              " must be a string");
    }
    return v.get<std::string>();
}

std::vector<std::int64_t> get_int_array(const json& obj, const std::string& where,
                                        const char* key) {
    const json& v = require(obj, where, key);
    if (!v.is_array() || v.empty()) {
        throw ValidationError("key '" + std::string(key) + "' in " + where +
                              " must be a non-empty array");
    }
    std::vector<std::int64_t> out;
    for (const json& e : v) {
        if (!e.is_number_integer()) {
            throw ValidationError("array '" + std::string(key) + "' in " + where +
                                  " must contain integers");
        }
        out.push_back(e.get<std::int64_t>());
    }
    return out;
}

std::vector<double> get_num_array(const json& obj, const std::string& where,
                                  const char* key) {
    const json& v = require(obj, where, key);
    if (!v.is_array() || v.empty()) {
        throw ValidationError("key '" + std::string(key) + "' in " + where +
                              " must be a non-empty array");
    }
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) {
            throw ValidationError("array '" + std::string(key) + "' in " + where +
                                  " must contain numbers");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

// ---- domain parsers ---------------------------------------------------------

Prior parse_prior(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    const std::string type = get_str(obj, where, "type");
    if (type == "gaussian") {
        check_keys(obj, where, {"type", "mu", "tau"});
        return Prior(GaussianPrior(get_num(obj, where, "mu"), get_num(obj, where, "tau")));
    }
    if (type == "discrete") {
        check_keys(obj, where, {"type", "atoms"});
        const json& atoms = require(obj, where, "atoms");
        if (!atoms.is_array() || atoms.empty()) {
            throw ValidationError(where + ".atoms must be a non-empty array");
        }
        std::vector<PriorAtom> parsed;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string aw = where + ".atoms[" + std::to_string(i) + "]";
            check_keys(atoms[i], aw, {"value", "weight"});
            parsed.push_back({get_num(atoms[i], aw, "value"), get_num(atoms[i], aw, "weight")});
        }
        return Prior(DiscretePrior(std::move(parsed)));
    }
    throw ValidationError(where + ".type must be 'gaussian' or 'discrete'");
}

Utility parse_utility(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    const std::string type = get_str(obj, where, "type");
    if (type == "linear") {
        check_keys(obj, where, {"type"});
        return Utility::linear();
    }
    if (type == "loss_averse") {
        check_keys(obj, where, {"type", "b"});
        return Utility::loss_averse(get_num(obj, where, "b"));
    }
    throw ValidationError(where + ".type must be 'linear' or 'loss_averse'");
}

Utility parse_utility_or_linear(const json& spec, const std::string& where) {
    return spec.contains("utility") ? parse_utility(spec.at("utility"), where + ".utility")
                                    : Utility::linear();
}

CostModel parse_cost(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    check_keys(obj, where, {"implementation", "testing"});
    CostModel cost;
    cost.implementation_cost = get_num_or(obj, where, "implementation", 0.0);
    if (obj.contains("testing")) {
        const json& t = obj.at("testing");
        const std::string tw = where + ".testing";
        const std::string type = get_str(t, tw, "type");
        if (type == "zero") {
            check_keys(t, tw, {"type"});
            cost.testing = TestingCost::zero();
        } else if (type == "fixed_per_test") {
            check_keys(t, tw, {"type", "c"});
            cost.testing = TestingCost::fixed_per_test(get_num(t, tw, "c"));
        } else {
            throw ValidationError(tw + ".type must be 'zero' or 'fixed_per_test'");
        }
    }
    return cost;
}

CostModel parse_cost_or_zero(const json& spec, const std::string& where) {
    return spec.contains("cost") ? parse_cost(spec.at("cost"), where + ".cost")
                                 : CostModel{};
}

ProductionHandle parse_handle(const json& spec, const std::string& where) {
    return ProductionHandle{parse_prior(require(spec, where, "prior"), where + ".prior"),
                            NoiseModel(get_num(spec, where, "sigma")),
                            parse_utility_or_linear(spec, where),
                            parse_cost_or_zero(spec, where)};
}

GaussianPrior parse_gaussian_prior(const json& spec, const std::string& where) {
    const Prior prior = parse_prior(require(spec, where, "prior"), where + ".prior");
    if (!prior.is_gaussian()) {
        throw ValidationError(where + ".prior must be gaussian for this subcommand");
    }
    return prior.gaussian();
}

// ---- output plumbing --------------------------------------------------------

struct CsvTable {
    std::string name;    // file name, e.g. "thresholds.csv"
    std::string header;  // comma-separated column names
    std::vector<std::string> rows;
};

struct Artifacts {
    json result;  // subcommand result (serialized under "result")
    std::vector<CsvTable> tables;
};

struct Context {
    std::string subcommand;
    std::string spec_hash;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    Format format = Format::both;
};

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("cannot open output file " + tmp.string());
        out << content;
        if (!out) throw NumericalError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void emit(const Context& ctx, const Artifacts& artifacts) {
    std::filesystem::create_directories(ctx.out_dir);
    if (ctx.format != Format::csv) {
        json doc;
        doc["meta"] = {{"tool", "abplan"},
                       {"version", kVersion},
                       {"subcommand", ctx.subcommand},
                       {"spec_fnv1a", ctx.spec_hash},
                       {"seed", ctx.seed}};
        doc["result"] = artifacts.result;
        std::string name = ctx.subcommand;
        for (char& c : name) {
            if (c == '-') c = '_';
        }
        write_atomic(ctx.out_dir / (name + ".json"), doc.dump(2) + "\n");
    }
    if (ctx.format != Format::json) {
        for (const CsvTable& table : artifacts.tables) {
            std::ostringstream out;
            out << "# abplan " << kVersion << " subcommand=" << ctx.subcommand
                << " spec_fnv1a=" << ctx.spec_hash << " seed=" << ctx.seed << "\n";
            out << table.header << "\n";
            for (const std::string& row : table.rows) out << row << "\n";
            write_atomic(ctx.out_dir / table.name, out.str());
        }
    }
}

// ---- subcommand handlers ----------------------------------------------------

Artifacts run_fit_prior(const json& spec, const Context&) {
    check_keys(spec, "spec", {"sigma", "records", "records_csv", "seed"});
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    std::vector<ExperimentRecord> records;
    if (spec.contains("records") == spec.contains("records_csv")) {
        throw ValidationError("spec needs exactly one of 'records' and 'records_csv'");
    }
    if (spec.contains("records")) {
        records = records_from_json(spec.at("records").dump());
    } else {
        records = records_from_csv_file(get_str(spec, "spec", "records_csv"));
    }
    const PriorFit fit = fit_gaussian_mle(records, noise);

    Artifacts a;
    a.result = {{"mu", fit.mu},
                {"tau2", fit.tau2},
                {"tau", std::sqrt(fit.tau2)},
                {"records", records.size()},
                {"tau_degenerate", fit.tau_degenerate},
                {"bracket_widened", fit.bracket_widened}};
    a.tables.push_back({"fit_prior.csv", "mu,tau2,tau_degenerate,bracket_widened",
                        {fmt15(fit.mu) + "," + fmt15(fit.tau2) + "," +
                         (fit.tau_degenerate ? "1" : "0") + "," +
                         (fit.bracket_widened ? "1" : "0")}});
    return a;
}

Artifacts run_production_curve(const json& spec, const Context&) {
    check_keys(spec, "spec",
               {"prior", "sigma", "utility", "cost", "n_grid", "pvalue_z", "seed"});
    const ProductionHandle handle = parse_handle(spec, "spec");
    const double z = get_num_or(spec, "spec", "pvalue_z", 1.96);
    const std::vector<std::int64_t> grid = get_int_array(spec, "spec", "n_grid");

    CsvTable table{"production_curve.csv", "n,f_optimal,f_pvalue,f_minimax_na", {}};
    json rows = json::array();
    for (std::int64_t n : grid) {
        if (n < 0) throw ValidationError("n_grid entries must be >= 0");
        const double f_opt = handle.value(static_cast<double>(n));
        const double f_pv =
            n >= 1 ? production_pvalue_rule(handle.prior, handle.noise, n, z) : 0.0;
        const double f_mm =
            n >= 1 ? production_pvalue_rule(handle.prior, handle.noise, n, 0.0) : 0.0;
        table.rows.push_back(std::to_string(n) + "," + fmt15(f_opt) + "," + fmt15(f_pv) +
                             "," + fmt15(f_mm));
        rows.push_back({{"n", n}, {"f_optimal", f_opt}, {"f_pvalue", f_pv},
                        {"f_minimax_na", f_mm}});
    }
    Artifacts a;
    a.result = {{"pvalue_z", z}, {"rows", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

json rle_encode(const std::vector<std::int64_t>& values) {
    json out = json::array();
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        out.push_back(json::array({j - i, values[i]}));
        i = j;
    }
    return out;
}

Artifacts run_allocate(const json& spec, const Context&) {
    check_keys(spec, "spec",
               {"prior", "sigma", "utility", "cost", "I", "N", "c0", "k", "frontier",
                "seed"});
    AllocationProblem problem{get_int(spec, "spec", "I"), get_int(spec, "spec", "N"),
                              get_int_or(spec, "spec", "c0", 1),
                              parse_handle(spec, "spec")};
    const std::int64_t k = get_int_or(spec, "spec", "k", 1);
    const DPSolution sol =
        k == 1 ? solve_dp(problem) : solve_dp_multiplicity(problem, k);

    Artifacts a;
    a.result = {{"value", sol.value},
                {"allocation_rle", rle_encode(sol.allocation)},
                {"tests_run", sol.tests_run},
                {"k", k}};
    CsvTable alloc{"allocate.csv", "count,units", {}};
    for (const json& pair : a.result["allocation_rle"]) {
        alloc.rows.push_back(std::to_string(pair[0].get<std::int64_t>()) + "," +
                             std::to_string(pair[1].get<std::int64_t>()));
    }
    a.tables.push_back(std::move(alloc));
    if (spec.contains("frontier") && spec.at("frontier").is_boolean() &&
        spec.at("frontier").get<bool>()) {
        const std::vector<double> frontier = dp_frontier(problem);
        CsvTable table{"allocate_frontier.csv", "n,F", {}};
        for (std::size_t m = 0; m < frontier.size(); ++m) {
            table.rows.push_back(
                std::to_string(static_cast<std::int64_t>(m) * problem.cohort_block) + "," +
                fmt15(frontier[m]));
        }
        a.tables.push_back(std::move(table));
    }
    return a;
}

std::string saturation_name(Saturation s) {
    switch (s) {
        case Saturation::never_ship:
            return "never_ship";
        case Saturation::always_ship:
            return "always_ship";
        case Saturation::none:
            break;
    }
    return "";
}

Artifacts run_thresholds(const json& spec, const Context&) {
    check_keys(spec, "spec", {"prior", "sigma", "n_grid", "utility", "cost", "seed"});
    const ProductionHandle handle = parse_handle(spec, "spec");
    const std::vector<std::int64_t> grid = get_int_array(spec, "spec", "n_grid");

    CsvTable table{"thresholds.csv", "n,cutoff,t_stat,alpha,pass_prob,saturated", {}};
    json rows = json::array();
    for (std::int64_t n : grid) {
        if (n < 1) throw ValidationError("n_grid entries must be >= 1");
        const DecisionThreshold thr =
            optimal_threshold_generic(handle.prior, handle.noise, n, handle.utility,
                                      handle.cost.implementation_cost);
        double pass;
        if (thr.saturated()) {
            pass = thr.saturation == Saturation::always_ship ? 1.0 : 0.0;
        } else if (handle.prior.is_gaussian() && handle.utility.kind() == Utility::Kind::linear &&
                   handle.cost.implementation_cost == 0.0) {
            pass = pass_probability(handle.prior.gaussian(), handle.noise, n);
        } else if (handle.prior.is_gaussian()) {
            const GaussianPrior& g = handle.prior.gaussian();
            const double sm = std::sqrt(g.tau * g.tau +
                                        handle.noise.sigma * handle.noise.sigma /
                                            static_cast<double>(n));
            pass = math::norm_sf((thr.cutoff_delta_hat - g.mu) / sm);
        } else {
            const double obs = handle.noise.observation_sd(static_cast<double>(n));
            pass = 0.0;
            for (const PriorAtom& atom : handle.prior.discrete().atoms()) {
                pass += atom.weight *
                        math::norm_sf((thr.cutoff_delta_hat - atom.value) / obs);
            }
        }
        const std::string cut = thr.saturated() ? "" : fmt15(thr.cutoff_delta_hat);
        const std::string tst = thr.saturated() ? "" : fmt15(thr.t_statistic);
        table.rows.push_back(std::to_string(n) + "," + cut + "," + tst + "," +
                             fmt15(thr.one_sided_alpha) + "," + fmt15(pass) + "," +
                             saturation_name(thr.saturation));
        json row = {{"n", n},
                    {"alpha", thr.one_sided_alpha},
                    {"pass_prob", pass},
                    {"saturated", saturation_name(thr.saturation)}};
        if (!thr.saturated()) {
            row["cutoff"] = thr.cutoff_delta_hat;
            row["t_stat"] = thr.t_statistic;
        }
        rows.push_back(row);
    }
    Artifacts a;
    a.result = {{"rows", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

Artifacts run_cost_analysis(const json& spec, const Context&) {
    check_keys(spec, "spec", {"prior", "sigma", "n", "alpha_grid", "seed"});
    const GaussianPrior prior = parse_gaussian_prior(spec, "spec");
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    const std::int64_t n = get_int(spec, "spec", "n");
    std::vector<double> alphas;
    if (spec.contains("alpha_grid")) {
        alphas = get_num_array(spec, "spec", "alpha_grid");
    } else {
        for (int i = 1; i <= 49; ++i) alphas.push_back(i / 100.0);
    }

    CsvTable table{"cost_analysis.csv", "alpha,implied_cost,implied_b", {}};
    json rows = json::array();
    const double alpha0 =
        optimal_threshold_generic(Prior(prior), noise, n, Utility::linear())
            .one_sided_alpha;
    for (double alpha : alphas) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw ValidationError("alpha_grid entries must lie in (0,1)");
        }
        const double cost = implied_cost_for_alpha(prior, noise, n, alpha);
        json row = {{"alpha", alpha}, {"implied_cost", cost}};
        std::string b_field;
        if (alpha <= alpha0) {
            const double b = implied_b_for_alpha(prior, noise, n, alpha);
            b_field = fmt15(b);
            row["implied_b"] = b;
        }
        rows.push_back(row);
        table.rows.push_back(fmt15(alpha) + "," + fmt15(cost) + "," + b_field);
    }
    Artifacts a;
    a.result = {{"alpha_b0", alpha0}, {"rows", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

std::vector<ProgramSpec> parse_programs(const json& spec, const std::string& where,
                                        bool need_ideas, bool need_pool) {
    const json& arr = require(spec, where, "programs");
    if (!arr.is_array() || arr.empty()) {
        throw ValidationError(where + ".programs must be a non-empty array");
    }
    std::vector<ProgramSpec> programs;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string pw = where + ".programs[" + std::to_string(i) + "]";
        check_keys(arr[i], pw, {"name", "prior", "sigma", "ideas", "pool", "weight"});
        ProgramSpec p{get_str(arr[i], pw, "name"),
                      parse_prior(require(arr[i], pw, "prior"), pw + ".prior"),
                      get_num(arr[i], pw, "sigma"),
                      need_ideas ? get_int(arr[i], pw, "ideas")
                                 : get_int_or(arr[i], pw, "ideas", 0),
                      need_pool ? get_int(arr[i], pw, "pool")
                                : get_int_or(arr[i], pw, "pool", 0),
                      get_num_or(arr[i], pw, "weight", 1.0)};
        p.validate();
        programs.push_back(std::move(p));
    }
    return programs;
}

Artifacts run_multi_program(const json& spec, const Context&) {
    check_keys(spec, "spec", {"programs", "N", "block", "seed"});
    const std::vector<ProgramSpec> programs = parse_programs(spec, "spec", true, false);
    const std::int64_t total = get_int(spec, "spec", "N");
    const std::int64_t block = get_int_or(spec, "spec", "block", 1);
    const SharedAllocationResult r = solve_shared_allocation(programs, total, block);

    Artifacts a;
    json rows = json::array();
    CsvTable table{"multi_program.csv", "program,pool_share", {}};
    for (std::size_t p = 0; p < programs.size(); ++p) {
        rows.push_back({{"name", programs[p].name}, {"pool_share", r.pool_share[p]}});
        table.rows.push_back(programs[p].name + "," + std::to_string(r.pool_share[p]));
    }
    a.result = {{"value", r.value}, {"programs", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

Artifacts run_share_ideas(const json& spec, const Context&) {
    check_keys(spec, "spec", {"programs", "I", "seed"});
    const std::vector<ProgramSpec> programs = parse_programs(spec, "spec", false, true);
    const std::int64_t total = get_int(spec, "spec", "I");
    const SharedIdeasResult r = solve_shared_ideas(programs, total);

    Artifacts a;
    json rows = json::array();
    CsvTable table{"share_ideas.csv", "program,ideas_share", {}};
    for (std::size_t p = 0; p < programs.size(); ++p) {
        rows.push_back({{"name", programs[p].name}, {"ideas_share", r.ideas_share[p]}});
        table.rows.push_back(programs[p].name + "," + std::to_string(r.ideas_share[p]));
    }
    a.result = {{"value", r.value}, {"programs", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

Artifacts run_sequential(const json& spec, const Context&) {
    check_keys(spec, "spec", {"prior", "sigma", "N", "I", "T", "weights", "seed"});
    ProgramSpec program{"program",
                        parse_prior(require(spec, "spec", "prior"), "spec.prior"),
                        get_num(spec, "spec", "sigma"),
                        0,
                        0,
                        1.0};
    const std::int64_t pool = get_int(spec, "spec", "N");
    const std::int64_t ideas = get_int(spec, "spec", "I");
    const std::int64_t periods = get_int(spec, "spec", "T");
    std::vector<double> weights;
    if (spec.contains("weights")) {
        weights = get_num_array(spec, "spec", "weights");
    } else {
        weights.assign(static_cast<std::size_t>(std::max<std::int64_t>(periods, 0)), 1.0);
    }
    const Schedule schedule = solve_sequential(program, pool, ideas, periods, weights);

    Artifacts a;
    json rows = json::array();
    CsvTable table{"sequential.csv", "period,weight,ideas,value", {}};
    for (std::size_t t = 0; t < schedule.ideas_per_period.size(); ++t) {
        rows.push_back({{"period", t + 1},
                        {"weight", schedule.weights[t]},
                        {"ideas", schedule.ideas_per_period[t]},
                        {"value", schedule.period_values[t]}});
        table.rows.push_back(std::to_string(t + 1) + "," + fmt15(schedule.weights[t]) +
                             "," + std::to_string(schedule.ideas_per_period[t]) + "," +
                             fmt15(schedule.period_values[t]));
    }
    a.result = {{"value", schedule.value}, {"schedule", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

std::string exclusive_row(const ExclusiveResult& r) {
    return std::to_string(r.tested) + "," + fmt15(r.value) + "," + fmt15(r.std_error) +
           "," + (r.method == ExclusiveMethod::monte_carlo ? "monte_carlo" : "approx") +
           "," + (r.validity_ok ? "1" : "0");
}

Artifacts run_exclusive(const json& spec, const Context& ctx) {
    check_keys(spec, "spec",
               {"prior", "sigma", "N", "I", "method", "samples", "variant", "seed"});
    const GaussianPrior prior = parse_gaussian_prior(spec, "spec");
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    const std::int64_t pool = get_int(spec, "spec", "N");
    const std::int64_t ideas = get_int(spec, "spec", "I");
    const std::string method_name = get_str(spec, "spec", "method");
    ExclusiveMethod method;
    if (method_name == "monte_carlo") {
        method = ExclusiveMethod::monte_carlo;
    } else if (method_name == "approx") {
        method = ExclusiveMethod::approx;
    } else {
        throw ValidationError("spec.method must be 'monte_carlo' or 'approx'");
    }
    const std::int64_t samples = get_int_or(spec, "spec", "samples", 100000);
    const I0Scan scan = optimize_I0(prior, noise, pool, ideas, method, samples, ctx.seed);

    Artifacts a;
    json rows = json::array();
    CsvTable table{"exclusive.csv", "I0,value,stderr,method,validity_flag", {}};
    for (const ExclusiveResult& r : scan.curve) {
        rows.push_back({{"I0", r.tested},
                        {"value", r.value},
                        {"stderr", r.std_error},
                        {"method", method_name},
                        {"validity_flag", r.validity_ok}});
        table.rows.push_back(exclusive_row(r));
    }
    a.result = {{"best_I0", scan.best}, {"curve", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

Artifacts run_minimax(const json& spec, const Context&) {
    check_keys(spec, "spec", {"sigma", "allocations", "seed"});
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    const std::vector<std::int64_t> allocations =
        get_int_array(spec, "spec", "allocations");
    const double risk = minimax_risk(allocations, noise);
    const MinimaxConstant& c = minimax_constant();

    Artifacts a;
    a.result = {{"constant_C", c.c}, {"nu_star", c.nu_star}, {"risk", risk}};
    a.tables.push_back({"minimax.csv", "constant_C,nu_star,risk",
                        {fmt15(c.c) + "," + fmt15(c.nu_star) + "," + fmt15(risk)}});
    return a;
}

// ---- figure families --------------------------------------------------------

std::vector<std::int64_t> default_log_grid(std::int64_t lo, std::int64_t hi, int points) {
    std::set<std::int64_t> grid;
    for (int g = 0; g < points; ++g) {
        const double x = static_cast<double>(lo) *
                         std::pow(static_cast<double>(hi) / static_cast<double>(lo),
                                  static_cast<double>(g) / (points - 1));
        grid.insert(std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(x)), lo, hi));
    }
    return {grid.begin(), grid.end()};
}

Artifacts figures_value_of_testing(const json& spec, const Context&) {
    check_keys(spec, "spec", {"prior", "sigma", "N", "I_grid", "test_costs", "seed"});
    const Prior prior = parse_prior(require(spec, "spec", "prior"), "spec.prior");
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    const std::int64_t pool = get_int(spec, "spec", "N");
    if (pool < 1) throw ValidationError("spec.N must be >= 1");
    std::vector<std::int64_t> i_grid = spec.contains("I_grid")
                                           ? get_int_array(spec, "spec", "I_grid")
                                           : default_log_grid(1, pool, 60);
    std::vector<double> costs{0.0};
    if (spec.contains("test_costs")) costs = get_num_array(spec, "spec", "test_costs");

    CsvTable table{"figures_value_of_testing.csv", "I,test_cost,value", {}};
    json rows = json::array();
    for (double c : costs) {
        ProductionHandle handle{prior, noise, Utility::linear(),
                                CostModel{0.0, TestingCost::fixed_per_test(c)}};
        for (std::int64_t i : i_grid) {
            if (i < 1) throw ValidationError("I_grid entries must be >= 1");
            const double value =
                static_cast<double>(i) * handle.value(static_cast<double>(pool / i));
            table.rows.push_back(std::to_string(i) + "," + fmt15(c) + "," + fmt15(value));
            rows.push_back({{"I", i}, {"test_cost", c}, {"value", value}});
        }
    }
    Artifacts a;
    a.result = {{"rows", rows}};
    a.tables.push_back(std::move(table));
    return a;
}

Artifacts figures_test_passing(const json& spec, const Context& ctx) {
    check_keys(spec, "spec", {"prior", "sigma", "n_grid", "seed"});
    json forwarded = spec;
    Artifacts a = run_thresholds(forwarded, ctx);
    a.tables[0].name = "figures_test_passing.csv";
    return a;
}

Artifacts figures_p005_comparison(const json& spec, const Context&) {
    check_keys(spec, "spec",
               {"prior", "sigma", "n_grid", "I_grid", "N_grid", "pvalue_z", "seed"});
    const GaussianPrior gprior = parse_gaussian_prior(spec, "spec");
    const Prior prior(gprior);
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    const double z = get_num_or(spec, "spec", "pvalue_z", 1.96);
    const ProductionHandle handle{prior, noise, Utility::linear(), CostModel{}};

    std::vector<std::int64_t> n_grid = spec.contains("n_grid")
                                           ? get_int_array(spec, "spec", "n_grid")
                                           : default_log_grid(1, 100000000, 50);
    CsvTable prod{"figures_p005_production.csv", "n,f_optimal,f_pvalue,lost_fraction", {}};
    for (std::int64_t n : n_grid) {
        if (n < 1) throw ValidationError("n_grid entries must be >= 1");
        const double f_opt = handle.value(static_cast<double>(n));
        const double f_pv = production_pvalue_rule(prior, noise, n, z);
        const double lost = f_opt > 0.0 ? 1.0 - f_pv / f_opt : 0.0;
        prod.rows.push_back(std::to_string(n) + "," + fmt15(f_opt) + "," + fmt15(f_pv) +
                            "," + fmt15(lost));
    }

    std::vector<std::int64_t> i_grid = spec.contains("I_grid")
                                           ? get_int_array(spec, "spec", "I_grid")
                                           : default_log_grid(1, 10000, 12);
    std::vector<std::int64_t> big_grid = spec.contains("N_grid")
                                             ? get_int_array(spec, "spec", "N_grid")
                                             : default_log_grid(1000, 100000000, 12);
    CsvTable meta{"figures_p005_metaproduction.csv",
                  "I,N,F_optimal,F_pvalue,lost_fraction", {}};
    for (std::int64_t I : i_grid) {
        for (std::int64_t N : big_grid) {
            const double F_opt = metaproduction_direct(I, N, handle).value;
            double F_pv = 0.0;
            for (std::int64_t i = 1; i <= I; ++i) {
                const std::int64_t n = N / i;
                if (n < 1) break;
                const double v = static_cast<double>(i) *
                                 production_pvalue_rule(prior, noise, n, z);
                if (v > F_pv) F_pv = v;
            }
            const double lost = F_opt > 0.0 ? 1.0 - F_pv / F_opt : 0.0;
            meta.rows.push_back(std::to_string(I) + "," + std::to_string(N) + "," +
                                fmt15(F_opt) + "," + fmt15(F_pv) + "," + fmt15(lost));
        }
    }

    Artifacts a;
    a.result = {{"pvalue_z", z},
                {"production_rows", prod.rows.size()},
                {"metaproduction_rows", meta.rows.size()}};
    a.tables.push_back(std::move(prod));
    a.tables.push_back(std::move(meta));
    return a;
}

Artifacts figures_metaproduction_heatmap(const json& spec, const Context&) {
    check_keys(spec, "spec", {"prior", "sigma", "I_grid", "N_grid", "seed"});
    const GaussianPrior gprior = parse_gaussian_prior(spec, "spec");
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    const ProductionHandle handle{Prior(gprior), noise, Utility::linear(), CostModel{}};
    const std::vector<std::int64_t> i_grid = get_int_array(spec, "spec", "I_grid");
    const std::vector<std::int64_t> n_grid = get_int_array(spec, "spec", "N_grid");
    std::int64_t max_n = 1;
    for (std::int64_t n : n_grid) max_n = std::max(max_n, n);
    const ProductionAnalysis analysis =
        find_x_star(handle, 4.0 * static_cast<double>(max_n));

    CsvTable table{"figures_metaproduction_heatmap.csv", "I,N,F", {}};
    for (std::int64_t I : i_grid) {
        for (std::int64_t N : n_grid) {
            const MetaproductionResult r = metaproduction_closed(
                static_cast<double>(I), static_cast<double>(N), analysis, handle);
            table.rows.push_back(std::to_string(I) + "," + std::to_string(N) + "," +
                                 fmt15(r.value));
        }
    }
    Artifacts a;
    a.result = {{"x_star", analysis.x_star}, {"x_hat", analysis.x_hat},
                {"rows", table.rows.size()}};
    a.tables.push_back(std::move(table));
    return a;
}

Artifacts figures_program_metaproduction(const json& spec, const Context&) {
    check_keys(spec, "spec", {"programs", "N_grid", "I_grid", "seed"});
    const std::vector<ProgramSpec> programs = parse_programs(spec, "spec", true, true);
    const std::vector<std::int64_t> n_grid = get_int_array(spec, "spec", "N_grid");
    const std::vector<std::int64_t> i_grid = get_int_array(spec, "spec", "I_grid");

    CsvTable by_pool{"figures_program_metaproduction_pool.csv", "program,N,F", {}};
    CsvTable by_ideas{"figures_program_metaproduction_ideas.csv", "program,I,F", {}};
    for (const ProgramSpec& p : programs) {
        const ProductionHandle handle = p.handle();
        for (std::int64_t N : n_grid) {
            if (N < 1) throw ValidationError("N_grid entries must be >= 1");
            const double F = metaproduction_direct(std::max<std::int64_t>(p.ideas, 1), N,
                                                   handle)
                                 .value;
            by_pool.rows.push_back(p.name + "," + std::to_string(N) + "," + fmt15(F));
        }
        for (std::int64_t I : i_grid) {
            if (I < 1) throw ValidationError("I_grid entries must be >= 1");
            const double F =
                p.pool >= 1 ? metaproduction_direct(I, p.pool, handle).value : 0.0;
            by_ideas.rows.push_back(p.name + "," + std::to_string(I) + "," + fmt15(F));
        }
    }
    Artifacts a;
    a.result = {{"programs", programs.size()}};
    a.tables.push_back(std::move(by_pool));
    a.tables.push_back(std::move(by_ideas));
    return a;
}

Artifacts figures_sequential_schedule(const json& spec, const Context& ctx) {
    check_keys(spec, "spec", {"prior", "sigma", "N", "I", "T", "weights", "seed"});
    Artifacts a = run_sequential(spec, ctx);
    a.tables[0].name = "figures_sequential_schedule.csv";

    // Value surface over smaller horizons and budgets, weight convention
    // w_t = T - t + 1 truncated to the horizon.
    const std::int64_t pool = get_int(spec, "spec", "N");
    const std::int64_t ideas = get_int(spec, "spec", "I");
    const std::int64_t periods = get_int(spec, "spec", "T");
    ProgramSpec program{"program",
                        parse_prior(require(spec, "spec", "prior"), "spec.prior"),
                        get_num(spec, "spec", "sigma"),
                        0,
                        0,
                        1.0};
    CsvTable surface{"figures_sequential_value.csv", "I,T,value", {}};
    const std::vector<std::int64_t> idea_points =
        default_log_grid(1, std::max<std::int64_t>(ideas, 1), 12);
    for (std::int64_t t = 1; t <= periods; ++t) {
        std::vector<double> weights;
        for (std::int64_t u = 1; u <= t; ++u) {
            weights.push_back(static_cast<double>(t - u + 1));
        }
        for (std::int64_t i : idea_points) {
            const Schedule s = solve_sequential(program, pool, i, t, weights);
            surface.rows.push_back(std::to_string(i) + "," + std::to_string(t) + "," +
                                   fmt15(s.value));
        }
    }
    a.tables.push_back(std::move(surface));
    return a;
}

Artifacts figures_exclusive_curve(const json& spec, const Context& ctx) {
    check_keys(spec, "spec", {"prior", "sigma", "N_list", "I", "samples", "seed"});
    const GaussianPrior prior = parse_gaussian_prior(spec, "spec");
    const NoiseModel noise(get_num(spec, "spec", "sigma"));
    const std::vector<std::int64_t> pools = get_int_array(spec, "spec", "N_list");
    const std::int64_t ideas = get_int(spec, "spec", "I");
    const std::int64_t samples = get_int_or(spec, "spec", "samples", 100000);

    CsvTable table{"figures_exclusive_curve.csv",
                   "N,I0,value,stderr,method,validity_flag", {}};
    for (std::int64_t pool : pools) {
        const I0Scan scan = optimize_I0(prior, noise, pool, ideas,
                                        ExclusiveMethod::monte_carlo, samples, ctx.seed);
        for (const ExclusiveResult& r : scan.curve) {
            table.rows.push_back(std::to_string(pool) + "," + exclusive_row(r));
        }
    }
    Artifacts a;
    a.result = {{"pools", pools.size()}, {"rows", table.rows.size()}};
    a.tables.push_back(std::move(table));
    return a;
}

Artifacts dispatch_figures(const std::string& family, const json& spec,
                           const Context& ctx) {
    if (family == "value-of-testing") return figures_value_of_testing(spec, ctx);
    if (family == "test-passing") return figures_test_passing(spec, ctx);
    if (family == "p005-comparison") return figures_p005_comparison(spec, ctx);
    if (family == "metaproduction-heatmap") return figures_metaproduction_heatmap(spec, ctx);
    if (family == "cost-thresholds") {
        Artifacts a = run_cost_analysis(spec, ctx);
        a.tables[0].name = "figures_cost_thresholds.csv";
        return a;
    }
    if (family == "program-metaproduction") return figures_program_metaproduction(spec, ctx);
    if (family == "sequential-schedule") return figures_sequential_schedule(spec, ctx);
    if (family == "exclusive-curve") return figures_exclusive_curve(spec, ctx);
    throw ValidationError("unknown figure family '" + family + "'");
}

}  // namespace

int run(const RunConfig& config) {
    try {
        std::ifstream in(config.spec_path, std::ios::binary);
        if (!in) {
            throw ValidationError("cannot open spec file " + config.spec_path.string());
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        const std::string bytes = buffer.str();

        json spec;
        try {
            spec = json::parse(bytes);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("spec is not valid JSON: ") + e.what());
        }
        if (!spec.is_object()) throw ValidationError("spec must be a JSON object");

        Context ctx;
        ctx.subcommand = config.subcommand;
        ctx.spec_hash = fnv1a_hex(bytes);
        ctx.out_dir = config.out_dir;
        ctx.format = config.format;
        ctx.seed = config.seed;
        if (!config.seed_overridden && spec.contains("seed")) {
            const json& s = spec.at("seed");
            if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
                throw ValidationError("spec.seed must be a nonnegative integer");
            }
            ctx.seed = s.get<std::uint64_t>();
        }

        Artifacts artifacts;
        if (config.subcommand == "fit-prior") {
            artifacts = run_fit_prior(spec, ctx);
        } else if (config.subcommand == "production-curve") {
            artifacts = run_production_curve(spec, ctx);
        } else if (config.subcommand == "allocate") {
            artifacts = run_allocate(spec, ctx);
        } else if (config.subcommand == "thresholds") {
            artifacts = run_thresholds(spec, ctx);
        } else if (config.subcommand == "cost-analysis") {
            artifacts = run_cost_analysis(spec, ctx);
        } else if (config.subcommand == "multi-program") {
            artifacts = run_multi_program(spec, ctx);
        } else if (config.subcommand == "share-ideas") {
            artifacts = run_share_ideas(spec, ctx);
        } else if (config.subcommand == "sequential") {
            artifacts = run_sequential(spec, ctx);
        } else if (config.subcommand == "exclusive") {
            artifacts = run_exclusive(spec, ctx);
        } else if (config.subcommand == "minimax") {
            artifacts = run_minimax(spec, ctx);
        } else if (config.subcommand == "figures") {
            if (config.figure_family.empty()) {
                throw ValidationError("figures requires --family");
            }
            Context fctx = ctx;
            fctx.subcommand = "figures-" + config.figure_family;
            artifacts = dispatch_figures(config.figure_family, spec, fctx);
            artifacts.result["family"] = config.figure_family;
            emit(fctx, artifacts);
            return 0;
        } else {
            throw ValidationError("unknown subcommand '" + config.subcommand + "'");
        }
        emit(ctx, artifacts);
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "abplan: spec error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "abplan: numerical failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace abplan::cli
