// renewal-pricer: intraday European option pricing on a compound-renewal
// tick model. Subcommands: price, merton, counting, residual, simulate, fit.
// Configuration is one JSON file (model / pricing / numerics); results are
// JSON documents on stdout, logs on stderr.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpricer/calibration.hpp"
#include "rpricer/distributions.hpp"
#include "rpricer/martingale.hpp"
#include "rpricer/montecarlo.hpp"
#include "rpricer/pricing.hpp"
#include "rpricer/renewal.hpp"

using nlohmann::json;
using namespace rpricer;

namespace {

constexpr int kSchemaVersion = 1;

// Configuration problems carry the offending field path for the error doc.
struct ConfigError : std::runtime_error {
    ConfigError(std::string field_, const std::string& message)
        : std::runtime_error(message), field(std::move(field_)) {}
    std::string field;
};

// All numeric output is quantized to 12 significant digits so documents are
// byte-stable across runs and suitable for golden-file comparison.
double round12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

json jnum(double x) { return json(round12(x)); }

json jvec(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

// --- config access helpers -------------------------------------------------

std::string joined(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(joined(path, key), "missing required field");
    }
    return j.at(key);
}

double num_field(const json& j, const std::string& key, const std::string& path) {
    const json& v = member(j, key, path);
    if (!v.is_number()) throw ConfigError(joined(path, key), "expected a number");
    return v.get<double>();
}

double num_field_or(const json& j, const std::string& key, const std::string& path,
                    double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return num_field(j, key, path);
}

std::string str_field(const json& j, const std::string& key, const std::string& path) {
    const json& v = member(j, key, path);
    if (!v.is_string()) throw ConfigError(joined(path, key), "expected a string");
    return v.get<std::string>();
}

bool bool_field_or(const json& j, const std::string& key, const std::string& path,
                   bool fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(joined(path, key), "expected a boolean");
    return v.get<bool>();
}

std::vector<double> vec_field(const json& j, const std::string& key,
                              const std::string& path) {
    const json& v = member(j, key, path);
    if (!v.is_array()) throw ConfigError(joined(path, key), "expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(joined(path, key), "expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// --- tick CSV ---------------------------------------------------------------

TickSeries read_tick_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("input", "cannot open tick file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("input", "empty tick file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_seconds,price") {
        throw ConfigError("input", "tick CSV must start with header 't_seconds,price'");
    }
    std::vector<double> epochs;
    std::vector<double> prices;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("input", "line " + std::to_string(lineno) + ": expected 't,price'");
        }
        try {
            epochs.push_back(std::stod(line.substr(0, comma)));
            prices.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ConfigError("input", "line " + std::to_string(lineno) + ": bad number");
        }
    }
    try {
        return TickSeries(std::move(epochs), std::move(prices));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("input", e.what());
    }
}

// --- model sections ----------------------------------------------------------

DurationFamily duration_family_from(const std::string& name, const std::string& path) {
    if (name == "exponential") return DurationFamily::Exponential;
    if (name == "weibull") return DurationFamily::Weibull;
    if (name == "lognormal") return DurationFamily::Lognormal;
    if (name == "uniform") return DurationFamily::Uniform;
    if (name == "empirical") return DurationFamily::Empirical;
    throw ConfigError(path, "unknown duration family: " + name);
}

ReturnFamily return_family_from(const std::string& name, const std::string& path) {
    if (name == "normal") return ReturnFamily::Normal;
    if (name == "laplace") return ReturnFamily::Laplace;
    if (name == "empirical") return ReturnFamily::Empirical;
    throw ConfigError(path, "unknown return family: " + name);
}

DurationModel parse_duration_model(const json& j, const std::string& path) {
    try {
        if (j.contains("fit")) {
            const json& f = j.at("fit");
            const std::string input = str_field(f, "input", path + ".fit");
            const std::string fam = str_field(f, "family", path + ".fit");
            const TickSeries ticks = read_tick_csv(input);
            const bool from_open = bool_field_or(f, "from_open", path + ".fit", false);
            return fit_duration(durations_of(ticks, from_open),
                                duration_family_from(fam, path + ".fit.family"));
        }
        const std::string fam = str_field(j, "family", path);
        switch (duration_family_from(fam, joined(path, "family"))) {
            case DurationFamily::Exponential:
                return DurationModel::exponential(num_field(j, "rate", path));
            case DurationFamily::Weibull:
                return DurationModel::weibull(num_field(j, "shape", path),
                                              num_field(j, "scale", path));
            case DurationFamily::Lognormal:
                return DurationModel::lognormal(num_field(j, "log_mean", path),
                                                num_field(j, "log_sd", path));
            case DurationFamily::Uniform:
                return DurationModel::uniform(num_field(j, "lo", path),
                                              num_field(j, "hi", path));
            case DurationFamily::Empirical:
                return DurationModel::empirical(vec_field(j, "values", path));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(path, "unreachable");
}

ReturnModel parse_return_model(const json& j, const std::string& path) {
    try {
        if (j.contains("fit")) {
            const json& f = j.at("fit");
            const std::string input = str_field(f, "input", path + ".fit");
            const std::string fam = str_field(f, "family", path + ".fit");
            const TickSeries ticks = read_tick_csv(input);
            return fit_return(returns_of(ticks),
                              return_family_from(fam, path + ".fit.family"));
        }
        const std::string fam = str_field(j, "family", path);
        switch (return_family_from(fam, joined(path, "family"))) {
            case ReturnFamily::Normal:
                return ReturnModel::normal(num_field(j, "mean", path),
                                           num_field(j, "sd", path));
            case ReturnFamily::Laplace:
                return ReturnModel::laplace(num_field(j, "location", path),
                                            num_field(j, "scale", path));
            case ReturnFamily::Empirical:
                return ReturnModel::empirical(vec_field(j, "values", path));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(path, "unreachable");
}

json duration_model_doc(const DurationModel& m) {
    switch (m.family()) {
        case DurationFamily::Exponential:
            return {{"family", "exponential"}, {"rate", jnum(m.exponential_rate())}};
        case DurationFamily::Weibull:
            return {{"family", "weibull"},
                    {"shape", jnum(m.weibull_shape())},
                    {"scale", jnum(m.weibull_scale())}};
        case DurationFamily::Lognormal:
            return {{"family", "lognormal"},
                    {"log_mean", jnum(m.lognormal_log_mean())},
                    {"log_sd", jnum(m.lognormal_log_sd())}};
        case DurationFamily::Uniform:
            return {{"family", "uniform"},
                    {"lo", jnum(m.uniform_lo())},
                    {"hi", jnum(m.uniform_hi())}};
        case DurationFamily::Empirical:
            return {{"family", "empirical"}, {"values", jvec(m.empirical_sample())}};
    }
    return {};
}

json return_model_doc(const ReturnModel& m) {
    switch (m.family()) {
        case ReturnFamily::Normal:
            return {{"family", "normal"},
                    {"mean", jnum(m.normal_mean())},
                    {"sd", jnum(m.normal_sd())}};
        case ReturnFamily::Laplace:
            return {{"family", "laplace"},
                    {"location", jnum(m.laplace_location())},
                    {"scale", jnum(m.laplace_scale())}};
        case ReturnFamily::Empirical:
            return {{"family", "empirical"}, {"values", jvec(m.empirical_sample())}};
    }
    return {};
}

// --- run configuration --------------------------------------------------------

struct RunConfig {
    DurationModel durations;
    ReturnModel returns;
    double t = 0.0;
    int n_t = 0;
    double maturity = 0.0;
    double spot = 1.0;
    double strike = 1.0;
    std::string payoff_kind = "call";
    double cash = 1.0;
    std::vector<double> custom_prices;
    std::vector<double> custom_values;
    bool at_renewal = true;
    PricingNumerics numerics;
    std::size_t mc_paths = 100000;
    std::uint64_t mc_seed = 0;
};

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    const json& model = member(doc, "model", "");
    RunConfig cfg{parse_duration_model(member(model, "duration", "model"), "model.duration"),
                  parse_return_model(member(model, "return", "model"), "model.return")};

    const json& pr = member(doc, "pricing", "");
    cfg.maturity = num_field(pr, "T_M", "pricing");
    cfg.t = num_field_or(pr, "t", "pricing", 0.0);
    cfg.n_t = static_cast<int>(num_field_or(pr, "n_t", "pricing", 0.0));
    cfg.spot = num_field_or(pr, "spot", "pricing", 1.0);
    cfg.strike = num_field_or(pr, "strike", "pricing", 1.0);
    cfg.at_renewal = bool_field_or(pr, "at_renewal", "pricing", true);
    if (pr.contains("payoff")) cfg.payoff_kind = str_field(pr, "payoff", "pricing");
    cfg.cash = num_field_or(pr, "cash", "pricing", 1.0);
    if (cfg.payoff_kind == "custom") {
        cfg.custom_prices = vec_field(pr, "custom_prices", "pricing");
        cfg.custom_values = vec_field(pr, "custom_values", "pricing");
    }
    if (!(cfg.spot > 0.0)) throw ConfigError("pricing.spot", "spot must be positive");
    if (!(cfg.maturity > 0.0)) throw ConfigError("pricing.T_M", "maturity must be positive");
    if (cfg.t < 0.0 || cfg.t >= cfg.maturity) {
        throw ConfigError("pricing.t", "need 0 <= t < T_M");
    }
    if (cfg.n_t < 0) throw ConfigError("pricing.n_t", "n_t must be nonnegative");

    if (doc.contains("numerics")) {
        const json& nm = doc.at("numerics");
        cfg.numerics.h_time = num_field_or(nm, "h_time", "numerics", 0.0);
        cfg.numerics.eps_tail = num_field_or(nm, "eps_tail", "numerics", 1e-8);
        cfg.numerics.log_step = num_field_or(nm, "log_step", "numerics", 0.0);
        cfg.numerics.log_half_width = num_field_or(nm, "log_half_width", "numerics", 0.0);
        cfg.numerics.use_fast_paths = bool_field_or(nm, "use_fast_paths", "numerics", true);
        cfg.mc_paths = static_cast<std::size_t>(num_field_or(nm, "mc_paths", "numerics",
                                                             100000.0));
        cfg.mc_seed = static_cast<std::uint64_t>(num_field_or(nm, "seed", "numerics", 0.0));
        if (!(cfg.numerics.eps_tail > 0.0 && cfg.numerics.eps_tail < 1.0)) {
            throw ConfigError("numerics.eps_tail", "eps_tail must lie in (0,1)");
        }
        if (cfg.mc_paths == 0) throw ConfigError("numerics.mc_paths", "need at least one path");
    }
    return cfg;
}

// Payoff in numeraire units: strikes and cash scaled by 1/spot.
Payoff build_payoff(const RunConfig& cfg) {
    const double k = cfg.strike / cfg.spot;
    try {
        if (cfg.payoff_kind == "call") return Payoff::vanilla_call(k);
        if (cfg.payoff_kind == "put") return Payoff::vanilla_put(k);
        if (cfg.payoff_kind == "digital") return Payoff::digital(k, cfg.cash / cfg.spot);
        if (cfg.payoff_kind == "custom") {
            std::vector<double> p = cfg.custom_prices;
            std::vector<double> v = cfg.custom_values;
            for (double& x : p) x /= cfg.spot;
            for (double& x : v) x /= cfg.spot;
            return Payoff::custom(std::move(p), std::move(v));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("pricing", e.what());
    }
    throw ConfigError("pricing.payoff", "unknown payoff kind: " + cfg.payoff_kind);
}

void emit(const json& doc) { std::cout << doc.dump(2) << "\n"; }

int fail_config(const ConfigError& e) {
    json doc{{"schema_version", kSchemaVersion},
             {"error", {{"field", e.field}, {"message", e.what()}}}};
    emit(doc);
    std::cerr << "config error [" << e.field << "]: " << e.what() << "\n";
    return 1;
}

int fail_runtime(const std::exception& e) {
    json doc{{"schema_version", kSchemaVersion},
             {"error", {{"field", ""}, {"message", e.what()}}}};
    emit(doc);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
}

// --- subcommands ----------------------------------------------------------------

int cmd_price(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    PricingRequest req(cfg.durations, cfg.returns, cfg.maturity, build_payoff(cfg));
    req.t = cfg.t;
    req.n_t = cfg.n_t;
    req.numerics = cfg.numerics;
    req.at_renewal_epoch = cfg.at_renewal;
    const PricingResult res =
        cfg.at_renewal ? price_at_renewal(req) : price_general(req);
    json doc{{"schema_version", kSchemaVersion},
             {"command", "price"},
             {"price", jnum(res.price * cfg.spot)},
             {"price_numeraire", jnum(res.price)},
             {"moneyness", jnum(cfg.strike / cfg.spot)},
             {"spot", jnum(cfg.spot)},
             {"at_renewal", cfg.at_renewal},
             {"diagnostics",
              {{"n_max", res.diagnostics.n_max},
               {"tail_mass", jnum(res.diagnostics.tail_mass)},
               {"martingale_mean", jnum(res.diagnostics.martingale_mean)},
               {"truncation_bias_bound", jnum(res.diagnostics.truncation_bias_bound)},
               {"wall_ms", jnum(res.diagnostics.wall_ms)}}}};
    emit(doc);
    return 0;
}

int cmd_merton(double s0, double k, double lambda, double mu, double sigma, double tau) {
    const double price = merton_price(s0, k, lambda, mu, sigma, tau);
    json doc{{"schema_version", kSchemaVersion},
             {"command", "merton"},
             {"inputs",
              {{"s0", jnum(s0)},
               {"k", jnum(k)},
               {"lambda", jnum(lambda)},
               {"mu", jnum(mu)},
               {"sigma", jnum(sigma)},
               {"tau", jnum(tau)}}},
             {"price", jnum(price)}};
    emit(doc);
    return 0;
}

int cmd_counting(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    const CountingLaw law =
        counting_pmf(cfg.durations, cfg.maturity, cfg.numerics.renewal());
    json doc{{"schema_version", kSchemaVersion},
             {"command", "counting"},
             {"horizon", jnum(law.horizon)},
             {"n_max", law.probs.size() - 1},
             {"probs", jvec(law.probs)},
             {"tail_mass", jnum(law.tail_mass)}};
    emit(doc);
    return 0;
}

int cmd_residual(const std::string& config_path, std::optional<double> t_flag,
                 std::optional<int> nt_flag) {
    const RunConfig cfg = load_config(config_path);
    const double t = t_flag.value_or(cfg.t);
    const int n_t = nt_flag.value_or(cfg.n_t);
    if (t < 0.0 || t >= cfg.maturity) {
        throw ConfigError("pricing.t", "need 0 <= t < T_M");
    }
    const ResidualLifetimeLaw law =
        residual_lifetime(cfg.durations, t, n_t, cfg.maturity - t, cfg.numerics.renewal());
    std::vector<double> u(law.cdf.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = law.cdf.step() * static_cast<double>(i);
    }
    json doc{{"schema_version", kSchemaVersion},
             {"command", "residual"},
             {"t", jnum(law.t)},
             {"n_t", law.n_t},
             {"u", jvec(u)},
             {"cdf", jvec(law.cdf.values())}};
    emit(doc);
    return 0;
}

int cmd_simulate(const std::string& config_path, std::optional<std::size_t> paths_flag,
                 std::optional<std::uint64_t> seed_flag) {
    const RunConfig cfg = load_config(config_path);
    SimConfig sim(cfg.durations, emm_shift(cfg.returns), cfg.maturity,
                  paths_flag.value_or(cfg.mc_paths), seed_flag.value_or(cfg.mc_seed));
    if (!cfg.at_renewal) sim.with_conditioning(cfg.t, cfg.n_t);
    const Payoff payoff = build_payoff(cfg);
    const McEstimate est = simulate_price(sim, payoff);
    json doc{{"schema_version", kSchemaVersion},
             {"command", "simulate"},
             {"mean", jnum(est.mean * cfg.spot)},
             {"std_error", jnum(est.std_error * cfg.spot)},
             {"n_effective", est.n_effective},
             {"n_paths", sim.n_paths},
             {"seed", sim.seed}};
    emit(doc);
    return 0;
}

int cmd_fit(const std::string& input, const std::string& family_name,
            const std::string& target) {
    const TickSeries ticks = read_tick_csv(input);
    json model;
    if (target == "durations") {
        const DurationModel m = fit_duration(
            durations_of(ticks), duration_family_from(family_name, "family"));
        model = duration_model_doc(m);
    } else if (target == "returns") {
        const ReturnModel m =
            fit_return(returns_of(ticks), return_family_from(family_name, "family"));
        model = return_model_doc(m);
    } else {
        throw ConfigError("target", "target must be 'durations' or 'returns'");
    }
    json doc{{"schema_version", kSchemaVersion},
             {"command", "fit"},
             {"target", target},
             {"n_samples", ticks.epochs.size() - 1},
             {"model", model}};
    emit(doc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intraday European option pricing on a compound-renewal tick model"};
    app.require_subcommand(1);

    std::string config_path;
    auto* price = app.add_subcommand("price", "Price the configured option");
    price->add_option("--config", config_path, "JSON config file")->required();

    double s0 = 1.0, k = 1.0, lambda = 0.0, mu = 0.0, sigma = 0.0, tau = 0.0;
    auto* merton = app.add_subcommand("merton", "Compound-Poisson closed form");
    merton->add_option("--s0", s0)->required();
    merton->add_option("--k", k)->required();
    merton->add_option("--lambda", lambda)->required();
    merton->add_option("--mu", mu)->required();
    merton->add_option("--sigma", sigma)->required();
    merton->add_option("--tau", tau)->required();

    auto* counting = app.add_subcommand("counting", "Trade-count pmf over [0, T_M]");
    counting->add_option("--config", config_path, "JSON config file")->required();

    std::optional<double> t_flag;
    std::optional<int> nt_flag;
    auto* residual = app.add_subcommand("residual", "Residual-lifetime CDF at (t, n_t)");
    residual->add_option("--config", config_path, "JSON config file")->required();
    residual->add_option("--t", t_flag, "observation time (seconds)");
    residual->add_option("--nt", nt_flag, "trades observed up to t");

    std::optional<std::size_t> paths_flag;
    std::optional<std::uint64_t> seed_flag;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo price estimate");
    simulate->add_option("--config", config_path, "JSON config file")->required();
    simulate->add_option("--paths", paths_flag, "number of paths");
    simulate->add_option("--seed", seed_flag, "RNG seed");

    std::string fit_input, fit_family, fit_target;
    auto* fit = app.add_subcommand("fit", "Fit a model from tick data");
    fit->add_option("--input", fit_input, "tick CSV (header t_seconds,price)")->required();
    fit->add_option("--family", fit_family, "model family")->required();
    fit->add_option("--target", fit_target, "durations|returns")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (price->parsed()) return cmd_price(config_path);
        if (merton->parsed()) return cmd_merton(s0, k, lambda, mu, sigma, tau);
        if (counting->parsed()) return cmd_counting(config_path);
        if (residual->parsed()) return cmd_residual(config_path, t_flag, nt_flag);
        if (simulate->parsed()) return cmd_simulate(config_path, paths_flag, seed_flag);
        if (fit->parsed()) return cmd_fit(fit_input, fit_family, fit_target);
    } catch (const ConfigError& e) {
        return fail_config(e);
    } catch (const std::exception& e) {
        return fail_runtime(e);
    }
    return 1;
}
