#pragma once

#include <cstddef>
#include <vector>

#include "rpricer/distributions.hpp"
#include "rpricer/martingale.hpp"
#include "rpricer/renewal.hpp"

namespace rpricer {

enum class PayoffKind { VanillaCall, VanillaPut, Digital, Custom };

// Contract value at maturity as a function of the terminal price. Strikes
// are in units of the numeraire price S(t) = 1 (moneyness).
class Payoff {
public:
    static Payoff vanilla_call(double strike);
    static Payoff vanilla_put(double strike);
    // Pays `cash` when the terminal price exceeds the strike.
    static Payoff digital(double strike, double cash);
    // Tabulated payoff; linear interpolation inside the table, flat
    // extrapolation beyond it (keeps growth bounded, hence integrable).
    static Payoff custom(std::vector<double> prices, std::vector<double> values);

    PayoffKind kind() const { return kind_; }
    double strike() const { return strike_; }
    double cash() const { return cash_; }
    double operator()(double price) const;

    // Kink/jump location for quadrature cell splitting.
    bool has_kink() const { return kind_ != PayoffKind::Custom; }
    double kink_log_price() const;
    // Crude scale of the payoff against laws with E[S] = 1; used only for
    // the reported error bounds.
    double bound_scale() const;

private:
    Payoff(PayoffKind k, double strike, double cash);

    PayoffKind kind_;
    double strike_ = 0.0;
    double cash_ = 0.0;
    std::vector<double> tab_prices_;
    std::vector<double> tab_values_;
};

struct PricingNumerics {
    double h_time = 0.0;          // duration-grid step; 0 = auto (horizon/2000)
    double eps_tail = 1e-8;       // counting-law truncation target
    double log_step = 0.0;        // log-price grid step; 0 = auto (sigma/32)
    double log_half_width = 0.0;  // 0 = auto
    std::size_t n_hard_cap = 100000;
    double denominator_floor = 1e-12;
    double grid_escape_tol = 1e-9;
    bool use_fast_paths = true;

    RenewalNumerics renewal() const {
        return RenewalNumerics{h_time, eps_tail, n_hard_cap, denominator_floor,
                               use_fast_paths};
    }
};

// Full problem statement. The strike inside `payoff` is moneyness relative
// to the price at the observation instant (S(t) is the numeraire); callers
// holding absolute strikes divide by spot first. The risk-free rate is
// identically zero on the intraday horizon, so no rate appears anywhere.
struct PricingRequest {
    DurationModel durations;
    ReturnModel returns;
    double t = 0.0;  // observation time, seconds from the open
    int n_t = 0;     // trades observed up to t
    double maturity = 0.0;
    Payoff payoff;
    PricingNumerics numerics;
    bool at_renewal_epoch = true;

    PricingRequest(DurationModel d, ReturnModel r, double maturity_, Payoff p);
    void validate() const;
};

struct PricingDiagnostics {
    std::size_t n_max = 0;        // largest trade count retained
    double tail_mass = 0.0;       // counting mass beyond n_max
    double martingale_mean = 0.0; // quadrature E[S~], should be ~1
    // Bound on the total truncation + discretization error of the reported
    // price: payoff mass beyond the log grid, counting tail, and certified
    // first/second-order quadrature terms.
    double truncation_bias_bound = 0.0;
    double wall_ms = 0.0;
};

struct PricingResult {
    double price = 0.0;
    PricingDiagnostics diagnostics;
};

// Price seen from a renewal epoch (t = 0 without loss of generality):
// weights from the unconditional counting law.
PricingResult price_at_renewal(const PricingRequest& request);

// Price at a generic observation time t with N(t) = n_t known: weights from
// the residual-lifetime-conditioned counting law.
PricingResult price_general(const PricingRequest& request);

// Compound-Poisson closed form (zero rate, normal jumps); the n = 0 term is
// the deterministic payoff max(0, S0 - K). Series truncated once the
// Poisson tail falls below 1e-12.
double merton_price(double s0, double k, double lambda, double mu, double sigma,
                    double tau);

// (C - P) - (1 - K); zero under put-call parity with r = 0 and numeraire 1.
double put_call_parity_check(const PricingResult& call, const PricingResult& put,
                             double strike);

}  // namespace rpricer
