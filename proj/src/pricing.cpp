#include "rpricer/pricing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "rpricer/common.hpp"

namespace rpricer {

// ---------------------------------------------------------------------------
// Payoff
// ---------------------------------------------------------------------------

Payoff::Payoff(PayoffKind k, double strike, double cash)
    : kind_(k), strike_(strike), cash_(cash) {}

Payoff Payoff::vanilla_call(double strike) {
    if (!(strike > 0.0) || !std::isfinite(strike)) {
        throw std::invalid_argument("Payoff: strike must be positive");
    }
    return Payoff(PayoffKind::VanillaCall, strike, 0.0);
}

Payoff Payoff::vanilla_put(double strike) {
    if (!(strike > 0.0) || !std::isfinite(strike)) {
        throw std::invalid_argument("Payoff: strike must be positive");
    }
    return Payoff(PayoffKind::VanillaPut, strike, 0.0);
}

Payoff Payoff::digital(double strike, double cash) {
    if (!(strike > 0.0) || !(cash > 0.0)) {
        throw std::invalid_argument("Payoff: digital strike and cash must be positive");
    }
    return Payoff(PayoffKind::Digital, strike, cash);
}

Payoff Payoff::custom(std::vector<double> prices, std::vector<double> values) {
    if (prices.size() != values.size() || prices.size() < 2) {
        throw std::invalid_argument("Payoff: custom table needs >= 2 matching rows");
    }
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]) ||
            !(values[i] >= 0.0) || !std::isfinite(values[i])) {
            throw std::invalid_argument(
                "Payoff: custom table needs positive prices and nonnegative values");
        }
        if (i > 0 && !(prices[i] > prices[i - 1])) {
            throw std::invalid_argument("Payoff: custom prices must be strictly increasing");
        }
    }
    Payoff p(PayoffKind::Custom, 0.0, 0.0);
    p.tab_prices_ = std::move(prices);
    p.tab_values_ = std::move(values);
    return p;
}

double Payoff::operator()(double price) const {
    switch (kind_) {
        case PayoffKind::VanillaCall:
            return std::max(0.0, price - strike_);
        case PayoffKind::VanillaPut:
            return std::max(0.0, strike_ - price);
        case PayoffKind::Digital:
            return price > strike_ ? cash_ : 0.0;
        case PayoffKind::Custom: {
            if (price <= tab_prices_.front()) return tab_values_.front();
            if (price >= tab_prices_.back()) return tab_values_.back();
            const auto it =
                std::upper_bound(tab_prices_.begin(), tab_prices_.end(), price);
            const std::size_t i = static_cast<std::size_t>(it - tab_prices_.begin()) - 1;
            const double w =
                (price - tab_prices_[i]) / (tab_prices_[i + 1] - tab_prices_[i]);
            return tab_values_[i] + w * (tab_values_[i + 1] - tab_values_[i]);
        }
    }
    return 0.0;
}

double Payoff::kink_log_price() const {
    if (!has_kink()) throw std::logic_error("Payoff: custom payoffs have no single kink");
    return std::log(strike_);
}

double Payoff::bound_scale() const {
    switch (kind_) {
        case PayoffKind::VanillaCall:
            return 1.0;
        case PayoffKind::VanillaPut:
            return strike_;
        case PayoffKind::Digital:
            return cash_;
        case PayoffKind::Custom:
            return *std::max_element(tab_values_.begin(), tab_values_.end());
    }
    return 1.0;
}

// ---------------------------------------------------------------------------
// Request plumbing
// ---------------------------------------------------------------------------

PricingRequest::PricingRequest(DurationModel d, ReturnModel r, double maturity_,
                               Payoff p)
    : durations(std::move(d)), returns(std::move(r)), maturity(maturity_),
      payoff(std::move(p)) {}

void PricingRequest::validate() const {
    if (!(maturity > 0.0) || !std::isfinite(maturity)) {
        throw std::invalid_argument("PricingRequest: maturity must be positive");
    }
    if (!(t >= 0.0) || !(t < maturity)) {
        throw std::invalid_argument("PricingRequest: need 0 <= t < T_M");
    }
    if (n_t < 0) throw std::invalid_argument("PricingRequest: n_t must be nonnegative");
}

// ---------------------------------------------------------------------------
// Mixture payoff quadrature
// ---------------------------------------------------------------------------

namespace {

struct ComponentQuad {
    double payoff = 0.0;
    double exp_mean = 0.0;
};

// Midpoint Stieltjes quadrature of the payoff against component n. The cell
// containing the payoff kink is split exactly at log K; edge atoms are kept
// at the grid ends.
ComponentQuad integrate_component(const TerminalLogPriceLaw& law, std::size_t n,
                                  const Payoff& payoff, const std::vector<double>& v) {
    const double o = law.grid_origin();
    const double h = law.grid_step();
    const std::size_t m = v.size();
    const double top = o + h * static_cast<double>(m - 1);

    long kink_cell = -1;
    double s = 0.0;
    if (payoff.has_kink()) {
        s = payoff.kink_log_price();
        if (s > o && s < top) kink_cell = static_cast<long>((s - o) / h);
    }

    KahanSum pay;
    KahanSum em;
    pay.add(v.front() * payoff(std::exp(o)));
    em.add(v.front() * std::exp(o));
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double xl = o + h * static_cast<double>(i);
        if (static_cast<long>(i) == kink_cell) {
            const double fs = law.component_cdf(n, s);
            const double ml = 0.5 * (xl + s);
            const double mr = 0.5 * (s + xl + h);
            const double dl = fs - v[i];
            const double dr = v[i + 1] - fs;
            pay.add(payoff(std::exp(ml)) * dl);
            pay.add(payoff(std::exp(mr)) * dr);
            em.add(std::exp(ml) * dl);
            em.add(std::exp(mr) * dr);
            continue;
        }
        const double mid = std::exp(xl + 0.5 * h);
        const double d = v[i + 1] - v[i];
        pay.add(payoff(mid) * d);
        em.add(mid * d);
    }
    pay.add((1.0 - v.back()) * payoff(std::exp(top)));
    em.add((1.0 - v.back()) * std::exp(top));
    return {pay.value(), em.value()};
}

// Largest single-cell mass of the duration CDF on the time grid actually
// used by the counting quadrature; the first-order error scale.
double max_duration_increment(const DurationModel& durations, double horizon,
                              const PricingNumerics& num) {
    if (!(horizon > 0.0)) return 0.0;
    const double h_req = num.h_time > 0.0 ? num.h_time : horizon / 2000.0;
    auto cells = static_cast<std::size_t>(std::llround(std::ceil(horizon / h_req - 1e-9)));
    if (cells < 1) cells = 1;
    const double h = horizon / static_cast<double>(cells);
    double prev = 0.0;
    double dmax = 0.0;
    for (std::size_t i = 1; i <= cells; ++i) {
        const double c = durations.cdf(h * static_cast<double>(i));
        dmax = std::max(dmax, c - prev);
        prev = c;
    }
    return dmax;
}

PricingResult price_mixture(const PricingRequest& request, const CountingLaw& weights,
                            bool counting_fast_path, bool general_case) {
    const auto t0 = std::chrono::steady_clock::now();
    const PricingNumerics& num = request.numerics;
    const ShiftedReturnModel shifted = emm_shift(request.returns);
    const TerminalLogPriceLaw law =
        terminal_law(shifted, weights, LogGridSpec{num.log_half_width, num.log_step},
                     num.grid_escape_tol);

    const std::size_t n_terms = weights.probs.size();
    std::vector<double> expectations(n_terms);
    KahanSum price;
    KahanSum mean;
    std::vector<double> buf;
    expectations[0] = request.payoff(1.0);
    price.add(weights.probs[0] * expectations[0]);
    mean.add(weights.probs[0]);
    for (std::size_t n = 1; n < n_terms; ++n) {
        law.component_values(n, buf);
        const ComponentQuad q = integrate_component(law, n, request.payoff, buf);
        expectations[n] = q.payoff;
        price.add(weights.probs[n] * q.payoff);
        mean.add(weights.probs[n] * q.exp_mean);
    }

    PricingResult out;
    out.price = price.value();
    out.diagnostics.n_max = n_terms - 1;
    out.diagnostics.tail_mass = weights.tail_mass;
    out.diagnostics.martingale_mean = mean.value() + weights.tail_mass;

    // Error bound: payoff mass lost past the log grid (call-tail bound
    // 1 - E_quad[e^X]), counting tail, first-order weight-redistribution
    // term for generic counting, and the second-order payoff midpoint term.
    const double scale = request.payoff.bound_scale();
    double bound = std::max(0.0, 1.0 - out.diagnostics.martingale_mean) +
                   weights.tail_mass * std::max(1.0, scale);
    if (!counting_fast_path) {
        const double horizon = general_case ? request.maturity - request.t : request.maturity;
        const double dj = max_duration_increment(request.durations, horizon, num);
        double n_avg = 0.0;
        double spread = 0.0;
        for (std::size_t n = 1; n < n_terms; ++n) {
            n_avg += static_cast<double>(n) * weights.probs[n];
            spread = std::max(spread, std::abs(expectations[n] - expectations[n - 1]));
        }
        double cb = 2.0 * dj * n_avg * spread;
        if (general_case) cb *= 2.0;  // residual outer quadrature is same-order
        bound += cb;
    }
    const double hl = law.grid_step();
    double n_avg_all = 0.0;
    for (std::size_t n = 1; n < n_terms; ++n) {
        n_avg_all += static_cast<double>(n) * weights.probs[n];
    }
    const double fold_terms = law.normal_closed_form() ? 1.0 : 1.0 + n_avg_all;
    bound += hl * hl * fold_terms * (1.0 + scale) / 8.0;
    out.diagnostics.truncation_bias_bound = bound;

    out.diagnostics.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

}  // namespace

PricingResult price_at_renewal(const PricingRequest& request) {
    request.validate();
    // Seen from a renewal epoch t = 0; any configured (t, n_t) is ignored.
    const CountingLaw weights =
        counting_pmf(request.durations, request.maturity, request.numerics.renewal());
    const bool fast = request.numerics.use_fast_paths &&
                      request.durations.family() == DurationFamily::Exponential;
    return price_mixture(request, weights, fast, false);
}

PricingResult price_general(const PricingRequest& request) {
    request.validate();
    const CountingLaw weights = conditional_counting_pmf(
        request.durations, request.t, request.n_t, request.maturity,
        request.numerics.renewal());
    const bool fast = request.numerics.use_fast_paths &&
                      request.durations.family() == DurationFamily::Exponential;
    return price_mixture(request, weights, fast, true);
}

double merton_price(double s0, double k, double lambda, double mu, double sigma,
                    double tau) {
    if (!(s0 > 0.0) || !(k > 0.0) || !(lambda > 0.0) || !(sigma > 0.0) ||
        !(tau > 0.0) || !std::isfinite(mu)) {
        throw std::invalid_argument("merton_price: parameters must be positive");
    }
    const double lt = lambda * tau;
    double pois = std::exp(-lt);
    KahanSum cum;
    cum.add(pois);
    KahanSum acc;
    acc.add(pois * std::max(0.0, s0 - k));  // n = 0: deterministic price
    const double log_m = std::log(s0 / k);
    const double drift = mu + 0.5 * sigma * sigma;
    for (std::size_t n = 1; 1.0 - cum.value() > 1e-12; ++n) {
        if (n > 2000000) throw std::runtime_error("merton_price: series did not converge");
        const double nd = static_cast<double>(n);
        pois *= lt / nd;
        cum.add(pois);
        const double sq = sigma * std::sqrt(nd);
        const double d1 = (log_m + nd * drift) / sq;
        const double d2 = d1 - sq;
        acc.add(pois * (norm_cdf(d1) * s0 - norm_cdf(d2) * k));
    }
    return acc.value();
}

double put_call_parity_check(const PricingResult& call, const PricingResult& put,
                             double strike) {
    return (call.price - put.price) - (1.0 - strike);
}

}  // namespace rpricer
