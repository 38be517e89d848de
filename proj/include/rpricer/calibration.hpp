#pragma once

#include <vector>

#include "rpricer/distributions.hpp"

namespace rpricer {

// One day of ticks: epochs in seconds from the open (strictly increasing;
// equal timestamps are rejected, not jittered) and the matching trade prices.
struct TickSeries {
    std::vector<double> epochs;
    std::vector<double> prices;

    TickSeries(std::vector<double> epochs_, std::vector<double> prices_);
};

// Inter-trade durations T_i - T_{i-1}. With from_open = true the open epoch
// T_0 = 0 is prepended, so the first duration is the time to the first trade.
std::vector<double> durations_of(const TickSeries& series, bool from_open = false);

// Tick-by-tick log returns log(S(T_i)/S(T_{i-1})).
std::vector<double> returns_of(const TickSeries& series);

// Maximum-likelihood fits. Weibull solves the profiled shape equation by
// safeguarded Newton (bisection fallback, tolerance 1e-10, 200 iterations).
DurationModel fit_duration(const std::vector<double>& samples, DurationFamily family);
ReturnModel fit_return(const std::vector<double>& samples, ReturnFamily family);

}  // namespace rpricer
