#pragma once

#include <cstddef>
#include <vector>

#include "rpricer/distributions.hpp"

namespace rpricer {

struct RenewalNumerics {
    double h_time = 0.0;             // time-grid step; 0 = auto (horizon / 2000)
    double eps_tail = 1e-8;          // counting-law tail target
    std::size_t n_hard_cap = 100000; // abort if the tail has not converged by here
    double denominator_floor = 1e-12;
    bool use_fast_paths = true;      // analytic shortcuts for Exponential durations
};

// Truncated law of the trade count: probs[n] = P(N = n) for n = 0..N_max,
// tail_mass = certified mass beyond N_max. probs + tail_mass sums to 1.
struct CountingLaw {
    std::vector<double> probs;
    double tail_mass = 0.0;
    double horizon = 0.0;
};

// P(N(T) = n) for all n up to the eps_tail cutoff, by the survival-weighted
// Stieltjes quadrature of the n-fold duration convolutions
// (Poisson closed form when durations are Exponential and fast paths are on).
CountingLaw counting_pmf(const DurationModel& durations, double T,
                         const RenewalNumerics& num = {});

// Independent route to the same number via the epoch CDFs:
// F_J^{*n}(T) - F_J^{*(n+1)}(T). Cross-check only; not used by pricing.
double counting_pmf_check(const DurationModel& durations, double T, std::size_t n,
                          const RenewalNumerics& num = {});

// CDF of the residual lifetime (time from t to the next trade) conditioned
// on N(t) = n_t, tabulated on [0, u_max].
struct ResidualLifetimeLaw {
    double t = 0.0;
    int n_t = 0;
    GridCdf cdf;
};

ResidualLifetimeLaw residual_lifetime(const DurationModel& durations, double t,
                                      int n_t, double u_max,
                                      const RenewalNumerics& num = {});

// Law of N(T_M) - N(t) given N(t) = n_t: the n = 0 entry is the probability
// that the next trade lands after maturity; n >= 1 mixes counting laws at
// the shifted horizons T_M - (t+u) over the residual-lifetime measure.
CountingLaw conditional_counting_pmf(const DurationModel& durations, double t,
                                     int n_t, double T_M,
                                     const RenewalNumerics& num = {});

}  // namespace rpricer
