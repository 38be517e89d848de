#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "rpricer/distributions.hpp"
#include "rpricer/martingale.hpp"

namespace rpricer {

// Simulation setup for compound-renewal price paths under the e.m.m.
// Identical configs give bit-identical estimates: path i draws only from a
// substream derived from (seed, i), and aggregation runs over fixed-size
// path blocks combined in block order, so results do not depend on the
// thread count.
struct SimConfig {
    DurationModel durations;
    ShiftedReturnModel returns;
    double horizon = 0.0;  // T (unconditioned) or T_M (conditioned)
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;

    bool conditioned = false;  // condition on N(t) = n_t
    double t = 0.0;
    int n_t = 0;
    // Rejection sampling is the generic conditioning method; Exponential
    // durations may restart at t instead (memoryless). Tests force the
    // generic route to check the two agree.
    bool force_generic_conditioning = false;

    unsigned threads = 0;  // 0 = RENEWAL_PRICER_THREADS/auto

    SimConfig(DurationModel d, ShiftedReturnModel r, double horizon_,
              std::size_t paths, std::uint64_t seed_)
        : durations(std::move(d)), returns(std::move(r)), horizon(horizon_),
          n_paths(paths), seed(seed_) {}

    SimConfig& with_conditioning(double t_, int n_t_) {
        conditioned = true;
        t = t_;
        n_t = n_t_;
        return *this;
    }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
};

struct McPmf {
    std::vector<double> probs;
    std::vector<double> std_errors;
    std::size_t n_effective = 0;
};

struct McResidual {
    std::vector<double> sorted_samples;  // residual lifetimes of accepted paths
    std::size_t n_effective = 0;
};

// Sample mean and standard error of payoff(S~(horizon)) over paths (over
// accepted paths when conditioned). Throws "conditioning too rare, increase
// paths" when the acceptance rate drops below 1e-4.
McEstimate simulate_price(const SimConfig& config,
                          const std::function<double(double)>& payoff);

// Empirical pmf of the trade count N(T) (or N(T_M) - N(t) when conditioned).
McPmf simulate_counting(const SimConfig& config);

// Residual lifetimes T_{N(t)+1} - t among paths accepted by the (t, n_t)
// conditioning. Always uses rejection sampling.
McResidual simulate_residual(const SimConfig& config);

}  // namespace rpricer
