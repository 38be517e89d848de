#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace rpricer {

// Compensated (Kahan) accumulator. Summation order is part of the contract:
// all quadratures below add terms in ascending index order so results are
// reproducible bit-for-bit across runs and thread counts.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// Standard normal CDF via erfc (accurate in both tails).
double norm_cdf(double x);

// Standard normal quantile. Acklam's rational approximation polished with
// two Newton steps against norm_cdf; relative error ~1e-15 on (0,1).
double norm_inv(double p);

// SplitMix64 mixer; used to derive independent per-path RNG seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Number of worker threads to use: RENEWAL_PRICER_THREADS if set and > 0,
// otherwise hardware concurrency. A value of 0 in the env means auto.
unsigned thread_budget();

// Runs fn(i) for i in [0, n). Work items are claimed dynamically but each
// item's result must be written to its own slot, so output is independent
// of scheduling. Runs inline when n is small or only one thread is available.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned max_threads = 0);

}  // namespace rpricer
