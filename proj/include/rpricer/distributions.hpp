#pragma once

#include <cstddef>
#include <vector>

namespace rpricer {

// ---------------------------------------------------------------------------
// Parametric laws
// ---------------------------------------------------------------------------

enum class DurationFamily { Exponential, Weibull, Lognormal, Uniform, Empirical };
enum class ReturnFamily { Normal, Laplace, Empirical };

// Law of the inter-trade duration J (strictly positive; cdf(0) = 0).
// All parameters are in seconds. Immutable after construction; parameters
// are validated at construction time, never at call sites.
class DurationModel {
public:
    static DurationModel exponential(double rate);
    static DurationModel weibull(double shape, double scale);
    static DurationModel lognormal(double log_mean, double log_sd);
    static DurationModel uniform(double lo, double hi);
    static DurationModel empirical(std::vector<double> sample);

    DurationFamily family() const { return family_; }
    double cdf(double x) const;
    double mean() const;
    // Inverse-CDF draw from a single uniform in [0,1). Deterministic given u.
    double sample(double u01) const;

    double exponential_rate() const;
    double weibull_shape() const;
    double weibull_scale() const;
    double lognormal_log_mean() const;
    double lognormal_log_sd() const;
    double uniform_lo() const;
    double uniform_hi() const;
    const std::vector<double>& empirical_sample() const;

private:
    DurationModel(DurationFamily f, double p1, double p2, std::vector<double> sample);

    DurationFamily family_;
    double p1_ = 0.0;
    double p2_ = 0.0;
    std::vector<double> sample_;  // sorted, Empirical only
};

// Law of the tick-by-tick log-return Y. E[e^Y] must be finite for every
// supported family (Laplace requires scale < 1).
class ReturnModel {
public:
    static ReturnModel normal(double mean, double sd);
    static ReturnModel laplace(double location, double scale);
    static ReturnModel empirical(std::vector<double> sample);

    ReturnFamily family() const { return family_; }
    double cdf(double x) const;
    double mean() const;
    double variance() const;
    double mean_exp() const;  // E[e^Y]
    double sample(double u01) const;
    // Quantile; exact for Normal/Laplace, order statistic for Empirical.
    double quantile(double p) const;

    double normal_mean() const;
    double normal_sd() const;
    double laplace_location() const;
    double laplace_scale() const;
    const std::vector<double>& empirical_sample() const;

private:
    ReturnModel(ReturnFamily f, double p1, double p2, std::vector<double> sample);

    ReturnFamily family_;
    double p1_ = 0.0;
    double p2_ = 0.0;
    std::vector<double> sample_;
};

double mean_exp(const ReturnModel& model);

// ---------------------------------------------------------------------------
// Grid CDF and the Lebesgue-Stieltjes convolution engine
// ---------------------------------------------------------------------------

// A CDF sampled on the uniform grid origin + i*step, i = 0..size-1.
// Values are nondecreasing in [0,1] (enforced by a running-max clamp at
// construction). The implied measure has an atom of mass values[0] at the
// origin, cell masses values[i+1]-values[i], and overflow_mass() beyond the
// last grid point.
class GridCdf {
public:
    GridCdf(double origin, double step, std::vector<double> values);

    // Degenerate distribution: all mass at `at` (values = {1}).
    static GridCdf unit_step(double at, double step);

    double origin() const { return origin_; }
    double step() const { return step_; }
    std::size_t size() const { return values_.size(); }
    double max_x() const { return origin_ + step_ * static_cast<double>(values_.size() - 1); }
    const std::vector<double>& values() const { return values_; }

    double front_mass() const { return values_.front(); }
    double overflow_mass() const { return 1.0 - values_.back(); }

    // Right-continuous step evaluation: 0 left of the grid, values[floor]
    // inside, last value beyond the grid.
    double value_at(double x) const;
    // Piecewise-linear evaluation with the same boundary conventions.
    double interp_at(double x) const;

private:
    double origin_;
    double step_;
    std::vector<double> values_;
};

// Samples the analytic CDF at the grid points (exact at every node).
GridCdf discretize(const DurationModel& model, double origin, double step,
                   std::size_t npoints);
GridCdf discretize(const ReturnModel& model, double origin, double step,
                   std::size_t npoints);

// CDF of U + V for positive-support inputs (both origins 0, equal step).
// Midpoint Stieltjes sum with step evaluation of G; first-order in step.
// The overload with `horizon` truncates the output grid; mass pushed past
// the horizon shows up as overflow_mass() of the result.
GridCdf convolve(const GridCdf& f, const GridCdf& g);
GridCdf convolve(const GridCdf& f, const GridCdf& g, double horizon);

// Signed-support variant (log-return use): equal steps, arbitrary origins,
// inner CDF evaluated at half-grid points by linear interpolation
// (second-order, no per-fold drift). The windowed overload evaluates the
// result on an explicit output grid.
GridCdf convolve_signed(const GridCdf& f, const GridCdf& g);
GridCdf convolve_signed(const GridCdf& f, const GridCdf& g, double out_origin,
                        std::size_t out_npoints);

// n-fold convolution of a positive-support CDF on its own grid.
// n = 0 is the unit step at the origin; binary powering is used for n >= 8
// when enabled (changes results only within quadrature tolerance).
GridCdf nfold(const GridCdf& f, std::size_t n, bool binary_powering = true);

namespace detail {
// Raw convolution values before the monotonicity clamp, for tests that
// certify the clamp only ever moves values at round-off scale.
std::vector<double> convolve_raw_values(const GridCdf& f, const GridCdf& g,
                                        double horizon);
}  // namespace detail

}  // namespace rpricer
