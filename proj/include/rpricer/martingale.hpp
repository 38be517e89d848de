#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rpricer/distributions.hpp"
#include "rpricer/renewal.hpp"

namespace rpricer {

// Return law under the equivalent martingale measure: Y~ = Y - a with
// a = log E[e^Y], so that E[e^{Y~}] = 1.
struct ShiftedReturnModel {
    ReturnModel base;
    double shift = 0.0;

    double cdf(double x) const { return base.cdf(x + shift); }
    double sample(double u01) const { return base.sample(u01) - shift; }
    double quantile(double p) const { return base.quantile(p) - shift; }
    double mean() const { return base.mean() - shift; }
    double variance() const { return base.variance(); }
    // E[e^{Y - a}]; equals 1 up to round-off by construction.
    double mean_exp_shifted() const { return base.mean_exp() * std::exp(-shift); }
};

ShiftedReturnModel emm_shift(const ReturnModel& model);

struct LogGridSpec {
    double half_width = 0.0;  // 0 = auto: 10*sigma*sqrt(N_max) + |mu|*N_max, tail-widened
    double step = 0.0;        // 0 = auto: sigma/32
};

// Law of the terminal log price log S~(T_M) as a counting-law mixture of
// n-fold convolutions of the shifted return law, carried on one symmetric
// log grid. The n = 0 component is an exact atom at log-price 0. Normal
// bases use closed-form components; generic bases use the signed
// convolution recursion.
class TerminalLogPriceLaw {
public:
    const CountingLaw& weights() const { return weights_; }
    double grid_origin() const { return origin_; }
    double grid_step() const { return step_; }
    std::size_t grid_size() const { return npoints_; }
    std::size_t n_components() const { return weights_.probs.size(); }
    bool normal_closed_form() const { return normal_; }

    // CDF of component n >= 1 at x: analytic for the Normal path, linear
    // interpolation on the grid otherwise.
    double component_cdf(std::size_t n, double x) const;
    // Grid values of component n >= 1 (out is resized to grid_size()).
    void component_values(std::size_t n, std::vector<double>& out) const;
    double component_mean_log(std::size_t n) const;
    double component_variance_log(std::size_t n) const;
    // Worst below+above grid escape over components 1..N_max.
    double max_component_escape() const;

    double mixture_cdf_log(double x) const;    // excludes counting tail mass
    double mixture_cdf_price(double u) const;  // evaluates at log u
    // Quadrature estimate of E[e^X] over the grid; counting tail counted at
    // the numeraire (component means are exactly 1 under the e.m.m.).
    double mixture_exp_mean() const;

private:
    friend TerminalLogPriceLaw terminal_law(const ShiftedReturnModel&,
                                            const CountingLaw&, const LogGridSpec&,
                                            double);
    CountingLaw weights_;
    double origin_ = 0.0;
    double step_ = 0.0;
    std::size_t npoints_ = 0;
    bool normal_ = false;
    double mu_ = 0.0;     // shifted per-tick mean (Normal path)
    double sigma_ = 0.0;  // per-tick sd (Normal path)
    std::vector<std::vector<double>> comps_;  // generic path, index n-1
};

// Builds the terminal law for the given counting weights. Throws
// "grid too narrow" (reporting the required half-width) if any component
// leaks more than escape_tol past the grid edges on a user-fixed grid;
// auto-sized grids are widened until the leak is negligible.
TerminalLogPriceLaw terminal_law(const ShiftedReturnModel& shifted,
                                 const CountingLaw& weights,
                                 const LogGridSpec& grid = {},
                                 double escape_tol = 1e-9);

}  // namespace rpricer
