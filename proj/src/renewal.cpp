#include "rpricer/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rpricer/common.hpp"

namespace rpricer {

namespace {

struct TimeGrid {
    double h = 0.0;
    std::size_t cells = 0;  // grid points = cells + 1, spanning [0, T]
};

TimeGrid make_time_grid(double T, const RenewalNumerics& num) {
    const double h_req = num.h_time > 0.0 ? num.h_time : T / 2000.0;
    auto cells = static_cast<std::size_t>(std::llround(std::ceil(T / h_req - 1e-9)));
    if (cells < 1) cells = 1;
    return {T / static_cast<double>(cells), cells};
}

void check_counting_args(double T, const RenewalNumerics& num) {
    if (!(T >= 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("counting_pmf: horizon T must be nonnegative");
    }
    if (!(num.eps_tail > 0.0 && num.eps_tail < 1.0)) {
        throw std::invalid_argument("counting_pmf: eps_tail must lie in (0,1)");
    }
}

CountingLaw poisson_law(double lam, double T, const RenewalNumerics& num) {
    CountingLaw law;
    law.horizon = T;
    double p = std::exp(-lam);
    KahanSum cum;
    cum.add(p);
    law.probs.push_back(p);
    std::size_t n = 1;
    while (cum.value() < 1.0 - num.eps_tail) {
        if (n > num.n_hard_cap) throw std::runtime_error("tail not converged");
        p *= lam / static_cast<double>(n);
        law.probs.push_back(p);
        cum.add(p);
        ++n;
    }
    law.tail_mass = std::max(0.0, 1.0 - cum.value());
    return law;
}

// 1 - e^{-x} sum_{k<n} x^k/k!  (Erlang(n) CDF at x; n = 0 gives 1).
double erlang_cdf(std::size_t n, double x) {
    if (x <= 0.0) return n == 0 ? 1.0 : 0.0;
    double term = std::exp(-x);
    KahanSum s;
    s.add(term);
    for (std::size_t k = 1; k < n; ++k) {
        term *= x / static_cast<double>(k);
        s.add(term);
    }
    return n == 0 ? 1.0 : 1.0 - s.value();
}

// P(N(T) = n) quadrature at horizon (cells_used * h) on a survival table:
// sum_j S[cells_used-1-j] * (F[j+1] - F[j]).
double pmf_quadrature(const std::vector<double>& survival,
                      const std::vector<double>& fold, std::size_t cells_used) {
    KahanSum acc;
    for (std::size_t j = 0; j < cells_used; ++j) {
        acc.add(survival[cells_used - 1 - j] * (fold[j + 1] - fold[j]));
    }
    return acc.value();
}

}  // namespace

CountingLaw counting_pmf(const DurationModel& durations, double T,
                         const RenewalNumerics& num) {
    check_counting_args(T, num);
    if (T == 0.0) return CountingLaw{{1.0}, 0.0, 0.0};
    if (num.use_fast_paths && durations.family() == DurationFamily::Exponential) {
        return poisson_law(durations.exponential_rate() * T, T, num);
    }

    const TimeGrid grid = make_time_grid(T, num);
    const std::size_t m = grid.cells;
    const GridCdf fj = discretize(durations, 0.0, grid.h, m + 1);
    std::vector<double> survival(m + 1);
    for (std::size_t i = 0; i <= m; ++i) survival[i] = 1.0 - fj.values()[i];

    CountingLaw law;
    law.horizon = T;
    law.probs.push_back(survival[m]);  // P(N=0) = 1 - F_J(T)
    KahanSum cum;
    cum.add(law.probs.back());

    GridCdf fold = fj;  // F_J^{*k}, k = 1, 2, ...
    for (std::size_t k = 1; cum.value() < 1.0 - num.eps_tail; ++k) {
        if (k > num.n_hard_cap) throw std::runtime_error("tail not converged");
        const double p = pmf_quadrature(survival, fold.values(), m);
        law.probs.push_back(p);
        cum.add(p);
        if (cum.value() >= 1.0 - num.eps_tail) break;
        fold = convolve(fold, fj, T);
    }
    law.tail_mass = std::max(0.0, 1.0 - cum.value());
    return law;
}

double counting_pmf_check(const DurationModel& durations, double T, std::size_t n,
                          const RenewalNumerics& num) {
    check_counting_args(T, num);
    if (T == 0.0) return n == 0 ? 1.0 : 0.0;
    if (num.use_fast_paths && durations.family() == DurationFamily::Exponential) {
        const double x = durations.exponential_rate() * T;
        return erlang_cdf(n, x) - erlang_cdf(n + 1, x);
    }
    const TimeGrid grid = make_time_grid(T, num);
    const GridCdf fj = discretize(durations, 0.0, grid.h, grid.cells + 1);
    // Iterated (non-powered) folds so both routes share the discretization.
    const GridCdf fn = nfold(fj, n, false);
    const GridCdf fn1 = convolve(fn, fj, T);
    return fn.values().back() - fn1.values().back();
}

ResidualLifetimeLaw residual_lifetime(const DurationModel& durations, double t,
                                      int n_t, double u_max,
                                      const RenewalNumerics& num) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("residual_lifetime: t must be nonnegative");
    }
    if (n_t < 0) throw std::invalid_argument("residual_lifetime: n_t must be nonnegative");
    if (!(u_max > 0.0)) throw std::invalid_argument("residual_lifetime: u_max must be positive");

    const TimeGrid ugrid = make_time_grid(u_max, num);
    const std::size_t mu = ugrid.cells;
    std::vector<double> values(mu + 1);

    const bool memoryless =
        num.use_fast_paths && durations.family() == DurationFamily::Exponential;
    if (memoryless) {
        const double lam = durations.exponential_rate();
        for (std::size_t k = 0; k <= mu; ++k) {
            values[k] = -std::expm1(-lam * ugrid.h * static_cast<double>(k));
        }
        return {t, n_t, GridCdf(0.0, ugrid.h, std::move(values))};
    }

    if (n_t == 0 || t == 0.0) {
        // F^{*0} is a unit atom at 0, so Eq-like ratio reduces to
        // (F_J(u+t) - F_J(t)) / (1 - F_J(t)); exact, no quadrature.
        if (n_t != 0) {
            throw std::runtime_error("conditioning event has negligible probability");
        }
        const double den = 1.0 - durations.cdf(t);
        if (den < num.denominator_floor) {
            throw std::runtime_error("conditioning event has negligible probability");
        }
        const double ft = durations.cdf(t);
        for (std::size_t k = 0; k <= mu; ++k) {
            values[k] = (durations.cdf(ugrid.h * static_cast<double>(k) + t) - ft) / den;
        }
        return {t, n_t, GridCdf(0.0, ugrid.h, std::move(values))};
    }

    // Generic case: Stieltjes quadrature against dF_J^{*n_t} on [0, t], with
    // F_J evaluated analytically at the cell midpoints.
    const TimeGrid tgrid = make_time_grid(t, num);
    const std::size_t mt = tgrid.cells;
    const GridCdf fj_t = discretize(durations, 0.0, tgrid.h, mt + 1);
    const GridCdf fold = nfold(fj_t, static_cast<std::size_t>(n_t), false);
    const auto& fv = fold.values();

    std::vector<double> mid_cdf(mt);  // F_J(t - w_j*)
    std::vector<double> dmass(mt);
    for (std::size_t j = 0; j < mt; ++j) {
        const double wmid = (static_cast<double>(j) + 0.5) * tgrid.h;
        mid_cdf[j] = durations.cdf(t - wmid);
        dmass[j] = fv[j + 1] - fv[j];
    }
    KahanSum den_acc;
    for (std::size_t j = 0; j < mt; ++j) den_acc.add((1.0 - mid_cdf[j]) * dmass[j]);
    const double den = den_acc.value();
    if (den < num.denominator_floor) {
        throw std::runtime_error("conditioning event has negligible probability");
    }

    parallel_for(mu + 1, [&](std::size_t k) {
        const double u = ugrid.h * static_cast<double>(k);
        KahanSum acc;
        for (std::size_t j = 0; j < mt; ++j) {
            const double wmid = (static_cast<double>(j) + 0.5) * tgrid.h;
            acc.add((durations.cdf(u + t - wmid) - mid_cdf[j]) * dmass[j]);
        }
        values[k] = acc.value() / den;
    });
    return {t, n_t, GridCdf(0.0, ugrid.h, std::move(values))};
}

CountingLaw conditional_counting_pmf(const DurationModel& durations, double t,
                                     int n_t, double T_M,
                                     const RenewalNumerics& num) {
    if (!(t >= 0.0) || !(T_M > t) || !std::isfinite(T_M)) {
        throw std::invalid_argument("conditional_counting_pmf: need 0 <= t < T_M");
    }
    if (!(num.eps_tail > 0.0 && num.eps_tail < 1.0)) {
        throw std::invalid_argument("conditional_counting_pmf: eps_tail must lie in (0,1)");
    }
    const double U = T_M - t;
    if (num.use_fast_paths && durations.family() == DurationFamily::Exponential) {
        return poisson_law(durations.exponential_rate() * U, U, num);
    }
    if (t == 0.0 && n_t == 0) return counting_pmf(durations, U, num);

    const ResidualLifetimeLaw res = residual_lifetime(durations, t, n_t, U, num);
    const auto& rv = res.cdf.values();
    const std::size_t M = rv.size() - 1;
    const double h = res.cdf.step();
    std::vector<double> dres(M);
    for (std::size_t j = 0; j < M; ++j) dres[j] = rv[j + 1] - rv[j];

    const GridCdf fj = discretize(durations, 0.0, h, M + 1);
    std::vector<double> survival(M + 1);
    for (std::size_t i = 0; i <= M; ++i) survival[i] = 1.0 - fj.values()[i];

    CountingLaw law;
    law.horizon = U;
    law.probs.push_back(1.0 - rv[M]);  // next trade falls after maturity
    KahanSum cum;
    cum.add(law.probs.back());

    // P(n) = sum_j P(N(tau_j) = n-1) dres_j with tau_j = U - u_j*; each inner
    // value is a fresh survival quadrature on the shared master grid (no
    // interpolation). inner[j] holds P(N(tau_j) = k) for the current k.
    std::vector<double> inner(M);
    GridCdf fold = fj;
    for (std::size_t k = 0; cum.value() < 1.0 - num.eps_tail; ++k) {
        if (k > num.n_hard_cap) throw std::runtime_error("tail not converged");
        if (k == 0) {
            for (std::size_t j = 0; j < M; ++j) inner[j] = survival[M - 1 - j];
        } else {
            const auto& fv = fold.values();
            parallel_for(M, [&](std::size_t j) {
                inner[j] = pmf_quadrature(survival, fv, M - j);
            });
            // fold is F^{*k}; advance to F^{*(k+1)} for the next pass
            fold = convolve(fold, fj, U);
        }
        KahanSum p;
        for (std::size_t j = 0; j < M; ++j) p.add(inner[j] * dres[j]);
        law.probs.push_back(p.value());
        cum.add(p.value());
    }
    law.tail_mass = std::max(0.0, 1.0 - cum.value());
    return law;
}

}  // namespace rpricer
