#include "rpricer/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rpricer/common.hpp"

namespace rpricer {

ShiftedReturnModel emm_shift(const ReturnModel& model) {
    return ShiftedReturnModel{model, std::log(model.mean_exp())};
}

namespace {

double normal_component_escape(double L, double mu, double sigma, std::size_t n) {
    const double m = mu * static_cast<double>(n);
    const double s = sigma * std::sqrt(static_cast<double>(n));
    return norm_cdf((-L - m) / s) + norm_cdf(-(L - m) / s);
}

}  // namespace

TerminalLogPriceLaw terminal_law(const ShiftedReturnModel& shifted,
                                 const CountingLaw& weights, const LogGridSpec& grid,
                                 double escape_tol) {
    if (weights.probs.empty()) {
        throw std::invalid_argument("terminal_law: empty counting law");
    }
    if (weights.tail_mass > 1e-2) {
        throw std::invalid_argument("terminal_law: counting tail mass too large");
    }
    const std::size_t n_max = weights.probs.size() - 1;
    const double mu = shifted.mean();
    const double sigma_raw = std::sqrt(std::max(0.0, shifted.variance()));
    const double sigma_eff = std::max(sigma_raw, 1e-9);
    const bool auto_width = !(grid.half_width > 0.0);

    const double nn = static_cast<double>(std::max<std::size_t>(n_max, 1));
    double L = grid.half_width;
    if (auto_width) {
        L = 10.0 * sigma_eff * std::sqrt(nn) + std::abs(mu) * nn;
        // Single-fold tails can dominate the sqrt(n) envelope (Laplace,
        // skewed empiricals); widen to the extreme base quantiles.
        const double qlo = shifted.quantile(1e-13);
        const double qhi = shifted.quantile(1.0 - 1e-13);
        L = std::max({L, std::abs(qlo), std::abs(qhi)});
    }

    double h = grid.step > 0.0 ? grid.step : sigma_eff / 32.0;
    const std::size_t max_half_cells = std::size_t{1} << 20;

    TerminalLogPriceLaw law;
    law.weights_ = weights;
    law.normal_ = shifted.base.family() == ReturnFamily::Normal;
    if (law.normal_) {
        law.mu_ = mu;
        law.sigma_ = shifted.base.normal_sd();
    }

    for (int attempt = 0;; ++attempt) {
        auto half_cells = static_cast<std::size_t>(std::ceil(L / h - 1e-9));
        if (half_cells < 4) half_cells = 4;
        if (half_cells > max_half_cells) {
            h = L / static_cast<double>(max_half_cells);
            half_cells = max_half_cells;
        }
        const double Lg = h * static_cast<double>(half_cells);
        law.origin_ = -Lg;
        law.step_ = h;
        law.npoints_ = 2 * half_cells + 1;
        law.comps_.clear();

        double escape = 0.0;
        if (law.normal_) {
            for (std::size_t n = 1; n <= n_max; ++n) {
                escape = std::max(escape,
                                  normal_component_escape(Lg, law.mu_, law.sigma_, n));
            }
        } else if (n_max >= 1) {
            const GridCdf base = [&] {
                std::vector<double> v(law.npoints_);
                for (std::size_t i = 0; i < law.npoints_; ++i) {
                    v[i] = shifted.cdf(law.origin_ + h * static_cast<double>(i));
                }
                return GridCdf(law.origin_, h, std::move(v));
            }();
            law.comps_.reserve(n_max);
            law.comps_.push_back(base.values());
            for (std::size_t n = 2; n <= n_max; ++n) {
                GridCdf prev(law.origin_, h, law.comps_.back());
                law.comps_.push_back(
                    convolve_signed(base, prev, law.origin_, law.npoints_).values());
            }
            escape = law.max_component_escape();
        }

        if (escape <= escape_tol || n_max == 0) return law;
        if (!auto_width && attempt == 0) {
            // Estimate the half-width that would pass, from the normal
            // envelope of the widest component.
            const double z = norm_inv(1.0 - 0.25 * escape_tol);
            const double need =
                std::abs(mu) * nn + 1.2 * sigma_eff * std::sqrt(nn) * z;
            throw std::runtime_error(
                "grid too narrow: component mass escapes the log grid; "
                "required half-width is about " +
                std::to_string(std::max(need, 1.5 * Lg)));
        }
        if (attempt >= 40) {
            throw std::runtime_error("grid too narrow: auto-widening did not converge");
        }
        L = 1.5 * Lg;
    }
}

double TerminalLogPriceLaw::component_cdf(std::size_t n, double x) const {
    if (n == 0 || n >= weights_.probs.size()) {
        throw std::invalid_argument("component_cdf: n out of range");
    }
    if (normal_) {
        const double m = mu_ * static_cast<double>(n);
        const double s = sigma_ * std::sqrt(static_cast<double>(n));
        return norm_cdf((x - m) / s);
    }
    const auto& v = comps_[n - 1];
    const double p = (x - origin_) / step_;
    if (p <= 0.0) return p < 0.0 ? 0.0 : v.front();
    if (p >= static_cast<double>(v.size() - 1)) return v.back();
    const auto i = static_cast<std::size_t>(p);
    const double frac = p - static_cast<double>(i);
    return v[i] + frac * (v[i + 1] - v[i]);
}

void TerminalLogPriceLaw::component_values(std::size_t n, std::vector<double>& out) const {
    if (n == 0 || n >= weights_.probs.size()) {
        throw std::invalid_argument("component_values: n out of range");
    }
    if (normal_) {
        out.resize(npoints_);
        const double m = mu_ * static_cast<double>(n);
        const double s = sigma_ * std::sqrt(static_cast<double>(n));
        for (std::size_t i = 0; i < npoints_; ++i) {
            out[i] = norm_cdf((origin_ + step_ * static_cast<double>(i) - m) / s);
        }
        return;
    }
    out = comps_[n - 1];
}

double TerminalLogPriceLaw::component_mean_log(std::size_t n) const {
    if (normal_) return mu_ * static_cast<double>(n);
    // Quadrature first moment of the grid measure.
    const auto& v = comps_.at(n - 1);
    KahanSum s;
    s.add(v.front() * origin_);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double mid = origin_ + step_ * (static_cast<double>(i) + 0.5);
        s.add(mid * (v[i + 1] - v[i]));
    }
    s.add((1.0 - v.back()) * (origin_ + step_ * static_cast<double>(v.size() - 1)));
    return s.value();
}

double TerminalLogPriceLaw::component_variance_log(std::size_t n) const {
    if (normal_) return sigma_ * sigma_ * static_cast<double>(n);
    const double m = component_mean_log(n);
    const auto& v = comps_.at(n - 1);
    KahanSum s;
    s.add(v.front() * (origin_ - m) * (origin_ - m));
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double mid = origin_ + step_ * (static_cast<double>(i) + 0.5);
        s.add((mid - m) * (mid - m) * (v[i + 1] - v[i]));
    }
    const double top = origin_ + step_ * static_cast<double>(v.size() - 1);
    s.add((1.0 - v.back()) * (top - m) * (top - m));
    return s.value();
}

double TerminalLogPriceLaw::max_component_escape() const {
    const std::size_t n_max = weights_.probs.size() - 1;
    double escape = 0.0;
    if (normal_) {
        const double L = -origin_;
        for (std::size_t n = 1; n <= n_max; ++n) {
            escape = std::max(escape, normal_component_escape(L, mu_, sigma_, n));
        }
        return escape;
    }
    for (const auto& v : comps_) {
        escape = std::max(escape, v.front() + (1.0 - v.back()));
    }
    return escape;
}

double TerminalLogPriceLaw::mixture_cdf_log(double x) const {
    KahanSum s;
    if (x >= 0.0) s.add(weights_.probs[0]);
    for (std::size_t n = 1; n < weights_.probs.size(); ++n) {
        s.add(weights_.probs[n] * component_cdf(n, x));
    }
    return s.value();
}

double TerminalLogPriceLaw::mixture_cdf_price(double u) const {
    if (u <= 0.0) return 0.0;
    return mixture_cdf_log(std::log(u));
}

double TerminalLogPriceLaw::mixture_exp_mean() const {
    KahanSum total;
    total.add(weights_.probs[0]);  // atom at log-price 0
    std::vector<double> buf;
    for (std::size_t n = 1; n < weights_.probs.size(); ++n) {
        const std::vector<double>* v = &buf;
        if (normal_) {
            component_values(n, buf);
        } else {
            v = &comps_[n - 1];
        }
        KahanSum comp;
        comp.add(v->front() * std::exp(origin_));
        for (std::size_t i = 0; i + 1 < v->size(); ++i) {
            const double mid = origin_ + step_ * (static_cast<double>(i) + 0.5);
            comp.add(std::exp(mid) * ((*v)[i + 1] - (*v)[i]));
        }
        comp.add((1.0 - v->back()) *
                 std::exp(origin_ + step_ * static_cast<double>(v->size() - 1)));
        total.add(weights_.probs[n] * comp.value());
    }
    total.add(weights_.tail_mass);  // E[e^X | n] = 1 exactly for every n
    return total.value();
}

}  // namespace rpricer
