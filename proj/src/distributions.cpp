#include "rpricer/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "rpricer/common.hpp"

namespace rpricer {

namespace {

// Uniform draws of exactly 0 would send inverse CDFs to -inf; nudge into the
// open interval.
double clamp_u01(double u) {
    if (u <= 0.0) return 0x1p-54;
    if (u >= 1.0) return 1.0 - 0x1p-53;
    return u;
}

std::vector<double> sorted_checked_sample(std::vector<double> sample, bool positive,
                                          const char* who) {
    if (sample.empty()) {
        throw std::invalid_argument(std::string(who) + ": empirical sample is empty");
    }
    for (double v : sample) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(who) + ": empirical sample has non-finite entries");
        }
        if (positive && v <= 0.0) {
            throw std::invalid_argument(std::string(who) + ": empirical durations must be strictly positive");
        }
    }
    std::sort(sample.begin(), sample.end());
    return sample;
}

}  // namespace

// ---------------------------------------------------------------------------
// DurationModel
// ---------------------------------------------------------------------------

DurationModel::DurationModel(DurationFamily f, double p1, double p2,
                             std::vector<double> sample)
    : family_(f), p1_(p1), p2_(p2), sample_(std::move(sample)) {}

DurationModel DurationModel::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("DurationModel: exponential rate must be positive");
    }
    return {DurationFamily::Exponential, rate, 0.0, {}};
}

DurationModel DurationModel::weibull(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
        throw std::invalid_argument("DurationModel: weibull shape and scale must be positive");
    }
    return {DurationFamily::Weibull, shape, scale, {}};
}

DurationModel DurationModel::lognormal(double log_mean, double log_sd) {
    if (!(log_sd > 0.0) || !std::isfinite(log_mean) || !std::isfinite(log_sd)) {
        throw std::invalid_argument("DurationModel: lognormal log-sd must be positive");
    }
    return {DurationFamily::Lognormal, log_mean, log_sd, {}};
}

DurationModel DurationModel::uniform(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("DurationModel: uniform requires 0 <= lo < hi");
    }
    return {DurationFamily::Uniform, lo, hi, {}};
}

DurationModel DurationModel::empirical(std::vector<double> sample) {
    return {DurationFamily::Empirical, 0.0, 0.0,
            sorted_checked_sample(std::move(sample), true, "DurationModel")};
}

double DurationModel::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    switch (family_) {
        case DurationFamily::Exponential:
            return -std::expm1(-p1_ * x);
        case DurationFamily::Weibull:
            return -std::expm1(-std::pow(x / p2_, p1_));
        case DurationFamily::Lognormal:
            return norm_cdf((std::log(x) - p1_) / p2_);
        case DurationFamily::Uniform: {
            if (x <= p1_) return 0.0;
            if (x >= p2_) return 1.0;
            return (x - p1_) / (p2_ - p1_);
        }
        case DurationFamily::Empirical: {
            const auto it = std::upper_bound(sample_.begin(), sample_.end(), x);
            return static_cast<double>(it - sample_.begin()) /
                   static_cast<double>(sample_.size());
        }
    }
    return 0.0;
}

double DurationModel::mean() const {
    switch (family_) {
        case DurationFamily::Exponential:
            return 1.0 / p1_;
        case DurationFamily::Weibull:
            return p2_ * std::tgamma(1.0 + 1.0 / p1_);
        case DurationFamily::Lognormal:
            return std::exp(p1_ + 0.5 * p2_ * p2_);
        case DurationFamily::Uniform:
            return 0.5 * (p1_ + p2_);
        case DurationFamily::Empirical: {
            KahanSum s;
            for (double v : sample_) s.add(v);
            return s.value() / static_cast<double>(sample_.size());
        }
    }
    return 0.0;
}

double DurationModel::sample(double u01) const {
    const double u = clamp_u01(u01);
    switch (family_) {
        case DurationFamily::Exponential:
            return -std::log1p(-u) / p1_;
        case DurationFamily::Weibull:
            return p2_ * std::pow(-std::log1p(-u), 1.0 / p1_);
        case DurationFamily::Lognormal:
            return std::exp(p1_ + p2_ * norm_inv(u));
        case DurationFamily::Uniform:
            return p1_ + (p2_ - p1_) * u;
        case DurationFamily::Empirical: {
            const auto n = sample_.size();
            auto idx = static_cast<std::size_t>(u * static_cast<double>(n));
            if (idx >= n) idx = n - 1;
            return sample_[idx];
        }
    }
    return 0.0;
}

namespace {
[[noreturn]] void wrong_family(const char* what) {
    throw std::logic_error(std::string("accessor does not match model family: ") + what);
}
}  // namespace

double DurationModel::exponential_rate() const {
    if (family_ != DurationFamily::Exponential) wrong_family("exponential_rate");
    return p1_;
}
double DurationModel::weibull_shape() const {
    if (family_ != DurationFamily::Weibull) wrong_family("weibull_shape");
    return p1_;
}
double DurationModel::weibull_scale() const {
    if (family_ != DurationFamily::Weibull) wrong_family("weibull_scale");
    return p2_;
}
double DurationModel::lognormal_log_mean() const {
    if (family_ != DurationFamily::Lognormal) wrong_family("lognormal_log_mean");
    return p1_;
}
double DurationModel::lognormal_log_sd() const {
    if (family_ != DurationFamily::Lognormal) wrong_family("lognormal_log_sd");
    return p2_;
}
double DurationModel::uniform_lo() const {
    if (family_ != DurationFamily::Uniform) wrong_family("uniform_lo");
    return p1_;
}
double DurationModel::uniform_hi() const {
    if (family_ != DurationFamily::Uniform) wrong_family("uniform_hi");
    return p2_;
}
const std::vector<double>& DurationModel::empirical_sample() const {
    if (family_ != DurationFamily::Empirical) wrong_family("empirical_sample");
    return sample_;
}

// ---------------------------------------------------------------------------
// ReturnModel
// ---------------------------------------------------------------------------

ReturnModel::ReturnModel(ReturnFamily f, double p1, double p2, std::vector<double> sample)
    : family_(f), p1_(p1), p2_(p2), sample_(std::move(sample)) {}

ReturnModel ReturnModel::normal(double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
        throw std::invalid_argument("ReturnModel: normal sd must be positive");
    }
    return {ReturnFamily::Normal, mean, sd, {}};
}

ReturnModel ReturnModel::laplace(double location, double scale) {
    if (!(scale > 0.0) || !std::isfinite(location) || !std::isfinite(scale)) {
        throw std::invalid_argument("ReturnModel: laplace scale must be positive");
    }
    return {ReturnFamily::Laplace, location, scale, {}};
}

ReturnModel ReturnModel::empirical(std::vector<double> sample) {
    return {ReturnFamily::Empirical, 0.0, 0.0,
            sorted_checked_sample(std::move(sample), false, "ReturnModel")};
}

double ReturnModel::cdf(double x) const {
    switch (family_) {
        case ReturnFamily::Normal:
            return norm_cdf((x - p1_) / p2_);
        case ReturnFamily::Laplace: {
            const double z = (x - p1_) / p2_;
            return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        }
        case ReturnFamily::Empirical: {
            const auto it = std::upper_bound(sample_.begin(), sample_.end(), x);
            return static_cast<double>(it - sample_.begin()) /
                   static_cast<double>(sample_.size());
        }
    }
    return 0.0;
}

double ReturnModel::mean() const {
    switch (family_) {
        case ReturnFamily::Normal:
        case ReturnFamily::Laplace:
            return p1_;
        case ReturnFamily::Empirical: {
            KahanSum s;
            for (double v : sample_) s.add(v);
            return s.value() / static_cast<double>(sample_.size());
        }
    }
    return 0.0;
}

double ReturnModel::variance() const {
    switch (family_) {
        case ReturnFamily::Normal:
            return p2_ * p2_;
        case ReturnFamily::Laplace:
            return 2.0 * p2_ * p2_;
        case ReturnFamily::Empirical: {
            const double m = mean();
            KahanSum s;
            for (double v : sample_) s.add((v - m) * (v - m));
            return s.value() / static_cast<double>(sample_.size());
        }
    }
    return 0.0;
}

double ReturnModel::mean_exp() const {
    switch (family_) {
        case ReturnFamily::Normal:
            return std::exp(p1_ + 0.5 * p2_ * p2_);
        case ReturnFamily::Laplace:
            if (p2_ >= 1.0) throw std::domain_error("mgf diverges");
            return std::exp(p1_) / (1.0 - p2_ * p2_);
        case ReturnFamily::Empirical: {
            KahanSum s;
            for (double v : sample_) s.add(std::exp(v));
            return s.value() / static_cast<double>(sample_.size());
        }
    }
    return 0.0;
}

double ReturnModel::sample(double u01) const {
    return quantile(clamp_u01(u01));
}

double ReturnModel::quantile(double p) const {
    switch (family_) {
        case ReturnFamily::Normal:
            return p1_ + p2_ * norm_inv(p);
        case ReturnFamily::Laplace:
            return p < 0.5 ? p1_ + p2_ * std::log(2.0 * p)
                           : p1_ - p2_ * std::log(2.0 * (1.0 - p));
        case ReturnFamily::Empirical: {
            const auto n = sample_.size();
            auto idx = static_cast<std::size_t>(p * static_cast<double>(n));
            if (idx >= n) idx = n - 1;
            return sample_[idx];
        }
    }
    return 0.0;
}

double ReturnModel::normal_mean() const {
    if (family_ != ReturnFamily::Normal) wrong_family("normal_mean");
    return p1_;
}
double ReturnModel::normal_sd() const {
    if (family_ != ReturnFamily::Normal) wrong_family("normal_sd");
    return p2_;
}
double ReturnModel::laplace_location() const {
    if (family_ != ReturnFamily::Laplace) wrong_family("laplace_location");
    return p1_;
}
double ReturnModel::laplace_scale() const {
    if (family_ != ReturnFamily::Laplace) wrong_family("laplace_scale");
    return p2_;
}
const std::vector<double>& ReturnModel::empirical_sample() const {
    if (family_ != ReturnFamily::Empirical) wrong_family("empirical_sample");
    return sample_;
}

double mean_exp(const ReturnModel& model) { return model.mean_exp(); }

// ---------------------------------------------------------------------------
// GridCdf
// ---------------------------------------------------------------------------

GridCdf::GridCdf(double origin, double step, std::vector<double> values)
    : origin_(origin), step_(step), values_(std::move(values)) {
    if (!(step_ > 0.0) || !std::isfinite(step_) || !std::isfinite(origin_)) {
        throw std::invalid_argument("GridCdf: step must be positive and finite");
    }
    if (values_.empty()) {
        throw std::invalid_argument("GridCdf: empty value vector");
    }
    // Monotonicity clamp: running max, clipped to [0,1]. Round-off level dips
    // from quadrature would otherwise poison downstream tail logic.
    double run = 0.0;
    for (double& v : values_) {
        if (v > run) run = v;
        if (run > 1.0) run = 1.0;
        v = run;
    }
}

GridCdf GridCdf::unit_step(double at, double step) {
    return GridCdf(at, step, {1.0});
}

double GridCdf::value_at(double x) const {
    const double p = (x - origin_) / step_;
    if (p < 0.0) return 0.0;
    const auto i = static_cast<std::size_t>(p);
    if (i >= values_.size()) return values_.back();
    return values_[i];
}

double GridCdf::interp_at(double x) const {
    const double p = (x - origin_) / step_;
    if (p <= 0.0) return p < 0.0 ? 0.0 : values_.front();
    if (p >= static_cast<double>(values_.size() - 1)) return values_.back();
    const auto i = static_cast<std::size_t>(p);
    const double frac = p - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
}

// ---------------------------------------------------------------------------
// discretize
// ---------------------------------------------------------------------------

namespace {

template <typename Model>
GridCdf discretize_impl(const Model& model, double origin, double step,
                        std::size_t npoints) {
    if (!(step > 0.0)) throw std::invalid_argument("discretize: step must be positive");
    if (npoints < 2) throw std::invalid_argument("discretize: need at least 2 points");
    std::vector<double> v(npoints);
    for (std::size_t i = 0; i < npoints; ++i) {
        v[i] = model.cdf(origin + step * static_cast<double>(i));
    }
    return GridCdf(origin, step, std::move(v));
}

}  // namespace

GridCdf discretize(const DurationModel& model, double origin, double step,
                   std::size_t npoints) {
    return discretize_impl(model, origin, step, npoints);
}

GridCdf discretize(const ReturnModel& model, double origin, double step,
                   std::size_t npoints) {
    return discretize_impl(model, origin, step, npoints);
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

namespace {

void check_steps(const GridCdf& f, const GridCdf& g) {
    const double h = f.step();
    if (std::abs(g.step() - h) > 1e-9 * h) {
        throw std::invalid_argument("convolve: mismatched step sizes");
    }
}

// Shared kernel. The measure of f is: atom values[0] at the origin, cell
// masses at cell midpoints, atom 1-back beyond the last point (kept at the
// last point so total mass is conserved and the operation stays symmetric).
// g is evaluated either right-continuously (interp=false; first-order) or
// linearly at the half-grid offsets (interp=true; second-order).
std::vector<double> convolve_values(const GridCdf& f, const GridCdf& g,
                                    double out_origin, std::size_t out_npoints,
                                    bool interp) {
    check_steps(f, g);
    const double h = f.step();
    const auto& fv = f.values();
    const auto& gv = g.values();
    const long nf = static_cast<long>(fv.size());
    const long ng = static_cast<long>(gv.size());

    const double base_real = (out_origin - f.origin() - g.origin()) / h;
    const long base = std::lround(base_real);
    if (std::abs(base_real - static_cast<double>(base)) > 1e-6) {
        throw std::invalid_argument("convolve: output grid is not commensurate with inputs");
    }

    const double f0 = fv.front();
    const double fab = 1.0 - fv.back();
    std::vector<double> df(nf > 1 ? nf - 1 : 0);
    for (long j = 0; j + 1 < nf; ++j) df[j] = fv[j + 1] - fv[j];

    auto g_node = [&](long i) -> double {
        if (i < 0) return 0.0;
        if (i >= ng) return gv[ng - 1];
        return gv[i];
    };
    // Value at the half-grid point between nodes i and i+1.
    auto g_half = [&](long i) -> double {
        if (interp) return 0.5 * (g_node(i) + g_node(i + 1));
        return g_node(i);
    };

    std::vector<double> out(out_npoints);
    auto cell = [&](std::size_t k) {
        const long kk = base + static_cast<long>(k);
        KahanSum acc;
        if (f0 > 0.0) acc.add(f0 * g_node(kk));
        for (long j = 0; j + 1 < nf; ++j) {
            const double w = g_half(kk - 1 - j);
            if (w != 0.0) acc.add(w * df[j]);
        }
        if (fab > 0.0) acc.add(fab * g_node(kk - (nf - 1)));
        out[k] = acc.value();
    };
    const std::size_t work = out_npoints * static_cast<std::size_t>(nf);
    if (work >= (std::size_t{1} << 22)) {
        parallel_for(out_npoints, cell);
    } else {
        for (std::size_t k = 0; k < out_npoints; ++k) cell(k);
    }
    return out;
}

std::size_t positive_out_npoints(const GridCdf& f, const GridCdf& g, double horizon) {
    const double h = f.step();
    const double span = std::min(horizon, f.max_x() + g.max_x());
    if (span < 0.0) throw std::invalid_argument("convolve: output lies entirely beyond the horizon");
    return static_cast<std::size_t>(std::floor(span / h + 1e-9)) + 1;
}

}  // namespace

namespace detail {
std::vector<double> convolve_raw_values(const GridCdf& f, const GridCdf& g,
                                        double horizon) {
    return convolve_values(f, g, f.origin() + g.origin(),
                           positive_out_npoints(f, g, horizon), false);
}
}  // namespace detail

GridCdf convolve(const GridCdf& f, const GridCdf& g, double horizon) {
    const double out_origin = f.origin() + g.origin();
    const std::size_t n = positive_out_npoints(f, g, horizon);
    return GridCdf(out_origin, f.step(), convolve_values(f, g, out_origin, n, false));
}

GridCdf convolve(const GridCdf& f, const GridCdf& g) {
    return convolve(f, g, f.max_x() + g.max_x());
}

GridCdf convolve_signed(const GridCdf& f, const GridCdf& g, double out_origin,
                        std::size_t out_npoints) {
    return GridCdf(out_origin, f.step(),
                   convolve_values(f, g, out_origin, out_npoints, true));
}

GridCdf convolve_signed(const GridCdf& f, const GridCdf& g) {
    const double out_origin = f.origin() + g.origin();
    const std::size_t n = f.size() + g.size() - 1;
    return convolve_signed(f, g, out_origin, n);
}

GridCdf nfold(const GridCdf& f, std::size_t n, bool binary_powering) {
    if (n == 0) return GridCdf::unit_step(f.origin(), f.step());
    if (n == 1) return f;
    const double horizon = f.max_x();
    if (!binary_powering || n < 8) {
        GridCdf acc = f;
        for (std::size_t k = 1; k < n; ++k) acc = convolve(acc, f, horizon);
        return acc;
    }
    // Square-and-multiply; truncation to the fixed horizon is lossless for
    // values on [0, horizon] because positive-support mass beyond it cannot
    // contribute there.
    GridCdf acc = GridCdf::unit_step(f.origin(), f.step());
    GridCdf base = f;
    std::size_t m = n;
    for (;;) {
        if (m & 1) acc = convolve(acc, base, horizon);
        m >>= 1;
        if (m == 0) break;
        base = convolve(base, base, horizon);
    }
    return acc;
}

}  // namespace rpricer
