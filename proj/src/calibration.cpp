#include "rpricer/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rpricer/common.hpp"

namespace rpricer {

TickSeries::TickSeries(std::vector<double> epochs_, std::vector<double> prices_)
    : epochs(std::move(epochs_)), prices(std::move(prices_)) {
    if (epochs.size() != prices.size()) {
        throw std::invalid_argument("TickSeries: epochs and prices differ in length");
    }
    if (epochs.size() < 2) {
        throw std::invalid_argument("TickSeries: need at least 2 ticks");
    }
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        if (!std::isfinite(epochs[i]) || epochs[i] < 0.0) {
            throw std::invalid_argument("TickSeries: epochs must be nonnegative seconds");
        }
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
            throw std::invalid_argument("TickSeries: prices must be positive");
        }
        if (i > 0 && !(epochs[i] > epochs[i - 1])) {
            throw std::invalid_argument(
                "TickSeries: epochs must be strictly increasing (equal timestamps rejected)");
        }
    }
}

std::vector<double> durations_of(const TickSeries& series, bool from_open) {
    std::vector<double> out;
    out.reserve(series.epochs.size());
    if (from_open) {
        if (!(series.epochs.front() > 0.0)) {
            throw std::invalid_argument(
                "durations_of: first epoch must be positive under the T_0 = 0 convention");
        }
        out.push_back(series.epochs.front());
    }
    for (std::size_t i = 1; i < series.epochs.size(); ++i) {
        out.push_back(series.epochs[i] - series.epochs[i - 1]);
    }
    return out;
}

std::vector<double> returns_of(const TickSeries& series) {
    std::vector<double> out;
    out.reserve(series.prices.size() - 1);
    for (std::size_t i = 1; i < series.prices.size(); ++i) {
        out.push_back(std::log(series.prices[i] / series.prices[i - 1]));
    }
    return out;
}

namespace {

void require_nonempty(const std::vector<double>& s) {
    if (s.empty()) throw std::invalid_argument("fit: empty sample");
}

void require_positive(const std::vector<double>& s) {
    for (double v : s) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("fit: samples must be positive");
        }
    }
}

double kahan_mean(const std::vector<double>& s) {
    KahanSum a;
    for (double v : s) a.add(v);
    return a.value() / static_cast<double>(s.size());
}

struct MeanSd {
    double mean;
    double sd;  // MLE (1/n)
};

MeanSd mean_sd(const std::vector<double>& s) {
    const double m = kahan_mean(s);
    KahanSum a;
    for (double v : s) a.add((v - m) * (v - m));
    return {m, std::sqrt(a.value() / static_cast<double>(s.size()))};
}

// Profiled Weibull shape equation:
//   g(k) = sum(x^k ln x)/sum(x^k) - 1/k - mean(ln x) = 0,
// computed on log-centered data for overflow safety. g is increasing in k.
DurationModel fit_weibull(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(samples[i]);
    const MeanSd lg = mean_sd(logs);
    if (lg.sd == 0.0) {
        throw std::invalid_argument("fit: degenerate (constant) sample for Weibull");
    }
    for (double& l : logs) l -= lg.mean;  // geometric-mean normalization

    auto g_and_dg = [&](double k, double& g, double& dg) {
        const double lmax = *std::max_element(logs.begin(), logs.end());
        KahanSum s0;
        KahanSum s1;
        KahanSum s2;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(k * (logs[i] - lmax));
            s0.add(e);
            s1.add(e * logs[i]);
            s2.add(e * logs[i] * logs[i]);
        }
        const double r1 = s1.value() / s0.value();
        const double r2 = s2.value() / s0.value();
        g = r1 - 1.0 / k;  // mean(ln x) is 0 after centering
        dg = (r2 - r1 * r1) + 1.0 / (k * k);
    };

    // Menon-style moment start, then safeguarded Newton within a bracket.
    double k = std::min(100.0, std::max(0.02, 1.2 / lg.sd));
    double klo = 1e-3;
    double khi = 1e3;
    double g = 0.0;
    double dg = 0.0;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        g_and_dg(k, g, dg);
        if (g > 0.0) {
            khi = std::min(khi, k);
        } else {
            klo = std::max(klo, k);
        }
        double next = k - g / dg;
        if (!std::isfinite(next) || next <= klo || next >= khi) {
            next = 0.5 * (klo + khi);
        }
        if (std::abs(next - k) <= 1e-10 * std::max(1.0, k)) {
            k = next;
            converged = true;
            break;
        }
        k = next;
    }
    if (!converged) {
        throw std::runtime_error("fit: Weibull shape iteration did not converge");
    }
    // Scale from the profiled likelihood, undoing the normalization.
    const double lmax = *std::max_element(logs.begin(), logs.end());
    KahanSum s0;
    for (std::size_t i = 0; i < n; ++i) s0.add(std::exp(k * (logs[i] - lmax)));
    const double scale =
        std::exp(lg.mean + lmax + std::log(s0.value() / static_cast<double>(n)) / k);
    return DurationModel::weibull(k, scale);
}

}  // namespace

DurationModel fit_duration(const std::vector<double>& samples, DurationFamily family) {
    require_nonempty(samples);
    switch (family) {
        case DurationFamily::Exponential: {
            require_positive(samples);
            KahanSum s;
            for (double v : samples) s.add(v);
            return DurationModel::exponential(static_cast<double>(samples.size()) /
                                              s.value());
        }
        case DurationFamily::Weibull:
            require_positive(samples);
            return fit_weibull(samples);
        case DurationFamily::Lognormal: {
            require_positive(samples);
            std::vector<double> logs(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i) logs[i] = std::log(samples[i]);
            const MeanSd ms = mean_sd(logs);
            if (ms.sd == 0.0) {
                throw std::invalid_argument("fit: degenerate (constant) sample for Lognormal");
            }
            return DurationModel::lognormal(ms.mean, ms.sd);
        }
        case DurationFamily::Uniform: {
            require_positive(samples);
            const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
            if (!(*hi > *lo)) {
                throw std::invalid_argument("fit: degenerate (constant) sample for Uniform");
            }
            return DurationModel::uniform(*lo, *hi);
        }
        case DurationFamily::Empirical:
            return DurationModel::empirical(samples);
    }
    throw std::invalid_argument("fit: unknown duration family");
}

ReturnModel fit_return(const std::vector<double>& samples, ReturnFamily family) {
    require_nonempty(samples);
    switch (family) {
        case ReturnFamily::Normal: {
            const MeanSd ms = mean_sd(samples);
            if (ms.sd == 0.0) {
                throw std::invalid_argument("fit: zero-variance sample for Normal");
            }
            return ReturnModel::normal(ms.mean, ms.sd);
        }
        case ReturnFamily::Laplace: {
            std::vector<double> sorted = samples;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            const double med = n % 2 == 1
                                   ? sorted[n / 2]
                                   : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
            KahanSum dev;
            for (double v : sorted) dev.add(std::abs(v - med));
            const double b = dev.value() / static_cast<double>(n);
            if (!(b > 0.0)) {
                throw std::invalid_argument("fit: zero-dispersion sample for Laplace");
            }
            return ReturnModel::laplace(med, b);
        }
        case ReturnFamily::Empirical:
            return ReturnModel::empirical(samples);
    }
    throw std::invalid_argument("fit: unknown return family");
}

}  // namespace rpricer
