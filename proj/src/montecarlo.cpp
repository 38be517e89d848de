#include "rpricer/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "rpricer/common.hpp"

namespace rpricer {

namespace {

constexpr std::size_t kBlock = 8192;
constexpr double kMinAcceptRate = 1e-4;

class PathRng {
public:
    PathRng(std::uint64_t seed, std::size_t path_index)
        : eng_(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (path_index + 1)))) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1p-53; }

private:
    std::mt19937_64 eng_;
};

struct PathOutcome {
    bool accepted = false;
    std::size_t jumps = 0;     // trades counted toward the terminal price
    double residual = 0.0;     // first epoch after t, minus t (conditioned runs)
};

// Walks the renewal sequence for one path. Unconditioned: counts trades in
// (0, horizon]. Conditioned: rejects unless N(t) = n_t, then keeps counting
// the same sequence up to the maturity.
PathOutcome walk(const SimConfig& cfg, PathRng& rng) {
    PathOutcome out;
    if (!cfg.conditioned) {
        double epoch = 0.0;
        std::size_t n = 0;
        for (;;) {
            epoch += cfg.durations.sample(rng.uniform());
            if (epoch > cfg.horizon) break;
            ++n;
        }
        out.accepted = true;
        out.jumps = n;
        return out;
    }
    const bool restart = !cfg.force_generic_conditioning &&
                         cfg.durations.family() == DurationFamily::Exponential;
    if (restart) {
        double epoch = cfg.t;
        std::size_t n = 0;
        double first = 0.0;
        for (;;) {
            epoch += cfg.durations.sample(rng.uniform());
            if (n == 0) first = epoch;
            if (epoch > cfg.horizon) break;
            ++n;
        }
        out.accepted = true;
        out.jumps = n;
        out.residual = first - cfg.t;
        return out;
    }
    double epoch = 0.0;
    std::size_t n = 0;
    for (;;) {
        const double next = epoch + cfg.durations.sample(rng.uniform());
        if (next > cfg.t) {
            if (n != static_cast<std::size_t>(cfg.n_t)) return out;  // rejected
            out.accepted = true;
            out.residual = next - cfg.t;
            epoch = next;
            break;
        }
        epoch = next;
        if (++n > static_cast<std::size_t>(cfg.n_t)) return out;  // already too many
    }
    // Trades in (t, T_M]: the epoch straddling t counts if it lands by T_M.
    std::size_t n2 = 0;
    while (epoch <= cfg.horizon) {
        ++n2;
        epoch += cfg.durations.sample(rng.uniform());
    }
    out.jumps = n2;
    return out;
}

void check_config(const SimConfig& cfg) {
    if (cfg.n_paths == 0) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
    if (!(cfg.horizon >= 0.0) || !std::isfinite(cfg.horizon)) {
        throw std::invalid_argument("SimConfig: horizon must be nonnegative");
    }
    if (cfg.conditioned && (!(cfg.t >= 0.0) || cfg.t >= cfg.horizon || cfg.n_t < 0)) {
        throw std::invalid_argument("SimConfig: conditioning needs 0 <= t < horizon");
    }
}

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

void check_acceptance(const SimConfig& cfg, std::size_t accepted) {
    if (!cfg.conditioned) return;
    const double rate =
        static_cast<double>(accepted) / static_cast<double>(cfg.n_paths);
    if (accepted == 0 || rate < kMinAcceptRate) {
        throw std::runtime_error("conditioning too rare, increase paths");
    }
}

}  // namespace

McEstimate simulate_price(const SimConfig& cfg,
                          const std::function<double(double)>& payoff) {
    check_config(cfg);
    const std::size_t nb = block_count(cfg.n_paths);
    struct BlockSums {
        double s = 0.0;
        double s2 = 0.0;
        std::size_t accepted = 0;
    };
    std::vector<BlockSums> blocks(nb);
    parallel_for(
        nb,
        [&](std::size_t b) {
            const std::size_t lo = b * kBlock;
            const std::size_t hi = std::min(cfg.n_paths, lo + kBlock);
            KahanSum s;
            KahanSum s2;
            std::size_t acc = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                PathRng rng(cfg.seed, i);
                const PathOutcome o = walk(cfg, rng);
                if (!o.accepted) continue;
                KahanSum x;
                for (std::size_t j = 0; j < o.jumps; ++j) {
                    x.add(cfg.returns.sample(rng.uniform()));
                }
                const double v = payoff(std::exp(x.value()));
                s.add(v);
                s2.add(v * v);
                ++acc;
            }
            blocks[b] = {s.value(), s2.value(), acc};
        },
        cfg.threads);

    KahanSum s;
    KahanSum s2;
    std::size_t accepted = 0;
    for (const auto& b : blocks) {
        s.add(b.s);
        s2.add(b.s2);
        accepted += b.accepted;
    }
    check_acceptance(cfg, accepted);

    McEstimate est;
    est.n_effective = accepted;
    const double n = static_cast<double>(accepted);
    est.mean = s.value() / n;
    const double var = std::max(0.0, s2.value() / n - est.mean * est.mean);
    est.std_error = std::sqrt(var / n);
    return est;
}

McPmf simulate_counting(const SimConfig& cfg) {
    check_config(cfg);
    const std::size_t nb = block_count(cfg.n_paths);
    std::vector<std::vector<std::size_t>> hist(nb);
    parallel_for(
        nb,
        [&](std::size_t b) {
            const std::size_t lo = b * kBlock;
            const std::size_t hi = std::min(cfg.n_paths, lo + kBlock);
            auto& h = hist[b];
            for (std::size_t i = lo; i < hi; ++i) {
                PathRng rng(cfg.seed, i);
                const PathOutcome o = walk(cfg, rng);
                if (!o.accepted) continue;
                if (o.jumps >= h.size()) h.resize(o.jumps + 1, 0);
                ++h[o.jumps];
            }
        },
        cfg.threads);

    std::size_t width = 1;
    std::size_t accepted = 0;
    for (const auto& h : hist) {
        width = std::max(width, h.size());
        for (std::size_t c : h) accepted += c;
    }
    check_acceptance(cfg, accepted);

    McPmf pmf;
    pmf.n_effective = accepted;
    pmf.probs.assign(width, 0.0);
    pmf.std_errors.assign(width, 0.0);
    const double n = static_cast<double>(accepted);
    for (std::size_t k = 0; k < width; ++k) {
        std::size_t c = 0;
        for (const auto& h : hist) {
            if (k < h.size()) c += h[k];
        }
        const double p = static_cast<double>(c) / n;
        pmf.probs[k] = p;
        pmf.std_errors[k] = std::sqrt(std::max(0.0, p * (1.0 - p)) / n);
    }
    return pmf;
}

McResidual simulate_residual(const SimConfig& cfg) {
    check_config(cfg);
    if (!cfg.conditioned) {
        throw std::invalid_argument("simulate_residual: requires (t, n_t) conditioning");
    }
    SimConfig generic = cfg;
    generic.force_generic_conditioning = true;
    const std::size_t nb = block_count(cfg.n_paths);
    std::vector<std::vector<double>> found(nb);
    parallel_for(
        nb,
        [&](std::size_t b) {
            const std::size_t lo = b * kBlock;
            const std::size_t hi = std::min(cfg.n_paths, lo + kBlock);
            for (std::size_t i = lo; i < hi; ++i) {
                PathRng rng(cfg.seed, i);
                const PathOutcome o = walk(generic, rng);
                if (o.accepted) found[b].push_back(o.residual);
            }
        },
        cfg.threads);

    McResidual res;
    for (const auto& f : found) {
        res.sorted_samples.insert(res.sorted_samples.end(), f.begin(), f.end());
    }
    check_acceptance(cfg, res.sorted_samples.size());
    std::sort(res.sorted_samples.begin(), res.sorted_samples.end());
    res.n_effective = res.sorted_samples.size();
    return res;
}

}  // namespace rpricer
