#include "cme/mc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cme/philox.hpp"
#include "cme/smallball.hpp"

namespace cme {

std::uint64_t SimGrid::hash() const {
    // FNV-1a over the point bit patterns.
    std::uint64_t h = 1469598103934665603ull;
    for (double p : points) {
        std::uint64_t bits;
        std::memcpy(&bits, &p, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

SimGrid SimGrid::build(double epsilon_min, int count) {
    if (count < 16) throw std::invalid_argument("SimGrid: count must be >= 16");
    if (!(epsilon_min > 0.0 && epsilon_min < 1.0))
        throw std::invalid_argument("SimGrid: epsilon_min must be in (0, 1)");
    SimGrid g;
    g.count = count;
    // Var Y(t) = (1 - e^{-2t})/(2t) <= 1/(2t), so t_max = 2/eps^2 suffices.
    g.t_max = 2.0 / (epsilon_min * epsilon_min);
    const double lo = std::log(epsilon_min * epsilon_min), hi = std::log(g.t_max);
    g.points.push_back(0.0);
    for (int k = 0; k < count; ++k)
        g.points.push_back(std::exp(lo + (hi - lo) * static_cast<double>(k) /
                                             static_cast<double>(count - 1)));
    g.points.back() = g.t_max;
    return g;
}

SimGrid SimGrid::from_points(std::vector<double> pts) {
    std::sort(pts.begin(), pts.end());
    SimGrid g;
    g.count = static_cast<int>(pts.size());
    g.t_max = pts.empty() ? 0.0 : pts.back();
    g.points = std::move(pts);
    return g;
}

void SimConfig::validate() const {
    if (samples < 1000) throw std::invalid_argument("SimConfig: samples >= 1000 required");
    if (workers < 1) throw std::invalid_argument("SimConfig: workers must be >= 1");
    if (epsilons.empty()) throw std::invalid_argument("SimConfig: at least one epsilon required");
    for (std::size_t i = 0; i + 1 < epsilons.size(); ++i)
        if (epsilons[i] < epsilons[i + 1])
            throw std::invalid_argument("SimConfig: epsilons must be sorted descending");
    for (double e : epsilons)
        if (!(e > 0.0)) throw std::invalid_argument("SimConfig: epsilons must be positive");
    if (grid.points.empty()) throw std::invalid_argument("SimConfig: empty grid");
}

WilsonInterval wilson_interval(long hits, long samples, double z) {
    const double n = static_cast<double>(samples);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<double> factor_covariance(const std::vector<double>& points, double& jitter_out) {
    const std::size_t n = points.size();
    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            gram[i * n + j] = gram[j * n + i] = kernel_Y(points[i], points[j]);

    const double jitters[] = {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8};
    for (double jitter : jitters) {
        std::vector<double> l(n * n, 0.0);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = gram[i * n + j] + (i == j ? jitter : 0.0);
                for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
                if (i == j) {
                    if (!(s > 0.0)) {
                        ok = false;
                        break;
                    }
                    l[i * n + i] = std::sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        if (ok) {
            jitter_out = jitter;
            return l;
        }
    }
    std::ostringstream os;
    os << "factor_covariance: Cholesky failed at max jitter 1e-8 (n=" << n
       << ", diag[0]=" << gram[0] << ")";
    throw std::runtime_error(os.str());
}

namespace {

SimResult run_simulation(const std::vector<double>& grid_points, std::uint64_t grid_hash,
                         const std::vector<double>& epsilons, long samples, std::uint64_t seed,
                         int workers) {
    const std::size_t n = grid_points.size();
    double jitter = 0.0;
    const std::vector<double> l = factor_covariance(grid_points, jitter);
    const std::size_t blocks = (n + 1) / 2;
    const std::size_t n_eps = epsilons.size();

    std::vector<std::vector<long>> worker_hits(workers, std::vector<long>(n_eps, 0));
    auto worker_fn = [&](int w) {
        const long lo = samples * static_cast<long>(w) / workers;
        const long hi = samples * static_cast<long>(w + 1) / workers;
        std::vector<double> z(2 * blocks);
        std::vector<long>& hits = worker_hits[w];
        for (long s = lo; s < hi; ++s) {
            for (std::size_t blk = 0; blk < blocks; ++blk)
                philox_normal_pair(seed, static_cast<std::uint64_t>(s), blk, z[2 * blk], z[2 * blk + 1]);
            double max_abs = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double* row = &l[i * n];
                double y = 0.0;
                for (std::size_t j = 0; j <= i; ++j) y += row[j] * z[j];
                max_abs = std::max(max_abs, std::fabs(y));
            }
            for (std::size_t e = 0; e < n_eps; ++e) {
                if (max_abs < epsilons[e]) ++hits[e];
                else break;  // epsilons sorted descending: nested events
            }
        }
    };

    if (workers == 1) {
        worker_fn(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (int w = 0; w < workers; ++w) threads.emplace_back(worker_fn, w);
        for (auto& t : threads) t.join();
    }

    SimResult result;
    result.grid_hash = grid_hash;
    result.seed = seed;
    result.samples = samples;
    result.jitter = jitter;
    for (std::size_t e = 0; e < n_eps; ++e) {
        long hits = 0;
        for (int w = 0; w < workers; ++w) hits += worker_hits[w][e];
        WilsonInterval ci = wilson_interval(hits, samples);
        result.estimates.push_back({epsilons[e], hits, samples,
                                    static_cast<double>(hits) / static_cast<double>(samples),
                                    ci.lo, ci.hi});
    }
    return result;
}

}  // namespace

SimResult simulate_sup_probability(const SimConfig& config) {
    config.validate();
    return run_simulation(config.grid.points, config.grid.hash(), config.epsilons, config.samples,
                          config.seed, config.workers);
}

SimResult simulate_delta_probability(int m, const std::vector<double>& epsilons, long samples,
                                     std::uint64_t seed, int workers) {
    if (m < 1 || m > 3) throw std::invalid_argument("simulate_delta_probability: m must be in [1, 3]");
    const DeltaSequence d = delta_sequence(m);
    std::vector<double> pts(d.values.begin(), d.values.end());
    SimGrid grid = SimGrid::from_points(std::move(pts));
    std::vector<double> eps_sorted = epsilons;
    std::sort(eps_sorted.rbegin(), eps_sorted.rend());
    return run_simulation(grid.points, grid.hash(), eps_sorted, samples, seed, workers);
}

ScalingFit scaling_fit(const std::vector<EpsEstimate>& estimates) {
    ScalingFit fit;
    for (const EpsEstimate& e : estimates) {
        if (e.hits <= 0) continue;
        if (!(e.p_hat > 0.0 && e.p_hat < 1.0)) continue;
        fit.x.push_back(std::log(std::fabs(std::log(e.epsilon))));
        fit.y.push_back(std::log(-std::log(e.p_hat)));
    }
    fit.points_used = static_cast<int>(fit.x.size());
    if (fit.points_used < 4)
        throw std::invalid_argument("scaling_fit: need >= 4 epsilons with nonzero hit counts");

    const int n = fit.points_used;
    double sx = 0, sy = 0;
    for (int i = 0; i < n; ++i) {
        sx += fit.x[i];
        sy += fit.y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (fit.x[i] - mx) * (fit.x[i] - mx);
        sxy += (fit.x[i] - mx) * (fit.y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;

    double ss_res = 0;
    for (int i = 0; i < n; ++i) {
        const double r = fit.y[i] - (fit.intercept + fit.slope * fit.x[i]);
        ss_res += r * r;
    }
    if (n > 2) {
        fit.slope_stderr = std::sqrt(ss_res / (n - 2) / sxx);
        // Two-sided 97.5% Student t quantiles for small df.
        static const double t975[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                      2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                      2.131,  2.120, 2.110, 2.101, 2.093, 2.086};
        const int df = n - 2;
        const double t = df <= 20 ? t975[df - 1] : 1.960;
        fit.slope_ci_lo = fit.slope - t * fit.slope_stderr;
        fit.slope_ci_hi = fit.slope + t * fit.slope_stderr;
    } else {
        fit.slope_stderr = 0.0;
        fit.slope_ci_lo = fit.slope_ci_hi = fit.slope;
    }
    return fit;
}

}  // namespace cme
