#pragma once

#include <cstdint>
#include <vector>

namespace cme {

// Discretization of the sup over t > 0: 0 followed by log-spaced points up
// to t_max, where t_max makes Var Y(t_max) <= eps_min^2 / 4.
struct SimGrid {
    std::vector<double> points;
    double t_max = 0.0;
    int count = 0;  // log-spaced point count (total size is count + 1)

    std::uint64_t hash() const;
    static SimGrid build(double epsilon_min, int count);
    // For the finite-dimensional delta-point probabilities.
    static SimGrid from_points(std::vector<double> pts);
};

struct SimConfig {
    std::vector<double> epsilons;  // sorted descending
    long samples = 0;              // >= 1000
    std::uint64_t seed = 0;
    SimGrid grid;
    int workers = 1;

    void validate() const;
};

struct EpsEstimate {
    double epsilon = 0.0;
    long hits = 0;
    long samples = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0;  // Wilson 95%
    double ci_hi = 0.0;
};

struct SimResult {
    std::vector<EpsEstimate> estimates;
    std::uint64_t grid_hash = 0;
    std::uint64_t seed = 0;
    long samples = 0;
    double jitter = 0.0;  // Cholesky jitter actually used
};

struct WilsonInterval {
    double lo, hi;
};
WilsonInterval wilson_interval(long hits, long samples, double z = 1.959963984540054);

// Lower-triangular L (row-major, n x n, upper part zero) with
// L L^T = Gram(kernel_Y) + jitter I.
// Jitter escalates by decades up to 1e-8 until the factorization succeeds.
std::vector<double> factor_covariance(const std::vector<double>& points, double& jitter_out);

// P(max_i |Y(grid_i)| < eps) for every eps in one pass; per-sample variates
// depend only on (seed, sample index), so the result is identical for any
// worker count.
SimResult simulate_sup_probability(const SimConfig& config);

// Same sampler on the n = m^2 delta-sequence points. m <= 3.
SimResult simulate_delta_probability(int m, const std::vector<double>& epsilons, long samples,
                                     std::uint64_t seed, int workers = 1);

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double slope_ci_lo = 0.0;  // 95% (t distribution)
    double slope_ci_hi = 0.0;
    int points_used = 0;
    std::vector<double> x;  // log |log eps|
    std::vector<double> y;  // log(-log p_hat)
};

// Regresses log(-log p_hat) on log|log eps| over estimates with hits > 0.
ScalingFit scaling_fit(const std::vector<EpsEstimate>& estimates);

}  // namespace cme
