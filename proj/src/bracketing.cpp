#include "cme/bracketing.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "cme/bigfloat.hpp"
#include "cme/quadrature.hpp"

namespace cme {

namespace {

constexpr double k4e2 = 4.0 * M_E * M_E;

void require_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.25))
        throw std::invalid_argument("epsilon must be in (0, 1/4)");
}

double truncation_cutoff(const BracketConfig& config, int block_index) {
    return std::ldexp(1.0, 2 - block_index) * std::fabs(std::log(config.epsilon)) / config.gamma;
}

double signed_horner(std::span<const double> coeffs, double u) {
    // sum_n (-1)^n coeffs[n] u^n, accumulated in extended precision: the
    // alternating terms reach ~1e3 while the sum stays in [0, 1].
    long double acc = 0.0L;
    for (std::size_t n = coeffs.size(); n-- > 0;) {
        long double signed_c = (n % 2 == 0) ? coeffs[n] : -coeffs[n];
        acc = acc * u + signed_c;
    }
    return static_cast<double>(acc);
}

}  // namespace

int select_taylor_degree(double epsilon) {
    require_epsilon(epsilon);
    double x = k4e2 * std::fabs(std::log(epsilon));
    return static_cast<int>(std::ceil(x)) - 1;
}

double BracketConfig::window_end() const { return std::ldexp(gamma, m); }

BracketConfig BracketConfig::make(double epsilon, double p, double gamma, int m, const BaseMeasure& nu) {
    require_epsilon(epsilon);
    if (!(p >= 1.0)) throw std::invalid_argument("BracketConfig: p must be >= 1");
    if (!(gamma > 0.0)) throw std::invalid_argument("BracketConfig: gamma must be > 0");
    if (m < 1) throw std::invalid_argument("BracketConfig: m must be >= 1");

    BracketConfig c;
    c.epsilon = epsilon;
    c.p = p;
    c.gamma = gamma;
    c.m = m;
    c.taylor_degree = select_taylor_degree(epsilon);

    double required = 1.0 - std::pow(4.0, -p) * std::pow(epsilon, p);
    if (nu.interval_mass(gamma, c.window_end()) < required - 1e-12)
        throw std::invalid_argument("BracketConfig: nu([gamma, Gamma]) < 1 - 4^{-p} eps^p");
    return c;
}

BracketConfig BracketConfig::for_lebesgue01(double epsilon, double p) {
    require_epsilon(epsilon);
    double gamma = std::pow(4.0, -p) * std::pow(epsilon, p);
    int m = static_cast<int>(std::ceil(std::log2(1.0 / gamma) - 1e-12));
    return make(epsilon, p, gamma, m, BaseMeasure::lebesgue01());
}

std::vector<double> truncated_moment_coeffs(const MixingMeasure& mu, const BracketConfig& config,
                                            int block_index) {
    if (block_index < 1 || block_index > config.m)
        throw std::invalid_argument("truncated_moment_coeffs: block index out of range");
    const int N = config.taylor_degree;
    const double scale = std::ldexp(config.gamma, block_index);  // 2^i gamma
    const double cutoff = truncation_cutoff(config, block_index);

    std::vector<long double> acc(N + 1, 0.0L);
    for (const auto& atom : mu.atoms()) {
        if (!(atom.location < cutoff)) continue;
        // term_n = (scale * x)^n / n!, built incrementally to avoid overflow.
        long double term = 1.0L;
        const long double sx = static_cast<long double>(scale) * atom.location;
        acc[0] += atom.weight;
        for (int n = 1; n <= N; ++n) {
            term *= sx / n;
            acc[n] += atom.weight * term;
        }
    }
    std::vector<double> a(N + 1);
    for (int n = 0; n <= N; ++n) a[n] = static_cast<double>(acc[n]);
    return a;
}

QuantizedCoeffs quantize_coefficients(std::span<const double> a, double epsilon) {
    require_epsilon(epsilon);
    QuantizedCoeffs q;
    q.b.resize(a.size());
    q.c.resize(a.size());
    q.b_steps.resize(a.size());
    q.c_steps.resize(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double grid = std::ldexp(epsilon, -static_cast<int>(n) - 2);
        const long double steps = static_cast<long double>(a[n]) / grid;
        const long double nearest = std::nearbyint(steps);
        const long double tol = std::max(1e-9L, 8e-16L * std::fabs(steps));
        std::int64_t lo, hi;
        if (std::fabs(steps - nearest) <= tol) {
            lo = hi = static_cast<std::int64_t>(nearest);
        } else {
            lo = static_cast<std::int64_t>(std::floor(steps));
            hi = static_cast<std::int64_t>(std::ceil(steps));
        }
        const bool even = (n % 2 == 0);
        q.b_steps[n] = even ? hi : lo;
        q.c_steps[n] = even ? lo : hi;
        q.b[n] = static_cast<double>(q.b_steps[n]) * grid;
        q.c[n] = static_cast<double>(q.c_steps[n]) * grid;
    }
    return q;
}

BracketPair::BracketPair(BracketConfig config, std::vector<QuantizedCoeffs> blocks)
    : config_(config), blocks_(std::move(blocks)) {
    if (static_cast<int>(blocks_.size()) != config_.m)
        throw std::invalid_argument("BracketPair: one coefficient block per dyadic block required");
    const double eps_pow = std::exp(k4e2 * std::log(config_.epsilon));  // eps^{4e^2}
    slack_lower_ = eps_pow;
    slack_upper_ = eps_pow + config_.epsilon * config_.epsilon;
    for (const QuantizedCoeffs& blk : blocks_) {
        id_.insert(id_.end(), blk.b_steps.begin(), blk.b_steps.end());
        id_.insert(id_.end(), blk.c_steps.begin(), blk.c_steps.end());
    }
}

int BracketPair::block_of(double t) const {
    if (!(t >= config_.gamma) || t >= config_.window_end()) return 0;
    int i = 1 + static_cast<int>(std::floor(std::log2(t / config_.gamma)));
    i = std::max(1, std::min(i, config_.m));
    while (i > 1 && t < std::ldexp(config_.gamma, i - 1)) --i;
    while (i < config_.m && t >= std::ldexp(config_.gamma, i)) ++i;
    return i;
}

double BracketPair::lower(double t) const {
    int i = block_of(t);
    if (i == 0) return 0.0;
    double u = t / std::ldexp(config_.gamma, i);
    return signed_horner(blocks_[i - 1].c, u) - slack_lower_;
}

double BracketPair::upper(double t) const {
    int i = block_of(t);
    if (i == 0) return 1.0;
    double u = t / std::ldexp(config_.gamma, i);
    return signed_horner(blocks_[i - 1].b, u) + slack_upper_;
}

namespace {

BracketPair assemble_pair(const MixingMeasure& mu, const BracketConfig& config) {
    std::vector<QuantizedCoeffs> blocks;
    blocks.reserve(config.m);
    for (int i = 1; i <= config.m; ++i) {
        std::vector<double> a = truncated_moment_coeffs(mu, config, i);
        blocks.push_back(quantize_coefficients(a, config.epsilon));
    }
    return BracketPair(config, std::move(blocks));
}

}  // namespace

BracketBuildResult build_bracket(const MixingMeasure& mu, const BracketConfig& config,
                                 const BaseMeasure& nu) {
    BracketPair pair = assemble_pair(mu, config);

    std::vector<double> breakpoints;
    for (int i = 0; i <= config.m; ++i) breakpoints.push_back(std::ldexp(config.gamma, i));
    LpParams params{config.p, 16};
    LpDistanceResult width = lp_distance([&](double t) { return pair.upper(t); },
                                         [&](double t) { return pair.lower(t); }, nu, params,
                                         breakpoints);
    if (width.value > config.epsilon)
        throw std::runtime_error("build_bracket: verified L^p width exceeds epsilon (invalid config)");
    return BracketBuildResult{std::move(pair), width.value, width.error_bound};
}

double max_containment_violation(const MixingMeasure& mu, const BracketPair& pair,
                                 std::size_t grid_points) {
    const BracketConfig& cfg = pair.config();
    const double gamma = cfg.gamma, end = cfg.window_end();
    double worst = -1.0;
    auto probe = [&](double t) {
        double f = laplace_eval(mu, t);
        worst = std::max(worst, pair.lower(t) - f);
        worst = std::max(worst, f - pair.upper(t));
    };
    const std::size_t half = grid_points / 2;
    // Log-spaced probes across the dyadic window, uniform probes over [0, end].
    const double lo = std::log(gamma * 0.5), hi = std::log(end);
    for (std::size_t k = 0; k < half; ++k)
        probe(std::exp(lo + (hi - lo) * (static_cast<double>(k) + 0.5) / static_cast<double>(half)));
    for (std::size_t k = 0; k < grid_points - half; ++k)
        probe(end * (static_cast<double>(k) + 0.5) / static_cast<double>(grid_points - half));
    return worst;
}

RemainderReport remainder_bounds_check(const MixingMeasure& mu, const BracketConfig& config) {
    constexpr mpfr_prec_t prec = 384;
    constexpr int points_per_block = 48;
    const int N = config.taylor_degree;

    RemainderReport report;
    report.taylor_budget = std::exp(k4e2 * std::log(config.epsilon)) + 1e-15;
    report.tail_budget = config.epsilon * config.epsilon;

    for (int i = 1; i <= config.m; ++i) {
        const double cutoff = truncation_cutoff(config, i);
        const double lo = std::ldexp(config.gamma, i - 1);
        const double hi = std::ldexp(config.gamma, i);
        for (int k = 0; k < points_per_block; ++k) {
            const double t = lo + (hi - lo) * (k + 0.5) / points_per_block;
            BigFloat q(prec), r(prec);
            const BigFloat tb(t, prec);
            for (const auto& atom : mu.atoms()) {
                const BigFloat tx = tb * BigFloat(atom.location, prec);
                const BigFloat w(atom.weight, prec);
                if (atom.location < cutoff) {
                    // e^{-tx} minus its degree-N Taylor polynomial.
                    BigFloat term(1.0, prec), taylor(1.0, prec);
                    for (int n = 1; n <= N; ++n) {
                        term = term * (-tx) / BigFloat(static_cast<long>(n), prec);
                        taylor = taylor + term;
                    }
                    q = q + w * (exp(-tx) - taylor);
                } else {
                    r = r + w * exp(-tx);
                }
            }
            const double qa = std::fabs(q.to_double());
            const double ra = r.to_double();
            if (qa > report.max_taylor_remainder) report.max_taylor_remainder = qa;
            if (ra > report.max_tail) report.max_tail = ra;
            if (qa > report.taylor_budget || ra > report.tail_budget) {
                report.passed = false;
                report.offending_t = t;
            }
        }
    }
    return report;
}

double realization_count_bound(const BracketConfig& config) {
    const double log_eps_abs = std::fabs(std::log(config.epsilon));
    const double log4 = std::log(4.0 * log_eps_abs);
    double sum = 0.0;
    for (int n = 0; n <= config.taylor_degree; ++n) {
        // log(2^{n+1} eps^{-1} |4 log eps|^n / n! + 1)
        double x = (n + 1) * std::log(2.0) + log_eps_abs + n * log4 - std::lgamma(n + 1.0);
        sum += (x > 30.0) ? x : std::log1p(std::exp(x));
    }
    return 2.0 * config.m * sum;
}

std::size_t empirical_bracket_count(std::span<const MixingMeasure> measures,
                                    const BracketConfig& config, const BaseMeasure& nu) {
    if (measures.empty()) throw std::invalid_argument("empirical_bracket_count: empty input");
    (void)nu;  // the fingerprint depends on nu only through config validation
    std::set<std::vector<std::int64_t>> ids;
    for (const MixingMeasure& mu : measures) ids.insert(assemble_pair(mu, config).id());
    return ids.size();
}

}  // namespace cme
