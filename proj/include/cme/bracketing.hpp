#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cme/mixing_measure.hpp"

namespace cme {

// Taylor degree N: the unique integer with 4e^2|log eps| - 1 <= N < 4e^2|log eps|.
int select_taylor_degree(double epsilon);

// Parameters of the block construction over [gamma, 2^m gamma).
struct BracketConfig {
    double epsilon = 0.1;    // in (0, 1/4)
    double p = 2.0;          // L^p exponent, >= 1
    double gamma = 0.0;      // left end of the polynomial window
    int m = 0;               // number of dyadic blocks, Gamma = 2^m gamma
    int taylor_degree = 0;   // N

    double window_end() const;  // Gamma = 2^m gamma

    // Validates ranges and the nu mass condition nu([gamma, Gamma]) >= 1 - 4^{-p} eps^p.
    static BracketConfig make(double epsilon, double p, double gamma, int m, const BaseMeasure& nu);
    // Default window for Lebesgue on [0,1]: gamma = 4^{-p} eps^p, m = ceil(log2(1/gamma)).
    static BracketConfig for_lebesgue01(double epsilon, double p);
};

// a_{ni} = (2^i gamma)^n / n! * sum_{x < 2^{2-i}|log eps|/gamma} w x^n, n = 0..N.
std::vector<double> truncated_moment_coeffs(const MixingMeasure& mu, const BracketConfig& config,
                                            int block_index);

struct QuantizedCoeffs {
    std::vector<double> b;  // upper-envelope coefficients (sign (-1)^n applied at evaluation)
    std::vector<double> c;  // lower-envelope coefficients
    std::vector<std::int64_t> b_steps;  // integer grid indices, the fingerprint material
    std::vector<std::int64_t> c_steps;
};

// Snaps each a_n to the grid eps/2^{n+2}: ceil for b at even n, floor at odd
// (and the reverse for c), so the signed envelopes bracket the block polynomial.
QuantizedCoeffs quantize_coefficients(std::span<const double> a, double epsilon);

// Piecewise-polynomial envelope pair for f itself: block envelopes plus slack
// on [gamma, Gamma), the trivial bounds 0/1 outside.
class BracketPair {
public:
    BracketPair(BracketConfig config, std::vector<QuantizedCoeffs> blocks);

    double lower(double t) const;
    double upper(double t) const;
    double slack_lower() const { return slack_lower_; }
    double slack_upper() const { return slack_upper_; }
    const std::vector<std::int64_t>& id() const { return id_; }
    const BracketConfig& config() const { return config_; }
    const std::vector<QuantizedCoeffs>& blocks() const { return blocks_; }

private:
    int block_of(double t) const;  // 1-based, 0 when outside [gamma, Gamma)
    BracketConfig config_;
    std::vector<QuantizedCoeffs> blocks_;
    double slack_lower_;
    double slack_upper_;
    std::vector<std::int64_t> id_;
};

struct BracketBuildResult {
    BracketPair pair;
    double verified_width;        // L^p(nu) norm of upper - lower
    double width_error_bound;
};

// Builds the envelope pair and verifies the L^p(nu) width <= epsilon.
// Width failure is a hard error (it indicates an invalid config).
BracketBuildResult build_bracket(const MixingMeasure& mu, const BracketConfig& config,
                                 const BaseMeasure& nu);

// Max of lower(t) - f(t) and f(t) - upper(t) over a deterministic dense grid;
// nonpositive values mean containment.
double max_containment_violation(const MixingMeasure& mu, const BracketPair& pair,
                                 std::size_t grid_points);

struct RemainderReport {
    bool passed = true;
    double max_taylor_remainder = 0.0;  // max over blocks/grid of |f - p_i - r_i|
    double max_tail = 0.0;              // max of r_i
    double taylor_budget = 0.0;         // eps^{4e^2} + 1e-15
    double tail_budget = 0.0;           // eps^2
    double offending_t = -1.0;
};

// High-precision check of the per-block Taylor remainder and tail bounds on a
// dense grid (the quantities cancel far below double precision).
RemainderReport remainder_bounds_check(const MixingMeasure& mu, const BracketConfig& config);

// Natural log of the envelope realization count bound:
// 2 m sum_{n=0}^{N} log(2^{n+1} eps^{-1} |4 log eps|^n / n! + 1).
double realization_count_bound(const BracketConfig& config);

// Number of distinct envelope fingerprints over the given measures.
std::size_t empirical_bracket_count(std::span<const MixingMeasure> measures,
                                    const BracketConfig& config, const BaseMeasure& nu);

}  // namespace cme
