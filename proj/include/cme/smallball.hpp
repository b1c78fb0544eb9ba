#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cme/exact_linalg.hpp"

namespace cme {

// Design points delta_{mp+q} = 4^{p+m}(m+q), 0 <= p < m, 1 <= q <= m; n = m^2.
struct DeltaSequence {
    int m = 0;
    std::vector<long long> values;
};

DeltaSequence delta_sequence(int m);  // m in [1, 8]

// a_{ij} = 1/(delta_i + delta_j), exact.
RationalMatrix cauchy_matrix(const std::vector<long long>& delta);
RationalMatrix cauchy_matrix(const DeltaSequence& d);

// Closed-form Cauchy determinant: prod_{i<j}(d_j - d_i)^2 / prod_{i,j}(d_i + d_j).
BigRational cauchy_det_product(const std::vector<long long>& delta);
BigRational cauchy_det_product(const DeltaSequence& d);

struct RatioBoundReport {
    bool ok = false;
    long long min_delta = 0;           // 4^m (m+1)
    long long bound_exponent = 0;      // 2 m 4^m: max ratio <= e^{-bound_exponent}
    long long actual_exponent = 0;     // 2 min_delta: max ratio = e^{-actual_exponent}
    long long margin_exponent = 0;     // actual - bound = 2 * 4^m
};

// max_{k,l} b_{kl}/a_{kl} = e^{-2 min delta} <= e^{-2 m 4^m}, checked symbolically.
RatioBoundReport ratio_bound_check(const DeltaSequence& d);

// det(a) - sum_k max_l (b_{kl}/a_{kl}) * per(a); a guaranteed lower bound for
// det(a - b) whenever 0 < b < a entrywise.
BigRational lemma1_bound(const RationalMatrix& a, const RationalMatrix& b);

struct Lemma2Report {
    bool per_le_one = false;
    bool det_ge_threshold = false;
    bool coarse_chain_ok = false;  // per <= n! (max a)^n <= 1
    BigRational per{0};
    BigRational det{0};
    double log_det = 0.0;           // natural log of the exact determinant
    double log_threshold = 0.0;     // log (240e)^{-2m^3}
};

// per(a) <= 1 and det(a) >= (240e)^{-2m^3} for the delta-sequence Cauchy
// matrix; exact permanent/determinant against a 1024-bit threshold. m <= 3.
Lemma2Report lemma2_verify(int m);

struct DetSigmaLowerReport {
    BigFloat value;                  // (240e)^{-2m^3} - m^2 e^{-2m4^m}
    bool positive = false;
    bool ge_exp_bound = false;       // value >= e^{-16 m^3}
};

DetSigmaLowerReport det_sigma_lower(int m, mpfr_prec_t prec = 1024);
// Smallest m in [1, 8] with (240e)^{-2m^3} - m^2 e^{-2m4^m} >= e^{-16m^3}.
int det_sigma_lower_threshold_m();

// Covariance matrix Sigma_ij = (1 - e^{-d_i-d_j})/(d_i + d_j) at the delta points.
BigFloatMatrix sigma_matrix(int m, mpfr_prec_t prec);

// det Sigma at high precision; precision doubles on an unreliable error
// bound, starting from start_prec and capped at 8192 bits.
HighPrecDet det_sigma_highprec(int m, mpfr_prec_t start_prec = 1024);

enum class DetMode { computed, analytic };

struct SmallBallBound {
    double epsilon = 0.0;
    int m = 0;
    int n = 0;
    double log_prob_bound = 0.0;  // natural log
    DetMode provenance = DetMode::analytic;
};

// computed: n log eps - (1/2) log det Sigma;  analytic: m^2 log eps + 8 m^3.
SmallBallBound smallball_log_upper(double epsilon, int m, DetMode mode);

// Minimizes the analytic bound over integer m >= 1 by exhaustive scan.
std::pair<int, double> optimal_m_logeps(double abs_log_eps);
std::pair<int, double> optimal_m(double epsilon);  // requires eps < e^{-12}

// Covariance kernels: Y on [0,inf)^2 and X on (0,1]^2.
double kernel_Y(double s, double t);
double kernel_X(double s, double t);

}  // namespace cme
