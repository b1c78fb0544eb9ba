#include "cme/smallball.hpp"

#include <cmath>
#include <stdexcept>

namespace cme {

DeltaSequence delta_sequence(int m) {
    if (m < 1) throw std::invalid_argument("delta_sequence: m must be >= 1");
    if (m > 8) throw std::invalid_argument("delta_sequence: m > 8 exceeds the practical limit");
    DeltaSequence d;
    d.m = m;
    d.values.resize(static_cast<std::size_t>(m) * m);
    for (int p = 0; p < m; ++p)
        for (int q = 1; q <= m; ++q)
            d.values[static_cast<std::size_t>(m) * p + q - 1] = (1LL << (2 * (p + m))) * (m + q);
    return d;
}

RationalMatrix cauchy_matrix(const std::vector<long long>& delta) {
    const std::size_t n = delta.size();
    RationalMatrix a(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a.at(i, j) = BigRational(1L, static_cast<long>(delta[i] + delta[j]));
    return a;
}

RationalMatrix cauchy_matrix(const DeltaSequence& d) { return cauchy_matrix(d.values); }

BigRational cauchy_det_product(const std::vector<long long>& delta) {
    const std::size_t n = delta.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (delta[i] == delta[j])
                throw std::invalid_argument("cauchy_det_product: delta values must be distinct");
    mpz_class num = 1, den = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            mpz_class diff(static_cast<long>(delta[j] - delta[i]));
            num *= diff * diff;
        }
        for (std::size_t j = 0; j < n; ++j) den *= mpz_class(static_cast<long>(delta[i] + delta[j]));
    }
    BigRational det(num, den);
    det.canonicalize();
    return det;
}

BigRational cauchy_det_product(const DeltaSequence& d) { return cauchy_det_product(d.values); }

RatioBoundReport ratio_bound_check(const DeltaSequence& d) {
    RatioBoundReport r;
    r.min_delta = d.values.front();
    for (long long v : d.values) r.min_delta = std::min(r.min_delta, v);
    const long long four_m = 1LL << (2 * d.m);
    r.bound_exponent = 2LL * d.m * four_m;
    r.actual_exponent = 2LL * r.min_delta;
    r.margin_exponent = r.actual_exponent - r.bound_exponent;
    r.ok = r.actual_exponent >= r.bound_exponent;
    return r;
}

BigRational lemma1_bound(const RationalMatrix& a, const RationalMatrix& b) {
    const std::size_t n = a.dim();
    if (b.dim() != n) throw std::invalid_argument("lemma1_bound: dimension mismatch");
    BigRational ratio_sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
        BigRational row_max = 0;
        for (std::size_t l = 0; l < n; ++l) {
            if (!(b.at(k, l) > 0) || !(b.at(k, l) < a.at(k, l)))
                throw std::invalid_argument("lemma1_bound: need 0 < b_ij < a_ij entrywise");
            BigRational ratio = b.at(k, l) / a.at(k, l);
            if (ratio > row_max) row_max = ratio;
        }
        ratio_sum += row_max;
    }
    return det_exact(a) - ratio_sum * permanent_exact(a);
}

Lemma2Report lemma2_verify(int m) {
    if (m < 1 || m > 3) throw std::invalid_argument("lemma2_verify: m must be in [1, 3]");
    const DeltaSequence d = delta_sequence(m);
    const std::size_t n = d.values.size();
    const RationalMatrix a = cauchy_matrix(d);

    Lemma2Report rep;
    rep.per = permanent_exact(a);
    rep.det = cauchy_det_product(d);
    rep.per_le_one = rep.per <= 1;

    // Threshold (240e)^{-2m^3} at 1024 bits against the exact determinant.
    constexpr mpfr_prec_t prec = 1024;
    const long expo = -2L * m * m * m;
    BigFloat threshold = pow_si(BigFloat(240.0, prec) * exp(BigFloat(1.0, prec)), expo);
    BigFloat det_f(rep.det, prec);
    rep.det_ge_threshold = det_f >= threshold;
    rep.log_det = log(det_f).to_double();
    rep.log_threshold = log(threshold).to_double();

    // Coarse chain per <= n! (max a)^n <= 1, exact. max a = 1/(2 min delta).
    long long min_delta = d.values.front();
    mpz_class nfact;
    mpz_fac_ui(nfact.get_mpz_t(), static_cast<unsigned long>(n));
    BigRational max_entry_pow = 1;
    for (std::size_t k = 0; k < n; ++k) max_entry_pow /= BigRational(static_cast<long>(2 * min_delta));
    BigRational chain = BigRational(nfact) * max_entry_pow;
    rep.coarse_chain_ok = (rep.per <= chain) && (chain <= 1);
    return rep;
}

DetSigmaLowerReport det_sigma_lower(int m, mpfr_prec_t prec) {
    if (m < 1) throw std::invalid_argument("det_sigma_lower: m must be >= 1");
    const long m3 = static_cast<long>(m) * m * m;
    const long long four_m = 1LL << (2 * m);
    BigFloat first = pow_si(BigFloat(240.0, prec) * exp(BigFloat(1.0, prec)), -2 * m3);
    BigFloat second = BigFloat(static_cast<long>(m) * m, prec) *
                      exp(BigFloat(static_cast<double>(-2.0 * m * four_m), prec));
    DetSigmaLowerReport rep{first - second, false, false};
    rep.positive = rep.value.sign() > 0;
    rep.ge_exp_bound = rep.value >= exp(BigFloat(static_cast<double>(-16.0 * m3), prec));
    return rep;
}

int det_sigma_lower_threshold_m() {
    for (int m = 1; m <= 8; ++m)
        if (det_sigma_lower(m).ge_exp_bound) return m;
    return -1;
}

BigFloatMatrix sigma_matrix(int m, mpfr_prec_t prec) {
    const DeltaSequence d = delta_sequence(m);
    const std::size_t n = d.values.size();
    BigFloatMatrix s(n, prec);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            BigFloat sum(static_cast<long>(d.values[i] + d.values[j]), prec);
            BigFloat entry = (BigFloat(1.0, prec) - exp(-sum)) / sum;
            s.at(i, j) = entry;
            s.at(j, i) = entry;
        }
    }
    return s;
}

HighPrecDet det_sigma_highprec(int m, mpfr_prec_t start_prec) {
    mpfr_prec_t prec = start_prec;
    while (true) {
        HighPrecDet det = det_highprec(sigma_matrix(m, prec));
        if (det.reliable || prec >= 8192) return det;
        prec *= 2;
    }
}

SmallBallBound smallball_log_upper(double epsilon, int m, DetMode mode) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("smallball_log_upper: epsilon must be in (0, 1)");
    if (m < 1) throw std::invalid_argument("smallball_log_upper: m must be >= 1");
    SmallBallBound b;
    b.epsilon = epsilon;
    b.m = m;
    b.n = m * m;
    b.provenance = mode;
    if (mode == DetMode::analytic) {
        b.log_prob_bound = b.n * std::log(epsilon) + 8.0 * m * m * m;
        return b;
    }
    if (m > 3) throw std::invalid_argument("smallball_log_upper: computed mode requires m <= 3");
    HighPrecDet det = det_sigma_highprec(m);
    if (!det.reliable)
        throw std::runtime_error("smallball_log_upper: det Sigma not resolvable at max precision");
    b.log_prob_bound = b.n * std::log(epsilon) - 0.5 * log(det.value).to_double();
    return b;
}

std::pair<int, double> optimal_m_logeps(double abs_log_eps) {
    if (!(abs_log_eps > 12.0))
        throw std::invalid_argument("optimal_m: epsilon must be below e^{-12}");
    const int m_max = static_cast<int>(std::ceil(abs_log_eps / 6.0));
    int best_m = 1;
    double best = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        double v = -static_cast<double>(m) * m * abs_log_eps + 8.0 * m * m * m;
        if (m == 1 || v < best) {
            best = v;
            best_m = m;
        }
    }
    return {best_m, best};
}

std::pair<int, double> optimal_m(double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("optimal_m: epsilon must be positive");
    return optimal_m_logeps(std::fabs(std::log(epsilon)));
}

double kernel_Y(double s, double t) {
    if (!(s >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("kernel_Y: s, t must be >= 0");
    const double u = s + t;
    if (u < 1e-8) return 1.0 - u / 2.0 + u * u / 6.0 - u * u * u / 24.0;
    return -std::expm1(-u) / u;
}

double kernel_X(double s, double t) {
    if (!(s > 0.0 && s <= 1.0 && t > 0.0 && t <= 1.0))
        throw std::invalid_argument("kernel_X: s, t must be in (0, 1]");
    const double prod = s * t;
    const double w = prod - 1.0;
    if (std::fabs(w) < 1e-4) {
        // w / log(1+w) expanded around w = 0.
        return 1.0 + w / 2.0 - w * w / 12.0 + w * w * w / 24.0;
    }
    return w / std::log(prod);
}

}  // namespace cme
