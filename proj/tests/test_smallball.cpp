#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "cme/exact_linalg.hpp"
#include "cme/smallball.hpp"

using namespace cme;

TEST_CASE("delta_sequence values") {
    CHECK(delta_sequence(1).values == std::vector<long long>{8});
    CHECK(delta_sequence(2).values == std::vector<long long>{48, 64, 192, 256});

    DeltaSequence d3 = delta_sequence(3);
    CHECK(d3.values.size() == 9);
    CHECK(d3.values.front() == 256);
    CHECK(d3.values.back() == 6144);

    for (int m = 1; m <= 8; ++m) {
        DeltaSequence d = delta_sequence(m);
        for (std::size_t i = 0; i + 1 < d.values.size(); ++i) CHECK(d.values[i] < d.values[i + 1]);
        CHECK(d.values.front() == (1LL << (2 * m)) * (m + 1));
    }
    CHECK_THROWS_AS(delta_sequence(9), std::invalid_argument);
}

TEST_CASE("cauchy_matrix entries") {
    RationalMatrix a1 = cauchy_matrix(delta_sequence(1));
    CHECK(a1.at(0, 0) == make_rational(1, 16));

    RationalMatrix a2 = cauchy_matrix(delta_sequence(2));
    CHECK(a2.at(0, 1) == make_rational(1, 112));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(a2.at(i, j) > 0);
            CHECK(a2.at(i, j) == a2.at(j, i));
        }
}

TEST_CASE("cauchy determinant identity") {
    CHECK(cauchy_det_product({1, 2}) == make_rational(1, 72));
    CHECK(cauchy_det_product(delta_sequence(1)) == make_rational(1, 16));
    CHECK(cauchy_det_product(delta_sequence(2)) == det_exact(cauchy_matrix(delta_sequence(2))));

    for (int m = 1; m <= 3; ++m) {
        DeltaSequence d = delta_sequence(m);
        CHECK(cauchy_det_product(d) == det_exact(cauchy_matrix(d)));
    }

    std::mt19937_64 rng(17);
    std::uniform_int_distribution<long long> val(1, 5000);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 2 + trial % 6;
        std::set<long long> s;
        while (s.size() < n) s.insert(val(rng));
        std::vector<long long> delta(s.begin(), s.end());
        CHECK(cauchy_det_product(delta) == det_exact(cauchy_matrix(delta)));
    }

    CHECK_THROWS_AS(cauchy_det_product({3, 3}), std::invalid_argument);
}

TEST_CASE("ratio bound") {
    for (int m = 1; m <= 8; ++m) {
        RatioBoundReport r = ratio_bound_check(delta_sequence(m));
        CHECK(r.ok);
        CHECK(r.min_delta == (1LL << (2 * m)) * (m + 1));
        CHECK(r.margin_exponent == 2LL << (2 * m));
    }
    RatioBoundReport r1 = ratio_bound_check(delta_sequence(1));
    CHECK(r1.actual_exponent == 16);
    CHECK(r1.bound_exponent == 8);
    CHECK(ratio_bound_check(delta_sequence(2)).actual_exponent == 96);
    CHECK(ratio_bound_check(delta_sequence(3)).actual_exponent == 512);
}

namespace {

// Exact dyadic rational upper bound of e^{-x}: round-up evaluation at 256
// bits, then exact mantissa * 2^exponent extraction.
BigRational dyadic_exp_neg_upper(long x) {
    mpfr_t v;
    mpfr_init2(v, 256);
    mpfr_set_si(v, -x, MPFR_RNDN);
    mpfr_exp(v, v, MPFR_RNDU);
    mpz_class mant;
    mpfr_exp_t e = mpfr_get_z_2exp(mant.get_mpz_t(), v);
    mpfr_clear(v);
    BigRational r(mant);
    if (e >= 0) {
        mpz_class two_e;
        mpz_ui_pow_ui(two_e.get_mpz_t(), 2, static_cast<unsigned long>(e));
        r *= BigRational(two_e);
    } else {
        mpz_class two_e;
        mpz_ui_pow_ui(two_e.get_mpz_t(), 2, static_cast<unsigned long>(-e));
        r /= BigRational(two_e);
    }
    return r;
}

}  // namespace

TEST_CASE("lemma1_bound examples") {
    RationalMatrix a(2), b(2);
    a.at(0, 0) = 2; a.at(0, 1) = 1; a.at(1, 0) = 1; a.at(1, 1) = 2;
    b.at(0, 0) = 1; b.at(0, 1) = make_rational(1, 2);
    b.at(1, 0) = make_rational(1, 2); b.at(1, 1) = 1;
    CHECK(lemma1_bound(a, b) == -2);

    RationalMatrix diff(2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) diff.at(i, j) = a.at(i, j) - b.at(i, j);
    CHECK(det_exact(diff) >= lemma1_bound(a, b));

    // b -> 0: the bound approaches det(a) = 3.
    for (int k = 1; k <= 6; ++k) {
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(k));
        RationalMatrix small(2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) small.at(i, j) = a.at(i, j) / BigRational(scale);
        BigRational bound = lemma1_bound(a, small);
        CHECK(det_exact(a) - bound == BigRational(2) * permanent_exact(a) / BigRational(scale));
    }

    CHECK_THROWS_AS(lemma1_bound(a, a), std::invalid_argument);
}

TEST_CASE("lemma1_bound on the m=2 covariance surrogate is positive") {
    DeltaSequence d = delta_sequence(2);
    RationalMatrix a = cauchy_matrix(d);
    RationalMatrix b(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            b.at(i, j) = dyadic_exp_neg_upper(d.values[i] + d.values[j]) * a.at(i, j);
    BigRational bound = lemma1_bound(a, b);
    CHECK(bound > 0);
    // The exact inequality also holds for the surrogate difference matrix.
    RationalMatrix diff(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) diff.at(i, j) = a.at(i, j) - b.at(i, j);
    CHECK(det_exact(diff) >= bound);
}

TEST_CASE("lemma2_verify") {
    Lemma2Report r1 = lemma2_verify(1);
    CHECK(r1.per == make_rational(1, 16));
    CHECK(r1.det == make_rational(1, 16));
    CHECK(r1.per_le_one);
    CHECK(r1.det_ge_threshold);
    CHECK(r1.coarse_chain_ok);
    CHECK(r1.log_threshold == doctest::Approx(-2.0 * std::log(240.0 * M_E)).epsilon(1e-12));

    for (int m = 2; m <= 3; ++m) {
        Lemma2Report r = lemma2_verify(m);
        CHECK(r.per_le_one);
        CHECK(r.det_ge_threshold);
        CHECK(r.coarse_chain_ok);
        CHECK(r.log_det > r.log_threshold);
    }
}

TEST_CASE("det_sigma_lower and its threshold") {
    // At m = 1 and 2 the subtracted term dominates: recorded, not assumed.
    CHECK_FALSE(det_sigma_lower(1).positive);
    CHECK_FALSE(det_sigma_lower(2).positive);
    CHECK(det_sigma_lower(3).positive);
    CHECK(det_sigma_lower_threshold_m() == 3);
    for (int m = 3; m <= 8; ++m) CHECK(det_sigma_lower(m).ge_exp_bound);
}

TEST_CASE("sigma matrix is SPD for m <= 3 (leading principal minors)") {
    for (int m = 1; m <= 3; ++m) {
        BigFloatMatrix s = sigma_matrix(m, 1024);
        const std::size_t n = s.dim();
        for (std::size_t k = 1; k <= n; ++k) {
            BigFloatMatrix minor(k, 1024);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) minor.at(i, j) = s.at(i, j);
            HighPrecDet det = det_highprec(minor);
            CHECK(det.reliable);
            CHECK(det.value.sign() > 0);
        }
    }
}

TEST_CASE("det_sigma_highprec m=1 matches the scalar formula") {
    HighPrecDet d = det_sigma_highprec(1);
    double expected = (1.0 - std::exp(-16.0)) / 16.0;
    CHECK(d.reliable);
    CHECK(d.value.to_double() == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("smallball_log_upper") {
    SmallBallBound analytic = smallball_log_upper(std::exp(-24.0), 2, DetMode::analytic);
    CHECK(analytic.log_prob_bound == doctest::Approx(-32.0).epsilon(1e-9));

    SmallBallBound computed1 = smallball_log_upper(0.1, 1, DetMode::computed);
    double expected = std::log(0.1) - 0.5 * std::log((1.0 - std::exp(-16.0)) / 16.0);
    CHECK(computed1.log_prob_bound == doctest::Approx(expected).epsilon(1e-12));

    // computed <= analytic whenever det Sigma >= e^{-16 m^3}; true for m <= 3.
    for (int m = 1; m <= 3; ++m) {
        double eps = 0.05;
        SmallBallBound c = smallball_log_upper(eps, m, DetMode::computed);
        SmallBallBound a = smallball_log_upper(eps, m, DetMode::analytic);
        CHECK(c.log_prob_bound <= a.log_prob_bound + 1e-9);
    }
}

TEST_CASE("optimal_m") {
    auto [m1, v1] = optimal_m_logeps(24.0);
    CHECK(m1 == 2);
    CHECK(v1 == doctest::Approx(-32.0));

    auto [m2, v2] = optimal_m_logeps(120.0);
    CHECK(m2 == 10);
    CHECK(v2 == doctest::Approx(-4000.0));
    CHECK(v2 == doctest::Approx(-std::pow(120.0, 3) / 432.0));

    // bound / |log eps|^3 -> -1/432 along eps = e^{-12k}.
    for (int k = 2; k <= 20; ++k) {
        auto [m, v] = optimal_m_logeps(12.0 * k);
        CHECK(m == k);
        CHECK(v / std::pow(12.0 * k, 3) == doctest::Approx(-1.0 / 432.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(optimal_m(0.5), std::invalid_argument);
}

TEST_CASE("integer minimizer stays within the discretization gap") {
    // f(m) = -m^2 L + 8 m^3 has continuous minimum -L^3/432 at m = L/12;
    // the integer minimizer can exceed it by at most max|f''| over the
    // bracketing unit interval, i.e. (2L + 48(m*+1)) / 2 with m* = L/12.
    for (int k = 1; k <= 20; ++k) {
        const double L = 12.0 * k + 5.3;  // deliberately off-integer
        auto [m, v] = optimal_m_logeps(L);
        const double continuous = -L * L * L / 432.0;
        const double gap = 0.5 * (2.0 * L + 48.0 * (L / 12.0 + 1.0));
        CHECK(v >= continuous - 1e-9);
        CHECK(v <= continuous + gap);
        (void)m;
    }
}

TEST_CASE("kernel_Y") {
    CHECK(kernel_Y(0.0, 0.0) == 1.0);
    CHECK(kernel_Y(1.0, 1.0) == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-15));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 100; ++i) {
        double s = u(rng), t = u(rng);
        CHECK(kernel_Y(s, t) == kernel_Y(t, s));
    }
}

TEST_CASE("kernel_X and the change of variables") {
    CHECK(kernel_X(1.0, 1.0) == 1.0);
    CHECK(kernel_X(std::exp(-1.0), std::exp(-1.0)) ==
          doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-14));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int i = 0; i < 100; ++i) {
        double s = u(rng), t = u(rng);
        double diff = std::fabs(kernel_X(std::exp(-s), std::exp(-t)) - kernel_Y(s, t));
        CHECK(diff <= 1e-14);
    }
}

TEST_CASE("kernel_Y Gram matrices are PSD up to -1e-10") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    constexpr std::size_t n = 16;
    constexpr mpfr_prec_t prec = 1024;
    std::vector<double> pts(n);
    for (auto& p : pts) p = u(rng);

    // lambda_min(G) >= -1e-10 iff all leading principal minors of G + 1e-10 I
    // are positive; checked at 1024 bits.
    BigFloatMatrix g(n, prec);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            g.at(i, j) = BigFloat(kernel_Y(pts[i], pts[j]), prec);
            if (i == j) g.at(i, j) = g.at(i, j) + BigFloat(1e-10, prec);
        }
    for (std::size_t k = 1; k <= n; ++k) {
        BigFloatMatrix minor(k, prec);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) minor.at(i, j) = g.at(i, j);
        HighPrecDet det = det_highprec(minor);
        CHECK(det.value.sign() > 0);
    }
}
