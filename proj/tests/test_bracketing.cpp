#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "cme/bracketing.hpp"
#include "cme/exact_linalg.hpp"
#include "cme/mixing_measure.hpp"

using namespace cme;

namespace {

BracketConfig raw_config(double epsilon, double p, double gamma, int m) {
    BracketConfig cfg;
    cfg.epsilon = epsilon;
    cfg.p = p;
    cfg.gamma = gamma;
    cfg.m = m;
    cfg.taylor_degree = select_taylor_degree(epsilon);
    return cfg;
}

}  // namespace

TEST_CASE("taylor degree selection") {
    CHECK(select_taylor_degree(0.1) == 68);
    CHECK(select_taylor_degree(0.2) == 47);
    CHECK(select_taylor_degree(0.24999) == 40);
    CHECK_THROWS(select_taylor_degree(0.25));
    CHECK_THROWS(select_taylor_degree(0.0));
    CHECK_THROWS(select_taylor_degree(-0.1));

    // N is the unique integer in [4e^2 |log eps| - 1, 4e^2 |log eps|)
    const double k = 4.0 * std::exp(2.0);
    for (double eps : {0.2499, 0.2, 0.1, 0.01, 1e-4}) {
        double target = k * std::fabs(std::log(eps));
        int n = select_taylor_degree(eps);
        CHECK(n >= target - 1.0);
        CHECK(n < target);
    }
}

TEST_CASE("default window config for Lebesgue nu") {
    auto nu = BaseMeasure::lebesgue01();
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);
    CHECK(cfg.gamma == doctest::Approx(0.01 / 16.0).epsilon(1e-15));
    CHECK(cfg.m == static_cast<int>(std::ceil(std::log2(1.0 / cfg.gamma))));
    CHECK(cfg.window_end() >= 1.0);
    CHECK(cfg.taylor_degree == 68);

    // make() enforces the nu mass condition nu([gamma, Gamma]) >= 1 - 4^{-p} eps^p
    CHECK_NOTHROW(BracketConfig::make(0.1, 2.0, cfg.gamma, cfg.m, nu));
    CHECK_THROWS(BracketConfig::make(0.1, 2.0, 0.5, 1, nu));  // window [0.5, 1) misses too much
}

TEST_CASE("truncated moment coefficients: origin atom") {
    auto mu = MixingMeasure::from_atoms({{0.0, 1.0}});
    auto cfg = raw_config(0.1, 2.0, 0.5, 3);
    for (int i = 1; i <= cfg.m; ++i) {
        auto a = truncated_moment_coeffs(mu, cfg, i);
        REQUIRE(static_cast<int>(a.size()) == cfg.taylor_degree + 1);
        CHECK(a[0] == 1.0);
        for (std::size_t n = 1; n < a.size(); ++n) CHECK(a[n] == 0.0);
    }
}

TEST_CASE("truncated moment coefficients: truncation removes all mass") {
    auto cfg = raw_config(0.1, 2.0, 0.5, 2);
    // largest cutoff is at i = 1: 2 |log eps| / gamma ~ 9.2
    auto mu = MixingMeasure::from_atoms({{50.0, 0.5}, {100.0, 0.5}});
    for (int i = 1; i <= cfg.m; ++i) {
        auto a = truncated_moment_coeffs(mu, cfg, i);
        for (double an : a) CHECK(an == 0.0);
    }
}

TEST_CASE("truncated moment coefficients: unit atom closed form") {
    auto mu = MixingMeasure::from_atoms({{1.0, 1.0}});
    auto cfg = raw_config(0.1, 2.0, 1.0, 1);
    auto a = truncated_moment_coeffs(mu, cfg, 1);
    double expected = 1.0;  // 2^n / n!
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a[n] == doctest::Approx(expected).epsilon(1e-12));
        expected *= 2.0 / static_cast<double>(n + 1);
    }
}

TEST_CASE("coefficient magnitude bound |4 log eps|^n / n!") {
    const double four_log = 4.0 * std::fabs(std::log(0.1));
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto mu = random_measure(seed, 6, 1.0);
        for (int i = 1; i <= cfg.m; ++i) {
            auto a = truncated_moment_coeffs(mu, cfg, i);
            double bound = 1.0;
            for (std::size_t n = 0; n < a.size(); ++n) {
                CHECK(a[n] >= 0.0);
                CHECK(a[n] <= bound * (1.0 + 1e-12));
                bound *= four_log / static_cast<double>(n + 1);
            }
        }
    }
}

TEST_CASE("coefficient bound holds in exact rational arithmetic") {
    // Dyadic data so that every double below is an exact rational: atoms at
    // 1/2, 3/2, 2 with weights 1/4; gamma = 1/16, eps = 0.1.
    const double eps = 0.1;
    auto mu = MixingMeasure::from_atoms({{0.5, 0.25}, {1.5, 0.25}, {2.0, 0.25}});
    auto cfg = raw_config(eps, 2.0, 1.0 / 16.0, 2);

    // q: a rational lower bound on 4 |log eps| (rounding the double down).
    const double four_log = 4.0 * std::fabs(std::log(eps));
    BigRational q(std::nextafter(four_log, 0.0));
    for (int i = 1; i <= cfg.m; ++i) {
        BigRational scale(std::ldexp(cfg.gamma, i));  // 2^i gamma, exact dyadic
        double cutoff = std::ldexp(std::fabs(std::log(eps)), 2 - i) / cfg.gamma;
        // every retained atom must satisfy scale * x <= q for the chain below
        for (const auto& atom : mu.atoms()) {
            if (atom.location < cutoff) CHECK(scale * BigRational(atom.location) <= q);
        }

        auto a_dbl = truncated_moment_coeffs(mu, cfg, i);
        BigRational scale_pow = 1;
        BigRational q_pow = 1;
        BigRational factorial = 1;
        for (int n = 0; n <= cfg.taylor_degree; ++n) {
            if (n > 0) {
                scale_pow *= scale;
                q_pow *= q;
                factorial *= BigRational(static_cast<long>(n));
            }
            BigRational moment = 0;
            for (const auto& atom : mu.atoms()) {
                if (atom.location >= cutoff) continue;
                BigRational xp = 1;
                for (int j = 0; j < n; ++j) xp *= BigRational(atom.location);
                moment += BigRational(atom.weight) * xp;
            }
            BigRational a_exact = scale_pow * moment / factorial;
            CHECK(a_exact <= q_pow / factorial);
            double ad = a_exact.get_d();
            CHECK(a_dbl[static_cast<std::size_t>(n)] ==
                  doctest::Approx(ad).epsilon(1e-12));
        }
    }
}

TEST_CASE("quantization examples") {
    const double eps = 0.1;
    {
        std::vector<double> a{0.3};  // on the 0.025 grid exactly
        auto qc = quantize_coefficients(a, eps);
        CHECK(qc.b[0] == doctest::Approx(0.3).epsilon(1e-15));
        CHECK(qc.c[0] == doctest::Approx(0.3).epsilon(1e-15));
        CHECK(qc.b_steps[0] == 12);
        CHECK(qc.c_steps[0] == 12);
    }
    {
        std::vector<double> a{0.31};  // 12.4 grid steps, even n: ceil for b
        auto qc = quantize_coefficients(a, eps);
        CHECK(qc.b[0] == doctest::Approx(0.325).epsilon(1e-15));
        CHECK(qc.c[0] == doctest::Approx(0.3).epsilon(1e-15));
    }
    {
        std::vector<double> a{0.0, 0.31};  // odd n flips roles: floor for b
        auto qc = quantize_coefficients(a, eps);
        CHECK(qc.b[1] == doctest::Approx(0.3).epsilon(1e-15));
        CHECK(qc.c[1] == doctest::Approx(0.3125).epsilon(1e-15));
    }
}

TEST_CASE("quantization error and parity over random coefficients") {
    const double eps = 0.2;
    std::mt19937_64 rng(4);
    const double four_log = 4.0 * std::fabs(std::log(eps));
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(20);
        double bound = 1.0;
        for (std::size_t n = 0; n < a.size(); ++n) {
            a[n] = bound * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            bound *= four_log / static_cast<double>(n + 1);
        }
        auto qc = quantize_coefficients(a, eps);
        for (std::size_t n = 0; n < a.size(); ++n) {
            double grid = std::ldexp(eps, -static_cast<int>(n) - 2);
            CHECK(std::fabs(qc.b[n] - a[n]) <= grid * (1.0 + 1e-12));
            CHECK(std::fabs(qc.c[n] - a[n]) <= grid * (1.0 + 1e-12));
            if (n % 2 == 0) {  // even n: b above a, c below
                CHECK(qc.b[n] >= a[n] - 1e-15);
                CHECK(qc.c[n] <= a[n] + 1e-15);
            } else {
                CHECK(qc.b[n] <= a[n] + 1e-15);
                CHECK(qc.c[n] >= a[n] - 1e-15);
            }
        }
    }
}

TEST_CASE("bracket for the constant function") {
    auto nu = BaseMeasure::lebesgue01();
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);
    auto mu = MixingMeasure::from_atoms({{0.0, 1.0}});
    auto result = build_bracket(mu, cfg, nu);
    CHECK(result.verified_width <= 0.1);
    CHECK(max_containment_violation(mu, result.pair, 10000) <= 1e-9);
    CHECK(result.pair.lower(2.0) == 0.0);       // outside the window
    CHECK(result.pair.upper(2.0) == 1.0);
}

TEST_CASE("bracket containment and width for a random measure") {
    auto nu = BaseMeasure::lebesgue01();
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);
    auto mu = random_measure(7, 5, 1.0);
    auto result = build_bracket(mu, cfg, nu);
    CHECK(result.verified_width <= 0.1);
    CHECK(max_containment_violation(mu, result.pair, 10000) <= 1e-9);

    // lower <= upper everywhere, including outside the window
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> tdist(0.0, 2.0);
    for (int k = 0; k < 500; ++k) {
        double t = tdist(rng);
        CHECK(result.pair.lower(t) <= result.pair.upper(t) + 1e-15);
    }
}

TEST_CASE("width budget across epsilon and p") {
    auto nu = BaseMeasure::lebesgue01();
    for (double eps : {0.2, 0.1, 0.05}) {
        for (double p : {1.0, 2.0}) {
            auto cfg = BracketConfig::for_lebesgue01(eps, p);
            for (std::uint64_t seed : {3u, 17u}) {
                auto mu = random_measure(seed, 5, 1.0);
                auto result = build_bracket(mu, cfg, nu);
                CHECK(result.verified_width <= eps);
                CHECK(max_containment_violation(mu, result.pair, 2000) <= 1e-9);
            }
        }
    }
}

TEST_CASE("fingerprint determinism") {
    auto nu = BaseMeasure::lebesgue01();
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);
    auto mu = random_measure(21, 4, 1.0);
    auto r1 = build_bracket(mu, cfg, nu);
    auto r2 = build_bracket(mu, cfg, nu);
    CHECK(r1.pair.id() == r2.pair.id());
    CHECK_FALSE(r1.pair.id().empty());

    auto other = random_measure(22, 4, 1.0);
    auto r3 = build_bracket(other, cfg, nu);
    CHECK(r1.pair.id() != r3.pair.id());
}

TEST_CASE("remainder bounds: origin atom gives zero remainder and tail") {
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);
    auto mu = MixingMeasure::from_atoms({{0.0, 1.0}});
    auto report = remainder_bounds_check(mu, cfg);
    CHECK(report.passed);
    CHECK(report.max_taylor_remainder <= 1e-30);
    CHECK(report.max_tail <= 1e-30);
}

TEST_CASE("remainder bounds: atom above all truncation cutoffs") {
    auto cfg = BracketConfig::for_lebesgue01(0.2, 2.0);
    // largest cutoff is 2 |log 0.2| / gamma ~ 1287.7; put the atom above it
    auto mu = MixingMeasure::from_atoms({{2000.0, 1.0}});
    auto report = remainder_bounds_check(mu, cfg);
    CHECK(report.passed);
    CHECK(report.max_taylor_remainder <= report.taylor_budget);
    CHECK(report.max_tail <= 0.04 + 1e-15);  // eps^2
}

TEST_CASE("remainder bounds: random measures across epsilon") {
    for (double eps : {0.2, 0.1, 0.05}) {
        auto cfg = BracketConfig::for_lebesgue01(eps, 2.0);
        for (std::uint64_t seed : {1u, 8u}) {
            auto mu = random_measure(seed, 5, 1.0);
            auto report = remainder_bounds_check(mu, cfg);
            CHECK(report.passed);
            CHECK(report.max_tail <= eps * eps + 1e-15);
        }
    }
}

TEST_CASE("realization count bound: direct sum at m = 1") {
    auto cfg = raw_config(0.1, 2.0, 0.01, 1);
    const double eps = 0.1;
    const double four_log = 4.0 * std::fabs(std::log(eps));
    double sum = 0.0;
    for (int n = 0; n <= cfg.taylor_degree; ++n) {
        double log_term = (n + 1) * std::log(2.0) - std::log(eps) +
                          n * std::log(four_log) - std::lgamma(n + 1.0);
        sum += std::log1p(std::exp(log_term));
    }
    CHECK(realization_count_bound(cfg) == doctest::Approx(2.0 * sum).epsilon(1e-12));

    auto doubled = raw_config(0.1, 2.0, 0.01, 2);
    CHECK(realization_count_bound(doubled) ==
          doctest::Approx(2.0 * realization_count_bound(cfg)).epsilon(1e-12));
}

TEST_CASE("realization count bound scales like |log eps|^2") {
    std::vector<double> ratios;
    for (int k = 2; k <= 8; ++k) {
        double eps = std::pow(10.0, -k);
        auto cfg = raw_config(eps, 2.0, 0.01, 1);
        double L = std::fabs(std::log(eps));
        ratios.push_back(realization_count_bound(cfg) / (L * L));
    }
    // the normalized values settle down: successive gaps shrink
    for (std::size_t i = 2; i < ratios.size(); ++i) {
        CHECK(std::fabs(ratios[i] - ratios[i - 1]) <
              std::fabs(ratios[i - 1] - ratios[i - 2]));
    }
    CHECK(std::fabs(ratios.back() - ratios[ratios.size() - 2]) < 0.05 * ratios.back());
}

TEST_CASE("empirical bracket count") {
    auto nu = BaseMeasure::lebesgue01();
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);

    auto mu = random_measure(5, 4, 1.0);
    std::vector<MixingMeasure> one{mu};
    CHECK(empirical_bracket_count(one, cfg, nu) == 1);

    std::vector<MixingMeasure> dup{mu, mu, mu};
    CHECK(empirical_bracket_count(dup, cfg, nu) == 1);

    std::vector<MixingMeasure> pool;
    for (std::uint64_t seed = 0; seed < 40; ++seed) pool.push_back(random_measure(seed, 4, 1.0));
    auto full = empirical_bracket_count(pool, cfg, nu);

    // permutation invariance
    std::vector<MixingMeasure> shuffled = pool;
    std::mt19937_64 rng(1);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(empirical_bracket_count(shuffled, cfg, nu) == full);

    // nondecreasing in the number of inputs
    std::size_t prev = 0;
    for (std::size_t k = 1; k <= pool.size(); k += 13) {
        std::vector<MixingMeasure> prefix(pool.begin(), pool.begin() + k);
        auto c = empirical_bracket_count(prefix, cfg, nu);
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("empirical count stays below the analytic bound") {
    auto nu = BaseMeasure::lebesgue01();
    auto cfg = BracketConfig::for_lebesgue01(0.1, 2.0);
    std::vector<MixingMeasure> pool;
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        pool.push_back(random_measure(seed, 5, 1.0));
    auto count = empirical_bracket_count(pool, cfg, nu);
    CHECK(count >= 1);
    CHECK(std::log(static_cast<double>(count)) <= realization_count_bound(cfg));
}
