#include "cme/exact_linalg.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace cme {

RationalMatrix RationalMatrix::identity(std::size_t n) {
    RationalMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

std::string RationalMatrix::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            os << at(i, j).get_str() << (j + 1 < n_ ? " " : "\n");
        }
    }
    return os.str();
}

BigRational det_exact(const RationalMatrix& m) {
    const std::size_t n = m.dim();
    if (n == 0) return 1;
    if (n > 64) throw std::invalid_argument("det_exact: dimension > 64");

    // Clear denominators row by row, then run Bareiss on integers.
    std::vector<mpz_class> a(n * n);
    mpz_class row_scale_product = 1;
    for (std::size_t i = 0; i < n; ++i) {
        mpz_class l = 1;
        for (std::size_t j = 0; j < n; ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m.at(i, j).get_den().get_mpz_t());
        for (std::size_t j = 0; j < n; ++j) {
            mpq_class scaled = m.at(i, j) * BigRational(l);
            a[i * n + j] = scaled.get_num();  // denominator is 1 after scaling
        }
        row_scale_product *= l;
    }

    int sign = 1;
    mpz_class prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k * n + k] == 0) {
            std::size_t piv = k + 1;
            while (piv < n && a[piv * n + k] == 0) ++piv;
            if (piv == n) return 0;
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                mpz_class t = a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j];
                mpz_divexact(a[i * n + j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
            }
            a[i * n + k] = 0;
        }
        prev = a[k * n + k];
    }

    BigRational det(a[n * n - 1] * sign, row_scale_product);
    det.canonicalize();
    return det;
}

BigRational permanent_exact(const RationalMatrix& m) {
    const std::size_t n = m.dim();
    if (n == 0) return 1;
    if (n > 14) throw std::invalid_argument("permanent_exact: dimension > 14");

    // Ryser: per(A) = (-1)^n sum_{S != 0} (-1)^{|S|} prod_i sum_{j in S} a_ij,
    // with Gray-code updates of the row sums.
    std::vector<BigRational> rowsum(n);
    BigRational acc = 0;
    const std::uint32_t full = (1u << n) - 1;
    std::uint32_t gray_prev = 0;
    for (std::uint32_t k = 1; k <= full; ++k) {
        std::uint32_t gray = k ^ (k >> 1);
        std::uint32_t diff = gray ^ gray_prev;
        std::size_t j = std::countr_zero(diff);
        if (gray & diff) {
            for (std::size_t i = 0; i < n; ++i) rowsum[i] += m.at(i, j);
        } else {
            for (std::size_t i = 0; i < n; ++i) rowsum[i] -= m.at(i, j);
        }
        gray_prev = gray;

        BigRational prod = rowsum[0];
        for (std::size_t i = 1; i < n; ++i) prod *= rowsum[i];
        if ((std::popcount(gray) & 1u) != 0) {
            acc -= prod;
        } else {
            acc += prod;
        }
    }
    if (n & 1u) acc = -acc;
    return acc;
}

BigFloatMatrix::BigFloatMatrix(std::size_t n, mpfr_prec_t prec)
    : n_(n), prec_(prec), e_(n * n, BigFloat(prec)) {
    if (prec < 64) throw std::invalid_argument("BigFloatMatrix: precision_bits >= 64 required");
}

BigFloatMatrix BigFloatMatrix::from_rational(const RationalMatrix& m, mpfr_prec_t prec) {
    BigFloatMatrix r(m.dim(), prec);
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j) r.at(i, j) = BigFloat(m.at(i, j), prec);
    return r;
}

HighPrecDet det_highprec(const BigFloatMatrix& m) {
    const std::size_t n = m.dim();
    const mpfr_prec_t prec = m.precision();
    HighPrecDet out{BigFloat(prec), BigFloat(prec), false};
    if (n == 0) {
        out.value = BigFloat(1.0, prec);
        out.reliable = true;
        return out;
    }

    std::vector<BigFloat> a;
    a.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a.push_back(m.at(i, j));

    // err[i][j] holds an absolute forward error bound for a[i][j], in units
    // of u = 2^{1-prec}. Inputs are assumed accurate to a few ulps.
    std::vector<double> err(n * n);
    for (std::size_t i = 0; i < n * n; ++i) err[i] = 4.0 * std::fabs(a[i].to_double());

    int sign = 1;
    double rel_pivot_err_sum = 0.0;
    BigFloat det(1.0, prec);
    bool zero_pivot = false;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (abs(a[i * n + k]) > abs(a[piv * n + k])) piv = i;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a[k * n + j], a[piv * n + j]);
                std::swap(err[k * n + j], err[piv * n + j]);
            }
            sign = -sign;
        }
        const BigFloat& p = a[k * n + k];
        const double pd = std::fabs(p.to_double());
        if (p.sign() == 0) {
            zero_pivot = true;
            break;
        }
        det = det * p;
        rel_pivot_err_sum += err[k * n + k] / pd;

        for (std::size_t i = k + 1; i < n; ++i) {
            BigFloat f = a[i * n + k] / p;
            const double fd = std::fabs(f.to_double());
            double err_f = (err[i * n + k] + fd * err[k * n + k]) / pd + fd;
            for (std::size_t j = k + 1; j < n; ++j) {
                BigFloat t = f * a[k * n + j];
                const double kjd = std::fabs(a[k * n + j].to_double());
                double err_t = fd * err[k * n + j] + kjd * err_f + std::fabs(t.to_double());
                a[i * n + j] = a[i * n + j] - t;
                err[i * n + j] += err_t + std::fabs(a[i * n + j].to_double());
            }
        }
    }

    BigFloat unit(prec);
    mpfr_set_ui_2exp(unit.raw(), 1, 1 - static_cast<long>(prec), MPFR_RNDN);

    if (zero_pivot) {
        double residual = 0.0;
        for (std::size_t i = 0; i < n * n; ++i) residual += err[i];
        out.value = BigFloat(0.0, prec);
        out.error_bound = BigFloat(residual, prec) * unit;
        out.reliable = (residual == 0.0);
        return out;
    }

    if (sign < 0) det = -det;
    out.value = det;
    out.error_bound = abs(det) * BigFloat(rel_pivot_err_sum + static_cast<double>(n), prec) * unit;
    out.reliable = out.error_bound < abs(det);
    return out;
}

}  // namespace cme
