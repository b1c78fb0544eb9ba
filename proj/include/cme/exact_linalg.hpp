#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <string>
#include <vector>

#include "cme/bigfloat.hpp"

namespace cme {

// Exact rational scalar. Arithmetic on canonical operands stays canonical;
// two-argument construction does not, hence the helper below.
using BigRational = mpq_class;

inline BigRational make_rational(long num, long den) {
    BigRational r(num, den);
    r.canonicalize();
    return r;
}

class RationalMatrix {
public:
    explicit RationalMatrix(std::size_t n) : n_(n), e_(n * n) {}

    std::size_t dim() const { return n_; }
    BigRational& at(std::size_t i, std::size_t j) { return e_[i * n_ + j]; }
    const BigRational& at(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }

    static RationalMatrix identity(std::size_t n);
    std::string to_string() const;

private:
    std::size_t n_;
    std::vector<BigRational> e_;
};

// Exact determinant via Bareiss fraction-free elimination on the
// denominator-cleared integer matrix. n <= 64.
BigRational det_exact(const RationalMatrix& m);

// Exact permanent via Ryser's inclusion-exclusion with Gray-code row-sum
// updates. n <= 14.
BigRational permanent_exact(const RationalMatrix& m);

class BigFloatMatrix {
public:
    BigFloatMatrix(std::size_t n, mpfr_prec_t prec);

    std::size_t dim() const { return n_; }
    mpfr_prec_t precision() const { return prec_; }
    BigFloat& at(std::size_t i, std::size_t j) { return e_[i * n_ + j]; }
    const BigFloat& at(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }

    static BigFloatMatrix from_rational(const RationalMatrix& m, mpfr_prec_t prec);

private:
    std::size_t n_;
    mpfr_prec_t prec_;
    std::vector<BigFloat> e_;
};

struct HighPrecDet {
    BigFloat value;
    BigFloat error_bound;
    // False when the forward error bound exceeds |value|, i.e. the stated
    // precision cannot resolve the determinant's sign and magnitude.
    bool reliable = false;
};

// Determinant via partial-pivoted elimination at the matrix's precision.
// A running forward error bound is carried alongside every entry, so the
// result is accompanied by a conservative absolute error estimate.
HighPrecDet det_highprec(const BigFloatMatrix& m);

}  // namespace cme
