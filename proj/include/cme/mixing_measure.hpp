#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cme {

// Fixed tolerances; overridable knobs live in the structs that use them.
inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kMonotonicityRelTolerance = 1e-9;

// Finite atomic measure mu on [0, inf). Canonical form: atoms sorted by
// location, strictly increasing, equal locations merged by weight addition.
class MixingMeasure {
public:
    struct Atom {
        double location;
        double weight;
    };

    static MixingMeasure from_atoms(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    double total_mass() const { return total_mass_; }

    std::string to_json() const;
    static MixingMeasure from_json(const std::string& text);

private:
    MixingMeasure() = default;
    std::vector<Atom> atoms_;
    double total_mass_ = 0.0;
};

// Probability measure nu used for the L^p norm.
class BaseMeasure {
public:
    enum class Kind { lebesgue_unit_interval, atomic };

    static BaseMeasure lebesgue01();
    static BaseMeasure atomic(std::vector<MixingMeasure::Atom> points);

    Kind kind() const { return kind_; }
    const std::vector<MixingMeasure::Atom>& points() const { return points_; }

    // nu([a, b]) for the supported kinds.
    double interval_mass(double a, double b) const;

private:
    Kind kind_ = Kind::lebesgue_unit_interval;
    std::vector<MixingMeasure::Atom> points_;
};

struct LpParams {
    double p = 2.0;
    std::size_t quadrature_points_per_block = 16;
};

// f(t) = sum_i w_i exp(-t x_i).
double laplace_eval(const MixingMeasure& mu, double t);

// p(t) = sum_i w_i x_i exp(-t x_i); requires total mass 1.
double mixture_density_eval(const MixingMeasure& mu, double t);

struct MonotonicityReport {
    bool passed = true;
    int failed_order = -1;
    double failed_at = 0.0;
    double worst_violation = 0.0;
};

// Checks (-1)^k Delta_h^k f(t) >= -tol for k = 0..order at every grid point.
MonotonicityReport complete_monotonicity_check(const MixingMeasure& mu, int order,
                                               const std::vector<double>& grid, double step);

struct LpDistanceResult {
    double value = 0.0;
    double error_bound = 0.0;      // quadrature refinement estimate
    bool grid_supremum = false;    // true for p = inf over quadrature nodes
};

using RealFn = std::function<double(double)>;

// L^p(nu) distance between two evaluable functions. For Lebesgue nu the
// integral is composite Gauss-Legendre over [0,1]; extra breakpoints split
// the panels (used for piecewise envelopes). For atomic nu the sum is exact.
LpDistanceResult lp_distance(const RealFn& f, const RealFn& g, const BaseMeasure& nu,
                             const LpParams& params, const std::vector<double>& breakpoints = {});

LpDistanceResult lp_distance(const MixingMeasure& f, const MixingMeasure& g, const BaseMeasure& nu,
                             const LpParams& params);

// Deterministic generator: locations log-uniform in [1e-3, 1e3], weights
// normalized to the requested mass.
MixingMeasure random_measure(std::uint64_t seed, std::size_t max_atoms, double mass);

}  // namespace cme
