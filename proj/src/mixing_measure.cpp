#include "cme/mixing_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cme/quadrature.hpp"
#include "json.hpp"

namespace cme {

MixingMeasure MixingMeasure::from_atoms(std::vector<Atom> atoms) {
    for (const Atom& a : atoms) {
        if (!(a.location >= 0.0) || !std::isfinite(a.location))
            throw std::invalid_argument("MixingMeasure: atom location must be finite and >= 0");
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight))
            throw std::invalid_argument("MixingMeasure: atom weight must be finite and >= 0");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> merged;
    for (const Atom& a : atoms) {
        if (a.weight == 0.0) continue;
        if (!merged.empty() && merged.back().location == a.location) {
            merged.back().weight += a.weight;
        } else {
            merged.push_back(a);
        }
    }
    double mass = 0.0;
    for (const Atom& a : merged) mass += a.weight;
    if (mass > 1.0 + kMassTolerance)
        throw std::invalid_argument("MixingMeasure: total mass exceeds 1");
    MixingMeasure m;
    m.atoms_ = std::move(merged);
    m.total_mass_ = mass;
    return m;
}

std::string MixingMeasure::to_json() const {
    nlohmann::json j;
    j["atoms"] = nlohmann::json::array();
    for (const Atom& a : atoms_) j["atoms"].push_back({a.location, a.weight});
    return j.dump();
}

MixingMeasure MixingMeasure::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<Atom> atoms;
    for (const auto& pair : j.at("atoms"))
        atoms.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
    return from_atoms(std::move(atoms));
}

BaseMeasure BaseMeasure::lebesgue01() {
    BaseMeasure b;
    b.kind_ = Kind::lebesgue_unit_interval;
    return b;
}

BaseMeasure BaseMeasure::atomic(std::vector<MixingMeasure::Atom> points) {
    double mass = 0.0;
    for (const auto& p : points) {
        if (!(p.weight >= 0.0) || !(p.location >= 0.0))
            throw std::invalid_argument("BaseMeasure: atomic nu needs nonnegative points and masses");
        mass += p.weight;
    }
    if (std::fabs(mass - 1.0) > kMassTolerance)
        throw std::invalid_argument("BaseMeasure: atomic nu must have total mass 1");
    BaseMeasure b;
    b.kind_ = Kind::atomic;
    b.points_ = std::move(points);
    return b;
}

double BaseMeasure::interval_mass(double a, double b) const {
    if (kind_ == Kind::lebesgue_unit_interval) {
        double lo = std::max(a, 0.0), hi = std::min(b, 1.0);
        return std::max(0.0, hi - lo);
    }
    double mass = 0.0;
    for (const auto& p : points_)
        if (p.location >= a && p.location <= b) mass += p.weight;
    return mass;
}

double laplace_eval(const MixingMeasure& mu, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("laplace_eval: t must be >= 0");
    double s = 0.0;
    for (const auto& a : mu.atoms()) s += a.weight * std::exp(-t * a.location);
    return s;
}

double mixture_density_eval(const MixingMeasure& mu, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("mixture_density_eval: t must be >= 0");
    if (std::fabs(mu.total_mass() - 1.0) > kMassTolerance)
        throw std::invalid_argument("mixture_density_eval: total mass must be 1");
    double s = 0.0;
    for (const auto& a : mu.atoms()) s += a.weight * a.location * std::exp(-t * a.location);
    return s;
}

MonotonicityReport complete_monotonicity_check(const MixingMeasure& mu, int order,
                                               const std::vector<double>& grid, double step) {
    if (order < 1 || order > 10)
        throw std::invalid_argument("complete_monotonicity_check: order must be in [1, 10]");
    if (!(step > 0.0)) throw std::invalid_argument("complete_monotonicity_check: step must be > 0");
    for (double t : grid)
        if (!(t > order * step))
            throw std::invalid_argument("complete_monotonicity_check: grid too close to 0 for requested order");

    // Binomial table for forward differences up to the requested order.
    std::vector<std::vector<double>> binom(order + 1);
    for (int k = 0; k <= order; ++k) {
        binom[k].resize(k + 1);
        binom[k][0] = binom[k][k] = 1.0;
        for (int j = 1; j < k; ++j) binom[k][j] = binom[k - 1][j - 1] + binom[k - 1][j];
    }

    MonotonicityReport report;
    for (double t : grid) {
        for (int k = 1; k <= order; ++k) {
            double diff = 0.0, scale = 0.0;
            for (int j = 0; j <= k; ++j) {
                double term = binom[k][j] * laplace_eval(mu, t + j * step);
                diff += ((k - j) % 2 == 0 ? term : -term);
                scale += std::fabs(term);
            }
            double signed_diff = (k % 2 == 0 ? diff : -diff);
            double tol = kMonotonicityRelTolerance * std::max(scale, 1.0);
            if (signed_diff < -tol) {
                report.passed = false;
                if (-signed_diff > report.worst_violation) {
                    report.worst_violation = -signed_diff;
                    report.failed_order = k;
                    report.failed_at = t;
                }
            }
        }
    }
    return report;
}

namespace {

double lp_over_segments(const RealFn& f, const RealFn& g, double p,
                        const std::vector<double>& boundaries, std::size_t nodes) {
    double integral = integrate_segments(
        [&](double t) { return std::pow(std::fabs(f(t) - g(t)), p); }, boundaries, nodes);
    return std::pow(std::max(integral, 0.0), 1.0 / p);
}

}  // namespace

LpDistanceResult lp_distance(const RealFn& f, const RealFn& g, const BaseMeasure& nu,
                             const LpParams& params, const std::vector<double>& breakpoints) {
    if (!(params.p >= 1.0)) throw std::invalid_argument("lp_distance: p must be >= 1");
    LpDistanceResult out;

    if (nu.kind() == BaseMeasure::Kind::atomic) {
        if (std::isinf(params.p)) {
            double sup = 0.0;
            for (const auto& pt : nu.points()) sup = std::max(sup, std::fabs(f(pt.location) - g(pt.location)));
            out.value = sup;
            out.grid_supremum = true;
            return out;
        }
        double acc = 0.0;
        for (const auto& pt : nu.points())
            acc += pt.weight * std::pow(std::fabs(f(pt.location) - g(pt.location)), params.p);
        out.value = std::pow(acc, 1.0 / params.p);
        return out;
    }

    // Lebesgue on [0,1]: panels split at supplied breakpoints.
    std::vector<double> bounds{0.0};
    for (double b : breakpoints)
        if (b > 0.0 && b < 1.0) bounds.push_back(b);
    bounds.push_back(1.0);
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

    if (std::isinf(params.p)) {
        double sup = 0.0;
        const GaussLegendreRule& rule = gauss_legendre(params.quadrature_points_per_block);
        for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
            double half = 0.5 * (bounds[s + 1] - bounds[s]), mid = 0.5 * (bounds[s] + bounds[s + 1]);
            for (double x : rule.nodes) sup = std::max(sup, std::fabs(f(mid + half * x) - g(mid + half * x)));
        }
        out.value = sup;
        out.grid_supremum = true;
        return out;
    }

    double coarse = lp_over_segments(f, g, params.p, bounds, params.quadrature_points_per_block);
    double fine = lp_over_segments(f, g, params.p, bounds, 2 * params.quadrature_points_per_block);
    out.value = fine;
    out.error_bound = std::fabs(fine - coarse);
    return out;
}

LpDistanceResult lp_distance(const MixingMeasure& f, const MixingMeasure& g, const BaseMeasure& nu,
                             const LpParams& params) {
    return lp_distance([&](double t) { return laplace_eval(f, t); },
                       [&](double t) { return laplace_eval(g, t); }, nu, params);
}

MixingMeasure random_measure(std::uint64_t seed, std::size_t max_atoms, double mass) {
    if (max_atoms < 1) throw std::invalid_argument("random_measure: max_atoms must be >= 1");
    if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("random_measure: mass must be in (0, 1]");
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53; };

    std::size_t count = 1 + static_cast<std::size_t>(unit() * static_cast<double>(max_atoms));
    count = std::min(count, max_atoms);

    std::vector<MixingMeasure::Atom> atoms(count);
    double gsum = 0.0;
    for (auto& a : atoms) {
        a.location = std::exp(std::log(1e-3) + unit() * std::log(1e6));
        a.weight = -std::log(unit());
        gsum += a.weight;
    }
    for (auto& a : atoms) a.weight *= mass / gsum;
    return MixingMeasure::from_atoms(std::move(atoms));
}

}  // namespace cme
