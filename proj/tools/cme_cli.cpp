// Command-line front end: bracket construction, small-ball bounds, lemma
// verification, and Monte Carlo simulation, with JSON/CSV reports.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cme/bracketing.hpp"
#include "cme/exact_linalg.hpp"
#include "cme/mc_sim.hpp"
#include "cme/mixing_measure.hpp"
#include "cme/smallball.hpp"

using json = nlohmann::ordered_json;
using namespace cme;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json make_manifest(const std::string& subcommand, json parameters) {
    json m;
    m["subcommand"] = subcommand;
    m["parameters"] = std::move(parameters);
    m["tool_version"] = kToolVersion;
    m["timestamp"] = utc_timestamp();
    return m;
}

// Exact rationals go out in both exact and decimal form.
json rational_json(const BigRational& q) {
    json j;
    j["exact"] = q.get_str();
    j["decimal"] = BigFloat(q, 256).str(30);
    return j;
}

void emit_document(const json& doc, const std::string& out_path) {
    std::string text = doc.dump(2);
    text.push_back('\n');
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file: " + out_path);
        f << text;
    }
    std::cout << text;
}

mpfr_prec_t resolve_precision(long flag_value) {
    if (flag_value > 0) return static_cast<mpfr_prec_t>(flag_value);
    if (const char* env = std::getenv("CME_PRECISION_BITS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 64) return static_cast<mpfr_prec_t>(v);
    }
    return 1024;
}

json estimates_json(const SimResult& result) {
    json arr = json::array();
    for (const auto& est : result.estimates) {
        json e;
        e["epsilon"] = est.epsilon;
        e["hits"] = est.hits;
        e["samples"] = est.samples;
        e["p_hat"] = est.p_hat;
        e["ci_lo"] = est.ci_lo;
        e["ci_hi"] = est.ci_hi;
        arr.push_back(std::move(e));
    }
    return arr;
}

void write_csv(const std::string& path, const json& manifest, const SimResult& result) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << "# " << manifest.dump() << "\n";
    f << "epsilon,hits,samples,p_hat,ci_lo,ci_hi\n";
    f.imbue(std::locale::classic());
    f.precision(17);
    for (const auto& est : result.estimates) {
        f << est.epsilon << ',' << est.hits << ',' << est.samples << ',' << est.p_hat << ','
          << est.ci_lo << ',' << est.ci_hi << "\n";
    }
}

std::vector<EpsEstimate> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open input file: " + path);
    std::vector<EpsEstimate> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
        std::istringstream ss(line);
        EpsEstimate est;
        char comma;
        if (ss >> est.epsilon >> comma >> est.hits >> comma >> est.samples >> comma >>
            est.p_hat >> comma >> est.ci_lo >> comma >> est.ci_hi)
            out.push_back(est);
    }
    return out;
}

// --- subcommand bodies; return process exit code ---

int run_bracket(double epsilon, double p, const std::string& measure_path, std::uint64_t seed,
                int max_atoms, const std::string& out_path) {
    MixingMeasure mu = [&] {
        if (measure_path.empty()) return random_measure(seed, static_cast<std::size_t>(max_atoms), 1.0);
        std::ifstream f(measure_path);
        if (!f) throw std::runtime_error("cannot open measure file: " + measure_path);
        std::stringstream ss;
        ss << f.rdbuf();
        return MixingMeasure::from_json(ss.str());
    }();

    auto nu = BaseMeasure::lebesgue01();
    auto cfg = BracketConfig::for_lebesgue01(epsilon, p);
    auto result = build_bracket(mu, cfg, nu);
    double violation = max_containment_violation(mu, result.pair, 10000);

    json params;
    params["epsilon"] = epsilon;
    params["p"] = p;
    params["measure"] = measure_path.empty() ? "random" : measure_path;
    params["seed"] = seed;
    params["max_atoms"] = max_atoms;

    json payload;
    payload["gamma"] = cfg.gamma;
    payload["m"] = cfg.m;
    payload["taylor_degree"] = cfg.taylor_degree;
    payload["width"] = result.verified_width;
    payload["width_error_bound"] = result.width_error_bound;
    payload["max_containment_violation"] = violation;
    payload["log_realization_count_bound"] = realization_count_bound(cfg);
    payload["fingerprint"] = result.pair.id();

    json doc;
    doc["manifest"] = make_manifest("bracket", params);
    doc["payload"] = payload;
    emit_document(doc, out_path);
    return (result.verified_width <= epsilon && violation <= 1e-12) ? 0 : 1;
}

int run_smallball_bound(double epsilon, int m, const std::string& mode, mpfr_prec_t prec,
                        const std::string& out_path) {
    json params;
    params["epsilon"] = epsilon;
    params["mode"] = mode;
    params["precision_bits"] = static_cast<long>(prec);

    json payload;
    if (m <= 0) {
        auto [best_m, bound] = optimal_m(epsilon);
        payload["m"] = best_m;
        payload["n"] = best_m * best_m;
        payload["log_prob_bound"] = bound;
        payload["optimized"] = true;
    } else {
        params["m"] = m;
        auto mode_e = mode == "computed" ? DetMode::computed : DetMode::analytic;
        if (mode_e == DetMode::computed) {
            auto det = det_sigma_highprec(m, prec);
            payload["det_sigma"] = det.value.str(30);
            payload["det_sigma_reliable"] = det.reliable;
        }
        auto b = smallball_log_upper(epsilon, m, mode_e);
        payload["m"] = b.m;
        payload["n"] = b.n;
        payload["log_prob_bound"] = b.log_prob_bound;
        payload["optimized"] = false;
    }

    json doc;
    doc["manifest"] = make_manifest("smallball bound", params);
    doc["payload"] = payload;
    emit_document(doc, out_path);
    return 0;
}

int run_smallball_verify(int m, mpfr_prec_t prec, const std::string& out_path) {
    json params;
    params["m"] = m;
    params["precision_bits"] = static_cast<long>(prec);

    bool ok = true;
    json payload;

    auto d = delta_sequence(m);
    payload["delta"] = d.values;

    auto ratio = ratio_bound_check(d);
    json rj;
    rj["ok"] = ratio.ok;
    rj["min_delta"] = ratio.min_delta;
    rj["bound_exponent"] = ratio.bound_exponent;
    rj["actual_exponent"] = ratio.actual_exponent;
    payload["ratio_bound"] = rj;
    ok = ok && ratio.ok;

    if (m <= 3) {
        auto lem = lemma2_verify(m);
        json lj;
        lj["per_le_one"] = lem.per_le_one;
        lj["det_ge_threshold"] = lem.det_ge_threshold;
        lj["coarse_chain_ok"] = lem.coarse_chain_ok;
        lj["per"] = rational_json(lem.per);
        lj["det"] = rational_json(lem.det);
        lj["log_det"] = lem.log_det;
        lj["log_threshold"] = lem.log_threshold;
        payload["permanent_determinant"] = lj;
        ok = ok && lem.per_le_one && lem.det_ge_threshold && lem.coarse_chain_ok;
    } else {
        payload["permanent_determinant"] = "skipped (permanent limited to m <= 3)";
    }

    auto lower = det_sigma_lower(m, prec);
    int threshold = det_sigma_lower_threshold_m();
    json sj;
    sj["value"] = lower.value.str(30);
    sj["positive"] = lower.positive;
    sj["ge_exp_bound"] = lower.ge_exp_bound;
    sj["threshold_m"] = threshold;
    payload["det_sigma_lower"] = sj;
    if (m >= threshold) ok = ok && lower.ge_exp_bound;

    json doc;
    doc["manifest"] = make_manifest("smallball verify", params);
    doc["payload"] = payload;
    doc["passed"] = ok;
    emit_document(doc, out_path);
    return ok ? 0 : 1;
}

// Random pair 0 < b < a entrywise with rational entries; same construction as
// the library's exactness tests.
void random_dominated_pair(std::mt19937_64& rng, int n, RationalMatrix& a, RationalMatrix& b) {
    std::uniform_int_distribution<long> num(1, 40);
    std::uniform_int_distribution<long> frac(1, 99);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a.at(i, j) = make_rational(num(rng), 10);
            b.at(i, j) = a.at(i, j) * make_rational(frac(rng), 100);
        }
    }
}

int run_smallball_lemma1(int trials, int dim, std::uint64_t seed, const std::string& out_path) {
    json params;
    params["trials"] = trials;
    params["dim"] = dim;
    params["seed"] = seed;

    std::mt19937_64 rng(seed);
    int failures = 0;
    BigRational first_bound;
    for (int t = 0; t < trials; ++t) {
        RationalMatrix a(dim), b(dim);
        random_dominated_pair(rng, dim, a, b);
        RationalMatrix diff(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) diff.at(i, j) = a.at(i, j) - b.at(i, j);
        BigRational bound = lemma1_bound(a, b);
        if (t == 0) first_bound = bound;
        if (det_exact(diff) < bound) ++failures;
    }

    json payload;
    payload["trials"] = trials;
    payload["failures"] = failures;
    payload["first_trial_bound"] = rational_json(first_bound);

    json doc;
    doc["manifest"] = make_manifest("smallball lemma1", params);
    doc["payload"] = payload;
    doc["passed"] = failures == 0;
    emit_document(doc, out_path);
    return failures == 0 ? 0 : 1;
}

int run_sim_sup(const std::vector<double>& eps, long samples, int grid_count, std::uint64_t seed,
                int workers, const std::string& csv_path, const std::string& out_path) {
    SimConfig cfg;
    cfg.epsilons = eps;
    cfg.samples = samples;
    cfg.seed = seed;
    cfg.workers = workers;
    cfg.grid = SimGrid::build(*std::min_element(eps.begin(), eps.end()), grid_count);
    cfg.validate();
    auto result = simulate_sup_probability(cfg);

    json params;
    params["eps"] = eps;
    params["samples"] = samples;
    params["grid_count"] = grid_count;
    params["seed"] = seed;
    params["workers"] = workers;
    json manifest = make_manifest("sim sup", params);

    json payload;
    payload["grid_hash"] = result.grid_hash;
    payload["t_max"] = cfg.grid.t_max;
    payload["jitter"] = result.jitter;
    payload["estimates"] = estimates_json(result);

    if (!csv_path.empty()) write_csv(csv_path, manifest, result);
    json doc;
    doc["manifest"] = manifest;
    doc["payload"] = payload;
    emit_document(doc, out_path);
    return 0;
}

int run_sim_delta(int m, const std::vector<double>& eps, long samples, std::uint64_t seed,
                  int workers, const std::string& csv_path, const std::string& out_path) {
    auto result = simulate_delta_probability(m, eps, samples, seed, workers);

    json params;
    params["m"] = m;
    params["eps"] = eps;
    params["samples"] = samples;
    params["seed"] = seed;
    params["workers"] = workers;
    json manifest = make_manifest("sim delta", params);

    json payload;
    payload["n"] = m * m;
    payload["jitter"] = result.jitter;
    payload["estimates"] = estimates_json(result);

    if (!csv_path.empty()) write_csv(csv_path, manifest, result);
    json doc;
    doc["manifest"] = manifest;
    doc["payload"] = payload;
    emit_document(doc, out_path);
    return 0;
}

int run_sim_fit(const std::string& in_path, const std::string& plot_path,
                const std::string& out_path) {
    auto estimates = read_csv(in_path);
    auto fit = scaling_fit(estimates);

    json params;
    params["in"] = in_path;
    json payload;
    payload["slope"] = fit.slope;
    payload["intercept"] = fit.intercept;
    payload["slope_stderr"] = fit.slope_stderr;
    payload["slope_ci_lo"] = fit.slope_ci_lo;
    payload["slope_ci_hi"] = fit.slope_ci_hi;
    payload["points_used"] = fit.points_used;

    if (!plot_path.empty()) {
        std::ofstream f(plot_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file: " + plot_path);
        f.precision(17);
        for (std::size_t i = 0; i < fit.x.size(); ++i) f << fit.x[i] << ' ' << fit.y[i] << "\n";
    }
    json doc;
    doc["manifest"] = make_manifest("sim fit", params);
    doc["payload"] = payload;
    emit_document(doc, out_path);
    return 0;
}

int run_verify_all(bool quick, mpfr_prec_t prec, const std::string& out_path) {
    json checks = json::array();
    bool all_ok = true;
    auto record = [&](const std::string& name, bool ok) {
        json c;
        c["name"] = name;
        c["passed"] = ok;
        checks.push_back(std::move(c));
        all_ok = all_ok && ok;
        std::cerr << (ok ? "PASS " : "FAIL ") << name << "\n";
    };

    // Cauchy determinant identity on the design points and random sequences
    {
        bool ok = true;
        for (int m = 1; m <= 3; ++m) {
            auto d = delta_sequence(m);
            ok = ok && (cauchy_det_product(d) == det_exact(cauchy_matrix(d)));
        }
        std::mt19937_64 rng(101);
        int reps = quick ? 10 : 50;
        for (int t = 0; t < reps && ok; ++t) {
            std::uniform_int_distribution<int> len(1, 7);
            std::uniform_int_distribution<long long> val(1, 1000);
            std::vector<long long> seq;
            while (static_cast<int>(seq.size()) < len(rng)) {
                long long v = val(rng);
                if (std::find(seq.begin(), seq.end(), v) == seq.end()) seq.push_back(v);
            }
            ok = ok && (cauchy_det_product(seq) == det_exact(cauchy_matrix(seq)));
        }
        record("cauchy determinant identity (exact)", ok);
    }

    // Determinant lower bound for dominated perturbations
    {
        std::mt19937_64 rng(202);
        std::uniform_int_distribution<int> dims(1, 6);
        int reps = quick ? 20 : 200;
        bool ok = true;
        for (int t = 0; t < reps && ok; ++t) {
            int n = dims(rng);
            RationalMatrix a(n), b(n);
            random_dominated_pair(rng, n, a, b);
            RationalMatrix diff(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) diff.at(i, j) = a.at(i, j) - b.at(i, j);
            ok = ok && (det_exact(diff) >= lemma1_bound(a, b));
        }
        record("dominated-perturbation determinant bound (exact)", ok);
    }

    // Permanent/determinant bounds at the design points
    {
        bool ok = true;
        int max_m = quick ? 2 : 3;
        for (int m = 1; m <= max_m; ++m) {
            auto lem = lemma2_verify(m);
            ok = ok && lem.per_le_one && lem.det_ge_threshold && lem.coarse_chain_ok;
        }
        record("permanent <= 1 and determinant threshold (exact)", ok);
    }

    // Symbolic entry-ratio bound for all supported m
    {
        bool ok = true;
        for (int m = 1; m <= 8; ++m) ok = ok && ratio_bound_check(delta_sequence(m)).ok;
        record("entry ratio bound (symbolic)", ok);
    }

    // Kernel change-of-variables consistency
    {
        std::mt19937_64 rng(303);
        std::uniform_real_distribution<double> sd(0.0, 50.0);
        bool ok = std::fabs(kernel_Y(0.0, 0.0) - 1.0) == 0.0;
        for (int t = 0; t < 100 && ok; ++t) {
            double s = sd(rng), u = sd(rng);
            ok = ok && std::fabs(kernel_X(std::exp(-s), std::exp(-u)) - kernel_Y(s, u)) <= 1e-14;
        }
        record("kernel consistency under change of variables", ok);
    }

    // Closed-form optimum of the analytic small-ball bound
    {
        bool ok = true;
        for (int k = 2; k <= 10; ++k) {
            double L = 12.0 * k;
            auto [m, bound] = optimal_m_logeps(L);
            ok = ok && m == k && bound == -(L * L * L) / 432.0;
        }
        record("small-ball bound optimum matches closed form", ok);
    }

    if (!quick) {
        // Bracket width and containment on a few random measures
        auto nu = BaseMeasure::lebesgue01();
        bool ok = true;
        for (double eps : {0.2, 0.1}) {
            auto cfg = BracketConfig::for_lebesgue01(eps, 2.0);
            for (std::uint64_t seed : {1u, 2u, 3u}) {
                auto mu = random_measure(seed, 5, 1.0);
                auto r = build_bracket(mu, cfg, nu);
                ok = ok && r.verified_width <= eps &&
                     max_containment_violation(mu, r.pair, 2000) <= 1e-12;
            }
        }
        record("bracket containment and width", ok);

        // High-precision covariance determinant is resolvable at m <= 3
        bool det_ok = true;
        for (int m = 1; m <= 3; ++m) det_ok = det_ok && det_sigma_highprec(m, prec).reliable;
        record("covariance determinant resolved at high precision", det_ok);
    }

    json params;
    params["quick"] = quick;
    params["precision_bits"] = static_cast<long>(prec);
    json doc;
    doc["manifest"] = make_manifest("verify-all", params);
    doc["payload"] = json{{"checks", checks}};
    doc["passed"] = all_ok;
    emit_document(doc, out_path);
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Completely monotone bracketing, small-ball bounds, and Gaussian simulation"};
    app.require_subcommand(1);

    long precision_flag = 0;
    bool force_json = false;  // output is always JSON; kept for interface stability
    app.add_option("--precision-bits", precision_flag, "MPFR precision (default: CME_PRECISION_BITS or 1024)");
    app.add_flag("--json", force_json, "structured JSON output on stdout (default)");

    std::string out_path;
    app.add_option("--out", out_path, "also write the JSON report to this path")->capture_default_str();

    // bracket
    auto* bracket = app.add_subcommand("bracket", "build and verify an envelope pair");
    double br_eps = 0.1, br_p = 2.0;
    std::string br_measure;
    std::uint64_t br_seed = 1;
    int br_atoms = 5;
    bracket->add_option("--epsilon", br_eps, "bracket width budget")->required();
    bracket->add_option("--p", br_p, "L^p exponent");
    bracket->add_option("--measure", br_measure, "mixing measure JSON file (default: random)");
    bracket->add_option("--seed", br_seed, "seed for the random measure");
    bracket->add_option("--max-atoms", br_atoms, "atoms in the random measure");

    // smallball
    auto* smallball = app.add_subcommand("smallball", "determinant bounds and lemma checks");
    smallball->require_subcommand(1);
    auto* sb_bound = smallball->add_subcommand("bound", "small-ball log-probability upper bound");
    double sb_eps = 0.0;
    int sb_m = 0;
    std::string sb_mode = "analytic";
    sb_bound->add_option("--epsilon", sb_eps, "ball radius")->required();
    sb_bound->add_option("--m", sb_m, "block count (default: optimize)");
    sb_bound->add_option("--mode", sb_mode, "analytic|computed")
        ->check(CLI::IsMember({"analytic", "computed"}));
    auto* sb_verify = smallball->add_subcommand("verify", "run the determinant/permanent checks");
    int sv_m = 2;
    sb_verify->add_option("--m", sv_m, "block count")->required();
    auto* sb_lemma1 = smallball->add_subcommand("lemma1", "random exact-inequality trials");
    int l1_trials = 50, l1_dim = 4;
    std::uint64_t l1_seed = 1;
    sb_lemma1->add_option("--trials", l1_trials, "number of random pairs");
    sb_lemma1->add_option("--dim", l1_dim, "matrix dimension (<= 6)")->check(CLI::Range(1, 6));
    sb_lemma1->add_option("--seed", l1_seed, "rng seed");

    // sim
    auto* sim = app.add_subcommand("sim", "Monte Carlo estimation");
    sim->require_subcommand(1);
    auto* sim_sup = sim->add_subcommand("sup", "P(sup |Y| < eps) on a log-spaced grid");
    std::vector<double> ss_eps{0.5, 0.4, 0.3, 0.25, 0.2, 0.15};
    long ss_samples = 1000000;
    int ss_grid = 256, ss_workers = 1;
    std::uint64_t ss_seed = 1;
    std::string ss_csv;
    sim_sup->add_option("--eps", ss_eps, "thresholds, descending")->delimiter(',');
    sim_sup->add_option("--samples", ss_samples, "sample count");
    sim_sup->add_option("--grid-count", ss_grid, "log-spaced grid points");
    sim_sup->add_option("--seed", ss_seed, "rng seed");
    sim_sup->add_option("--workers", ss_workers, "worker count (does not affect results)");
    sim_sup->add_option("--csv", ss_csv, "write estimates as CSV to this path");

    auto* sim_delta = sim->add_subcommand("delta", "P(max |Y(delta_i)| < eps) at the design points");
    int sd_m = 1, sd_workers = 1;
    std::vector<double> sd_eps{0.1};
    long sd_samples = 1000000;
    std::uint64_t sd_seed = 1;
    std::string sd_csv;
    sim_delta->add_option("--m", sd_m, "block count (<= 3)")->check(CLI::Range(1, 3));
    sim_delta->add_option("--eps", sd_eps, "thresholds, descending")->delimiter(',');
    sim_delta->add_option("--samples", sd_samples, "sample count");
    sim_delta->add_option("--seed", sd_seed, "rng seed");
    sim_delta->add_option("--workers", sd_workers, "worker count (does not affect results)");
    sim_delta->add_option("--csv", sd_csv, "write estimates as CSV to this path");

    auto* sim_fit = sim->add_subcommand("fit", "fit log(-log p) against log|log eps|");
    std::string sf_in, sf_plot;
    sim_fit->add_option("--in", sf_in, "CSV produced by sim sup")->required();
    sim_fit->add_option("--plot", sf_plot, "write plot-ready two-column data here");

    // verify-all
    auto* verify_all = app.add_subcommand("verify-all", "aggregate verification across modules");
    bool va_quick = false;
    verify_all->add_flag("--quick", va_quick, "reduced trial counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    mpfr_prec_t prec = resolve_precision(precision_flag);
    try {
        if (bracket->parsed()) return run_bracket(br_eps, br_p, br_measure, br_seed, br_atoms, out_path);
        if (sb_bound->parsed()) return run_smallball_bound(sb_eps, sb_m, sb_mode, prec, out_path);
        if (sb_verify->parsed()) return run_smallball_verify(sv_m, prec, out_path);
        if (sb_lemma1->parsed()) return run_smallball_lemma1(l1_trials, l1_dim, l1_seed, out_path);
        if (sim_sup->parsed())
            return run_sim_sup(ss_eps, ss_samples, ss_grid, ss_seed, ss_workers, ss_csv, out_path);
        if (sim_delta->parsed())
            return run_sim_delta(sd_m, sd_eps, sd_samples, sd_seed, sd_workers, sd_csv, out_path);
        if (sim_fit->parsed()) return run_sim_fit(sf_in, sf_plot, out_path);
        if (verify_all->parsed()) return run_verify_all(va_quick, prec, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
