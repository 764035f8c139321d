#include "ptscat/acceptance.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ptscat/data_operator.hpp"
#include "ptscat/forward.hpp"
#include "ptscat/interaction.hpp"
#include "ptscat/music.hpp"
#include "ptscat/rng.hpp"
#include "ptscat/scene.hpp"

namespace ptscat {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

Vec3 sphere_point(SeededRng& rng, double radius) {
    while (true) {
        const Vec3 g(rng.gaussian(), rng.gaussian(), rng.gaussian());
        const double n = g.norm();
        if (n > 1e-6) return (radius / n) * g;
    }
}

ScattererArray random_scatterers(SeededRng& rng, int n, double half, double min_sep,
                                 double a_lo, double a_hi) {
    ScattererArray sc;
    while (sc.size() < n) {
        const Vec3 p(rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half));
        bool ok = true;
        for (const auto& q : sc.points)
            if ((p - q).norm() < min_sep) {
                ok = false;
                break;
            }
        if (ok) {
            sc.points.push_back(p);
            sc.alphas.push_back(rng.uniform(a_lo, a_hi));
        }
    }
    return sc;
}

SensorArray random_sensors(SeededRng& rng, int N, double radius) {
    SensorArray se;
    for (int k = 0; k < N; ++k) se.points.push_back(sphere_point(rng, radius));
    return se;
}

// Charge of a single scatterer at the origin hit by a unit pulse from
// distance r0: zero before r0, then (1/r0) exp(-4 pi alpha (t - r0)).
double single_charge_exact(double t, bool after_jump, double alpha, double r0) {
    if (t < r0 || (t == r0 && !after_jump)) return 0.0;
    return std::exp(-4.0 * M_PI * alpha * (t - r0)) / r0;
}

double max_charge_error(const ChargeTrajectories& traj, double alpha, double r0) {
    double worst = 0.0;
    for (std::size_t c = 0; c < traj.times.size(); ++c) {
        const double t = traj.times[c];
        const bool second = c > 0 && traj.times[c - 1] == t;
        worst = std::max(worst,
                         std::abs(traj.values(0, static_cast<int>(c)) -
                                  single_charge_exact(t, second, alpha, r0)));
    }
    return worst;
}

// --- check 1: closed-form and simulated operators agree on random scenes ---
CheckResult check_dual_route() {
    constexpr double kTol = 1e-3;    // max relative entry gap
    constexpr double kBudget = 60.0; // seconds, whole check
    CheckResult res{"dual-route operator agreement", false, ""};
    Timer timer;
    SeededRng rng(20250815);
    double worst = 0.0;
    for (int scene = 0; scene < 20; ++scene) {
        const int n = scene % 3 + 1;
        const int N = 4 + scene % 5;
        ScattererArray sc;
        SensorArray se;
        do {
            sc = random_scatterers(rng, n, 0.75, 0.5, 0.2, 1.0);
            se = random_sensors(rng, N, 3.0);
        } while (max_admissible_step(sc, se, PulseWeights::ones(N)) < 1e-3);
        const double lambda = default_lambda(sc);
        const auto closed = closed_form_operator(sc, se, lambda);
        SimulationParams sp;
        sp.step = default_step(sc, se, lambda) / 2.0;
        const auto sim = simulated_operator(sc, se, lambda, sp);
        for (int k = 0; k < N; ++k)
            for (int l = 0; l < N; ++l)
                worst = std::max(worst, std::abs(sim.matrix(k, l) - closed.matrix(k, l)) /
                                            std::abs(closed.matrix(k, l)));
    }
    const double secs = timer.seconds();
    res.passed = worst <= kTol && secs <= kBudget;
    res.detail = "max relative entry gap " + fmt(worst) + " (tol " + fmt(kTol) + ") over 20 scenes, " +
                 fmt(secs) + " s (budget " + fmt(kBudget) + ")";
    return res;
}

// --- check 2: single scatterer against the analytic solution ---
CheckResult check_single_scatterer() {
    constexpr double kTolCharge = 1e-6;
    constexpr double kTolTransform = 1e-6;
    // exp(-3) / ((1 + 0.4 pi) * 8 pi), the exact transform at s = 1
    constexpr double kExactTransform = 8.77839215730781957e-04;
    CheckResult res{"single-scatterer analytic solution", false, ""};

    ScattererArray sc;
    sc.points = {Vec3(0, 0, 0)};
    sc.alphas = {0.1};
    SensorArray se;
    se.points = {Vec3(1, 0, 0), Vec3(-2, 0, 0)};
    PulseWeights w;
    w.values = {1.0, 0.0};
    const double T = 15.0, h = 1e-3;

    const auto traj = solve_charges(sc, se, w, T, h);
    const double worst_q = max_charge_error(traj, 0.1, 1.0);

    const auto traces = sensor_traces(sc, se, w, T, h);
    const Eigen::VectorXd row = traces.values.row(1);
    const double F12 = laplace_transform(traces.times, row, 1.0, T);
    const double rel = std::abs(F12 - kExactTransform) / kExactTransform;

    res.passed = worst_q <= kTolCharge && rel <= kTolTransform;
    res.detail = "max charge error " + fmt(worst_q) + " (tol " + fmt(kTolCharge) +
                 "), transform gap " + fmt(rel) + " (tol " + fmt(kTolTransform) + ")";
    return res;
}

// --- check 3: spectral threshold locations and definiteness flips ---
CheckResult check_spectral_threshold() {
    constexpr double kTolSup = 1e-6;
    constexpr double kTolBound = 1e-8;
    // root of s = exp(-s) squared, for two neutral scatterers at distance 1
    constexpr double kPairBound = 0.321651511856836448;
    CheckResult res{"spectral threshold", false, ""};

    ScattererArray one;
    one.points = {Vec3(0, 0, 0)};
    one.alphas = {-1.0 / (4.0 * M_PI)};
    const auto rep = sup_spectrum_estimate(one);
    const double err_sup = std::abs(rep.sup_estimate - 1.0);
    const bool pd_below = is_positive_definite(build_m(one, 0.99));
    const bool pd_above = is_positive_definite(build_m(one, 1.01));

    ScattererArray two;
    two.points = {Vec3(0, 0, 0), Vec3(0, 0, 1)};
    two.alphas = {0.0, 0.0};
    const double err_bound = std::abs(lambda_upper_bound(two) - kPairBound);

    res.passed = err_sup <= kTolSup && !pd_below && pd_above && err_bound <= kTolBound;
    res.detail = "threshold gap " + fmt(err_sup) + " (tol " + fmt(kTolSup) + "), definiteness " +
                 (pd_below ? "pos" : "neg") + "/" + (pd_above ? "pos" : "neg") +
                 " across it, pair bound gap " + fmt(err_bound) + " (tol " + fmt(kTolBound) + ")";
    return res;
}

// --- check 4: steering vectors of scatterers span the operator range ---
CheckResult check_range_test() {
    constexpr double kResTol = 1e-10;
    constexpr double kMedianMin = 1e-3;
    CheckResult res{"range characterization", false, ""};

    ScattererArray sc;
    sc.points = {Vec3(-0.3, 0.1, 0.0), Vec3(0.45, -0.2, 0.15)};
    sc.alphas = {0.5, 0.8};
    SeededRng rng(404);
    const SensorArray se = random_sensors(rng, 8, 3.0);
    const double lambda = 1.0;

    const auto op = closed_form_operator(sc, se, lambda);
    const auto proj = kernel_projector(op, 1e-8);
    const auto residual = [&](const Vec3& z) {
        const Eigen::VectorXd phi = steering_vector(se, lambda, z);
        return (proj.basis.transpose() * phi).norm() / phi.norm();
    };
    const double r0 = residual(sc.points[0]);
    const double r1 = residual(sc.points[1]);

    SeededRng box_rng(405);
    std::vector<double> off;
    while (off.size() < 1000) {
        const Vec3 z(box_rng.uniform(-1, 1), box_rng.uniform(-1, 1), box_rng.uniform(-1, 1));
        if ((z - sc.points[0]).norm() < 0.1 || (z - sc.points[1]).norm() < 0.1) continue;
        off.push_back(residual(z));
    }
    std::nth_element(off.begin(), off.begin() + 500, off.end());
    const double median = off[500];

    res.passed = proj.rank == 2 && r0 <= kResTol && r1 <= kResTol && median >= kMedianMin;
    res.detail = "rank " + std::to_string(proj.rank) + " (want 2), scatterer residuals " + fmt(r0) +
                 ", " + fmt(r1) + " (tol " + fmt(kResTol) + "), off-scatterer median " +
                 fmt(median) + " (min " + fmt(kMedianMin) + ")";
    return res;
}

// --- check 5: localization on a 41^3 grid, exact and noisy ---
CheckResult check_localization() {
    constexpr double kTolExact = 0.05;
    constexpr double kTolNoisy = 0.1;
    constexpr double kNoise = 0.01;
    constexpr double kBudget = 120.0; // seconds per scene
    CheckResult res{"localization accuracy", false, ""};

    GridSpec grid;
    grid.lower = Vec3(-1, -1, -1);
    grid.upper = Vec3(1, 1, 1);
    grid.spacing = 0.05;

    SeededRng rng(505);
    const SensorArray se = random_sensors(rng, 12, 2.0);
    const double lambda = 1.0;

    std::vector<ScattererArray> scenes(3);
    scenes[0].points = {Vec3(0.05, -0.2, 0.1)};
    scenes[0].alphas = {0.5};
    scenes[1].points = {Vec3(-0.55, -0.35, 0.25), Vec3(0.5, 0.4, -0.2)};
    scenes[1].alphas = {0.35, 0.6};
    scenes[2].points = {Vec3(-0.6, -0.4, 0.3), Vec3(0.6, 0.3, -0.25), Vec3(-0.05, 0.55, 0.6)};
    scenes[2].alphas = {0.3, 0.45, 0.6};

    bool ok = true;
    std::string notes;
    for (std::size_t sidx = 0; sidx < scenes.size(); ++sidx) {
        const auto& sc = scenes[sidx];
        Timer timer;
        const auto op = closed_form_operator(sc, se, lambda);

        const auto run = [&](const DataOperator& data, double rank_tol, double tol) {
            InversionParams params;
            params.rank_tol = rank_tol;
            const auto proj = kernel_projector(data, rank_tol);
            params.peak_count = proj.rank;
            const auto report = reconstruct(data, se, grid, params);
            double worst = 0.0;
            for (const auto& y : sc.points) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& p : report.peaks) best = std::min(best, (p.position - y).norm());
                worst = std::max(worst, best);
            }
            const bool good = report.rank == sc.size() &&
                              static_cast<int>(report.peaks.size()) == sc.size() && worst <= tol;
            return std::pair<bool, double>(good, worst);
        };

        const auto [exact_ok, exact_worst] = run(op, 1e-8, kTolExact);
        const auto noisy_op = perturb_operator(op, kNoise, 905 + sidx);
        const auto [noisy_ok, noisy_worst] = run(noisy_op, 1e-2, kTolNoisy);
        const double secs = timer.seconds();

        ok = ok && exact_ok && noisy_ok && secs <= kBudget;
        notes += (sidx ? "; " : "") + std::to_string(sc.size()) + " scatterers: exact off by " +
                 fmt(exact_worst) + " (tol " + fmt(kTolExact) + "), noisy off by " +
                 fmt(noisy_worst) + " (tol " + fmt(kTolNoisy) + "), " + fmt(secs) + " s";
    }
    res.passed = ok;
    res.detail = notes + " (budget " + fmt(kBudget) + " s per scene)";
    return res;
}

// --- check 6: causality and jump bookkeeping on random scenes ---
CheckResult check_causality() {
    constexpr double kJumpTol = 1e-12;
    CheckResult res{"causality and arrival jumps", false, ""};
    SeededRng rng(606);
    double worst_jump = 0.0;
    bool causal = true;

    for (int scene = 0; scene < 50; ++scene) {
        const int n = scene % 3 + 1;
        const int N = scene % 4 + 1;
        ScattererArray sc;
        SensorArray se;
        PulseWeights w;
        double hmax = 0.0;
        do {
            sc = random_scatterers(rng, n, 0.75, 0.5, 0.2, 1.0);
            se.points.clear();
            for (int k = 0; k < N; ++k) se.points.push_back(sphere_point(rng, rng.uniform(2.0, 3.0)));
            w.values.clear();
            for (int k = 0; k < N; ++k) w.values.push_back(rng.uniform(0.5, 1.5));
        } while ((hmax = max_admissible_step(sc, se, w)) < 2e-3);

        const auto dist = pairwise_distances(sc, se);
        const double T = dist.sensor.maxCoeff() + 1.0;
        const double h = std::min(0.01, hmax);

        const auto traj = solve_charges(sc, se, w, T, h);
        for (double jt : traj.jump_times) {
            Eigen::VectorXd expect = Eigen::VectorXd::Zero(n);
            for (const auto& e : traj.events)
                if (std::abs(e.time - jt) <= traj.snap_tol) expect(e.scatterer) += e.jump;
            for (int j = 0; j < n; ++j) {
                if (expect(j) == 0.0) continue;
                const double got =
                    traj.value(j, jt, Side::Right) - traj.value(j, jt, Side::Left);
                worst_jump = std::max(worst_jump,
                                      std::abs(got - expect(j)) / std::max(1.0, std::abs(expect(j))));
            }
        }

        const auto traces = sensor_traces(sc, se, w, T, h);
        for (int k = 0; k < N; ++k) {
            double first = std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                double em = std::numeric_limits<double>::infinity();
                for (const auto& e : traj.events)
                    if (e.scatterer == j) em = std::min(em, e.time);
                first = std::min(first, dist.sensor(k, j) + em);
            }
            for (std::size_t c = 0; c < traces.times.size(); ++c)
                if (traces.times[c] < first - 1e-13 &&
                    traces.values(k, static_cast<int>(c)) != 0.0)
                    causal = false;
        }
    }
    res.passed = causal && worst_jump <= kJumpTol;
    res.detail = std::string("pre-arrival traces ") + (causal ? "exactly zero" : "NONZERO") +
                 ", worst jump mismatch " + fmt(worst_jump) + " (tol " + fmt(kJumpTol) +
                 ") over 50 scenes";
    return res;
}

// --- check 7: second-order convergence of the charge integrator ---
CheckResult check_convergence() {
    constexpr double kRatioMin = 3.5;
    CheckResult res{"second-order step convergence", false, ""};

    ScattererArray sc;
    sc.points = {Vec3(0, 0, 0)};
    sc.alphas = {0.5};
    SensorArray se;
    se.points = {Vec3(1, 0, 0)};
    const PulseWeights w = PulseWeights::ones(1);

    std::array<double, 4> errs{};
    double h = 4e-3;
    for (auto& e : errs) {
        e = max_charge_error(solve_charges(sc, se, w, 3.0, h), 0.5, 1.0);
        h /= 2.0;
    }
    const std::array<double, 3> ratios{errs[0] / errs[1], errs[1] / errs[2], errs[2] / errs[3]};
    res.passed = ratios[0] >= kRatioMin && ratios[1] >= kRatioMin && ratios[2] >= kRatioMin;
    res.detail = "halving-step error ratios " + fmt(ratios[0]) + ", " + fmt(ratios[1]) + ", " +
                 fmt(ratios[2]) + " (min " + fmt(kRatioMin) + ")";
    return res;
}

// --- check 8: mollified pulses approach the ideal-pulse operator ---
CheckResult check_mollified_limit() {
    CheckResult res{"mollified pulses approach ideal", false, ""};

    ScattererArray sc;
    sc.points = {Vec3(0, 0, 0)};
    sc.alphas = {0.5};
    SensorArray se;
    se.points = {Vec3(3, 0, 0), Vec3(0, 3, 0)};
    const double lambda = 1.0;

    SimulationParams params;
    params.step = 2.5e-3; // resolves the narrowest mollifier below
    params.horizon = 12.0;
    const auto ideal = simulated_operator(sc, se, lambda, params);

    std::array<double, 3> dev{};
    const std::array<double, 3> eps{0.2, 0.1, 0.05};
    for (std::size_t i = 0; i < eps.size(); ++i) {
        params.mollifier_eps = eps[i];
        const auto smeared = simulated_operator(sc, se, lambda, params);
        dev[i] = (smeared.matrix - ideal.matrix).norm() / ideal.matrix.norm();
    }
    res.passed = dev[0] > dev[1] && dev[1] > dev[2];
    res.detail = "relative deviation " + fmt(dev[0]) + " -> " + fmt(dev[1]) + " -> " + fmt(dev[2]) +
                 " for mollifier radii 0.2, 0.1, 0.05 (want strictly decreasing)";
    return res;
}

using CheckFn = CheckResult (*)();
constexpr std::array<CheckFn, 8> kChecks{
    check_dual_route,     check_single_scatterer, check_spectral_threshold, check_range_test,
    check_localization,   check_causality,        check_convergence,        check_mollified_limit,
};

} // namespace

int acceptance_check_count() { return static_cast<int>(kChecks.size()); }

CheckResult run_acceptance_check(int index) {
    if (index < 1 || index > acceptance_check_count())
        throw Error("acceptance check index out of range");
    return kChecks[static_cast<std::size_t>(index - 1)]();
}

std::vector<CheckResult> run_acceptance_checks() {
    std::vector<CheckResult> out;
    out.reserve(kChecks.size());
    for (const auto& fn : kChecks) out.push_back(fn());
    return out;
}

} // namespace ptscat
