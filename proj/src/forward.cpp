#include "ptscat/forward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ptscat {

namespace {

constexpr double kFourPi = 4.0 * M_PI;
constexpr std::size_t kEchoCap = 20000;

// Piecewise-linear lookup in a sampled history whose grid duplicates nodes at
// jump instants. Queries within snap_tol of a jump instant resolve to the
// requested side; everything before the first sample is zero.
template <class ColValue>
double eval_sampled(const std::vector<double>& times, const std::vector<double>& jump_times,
                    double snap_tol, const ColValue& col, double t, Side side) {
    if (times.empty() || t < times.front()) return 0.0;

    double tq = t;
    bool at_jump = false;
    auto jit = std::lower_bound(jump_times.begin(), jump_times.end(), t);
    if (jit != jump_times.end() && *jit - t <= snap_tol) {
        tq = *jit;
        at_jump = true;
    } else if (jit != jump_times.begin() && t - *std::prev(jit) <= snap_tol) {
        tq = *std::prev(jit);
        at_jump = true;
    }

    if (at_jump) {
        if (side == Side::Left) {
            const auto it = std::lower_bound(times.begin(), times.end(), tq);
            return col(static_cast<int>(it - times.begin())); // first copy
        }
        const auto it = std::upper_bound(times.begin(), times.end(), tq);
        return col(static_cast<int>(it - times.begin()) - 1); // last copy
    }

    const auto it = std::upper_bound(times.begin(), times.end(), tq);
    if (it == times.end()) return col(static_cast<int>(times.size()) - 1);
    const int i1 = static_cast<int>(it - times.begin());
    const int i0 = i1 - 1;
    const double t0 = times[i0], t1 = times[i1];
    const double w = (t1 > t0) ? (tq - t0) / (t1 - t0) : 0.0;
    return (1.0 - w) * col(i0) + w * col(i1);
}

struct RawMark {
    double t = 0.0;
    int scatterer = -1;
    double jump = 0.0;
    bool is_jump = false;
};

struct Breakpoint {
    double t = 0.0;
    bool duplicated = false;
    std::vector<std::pair<int, double>> jumps; // (scatterer, summed kick)
};

// Clusters marks closer than tol into one breakpoint; the representative time
// of a cluster containing a jump is its earliest jump time, so stored jump
// instants stay exact arrival times.
std::vector<Breakpoint> cluster_marks(std::vector<RawMark> marks, double tol) {
    std::sort(marks.begin(), marks.end(),
              [](const RawMark& a, const RawMark& b) { return a.t < b.t; });
    std::vector<Breakpoint> out;
    std::size_t i = 0;
    while (i < marks.size()) {
        std::size_t j = i + 1;
        while (j < marks.size() && marks[j].t - marks[j - 1].t <= tol) ++j;
        Breakpoint bp;
        bp.t = marks[i].t;
        for (std::size_t k = i; k < j; ++k) {
            if (!marks[k].is_jump) continue;
            if (!bp.duplicated) bp.t = marks[k].t; // first jump fixes the instant
            bp.duplicated = true;
            bool merged = false;
            for (auto& [sc, kick] : bp.jumps)
                if (sc == marks[k].scatterer) {
                    kick += marks[k].jump;
                    merged = true;
                    break;
                }
            if (!merged) bp.jumps.emplace_back(marks[k].scatterer, marks[k].jump);
        }
        out.push_back(std::move(bp));
        i = j;
    }
    return out;
}

// Emits the nodes of [a, b] after a: interior points on a uniform subgrid of
// width <= h, then b itself.
template <class Emit>
void fill_span(double a, double b, double h, const Emit& emit) {
    const double span = b - a;
    const auto m = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(span / h - 1e-9)));
    const double step = span / static_cast<double>(m);
    for (std::int64_t i = 1; i < m; ++i) emit(a + step * static_cast<double>(i));
    emit(b);
}

std::int64_t span_nodes(double a, double b, double h) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((b - a) / h - 1e-9)));
}

// First few generations of echo instants: a kink or jump at time t on one
// scatterer reaches another after its mutual travel time, so the grid aligns
// with t + d for up to three hops (later generations are smooth enough).
void append_echoes(std::vector<RawMark>& marks, std::vector<double> seeds,
                   const Eigen::MatrixXd& dist, double T) {
    std::vector<double> dvals;
    for (int i = 0; i < dist.rows(); ++i)
        for (int j = i + 1; j < dist.cols(); ++j) dvals.push_back(dist(i, j));
    std::sort(dvals.begin(), dvals.end());
    dvals.erase(std::unique(dvals.begin(), dvals.end()), dvals.end());
    if (dvals.empty() || seeds.empty()) return;

    std::vector<double> gen = std::move(seeds);
    for (int g = 0; g < 3; ++g) {
        std::vector<double> next;
        for (double t : gen)
            for (double d : dvals) {
                const double tt = t + d;
                if (tt < T) next.push_back(tt);
            }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        for (double tt : next) {
            if (marks.size() >= kEchoCap) return;
            marks.push_back({tt, -1, 0.0, false});
        }
        gen = std::move(next);
        if (gen.empty()) return;
    }
}

} // namespace

std::vector<ArrivalEvent> arrival_events(const ScattererArray& scatterers,
                                         const SensorArray& sensors,
                                         const PulseWeights& weights) {
    validate_scene(scatterers, sensors);
    check_weights(sensors, weights);
    std::vector<ArrivalEvent> events;
    for (int j = 0; j < scatterers.size(); ++j)
        for (int l = 0; l < sensors.size(); ++l) {
            const double f = weights.values[l];
            if (f == 0.0) continue;
            const double r = (scatterers.points[j] - sensors.points[l]).norm();
            events.push_back({r, j, l, f / r});
        }
    std::sort(events.begin(), events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.scatterer != b.scatterer) return a.scatterer < b.scatterer;
        return a.sensor < b.sensor;
    });
    return events;
}

double ChargeTrajectories::value(int scatterer, double t, Side side) const {
    return eval_sampled(times, jump_times, snap_tol,
                        [&](int c) { return values(scatterer, c); }, t, side);
}

double max_admissible_step(const ScattererArray& scatterers, const SensorArray& sensors,
                           const PulseWeights& weights) {
    const auto dist = pairwise_distances(scatterers, sensors);
    const auto events = arrival_events(scatterers, sensors, weights);
    double hmax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < scatterers.size(); ++i)
        for (int j = i + 1; j < scatterers.size(); ++j) hmax = std::min(hmax, dist.scatterer(i, j));
    for (std::size_t k = 1; k < events.size(); ++k) {
        const double gap = events[k].time - events[k - 1].time;
        if (gap > 0.0) hmax = std::min(hmax, gap);
    }
    return hmax / 10.0;
}

ChargeTrajectories solve_charges(const ScattererArray& scatterers, const SensorArray& sensors,
                                 const PulseWeights& weights, double T, double h,
                                 const SolveOptions& options) {
    validate_scene(scatterers, sensors);
    check_weights(sensors, weights);
    if (!(T > 0.0) || !std::isfinite(T)) throw HorizonNonPositive("horizon must be positive");
    const double eps = options.mollifier_eps;
    if (eps < 0.0 || !std::isfinite(eps))
        throw NonPositiveEpsilon("mollifier radius must be positive (or zero for ideal pulses)");

    const int n = scatterers.size();
    const auto dist = pairwise_distances(scatterers, sensors);
    const auto events = arrival_events(scatterers, sensors, weights);

    const double hmax = max_admissible_step(scatterers, sensors, weights);
    if (!(h > 0.0) || !std::isfinite(h) || h > hmax)
        throw StepTooLarge("step must lie in (0, " + std::to_string(hmax) + "]");

    const double merge_tol = 1e-11 * std::max(1.0, T);

    std::vector<RawMark> marks;
    std::vector<double> seeds;
    if (eps == 0.0) {
        for (const auto& e : events)
            if (e.time <= T) {
                marks.push_back({e.time, e.scatterer, e.jump, true});
                seeds.push_back(e.time);
            }
    } else {
        // Continuous forcing with kinks where the mollified front enters and
        // leaves each scatterer.
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < sensors.size(); ++l) {
                if (weights.values[l] == 0.0) continue;
                const double r = dist.sensor(l, j);
                for (double t : {r - eps, r + eps})
                    if (t > 0.0 && t < T) {
                        marks.push_back({t, -1, 0.0, false});
                        seeds.push_back(t);
                    }
            }
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    append_echoes(marks, std::move(seeds), dist.scatterer, T);
    marks.push_back({T, -1, 0.0, false});

    auto bps = cluster_marks(std::move(marks), merge_tol);

    std::int64_t total = 1;
    {
        double prev = 0.0;
        for (const auto& bp : bps) {
            total += span_nodes(prev, bp.t, h) + (bp.duplicated ? 1 : 0);
            prev = bp.t;
        }
    }

    ChargeTrajectories traj;
    traj.events = events;
    traj.snap_tol = merge_tol;
    traj.times.reserve(static_cast<std::size_t>(total));
    traj.values.resize(n, total);

    int col = 0;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    const auto push = [&](double t) {
        traj.times.push_back(t);
        traj.values.col(col++) = q;
    };
    push(0.0);

    const auto hist = [&](int i, double tau, Side side) {
        return eval_sampled(traj.times, traj.jump_times, traj.snap_tol,
                            [&](int c) { return traj.values(i, c); }, tau, side);
    };
    const auto rhs = [&](double t, Side side, Eigen::VectorXd& g) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                if (i == j) continue;
                const double d = dist.scatterer(i, j);
                acc += hist(i, t - d, side) / d;
            }
            if (eps > 0.0)
                acc += kFourPi * free_field_mollified(sensors, weights, eps, t, scatterers.points[j]);
            g(j) = acc;
        }
    };

    Eigen::VectorXd g0(n), g1(n);
    double prev = 0.0;
    for (const auto& bp : bps) {
        rhs(prev, Side::Right, g0);
        double t0 = prev;
        fill_span(prev, bp.t, h, [&](double t1) {
            // Trapezoidal update; the retarded coupling at t1 is known history
            // because the step never exceeds a tenth of any travel distance.
            rhs(t1, Side::Left, g1);
            const double dt = t1 - t0;
            for (int j = 0; j < n; ++j) {
                const double b = 2.0 * M_PI * scatterers.alphas[j] * dt;
                q(j) = ((1.0 - b) * q(j) + 0.5 * dt * (g0(j) + g1(j))) / (1.0 + b);
            }
            push(t1);
            g0.swap(g1); // rhs is continuous at interior nodes (echoes are breakpoints)
            t0 = t1;
        });
        if (bp.duplicated) {
            for (const auto& [j, kick] : bp.jumps) q(j) += kick;
            push(bp.t);
            traj.jump_times.push_back(bp.t);
        } else if (bp.t < T) {
            traj.kink_times.push_back(bp.t);
        }
        prev = bp.t;
    }

    traj.horizon = traj.times.back();
    return traj;
}

double scattered_field(const ChargeTrajectories& charges, const ScattererArray& scatterers,
                       double t, const Vec3& x) {
    double sum = 0.0;
    for (int j = 0; j < scatterers.size(); ++j) {
        const double R = (x - scatterers.points[j]).norm();
        if (R == 0.0) throw EvaluationAtScatterer("field evaluated on a scatterer");
        const double tau = t - R;
        if (tau < 0.0) continue; // exact zero before the arrival
        if (tau > charges.horizon + charges.snap_tol)
            throw BeyondHorizon("field needs charge history beyond the computed horizon");
        sum += charges.value(j, tau, Side::Right) / (kFourPi * R);
    }
    return sum;
}

SensorTraces sensor_traces(const ScattererArray& scatterers, const SensorArray& sensors,
                           const PulseWeights& weights, double T, double h,
                           const SolveOptions& options) {
    const auto traj = solve_charges(scatterers, sensors, weights, T, h, options);
    const int n = scatterers.size();
    const int N = sensors.size();
    const auto dist = pairwise_distances(scatterers, sensors);
    const double merge_tol = traj.snap_tol;

    std::vector<RawMark> marks;
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < n; ++j) {
            const double R = dist.sensor(k, j);
            for (double jt : traj.jump_times)
                if (R + jt <= traj.horizon) marks.push_back({R + jt, j, 0.0, true});
            for (double kt : traj.kink_times)
                if (R + kt <= traj.horizon) marks.push_back({R + kt, -1, 0.0, false});
        }
    marks.push_back({traj.horizon, -1, 0.0, false});
    const auto bps = cluster_marks(std::move(marks), merge_tol);

    std::int64_t total = 1;
    {
        double prev = 0.0;
        for (const auto& bp : bps) {
            total += span_nodes(prev, bp.t, h) + (bp.duplicated ? 1 : 0);
            prev = bp.t;
        }
    }

    SensorTraces tr;
    tr.horizon = traj.horizon;
    tr.times.reserve(static_cast<std::size_t>(total));
    tr.values.resize(N, total);

    int col = 0;
    const auto push = [&](double t, Side side) {
        for (int k = 0; k < N; ++k) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                const double R = dist.sensor(k, j);
                const double tau = t - R;
                if (tau < 0.0) continue;
                sum += traj.value(j, tau, side) / (kFourPi * R);
            }
            tr.values(k, col) = sum;
        }
        tr.times.push_back(t);
        ++col;
    };

    push(0.0, Side::Right);
    double prev = 0.0;
    for (const auto& bp : bps) {
        fill_span(prev, bp.t, h, [&](double t1) {
            push(t1, bp.duplicated && t1 == bp.t ? Side::Left : Side::Right);
        });
        if (bp.duplicated) {
            push(bp.t, Side::Right);
            tr.jump_times.push_back(bp.t);
        }
        prev = bp.t;
    }
    return tr;
}

double sphere_ball_overlap(double t, double r, double eps) {
    if (t <= 0.0) return r <= eps ? 1.0 : 0.0;
    if (t + r <= eps) return 1.0;  // sphere inside the ball
    if (std::abs(r - t) >= eps) return 0.0;
    // Spherical cap cut by the ball boundary: fraction = cap height / diameter.
    return (eps * eps - (r - t) * (r - t)) / (4.0 * r * t);
}

double free_field_mollified(const SensorArray& sensors, const PulseWeights& weights,
                            double eps, double t, const Vec3& x) {
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw NonPositiveEpsilon("mollifier radius must be positive");
    check_weights(sensors, weights);
    if (t <= 0.0) return 0.0;
    const double density = 3.0 / (kFourPi * eps * eps * eps);
    double mean = 0.0;
    for (int l = 0; l < sensors.size(); ++l) {
        const double f = weights.values[l];
        if (f == 0.0) continue;
        const double r = (x - sensors.points[l]).norm();
        mean += f * density * sphere_ball_overlap(t, r, eps);
    }
    return t * mean;
}

} // namespace ptscat
