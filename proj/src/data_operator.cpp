#include "ptscat/data_operator.hpp"

#include <cmath>
#include <limits>

#include "ptscat/parallel.hpp"
#include "ptscat/rng.hpp"

namespace ptscat {

namespace {

constexpr double kFourPi = 4.0 * M_PI;

// exp(-sqrt(lambda) R_kj) / R_kj for every sensor/scatterer pair.
Eigen::MatrixXd steering_table(const ScattererArray& sc, const SensorArray& se, double s) {
    const auto dist = pairwise_distances(sc, se);
    Eigen::MatrixXd phi(se.size(), sc.size());
    for (int k = 0; k < se.size(); ++k)
        for (int j = 0; j < sc.size(); ++j)
            phi(k, j) = std::exp(-s * dist.sensor(k, j)) / dist.sensor(k, j);
    return phi;
}

void require_above_spectrum(const ScattererArray& sc, double lambda) {
    if (!is_positive_definite(build_m(sc, lambda)))
        throw LambdaBelowSpectrum("lambda is not above the interaction spectrum");
}

} // namespace

DataOperator closed_form_operator(const ScattererArray& scatterers, const SensorArray& sensors,
                                  double lambda) {
    validate_scene(scatterers, sensors);
    require_above_spectrum(scatterers, lambda);
    const auto im = invert_m(build_m(scatterers, lambda));
    const Eigen::MatrixXd phi = steering_table(scatterers, sensors, std::sqrt(lambda));
    const int N = sensors.size();

    const Eigen::MatrixXd g = phi * (*im.inverse);
    DataOperator op;
    op.lambda = lambda;
    op.provenance.kind = ProvenanceKind::ClosedForm;
    op.matrix.resize(N, N);
    // Assemble the upper triangle and mirror it, so symmetry is exact.
    for (int k = 0; k < N; ++k)
        for (int l = k; l < N; ++l) {
            const double v = g.row(k).dot(phi.row(l)) / (kFourPi * kFourPi);
            op.matrix(k, l) = v;
            op.matrix(l, k) = v;
        }
    return op;
}

double laplace_transform(std::span<const double> times, std::span<const double> values,
                         double s, double T) {
    if (times.size() != values.size()) throw Error("trace length does not match its time grid");
    if (times.empty()) throw EmptyTrace("transform of an empty trace");
    if (!(T > 0.0) || !std::isfinite(T)) throw HorizonNonPositive("transform horizon must be positive");
    if (!(s > 0.0) || !std::isfinite(s)) throw Error("transform rate must be positive");

    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double t0 = times[i];
        double t1 = times[i + 1];
        if (t1 <= t0) continue; // duplicated jump node: zero-width cell
        if (t0 >= T) break;
        const double v0 = values[i];
        double v1 = values[i + 1];
        if (t1 > T) {
            const double w = (T - t0) / (t1 - t0);
            v1 = (1.0 - w) * v0 + w * v1;
            t1 = T;
        }
        acc += 0.5 * (t1 - t0) * (v0 * std::exp(-s * t0) + v1 * std::exp(-s * t1));
    }
    return acc;
}

double laplace_transform(const std::vector<double>& times, const Eigen::VectorXd& values,
                         double s, double T) {
    return laplace_transform(std::span<const double>(times),
                             std::span<const double>(values.data(),
                                                     static_cast<std::size_t>(values.size())),
                             s, T);
}

DataOperator simulated_operator(const ScattererArray& scatterers, const SensorArray& sensors,
                                double lambda, const SimulationParams& params) {
    validate_scene(scatterers, sensors);
    require_above_spectrum(scatterers, lambda);
    const int N = sensors.size();
    const double s = std::sqrt(lambda);

    double h = params.step.value_or(default_step(scatterers, sensors, lambda));
    if (!params.step && params.mollifier_eps > 0.0) h = std::min(h, params.mollifier_eps / 20.0);

    const auto dist = pairwise_distances(scatterers, sensors);
    const double travel = dist.sensor.maxCoeff() +
                          (scatterers.size() > 1 ? dist.scatterer.maxCoeff() : 0.0) +
                          params.mollifier_eps;

    SolveOptions solve_opts;
    solve_opts.mollifier_eps = params.mollifier_eps;

    const auto run = [&](double T) {
        Eigen::MatrixXd F(N, N);
        parallel_for(0, N, params.threads, [&](int l) {
            const auto traces = sensor_traces(scatterers, sensors, PulseWeights::unit(N, l), T, h,
                                              solve_opts);
            for (int k = 0; k < N; ++k) {
                const Eigen::VectorXd row = traces.values.row(k);
                F(k, l) = laplace_transform(traces.times, row, s, T);
            }
        });
        return F;
    };

    DataOperator op;
    op.lambda = lambda;
    op.provenance.kind = ProvenanceKind::Simulated;
    op.provenance.step = h;
    op.provenance.mollifier_eps = params.mollifier_eps;

    if (params.horizon) {
        if (!(*params.horizon > 0.0)) throw HorizonNonPositive("horizon must be positive");
        op.matrix = run(*params.horizon);
        op.provenance.horizon = *params.horizon;
        return op;
    }

    // Grow the horizon until every entry stalls within the truncation budget.
    double T = travel + std::max(1.0, 2.0 / s);
    Eigen::MatrixXd prev = run(T);
    for (int round = 0; round < 12; ++round) {
        T *= 1.5;
        Eigen::MatrixXd cur = run(T);
        const double floor = 1e-12 * cur.cwiseAbs().maxCoeff();
        bool ok = true;
        for (int k = 0; k < N && ok; ++k)
            for (int l = 0; l < N && ok; ++l)
                ok = std::abs(cur(k, l) - prev(k, l)) <=
                     params.truncation_rtol * (std::abs(cur(k, l)) + floor);
        if (ok) {
            op.matrix = std::move(cur);
            op.provenance.horizon = T;
            return op;
        }
        prev = std::move(cur);
    }
    throw TruncationTooShort("transform did not stabilize while extending the horizon");
}

DataOperator perturb_operator(const DataOperator& op, double level, std::uint64_t seed) {
    if (level < 0.0 || !std::isfinite(level)) throw Error("noise level must be nonnegative");
    DataOperator out = op;
    out.provenance.kind = ProvenanceKind::Perturbed;
    out.provenance.noise_level = level;
    out.provenance.seed = seed;
    if (level == 0.0) return out;

    const int N = static_cast<int>(op.matrix.rows());
    SeededRng gauss(seed);
    Eigen::MatrixXd g(N, N);
    for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) g(k, l) = gauss.gaussian();
    Eigen::MatrixXd e = 0.5 * (g + g.transpose());
    const double en = e.norm();
    if (en == 0.0) throw Error("degenerate perturbation draw");
    out.matrix += (level * op.matrix.norm() / en) * e;
    return out;
}

double default_lambda(const ScattererArray& scatterers) {
    const double bound = lambda_upper_bound(scatterers);
    return bound + std::max(1.0, bound);
}

double default_step(const ScattererArray& scatterers, const SensorArray& sensors, double lambda) {
    if (!(lambda > 0.0)) throw NonPositiveLambda("step heuristic needs lambda > 0");
    const auto dist = pairwise_distances(scatterers, sensors);
    double scale = std::min(dist.sensor.minCoeff(), 1.0 / std::sqrt(lambda));
    for (int i = 0; i < scatterers.size(); ++i)
        for (int j = i + 1; j < scatterers.size(); ++j)
            scale = std::min(scale, dist.scatterer(i, j));
    return std::min(scale / 100.0,
                    max_admissible_step(scatterers, sensors, PulseWeights::ones(sensors.size())));
}

std::optional<std::string> conditioning_warning(const ScattererArray& scatterers,
                                                const SensorArray& sensors, double lambda) {
    const auto dist = pairwise_distances(scatterers, sensors);
    const double travel = dist.sensor.maxCoeff() +
                          (scatterers.size() > 1 ? dist.scatterer.maxCoeff() : 0.0);
    const double expo = std::sqrt(lambda) * travel;
    if (expo <= 30.0) return std::nullopt;
    return "exp(-sqrt(lambda)*travel) ~ exp(-" + std::to_string(expo) +
           "): operator entries span more dynamic range than double precision resolves";
}

} // namespace ptscat
