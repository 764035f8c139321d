#include "ptscat/scene.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ptscat {

namespace {

bool finite(const Vec3& p) {
    return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

} // namespace

PulseWeights PulseWeights::ones(int n) {
    PulseWeights w;
    w.values.assign(static_cast<std::size_t>(n), 1.0);
    return w;
}

PulseWeights PulseWeights::unit(int n, int index) {
    PulseWeights w;
    w.values.assign(static_cast<std::size_t>(n), 0.0);
    w.values.at(static_cast<std::size_t>(index)) = 1.0;
    return w;
}

std::array<int, 3> GridSpec::shape() const {
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw Error("grid spacing must be positive");
    if (!finite(lower) || !finite(upper))
        throw Error("grid corners must be finite");
    std::array<int, 3> s{};
    for (int a = 0; a < 3; ++a) {
        const double extent = upper[a] - lower[a];
        if (extent < 0.0) throw Error("grid upper corner below lower corner");
        // Round so that an extent that is an integer multiple of the spacing
        // (up to fp noise) lands exactly on the far corner.
        s[a] = static_cast<int>(std::floor(extent / spacing + 1e-9)) + 1;
    }
    return s;
}

std::int64_t GridSpec::node_count() const {
    const auto s = shape();
    return static_cast<std::int64_t>(s[0]) * s[1] * s[2];
}

Vec3 GridSpec::node(int ix, int iy, int iz) const {
    return lower + spacing * Vec3(ix, iy, iz);
}

SceneReport validate_scene(const ScattererArray& scatterers, const SensorArray& sensors) {
    const int n = scatterers.size();
    const int N = sensors.size();
    if (n == 0) throw EmptyScene("scene has no scatterers");
    if (N == 0) throw EmptyScene("scene has no sensors");
    if (scatterers.alphas.size() != scatterers.points.size())
        throw Error("scatterer strength count does not match point count");

    for (const auto& p : scatterers.points)
        if (!finite(p)) throw Error("non-finite scatterer position");
    for (const auto& p : sensors.points)
        if (!finite(p)) throw Error("non-finite sensor position");
    for (double a : scatterers.alphas)
        if (!std::isfinite(a)) throw Error("non-finite scatterer strength");

    const double inf = std::numeric_limits<double>::infinity();
    SceneReport rep;
    rep.min_scatterer_separation = inf;
    rep.min_sensor_scatterer_distance = inf;
    rep.alpha_min = inf;

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = (scatterers.points[i] - scatterers.points[j]).norm();
            if (d == 0.0)
                throw DuplicatePoint("scatterers " + std::to_string(i) + " and " +
                                     std::to_string(j) + " coincide");
            rep.min_scatterer_separation = std::min(rep.min_scatterer_separation, d);
        }
    }
    for (int k = 0; k < N; ++k) {
        for (int l = k + 1; l < N; ++l) {
            if ((sensors.points[k] - sensors.points[l]).norm() == 0.0)
                throw DuplicatePoint("sensors " + std::to_string(k) + " and " +
                                     std::to_string(l) + " coincide");
        }
    }
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j < n; ++j) {
            const double r = (sensors.points[k] - scatterers.points[j]).norm();
            if (r == 0.0)
                throw SensorOnScatterer("sensor " + std::to_string(k) +
                                        " coincides with scatterer " + std::to_string(j));
            rep.min_sensor_scatterer_distance = std::min(rep.min_sensor_scatterer_distance, r);
        }
    }
    for (double a : scatterers.alphas) rep.alpha_min = std::min(rep.alpha_min, a);
    return rep;
}

DistanceTables pairwise_distances(const ScattererArray& scatterers, const SensorArray& sensors) {
    const int n = scatterers.size();
    const int N = sensors.size();
    DistanceTables t;
    t.scatterer = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = (scatterers.points[i] - scatterers.points[j]).norm();
            t.scatterer(i, j) = d;
            t.scatterer(j, i) = d;
        }
    t.sensor = Eigen::MatrixXd::Zero(N, n);
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < n; ++j)
            t.sensor(k, j) = (sensors.points[k] - scatterers.points[j]).norm();
    return t;
}

std::vector<double> scattering_length(const ScattererArray& scatterers) {
    std::vector<double> out;
    out.reserve(scatterers.alphas.size());
    for (double a : scatterers.alphas) {
        if (a == 0.0) throw ZeroAlpha("scattering length undefined for zero strength");
        out.push_back(-1.0 / (4.0 * M_PI * a));
    }
    return out;
}

void check_weights(const SensorArray& sensors, const PulseWeights& weights) {
    if (weights.size() != sensors.size())
        throw Error("pulse weight count does not match sensor count");
    for (double f : weights.values)
        if (!std::isfinite(f)) throw Error("non-finite pulse weight");
}

} // namespace ptscat
