#include "ptscat/music.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ptscat/parallel.hpp"

namespace ptscat {

namespace {

constexpr double kCapFloor = 1e-12;

} // namespace

Eigen::VectorXd steering_vector(const SensorArray& sensors, double lambda, const Vec3& z) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw NonPositiveLambda("steering vector needs lambda > 0");
    if (sensors.size() == 0) throw EmptyScene("steering vector needs sensors");
    const double s = std::sqrt(lambda);
    Eigen::VectorXd phi(sensors.size());
    for (int k = 0; k < sensors.size(); ++k) {
        const double r = (sensors.points[k] - z).norm();
        if (r == 0.0) throw SteeringAtSensor("steering vector evaluated on a sensor");
        phi(k) = std::exp(-s * r) / r;
    }
    return phi;
}

KernelProjector kernel_projector(const DataOperator& op, double rank_tol) {
    if (!(rank_tol > 0.0) || !(rank_tol < 1.0)) throw Error("rank tolerance must lie in (0, 1)");
    const int N = static_cast<int>(op.matrix.rows());
    if (N == 0 || op.matrix.cols() != N) throw Error("operator matrix must be square");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.matrix, Eigen::ComputeFullV);
    KernelProjector proj;
    proj.singular_values = svd.singularValues();
    const double top = proj.singular_values(0);
    if (top == 0.0) throw ZeroOperator("operator is identically zero");
    int rank = 0;
    while (rank < N && proj.singular_values(rank) > rank_tol * top) ++rank;
    proj.rank = rank;
    proj.basis = svd.matrixV().rightCols(N - rank);
    return proj;
}

double imaging_value(const KernelProjector& proj, const Eigen::VectorXd& phi) {
    if (proj.basis.cols() == 0) throw EmptyKernel("operator has no numerical kernel");
    if (phi.size() != proj.basis.rows())
        throw Error("steering vector length does not match the kernel basis");
    const double pn = phi.norm();
    if (pn == 0.0) throw Error("zero steering vector");
    // The basis is orthonormal, so ||P phi|| = ||B^T phi||.
    const double kn = (proj.basis.transpose() * phi).norm();
    return std::max(1.0, pn / std::max(kn, kCapFloor * pn));
}

ImagingField scan_grid(const KernelProjector& proj, const SensorArray& sensors, double lambda,
                       const GridSpec& grid, int threads) {
    if (proj.basis.cols() == 0) throw EmptyKernel("operator has no numerical kernel");
    const auto shape = grid.shape();
    const std::int64_t total = grid.node_count();
    if (total > std::numeric_limits<int>::max()) throw Error("grid has too many nodes");

    ImagingField field;
    field.grid = grid;
    field.lambda = lambda;
    field.values.assign(static_cast<std::size_t>(total), 1.0);

    const double guard = grid.spacing / 10.0;
    const int nxy = shape[0] * shape[1];
    parallel_for(0, static_cast<int>(total), threads, [&](int idx) {
        const int iz = idx / nxy;
        const int iy = (idx - iz * nxy) / shape[0];
        const int ix = idx - iz * nxy - iy * shape[0];
        const Vec3 z = grid.node(ix, iy, iz);
        for (const auto& p : sensors.points)
            if ((p - z).norm() <= guard) return; // neutral value near sensors
        field.values[static_cast<std::size_t>(idx)] =
            imaging_value(proj, steering_vector(sensors, lambda, z));
    });
    return field;
}

std::vector<Peak> extract_peaks(const ImagingField& field, std::optional<int> count,
                                double min_separation) {
    const auto shape = field.grid.shape();
    if (field.values.size() != static_cast<std::size_t>(field.grid.node_count()))
        throw Error("imaging field size does not match its grid");
    if (count && *count <= 0) throw Error("peak count must be positive");
    const double sep = min_separation > 0.0 ? min_separation : 2.0 * field.grid.spacing;

    const auto at = [&](int ix, int iy, int iz) {
        return field.values[static_cast<std::size_t>((iz * shape[1] + iy) * shape[0] + ix)];
    };

    std::vector<Peak> candidates;
    for (int iz = 0; iz < shape[2]; ++iz)
        for (int iy = 0; iy < shape[1]; ++iy)
            for (int ix = 0; ix < shape[0]; ++ix) {
                const double v = at(ix, iy, iz);
                bool is_max = true;
                for (int dz = -1; dz <= 1 && is_max; ++dz)
                    for (int dy = -1; dy <= 1 && is_max; ++dy)
                        for (int dx = -1; dx <= 1 && is_max; ++dx) {
                            if (dx == 0 && dy == 0 && dz == 0) continue;
                            const int jx = ix + dx, jy = iy + dy, jz = iz + dz;
                            if (jx < 0 || jy < 0 || jz < 0 || jx >= shape[0] || jy >= shape[1] ||
                                jz >= shape[2])
                                continue;
                            if (at(jx, jy, jz) > v) is_max = false;
                        }
                if (is_max) candidates.push_back({field.grid.node(ix, iy, iz), v});
            }
    if (candidates.empty()) throw NoPeaks("imaging field has no local maxima");

    std::sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.position.z() != b.position.z()) return a.position.z() < b.position.z();
        if (a.position.y() != b.position.y()) return a.position.y() < b.position.y();
        return a.position.x() < b.position.x();
    });

    std::vector<Peak> kept;
    const double keep_floor = count ? 0.0 : 0.1 * candidates.front().score;
    for (const auto& c : candidates) {
        if (count && static_cast<int>(kept.size()) >= *count) break;
        if (!count && c.score < keep_floor) break;
        bool clear = true;
        for (const auto& k : kept)
            if ((k.position - c.position).norm() < sep) {
                clear = false;
                break;
            }
        if (clear) kept.push_back(c);
    }
    if (kept.empty()) throw NoPeaks("all local maxima were suppressed");
    return kept;
}

InversionReport reconstruct(const DataOperator& op, const SensorArray& sensors,
                            const GridSpec& grid, const InversionParams& params) {
    if (sensors.size() != op.matrix.rows())
        throw Error("sensor count does not match the operator dimension");
    const auto proj = kernel_projector(op, params.rank_tol);
    auto field = scan_grid(proj, sensors, op.lambda, grid, params.threads);

    InversionReport rep;
    rep.rank = proj.rank;
    rep.singular_values = proj.singular_values;
    const int N = static_cast<int>(proj.singular_values.size());
    rep.rank_gap = proj.rank < N && proj.singular_values(proj.rank) > 0.0
                       ? proj.singular_values(proj.rank - 1) / proj.singular_values(proj.rank)
                       : std::numeric_limits<double>::infinity();
    rep.peaks = extract_peaks(field, params.peak_count, params.min_separation);
    for (const auto& p : rep.peaks) {
        const Eigen::VectorXd phi = steering_vector(sensors, op.lambda, p.position);
        rep.peak_residuals.push_back((proj.basis.transpose() * phi).norm() / phi.norm());
    }
    rep.field = std::move(field);
    return rep;
}

} // namespace ptscat
