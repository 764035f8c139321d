#include "ptscat/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptscat {

namespace {

constexpr double kFourPi = 4.0 * M_PI;

double min_separation(const Eigen::MatrixXd& d) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d.rows(); ++i)
        for (int j = i + 1; j < d.cols(); ++j) m = std::min(m, d(i, j));
    return m;
}

Eigen::VectorXd sorted_eigs(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues(); // ascending
}

} // namespace

InteractionMatrix build_m(const ScattererArray& scatterers, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw NonPositiveLambda("interaction matrix needs lambda > 0");
    const int n = scatterers.size();
    if (n == 0) throw EmptyScene("interaction matrix needs at least one scatterer");
    const double s = std::sqrt(lambda);

    InteractionMatrix im;
    im.lambda = lambda;
    im.m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) im.m(i, i) = scatterers.alphas[i] + s / kFourPi;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = (scatterers.points[i] - scatterers.points[j]).norm();
            if (d == 0.0) throw DuplicatePoint("coincident scatterers in interaction matrix");
            const double g = -std::exp(-s * d) / (kFourPi * d);
            im.m(i, j) = g;
            im.m(j, i) = g;
        }
    return im;
}

InteractionMatrix invert_m(InteractionMatrix im) {
    const int n = static_cast<int>(im.m.rows());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(im.m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(0) == 0.0 || sv(n - 1) < 1e-14 * sv(0))
        throw SingularMatrix("interaction matrix numerically singular");

    Eigen::MatrixXd inv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
    inv = 0.5 * (inv + inv.transpose()).eval(); // exact symmetry

    const double res = (im.m * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    const double scale = im.m.cwiseAbs().maxCoeff() * inv.cwiseAbs().maxCoeff();
    if (res > 1e-12 * std::max(scale, 1.0))
        throw SingularMatrix("interaction matrix inverse failed the residual check");

    im.inverse = std::move(inv);
    return im;
}

bool is_positive_definite(const InteractionMatrix& im) {
    return sorted_eigs(im.m)(0) > 0.0;
}

double lambda_upper_bound(const ScattererArray& scatterers) {
    const int n = scatterers.size();
    if (n == 0) throw EmptyScene("spectral bound needs at least one scatterer");
    const double a0 = *std::min_element(scatterers.alphas.begin(), scatterers.alphas.end());
    if (n == 1) return a0 >= 0.0 ? 0.0 : (kFourPi * a0) * (kFourPi * a0);

    Eigen::MatrixXd dist(n, n);
    dist.setZero();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dist(i, j) = (scatterers.points[i] - scatterers.points[j]).norm();
    const double d = min_separation(dist);
    if (d == 0.0) throw DuplicatePoint("coincident scatterers in spectral bound");

    // f(s) = 4pi*a0*d + s*d - (n-1)*exp(-s*d); the bound is the square of the
    // root. f is strictly increasing, f(inf) > 0.
    const auto f = [&](double s) { return kFourPi * a0 * d + s * d - (n - 1) * std::exp(-s * d); };
    if (f(0.0) >= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    return s * s;
}

SpectralReport sup_spectrum_estimate(const ScattererArray& scatterers, double tol) {
    if (!(tol > 0.0)) throw Error("spectral tolerance must be positive");
    SpectralReport rep;
    rep.lambda_bound = lambda_upper_bound(scatterers);
    if (rep.lambda_bound <= 0.0) return rep; // matrix positive definite for all lambda > 0

    const int n = scatterers.size();
    const double top = rep.lambda_bound * (1.0 + 1e-9) + tol; // small pad past the bound
    const int cells = 1000;

    // Sample the sorted eigenvalue curves; each is continuous in lambda, so a
    // sign change of branch b inside a cell brackets a crossing of that branch.
    std::vector<Eigen::VectorXd> eig(cells + 1);
    std::vector<double> grid(cells + 1);
    for (int k = 0; k <= cells; ++k) {
        grid[k] = (k == 0) ? top * 1e-12 : top * static_cast<double>(k) / cells;
        eig[k] = sorted_eigs(build_m(scatterers, grid[k]).m);
    }

    std::vector<double> roots;
    for (int b = 0; b < n; ++b) {
        for (int k = 0; k < cells; ++k) {
            const double fa = eig[k](b), fb = eig[k + 1](b);
            if (fa == 0.0) {
                roots.push_back(grid[k]);
                continue;
            }
            if (fa * fb >= 0.0) continue;
            double lo = grid[k], hi = grid[k + 1];
            double flo = fa;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = sorted_eigs(build_m(scatterers, mid).m)(b);
                if (fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (flo * fm < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        if (eig[cells](b) == 0.0) roots.push_back(grid[cells]);
    }

    std::sort(roots.begin(), roots.end());
    const double dedup = std::max(tol, 1e-12 * top);
    for (double r : roots)
        if (rep.eigenvalues.empty() || r - rep.eigenvalues.back() > dedup)
            rep.eigenvalues.push_back(r);
    if (!rep.eigenvalues.empty()) rep.sup_estimate = rep.eigenvalues.back();
    return rep;
}

} // namespace ptscat
