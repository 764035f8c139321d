#pragma once

// The symmetric n x n interaction matrix of a scatterer configuration at a
// spectral parameter lambda > 0, its inverse, and estimates of the largest
// lambda at which the matrix can fail to be positive definite.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ptscat/scene.hpp"

namespace ptscat {

struct InteractionMatrix {
    double lambda = 0.0;
    Eigen::MatrixXd m;                      // alpha_i + sqrt(lambda)/4pi on the
                                            // diagonal, -exp(-sqrt(lambda) d)/(4pi d) off it
    std::optional<Eigen::MatrixXd> inverse; // set by invert_m
};

struct SpectralReport {
    double lambda_bound = 0.0;          // analytic upper bound
    double sup_estimate = 0.0;          // largest numerically located eigenvalue crossing
    std::vector<double> eigenvalues;    // all crossings found in (0, lambda_bound]
};

InteractionMatrix build_m(const ScattererArray& scatterers, double lambda);

// Pseudoinverse-free exact inverse via SVD; rejects matrices whose smallest
// singular value is below 1e-14 of the largest, and verifies the residual.
InteractionMatrix invert_m(InteractionMatrix im);

bool is_positive_definite(const InteractionMatrix& im);

// Closed form for a single scatterer; for n >= 2 a bisection on the scalar
// bound equation  4pi*alpha_min*d + s*d = (n-1)*exp(-s*d)  with s = sqrt(lambda).
double lambda_upper_bound(const ScattererArray& scatterers);

// Locates every lambda in (0, bound] where an eigenvalue of the interaction
// matrix crosses zero, by per-branch bisection on the sorted eigenvalue
// curves sampled on a 1000-cell grid.
SpectralReport sup_spectrum_estimate(const ScattererArray& scatterers, double tol = 1e-10);

} // namespace ptscat
