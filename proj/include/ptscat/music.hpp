#pragma once

// Localization from the data operator: the scatterer positions are the points
// whose steering vector lies in the orthogonal complement of the operator's
// numerical kernel, so the reciprocal of the kernel projection peaks there.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ptscat/data_operator.hpp"
#include "ptscat/scene.hpp"

namespace ptscat {

struct KernelProjector {
    Eigen::MatrixXd basis;           // N x (N - rank), orthonormal kernel basis
    int rank = 0;                    // singular values above rank_tol * largest
    Eigen::VectorXd singular_values; // descending
};

struct ImagingField {
    GridSpec grid;
    std::vector<double> values; // x fastest, then y, then z
    double lambda = 0.0;
};

struct Peak {
    Vec3 position = Vec3::Zero();
    double score = 0.0;
};

struct InversionParams {
    double rank_tol = 1e-8;
    std::optional<int> peak_count;  // unset: keep peaks above a tenth of the max
    double min_separation = 0.0;    // <= 0: twice the grid spacing
    int threads = 0;
};

struct InversionReport {
    std::vector<Peak> peaks;
    int rank = 0;
    Eigen::VectorXd singular_values;
    double rank_gap = 0.0;              // sigma_rank / sigma_rank+1 (inf if full rank)
    std::vector<double> peak_residuals; // ||P phi|| / ||phi|| at each peak
    ImagingField field;                 // the scanned imaging functional
};

// exp(-sqrt(lambda) |x_k - z|) / |x_k - z| stacked over sensors.
Eigen::VectorXd steering_vector(const SensorArray& sensors, double lambda, const Vec3& z);

KernelProjector kernel_projector(const DataOperator& op, double rank_tol = 1e-8);

// ||phi|| / max(||P phi||, 1e-12 ||phi||), clamped to >= 1.
double imaging_value(const KernelProjector& proj, const Eigen::VectorXd& phi);

// Imaging functional on the grid; nodes within spacing/10 of a sensor get the
// neutral value 1.
ImagingField scan_grid(const KernelProjector& proj, const SensorArray& sensors, double lambda,
                       const GridSpec& grid, int threads = 0);

// Local maxima over the 26-neighborhood, strongest first, greedily thinned by
// min_separation; with no count, keeps those above a tenth of the best score.
std::vector<Peak> extract_peaks(const ImagingField& field, std::optional<int> count,
                                double min_separation);

InversionReport reconstruct(const DataOperator& op, const SensorArray& sensors,
                            const GridSpec& grid, const InversionParams& params = {});

} // namespace ptscat
