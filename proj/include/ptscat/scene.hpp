#pragma once

// Scene geometry: point scatterers with coupling strengths, point sensors,
// pulse weights, and the rectangular search grids used by the imaging stage.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "ptscat/errors.hpp"

namespace ptscat {

using Vec3 = Eigen::Vector3d;

struct ScattererArray {
    std::vector<Vec3> points;
    std::vector<double> alphas; // one coupling strength per point

    int size() const { return static_cast<int>(points.size()); }
};

struct SensorArray {
    std::vector<Vec3> points;

    int size() const { return static_cast<int>(points.size()); }
};

struct PulseWeights {
    std::vector<double> values; // indexed like the sensor array

    int size() const { return static_cast<int>(values.size()); }

    static PulseWeights ones(int n);
    static PulseWeights unit(int n, int index); // e_index
};

// Axis-aligned box sampled at uniform spacing; nodes include both corners.
struct GridSpec {
    Vec3 lower = Vec3::Zero();
    Vec3 upper = Vec3::Zero();
    double spacing = 0.0;

    std::array<int, 3> shape() const; // node counts per axis, validates
    std::int64_t node_count() const;
    Vec3 node(int ix, int iy, int iz) const;
};

struct SceneReport {
    double min_scatterer_separation = 0.0;    // +inf for a single scatterer
    double min_sensor_scatterer_distance = 0.0;
    double alpha_min = 0.0;
};

struct DistanceTables {
    Eigen::MatrixXd scatterer; // n x n, symmetric, zero diagonal
    Eigen::MatrixXd sensor;    // N x n, sensor k to scatterer j
};

// Checks non-emptiness, finiteness, pairwise-distinct points and
// sensor/scatterer disjointness; returns the separation summary.
SceneReport validate_scene(const ScattererArray& scatterers, const SensorArray& sensors);

DistanceTables pairwise_distances(const ScattererArray& scatterers, const SensorArray& sensors);

// -1/(4*pi*alpha) per scatterer; any alpha == 0 is an error.
std::vector<double> scattering_length(const ScattererArray& scatterers);

// Throws when the weight vector does not match the sensor count.
void check_weights(const SensorArray& sensors, const PulseWeights& weights);

} // namespace ptscat
