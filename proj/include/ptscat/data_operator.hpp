#pragma once

// The N x N sensor-space data operator at a spectral parameter lambda above
// the interaction spectrum, assembled two independent ways: in closed form
// from the inverse interaction matrix, and from time-domain simulations via
// Laplace transforms of the sensor traces at s = sqrt(lambda).

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "ptscat/forward.hpp"
#include "ptscat/interaction.hpp"
#include "ptscat/scene.hpp"

namespace ptscat {

enum class ProvenanceKind { ClosedForm, Simulated, Perturbed };

struct Provenance {
    ProvenanceKind kind = ProvenanceKind::ClosedForm;
    double horizon = 0.0;       // simulated only
    double step = 0.0;          // simulated only
    double mollifier_eps = 0.0; // simulated only, 0 = ideal pulses
    double noise_level = 0.0;   // perturbed only
    std::uint64_t seed = 0;     // perturbed only
};

struct DataOperator {
    double lambda = 0.0;
    Eigen::MatrixXd matrix; // N x N, symmetric
    Provenance provenance;
};

// (4*pi)^-2 * Phi * M^-1 * Phi^T with Phi_kj = exp(-sqrt(lambda) R_kj)/R_kj;
// requires the interaction matrix to be positive definite at lambda.
DataOperator closed_form_operator(const ScattererArray& scatterers, const SensorArray& sensors,
                                  double lambda);

// Trapezoidal transform integral_0^T trace(t) exp(-s t) dt on the sampled
// grid (duplicated jump nodes contribute zero-width cells); the final cell is
// clipped at T by linear interpolation.
double laplace_transform(std::span<const double> times, std::span<const double> values,
                         double s, double T);
double laplace_transform(const std::vector<double>& times, const Eigen::VectorXd& values,
                         double s, double T);

struct SimulationParams {
    std::optional<double> horizon; // unset: extend until the transform stabilizes
    std::optional<double> step;    // unset: scales/50 capped by the admissible step
    double mollifier_eps = 0.0;
    double truncation_rtol = 1e-6; // per-entry stall threshold for the adaptive horizon
    int threads = 0;               // 0 = hardware concurrency
};

// One forward solve per sensor with a unit pulse, transformed at
// s = sqrt(lambda). With no explicit horizon, the horizon is grown by factors
// of 1.5 until every entry moves by less than truncation_rtol (relative).
DataOperator simulated_operator(const ScattererArray& scatterers, const SensorArray& sensors,
                                double lambda, const SimulationParams& params = {});

// Adds a symmetric Gaussian perturbation scaled to level * ||F||_F.
DataOperator perturb_operator(const DataOperator& op, double level, std::uint64_t seed);

// lambda_bound + max(1, lambda_bound): comfortably above the spectrum.
double default_lambda(const ScattererArray& scatterers);

// min(scatterer separation, sensor distance, 1/sqrt(lambda)) / 100, capped by
// the admissible step for all-ones weights (a superset of the unit-pulse
// arrival events used by the simulated route).
double default_step(const ScattererArray& scatterers, const SensorArray& sensors, double lambda);

// Warns when exp(-sqrt(lambda) * travel) underflows the measurable range.
std::optional<std::string> conditioning_warning(const ScattererArray& scatterers,
                                                const SensorArray& sensors, double lambda);

} // namespace ptscat
