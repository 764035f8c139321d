#pragma once

// Time-domain forward simulation. Each scatterer carries a charge q^j(t)
// obeying a delay ODE: local decay with rate 4*pi*alpha_j plus retarded
// coupling q^i(t - d_ij)/d_ij from every other scatterer. An ideal emitted
// pulse from sensor l (weight f_l) kicks q^j by f_l/|y_j - x_l| at the travel
// time |y_j - x_l|; a mollified pulse (radius eps ball source) drives the
// same ODE through a continuous forcing term instead. The scattered field is
// the retarded superposition of the charges.

#include <Eigen/Dense>
#include <vector>

#include "ptscat/scene.hpp"

namespace ptscat {

enum class Side { Left, Right };

struct ArrivalEvent {
    double time = 0.0; // |y_j - x_l|
    int scatterer = 0; // j
    int sensor = 0;    // l
    double jump = 0.0; // f_l / |y_j - x_l|
};

struct ChargeTrajectories {
    std::vector<double> times;       // sorted; jump instants appear twice (left/right)
    Eigen::MatrixXd values;          // n x times.size()
    std::vector<double> jump_times;  // distinct instants with duplicated nodes
    std::vector<double> kink_times;  // other grid-aligned breakpoints (echo arrivals)
    std::vector<ArrivalEvent> events;
    double horizon = 0.0;
    double snap_tol = 0.0; // queries this close to a jump time resolve to the requested side

    // Piecewise-linear evaluation; zero before the first sample, sided at jumps.
    double value(int scatterer, double t, Side side = Side::Right) const;
};

struct SensorTraces {
    std::vector<double> times;      // sorted; trace jump instants appear twice
    Eigen::MatrixXd values;         // N x times.size()
    std::vector<double> jump_times; // distinct duplicated instants
    double horizon = 0.0;
};

struct SolveOptions {
    double mollifier_eps = 0.0; // 0 = ideal pulses with charge jumps
};

// One event per (scatterer, sensor) pair with a nonzero weight, sorted by
// time, then scatterer, then sensor.
std::vector<ArrivalEvent> arrival_events(const ScattererArray& scatterers,
                                         const SensorArray& sensors,
                                         const PulseWeights& weights);

// Largest admissible solver step: a tenth of the smaller of the minimum
// scatterer separation and the minimum gap between distinct arrival times
// (+inf when neither constraint applies).
double max_admissible_step(const ScattererArray& scatterers, const SensorArray& sensors,
                           const PulseWeights& weights);

// Integrates the charges on [0, T] with a trapezoidal (Crank-Nicolson) rule
// on a grid aligned with every arrival and first echo times; requires
// h <= min(min pairwise scatterer distance, min arrival gap)/10.
ChargeTrajectories solve_charges(const ScattererArray& scatterers, const SensorArray& sensors,
                                 const PulseWeights& weights, double T, double h,
                                 const SolveOptions& options = {});

// Scattered wave at (t, x): sum over j of q^j(t - |x - y_j|)/(4*pi*|x - y_j|),
// with terms before their arrival contributing exactly zero.
double scattered_field(const ChargeTrajectories& charges, const ScattererArray& scatterers,
                       double t, const Vec3& x);

// Scattered wave sampled at every sensor on a grid aligned with the shifted
// charge jumps (duplicated nodes at trace discontinuities).
SensorTraces sensor_traces(const ScattererArray& scatterers, const SensorArray& sensors,
                           const PulseWeights& weights, double T, double h,
                           const SolveOptions& options = {});

// Area fraction of the sphere of radius t about x that lies inside the ball
// of radius eps about a point at distance r from x.
double sphere_ball_overlap(double t, double r, double eps);

// Incident wave of unit-ball-mollified pulses: t * sum_l f_l * (3/(4*pi*eps^3))
// * overlap fraction; exact for the uniform density on the eps-ball.
double free_field_mollified(const SensorArray& sensors, const PulseWeights& weights,
                            double eps, double t, const Vec3& x);

} // namespace ptscat
