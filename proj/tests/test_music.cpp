#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ptscat/music.hpp"

using namespace ptscat;

namespace {

SensorArray ring4() {
    SensorArray se;
    se.points = {Vec3(2, 0, 0), Vec3(-2, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 2)};
    return se;
}

DataOperator rank_one(const Eigen::VectorXd& v) {
    DataOperator op;
    op.lambda = 1.0;
    op.matrix = v * v.transpose();
    return op;
}

} // namespace

TEST_CASE("steering vector entries and failure modes") {
    const auto se = ring4();
    const auto phi = steering_vector(se, 4.0, Vec3(1, 0, 0));
    CHECK(phi.size() == 4);
    CHECK(phi(0) == std::exp(-2.0 * 1.0) / 1.0);
    CHECK(phi(1) == std::exp(-2.0 * 3.0) / 3.0);
    CHECK(phi(2) == std::exp(-2.0 * std::sqrt(5.0)) / std::sqrt(5.0));
    CHECK_THROWS_AS(steering_vector(se, 4.0, Vec3(2, 0, 0)), SteeringAtSensor);
    CHECK_THROWS_AS(steering_vector(se, 0.0, Vec3(1, 0, 0)), NonPositiveLambda);
}

TEST_CASE("kernel projector splits a known spectrum") {
    DataOperator op;
    op.lambda = 1.0;
    op.matrix = Eigen::Vector3d(1.0, 1e-3, 1e-12).asDiagonal();
    const auto proj = kernel_projector(op, 1e-8);
    CHECK(proj.rank == 2);
    CHECK(proj.basis.cols() == 1);
    CHECK(std::abs(proj.basis(2, 0)) == doctest::Approx(1.0));
    CHECK(proj.singular_values(0) == doctest::Approx(1.0));
    CHECK(proj.singular_values(2) == doctest::Approx(1e-12));
    // basis columns are orthonormal
    CHECK((proj.basis.transpose() * proj.basis - Eigen::MatrixXd::Identity(1, 1))
              .cwiseAbs()
              .maxCoeff() <= 1e-14);

    CHECK_THROWS_AS(kernel_projector(op, 0.0), Error);
    CHECK_THROWS_AS(kernel_projector(op, 1.0), Error);
    DataOperator zero;
    zero.lambda = 1.0;
    zero.matrix = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(kernel_projector(zero), ZeroOperator);
}

TEST_CASE("imaging value blows up in the range and stays flat off it") {
    Eigen::VectorXd v(4);
    v << 0.5, -0.3, 0.8, 0.1;
    const auto proj = kernel_projector(rank_one(v), 1e-8);
    CHECK(proj.rank == 1);
    CHECK(proj.basis.cols() == 3);

    // along the range: projection onto the kernel is ~0, clamp kicks in
    CHECK(imaging_value(proj, v) >= 1e11);
    // orthogonal to the range: the value is ~1
    Eigen::VectorXd w(4);
    w << 0.3, 0.5, 0.0, 0.0; // orthogonal to v
    CHECK(std::abs(v.dot(w)) <= 1e-15);
    CHECK(imaging_value(proj, w) == doctest::Approx(1.0).epsilon(1e-12));
    // scale invariance
    CHECK(imaging_value(proj, (3.7 * w).eval()) == doctest::Approx(imaging_value(proj, w)));

    // full-rank operator has an empty kernel basis
    DataOperator full;
    full.lambda = 1.0;
    full.matrix = Eigen::MatrixXd::Identity(4, 4);
    const auto pfull = kernel_projector(full, 1e-8);
    CHECK(pfull.rank == 4);
    CHECK_THROWS_AS(imaging_value(pfull, v), EmptyKernel);
}

TEST_CASE("grid scan is neutral at sensors and indexes x fastest") {
    Eigen::VectorXd v(4);
    v << 1.0, 0.5, 0.25, 0.125;
    const auto proj = kernel_projector(rank_one(v), 1e-8);
    SensorArray se;
    se.points = {Vec3(0, 0, 0), Vec3(5, 0, 0), Vec3(0, 5, 0), Vec3(0, 0, 5)};
    GridSpec grid;
    grid.lower = Vec3(0, 0, 0);
    grid.upper = Vec3(1, 1, 0);
    grid.spacing = 0.5;
    const auto field = scan_grid(proj, se, 1.0, grid);
    const auto sh = grid.shape();
    CHECK(sh[0] == 3);
    CHECK(sh[1] == 3);
    CHECK(sh[2] == 1);
    CHECK(field.values.size() == 9);
    CHECK(field.values[0] == 1.0); // on the first sensor: neutral
    const double direct = imaging_value(proj, steering_vector(se, 1.0, Vec3(1.0, 0.5, 0.0)));
    CHECK(direct > 1.0);
    CHECK(field.values[1 * 3 + 2] == direct); // (ix=2, iy=1, iz=0)

    // a steering vector of the wrong length is rejected
    SensorArray one;
    one.points = {Vec3(0, 0, 0)};
    CHECK_THROWS_AS(imaging_value(proj, steering_vector(one, 1.0, Vec3(1, 1, 1))), Error);
}

TEST_CASE("peak extraction ranks, thins, and floors") {
    GridSpec grid;
    grid.lower = Vec3(0, 0, 0);
    grid.upper = Vec3(4, 0, 0);
    grid.spacing = 1.0;
    ImagingField field;
    field.grid = grid;
    field.lambda = 1.0;
    field.values = {1.0, 10.0, 1.0, 5.0, 1.0}; // maxima at x=1 and x=3

    auto peaks = extract_peaks(field, std::nullopt, 0.0);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].position == Vec3(1, 0, 0));
    CHECK(peaks[0].score == 10.0);
    CHECK(peaks[1].position == Vec3(3, 0, 0));

    // min_separation 3 suppresses the weaker peak
    peaks = extract_peaks(field, std::nullopt, 3.0);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].position == Vec3(1, 0, 0));

    // an explicit count truncates
    peaks = extract_peaks(field, 1, 0.0);
    REQUIRE(peaks.size() == 1);

    // the floor removes peaks below a tenth of the best
    field.values = {1.0, 100.0, 1.0, 5.0, 1.0};
    peaks = extract_peaks(field, std::nullopt, 0.0);
    CHECK(peaks.size() == 1);

    // plateaus count as maxima (ties are kept, then thinned deterministically):
    // default separation 2*spacing keeps x = 0, 2, 4
    field.values = {1.0, 1.0, 1.0, 1.0, 1.0};
    peaks = extract_peaks(field, std::nullopt, 0.0);
    REQUIRE(peaks.size() == 3);
    CHECK(peaks[0].position == Vec3(0, 0, 0));
    CHECK(peaks[1].position == Vec3(2, 0, 0));
    CHECK(peaks[2].position == Vec3(4, 0, 0));
}

TEST_CASE("imaging field is translation equivariant on dyadic grids") {
    // every coordinate and the shift are exactly representable, so the two
    // scans see bitwise-identical geometry
    ScattererArray sc;
    sc.points = {Vec3(0.25, -0.5, 0.125)};
    sc.alphas = {0.5};
    SensorArray se;
    se.points = {Vec3(2, 0, 0), Vec3(0, -2, 0.5), Vec3(-1.5, 1, 1), Vec3(0.5, 2, -1)};
    GridSpec grid;
    grid.lower = Vec3(-1, -1, -1);
    grid.upper = Vec3(1, 1, 1);
    grid.spacing = 0.25;

    const Vec3 shift(0.5, -0.25, 0.125);
    ScattererArray sc2 = sc;
    SensorArray se2 = se;
    GridSpec grid2 = grid;
    for (auto& p : sc2.points) p += shift;
    for (auto& p : se2.points) p += shift;
    grid2.lower += shift;
    grid2.upper += shift;

    const auto f1 = scan_grid(kernel_projector(closed_form_operator(sc, se, 2.0)), se, 2.0, grid);
    const auto f2 =
        scan_grid(kernel_projector(closed_form_operator(sc2, se2, 2.0)), se2, 2.0, grid2);
    REQUIRE(f1.values.size() == f2.values.size());
    for (std::size_t i = 0; i < f1.values.size(); ++i) CHECK(f1.values[i] == f2.values[i]);
}

TEST_CASE("end-to-end reconstruction finds a single scatterer on a node") {
    ScattererArray sc;
    sc.points = {Vec3(0.25, -0.25, 0.0)};
    sc.alphas = {0.6};
    const auto se = ring4();
    const auto op = closed_form_operator(sc, se, 1.0);
    GridSpec grid;
    grid.lower = Vec3(-1, -1, -1);
    grid.upper = Vec3(1, 1, 1);
    grid.spacing = 0.25;

    const auto rep = reconstruct(op, se, grid);
    CHECK(rep.rank == 1);
    CHECK(rep.singular_values.size() == 4);
    CHECK(rep.rank_gap > 1e6);
    REQUIRE(!rep.peaks.empty());
    CHECK((rep.peaks[0].position - sc.points[0]).norm() == 0.0);
    REQUIRE(rep.peak_residuals.size() == rep.peaks.size());
    CHECK(rep.peak_residuals[0] <= 1e-7);
}

TEST_CASE("reconstruction separates two scatterers") {
    ScattererArray sc;
    sc.points = {Vec3(-0.5, 0.0, 0.25), Vec3(0.5, 0.25, -0.25)};
    sc.alphas = {0.4, 0.8};
    SensorArray se;
    se.points = {Vec3(2, 0, 0),  Vec3(-2, 0, 0), Vec3(0, 2, 0),
                 Vec3(0, -2, 0), Vec3(0, 0, 2),  Vec3(0, 0, -2)};
    const auto op = closed_form_operator(sc, se, 1.0);
    GridSpec grid;
    grid.lower = Vec3(-1, -1, -1);
    grid.upper = Vec3(1, 1, 1);
    grid.spacing = 0.25;

    InversionParams params;
    params.peak_count = 2;
    const auto rep = reconstruct(op, se, grid, params);
    CHECK(rep.rank == 2);
    REQUIRE(rep.peaks.size() == 2);
    double worst = 0.0;
    for (const auto& p : sc.points) {
        double best = 1e300;
        for (const auto& pk : rep.peaks) best = std::min(best, (pk.position - p).norm());
        worst = std::max(worst, best);
    }
    CHECK(worst == 0.0); // both sit on grid nodes
}
