#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ptscat/data_operator.hpp"

using namespace ptscat;

namespace {

constexpr double kFourPi = 4.0 * M_PI;

// alpha = 0.1 at the origin, sensors at distances 1 and 2: every operator
// entry has a closed form, frozen here to 17 digits.
struct ReferenceScene {
    ScattererArray sc;
    SensorArray se;
    ReferenceScene() {
        sc.points = {Vec3(0, 0, 0)};
        sc.alphas = {0.1};
        se.points = {Vec3(1, 0, 0), Vec3(-2, 0, 0)};
    }
};
constexpr double kF11 = 4.77242877685944849e-03;
constexpr double kF12 = 8.77839215730781957e-04;
constexpr double kF22 = 1.61469500060708633e-04;

} // namespace

TEST_CASE("closed-form operator matches the frozen single-scatterer values") {
    const ReferenceScene ref;
    const auto op = closed_form_operator(ref.sc, ref.se, 1.0);
    CHECK(op.lambda == 1.0);
    CHECK(op.provenance.kind == ProvenanceKind::ClosedForm);
    CHECK(op.matrix(0, 0) == doctest::Approx(kF11).epsilon(1e-14));
    CHECK(op.matrix(0, 1) == doctest::Approx(kF12).epsilon(1e-14));
    CHECK(op.matrix(1, 0) == op.matrix(0, 1));
    CHECK(op.matrix(1, 1) == doctest::Approx(kF22).epsilon(1e-14));
}

TEST_CASE("closed-form operator equals an independent triple-loop assembly") {
    ScattererArray sc;
    sc.points = {Vec3(-0.4, 0.1, 0.2), Vec3(0.3, -0.2, 0.5), Vec3(0.1, 0.6, -0.3)};
    sc.alphas = {0.4, 0.7, 1.1};
    SensorArray se;
    se.points = {Vec3(2, 0, 0), Vec3(-2, 0.5, 0), Vec3(0, 2, -0.5), Vec3(0, -2, 0.3),
                 Vec3(0.4, 0.3, 2)};
    const double lambda = 1.3, s = std::sqrt(lambda);

    const auto op = closed_form_operator(sc, se, lambda);

    const auto lam = *invert_m(build_m(sc, lambda)).inverse;
    for (int k = 0; k < 5; ++k)
        for (int l = 0; l < 5; ++l) {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double rki = (se.points[k] - sc.points[i]).norm();
                    const double rlj = (se.points[l] - sc.points[j]).norm();
                    acc += std::exp(-s * rki) / rki * lam(i, j) * std::exp(-s * rlj) / rlj;
                }
            acc /= kFourPi * kFourPi;
            CHECK(op.matrix(k, l) == doctest::Approx(acc).epsilon(1e-13));
        }
}

TEST_CASE("operator is symmetric positive semidefinite") {
    ScattererArray sc;
    sc.points = {Vec3(0, 0, 0), Vec3(0.7, 0.1, -0.2)};
    sc.alphas = {0.3, 0.9};
    SensorArray se;
    se.points = {Vec3(2, 0, 0), Vec3(0, -2, 0), Vec3(0, 0.5, 2), Vec3(-1.5, 1, 1)};
    const auto op = closed_form_operator(sc, se, default_lambda(sc));
    CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) >= -1e-12 * es.eigenvalues()(3));
}

TEST_CASE("operator construction rejects lambda at or below the spectrum") {
    ScattererArray sc;
    sc.points = {Vec3(0, 0, 0)};
    sc.alphas = {-1.0 / kFourPi}; // threshold at lambda = 1
    SensorArray se;
    se.points = {Vec3(1, 0, 0)};
    CHECK_THROWS_AS(closed_form_operator(sc, se, 0.5), LambdaBelowSpectrum);
    SimulationParams sp;
    CHECK_THROWS_AS(simulated_operator(sc, se, 0.5, sp), LambdaBelowSpectrum);
    CHECK_THROWS_AS(closed_form_operator(sc, se, -1.0), NonPositiveLambda);
}

TEST_CASE("transform handles clipping and duplicated nodes") {
    CHECK_THROWS_AS(laplace_transform(std::vector<double>{}, Eigen::VectorXd(), 1.0, 1.0),
                    EmptyTrace);

    const std::vector<double> t1{0.0, 1.0};
    Eigen::VectorXd v1(2);
    v1 << 1.0, 1.0;
    CHECK(laplace_transform(t1, v1, 1.0, 1.0) == 0.5 * (1.0 + std::exp(-1.0)));

    // clip at T = 1 with linear interpolation of the last cell
    const std::vector<double> t2{0.0, 2.0};
    Eigen::VectorXd v2(2);
    v2 << 0.0, 2.0;
    CHECK(laplace_transform(t2, v2, 1.0, 1.0) == doctest::Approx(0.5 * std::exp(-1.0)));

    // a duplicated node carries a jump without contributing a cell
    const std::vector<double> t3{0.0, 1.0, 1.0, 2.0};
    Eigen::VectorXd v3(4);
    v3 << 0.0, 0.0, 3.0, 3.0;
    const double expect = 0.5 * (3.0 * std::exp(-1.0) + 3.0 * std::exp(-2.0));
    CHECK(laplace_transform(t3, v3, 1.0, 2.0) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("simulated operator reproduces the closed form on the reference scene") {
    const ReferenceScene ref;
    const auto closed = closed_form_operator(ref.sc, ref.se, 1.0);
    const auto sim = simulated_operator(ref.sc, ref.se, 1.0);
    CHECK(sim.provenance.kind == ProvenanceKind::Simulated);
    CHECK(sim.provenance.horizon > 0.0);
    CHECK(sim.provenance.step > 0.0);
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
            CHECK(sim.matrix(k, l) ==
                  doctest::Approx(closed.matrix(k, l)).epsilon(2e-3));
    // reciprocity holds up to integration error
    CHECK(std::abs(sim.matrix(0, 1) - sim.matrix(1, 0)) <= 1e-6 * sim.matrix.cwiseAbs().maxCoeff());
}

TEST_CASE("explicit horizon is honored and recorded") {
    const ReferenceScene ref;
    SimulationParams sp;
    sp.horizon = 9.0;
    sp.step = 5e-3;
    const auto sim = simulated_operator(ref.sc, ref.se, 1.0, sp);
    CHECK(sim.provenance.horizon == 9.0);
    CHECK(sim.provenance.step == 5e-3);
    CHECK_THROWS_AS(
        [&] {
            SimulationParams bad;
            bad.horizon = -1.0;
            return simulated_operator(ref.sc, ref.se, 1.0, bad);
        }(),
        HorizonNonPositive);
}

TEST_CASE("adaptive horizon gives up when the transform cannot stabilize") {
    // Just above the spectral threshold the charge grows like exp(+t) while
    // the transform kernel decays barely faster, so no affordable horizon
    // stalls the integral.
    ScattererArray sc;
    sc.points = {Vec3(0, 0, 0)};
    sc.alphas = {-1.0 / kFourPi};
    SensorArray se;
    se.points = {Vec3(1, 0, 0)};
    CHECK_THROWS_AS(simulated_operator(sc, se, 1.0 + 1e-4), TruncationTooShort);
}

TEST_CASE("perturbation is seeded, scaled, and symmetric") {
    const ReferenceScene ref;
    const auto op = closed_form_operator(ref.sc, ref.se, 1.0);

    const auto same = perturb_operator(op, 0.0, 42);
    CHECK(same.matrix == op.matrix);
    CHECK(same.provenance.kind == ProvenanceKind::Perturbed);

    const auto a = perturb_operator(op, 0.05, 42);
    const auto b = perturb_operator(op, 0.05, 42);
    const auto c = perturb_operator(op, 0.05, 43);
    CHECK(a.matrix == b.matrix);
    CHECK(a.matrix != c.matrix);
    CHECK((a.matrix - a.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.matrix - op.matrix).norm() ==
          doctest::Approx(0.05 * op.matrix.norm()).epsilon(1e-12));
    CHECK(a.provenance.noise_level == 0.05);
    CHECK(a.provenance.seed == 42);
    CHECK_THROWS_AS(perturb_operator(op, -0.1, 1), Error);
}

TEST_CASE("default spectral parameter sits above the bound") {
    ScattererArray pos;
    pos.points = {Vec3(0, 0, 0)};
    pos.alphas = {0.5};
    CHECK(default_lambda(pos) == 1.0);

    ScattererArray neg;
    neg.points = {Vec3(0, 0, 0)};
    neg.alphas = {-1.0 / kFourPi};
    CHECK(default_lambda(neg) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("conditioning warning fires only for steep exponents") {
    ScattererArray sc;
    sc.points = {Vec3(0, 0, 0)};
    sc.alphas = {0.5};
    SensorArray se;
    se.points = {Vec3(20, 0, 0)};
    CHECK(!conditioning_warning(sc, se, 1.0).has_value());   // exponent 20
    CHECK(conditioning_warning(sc, se, 4.0).has_value());    // exponent 40
}
