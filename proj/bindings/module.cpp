// Python bindings for the core pipeline: scenes, spectral analysis, forward
// simulation, data-operator assembly, and localization.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ptscat/acceptance.hpp"
#include "ptscat/data_operator.hpp"
#include "ptscat/forward.hpp"
#include "ptscat/interaction.hpp"
#include "ptscat/music.hpp"
#include "ptscat/scene_io.hpp"

namespace py = pybind11;
using namespace ptscat;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Time-domain scattering by point scatterers: simulation and inversion";

    py::register_exception<Error>(m, "Error");

    // ---- scene -------------------------------------------------------------
    py::class_<ScattererArray>(m, "ScattererArray")
        .def(py::init<>())
        .def_readwrite("points", &ScattererArray::points)
        .def_readwrite("alphas", &ScattererArray::alphas)
        .def("__len__", &ScattererArray::size);

    py::class_<SensorArray>(m, "SensorArray")
        .def(py::init<>())
        .def_readwrite("points", &SensorArray::points)
        .def("__len__", &SensorArray::size);

    py::class_<PulseWeights>(m, "PulseWeights")
        .def(py::init<>())
        .def_readwrite("values", &PulseWeights::values)
        .def_static("ones", &PulseWeights::ones, py::arg("n"))
        .def_static("unit", &PulseWeights::unit, py::arg("n"), py::arg("index"))
        .def("__len__", &PulseWeights::size);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_readwrite("lower", &GridSpec::lower)
        .def_readwrite("upper", &GridSpec::upper)
        .def_readwrite("spacing", &GridSpec::spacing)
        .def("shape", &GridSpec::shape)
        .def("node_count", &GridSpec::node_count)
        .def("node", &GridSpec::node, py::arg("ix"), py::arg("iy"), py::arg("iz"));

    py::class_<SceneReport>(m, "SceneReport")
        .def_readonly("min_scatterer_separation", &SceneReport::min_scatterer_separation)
        .def_readonly("min_sensor_scatterer_distance",
                      &SceneReport::min_sensor_scatterer_distance)
        .def_readonly("alpha_min", &SceneReport::alpha_min);

    py::class_<DistanceTables>(m, "DistanceTables")
        .def_readonly("scatterer", &DistanceTables::scatterer)
        .def_readonly("sensor", &DistanceTables::sensor);

    py::class_<Scene>(m, "Scene")
        .def(py::init<>())
        .def_readwrite("scatterers", &Scene::scatterers)
        .def_readwrite("sensors", &Scene::sensors)
        .def_readwrite("weights", &Scene::weights);

    m.def("validate_scene", &validate_scene, py::arg("scatterers"), py::arg("sensors"));
    m.def("pairwise_distances", &pairwise_distances, py::arg("scatterers"), py::arg("sensors"));
    m.def("scattering_length", &scattering_length, py::arg("scatterers"));
    m.def("scene_from_json", &scene_from_json, py::arg("text"));
    m.def("load_scene", &load_scene, py::arg("path"));
    m.def("scene_to_json", &scene_to_json, py::arg("scene"));

    // ---- interaction matrix --------------------------------------------------
    py::class_<InteractionMatrix>(m, "InteractionMatrix")
        .def_readonly("lambda_", &InteractionMatrix::lambda)
        .def_readonly("m", &InteractionMatrix::m)
        .def_readonly("inverse", &InteractionMatrix::inverse);

    py::class_<SpectralReport>(m, "SpectralReport")
        .def_readonly("lambda_bound", &SpectralReport::lambda_bound)
        .def_readonly("sup_estimate", &SpectralReport::sup_estimate)
        .def_readonly("eigenvalues", &SpectralReport::eigenvalues);

    m.def("build_m", &build_m, py::arg("scatterers"), py::arg("lambda_"));
    m.def("invert_m", &invert_m, py::arg("interaction"));
    m.def("is_positive_definite", &is_positive_definite, py::arg("interaction"));
    m.def("lambda_upper_bound", &lambda_upper_bound, py::arg("scatterers"));
    m.def("sup_spectrum_estimate", &sup_spectrum_estimate, py::arg("scatterers"),
          py::arg("tol") = 1e-10, py::call_guard<py::gil_scoped_release>());

    // ---- forward simulation --------------------------------------------------
    py::enum_<Side>(m, "Side").value("Left", Side::Left).value("Right", Side::Right);

    py::class_<ArrivalEvent>(m, "ArrivalEvent")
        .def_readonly("time", &ArrivalEvent::time)
        .def_readonly("scatterer", &ArrivalEvent::scatterer)
        .def_readonly("sensor", &ArrivalEvent::sensor)
        .def_readonly("jump", &ArrivalEvent::jump);

    py::class_<ChargeTrajectories>(m, "ChargeTrajectories")
        .def_readonly("times", &ChargeTrajectories::times)
        .def_readonly("values", &ChargeTrajectories::values)
        .def_readonly("jump_times", &ChargeTrajectories::jump_times)
        .def_readonly("kink_times", &ChargeTrajectories::kink_times)
        .def_readonly("events", &ChargeTrajectories::events)
        .def_readonly("horizon", &ChargeTrajectories::horizon)
        .def("value", &ChargeTrajectories::value, py::arg("scatterer"), py::arg("t"),
             py::arg("side") = Side::Right);

    py::class_<SensorTraces>(m, "SensorTraces")
        .def_readonly("times", &SensorTraces::times)
        .def_readonly("values", &SensorTraces::values)
        .def_readonly("jump_times", &SensorTraces::jump_times)
        .def_readonly("horizon", &SensorTraces::horizon);

    py::class_<SolveOptions>(m, "SolveOptions")
        .def(py::init<>())
        .def_readwrite("mollifier_eps", &SolveOptions::mollifier_eps);

    m.def("arrival_events", &arrival_events, py::arg("scatterers"), py::arg("sensors"),
          py::arg("weights"));
    m.def("max_admissible_step", &max_admissible_step, py::arg("scatterers"), py::arg("sensors"),
          py::arg("weights"));
    m.def("solve_charges", &solve_charges, py::arg("scatterers"), py::arg("sensors"),
          py::arg("weights"), py::arg("T"), py::arg("h"), py::arg("options") = SolveOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("scattered_field", &scattered_field, py::arg("charges"), py::arg("scatterers"),
          py::arg("t"), py::arg("x"));
    m.def("sensor_traces", &sensor_traces, py::arg("scatterers"), py::arg("sensors"),
          py::arg("weights"), py::arg("T"), py::arg("h"), py::arg("options") = SolveOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("sphere_ball_overlap", &sphere_ball_overlap, py::arg("t"), py::arg("r"), py::arg("eps"));
    m.def("free_field_mollified", &free_field_mollified, py::arg("sensors"), py::arg("weights"),
          py::arg("eps"), py::arg("t"), py::arg("x"));

    // ---- data operator -------------------------------------------------------
    py::enum_<ProvenanceKind>(m, "ProvenanceKind")
        .value("ClosedForm", ProvenanceKind::ClosedForm)
        .value("Simulated", ProvenanceKind::Simulated)
        .value("Perturbed", ProvenanceKind::Perturbed);

    py::class_<Provenance>(m, "Provenance")
        .def_readonly("kind", &Provenance::kind)
        .def_readonly("horizon", &Provenance::horizon)
        .def_readonly("step", &Provenance::step)
        .def_readonly("mollifier_eps", &Provenance::mollifier_eps)
        .def_readonly("noise_level", &Provenance::noise_level)
        .def_readonly("seed", &Provenance::seed);

    py::class_<DataOperator>(m, "DataOperator")
        .def(py::init<>())
        .def_readwrite("lambda_", &DataOperator::lambda)
        .def_readwrite("matrix", &DataOperator::matrix)
        .def_readonly("provenance", &DataOperator::provenance);

    py::class_<SimulationParams>(m, "SimulationParams")
        .def(py::init<>())
        .def_readwrite("horizon", &SimulationParams::horizon)
        .def_readwrite("step", &SimulationParams::step)
        .def_readwrite("mollifier_eps", &SimulationParams::mollifier_eps)
        .def_readwrite("truncation_rtol", &SimulationParams::truncation_rtol)
        .def_readwrite("threads", &SimulationParams::threads);

    m.def("closed_form_operator", &closed_form_operator, py::arg("scatterers"),
          py::arg("sensors"), py::arg("lambda_"));
    m.def("laplace_transform",
          py::overload_cast<const std::vector<double>&, const Eigen::VectorXd&, double, double>(
              &laplace_transform),
          py::arg("times"), py::arg("values"), py::arg("s"), py::arg("T"));
    m.def("simulated_operator", &simulated_operator, py::arg("scatterers"), py::arg("sensors"),
          py::arg("lambda_"), py::arg("params") = SimulationParams{},
          py::call_guard<py::gil_scoped_release>());
    m.def("perturb_operator", &perturb_operator, py::arg("op"), py::arg("level"), py::arg("seed"));
    m.def("default_lambda", &default_lambda, py::arg("scatterers"));
    m.def("default_step", &default_step, py::arg("scatterers"), py::arg("sensors"),
          py::arg("lambda_"));
    m.def("conditioning_warning", &conditioning_warning, py::arg("scatterers"),
          py::arg("sensors"), py::arg("lambda_"));

    // ---- inversion -------------------------------------------------------------
    py::class_<KernelProjector>(m, "KernelProjector")
        .def_readonly("basis", &KernelProjector::basis)
        .def_readonly("rank", &KernelProjector::rank)
        .def_readonly("singular_values", &KernelProjector::singular_values);

    py::class_<ImagingField>(m, "ImagingField")
        .def_readonly("grid", &ImagingField::grid)
        .def_readonly("values", &ImagingField::values)
        .def_readonly("lambda_", &ImagingField::lambda);

    py::class_<Peak>(m, "Peak")
        .def_readonly("position", &Peak::position)
        .def_readonly("score", &Peak::score);

    py::class_<InversionParams>(m, "InversionParams")
        .def(py::init<>())
        .def_readwrite("rank_tol", &InversionParams::rank_tol)
        .def_readwrite("peak_count", &InversionParams::peak_count)
        .def_readwrite("min_separation", &InversionParams::min_separation)
        .def_readwrite("threads", &InversionParams::threads);

    py::class_<InversionReport>(m, "InversionReport")
        .def_readonly("peaks", &InversionReport::peaks)
        .def_readonly("rank", &InversionReport::rank)
        .def_readonly("singular_values", &InversionReport::singular_values)
        .def_readonly("rank_gap", &InversionReport::rank_gap)
        .def_readonly("peak_residuals", &InversionReport::peak_residuals)
        .def_readonly("field", &InversionReport::field);

    m.def("steering_vector", &steering_vector, py::arg("sensors"), py::arg("lambda_"),
          py::arg("z"));
    m.def("kernel_projector", &kernel_projector, py::arg("op"), py::arg("rank_tol") = 1e-8);
    m.def("imaging_value", &imaging_value, py::arg("projector"), py::arg("phi"));
    m.def("scan_grid", &scan_grid, py::arg("projector"), py::arg("sensors"), py::arg("lambda_"),
          py::arg("grid"), py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());
    m.def("extract_peaks", &extract_peaks, py::arg("field"), py::arg("count"),
          py::arg("min_separation"));
    m.def("reconstruct", &reconstruct, py::arg("op"), py::arg("sensors"), py::arg("grid"),
          py::arg("params") = InversionParams{}, py::call_guard<py::gil_scoped_release>());

    // ---- end-to-end checks -------------------------------------------------------
    py::class_<CheckResult>(m, "CheckResult")
        .def_readonly("name", &CheckResult::name)
        .def_readonly("passed", &CheckResult::passed)
        .def_readonly("detail", &CheckResult::detail);

    m.def("acceptance_check_count", &acceptance_check_count);
    m.def("run_acceptance_check", &run_acceptance_check, py::arg("index"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_acceptance_checks", &run_acceptance_checks,
          py::call_guard<py::gil_scoped_release>());
}
