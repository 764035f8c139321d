// Command-line front end: config-driven, file-based runs of the spectral
// analysis, forward simulation, data-operator assembly, and inversion stages.
// Exit codes: 0 success, 1 validation failure, 2 input error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ptscat/acceptance.hpp"
#include "ptscat/data_operator.hpp"
#include "ptscat/interaction.hpp"
#include "ptscat/music.hpp"
#include "ptscat/scene_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ptscat;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Outputs land under a temporary name and are renamed into place, so a
// failing run never leaves a partial artifact.
void write_atomic(const std::string& path, const std::string& text) {
    const fs::path target(path);
    fs::path tmp(path + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << text;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("failed writing " + path);
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        std::error_code ec2;
        fs::remove(tmp, ec2);
        throw Error("cannot move output into place at " + path + ": " + ec.message());
    }
}

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

const char* kind_name(ProvenanceKind k) {
    switch (k) {
        case ProvenanceKind::ClosedForm: return "closed_form";
        case ProvenanceKind::Simulated: return "simulated";
        case ProvenanceKind::Perturbed: return "perturbed";
    }
    return "unknown";
}

json provenance_json(const Provenance& p) {
    return json{{"kind", kind_name(p.kind)},       {"horizon", p.horizon},
                {"step", p.step},                  {"mollifier_eps", p.mollifier_eps},
                {"noise_level", p.noise_level},    {"seed", p.seed}};
}

DataOperator operator_from_file(const std::string& path) {
    json j;
    try {
        j = json::parse(slurp(path));
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    DataOperator op;
    try {
        op.lambda = j.at("lambda").get<double>();
        const auto& m = j.at("matrix");
        if (!m.is_array() || m.empty()) throw Error(path + ": matrix must be a nonempty array");
        const auto n = static_cast<Eigen::Index>(m.size());
        op.matrix.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& row = m[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
                throw Error(path + ": matrix must be square");
            for (Eigen::Index k = 0; k < n; ++k)
                op.matrix(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    if (!(op.lambda > 0.0) || !std::isfinite(op.lambda))
        throw Error(path + ": lambda must be positive");
    if (!op.matrix.allFinite()) throw Error(path + ": matrix entries must be finite");
    return op;
}

// The inversion stage only needs sensor positions, so it also accepts scene
// files without a scatterer list.
SensorArray sensors_from_file(const std::string& path) {
    const std::string text = slurp(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    if (j.is_object() && j.contains("scatterers")) return scene_from_json(text).sensors;
    SensorArray se;
    try {
        const auto& arr = j.at("sensors");
        if (!arr.is_array() || arr.empty())
            throw Error(path + ": sensors must be a nonempty array");
        for (const auto& p : arr) {
            if (!p.is_array() || p.size() != 3)
                throw Error(path + ": sensor positions must be [x, y, z]");
            se.points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    for (const auto& p : se.points)
        if (!p.allFinite()) throw Error(path + ": sensor positions must be finite");
    for (std::size_t a = 0; a < se.points.size(); ++a)
        for (std::size_t b = a + 1; b < se.points.size(); ++b)
            if ((se.points[a] - se.points[b]).norm() == 0.0)
                throw DuplicatePoint(path + ": duplicate sensor positions");
    return se;
}

// Per-subcommand option set shared by every pipeline stage.
struct Common {
    std::string config_path, scene_path;
    int threads = 0;
    CLI::Option *scene_opt = nullptr, *threads_opt = nullptr;

    void attach(CLI::App* cmd, bool with_scene = true) {
        cmd->add_option("--config", config_path, "JSON config file; explicit flags override it")
            ->check(CLI::ExistingFile);
        if (with_scene) scene_opt = cmd->add_option("--scene", scene_path, "scene JSON file");
        threads_opt = cmd->add_option("--threads", threads, "worker thread cap (0 = all cores)")
                          ->envname("PTSCAT_THREADS");
    }

    json config() const {
        if (config_path.empty()) return json::object();
        json j;
        try {
            j = json::parse(slurp(config_path));
        } catch (const json::exception& e) {
            throw Error(config_path + ": " + e.what());
        }
        if (!j.is_object()) throw Error(config_path + ": config must be a JSON object");
        return j;
    }
};

template <class T>
std::optional<T> pick(const CLI::Option* opt, const T& flag_value, const json& cfg,
                      const char* key) {
    if (opt != nullptr && opt->count() > 0) return flag_value;
    if (cfg.contains(key)) {
        try {
            return cfg.at(key).get<T>();
        } catch (const json::exception&) {
            throw Error(std::string("config key '") + key + "' has the wrong type");
        }
    }
    return std::nullopt;
}

std::string resolved_scene_path(const Common& common, const json& cfg) {
    const auto path = pick<std::string>(common.scene_opt, common.scene_path, cfg, "scene");
    if (!path) throw Error("a scene file is required (--scene or config key \"scene\")");
    return *path;
}

Scene load_scene_resolved(const Common& common, const json& cfg) {
    return load_scene(resolved_scene_path(common, cfg));
}

int resolved_threads(const Common& common, const json& cfg) {
    const auto t = pick<int>(common.threads_opt, common.threads, cfg, "threads");
    return t.value_or(0);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-domain point-scatterer scattering: simulation and inversion"};
    app.require_subcommand(1);

    // ---- spectrum ----------------------------------------------------------
    auto* spectrum = app.add_subcommand(
        "spectrum", "Interaction-matrix spectral report for a scene (JSON)");
    Common spec_common;
    spec_common.attach(spectrum);
    std::string spec_out;
    spectrum->add_option("--out", spec_out, "output JSON path (stdout if omitted)");

    // ---- forward -----------------------------------------------------------
    auto* forward = app.add_subcommand(
        "forward", "Simulate sensor traces for the scene's pulse weights (CSV)");
    Common fwd_common;
    fwd_common.attach(forward);
    std::string fwd_out;
    double fwd_horizon = 0.0, fwd_step = 0.0, fwd_eps = 0.0;
    auto* fwd_horizon_opt =
        forward->add_option("--horizon", fwd_horizon, "simulation end time");
    auto* fwd_step_opt = forward->add_option("--step", fwd_step, "integrator step");
    auto* fwd_eps_opt =
        forward->add_option("--eps", fwd_eps, "pulse mollifier radius (0 = ideal pulses)");
    forward->add_option("--out", fwd_out, "output CSV path")->required();

    // ---- data-op -----------------------------------------------------------
    auto* dataop = app.add_subcommand(
        "data-op", "Assemble the sensor-space data operator (JSON)");
    Common dop_common;
    dop_common.attach(dataop);
    std::string dop_out, dop_mode = "closed";
    double dop_lambda = 0.0, dop_horizon = 0.0, dop_step = 0.0, dop_eps = 0.0,
           dop_rtol = 1e-6, dop_noise = 0.0;
    std::uint64_t dop_seed = 0;
    auto* dop_mode_opt = dataop->add_option("--mode", dop_mode, "closed | simulated")
                             ->check(CLI::IsMember({"closed", "simulated"}));
    auto* dop_lambda_opt =
        dataop->add_option("--lambda", dop_lambda, "spectral parameter (> spectrum bound)");
    auto* dop_horizon_opt = dataop->add_option(
        "--horizon", dop_horizon, "simulated mode: fixed horizon (default adaptive)");
    auto* dop_step_opt = dataop->add_option("--step", dop_step, "simulated mode: integrator step");
    auto* dop_eps_opt =
        dataop->add_option("--eps", dop_eps, "simulated mode: pulse mollifier radius");
    auto* dop_rtol_opt = dataop->add_option(
        "--rtol", dop_rtol, "simulated mode: adaptive-horizon stall tolerance");
    auto* dop_noise_opt =
        dataop->add_option("--noise", dop_noise, "relative level of added symmetric noise");
    auto* dop_seed_opt = dataop->add_option("--seed", dop_seed, "noise seed");
    dataop->add_option("--out", dop_out, "output JSON path")->required();

    // ---- invert ------------------------------------------------------------
    auto* invert = app.add_subcommand(
        "invert", "Localize scatterers from a data operator (field CSV + peaks JSON)");
    Common inv_common;
    inv_common.attach(invert);
    std::string inv_op, inv_field, inv_peaks;
    std::vector<double> inv_lower, inv_upper;
    double inv_spacing = 0.0, inv_rank_tol = 1e-8, inv_min_sep = 0.0;
    int inv_count = 0;
    invert->add_option("--operator", inv_op, "data-operator JSON file")->required();
    auto* inv_lower_opt = invert->add_option("--grid-lower", inv_lower, "grid box lower corner")
                              ->expected(3);
    auto* inv_upper_opt = invert->add_option("--grid-upper", inv_upper, "grid box upper corner")
                              ->expected(3);
    auto* inv_spacing_opt = invert->add_option("--spacing", inv_spacing, "grid node spacing");
    auto* inv_rank_tol_opt = invert->add_option(
        "--rank-tol", inv_rank_tol, "relative singular-value cutoff (use 1e-2 for noisy data)");
    auto* inv_count_opt =
        invert->add_option("--peak-count", inv_count, "keep exactly this many peaks");
    auto* inv_min_sep_opt = invert->add_option(
        "--min-separation", inv_min_sep, "peak thinning radius (default: twice the spacing)");
    invert->add_option("--field", inv_field, "imaging-field CSV output path");
    invert->add_option("--peaks", inv_peaks, "peaks JSON output path");

    // ---- validate ----------------------------------------------------------
    auto* validate = app.add_subcommand(
        "validate", "Run the end-to-end oracle cross-checks and print a pass/fail table");
    int val_check = 0;
    validate->add_option("--check", val_check, "run a single check by number (1-based)")
        ->check(CLI::Range(1, acceptance_check_count()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*spectrum) {
            const json cfg = spec_common.config();
            const Scene scene = load_scene_resolved(spec_common, cfg);
            const auto report = sup_spectrum_estimate(scene.scatterers);
            json out{{"lambda_bound", report.lambda_bound},
                     {"sup_estimate", report.sup_estimate},
                     {"discrete_eigs", report.eigenvalues},
                     {"resolved_config",
                      json{{"scene", resolved_scene_path(spec_common, cfg)}, {"tol", 1e-10}}}};
            const std::string text = out.dump(2) + "\n";
            if (spec_out.empty())
                std::cout << text;
            else
                write_atomic(spec_out, text);
            return 0;
        }

        if (*forward) {
            const json cfg = fwd_common.config();
            const Scene scene = load_scene_resolved(fwd_common, cfg);
            const auto dist = pairwise_distances(scene.scatterers, scene.sensors);
            const double eps =
                pick<double>(fwd_eps_opt, fwd_eps, cfg, "mollifier_eps").value_or(0.0);

            double d_max = 0.0, d_min = std::numeric_limits<double>::infinity();
            for (int i = 0; i < scene.scatterers.size(); ++i)
                for (int j = i + 1; j < scene.scatterers.size(); ++j) {
                    d_max = std::max(d_max, dist.scatterer(i, j));
                    d_min = std::min(d_min, dist.scatterer(i, j));
                }
            const double horizon = pick<double>(fwd_horizon_opt, fwd_horizon, cfg, "horizon")
                                       .value_or(dist.sensor.maxCoeff() + d_max + eps + 5.0);
            const double geom = std::min(d_min, dist.sensor.minCoeff()) / 50.0;
            const double admissible =
                max_admissible_step(scene.scatterers, scene.sensors, scene.weights);
            double step = pick<double>(fwd_step_opt, fwd_step, cfg, "step")
                              .value_or(std::min(geom, admissible));
            if (eps > 0.0 && !(fwd_step_opt->count() > 0 || cfg.contains("step")))
                step = std::min(step, eps / 20.0);

            SolveOptions options;
            options.mollifier_eps = eps;
            const auto traces = sensor_traces(scene.scatterers, scene.sensors, scene.weights,
                                              horizon, step, options);

            std::string csv = "t";
            for (int k = 0; k < scene.sensors.size(); ++k) csv += ",s" + std::to_string(k + 1);
            csv += "\n";
            for (std::size_t c = 0; c < traces.times.size(); ++c) {
                csv += g17(traces.times[c]);
                for (int k = 0; k < scene.sensors.size(); ++k)
                    csv += "," + g17(traces.values(k, static_cast<Eigen::Index>(c)));
                csv += "\n";
            }
            write_atomic(fwd_out, csv);
            return 0;
        }

        if (*dataop) {
            const json cfg = dop_common.config();
            const Scene scene = load_scene_resolved(dop_common, cfg);
            const std::string mode =
                pick<std::string>(dop_mode_opt, dop_mode, cfg, "mode").value_or("closed");
            if (mode != "closed" && mode != "simulated")
                throw Error("mode must be \"closed\" or \"simulated\"");
            const double lambda = pick<double>(dop_lambda_opt, dop_lambda, cfg, "lambda")
                                      .value_or(default_lambda(scene.scatterers));
            const double noise = pick<double>(dop_noise_opt, dop_noise, cfg, "noise").value_or(0.0);
            const std::uint64_t seed =
                pick<std::uint64_t>(dop_seed_opt, dop_seed, cfg, "seed").value_or(0);

            if (const auto warn = conditioning_warning(scene.scatterers, scene.sensors, lambda))
                std::cerr << "warning: " << *warn << "\n";

            DataOperator op;
            json resolved{{"scene", resolved_scene_path(dop_common, cfg)},
                          {"mode", mode},
                          {"lambda", lambda},
                          {"noise", noise},
                          {"threads", resolved_threads(dop_common, cfg)}};
            if (mode == "closed") {
                op = closed_form_operator(scene.scatterers, scene.sensors, lambda);
            } else {
                SimulationParams params;
                params.horizon = pick<double>(dop_horizon_opt, dop_horizon, cfg, "horizon");
                params.step = pick<double>(dop_step_opt, dop_step, cfg, "step");
                params.mollifier_eps =
                    pick<double>(dop_eps_opt, dop_eps, cfg, "mollifier_eps").value_or(0.0);
                params.truncation_rtol =
                    pick<double>(dop_rtol_opt, dop_rtol, cfg, "truncation_rtol").value_or(1e-6);
                params.threads = resolved_threads(dop_common, cfg);
                op = simulated_operator(scene.scatterers, scene.sensors, lambda, params);
                resolved["horizon"] = op.provenance.horizon;
                resolved["step"] = op.provenance.step;
                resolved["mollifier_eps"] = op.provenance.mollifier_eps;
                resolved["truncation_rtol"] = params.truncation_rtol;
            }
            if (noise > 0.0) {
                op = perturb_operator(op, noise, seed);
                resolved["seed"] = seed;
            }

            json out{{"lambda", op.lambda},
                     {"provenance", provenance_json(op.provenance)},
                     {"matrix", matrix_json(op.matrix)},
                     {"resolved_config", resolved}};
            write_atomic(dop_out, out.dump(2) + "\n");
            return 0;
        }

        if (*invert) {
            const json cfg = inv_common.config();
            if (inv_field.empty() && inv_peaks.empty())
                throw Error("nothing to write: pass --field and/or --peaks");
            const auto op = operator_from_file(inv_op);
            const auto sensors =
                sensors_from_file(resolved_scene_path(inv_common, cfg));

            const json gcfg = cfg.value("grid", json::object());
            const auto lower = pick<std::vector<double>>(inv_lower_opt, inv_lower, gcfg, "lower");
            const auto upper = pick<std::vector<double>>(inv_upper_opt, inv_upper, gcfg, "upper");
            const auto spacing = pick<double>(inv_spacing_opt, inv_spacing, gcfg, "spacing");
            if (!lower || !upper || !spacing)
                throw Error("a search grid is required (--grid-lower, --grid-upper, --spacing "
                            "or a config \"grid\" block)");
            if (lower->size() != 3 || upper->size() != 3)
                throw Error("grid corners must have three coordinates");
            GridSpec grid;
            grid.lower = Vec3((*lower)[0], (*lower)[1], (*lower)[2]);
            grid.upper = Vec3((*upper)[0], (*upper)[1], (*upper)[2]);
            grid.spacing = *spacing;

            InversionParams params;
            params.rank_tol =
                pick<double>(inv_rank_tol_opt, inv_rank_tol, cfg, "rank_tol").value_or(1e-8);
            params.peak_count = pick<int>(inv_count_opt, inv_count, cfg, "peak_count");
            params.min_separation =
                pick<double>(inv_min_sep_opt, inv_min_sep, cfg, "min_separation").value_or(0.0);
            params.threads = resolved_threads(inv_common, cfg);

            const auto report = reconstruct(op, sensors, grid, params);

            json resolved{{"operator", inv_op},
                          {"scene", resolved_scene_path(inv_common, cfg)},
                          {"lambda", op.lambda},
                          {"rank_tol", params.rank_tol},
                          {"peak_count",
                           params.peak_count ? json(*params.peak_count) : json(nullptr)},
                          {"min_separation", params.min_separation > 0.0
                                                 ? params.min_separation
                                                 : 2.0 * grid.spacing},
                          {"grid", json{{"lower", vec_json(grid.lower)},
                                        {"upper", vec_json(grid.upper)},
                                        {"spacing", grid.spacing}}},
                          {"threads", params.threads}};

            if (!inv_field.empty()) {
                const auto shape = grid.shape();
                std::string csv = "x,y,z,value\n";
                std::size_t idx = 0;
                for (int iz = 0; iz < shape[2]; ++iz)
                    for (int iy = 0; iy < shape[1]; ++iy)
                        for (int ix = 0; ix < shape[0]; ++ix, ++idx) {
                            const Vec3 z = grid.node(ix, iy, iz);
                            csv += g17(z.x());
                            csv += ",";
                            csv += g17(z.y());
                            csv += ",";
                            csv += g17(z.z());
                            csv += ",";
                            csv += g17(report.field.values[idx]);
                            csv += "\n";
                        }
                write_atomic(inv_field, csv);
            }
            if (!inv_peaks.empty()) {
                json peaks = json::array();
                for (const auto& p : report.peaks)
                    peaks.push_back(json{{"pos", vec_json(p.position)}, {"score", p.score}});
                json out{{"peaks", peaks},
                         {"rank", report.rank},
                         {"singular_values", std::vector<double>(
                                                 report.singular_values.begin(),
                                                 report.singular_values.end())},
                         {"rank_gap", std::isfinite(report.rank_gap) ? json(report.rank_gap)
                                                                     : json(nullptr)},
                         {"peak_residuals", report.peak_residuals},
                         {"resolved_config", resolved}};
                write_atomic(inv_peaks, out.dump(2) + "\n");
            }
            return 0;
        }

        if (*validate) {
            std::vector<CheckResult> results;
            std::vector<int> numbers;
            if (val_check > 0) {
                results.push_back(run_acceptance_check(val_check));
                numbers.push_back(val_check);
            } else {
                results = run_acceptance_checks();
                for (int i = 1; i <= static_cast<int>(results.size()); ++i) numbers.push_back(i);
            }
            bool all = true;
            for (std::size_t i = 0; i < results.size(); ++i) {
                const auto& r = results[i];
                std::printf("[%s] %d. %s: %s\n", r.passed ? "PASS" : "FAIL", numbers[i],
                            r.name.c_str(), r.detail.c_str());
                std::fflush(stdout);
                all = all && r.passed;
            }
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
