#include "ptscat/scene_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ptscat {

namespace {

using nlohmann::json;

Vec3 parse_point(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw Error(std::string(what) + " must be an array of three numbers");
    for (const auto& c : j)
        if (!c.is_number()) throw Error(std::string(what) + " has a non-numeric coordinate");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

} // namespace

Scene scene_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("scene JSON malformed: ") + e.what());
    }
    if (!j.is_object()) throw Error("scene JSON root must be an object");
    if (!j.contains("scatterers") || !j["scatterers"].is_array())
        throw Error("scene JSON needs a \"scatterers\" array");
    if (!j.contains("sensors") || !j["sensors"].is_array())
        throw Error("scene JSON needs a \"sensors\" array");

    Scene s;
    for (const auto& e : j["scatterers"]) {
        if (!e.is_object() || !e.contains("pos") || !e.contains("alpha"))
            throw Error("each scatterer needs \"pos\" and \"alpha\"");
        if (!e["alpha"].is_number()) throw Error("scatterer \"alpha\" must be a number");
        s.scatterers.points.push_back(parse_point(e["pos"], "scatterer pos"));
        s.scatterers.alphas.push_back(e["alpha"].get<double>());
    }
    for (const auto& e : j["sensors"])
        s.sensors.points.push_back(parse_point(e, "sensor"));

    if (j.contains("weights")) {
        if (!j["weights"].is_array()) throw Error("\"weights\" must be an array");
        for (const auto& e : j["weights"]) {
            if (!e.is_number()) throw Error("pulse weight must be a number");
            s.weights.values.push_back(e.get<double>());
        }
    } else {
        s.weights = PulseWeights::ones(s.sensors.size());
    }

    validate_scene(s.scatterers, s.sensors);
    check_weights(s.sensors, s.weights);
    return s;
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scene file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scene_from_json(buf.str());
}

std::string scene_to_json(const Scene& scene) {
    json j;
    j["scatterers"] = json::array();
    for (int i = 0; i < scene.scatterers.size(); ++i) {
        const Vec3& p = scene.scatterers.points[i];
        j["scatterers"].push_back({{"pos", {p.x(), p.y(), p.z()}},
                                   {"alpha", scene.scatterers.alphas[i]}});
    }
    j["sensors"] = json::array();
    for (const Vec3& p : scene.sensors.points)
        j["sensors"].push_back({p.x(), p.y(), p.z()});
    j["weights"] = scene.weights.values;
    return j.dump(2);
}

} // namespace ptscat
