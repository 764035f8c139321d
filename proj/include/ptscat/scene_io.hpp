#pragma once

// JSON (de)serialization for scenes:
// {"scatterers":[{"pos":[x,y,z],"alpha":a},...],
//  "sensors":[[x,y,z],...],
//  "weights":[f1,...]}        (weights optional, defaults to all ones)

#include <string>
#include <tuple>

#include "ptscat/scene.hpp"

namespace ptscat {

struct Scene {
    ScattererArray scatterers;
    SensorArray sensors;
    PulseWeights weights;
};

Scene scene_from_json(const std::string& text);
Scene load_scene(const std::string& path);
std::string scene_to_json(const Scene& scene); // round-trips through scene_from_json

} // namespace ptscat
