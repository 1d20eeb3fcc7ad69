// presets.hpp: built-in models.
//
//   fig1            five states: a three-level band of slope 1 (offsets 0,
//                   0.3, 0.5) crossed by E4 = 0 and E5 = -0.8 t - 0.4
//   fig1-decoupled  fig1 with every coupling of states 2 and 3 removed
//   fig1-caption    fig1 with E5 = -0.8 t + 0.4
//   fig4 <eps>      four states: levels 1 and 2 of slope -1 separated by eps,
//                   crossed by levels of slope 1 and 0.5
//   lz2             two-state Landau-Zener crossing, beta = (1, -1), g = 0.5

#pragma once

#include "mlz/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlz {

struct Preset {
    std::string name;
    ModelSpec spec;
    std::optional<double> window; // recommended T; empty means choose_window
    std::string description;
};

std::vector<std::string> preset_names();

// `parameter` is required for fig4 and rejected otherwise.
Preset make_preset(std::string_view name, std::optional<double> parameter = std::nullopt);

ModelSpec fig1_model();
ModelSpec fig1_decoupled_model();
ModelSpec fig1_caption_model();
ModelSpec fig4_model(double epsilon);
ModelSpec lz2_model();

} // namespace mlz
