#include "mlz/presets.hpp"

namespace mlz {

ModelSpec fig1_model() {
    // Level 5 is E5 = -0.8 t - 0.4; with +0.4 the reference probabilities
    // for states 4 and 5 are not reproduced (see fig1_caption_model).
    ModelSpec m = fig1_caption_model();
    m.alpha[4] = -0.4;
    return m;
}

ModelSpec fig1_caption_model() {
    ModelSpec m = ModelSpec::diagonal({1.0, 1.0, 1.0, 0.0, -0.8}, {0.0, 0.3, 0.5, 0.0, 0.4});
    m.set_coupling(2, 3, {0.8, 0.0});
    m.set_coupling(2, 4, {0.3, 0.24});
    m.set_coupling(1, 3, {0.1, 0.7});
    m.set_coupling(1, 4, {0.5, 0.1});
    m.set_coupling(0, 3, {0.4, 0.12});
    m.set_coupling(0, 4, {0.25, 0.2});
    m.set_coupling(3, 4, {0.6, 0.9});
    return m;
}

ModelSpec fig1_decoupled_model() {
    ModelSpec m = fig1_model();
    for (std::size_t k : {1u, 2u}) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (j != k) m.set_coupling(k, j, {0.0, 0.0});
        }
    }
    return m;
}

ModelSpec fig4_model(double epsilon) {
    // H11 = -t, H22 = -t - eps, H33 = t, H44 = 0.5 t - 0.5
    ModelSpec m = ModelSpec::diagonal({-1.0, -1.0, 1.0, 0.5}, {0.0, -epsilon, 0.0, -0.5});
    m.set_coupling(0, 2, {0.4, -0.1});
    m.set_coupling(0, 3, {0.6, 0.0});
    m.set_coupling(1, 2, {0.4, 0.5});
    m.set_coupling(1, 3, {0.2, 0.3});
    return m;
}

ModelSpec lz2_model() {
    ModelSpec m = ModelSpec::diagonal({1.0, -1.0}, {0.0, 0.0});
    m.set_coupling(0, 1, {0.5, 0.0});
    return m;
}

std::vector<std::string> preset_names() {
    return {"fig1", "fig1-decoupled", "fig1-caption", "fig4", "lz2"};
}

Preset make_preset(std::string_view name, std::optional<double> parameter) {
    if (name == "fig4") {
        if (!parameter) throw InputError("preset fig4 requires an epsilon value");
        return {"fig4", fig4_model(*parameter), 600.0,
                "four-state model, levels 1 and 2 separated by epsilon"};
    }
    if (parameter) throw InputError("preset '" + std::string(name) + "' takes no parameter");
    if (name == "fig1") {
        return {"fig1", fig1_model(), 500.0, "five-state model with a three-level band of slope 1"};
    }
    if (name == "fig1-decoupled") {
        return {"fig1-decoupled", fig1_decoupled_model(), 500.0,
                "five-state model with states 2 and 3 decoupled"};
    }
    if (name == "fig1-caption") {
        return {"fig1-caption", fig1_caption_model(), 500.0,
                "five-state model with level 5 offset +0.4"};
    }
    if (name == "lz2") {
        return {"lz2", lz2_model(), std::nullopt, "two-state Landau-Zener crossing"};
    }
    std::string known;
    for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
    throw InputError("unknown preset '" + std::string(name) + "'; known presets: " + known);
}

} // namespace mlz
