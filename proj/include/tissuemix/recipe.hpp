#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tissuemix {

enum class Strategy { mosaic, bezier };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

/// Mosaic split point, in pixels from the top-left corner.
struct AnchorPoint {
    int h_a = 0;
    int w_a = 0;

    bool operator==(const AnchorPoint&) const = default;
};

/// One applied transform. `source` indexes the input the transform acted on
/// (tile or grid index for Mosaic, -1 for the whole sample).
struct TransformDescriptor {
    std::string op;
    int source = -1;
    std::vector<std::pair<std::string, double>> params;

    double param(const std::string& key) const;
    bool operator==(const TransformDescriptor&) const = default;
};

/// Loop stored as flat anchor / tangent coordinate lists.
struct SerializedLoop {
    std::vector<std::pair<double, double>> anchors;
    std::vector<std::pair<double, double>> tangents;

    bool operator==(const SerializedLoop&) const = default;
};

/// Provenance of one synthesized sample. Mosaic recipes carry `anchor`,
/// Bezier recipes carry `loop`, never both.
struct SynthesisRecipe {
    Strategy strategy = Strategy::mosaic;
    std::vector<std::string> source_ids;
    std::uint64_t seed = 0;
    std::optional<AnchorPoint> anchor;
    std::optional<SerializedLoop> loop;
    std::vector<TransformDescriptor> augmentations;

    void validate() const;
    bool operator==(const SynthesisRecipe&) const = default;
};

nlohmann::ordered_json recipe_to_json(const SynthesisRecipe& recipe);
SynthesisRecipe recipe_from_json(const nlohmann::ordered_json& j);

}  // namespace tissuemix
