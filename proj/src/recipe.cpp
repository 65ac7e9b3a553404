#include "tissuemix/recipe.hpp"

#include "tissuemix/error.hpp"

namespace tissuemix {

std::string to_string(Strategy s) { return s == Strategy::mosaic ? "mosaic" : "bezier"; }

Strategy parse_strategy(const std::string& name) {
    if (name == "mosaic") return Strategy::mosaic;
    if (name == "bezier") return Strategy::bezier;
    fail("unknown strategy '" + name + "' (expected mosaic or bezier)");
}

double TransformDescriptor::param(const std::string& key) const {
    for (const auto& [k, v] : params) {
        if (k == key) return v;
    }
    fail("transform '" + op + "' has no parameter '" + key + "'");
}

void SynthesisRecipe::validate() const {
    if (strategy == Strategy::mosaic) {
        require(anchor.has_value() && !loop.has_value(), "mosaic recipe must carry an anchor and no loop");
    } else {
        require(loop.has_value() && !anchor.has_value(), "bezier recipe must carry a loop and no anchor");
        require(loop->anchors.size() == loop->tangents.size() && loop->anchors.size() >= 3,
                "bezier recipe loop must have >= 3 anchors with one tangent each");
    }
}

nlohmann::ordered_json recipe_to_json(const SynthesisRecipe& recipe) {
    recipe.validate();
    nlohmann::ordered_json j;
    j["strategy"] = to_string(recipe.strategy);
    j["source_ids"] = recipe.source_ids;
    j["seed"] = recipe.seed;
    if (recipe.anchor) j["anchor"] = {{"h_a", recipe.anchor->h_a}, {"w_a", recipe.anchor->w_a}};
    if (recipe.loop) {
        auto flat = [](const std::vector<std::pair<double, double>>& pts) {
            auto arr = nlohmann::ordered_json::array();
            for (const auto& [x, y] : pts) arr.push_back({x, y});
            return arr;
        };
        j["loop"] = {{"anchors", flat(recipe.loop->anchors)}, {"tangents", flat(recipe.loop->tangents)}};
    }
    auto augs = nlohmann::ordered_json::array();
    for (const auto& t : recipe.augmentations) {
        nlohmann::ordered_json d;
        d["op"] = t.op;
        d["source"] = t.source;
        for (const auto& [k, v] : t.params) d[k] = v;
        augs.push_back(std::move(d));
    }
    j["augmentations"] = std::move(augs);
    return j;
}

SynthesisRecipe recipe_from_json(const nlohmann::ordered_json& j) {
    SynthesisRecipe r;
    try {
        r.strategy = parse_strategy(j.at("strategy").get<std::string>());
        r.source_ids = j.at("source_ids").get<std::vector<std::string>>();
        r.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("anchor")) r.anchor = AnchorPoint{j["anchor"].at("h_a").get<int>(), j["anchor"].at("w_a").get<int>()};
        if (j.contains("loop")) {
            SerializedLoop loop;
            for (const auto& p : j["loop"].at("anchors")) loop.anchors.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            for (const auto& p : j["loop"].at("tangents")) loop.tangents.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            r.loop = std::move(loop);
        }
        for (const auto& d : j.at("augmentations")) {
            TransformDescriptor t;
            t.op = d.at("op").get<std::string>();
            t.source = d.at("source").get<int>();
            for (const auto& [k, v] : d.items()) {
                if (k != "op" && k != "source") t.params.emplace_back(k, v.get<double>());
            }
            r.augmentations.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed recipe: ") + e.what());
    }
    r.validate();
    return r;
}

}  // namespace tissuemix
