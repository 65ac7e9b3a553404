#include "tissuemix/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace tissuemix::io {

using nlohmann::ordered_json;

std::filesystem::path DatasetManifest::resolve(const std::string& relative) const {
    const std::filesystem::path p(relative);
    return p.is_absolute() ? p : root / p;
}

void validate(const DatasetManifest& m) {
    require(!m.class_names.empty() && m.class_names.size() < 255, "manifest needs 1..254 class names");
    require(m.background_index >= m.class_names.size(), "background index " + std::to_string(m.background_index) +
                                                            " collides with a class index");
    std::unordered_set<std::string> ids;
    for (const auto& e : m.entries) {
        require(!e.id.empty(), "manifest entry with an empty id");
        require(ids.insert(e.id).second, "duplicate manifest id '" + e.id + "'");
        require(!e.image.empty(), "entry '" + e.id + "' has no image path");
        require(e.labels.size() == m.class_names.size(), "entry '" + e.id + "' has " + std::to_string(e.labels.size()) +
                                                             " labels, expected " +
                                                             std::to_string(m.class_names.size()));
    }
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
    DatasetManifest m;
    m.root = root;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::unordered_set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto where = [&](const std::string& what) { return "manifest line " + std::to_string(line_no) + ": " + what; };
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(where(std::string("invalid JSON (") + e.what() + ")"));
        }
        require(j.is_object(), where("expected a JSON object"));
        try {
            if (!have_header) {
                require(j.contains("class_names"), where("first line must be the header with class_names"));
                m.class_names = j.at("class_names").get<std::vector<std::string>>();
                const int bg = j.value("background_index", static_cast<int>(kDefaultBackground));
                require(bg >= 0 && bg <= 255, where("background_index must be in 0..255"));
                m.background_index = static_cast<std::uint8_t>(bg);
                require(!m.class_names.empty() && m.class_names.size() < 255, where("need 1..254 class names"));
                require(m.background_index >= m.class_names.size(), where("background index collides with a class"));
                have_header = true;
                continue;
            }
            ManifestEntry e;
            e.id = j.at("id").get<std::string>();
            e.image = j.at("image").get<std::string>();
            if (j.contains("mask") && !j.at("mask").is_null()) e.mask = j.at("mask").get<std::string>();
            for (const auto& v : j.at("labels")) {
                require(v.is_number_integer() && (v == 0 || v == 1), where("labels must be 0/1 integers"));
                e.labels.push_back(v == 1);
            }
            require(!e.id.empty(), where("empty id"));
            require(ids.insert(e.id).second, where("duplicate id '" + e.id + "'"));
            require(e.labels.size() == m.class_names.size(),
                    where("entry '" + e.id + "' has " + std::to_string(e.labels.size()) + " labels, expected " +
                          std::to_string(m.class_names.size())));
            m.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            fail(where(e.what()));
        }
    }
    require(have_header, "manifest has no header line");
    return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_manifest(buf.str(), path.parent_path());
    } catch (const InvalidArgument& e) {
        fail(path.string() + ": " + e.what());
    }
}

std::string header_line(const DatasetManifest& m) {
    ordered_json j;
    j["class_names"] = m.class_names;
    j["background_index"] = m.background_index;
    return j.dump();
}

std::string entry_line(const ManifestEntry& e) {
    ordered_json j;
    j["id"] = e.id;
    j["image"] = e.image;
    j["mask"] = e.mask ? ordered_json(*e.mask) : ordered_json();
    auto labels = ordered_json::array();
    for (bool b : e.labels) labels.push_back(b ? 1 : 0);
    j["labels"] = labels;
    return j.dump();
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    validate(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << header_line(m) << '\n';
    for (const auto& e : m.entries) out << entry_line(e) << '\n';
    if (!out) throw IoError("failed writing manifest " + path.string());
}

int single_label_of(const ManifestEntry& e) {
    int found = -1;
    for (std::size_t c = 0; c < e.labels.size(); ++c) {
        if (!e.labels[c]) continue;
        if (found >= 0) return -1;
        found = static_cast<int>(c);
    }
    return found;
}

ClassPool index_single_label(const DatasetManifest& m) {
    validate(m);
    ClassPool pool;
    pool.members.resize(m.class_names.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const int c = single_label_of(m.entries[i]);
        if (c >= 0) pool.members[static_cast<std::size_t>(c)].push_back(i);
    }
    for (std::size_t c = 0; c < pool.members.size(); ++c) {
        if (pool.members[c].empty()) pool.warnings.push_back("no single-label images for class '" + m.class_names[c] + "'");
    }
    return pool;
}

}  // namespace tissuemix::io
