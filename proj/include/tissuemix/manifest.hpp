#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tissuemix/image.hpp"

namespace tissuemix::io {

struct ManifestEntry {
    std::string id;
    std::string image;                // relative to the manifest's directory unless absolute
    std::optional<std::string> mask;  // index mask, if any
    std::vector<bool> labels;         // multi-hot, one per class

    bool operator==(const ManifestEntry&) const = default;
};

/// JSON Lines: a header object {"class_names": [...], "background_index": n}
/// followed by one entry object {"id", "image", "mask", "labels"} per line.
struct DatasetManifest {
    std::vector<std::string> class_names;
    std::uint8_t background_index = kDefaultBackground;
    std::vector<ManifestEntry> entries;
    std::filesystem::path root;  // directory entry paths are resolved against

    int num_classes() const { return static_cast<int>(class_names.size()); }
    std::filesystem::path resolve(const std::string& relative) const;
    bool operator==(const DatasetManifest& o) const {
        return class_names == o.class_names && background_index == o.background_index && entries == o.entries;
    }
};

/// Unique ids, 1..254 classes, background index outside the class range,
/// label vectors of the right length.
void validate(const DatasetManifest& manifest);

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root = {});
DatasetManifest read_manifest(const std::filesystem::path& path);

std::string header_line(const DatasetManifest& manifest);
std::string entry_line(const ManifestEntry& entry);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Entry indices whose label vector is one-hot, per class.
struct ClassPool {
    std::vector<std::vector<std::size_t>> members;
    std::vector<std::string> warnings;

    std::size_t size(int c) const { return members[static_cast<std::size_t>(c)].size(); }
};

ClassPool index_single_label(const DatasetManifest& manifest);

/// Index of the single set label, or -1.
int single_label_of(const ManifestEntry& entry);

}  // namespace tissuemix::io
