#pragma once

#include <filesystem>
#include <fstream>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

#include "tissuemix/manifest.hpp"
#include "tissuemix/recipe.hpp"

namespace tissuemix::io {

/// Loads manifest entries as labeled images, caching recently used ones.
/// Entries without a mask file must be single-labeled; their mask is the
/// label everywhere, except color-detected background when enabled.
/// Safe to call from several threads.
class SourceStore {
public:
    explicit SourceStore(const DatasetManifest& manifest, bool infer_background = true, std::size_t capacity = 2048);

    std::shared_ptr<const LabeledImage> load(std::size_t entry) const;
    const DatasetManifest& manifest() const { return manifest_; }

private:
    const DatasetManifest& manifest_;
    bool infer_background_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    mutable std::list<std::size_t> recent_;
    mutable std::unordered_map<std::size_t, std::pair<std::shared_ptr<const LabeledImage>, std::list<std::size_t>::iterator>>
        cache_;
};

inline constexpr const char* kManifestName = "manifest.jsonl";

/// Writes `<id>.png`, `<id>_mask.png`, `<id>.recipe.json` and appends the
/// manifest row. One writer owns an output directory.
class SampleWriter {
public:
    /// Creates the directory if needed; refuses one that already holds a manifest.
    SampleWriter(const std::filesystem::path& dir, std::vector<std::string> class_names,
                 std::uint8_t background = kDefaultBackground);

    ManifestEntry write(const std::string& id, const LabeledImage& sample, const SynthesisRecipe& recipe);

    const std::filesystem::path& dir() const { return dir_; }
    std::size_t written() const { return ids_.size(); }

private:
    std::filesystem::path dir_;
    DatasetManifest header_;
    std::ofstream manifest_;
    std::unordered_set<std::string> ids_;
};

std::string recipe_file_name(const std::string& id);
SynthesisRecipe read_recipe(const std::filesystem::path& path);

}  // namespace tissuemix::io
