#include "tissuemix/sample_store.hpp"

#include <sstream>

#include "tissuemix/metrics.hpp"
#include "tissuemix/png_io.hpp"

namespace tissuemix::io {

SourceStore::SourceStore(const DatasetManifest& manifest, bool infer_background, std::size_t capacity)
    : manifest_(manifest), infer_background_(infer_background), capacity_(std::max<std::size_t>(capacity, 1)) {}

std::shared_ptr<const LabeledImage> SourceStore::load(std::size_t entry) const {
    require(entry < manifest_.entries.size(), "manifest entry index out of range");
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(entry); it != cache_.end()) {
            recent_.splice(recent_.begin(), recent_, it->second.second);
            return it->second.first;
        }
    }

    const auto& e = manifest_.entries[entry];
    auto sample = std::make_shared<LabeledImage>();
    sample->image = read_image(manifest_.resolve(e.image));
    if (e.mask) {
        sample->mask = read_mask(manifest_.resolve(*e.mask), manifest_.num_classes(), manifest_.background_index);
        require(sample->mask.height == sample->image.height && sample->mask.width == sample->image.width,
                "mask of '" + e.id + "' does not match its image size");
    } else {
        const int label = single_label_of(e);
        require(label >= 0, "entry '" + e.id + "' has no mask and is not single-labeled");
        sample->mask = LabelMask(sample->image.height, sample->image.width, static_cast<std::uint8_t>(label),
                                 manifest_.background_index);
        if (infer_background_) {
            // An image that is white throughout keeps its label rather than becoming class-free.
            auto marked = metrics::mark_background(sample->mask, sample->image);
            if (!present_labels(marked).empty()) sample->mask = std::move(marked);
        }
    }

    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(entry); it != cache_.end()) return it->second.first;
    if (cache_.size() >= capacity_) {
        cache_.erase(recent_.back());
        recent_.pop_back();
    }
    recent_.push_front(entry);
    cache_.emplace(entry, std::make_pair(sample, recent_.begin()));
    return sample;
}

std::string recipe_file_name(const std::string& id) { return id + ".recipe.json"; }

SampleWriter::SampleWriter(const std::filesystem::path& dir, std::vector<std::string> class_names,
                           std::uint8_t background)
    : dir_(dir) {
    header_.class_names = std::move(class_names);
    header_.background_index = background;
    validate(header_);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    const auto manifest_path = dir_ / kManifestName;
    if (std::filesystem::exists(manifest_path)) {
        throw IoError("output directory " + dir_.string() + " already contains " + kManifestName);
    }
    manifest_.open(manifest_path, std::ios::binary);
    if (!manifest_) throw IoError("cannot create " + manifest_path.string());
    manifest_ << header_line(header_) << '\n';
    manifest_.flush();
}

ManifestEntry SampleWriter::write(const std::string& id, const LabeledImage& sample, const SynthesisRecipe& recipe) {
    require(!id.empty() && id.find_first_of("/\\") == std::string::npos, "invalid sample id '" + id + "'");
    validate_aligned(sample.image, sample.mask);
    validate(sample.mask, header_.num_classes());
    recipe.validate();
    if (!ids_.insert(id).second || std::filesystem::exists(dir_ / (id + ".png"))) {
        ids_.insert(id);
        throw IoError("sample id collision: '" + id + "' already exists in " + dir_.string());
    }

    ManifestEntry e;
    e.id = id;
    e.image = id + ".png";
    e.mask = id + "_mask.png";
    e.labels = metrics::derive_image_labels(sample.mask, header_.num_classes()).present;

    write_image(dir_ / e.image, sample.image);
    write_mask(dir_ / *e.mask, sample.mask);
    {
        std::ofstream r(dir_ / recipe_file_name(id), std::ios::binary | std::ios::trunc);
        if (!r) throw IoError("cannot write recipe for '" + id + "'");
        r << recipe_to_json(recipe).dump(2) << '\n';
        if (!r) throw IoError("failed writing recipe for '" + id + "'");
    }
    manifest_ << entry_line(e) << '\n';
    manifest_.flush();
    if (!manifest_) throw IoError("failed appending to manifest in " + dir_.string());
    return e;
}

SynthesisRecipe read_recipe(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open recipe " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return recipe_from_json(nlohmann::ordered_json::parse(buf.str()));
    } catch (const nlohmann::json::exception& e) {
        fail(path.string() + ": " + e.what());
    }
}

}  // namespace tissuemix::io
