#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>

#include "fixtures.hpp"
#include "tissuemix/manifest.hpp"
#include "tissuemix/png_io.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("tissuemix_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

struct DatasetLayout {
    std::vector<std::string> classes{"tumor", "stroma", "normal"};
    int per_class = 6;
    int height = 96;
    int width = 96;
    bool masks = true;
    int multi_label = 0;  // extra entries with two labels (never used as sources)
    // Entries per class that point at the same few image files, as large
    // pools with repeated patches do. 0 writes one file per entry.
    int distinct_files = 0;
    std::uint64_t seed = 1;
};

// Writes PNG sources and a manifest; returns the manifest path.
inline fs::path write_dataset(const fs::path& dir, const DatasetLayout& layout) {
    tissuemix::Rng rng(layout.seed);
    tissuemix::io::DatasetManifest m;
    m.class_names = layout.classes;
    fs::create_directories(dir / "images");
    if (layout.masks) fs::create_directories(dir / "masks");
    const int C = static_cast<int>(layout.classes.size());
    for (int c = 0; c < C; ++c) {
        const int files = layout.distinct_files > 0 ? layout.distinct_files : layout.per_class;
        for (int f = 0; f < files; ++f) {
            const auto t = make_tile(rng, layout.height, layout.width, static_cast<std::uint8_t>(c), true);
            const std::string stem = layout.classes[static_cast<std::size_t>(c)] + "_" + std::to_string(f);
            tissuemix::io::write_image(dir / "images" / (stem + ".png"), t.image);
            if (layout.masks) tissuemix::io::write_mask(dir / "masks" / (stem + ".png"), t.mask);
        }
        for (int i = 0; i < layout.per_class; ++i) {
            const std::string stem = layout.classes[static_cast<std::size_t>(c)] + "_" + std::to_string(i % files);
            tissuemix::io::ManifestEntry e;
            e.id = layout.classes[static_cast<std::size_t>(c)] + "_e" + std::to_string(i);
            e.image = "images/" + stem + ".png";
            if (layout.masks) e.mask = "masks/" + stem + ".png";
            e.labels.assign(static_cast<std::size_t>(C), false);
            e.labels[static_cast<std::size_t>(c)] = true;
            m.entries.push_back(e);
        }
    }
    for (int i = 0; i < layout.multi_label && C >= 2; ++i) {
        tissuemix::io::ManifestEntry e;
        e.id = "mixed_" + std::to_string(i);
        e.image = m.entries.front().image;
        e.labels.assign(static_cast<std::size_t>(C), false);
        e.labels[0] = e.labels[1] = true;
        m.entries.push_back(e);
    }
    const auto path = dir / "manifest.jsonl";
    tissuemix::io::write_manifest(path, m);
    return path;
}

inline std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Relative path -> contents of every regular file under `dir`.
inline std::map<std::string, std::string> tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = file_bytes(e.path());
    return out;
}

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

}  // namespace fixtures
