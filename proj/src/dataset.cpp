#include "mudseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "mudseg/image_io.hpp"
#include "mudseg/parallel.hpp"
#include "mudseg/resample.hpp"

namespace mudseg {

const char* augmentation_name(Augmentation a) noexcept {
    switch (a) {
        case Augmentation::None: return "none";
        case Augmentation::HFlip: return "hflip";
        case Augmentation::VFlip: return "vflip";
    }
    return "none";
}

const char* split_name(Split s) noexcept {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

std::optional<Split> parse_split(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    return std::nullopt;
}

std::optional<Augmentation> parse_augmentation(const std::string& name) {
    if (name == "none") return Augmentation::None;
    if (name == "hflip") return Augmentation::HFlip;
    if (name == "vflip") return Augmentation::VFlip;
    return std::nullopt;
}

void SplitFractions::validate() const {
    for (double f : {train, val, test}) {
        if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("split fractions must lie in [0,1]");
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) throw InvalidArgument("split fractions must sum to 1");
}

void DatasetConfig::validate() const {
    if (!(target_pitch_um > 0.0) || !std::isfinite(target_pitch_um)) {
        throw InvalidArgument("dataset: target_pitch_um must be positive");
    }
    if (tile_w < 1 || tile_h < 1) throw InvalidArgument("dataset: tile dimensions must be >= 1");
    fractions.validate();
}

namespace {

nlohmann::ordered_json config_json(const DatasetConfig& c) {
    nlohmann::ordered_json j;
    j["target_pitch_um"] = c.target_pitch_um;
    j["tile_w"] = c.tile_w;
    j["tile_h"] = c.tile_h;
    j["seed"] = c.seed;
    j["fractions"] = {{"train", c.fractions.train}, {"val", c.fractions.val}, {"test", c.fractions.test}};
    j["split_by"] = c.split_by_source ? "source" : "tile";
    return j;
}

DatasetConfig config_from(const nlohmann::json& j) {
    DatasetConfig c;
    if (!j.is_object()) throw InvalidArgument("dataset config must be a JSON object");
    try {
        if (j.contains("target_pitch_um")) c.target_pitch_um = j.at("target_pitch_um").get<double>();
        if (j.contains("tile_w")) c.tile_w = j.at("tile_w").get<int>();
        if (j.contains("tile_h")) c.tile_h = j.at("tile_h").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("fractions")) {
            const auto& f = j.at("fractions");
            c.fractions.train = f.at("train").get<double>();
            c.fractions.val = f.at("val").get<double>();
            c.fractions.test = f.at("test").get<double>();
        }
        if (j.contains("split_by")) {
            const auto by = j.at("split_by").get<std::string>();
            if (by != "tile" && by != "source") throw InvalidArgument("split_by must be \"tile\" or \"source\"");
            c.split_by_source = by == "source";
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("dataset config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace

DatasetConfig dataset_config_from_json(const std::string& text) {
    try {
        return config_from(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(std::string("dataset config: invalid JSON: ") + e.what());
    }
}

std::string dataset_config_to_json(const DatasetConfig& config) { return config_json(config).dump(2) + "\n"; }

TilingResult tile(const Raster<std::uint8_t>& img, const ClassMask& mask, int tile_w, int tile_h) {
    if (!img.same_shape(mask)) throw InvalidArgument("tile: image and mask dimensions differ");
    if (tile_w < 1 || tile_h < 1) throw InvalidArgument("tile: tile dimensions must be >= 1");
    TilingResult out;
    const int cols = img.width() / tile_w;
    const int rows = img.height() / tile_h;
    if (cols == 0 || rows == 0) {
        out.warning = "frame " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                      " is smaller than one " + std::to_string(tile_w) + "x" + std::to_string(tile_h) + " tile";
        return out;
    }
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            auto m = crop(mask, c * tile_w, r * tile_h, tile_w, tile_h);
            out.tiles.push_back({crop(img, c * tile_w, r * tile_h, tile_w, tile_h),
                                 ClassMask(tile_w, tile_h, std::vector<std::uint8_t>(m.vector())), r, c});
        }
    }
    return out;
}

std::array<AugmentedTile, 3> augment(const Tile& t) {
    auto as_mask = [](const Raster<std::uint8_t>& r) {
        return ClassMask(r.width(), r.height(), std::vector<std::uint8_t>(r.vector()));
    };
    return {AugmentedTile{t, Augmentation::None},
            AugmentedTile{{flip_horizontal(t.image), as_mask(flip_horizontal(t.mask)), t.row, t.col},
                          Augmentation::HFlip},
            AugmentedTile{{flip_vertical(t.image), as_mask(flip_vertical(t.mask)), t.row, t.col},
                          Augmentation::VFlip}};
}

std::string tile_id(const std::string& source_id, int row, int col, Augmentation aug) {
    return source_id + "_r" + std::to_string(row) + "_c" + std::to_string(col) + "_" + augmentation_name(aug);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis) noexcept {
    std::uint64_t h = basis;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t group_hash(const std::string& key, std::uint64_t seed) noexcept {
    std::vector<std::uint8_t> buf(key.begin(), key.end());
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
    return fnv1a64(buf);
}

std::string group_key(const TileRecord& r, bool by_source) {
    if (by_source) return r.source_id;
    return r.source_id + "/r" + std::to_string(r.row) + "/c" + std::to_string(r.col);
}

void assign_splits(std::vector<TileRecord>& records, const SplitFractions& fractions, std::uint64_t seed,
                   bool by_source) {
    fractions.validate();
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) groups[group_key(records[i], by_source)].push_back(i);
    const std::size_t G = groups.size();
    if (G < 3) throw InvalidArgument("split: need at least 3 groups, got " + std::to_string(G));

    struct Keyed {
        std::uint64_t hash;
        const std::string* key;
    };
    std::vector<Keyed> order;
    order.reserve(G);
    for (const auto& [key, _] : groups) order.push_back({group_hash(key, seed), &key});
    std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
        return a.hash != b.hash ? a.hash < b.hash : *a.key < *b.key;
    });

    // The epsilon absorbs representation error such as 0.7 * 100 = 69.999...
    const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * static_cast<double>(G) + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(fractions.val * static_cast<double>(G) + 1e-9));
    for (std::size_t g = 0; g < G; ++g) {
        const Split s = g < n_train ? Split::Train : g < n_train + n_val ? Split::Val : Split::Test;
        for (auto i : groups[*order[g].key]) records[i].split = s;
    }
}

std::string DatasetManifest::to_json() const {
    auto j = config_json(config);
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json jr;
        jr["tile_id"] = r.tile_id;
        jr["source_id"] = r.source_id;
        jr["row"] = r.row;
        jr["col"] = r.col;
        jr["augmentation"] = augmentation_name(r.augmentation);
        jr["split"] = split_name(r.split);
        jr["image"] = r.image_path;
        jr["mask"] = r.mask_path;
        j["records"].push_back(jr);
    }
    return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(std::string("manifest: invalid JSON: ") + e.what());
    }
    DatasetManifest m;
    m.config = config_from(j);
    try {
        for (const auto& jr : j.at("records")) {
            TileRecord r;
            r.tile_id = jr.at("tile_id").get<std::string>();
            r.source_id = jr.at("source_id").get<std::string>();
            r.row = jr.at("row").get<int>();
            r.col = jr.at("col").get<int>();
            auto aug = parse_augmentation(jr.at("augmentation").get<std::string>());
            auto split = parse_split(jr.at("split").get<std::string>());
            if (!aug || !split) throw InvalidArgument("manifest: bad augmentation or split in " + r.tile_id);
            r.augmentation = *aug;
            r.split = *split;
            r.image_path = jr.at("image").get<std::string>();
            r.mask_path = jr.at("mask").get<std::string>();
            m.records.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("manifest: ") + e.what());
    }
    return m;
}

BuildReport build_dataset(const std::vector<DatasetSource>& sources, const DatasetConfig& config,
                          const std::filesystem::path& root, int jobs) {
    config.validate();
    namespace fs = std::filesystem;
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");

    struct Outcome {
        std::vector<TileRecord> records;
        std::optional<std::string> error;
        std::optional<std::string> warning;
    };
    std::vector<Outcome> outcomes(sources.size());
    std::map<std::string, std::size_t> first_use;
    for (std::size_t i = 0; i < sources.size(); ++i) first_use.emplace(sources[i].source_id, i);

    parallel_for(sources.size(), jobs, [&](std::size_t i) {
        const auto& src = sources[i];
        auto& out = outcomes[i];
        try {
            if (src.source_id.empty()) throw InvalidArgument("empty source_id");
            if (first_use.at(src.source_id) != i) throw InvalidArgument("duplicate source_id");
            if (!src.image.same_shape(src.mask)) throw InvalidArgument("image and mask dimensions differ");
            const double pitch = src.image.require_pitch("dataset");
            Raster<std::uint8_t> img = src.image;
            ClassMask mask = src.mask;
            if (std::abs(pitch - config.target_pitch_um) > 1e-12 * config.target_pitch_um) {
                img = rescale(src.image, config.target_pitch_um, Interpolation::Bilinear);
                mask = rescale(src.mask, pitch, config.target_pitch_um);
            }
            auto tiled = tile(img, mask, config.tile_w, config.tile_h);
            if (tiled.warning) out.warning = src.source_id + ": " + *tiled.warning;
            for (const auto& t : tiled.tiles) {
                for (const auto& a : augment(t)) {
                    TileRecord r;
                    r.tile_id = tile_id(src.source_id, t.row, t.col, a.augmentation);
                    r.source_id = src.source_id;
                    r.row = t.row;
                    r.col = t.col;
                    r.augmentation = a.augmentation;
                    r.image_path = "images/" + r.tile_id + ".png";
                    r.mask_path = "masks/" + r.tile_id + ".png";
                    save_gray(a.tile.image, root / r.image_path);
                    save_mask(a.tile.mask, root / r.mask_path);
                    out.records.push_back(std::move(r));
                }
            }
        } catch (const std::exception& e) {
            out.error = src.source_id + ": " + e.what();
            out.records.clear();
        }
    });

    BuildReport report;
    report.manifest.config = config;
    for (auto& o : outcomes) {
        if (o.error) report.errors.push_back(*o.error);
        if (o.warning) report.warnings.push_back(*o.warning);
        for (auto& r : o.records) report.manifest.records.push_back(std::move(r));
    }

    std::map<std::string, int> group_count;
    for (const auto& r : report.manifest.records) ++group_count[group_key(r, config.split_by_source)];
    if (group_count.size() >= 3) {
        assign_splits(report.manifest.records, config.fractions, config.seed, config.split_by_source);
    } else if (!report.manifest.records.empty()) {
        report.warnings.push_back("fewer than 3 tile groups; every record assigned to train");
        for (auto& r : report.manifest.records) r.split = Split::Train;
    }
    write_text(root / "manifest.json", report.manifest.to_json());
    return report;
}

}  // namespace mudseg
