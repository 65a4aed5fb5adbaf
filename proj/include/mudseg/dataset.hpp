#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mudseg/raster.hpp"

namespace mudseg {

enum class Augmentation { None, HFlip, VFlip };
enum class Split { Train, Val, Test };

const char* augmentation_name(Augmentation a) noexcept;
const char* split_name(Split s) noexcept;
std::optional<Split> parse_split(const std::string& name);
std::optional<Augmentation> parse_augmentation(const std::string& name);

struct SplitFractions {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;

    void validate() const;
};

inline constexpr int kDefaultTileWidth = 400;
inline constexpr int kDefaultTileHeight = 343;
inline constexpr double kDefaultTargetPitchUm = 20.0 / 2048.0;

struct DatasetConfig {
    double target_pitch_um = kDefaultTargetPitchUm;
    int tile_w = kDefaultTileWidth;
    int tile_h = kDefaultTileHeight;
    std::uint64_t seed = 0;
    SplitFractions fractions;
    /// Group by source frame instead of by tile position.
    bool split_by_source = false;

    void validate() const;
};

DatasetConfig dataset_config_from_json(const std::string& text);
std::string dataset_config_to_json(const DatasetConfig& config);

struct Tile {
    Raster<std::uint8_t> image;
    ClassMask mask;
    int row = 0;
    int col = 0;
};

struct TilingResult {
    std::vector<Tile> tiles;
    std::optional<std::string> warning;
};

/// Non-overlapping grid anchored top-left; right/bottom remainders are discarded.
TilingResult tile(const Raster<std::uint8_t>& img, const ClassMask& mask, int tile_w = kDefaultTileWidth,
                  int tile_h = kDefaultTileHeight);

struct AugmentedTile {
    Tile tile;
    Augmentation augmentation;
};

/// Original, horizontal flip, vertical flip, in that order.
std::array<AugmentedTile, 3> augment(const Tile& t);

struct TileRecord {
    std::string tile_id;
    std::string source_id;
    int row = 0;
    int col = 0;
    Augmentation augmentation = Augmentation::None;
    Split split = Split::Train;
    std::string image_path;  ///< relative to the dataset root
    std::string mask_path;

    friend bool operator==(const TileRecord&, const TileRecord&) = default;
};

std::string tile_id(const std::string& source_id, int row, int col, Augmentation aug);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// FNV-1a over the UTF-8 key followed by the seed's 8 little-endian bytes.
std::uint64_t group_hash(const std::string& key, std::uint64_t seed) noexcept;

/// "<source>/r<row>/c<col>", or just the source id when splitting by source.
std::string group_key(const TileRecord& r, bool by_source);

/// Orders groups by group_hash and assigns floor(f_train G) to train, floor(f_val G) to val,
/// the rest to test. Every record of a group receives the same split.
void assign_splits(std::vector<TileRecord>& records, const SplitFractions& fractions, std::uint64_t seed,
                   bool by_source = false);

struct DatasetManifest {
    DatasetConfig config;
    std::vector<TileRecord> records;

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
};

struct DatasetSource {
    std::string source_id;
    GrayImage image;  ///< must carry pitch
    ClassMask mask;
};

struct BuildReport {
    DatasetManifest manifest;
    std::vector<std::string> errors;    ///< per-source failures; other sources still processed
    std::vector<std::string> warnings;  ///< e.g. frame smaller than one tile
};

/// Rescale (bilinear image, nearest mask), tile, augment, split, and write
/// `images/`, `masks/` and `manifest.json` under root.
BuildReport build_dataset(const std::vector<DatasetSource>& sources, const DatasetConfig& config,
                          const std::filesystem::path& root, int jobs = 1);

}  // namespace mudseg
