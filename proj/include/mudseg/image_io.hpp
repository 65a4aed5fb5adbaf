#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mudseg/raster.hpp"

namespace mudseg {

namespace fs = std::filesystem;

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const fs::path& path);
void write_file(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& path, const std::string& text);

// In-memory codecs. Decoders sniff the PNG signature, otherwise expect "P5".
Bytes encode_png(const Raster<std::uint8_t>& img);
Bytes encode_png(const RgbaImage& img);
Bytes encode_pgm(const Raster<std::uint8_t>& img);
Raster<std::uint8_t> decode_gray8(std::span<const std::uint8_t> bytes);

/// `<dir>/<stem>.meta.json` for an image path.
fs::path sidecar_path(const fs::path& image_path);

ImageMeta parse_meta(const std::string& json_text);
std::string meta_to_json(const ImageMeta& meta);
std::optional<ImageMeta> load_sidecar(const fs::path& image_path);

/// Loads a grayscale frame; when a sidecar exists the pitch is hfw_um / width.
GrayImage load_gray(const fs::path& path, ImageMeta* meta_out = nullptr);

/// Writes PGM when the extension is `.pgm`, PNG otherwise.
void save_gray(const Raster<std::uint8_t>& img, const fs::path& path);

ClassMask load_mask(const fs::path& path);
void save_mask(const ClassMask& mask, const fs::path& path);
ClassMask decode_mask(std::span<const std::uint8_t> bytes);

void save_rgba(const RgbaImage& img, const fs::path& path);

/// Binary P5 with maxval 65535, big-endian samples.
Bytes encode_pgm16(const Raster<std::uint32_t>& ids);

}  // namespace mudseg
