#include "mudseg/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace mudseg {

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

struct PngReadState {
    std::span<const std::uint8_t> data;
    std::size_t offset = 0;
};

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_fn(png_structp png, png_bytep out, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->offset + len > st->data.size()) {
        png_error(png, "truncated PNG stream");
    }
    std::memcpy(out, st->data.data() + st->offset, len);
    st->offset += len;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_fn(png_structp) {}

bool is_png(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

Raster<std::uint8_t> decode_png(std::span<const std::uint8_t> bytes) {
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) throw FormatError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw FormatError("libpng initialisation failed");
    }
    PngReadState state{bytes, 0};
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("invalid PNG: " + err);
    }
    png_set_read_fn(png, &state, png_read_fn);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("unsupported PNG: need 8-bit grayscale without alpha (color type " +
                          std::to_string(color_type) + ", bit depth " + std::to_string(bit_depth) + ")");
    }
    pixels.resize(static_cast<std::size_t>(width) * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return Raster<std::uint8_t>(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

Bytes encode_png_rows(int width, int height, int color_type, int channels, const std::uint8_t* data) {
    std::string err;
    Bytes out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng initialisation failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(data + static_cast<std::size_t>(y) * static_cast<std::size_t>(width) * channels);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed: " + err);
    }
    png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void skip_pnm_space(std::span<const std::uint8_t> b, std::size_t& pos) {
    while (pos < b.size()) {
        if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else if (std::isspace(b[pos])) {
            ++pos;
        } else {
            break;
        }
    }
}

long read_pnm_int(std::span<const std::uint8_t> b, std::size_t& pos) {
    skip_pnm_space(b, pos);
    if (pos >= b.size() || !std::isdigit(b[pos])) throw FormatError("malformed PGM header");
    long v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        v = v * 10 + (b[pos] - '0');
        if (v > 1'000'000'000L) throw FormatError("PGM header value too large");
        ++pos;
    }
    return v;
}

Raster<std::uint8_t> decode_pgm(std::span<const std::uint8_t> b) {
    if (b.size() < 2 || b[0] != 'P' || b[1] != '5') {
        throw FormatError("unsupported image format (expected PNG or binary PGM P5)");
    }
    std::size_t pos = 2;
    const long w = read_pnm_int(b, pos);
    const long h = read_pnm_int(b, pos);
    const long maxval = read_pnm_int(b, pos);
    if (pos >= b.size() || !std::isspace(b[pos])) throw FormatError("malformed PGM header");
    ++pos;
    if (maxval != 255) {
        throw FormatError("unsupported PGM maxval " + std::to_string(maxval) + " (need 255)");
    }
    if (w < 1 || h < 1) throw FormatError("PGM has non-positive dimensions");
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (b.size() - pos < n) throw FormatError("truncated PGM payload");
    std::vector<std::uint8_t> px(b.begin() + static_cast<std::ptrdiff_t>(pos),
                                 b.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return Raster<std::uint8_t>(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

bool has_pgm_extension(const fs::path& p) {
    auto ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".pgm";
}

}  // namespace

Bytes encode_png(const Raster<std::uint8_t>& img) {
    return encode_png_rows(img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 1, img.samples().data());
}

Bytes encode_png(const RgbaImage& img) {
    if (img.width < 1 || img.height < 1 ||
        img.samples.size() != static_cast<std::size_t>(img.width) * img.height * 4) {
        throw InvalidArgument("RGBA buffer does not match its dimensions");
    }
    return encode_png_rows(img.width, img.height, PNG_COLOR_TYPE_RGBA, 4, img.samples.data());
}

Bytes encode_pgm(const Raster<std::uint8_t>& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    Bytes out(header.begin(), header.end());
    out.insert(out.end(), img.samples().begin(), img.samples().end());
    return out;
}

Bytes encode_pgm16(const Raster<std::uint32_t>& ids) {
    const std::string header =
        "P5\n" + std::to_string(ids.width()) + " " + std::to_string(ids.height()) + "\n65535\n";
    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + ids.size() * 2);
    for (auto v : ids.samples()) {
        if (v > 65535) throw InvalidArgument("label id " + std::to_string(v) + " exceeds 16-bit PGM range");
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

Raster<std::uint8_t> decode_gray8(std::span<const std::uint8_t> bytes) {
    return is_png(bytes) ? decode_png(bytes) : decode_pgm(bytes);
}

fs::path sidecar_path(const fs::path& image_path) {
    return image_path.parent_path() / (image_path.stem().string() + ".meta.json");
}

ImageMeta parse_meta(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw MetadataError(std::string("metadata is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MetadataError("metadata must be a JSON object");
    ImageMeta meta;
    try {
        if (!j.contains("hfw_um")) throw MetadataError("metadata missing hfw_um");
        if (!j.contains("magnification")) throw MetadataError("metadata missing magnification");
        if (!j["hfw_um"].is_number()) throw MetadataError("hfw_um must be a number");
        if (!j["magnification"].is_number_integer()) throw MetadataError("magnification must be an integer");
        meta.hfw_um = j["hfw_um"].get<double>();
        meta.magnification = j["magnification"].get<int>();
        if (j.contains("source_id")) {
            if (!j["source_id"].is_string()) throw MetadataError("source_id must be a string");
            meta.source_id = j["source_id"].get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw MetadataError(std::string("malformed metadata: ") + e.what());
    }
    meta.validate();
    return meta;
}

std::string meta_to_json(const ImageMeta& meta) {
    nlohmann::ordered_json j;
    j["source_id"] = meta.source_id;
    j["magnification"] = meta.magnification;
    j["hfw_um"] = meta.hfw_um;
    return j.dump(2) + "\n";
}

std::optional<ImageMeta> load_sidecar(const fs::path& image_path) {
    const auto side = sidecar_path(image_path);
    if (!fs::exists(side)) return std::nullopt;
    const auto bytes = read_file(side);
    ImageMeta meta = parse_meta(std::string(bytes.begin(), bytes.end()));
    if (meta.source_id.empty()) meta.source_id = image_path.stem().string();
    return meta;
}

GrayImage load_gray(const fs::path& path, ImageMeta* meta_out) {
    auto raster = decode_gray8(read_file(path));
    GrayImage img(raster.width(), raster.height(), std::vector<std::uint8_t>(raster.vector()));
    if (auto meta = load_sidecar(path)) {
        img.set_pitch(meta->hfw_um / img.width());
        if (meta_out) *meta_out = *meta;
    }
    return img;
}

void save_gray(const Raster<std::uint8_t>& img, const fs::path& path) {
    write_file(path, has_pgm_extension(path) ? encode_pgm(img) : encode_png(img));
}

ClassMask decode_mask(std::span<const std::uint8_t> bytes) {
    auto raster = decode_gray8(bytes);
    const int w = raster.width();
    const int h = raster.height();
    return ClassMask(w, h, std::vector<std::uint8_t>(raster.vector()));
}

ClassMask load_mask(const fs::path& path) {
    try {
        return decode_mask(read_file(path));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

void save_mask(const ClassMask& mask, const fs::path& path) {
    ClassMask::check_codes(mask.samples());
    save_gray(mask, path);
}

void save_rgba(const RgbaImage& img, const fs::path& path) { write_file(path, encode_png(img)); }

}  // namespace mudseg
