#include "mudseg/archive.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include "mudseg/error.hpp"

namespace mudseg {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
    // width - 1 digits, NUL terminated.
    std::string digits(width - 1, '0');
    for (std::size_t i = width - 1; i-- > 0 && value;) {
        digits[i] = static_cast<char>('0' + (value & 7));
        value >>= 3;
    }
    if (value) throw InvalidArgument("tar: value does not fit header field");
    std::memcpy(field, digits.data(), width - 1);
    field[width - 1] = 0;
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
        const auto c = field[i];
        if (c == 0 || c == ' ') {
            if (v || i) break;
            continue;
        }
        if (c < '0' || c > '7') throw FormatError("tar: bad octal field");
        v = (v << 3) | static_cast<std::uint64_t>(c - '0');
    }
    return v;
}

std::uint64_t header_checksum(const std::uint8_t* h) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
    return sum;
}

}  // namespace

Bytes write_tar(const std::vector<ArchiveEntry>& entries) {
    Bytes out;
    for (const auto& e : entries) {
        if (e.name.empty() || e.name.size() > 99) throw InvalidArgument("tar: entry name must be 1..99 bytes: " + e.name);
        std::array<std::uint8_t, kBlock> h{};
        std::memcpy(h.data(), e.name.data(), e.name.size());
        put_octal(h.data() + 100, 8, 0644);
        put_octal(h.data() + 108, 8, 0);
        put_octal(h.data() + 116, 8, 0);
        put_octal(h.data() + 124, 12, e.data.size());
        put_octal(h.data() + 136, 12, 0);
        h[156] = '0';
        std::memcpy(h.data() + 257, "ustar", 6);
        std::memcpy(h.data() + 263, "00", 2);
        const auto sum = header_checksum(h.data());
        put_octal(h.data() + 148, 7, sum);
        h[155] = ' ';
        out.insert(out.end(), h.begin(), h.end());
        out.insert(out.end(), e.data.begin(), e.data.end());
        out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
    }
    out.resize(out.size() + 2 * kBlock, 0);
    return out;
}

std::vector<ArchiveEntry> read_tar(std::span<const std::uint8_t> bytes) {
    std::vector<ArchiveEntry> entries;
    std::size_t pos = 0;
    while (pos + kBlock <= bytes.size()) {
        const std::uint8_t* h = bytes.data() + pos;
        if (std::all_of(h, h + kBlock, [](std::uint8_t b) { return b == 0; })) break;
        if (get_octal(h + 148, 8) != header_checksum(h)) throw FormatError("tar: header checksum mismatch");
        const auto size = get_octal(h + 124, 12);
        pos += kBlock;
        if (pos + size > bytes.size()) throw FormatError("tar: truncated entry");
        const char type = static_cast<char>(h[156]);
        if (type == '0' || type == 0) {
            const auto* name_end = std::find(h, h + 100, std::uint8_t{0});
            ArchiveEntry e;
            e.name.assign(reinterpret_cast<const char*>(h), reinterpret_cast<const char*>(name_end));
            e.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                          bytes.begin() + static_cast<std::ptrdiff_t>(pos + size));
            entries.push_back(std::move(e));
        }
        pos += (size + kBlock - 1) / kBlock * kBlock;
    }
    return entries;
}

}  // namespace mudseg
