#pragma once

#include <string>
#include <vector>

#include "mudseg/image_io.hpp"

namespace mudseg {

struct ArchiveEntry {
    std::string name;
    Bytes data;
};

/// POSIX ustar archive with regular-file entries, mode 0644 and mtime 0 so output is
/// reproducible. Names must fit the 100-byte name field.
Bytes write_tar(const std::vector<ArchiveEntry>& entries);

/// Reads regular-file entries back; throws FormatError on a bad header checksum.
std::vector<ArchiveEntry> read_tar(std::span<const std::uint8_t> bytes);

}  // namespace mudseg
