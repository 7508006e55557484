#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace s2sg {

// Read-only view of a zip archive loaded fully into memory. Supports the
// stored and deflate methods, which covers every deck writer in practice.
// Entry reads are const and safe to issue from multiple threads.
class ZipArchive {
  public:
    static ZipArchive open(const std::string& path);
    static ZipArchive from_bytes(std::vector<std::uint8_t> bytes, const std::string& label);

    bool contains(const std::string& name) const;
    std::vector<std::string> names() const;

    // Decompresses the named entry. Throws Error{format} naming the part
    // when the entry is missing or corrupt.
    std::string read(const std::string& name) const;

  private:
    struct Entry {
        std::uint16_t method = 0;
        std::uint32_t crc32 = 0;
        std::uint64_t compressed_size = 0;
        std::uint64_t uncompressed_size = 0;
        std::uint64_t local_header_offset = 0;
    };

    std::vector<std::uint8_t> bytes_;
    std::string label_;
    std::unordered_map<std::string, Entry> entries_;

    void parse_central_directory();
};

}  // namespace s2sg
