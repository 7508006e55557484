#include "zip_archive.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "s2sg/error.hpp"

namespace s2sg {

namespace {

constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kLocalSig = 0x04034b50;

std::uint16_t rd16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t rd32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string inflate_raw(const std::uint8_t* data, std::size_t compressed_size,
                        std::size_t uncompressed_size, const std::string& part) {
    std::string out(uncompressed_size, '\0');
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
        throw format_error("zlib init failed reading " + part);
    }
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(compressed_size);
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(uncompressed_size);
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != uncompressed_size) {
        throw format_error("corrupt deflate stream in archive part " + part);
    }
    return out;
}

}  // namespace

ZipArchive ZipArchive::open(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open archive: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw io_error("cannot read archive: " + path);
    return from_bytes(std::move(bytes), path);
}

ZipArchive ZipArchive::from_bytes(std::vector<std::uint8_t> bytes, const std::string& label) {
    ZipArchive ar;
    ar.bytes_ = std::move(bytes);
    ar.label_ = label;
    ar.parse_central_directory();
    return ar;
}

void ZipArchive::parse_central_directory() {
    if (bytes_.size() < 22) throw format_error("not a zip archive: " + label_);

    // End-of-central-directory record: scan backwards past any comment.
    std::size_t eocd = std::string::npos;
    std::size_t scan_limit = bytes_.size() >= 22 + 65535 ? bytes_.size() - 22 - 65535 : 0;
    for (std::size_t pos = bytes_.size() - 22;; --pos) {
        if (rd32(&bytes_[pos]) == kEocdSig) {
            eocd = pos;
            break;
        }
        if (pos == scan_limit) break;
    }
    if (eocd == std::string::npos) throw format_error("not a zip archive: " + label_);

    std::uint16_t entry_count = rd16(&bytes_[eocd + 10]);
    std::uint32_t cd_size = rd32(&bytes_[eocd + 12]);
    std::uint32_t cd_offset = rd32(&bytes_[eocd + 16]);
    if (cd_offset == 0xffffffffu) {
        throw format_error("zip64 archives are not supported: " + label_);
    }
    if (static_cast<std::uint64_t>(cd_offset) + cd_size > bytes_.size()) {
        throw format_error("truncated central directory: " + label_);
    }

    std::size_t pos = cd_offset;
    for (std::uint16_t i = 0; i < entry_count; ++i) {
        if (pos + 46 > bytes_.size() || rd32(&bytes_[pos]) != kCentralSig) {
            throw format_error("corrupt central directory entry in " + label_);
        }
        Entry e;
        e.method = rd16(&bytes_[pos + 10]);
        e.crc32 = rd32(&bytes_[pos + 16]);
        e.compressed_size = rd32(&bytes_[pos + 20]);
        e.uncompressed_size = rd32(&bytes_[pos + 24]);
        std::uint16_t name_len = rd16(&bytes_[pos + 28]);
        std::uint16_t extra_len = rd16(&bytes_[pos + 30]);
        std::uint16_t comment_len = rd16(&bytes_[pos + 32]);
        e.local_header_offset = rd32(&bytes_[pos + 42]);
        if (pos + 46 + name_len > bytes_.size()) {
            throw format_error("corrupt central directory entry in " + label_);
        }
        std::string name(reinterpret_cast<const char*>(&bytes_[pos + 46]), name_len);
        entries_[name] = e;
        pos += 46 + name_len + extra_len + comment_len;
    }
}

bool ZipArchive::contains(const std::string& name) const {
    return entries_.find(name) != entries_.end();
}

std::vector<std::string> ZipArchive::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, entry] : entries_) out.push_back(name);
    return out;
}

std::string ZipArchive::read(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw format_error("archive part missing: " + name + " in " + label_);
    }
    const Entry& e = it->second;
    std::size_t pos = e.local_header_offset;
    if (pos + 30 > bytes_.size() || rd32(&bytes_[pos]) != kLocalSig) {
        throw format_error("corrupt local header for part " + name + " in " + label_);
    }
    // Name/extra lengths in the local header can differ from the central
    // directory's; trust the local ones for the data offset.
    std::uint16_t name_len = rd16(&bytes_[pos + 26]);
    std::uint16_t extra_len = rd16(&bytes_[pos + 28]);
    std::size_t data = pos + 30 + name_len + extra_len;
    if (data + e.compressed_size > bytes_.size()) {
        throw format_error("truncated data for part " + name + " in " + label_);
    }

    std::string content;
    if (e.method == 0) {
        if (e.compressed_size != e.uncompressed_size) {
            throw format_error("size mismatch for stored part " + name + " in " + label_);
        }
        content.assign(reinterpret_cast<const char*>(&bytes_[data]), e.compressed_size);
    } else if (e.method == 8) {
        content = inflate_raw(&bytes_[data], e.compressed_size, e.uncompressed_size, name);
    } else {
        throw format_error("unsupported compression method " + std::to_string(e.method) +
                           " for part " + name + " in " + label_);
    }

    std::uint32_t crc = ::crc32(0L, reinterpret_cast<const Bytef*>(content.data()),
                                static_cast<uInt>(content.size()));
    if (crc != e.crc32) {
        throw format_error("crc mismatch for part " + name + " in " + label_);
    }
    return content;
}

}  // namespace s2sg
