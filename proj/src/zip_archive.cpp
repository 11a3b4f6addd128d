#include "iab/zip_archive.hpp"

#include <cstring>

#include <zlib.h>

#include "iab/common.hpp"

namespace iab {

namespace {

std::uint32_t rd32(const std::string& b, size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24);
}

std::uint16_t rd16(const std::string& b, size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                      (static_cast<unsigned char>(b[off + 1]) << 8));
}

std::string inflate_raw(const char* data, size_t csize, size_t usize) {
    std::string out(usize, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw IoError("zip: inflateInit2 failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data));
    zs.avail_in = static_cast<uInt>(csize);
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(usize);
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw IoError("zip: inflate failed");
    if (zs.total_out != usize) throw IoError("zip: uncompressed size mismatch");
    return out;
}

} // namespace

bool looks_like_zip(const std::string& bytes) {
    return bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' && bytes[2] == '\x03' &&
           bytes[3] == '\x04';
}

std::optional<std::string> unzip_first_entry(const std::string& bytes) {
    if (!looks_like_zip(bytes)) return std::nullopt;

    // Locate the end-of-central-directory record, then the first central
    // entry; local headers alone are unreliable when writers emit data
    // descriptors.
    const std::string eocd_sig = "PK\x05\x06";
    size_t scan_start = bytes.size() > 65557 ? bytes.size() - 65557 : 0;
    size_t eocd = bytes.rfind(eocd_sig);
    if (eocd == std::string::npos || eocd < scan_start || eocd + 22 > bytes.size())
        return std::nullopt;

    std::uint16_t total_entries = rd16(bytes, eocd + 10);
    std::uint32_t cd_offset = rd32(bytes, eocd + 16);
    if (total_entries == 0 || cd_offset + 46 > bytes.size()) return std::nullopt;

    const std::string central_sig = "PK\x01\x02";
    if (bytes.compare(cd_offset, 4, central_sig) != 0) return std::nullopt;

    std::uint16_t method = rd16(bytes, cd_offset + 10);
    std::uint32_t crc = rd32(bytes, cd_offset + 16);
    std::uint32_t csize = rd32(bytes, cd_offset + 20);
    std::uint32_t usize = rd32(bytes, cd_offset + 24);
    std::uint32_t local_off = rd32(bytes, cd_offset + 42);

    if (local_off + 30 > bytes.size()) return std::nullopt;
    const std::string local_sig = "PK\x03\x04";
    if (bytes.compare(local_off, 4, local_sig) != 0) return std::nullopt;

    std::uint16_t name_len = rd16(bytes, local_off + 26);
    std::uint16_t extra_len = rd16(bytes, local_off + 28);
    size_t data_off = local_off + 30 + name_len + extra_len;
    if (data_off + csize > bytes.size()) return std::nullopt;

    std::string content;
    if (method == 0) {
        content = bytes.substr(data_off, csize);
    } else if (method == 8) {
        content = inflate_raw(bytes.data() + data_off, csize, usize);
    } else {
        throw IoError("zip: unsupported compression method " + std::to_string(method));
    }

    std::uint32_t actual_crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(content.data()), static_cast<uInt>(content.size())));
    if (actual_crc != crc) throw IoError("zip: CRC mismatch");
    return content;
}

} // namespace iab
