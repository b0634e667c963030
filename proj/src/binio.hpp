#pragma once

// Little-endian primitive readers/writers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace reid::binio {

template <typename U>
void put_uint(std::ostream& os, U value) {
    char buf[sizeof(U)];
    for (std::size_t b = 0; b < sizeof(U); ++b) buf[b] = static_cast<char>((value >> (8 * b)) & 0xFF);
    os.write(buf, sizeof(U));
}

template <typename U>
bool get_uint(std::istream& is, U& value) {
    unsigned char buf[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) return false;
    value = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(buf[b]) << (8 * b);
    return true;
}

inline void put_f32(std::ostream& os, float v) { put_uint(os, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& os, double v) { put_uint(os, std::bit_cast<std::uint64_t>(v)); }
inline void put_i64(std::ostream& os, std::int64_t v) { put_uint(os, static_cast<std::uint64_t>(v)); }

inline bool get_f32(std::istream& is, float& v) {
    std::uint32_t u;
    if (!get_uint(is, u)) return false;
    v = std::bit_cast<float>(u);
    return true;
}
inline bool get_f64(std::istream& is, double& v) {
    std::uint64_t u;
    if (!get_uint(is, u)) return false;
    v = std::bit_cast<double>(u);
    return true;
}
inline bool get_i64(std::istream& is, std::int64_t& v) {
    std::uint64_t u;
    if (!get_uint(is, u)) return false;
    v = static_cast<std::int64_t>(u);
    return true;
}

inline bool get_magic(std::istream& is, const char (&magic)[5]) {
    char buf[4];
    return is.read(buf, 4) && std::memcmp(buf, magic, 4) == 0;
}

}  // namespace reid::binio
