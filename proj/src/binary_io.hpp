#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

#include "kwb/errors.hpp"

namespace kwb::binary {

template <typename T>
T byteswap_if_big(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <typename T>
void put_le(std::string& out, T v) {
    v = byteswap_if_big(v);
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

inline void put_f32(std::string& out, double v) { put_le(out, static_cast<float>(v)); }

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    void expect_magic(const char* magic) {
        const std::size_t n = std::strlen(magic);
        if (bytes_.size() < n || bytes_.compare(0, n, magic) != 0) {
            throw FormatError(std::string("bad magic, expected ") + magic);
        }
        pos_ = n;
    }

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw FormatError("truncated binary file");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return byteswap_if_big(v);
    }

    double get_f32() { return static_cast<double>(get<float>()); }

    bool at_end() const { return pos_ == bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace kwb::binary
