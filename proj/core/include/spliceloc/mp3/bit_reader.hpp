#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "spliceloc/error.hpp"

namespace spliceloc::mp3 {

/// MSB-first bit cursor over a byte span. Reads past `limit_bits` throw
/// BitUnderflow; the cursor never touches memory outside the span.
class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes)
        : bytes_(bytes), limit_(bytes.size() * 8) {}

    BitReader(std::span<const std::uint8_t> bytes, std::size_t limit_bits)
        : bytes_(bytes), limit_(limit_bits < bytes.size() * 8 ? limit_bits : bytes.size() * 8) {}

    std::uint32_t read(unsigned count) {
        if (count == 0) return 0;
        if (pos_ + count > limit_) {
            throw Error(Errc::bit_underflow, "bitstream exhausted");
        }
        std::uint32_t value = 0;
        for (unsigned i = 0; i < count; ++i, ++pos_) {
            const unsigned bit = (bytes_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
            value = (value << 1) | bit;
        }
        return value;
    }

    bool read_bit() { return read(1) != 0; }

    void skip(std::size_t count) {
        if (pos_ + count > limit_) {
            throw Error(Errc::bit_underflow, "bitstream exhausted");
        }
        pos_ += count;
    }

    void seek(std::size_t bit_position) {
        if (bit_position > limit_) {
            throw Error(Errc::bit_underflow, "seek past end of bitstream");
        }
        pos_ = bit_position;
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t limit() const noexcept { return limit_; }
    std::size_t remaining() const noexcept { return limit_ - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

}  // namespace spliceloc::mp3
