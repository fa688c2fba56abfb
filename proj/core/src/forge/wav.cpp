#include "spliceloc/forge/wav.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "spliceloc/error.hpp"

namespace spliceloc::forge {
namespace {

std::uint32_t le32(const std::uint8_t* p) { return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24); }
std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::ostream& o, std::uint32_t v) {
    const char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
    o.write(b, 4);
}
void put16(std::ostream& o, std::uint16_t v) {
    const char b[2] = {char(v), char(v >> 8)};
    o.write(b, 2);
}

}  // namespace

PcmAudio PcmAudio::slice(std::size_t begin, std::size_t count) const {
    PcmAudio out{rate, channels, {}};
    const auto ch = static_cast<std::size_t>(channels);
    const std::size_t end = std::min(length(), begin + count);
    if (begin < end) out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin * ch),
                                        samples.begin() + static_cast<std::ptrdiff_t>(end * ch));
    return out;
}

void PcmAudio::append(const PcmAudio& other) {
    if (other.channels != channels || other.rate != rate)
        throw Error(Errc::format_error, "appending audio with a different layout");
    samples.insert(samples.end(), other.samples.begin(), other.samples.end());
}

PcmAudio read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    const std::vector<std::uint8_t> b{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
        throw Error(Errc::format_error, path + ": not a RIFF/WAVE file");

    PcmAudio out;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= b.size()) {
        const std::uint32_t size = le32(&b[pos + 4]);
        const std::size_t body = pos + 8;
        if (std::memcmp(&b[pos], "fmt ", 4) == 0) {
            if (size < 16 || body + 16 > b.size()) throw Error(Errc::format_error, path + ": short fmt chunk");
            const auto tag = le16(&b[body]);
            out.channels = le16(&b[body + 2]);
            out.rate = static_cast<int>(le32(&b[body + 4]));
            const auto bits = le16(&b[body + 14]);
            if ((tag != 1 && tag != 0xFFFE) || bits != 16 || out.channels < 1)
                throw Error(Errc::unsupported_format, path + ": only 16-bit linear PCM is supported");
            have_fmt = true;
        } else if (std::memcmp(&b[pos], "data", 4) == 0) {
            if (!have_fmt) throw Error(Errc::format_error, path + ": data before fmt");
            // ffmpeg writes 0xFFFFFFFF-sized data chunks when streaming
            const std::size_t n = std::min<std::size_t>(size, b.size() - body) / 2;
            out.samples.resize(n - n % static_cast<std::size_t>(out.channels));
            for (std::size_t i = 0; i < out.samples.size(); ++i)
                out.samples[i] = static_cast<std::int16_t>(le16(&b[body + 2 * i]));
            return out;
        }
        pos = body + size + (size & 1u);
    }
    throw Error(Errc::format_error, path + ": no data chunk");
}

void write_wav(const std::string& path, const PcmAudio& a) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw Error(Errc::io_error, "cannot write " + path);
    const auto data_bytes = static_cast<std::uint32_t>(a.samples.size() * 2);
    o.write("RIFF", 4);
    put32(o, 36 + data_bytes);
    o.write("WAVEfmt ", 8);
    put32(o, 16);
    put16(o, 1);
    put16(o, static_cast<std::uint16_t>(a.channels));
    put32(o, static_cast<std::uint32_t>(a.rate));
    put32(o, static_cast<std::uint32_t>(a.rate * a.channels * 2));
    put16(o, static_cast<std::uint16_t>(a.channels * 2));
    put16(o, 16);
    o.write("data", 4);
    put32(o, data_bytes);
    for (auto s : a.samples) put16(o, static_cast<std::uint16_t>(s));
    if (!o) throw Error(Errc::io_error, "short write to " + path);
}

}  // namespace spliceloc::forge
