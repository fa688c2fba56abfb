#include "spliceloc/mp3/frame_header.hpp"

#include <array>
#include <cstring>

#include "spliceloc/error.hpp"

namespace spliceloc::mp3 {
namespace {

constexpr std::array<std::array<int, 15>, 3> mpeg1_bitrates = {{
    {0, 32, 64, 96, 128, 160, 192, 224, 256, 288, 320, 352, 384, 416, 448},
    {0, 32, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320, 384},
    {0, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320},
}};

constexpr std::array<std::array<int, 15>, 3> mpeg2_bitrates = {{
    {0, 32, 48, 56, 64, 80, 96, 112, 128, 144, 160, 176, 192, 224, 256},
    {0, 8, 16, 24, 32, 40, 48, 56, 64, 80, 96, 112, 128, 144, 160},
    {0, 8, 16, 24, 32, 40, 48, 56, 64, 80, 96, 112, 128, 144, 160},
}};

constexpr std::array<std::array<int, 3>, 3> sampling_rates = {{
    {44100, 48000, 32000},
    {22050, 24000, 16000},
    {11025, 12000, 8000},
}};

bool compatible(const FrameHeader& a, const FrameHeader& b) {
    return a.version == b.version && a.layer == b.layer && a.sampling_rate == b.sampling_rate;
}

bool is_supported(const FrameHeader& h) {
    return h.version == MpegVersion::mpeg1 && h.layer == Layer::layer3;
}

std::size_t trailing_tag_start(std::span<const std::uint8_t> file) {
    if (file.size() >= 128 && std::memcmp(file.data() + file.size() - 128, "TAG", 3) == 0) {
        return file.size() - 128;
    }
    return file.size();
}

/// Offset of the Xing/Info marker inside a Layer III frame.
std::size_t xing_offset(const FrameHeader& h) {
    return h.side_info_offset() + h.side_info_bytes();
}

bool is_info_frame(std::span<const std::uint8_t> file, const FrameHeader& h) {
    const std::size_t base = h.byte_offset;
    const std::size_t xing = base + xing_offset(h);
    if (xing + 4 <= file.size()) {
        const auto* p = file.data() + xing;
        if (std::memcmp(p, "Xing", 4) == 0 || std::memcmp(p, "Info", 4) == 0) return true;
    }
    const std::size_t vbri = base + 36;
    return vbri + 4 <= file.size() && std::memcmp(file.data() + vbri, "VBRI", 4) == 0;
}

}  // namespace

std::string_view to_string(ChannelMode mode) noexcept {
    switch (mode) {
    case ChannelMode::stereo: return "stereo";
    case ChannelMode::joint_stereo: return "joint";
    case ChannelMode::dual_channel: return "dual";
    case ChannelMode::mono: return "mono";
    }
    return "unknown";
}

std::size_t FrameHeader::frame_bytes() const noexcept {
    const int pad = padding ? 1 : 0;
    const long bits_rate = static_cast<long>(bitrate_kbps) * 1000;
    switch (layer) {
    case Layer::layer1: return static_cast<std::size_t>((12 * bits_rate / sampling_rate + pad) * 4);
    case Layer::layer2: return static_cast<std::size_t>(144 * bits_rate / sampling_rate + pad);
    case Layer::layer3: {
        const long factor = version == MpegVersion::mpeg1 ? 144 : 72;
        return static_cast<std::size_t>(factor * bits_rate / sampling_rate + pad);
    }
    }
    return 0;
}

std::optional<FrameHeader> decode_header(std::span<const std::uint8_t> bytes, std::size_t offset) {
    if (bytes.size() < 4) return std::nullopt;
    const std::uint8_t b0 = bytes[0], b1 = bytes[1], b2 = bytes[2], b3 = bytes[3];
    if (b0 != 0xFF || (b1 & 0xE0) != 0xE0) return std::nullopt;

    FrameHeader h;
    h.byte_offset = offset;
    switch ((b1 >> 3) & 3) {
    case 0: h.version = MpegVersion::mpeg25; break;
    case 2: h.version = MpegVersion::mpeg2; break;
    case 3: h.version = MpegVersion::mpeg1; break;
    default: return std::nullopt;
    }
    switch ((b1 >> 1) & 3) {
    case 1: h.layer = Layer::layer3; break;
    case 2: h.layer = Layer::layer2; break;
    case 3: h.layer = Layer::layer1; break;
    default: return std::nullopt;
    }
    h.crc_protected = (b1 & 1) == 0;

    const int bitrate_index = b2 >> 4;
    const int rate_index = (b2 >> 2) & 3;
    if (bitrate_index == 0 || bitrate_index == 15 || rate_index == 3) return std::nullopt;
    const auto layer_row = static_cast<std::size_t>(h.layer);
    h.bitrate_kbps = h.version == MpegVersion::mpeg1 ? mpeg1_bitrates[layer_row][bitrate_index]
                                                      : mpeg2_bitrates[layer_row][bitrate_index];
    h.sampling_rate = sampling_rates[static_cast<std::size_t>(h.version)][rate_index];
    h.padding = (b2 & 2) != 0;
    h.channel_mode = static_cast<ChannelMode>(b3 >> 6);
    h.mode_extension = (b3 >> 4) & 3;
    if ((b3 & 3) == 2) return std::nullopt;  // reserved emphasis
    return h;
}

std::size_t id3v2_length(std::span<const std::uint8_t> file) noexcept {
    std::size_t pos = 0;
    while (pos + 10 <= file.size() && std::memcmp(file.data() + pos, "ID3", 3) == 0) {
        const auto* p = file.data() + pos;
        if ((p[6] | p[7] | p[8] | p[9]) & 0x80) break;  // size must be syncsafe
        const std::size_t size = (std::size_t{p[6]} << 21) | (std::size_t{p[7]} << 14) |
                                 (std::size_t{p[8]} << 7) | std::size_t{p[9]};
        const bool footer = (p[5] & 0x10) != 0;
        pos += 10 + size + (footer ? 10 : 0);
    }
    return pos < file.size() ? pos : file.size();
}

std::vector<FrameHeader> scan_frames(std::span<const std::uint8_t> file) {
    const std::size_t end = trailing_tag_start(file);
    std::size_t pos = id3v2_length(file);

    std::vector<FrameHeader> frames;
    std::optional<FrameHeader> locked;
    bool skipped = false;
    bool checked_info = false;

    auto header_at = [&](std::size_t at) -> std::optional<FrameHeader> {
        if (at + 4 > end) return std::nullopt;
        return decode_header(file.subspan(at, 4), at);
    };

    while (pos + 4 <= end) {
        auto h = header_at(pos);
        if (!h || (locked && !compatible(*h, *locked))) {
            ++pos;
            skipped = true;
            continue;
        }
        const std::size_t length = h->frame_bytes();
        if (length < 4 + h->side_info_bytes()) {
            ++pos;
            skipped = true;
            continue;
        }
        if (pos + length > end) {
            if (locked) break;  // truncated final frame
            ++pos;
            skipped = true;
            continue;
        }
        // Outside steady state a candidate must be confirmed by a compatible
        // successor (or end exactly at the end of the stream).
        if (!locked || skipped) {
            const std::size_t next = pos + length;
            if (next != end) {
                auto successor = header_at(next);
                if (!successor || !compatible(*successor, *h)) {
                    ++pos;
                    skipped = true;
                    continue;
                }
            }
        }
        if (!is_supported(*h)) {
            throw Error(Errc::unsupported_format, "stream is not MPEG-1 Layer III");
        }
        if (h->sampling_rate != required_sampling_rate) {
            throw Error(Errc::unsupported_format,
                        "sampling rate " + std::to_string(h->sampling_rate) + " Hz, expected 44100");
        }
        if (!checked_info) {
            checked_info = true;
            if (is_info_frame(file, *h)) {
                locked = h;
                skipped = false;
                pos += length;
                continue;
            }
        }
        h->follows_gap = skipped && locked.has_value();
        skipped = false;
        locked = h;
        frames.push_back(*h);
        pos += length;
    }

    if (frames.empty()) {
        throw Error(Errc::no_frames_found, "no MPEG audio frame sync found");
    }
    return frames;
}

std::optional<EncoderTag> read_encoder_tag(std::span<const std::uint8_t> file) {
    const std::size_t start = id3v2_length(file);
    std::optional<FrameHeader> h;
    for (std::size_t pos = start; pos + 4 <= file.size() && pos < start + 4096; ++pos) {
        h = decode_header(file.subspan(pos, 4), pos);
        if (h) break;
    }
    if (!h || h->layer != Layer::layer3) return std::nullopt;
    std::size_t p = h->byte_offset + xing_offset(*h);
    if (p + 8 > file.size()) return std::nullopt;
    const auto* x = file.data() + p;
    if (std::memcmp(x, "Xing", 4) != 0 && std::memcmp(x, "Info", 4) != 0) return std::nullopt;
    const std::uint32_t flags = (std::uint32_t{x[4]} << 24) | (std::uint32_t{x[5]} << 16) |
                                (std::uint32_t{x[6]} << 8) | std::uint32_t{x[7]};
    p += 8;
    if (flags & 1) p += 4;    // frame count
    if (flags & 2) p += 4;    // byte count
    if (flags & 4) p += 100;  // seek table
    if (flags & 8) p += 4;    // quality
    // LAME extension: 9-byte encoder id, then delay/padding 12 bits each at +21.
    if (p + 24 > file.size()) return std::nullopt;
    const auto* tag = file.data() + p;
    EncoderTag out;
    for (int i = 0; i < 9 && tag[i] >= 0x20 && tag[i] < 0x7F; ++i) {
        out.encoder.push_back(static_cast<char>(tag[i]));
    }
    if (out.encoder.empty()) return std::nullopt;
    const auto* d = tag + 21;
    out.delay_samples = (d[0] << 4) | (d[1] >> 4);
    out.padding_samples = ((d[1] & 0x0F) << 8) | d[2];
    return out;
}

}  // namespace spliceloc::mp3
