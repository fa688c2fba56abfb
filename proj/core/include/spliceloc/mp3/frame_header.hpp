#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spliceloc::mp3 {

inline constexpr int samples_per_frame = 1152;
inline constexpr int coefficients_per_granule = 576;
inline constexpr int required_sampling_rate = 44100;

enum class MpegVersion { mpeg1, mpeg2, mpeg25 };
enum class Layer { layer1, layer2, layer3 };
enum class ChannelMode { stereo, joint_stereo, dual_channel, mono };

std::string_view to_string(ChannelMode mode) noexcept;

struct FrameHeader {
    std::size_t byte_offset = 0;
    MpegVersion version = MpegVersion::mpeg1;
    Layer layer = Layer::layer3;
    int bitrate_kbps = 0;
    int sampling_rate = 0;
    bool padding = false;
    ChannelMode channel_mode = ChannelMode::stereo;
    int mode_extension = 0;
    bool crc_protected = false;
    /// Set when bytes had to be skipped to resynchronize before this frame.
    /// Windows and the bit reservoir must not span such a boundary.
    bool follows_gap = false;

    int channels() const noexcept { return channel_mode == ChannelMode::mono ? 1 : 2; }
    /// Whole frame length in bytes, header included.
    std::size_t frame_bytes() const noexcept;
    /// MPEG-1 side information length: 17 bytes mono, 32 otherwise.
    std::size_t side_info_bytes() const noexcept { return channels() == 1 ? 17 : 32; }
    /// Offset of the side information from the start of the frame.
    std::size_t side_info_offset() const noexcept { return crc_protected ? 6 : 4; }

    friend bool operator==(const FrameHeader&, const FrameHeader&) = default;
};

/// Decodes the 4 bytes at `bytes` as a frame header. Returns nullopt when the
/// sync word is absent or any field holds a reserved/free-format value.
std::optional<FrameHeader> decode_header(std::span<const std::uint8_t> bytes, std::size_t offset);

/// Encoder delay/padding advertised in a Xing/Info frame's LAME extension.
struct EncoderTag {
    std::string encoder;
    int delay_samples = 0;
    int padding_samples = 0;
};

/// Walks the file and returns all audio frame headers in order. Skips ID3v2
/// prefixes, a trailing ID3v1 tag, and a leading Xing/Info/VBRI frame;
/// resynchronizes past corrupt bytes, flagging the next frame with
/// `follows_gap`.
///
/// Throws NoFramesFound when no frame locks, UnsupportedFormat when the
/// locked stream is not MPEG-1 Layer III at 44.1 kHz.
std::vector<FrameHeader> scan_frames(std::span<const std::uint8_t> file);

/// Parses the LAME/Lavc extension of a leading Xing/Info frame, if any.
std::optional<EncoderTag> read_encoder_tag(std::span<const std::uint8_t> file);

/// Length of the ID3v2 tag(s) at the start of `file`, zero when absent.
std::size_t id3v2_length(std::span<const std::uint8_t> file) noexcept;

}  // namespace spliceloc::mp3
