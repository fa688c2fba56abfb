#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace spliceloc::forge {

inline constexpr int sample_rate = 44100;
inline constexpr std::size_t samples_per_frame = 1152;

/// Interleaved 16-bit PCM.
struct PcmAudio {
    int rate = sample_rate;
    int channels = 2;
    std::vector<std::int16_t> samples;

    std::size_t length() const noexcept { return channels ? samples.size() / static_cast<std::size_t>(channels) : 0; }
    /// Sample frames [begin, begin + count) of every channel.
    PcmAudio slice(std::size_t begin, std::size_t count) const;
    void append(const PcmAudio& other);
};

/// Reads a canonical RIFF/WAVE file (extra chunks skipped). Throws IoError,
/// FormatError, or UnsupportedFormat for non-16-bit data.
PcmAudio read_wav(const std::string& path);
void write_wav(const std::string& path, const PcmAudio& audio);

}  // namespace spliceloc::forge
