#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spliceloc/features/windows.hpp"
#include "spliceloc/forge/plan.hpp"
#include "spliceloc/forge/tools.hpp"
#include "spliceloc/forge/wav.hpp"

namespace spliceloc::forge {

inline constexpr int decoder_delay = 529;
inline constexpr std::size_t frame_tolerance = 2;

/// Maps frames of the final encode onto the planned source frames.
/// Parsed frame f carries source frame f - frame_offset, where
/// frame_offset = round(stream_delay / 1152). Frames outside the plan take
/// the nearest planned label and are marked as extensions.
struct Reconciliation {
    int stream_delay = 0;
    int frame_offset = 0;
    std::size_t planned_frames = 0;
    std::size_t parsed_frames = 0;
    std::size_t extension_frames = 0;
    std::vector<std::uint8_t> frame_labels;
    std::vector<features::FrameProvenance> frame_provenance;
};

/// Throws FrameCountMismatch when the parsed count differs from the plan by
/// more than `frame_tolerance`.
Reconciliation reconcile(const std::vector<SlicePlan>& plans, std::size_t parsed_frames, int stream_delay);

struct ExecutionResult {
    std::vector<std::uint8_t> mp3;
    Reconciliation reconciliation;
};

/// Round trips every slice through chain[0..n-2] (encode, decode, trim back
/// to the slice's sample count), concatenates the slices and encodes them
/// once with the shared final compression. Temporary files go to `workdir`.
/// Throws EncoderFailure, LengthMismatch, FrameCountMismatch.
ExecutionResult execute_plan(const PcmAudio& segment, const std::vector<SlicePlan>& plans, const ToolConfig& tools,
                             const std::string& workdir);

/// One encode, returning the MP3 bytes. Throws EncoderFailure.
std::vector<std::uint8_t> encode(const PcmAudio& audio, const CompressionSpec& spec, const ToolConfig& tools,
                                 const std::string& workdir, const std::string& stem);

/// Encode + decode of `audio`, trimmed to the original length.
PcmAudio round_trip(const PcmAudio& audio, const CompressionSpec& spec, const ToolConfig& tools,
                    const std::string& workdir, const std::string& stem);

/// Samples the decoded stream leads the source by: the LAME tag's encoder
/// delay plus the decoder delay, else the configured per-encoder constant.
int stream_delay(const std::vector<std::uint8_t>& mp3, Encoder encoder, const ToolConfig& tools);

std::string digest(const std::vector<std::uint8_t>& bytes);

struct ManifestEntry {
    std::string segment_id;
    std::string source;
    std::size_t start_frame = 0;
    std::size_t frames = 0;
    std::uint64_t seed = 0;
    bool variable_slices = false;
    std::vector<SlicePlan> plans;
    LabelSequence labels;  // one per planned frame
    features::Split split = features::Split::none;
    std::string output;    // relative to the manifest's directory
    std::string output_digest;
    int stream_delay = 0;
    std::size_t parsed_frames = 0;
    std::size_t extension_frames = 0;
    std::vector<std::uint8_t> frame_labels;  // one per parsed frame
    std::map<std::string, std::string> tool_versions;

    std::string to_json() const;
    static ManifestEntry from_json(const std::string& line);
};

inline constexpr const char* manifest_schema = "spliceloc.manifest/1";

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
/// Throws IoError / FormatError.
std::vector<ManifestEntry> read_manifest(const std::string& path);

struct ForgeOptions {
    std::string sources_dir;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool variable_slices = false;
    unsigned jobs = 1;
    SplitFractions fractions;
    /// Caps the number of segments per source (0 = no cap).
    std::size_t max_segments_per_source = 0;
};

/// Forges every `*.wav` under `sources_dir` (sorted by name) into
/// `out_dir/segments/*.mp3` plus `out_dir/manifest.jsonl`. Throws
/// EmptyDataset when no segment could be produced. Segments whose final
/// frame count cannot be reconciled are dropped and listed in `rejected`.
std::vector<ManifestEntry> forge_corpus(const ForgeOptions& options, const ToolConfig& tools,
                                        std::vector<std::string>* rejected = nullptr);

/// Parses every forged MP3 of a manifest and attaches reconciled labels,
/// provenance, and the split.
std::vector<features::FrameSequence> extract_sequences(const std::string& manifest_path);

/// Deterministic synthetic program material: tones with vibrato, chords,
/// chirps, noise bursts, clicks and pauses.
PcmAudio synthesize_source(std::uint64_t seed, double seconds, int channels = 2);

}  // namespace spliceloc::forge
