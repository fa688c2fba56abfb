#include "spliceloc/mp3/codec_record.hpp"

#include <fstream>
#include <iterator>

#include "spliceloc/mp3/bit_reader.hpp"
#include "spliceloc/mp3/huffman.hpp"
#include "spliceloc/mp3/requantize.hpp"

namespace spliceloc::mp3 {
namespace {

// Largest main_data_begin (9 bits) plus one maximal frame payload.
constexpr std::size_t reservoir_keep = 511;

class ReservoirDecoder {
public:
    explicit ReservoirDecoder(std::span<const std::uint8_t> file) : file_(file) {}

    ParsedFrame decode(const FrameHeader& header, std::size_t index) {
        ParsedFrame out;
        out.header = header;
        if (header.follows_gap) reservoir_.clear();

        const auto frame = file_.subspan(header.byte_offset, header.frame_bytes());
        SideInfo side;
        try {
            side = parse_side_info(frame, header);
        } catch (const Error& e) {
            // Main data of a frame with unreadable side info cannot be trusted.
            reservoir_.clear();
            return fail(std::move(out), e);
        }

        const std::size_t payload_start = header.side_info_offset() + header.side_info_bytes();
        const auto payload = frame.subspan(payload_start);
        const auto backpointer = static_cast<std::size_t>(side.main_data_begin);

        if (backpointer > reservoir_.size()) {
            append(payload);
            out.failure = Errc::reservoir_underflow;
            out.message = "main_data_begin " + std::to_string(backpointer) + " exceeds " +
                          std::to_string(reservoir_.size()) + " reservoir bytes";
            return out;
        }

        std::vector<std::uint8_t> main_data(reservoir_.end() - static_cast<std::ptrdiff_t>(backpointer),
                                            reservoir_.end());
        main_data.insert(main_data.end(), payload.begin(), payload.end());
        append(payload);

        try {
            BitReader bits(main_data);
            const std::size_t end = static_cast<std::size_t>(side.part2_3_length);
            if (end > bits.limit()) throw Error(Errc::bit_underflow, "part2_3_length exceeds main data");
            CodecFrameRecord record;
            record.frame_index = index;
            record.header = header;
            record.side = side;
            record.scalefactors = decode_scalefactors(bits, side);
            const auto spectrum = huffman_decode(bits, side, end);
            record.mdct.quantized = spectrum.values;
            const auto values = requantize(spectrum.values, side, record.scalefactors);
            for (std::size_t i = 0; i < values.size(); ++i) {
                record.mdct.requantized[i] = static_cast<float>(values[i]);
            }
            out.record = std::move(record);
        } catch (const Error& e) {
            return fail(std::move(out), e);
        }
        return out;
    }

private:
    static ParsedFrame fail(ParsedFrame out, const Error& e) {
        out.failure = e.code();
        out.message = e.what();
        return out;
    }

    void append(std::span<const std::uint8_t> payload) {
        reservoir_.insert(reservoir_.end(), payload.begin(), payload.end());
        if (reservoir_.size() > reservoir_keep) {
            reservoir_.erase(reservoir_.begin(),
                             reservoir_.end() - static_cast<std::ptrdiff_t>(reservoir_keep));
        }
    }

    std::span<const std::uint8_t> file_;
    std::vector<std::uint8_t> reservoir_;
};

}  // namespace

std::vector<ParsedFrame> parse_stream(std::span<const std::uint8_t> file) {
    const auto headers = scan_frames(file);
    ReservoirDecoder decoder(file);
    std::vector<ParsedFrame> frames;
    frames.reserve(headers.size());
    for (std::size_t i = 0; i < headers.size(); ++i) frames.push_back(decoder.decode(headers[i], i));
    return frames;
}

CodecFrameRecord extract_codec_record(std::span<const std::uint8_t> file, std::size_t frame_index) {
    const auto headers = scan_frames(file);
    if (frame_index >= headers.size()) {
        throw Error(Errc::invalid_argument, "frame index " + std::to_string(frame_index) + " out of range (" +
                                                std::to_string(headers.size()) + " frames)");
    }
    ReservoirDecoder decoder(file);
    ParsedFrame parsed;
    for (std::size_t i = 0; i <= frame_index; ++i) parsed = decoder.decode(headers[i], i);
    if (!parsed.record) throw Error(*parsed.failure, parsed.message);
    return std::move(*parsed.record);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace spliceloc::mp3
