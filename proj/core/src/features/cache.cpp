#include "spliceloc/features/cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "spliceloc/error.hpp"

namespace spliceloc::features {
namespace {

static_assert(std::endian::native == std::endian::little, "cache I/O assumes a little-endian host");

constexpr char magic[8] = {'S', 'P', 'L', 'C', 'F', 'E', 'A', 'T'};

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(Errc::io_error, "feature cache is truncated");
    return v;
}

}  // namespace

void write_cache(const std::string& path, std::span<const FrameSequence> sequences) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    out.write(magic, sizeof magic);
    put<std::uint32_t>(out, cache_version);
    put<std::uint32_t>(out, mdct_size);
    put<std::uint32_t>(out, scalefac_size);
    put<std::uint32_t>(out, n_scalars);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(sequences.size()));
    for (const auto& seq : sequences) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(seq.source_id.size()));
        out.write(seq.source_id.data(), static_cast<std::streamsize>(seq.source_id.size()));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(seq.split));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(seq.frames.size()));
        for (const auto& f : seq.frames) {
            const auto flags = static_cast<std::uint8_t>((f.usable ? 1 : 0) | (f.follows_gap ? 2 : 0) |
                                                         (f.provenance.extension ? 4 : 0));
            put(out, flags);
            put(out, f.label);
            put(out, f.provenance.n_compressions);
            put(out, f.provenance.last_type);
            out.write(reinterpret_cast<const char*>(f.features.mdct.data()), sizeof f.features.mdct);
            out.write(reinterpret_cast<const char*>(f.features.scalefac.data()), sizeof f.features.scalefac);
            out.write(reinterpret_cast<const char*>(f.features.scalars.data()), sizeof f.features.scalars);
        }
    }
    if (!out) throw Error(Errc::io_error, "failed writing " + path);
}

std::vector<FrameSequence> read_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    char m[8];
    if (!in.read(m, sizeof m) || std::memcmp(m, magic, sizeof m) != 0)
        throw Error(Errc::format_error, path + " is not a feature cache");
    if (get<std::uint32_t>(in) != cache_version) throw Error(Errc::format_error, "unsupported feature cache version");
    if (get<std::uint32_t>(in) != mdct_size || get<std::uint32_t>(in) != scalefac_size ||
        get<std::uint32_t>(in) != n_scalars)
        throw Error(Errc::format_error, "feature cache layout does not match this build");

    std::vector<FrameSequence> out(get<std::uint32_t>(in));
    for (auto& seq : out) {
        seq.source_id.resize(get<std::uint32_t>(in));
        if (!in.read(seq.source_id.data(), static_cast<std::streamsize>(seq.source_id.size())))
            throw Error(Errc::io_error, "feature cache is truncated");
        seq.split = static_cast<Split>(get<std::uint8_t>(in));
        seq.frames.resize(get<std::uint32_t>(in));
        for (auto& f : seq.frames) {
            const auto flags = get<std::uint8_t>(in);
            f.usable = flags & 1;
            f.follows_gap = flags & 2;
            f.provenance.extension = flags & 4;
            f.label = get<std::uint8_t>(in);
            f.provenance.n_compressions = get<std::uint8_t>(in);
            f.provenance.last_type = get<std::uint8_t>(in);
            const bool ok = in.read(reinterpret_cast<char*>(f.features.mdct.data()), sizeof f.features.mdct) &&
                            in.read(reinterpret_cast<char*>(f.features.scalefac.data()), sizeof f.features.scalefac) &&
                            in.read(reinterpret_cast<char*>(f.features.scalars.data()), sizeof f.features.scalars);
            if (!ok) throw Error(Errc::io_error, "feature cache is truncated");
        }
    }
    return out;
}

}  // namespace spliceloc::features
