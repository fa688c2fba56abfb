#include "spliceloc/forge/forge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "json.hpp"
#include "spliceloc/error.hpp"
#include "spliceloc/mp3/codec_record.hpp"
#include "spliceloc/mp3/frame_header.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace spliceloc::forge {
namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void run_checked(const std::vector<std::string>& argv, const std::string& what) {
    const auto r = run_command(argv);
    if (r.exit_code != 0)
        throw Error(Errc::encoder_failure, what + " failed (exit " + std::to_string(r.exit_code) + "): " + r.output);
}

json spec_json(const CompressionSpec& s) {
    return {{"mode", s.mode == RateMode::cbr ? "CBR" : "VBR"}, {"value", s.value}, {"encoder", to_string(s.encoder)},
            {"type", type_name(s.type_code())}};
}

CompressionSpec spec_from(const json& j) {
    CompressionSpec s;
    s.mode = j.at("mode").get<std::string>() == "CBR" ? RateMode::cbr : RateMode::vbr;
    s.value = j.at("value").get<int>();
    s.encoder = j.at("encoder").get<std::string>() == "encoderB" ? Encoder::b : Encoder::a;
    (void)s.type_code();
    return s;
}

std::string split_name(features::Split s) {
    switch (s) {
    case features::Split::train: return "train";
    case features::Split::val: return "val";
    case features::Split::test: return "test";
    default: return "none";
    }
}

features::Split split_from(const std::string& s) {
    if (s == "train") return features::Split::train;
    if (s == "val") return features::Split::val;
    if (s == "test") return features::Split::test;
    return features::Split::none;
}

std::string bits_string(const std::vector<std::uint8_t>& v) {
    std::string s(v.size(), '0');
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] ? '1' : '0';
    return s;
}

std::vector<std::uint8_t> bits_from(const std::string& s) {
    std::vector<std::uint8_t> v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') throw Error(Errc::format_error, "label strings hold only 0 and 1");
        v[i] = s[i] == '1';
    }
    return v;
}

}  // namespace

Reconciliation reconcile(const std::vector<SlicePlan>& plans, std::size_t parsed_frames, int delay) {
    Reconciliation r;
    const auto labels = labels_from_plans(plans).y;
    const auto prov = provenance_from_plans(plans);
    r.stream_delay = delay;
    r.frame_offset = static_cast<int>(std::lround(static_cast<double>(delay) / static_cast<double>(samples_per_frame)));
    r.planned_frames = labels.size();
    r.parsed_frames = parsed_frames;
    const auto diff = parsed_frames > r.planned_frames ? parsed_frames - r.planned_frames : r.planned_frames - parsed_frames;
    if (r.planned_frames == 0 || diff > frame_tolerance)
        throw Error(Errc::frame_count_mismatch, "final encode has " + std::to_string(parsed_frames) + " frames for " +
                                                    std::to_string(r.planned_frames) + " planned");
    for (std::size_t f = 0; f < parsed_frames; ++f) {
        const auto src = static_cast<long long>(f) - r.frame_offset;
        const auto clamped = static_cast<std::size_t>(std::clamp<long long>(src, 0, static_cast<long long>(r.planned_frames) - 1));
        auto p = prov[clamped];
        p.extension = src != static_cast<long long>(clamped);
        r.extension_frames += p.extension ? 1 : 0;
        r.frame_labels.push_back(labels[clamped]);
        r.frame_provenance.push_back(p);
    }
    return r;
}

std::vector<std::uint8_t> encode(const PcmAudio& audio, const CompressionSpec& spec, const ToolConfig& tools,
                                 const std::string& workdir, const std::string& stem) {
    const auto wav = (fs::path(workdir) / (stem + ".wav")).string();
    const auto mp3 = (fs::path(workdir) / (stem + ".mp3")).string();
    write_wav(wav, audio);
    run_checked(tools.encode_command(spec, wav, mp3), "encode " + spec.name());
    std::vector<std::uint8_t> bytes;
    try {
        bytes = mp3::read_file(mp3);
    } catch (const Error&) {
        throw Error(Errc::encoder_failure, "encoder produced no output for " + spec.name());
    }
    fs::remove(wav);
    fs::remove(mp3);
    if (bytes.empty()) throw Error(Errc::encoder_failure, "encoder produced an empty file for " + spec.name());
    return bytes;
}

int stream_delay(const std::vector<std::uint8_t>& mp3, Encoder encoder, const ToolConfig& tools) {
    if (const auto tag = mp3::read_encoder_tag(mp3)) return tag->delay_samples + decoder_delay;
    return tools.delay(encoder);
}

PcmAudio round_trip(const PcmAudio& audio, const CompressionSpec& spec, const ToolConfig& tools,
                    const std::string& workdir, const std::string& stem) {
    const auto bytes = encode(audio, spec, tools, workdir, stem);
    const auto mp3 = (fs::path(workdir) / (stem + ".rt.mp3")).string();
    const auto wav = (fs::path(workdir) / (stem + ".rt.wav")).string();
    {
        std::ofstream o(mp3, std::ios::binary);
        o.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    run_checked(tools.decode_command(mp3, wav), "decode");
    PcmAudio decoded = read_wav(wav);
    fs::remove(mp3);
    fs::remove(wav);
    if (decoded.channels != audio.channels)
        throw Error(Errc::length_mismatch, "decoder changed the channel count");
    // a decoder honouring gapless metadata already removed the lead
    const std::size_t lead = mp3::read_encoder_tag(bytes) ? 0 : static_cast<std::size_t>(tools.delay(spec.encoder));
    if (decoded.length() < lead + audio.length())
        throw Error(Errc::length_mismatch, "decoded " + std::to_string(decoded.length()) + " samples, need " +
                                               std::to_string(lead + audio.length()));
    return decoded.slice(lead, audio.length());
}

ExecutionResult execute_plan(const PcmAudio& segment, const std::vector<SlicePlan>& plans, const ToolConfig& tools,
                             const std::string& workdir) {
    if (plans.empty()) throw Error(Errc::invalid_argument, "empty plan");
    fs::create_directories(workdir);
    PcmAudio assembled{segment.rate, segment.channels, {}};
    for (const auto& p : plans) {
        PcmAudio audio = segment.slice(p.start * samples_per_frame, p.length * samples_per_frame);
        if (audio.length() != p.length * samples_per_frame)
            throw Error(Errc::length_mismatch, "segment audio shorter than its plan");
        for (std::size_t k = 0; k + 1 < p.chain.size(); ++k)
            audio = round_trip(audio, p.chain[k], tools, workdir, "slice" + std::to_string(p.slice_index) + "_" + std::to_string(k));
        assembled.append(audio);
    }
    const auto& final_spec = plans.front().chain.back();
    ExecutionResult out;
    out.mp3 = encode(assembled, final_spec, tools, workdir, "final");
    const auto parsed = mp3::parse_stream(out.mp3);
    out.reconciliation = reconcile(plans, parsed.size(), stream_delay(out.mp3, final_spec.encoder, tools));
    return out;
}

std::string digest(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (auto b : bytes) h = (h ^ b) * 0x100000001b3ull;
    char buf[24];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ManifestEntry::to_json() const {
    json plans_json = json::array();
    for (const auto& p : plans) {
        json chain = json::array();
        for (const auto& s : p.chain) chain.push_back(spec_json(s));
        plans_json.push_back({{"slice_index", p.slice_index}, {"start", p.start}, {"length", p.length},
                              {"n_compressions", p.n_compressions()}, {"chain", chain}});
    }
    json j = {{"schema", manifest_schema},
              {"segment_id", segment_id},
              {"source", source},
              {"start_frame", start_frame},
              {"frames", frames},
              {"seed", seed},
              {"variable_slices", variable_slices},
              {"slices", plans_json},
              {"labels", bits_string(labels.y)},
              {"split", split_name(split)},
              {"output", output},
              {"output_digest", output_digest},
              {"stream_delay", stream_delay},
              {"parsed_frames", parsed_frames},
              {"extension_frames", extension_frames},
              {"frame_labels", bits_string(frame_labels)},
              {"tool_versions", tool_versions}};
    return j.dump();
}

ManifestEntry ManifestEntry::from_json(const std::string& line) {
    try {
        const auto j = json::parse(line);
        if (j.at("schema") != manifest_schema) throw Error(Errc::format_error, "unknown manifest schema");
        ManifestEntry e;
        e.segment_id = j.at("segment_id");
        e.source = j.at("source");
        e.start_frame = j.at("start_frame");
        e.frames = j.at("frames");
        e.seed = j.at("seed");
        e.variable_slices = j.at("variable_slices");
        for (const auto& p : j.at("slices")) {
            SlicePlan s;
            s.slice_index = p.at("slice_index");
            s.start = p.at("start");
            s.length = p.at("length");
            for (const auto& c : p.at("chain")) s.chain.push_back(spec_from(c));
            e.plans.push_back(std::move(s));
        }
        e.labels.y = bits_from(j.at("labels"));
        e.split = split_from(j.at("split"));
        e.output = j.at("output");
        e.output_digest = j.at("output_digest");
        e.stream_delay = j.at("stream_delay");
        e.parsed_frames = j.at("parsed_frames");
        e.extension_frames = j.at("extension_frames");
        e.frame_labels = bits_from(j.at("frame_labels"));
        e.tool_versions = j.at("tool_versions").get<std::map<std::string, std::string>>();
        return e;
    } catch (const json::exception& ex) {
        throw Error(Errc::format_error, std::string("bad manifest line: ") + ex.what());
    }
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream o(path);
    if (!o) throw Error(Errc::io_error, "cannot write " + path);
    for (const auto& e : entries) o << e.to_json() << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::vector<ManifestEntry> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(ManifestEntry::from_json(line));
    return out;
}

std::vector<ManifestEntry> forge_corpus(const ForgeOptions& opt, const ToolConfig& tools,
                                        std::vector<std::string>* rejected) {
    std::vector<fs::path> sources;
    for (const auto& de : fs::directory_iterator(opt.sources_dir))
        if (de.is_regular_file() && de.path().extension() == ".wav") sources.push_back(de.path());
    std::sort(sources.begin(), sources.end());

    const auto versions = probe_versions(tools);
    const fs::path out_dir(opt.out_dir);
    fs::create_directories(out_dir / "segments");

    struct Job {
        std::size_t source;  // index into `audio`
        std::string path;
        Segment segment;
        std::uint64_t seed;
        std::string id;
    };
    std::vector<PcmAudio> audio;
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        PcmAudio a = read_wav(sources[s].string());
        if (a.rate != sample_rate) throw Error(Errc::unsupported_format, sources[s].string() + ": sample rate must be 44100 Hz");
        std::mt19937_64 rng(mix(opt.seed, s));
        std::vector<Segment> segs;
        try {
            segs = segment_source(a.length(), rng);
        } catch (const Error& e) {
            if (e.code() != Errc::source_too_short) throw;
            continue;
        }
        if (opt.max_segments_per_source && segs.size() > opt.max_segments_per_source) segs.resize(opt.max_segments_per_source);
        for (std::size_t k = 0; k < segs.size(); ++k) {
            char id[64];
            std::snprintf(id, sizeof id, "%s_%03zu", sources[s].stem().string().c_str(), k);
            jobs.push_back({audio.size(), sources[s].filename().string(), segs[k], mix(mix(opt.seed, s), 1000 + k), id});
        }
        audio.push_back(std::move(a));
    }
    if (jobs.empty()) throw Error(Errc::empty_dataset, "no source yields a segment of at least 80 frames");

    std::vector<ManifestEntry> entries(jobs.size());
    std::vector<std::string> failures(jobs.size());
    std::vector<char> mismatched(jobs.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < jobs.size();) {
            const auto& job = jobs[i];
            try {
                std::mt19937_64 rng(job.seed);
                auto plans = plan_segment(job.segment.frames, rng, opt.variable_slices);
                const auto seg_audio = audio[job.source].slice(job.segment.start_frame * samples_per_frame,
                                                               job.segment.frames * samples_per_frame);
                const auto work = (out_dir / "work" / job.id).string();
                auto result = execute_plan(seg_audio, plans, tools, work);
                fs::remove_all(work);
                auto& e = entries[i];
                e.segment_id = job.id;
                e.source = job.path;
                e.start_frame = job.segment.start_frame;
                e.frames = job.segment.frames;
                e.seed = job.seed;
                e.variable_slices = opt.variable_slices;
                e.labels = labels_from_plans(plans);
                e.plans = std::move(plans);
                e.output = "segments/" + job.id + ".mp3";
                e.output_digest = digest(result.mp3);
                e.stream_delay = result.reconciliation.stream_delay;
                e.parsed_frames = result.reconciliation.parsed_frames;
                e.extension_frames = result.reconciliation.extension_frames;
                e.frame_labels = result.reconciliation.frame_labels;
                e.tool_versions = versions;
                std::ofstream o(out_dir / e.output, std::ios::binary);
                o.write(reinterpret_cast<const char*>(result.mp3.data()), static_cast<std::streamsize>(result.mp3.size()));
            } catch (const Error& ex) {
                failures[i] = ex.what();
                mismatched[i] = ex.code() == Errc::frame_count_mismatch;
            } catch (const std::exception& ex) {
                failures[i] = ex.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::max(1u, opt.jobs); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    // a segment whose frame count cannot be reconciled is left out; anything
    // else means the toolchain is broken
    std::vector<ManifestEntry> kept;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (failures[i].empty()) {
            kept.push_back(std::move(entries[i]));
            continue;
        }
        if (!mismatched[i]) throw Error(Errc::encoder_failure, jobs[i].id + ": " + failures[i]);
        if (rejected) rejected->push_back(jobs[i].id + ": " + failures[i]);
    }
    entries = std::move(kept);
    fs::remove_all(out_dir / "work");
    if (entries.empty()) throw Error(Errc::empty_dataset, "no segment survived reconciliation");

    std::vector<std::size_t> weights;
    for (const auto& e : entries) weights.push_back(window_count(e.frames));
    std::mt19937_64 split_rng(mix(opt.seed, 0x5B1177ull));
    const auto splits = partition(weights, split_rng, opt.fractions);
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].split = splits[i];
    write_manifest((out_dir / "manifest.jsonl").string(), entries);
    return entries;
}

std::vector<features::FrameSequence> extract_sequences(const std::string& manifest_path) {
    const auto entries = read_manifest(manifest_path);
    const auto dir = fs::path(manifest_path).parent_path();
    std::vector<features::FrameSequence> out;
    for (const auto& e : entries) {
        const auto bytes = mp3::read_file((dir / e.output).string());
        const auto frames = mp3::parse_stream(bytes);
        const auto rec = reconcile(e.plans, frames.size(), e.stream_delay);
        LabelSequence labels{rec.frame_labels};
        auto seq = features::sequence_from_stream(e.segment_id, frames, &labels);
        seq.split = e.split;
        for (std::size_t f = 0; f < seq.frames.size(); ++f) seq.frames[f].provenance = rec.frame_provenance[f];
        out.push_back(std::move(seq));
    }
    return out;
}

PcmAudio synthesize_source(std::uint64_t seed, double seconds, int channels) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd;
    const auto n = static_cast<std::size_t>(seconds * sample_rate);
    std::vector<double> mono(n, 0.0), side(n, 0.0);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    // a sequence of events of 0.2 - 1.5 s, each a different kind of material
    for (std::size_t at = 0; at < n;) {
        const auto len = std::min(n - at, static_cast<std::size_t>((0.2 + 1.3 * u(rng)) * sample_rate));
        const int kind = static_cast<int>(u(rng) * 6);
        const double amp = 0.05 + 0.3 * u(rng);
        const double f0 = 80.0 * std::pow(2.0, 5.0 * u(rng));
        const double vib = 3.0 + 4.0 * u(rng), depth = 0.01 * u(rng);
        const double f1 = 100.0 + 8000.0 * u(rng);
        const int harmonics = 1 + static_cast<int>(u(rng) * 8);
        const double pan = u(rng) - 0.5;
        double phase = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double t = static_cast<double>(i) / sample_rate;
            const double env = std::min(1.0, t * 50.0) * std::min(1.0, (static_cast<double>(len - i) / sample_rate) * 20.0);
            double x = 0.0;
            switch (kind) {
            case 0:  // harmonic tone with vibrato
                phase += two_pi * f0 * (1.0 + depth * std::sin(two_pi * vib * t)) / sample_rate;
                for (int h = 1; h <= harmonics; ++h) x += std::sin(h * phase) / h;
                break;
            case 1:  // chord
                for (double r : {1.0, 1.25, 1.5, 2.0}) x += 0.3 * std::sin(two_pi * f0 * r * t);
                break;
            case 2:  // chirp
                phase += two_pi * (f0 + (f1 - f0) * t / (static_cast<double>(len) / sample_rate)) / sample_rate;
                x = std::sin(phase);
                break;
            case 3:  // noise burst, crudely coloured
                x = nd(rng) * (0.5 + 0.5 * std::sin(two_pi * 4.0 * t));
                break;
            case 4:  // clicks over a low tone
                x = 0.4 * std::sin(two_pi * f0 * t) + ((i % 4410) < 30 ? nd(rng) * 2.0 : 0.0);
                break;
            default:  // near silence
                x = 0.01 * nd(rng);
            }
            mono[at + i] += amp * env * x;
            side[at + i] += amp * env * x * pan;
        }
        at += len;
    }

    PcmAudio out{sample_rate, channels, std::vector<std::int16_t>(n * static_cast<std::size_t>(channels))};
    auto to16 = [](double v) { return static_cast<std::int16_t>(std::clamp(v, -1.0, 1.0) * 32767.0); };
    for (std::size_t i = 0; i < n; ++i) {
        if (channels == 1) {
            out.samples[i] = to16(mono[i]);
        } else {
            out.samples[2 * i] = to16(mono[i] + side[i]);
            out.samples[2 * i + 1] = to16(mono[i] - side[i]);
        }
    }
    return out;
}

}  // namespace spliceloc::forge
