#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spliceloc/app/dataset.hpp"
#include "spliceloc/app/localize.hpp"
#include "spliceloc/error.hpp"
#include "spliceloc/features/cache.hpp"
#include "spliceloc/forge/forge.hpp"
#include "spliceloc/mp3/record_json.hpp"
#include "spliceloc/train/trainer.hpp"

namespace fs = std::filesystem;

namespace spliceloc::cli {
namespace {

// Writes to `path`, or to `fallback` when the path is empty or "-".
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(fallback);
        return;
    }
    std::ofstream o(path);
    if (!o) throw Error(Errc::io_error, "cannot write " + path);
    fn(o);
}

std::vector<std::uint8_t> read_label_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::vector<std::uint8_t> y;
    for (char ch; in.get(ch);) {
        if (ch == '0' || ch == '1') y.push_back(ch == '1');
        else if (!std::isspace(static_cast<unsigned char>(ch)) && ch != ',')
            throw Error(Errc::format_error, path + ": label files hold only 0, 1, commas and whitespace");
    }
    return y;
}

model::ModelConfig model_config(bool reduced, const std::string& json_path) {
    if (!json_path.empty()) {
        std::ifstream in(json_path);
        if (!in) throw Error(Errc::io_error, "cannot open " + json_path);
        std::stringstream ss;
        ss << in.rdbuf();
        return model::ModelConfig::from_json(ss.str());
    }
    return reduced ? model::ModelConfig::reduced() : model::ModelConfig::full();
}

std::string default_norm(const std::string& weights) {
    return (fs::path(weights).parent_path() / "norm.json").string();
}

struct Options {
    // records
    std::string input, out;
    // forge
    std::string sources, tools;
    std::uint64_t seed = 0;
    bool variable_slices = false;
    unsigned jobs = 1;
    std::size_t synthesize = 0, max_segments = 0;
    double synthesize_seconds = 30.0;
    // extract / train / eval
    std::string manifest, cache, weights, norm, model_json, split = "test", pred, truth, json;
    train::TrainConfig train;
    bool reduced = false;
    std::size_t train_limit = 0;
};

int cmd_records(const Options& o, std::ostream& out) {
    const auto bytes = mp3::read_file(o.input);
    const auto frames = mp3::parse_stream(bytes);
    emit(o.out, out, [&](std::ostream& s) {
        for (std::size_t i = 0; i < frames.size(); ++i) s << mp3::record_json_line(frames[i], i) << '\n';
    });
    return 0;
}

int cmd_forge(const Options& o, std::ostream& out) {
    if (o.synthesize) {
        fs::create_directories(o.sources);
        for (std::size_t i = 0; i < o.synthesize; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "synth_%04zu.wav", i);
            forge::write_wav((fs::path(o.sources) / name).string(),
                             forge::synthesize_source(o.seed * 1000003ull + i, o.synthesize_seconds, i % 4 == 3 ? 1 : 2));
        }
    }
    const char* env = std::getenv("SPLICELOC_FORGE_CONFIG");
    const auto tools = forge::ToolConfig::load(!o.tools.empty() ? o.tools : env && *env ? env : SPLICELOC_DEFAULT_FORGE_CONFIG);
    forge::ForgeOptions fo;
    fo.sources_dir = o.sources;
    fo.out_dir = o.out;
    fo.seed = o.seed;
    fo.variable_slices = o.variable_slices;
    fo.jobs = o.jobs;
    fo.max_segments_per_source = o.max_segments;
    std::vector<std::string> rejected;
    const auto entries = forge::forge_corpus(fo, tools, &rejected);
    for (const auto& r : rejected) out << "dropped " << r << '\n';
    std::size_t frames = 0, counts[3] = {0, 0, 0};
    for (const auto& e : entries) {
        frames += e.frames;
        if (e.split != features::Split::none) ++counts[static_cast<int>(e.split)];
    }
    out << "forged " << entries.size() << " segments (" << frames << " frames): " << counts[0] << " train, "
        << counts[1] << " val, " << counts[2] << " test, " << rejected.size() << " dropped\n"
        << "manifest: " << (fs::path(o.out) / "manifest.jsonl").string() << '\n';
    return 0;
}

int cmd_extract(const Options& o, std::ostream& out) {
    const auto seqs = forge::extract_sequences(o.manifest);
    features::write_cache(o.out, seqs);
    std::size_t frames = 0, unusable = 0;
    for (const auto& s : seqs)
        for (const auto& f : s.frames) {
            ++frames;
            unusable += !f.usable;
        }
    out << "extracted " << seqs.size() << " sequences, " << frames << " frames (" << unusable << " unusable) to "
        << o.out << '\n';
    return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto seqs = features::read_cache(o.cache);
    const auto config = model_config(o.reduced, o.model_json);
    config.validate();
    const auto norm = app::split_statistics(seqs, features::Split::train);
    auto train_windows = app::split_windows(seqs, features::Split::train, norm, config.L);
    const auto val_windows = app::split_windows(seqs, features::Split::val, norm, config.L);
    if (o.train_limit && train_windows.size() > o.train_limit) {
        std::mt19937_64 rng(o.train.seed ^ 0x7EA1u);
        std::shuffle(train_windows.begin(), train_windows.end(), rng);
        train_windows.resize(o.train_limit);
    }
    const auto train_set = train::to_examples(train_windows, config);
    const auto val_set = train::to_examples(val_windows, config);
    out << "training on " << train_set.size() << " windows, validating on " << val_set.size() << '\n';

    fs::create_directories(o.out);
    auto tc = o.train;
    if (tc.checkpoint_dir.empty() && tc.checkpoint_every) tc.checkpoint_dir = (fs::path(o.out) / "checkpoints").string();
    std::ofstream history(fs::path(o.out) / "history.jsonl");
    const auto init = model::ModelParameters::initialize(config, o.train.seed);
    const auto result = train::train(init, train_set, val_set, tc, {}, [&](const train::EpochRecord& r) {
        history << r.to_json() << '\n' << std::flush;
        out << r.to_json() << '\n' << std::flush;
    });
    result.best.save((fs::path(o.out) / "weights.bin").string());
    norm.save((fs::path(o.out) / "norm.json").string());
    out << "best epoch " << result.best_epoch << ", validation balanced accuracy "
        << metrics::round2(result.best_val_balanced_accuracy) << "\nweights: " << (fs::path(o.out) / "weights.bin").string()
        << '\n';
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    metrics::EvalReport report;
    if (!o.pred.empty() || !o.truth.empty()) {
        if (o.pred.empty() || o.truth.empty()) throw CLI::ValidationError("--pred and --truth go together");
        const auto y = read_label_file(o.truth);
        const auto y_hat = read_label_file(o.pred);
        std::vector<metrics::FrameTruth> truth;
        for (auto v : y) truth.push_back({v, 0, 0xFF});
        report = metrics::evaluate(truth, y_hat);
    } else {
        if (o.cache.empty() || o.weights.empty()) throw CLI::ValidationError("eval needs --cache and --weights, or --pred and --truth");
        const auto params = model::ModelParameters::load(o.weights);
        const auto norm = features::NormalizationStats::load(o.norm.empty() ? default_norm(o.weights) : o.norm);
        const auto seqs = features::read_cache(o.cache);
        const auto windows = app::split_windows(seqs, app::parse_split(o.split), norm, params.config.L);
        if (windows.empty()) throw Error(Errc::empty_dataset, "no windows in split " + o.split);
        report = app::evaluate_windows(windows, params);
    }
    out << report.to_tables();
    if (!o.json.empty()) emit(o.json, out, [&](std::ostream& s) { s << report.to_json() << '\n'; });
    return 0;
}

int cmd_localize(const Options& o, std::ostream& out) {
    const auto params = model::ModelParameters::load(o.weights);
    const auto norm = features::NormalizationStats::load(o.norm.empty() ? default_norm(o.weights) : o.norm);
    const auto frames = mp3::parse_stream(mp3::read_file(o.input));
    const auto result = app::localize(frames, params, norm, o.input);
    emit(o.out, out, [&](std::ostream& s) { s << result.to_json() << '\n'; });
    if (!o.out.empty() && o.out != "-") {
        out << result.regions.size() << " spliced region(s)";
        for (const auto& r : result.regions)
            out << (&r == &result.regions.front() ? ": " : ", ") << std::fixed << std::setprecision(3)
                << app::frame_time(r.first_frame) << "-" << app::frame_time(r.last_frame + 1) << " s";
        out << '\n';
    }
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    if (const char* ff = std::getenv("SPLICELOC_FFMPEG"); (!ff || !*ff) && *SPLICELOC_DEFAULT_FFMPEG)
        setenv("SPLICELOC_FFMPEG", SPLICELOC_DEFAULT_FFMPEG, 1);

    CLI::App app{"Frame-level localization of multiply compressed regions in MP3 files", "spliceloc"};
    app.set_config("--config", "", "key-value configuration file (INI/TOML style, one [section] per subcommand)")
        ->envname("SPLICELOC_CONFIG");
    app.require_subcommand(1, 1);
    Options o;

    auto* records = app.add_subcommand("records", "Print the codec fields of every frame as JSON lines");
    records->add_option("input", o.input, "MP3 file")->required()->check(CLI::ExistingFile);
    records->add_option("--out", o.out, "Output file (default stdout)");

    auto* forge = app.add_subcommand("forge", "Forge a labelled multiply-compressed corpus from WAV sources");
    forge->add_option("--sources", o.sources, "Directory of 44.1 kHz 16-bit WAV files")->required();
    forge->add_option("--out", o.out, "Output directory")->required();
    forge->add_option("--seed", o.seed, "Random seed")->required();
    forge->add_flag("--variable-slices", o.variable_slices, "Slices of 10-80 frames with random compression counts");
    forge->add_option("--jobs", o.jobs, "Parallel segment pipelines")->check(CLI::Range(1u, 256u));
    forge->add_option("--tools", o.tools, "Encoder configuration (default $SPLICELOC_FORGE_CONFIG or the bundled one)");
    forge->add_option("--synthesize", o.synthesize, "First write this many synthetic sources into --sources");
    forge->add_option("--synthesize-seconds", o.synthesize_seconds, "Length of each synthetic source")->check(CLI::PositiveNumber);
    forge->add_option("--max-segments-per-source", o.max_segments, "Cap on segments per source (0 = all)");

    auto* extract = app.add_subcommand("extract", "Parse forged MP3s into a feature cache");
    extract->add_option("--manifest", o.manifest, "manifest.jsonl written by forge")->required()->check(CLI::ExistingFile);
    extract->add_option("--out", o.out, "Feature cache file")->required();

    auto* train = app.add_subcommand("train", "Train the classifier on a feature cache");
    train->add_option("--cache", o.cache, "Feature cache")->required()->check(CLI::ExistingFile);
    train->add_option("--out", o.out, "Output directory (weights.bin, norm.json, history.jsonl)")->required();
    train->add_option("--seed", o.train.seed, "Random seed")->required();
    train->add_option("--lr", o.train.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
    train->add_option("--batch-size", o.train.batch_size, "Windows per step")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
    train->add_option("--patience", o.train.patience, "Epochs without improvement before stopping")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
    train->add_option("--epoch-cap", o.train.epoch_cap, "Maximum epochs")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
    train->add_option("--dropout", o.train.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.99));
    train->add_option("--checkpoint-every", o.train.checkpoint_every, "Write weights every k epochs (0 = best only)");
    train->add_flag("--reduced-config", o.reduced, "Test-scale model (d_model 60, 5 heads, 2 layers)");
    train->add_option("--model-config", o.model_json, "Model configuration JSON")->check(CLI::ExistingFile);
    train->add_option("--train-limit", o.train_limit, "Use at most this many training windows (seeded subsample)");

    auto* eval = app.add_subcommand("eval", "Score predictions: a model on a cached split, or label files");
    eval->add_option("--cache", o.cache, "Feature cache")->check(CLI::ExistingFile);
    eval->add_option("--weights", o.weights, "Weight file")->check(CLI::ExistingFile);
    eval->add_option("--norm", o.norm, "Normalization statistics (default norm.json beside the weights)");
    eval->add_option("--split", o.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
    eval->add_option("--pred", o.pred, "Predicted labels (0/1 text)")->check(CLI::ExistingFile);
    eval->add_option("--truth", o.truth, "True labels (0/1 text)")->check(CLI::ExistingFile);
    eval->add_option("--json", o.json, "Also write the report as JSON");

    auto* localize = app.add_subcommand("localize", "Label every frame of an MP3 file");
    localize->add_option("input", o.input, "MP3 file")->required()->check(CLI::ExistingFile);
    localize->add_option("--weights", o.weights, "Weight file")->required()->check(CLI::ExistingFile);
    localize->add_option("--norm", o.norm, "Normalization statistics (default norm.json beside the weights)");
    localize->add_option("--out", o.out, "Result JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help(std::string{}, CLI::AppFormatMode::All);
            return 0;
        }
        err << "usage error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    try {
        if (*records) return cmd_records(o, out);
        if (*forge) return cmd_forge(o, out);
        if (*extract) return cmd_extract(o, out);
        if (*train) return cmd_train(o, out);
        if (*eval) return cmd_eval(o, out);
        if (*localize) return cmd_localize(o, out);
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: IoError: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace spliceloc::cli
