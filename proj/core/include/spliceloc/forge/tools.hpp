#pragma once

#include <map>
#include <string>
#include <vector>

#include "spliceloc/forge/plan.hpp"

namespace spliceloc::forge {

/// External encoder/decoder commands.
///
/// Plain `key = value` lines; `#` starts a comment. Values are argument
/// templates split on whitespace (no shell). `${NAME}` / `${NAME:-default}`
/// expand from the environment and `{confdir}` to the config file's directory
/// when the file is loaded; `{input}`, `{output}`, `{bitrate}` and `{quality}`
/// are filled per call. Keys:
///
///   encoderA.cbr, encoderA.vbr, encoderA.version, encoderA.delay
///   encoderB.cbr, encoderB.vbr, encoderB.version, encoderB.delay
///   decoder.decode, decoder.version
///
/// `delay` is the decoded-sample lead of a stream without gapless metadata.
class ToolConfig {
public:
    static ToolConfig parse(const std::string& text, const std::string& confdir = ".");
    /// Throws IoError / FormatError.
    static ToolConfig load(const std::string& path);
    /// `$SPLICELOC_FORGE_CONFIG` when set, else `fallback_path`.
    static ToolConfig from_environment(const std::string& fallback_path);

    /// Throws InvalidArgument for a missing key.
    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    int delay(Encoder e) const;

    /// Argument vector for one encode.
    std::vector<std::string> encode_command(const CompressionSpec& spec, const std::string& input,
                                            const std::string& output) const;
    std::vector<std::string> decode_command(const std::string& input, const std::string& output) const;

private:
    std::map<std::string, std::string> values_;
};

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

/// Runs argv[0] (PATH lookup) and waits. Never throws for a non-zero exit.
/// Throws EncoderFailure when the process cannot be started.
CommandResult run_command(const std::vector<std::string>& argv);

/// First line of each `*.version` command's output, keyed by tool.
std::map<std::string, std::string> probe_versions(const ToolConfig& tools);

/// Substitutes `{key}` placeholders in every argument.
std::vector<std::string> fill_template(const std::string& templ, const std::map<std::string, std::string>& vars);

}  // namespace spliceloc::forge
