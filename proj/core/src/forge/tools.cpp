#include "spliceloc/forge/tools.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spliceloc/error.hpp"

extern char** environ;

namespace spliceloc::forge {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string expand_env(const std::string& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size();) {
        if (v.compare(i, 2, "${") == 0) {
            const auto close = v.find('}', i);
            if (close == std::string::npos) throw Error(Errc::format_error, "unterminated ${ in tool config");
            std::string name = v.substr(i + 2, close - i - 2), fallback;
            if (const auto d = name.find(":-"); d != std::string::npos) {
                fallback = name.substr(d + 2);
                name.resize(d);
            }
            const char* env = std::getenv(name.c_str());
            out += env && *env ? env : fallback;
            i = close + 1;
        } else {
            out += v[i++];
        }
    }
    return out;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
    return s;
}

std::string prefix(Encoder e) { return e == Encoder::a ? "encoderA" : "encoderB"; }

}  // namespace

ToolConfig ToolConfig::parse(const std::string& text, const std::string& confdir) {
    ToolConfig c;
    std::istringstream in(text);
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(Errc::format_error, "tool config line " + std::to_string(n) + ": expected key = value");
        c.values_[trim(line.substr(0, eq))] = replace_all(expand_env(trim(line.substr(eq + 1))), "{confdir}", confdir);
    }
    return c;
}

ToolConfig ToolConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open tool config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto dir = std::filesystem::absolute(path).parent_path().string();
    return parse(ss.str(), dir);
}

ToolConfig ToolConfig::from_environment(const std::string& fallback_path) {
    const char* env = std::getenv("SPLICELOC_FORGE_CONFIG");
    return load(env && *env ? env : fallback_path);
}

const std::string& ToolConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error(Errc::invalid_argument, "tool config lacks " + key);
    return it->second;
}

int ToolConfig::delay(Encoder e) const {
    const auto key = prefix(e) + ".delay";
    return has(key) ? std::stoi(get(key)) : 0;
}

std::vector<std::string> fill_template(const std::string& templ, const std::map<std::string, std::string>& vars) {
    std::vector<std::string> argv;
    std::istringstream in(templ);
    for (std::string tok; in >> tok;) {
        for (const auto& [k, v] : vars) tok = replace_all(tok, "{" + k + "}", v);
        argv.push_back(tok);
    }
    return argv;
}

std::vector<std::string> ToolConfig::encode_command(const CompressionSpec& spec, const std::string& input,
                                                    const std::string& output) const {
    const bool cbr = spec.mode == RateMode::cbr;
    return fill_template(get(prefix(spec.encoder) + (cbr ? ".cbr" : ".vbr")),
                         {{"input", input},
                          {"output", output},
                          {"bitrate", std::to_string(spec.value)},
                          {"quality", std::to_string(spec.value)}});
}

std::vector<std::string> ToolConfig::decode_command(const std::string& input, const std::string& output) const {
    return fill_template(get("decoder.decode"), {{"input", input}, {"output", output}});
}

CommandResult run_command(const std::vector<std::string>& argv) {
    if (argv.empty()) throw Error(Errc::encoder_failure, "empty command");
    int fds[2];
    if (pipe(fds) != 0) throw Error(Errc::encoder_failure, "pipe failed");
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_adddup2(&actions, fds[1], 1);
    posix_spawn_file_actions_adddup2(&actions, fds[1], 2);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    posix_spawn_file_actions_addclose(&actions, fds[1]);

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(fds[1]);
    if (rc != 0) {
        close(fds[0]);
        throw Error(Errc::encoder_failure, "cannot start " + argv[0]);
    }
    CommandResult out;
    char buf[4096];
    for (ssize_t n; (n = read(fds[0], buf, sizeof buf)) > 0;) out.output.append(buf, static_cast<std::size_t>(n));
    close(fds[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    // posix_spawnp reports a missing executable as exit 127 from the child
    out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return out;
}

std::map<std::string, std::string> probe_versions(const ToolConfig& tools) {
    std::map<std::string, std::string> out;
    for (const char* tool : {"encoderA", "encoderB", "decoder"}) {
        const std::string key = std::string(tool) + ".version";
        if (!tools.has(key)) continue;
        const auto r = run_command(fill_template(tools.get(key), {}));
        if (r.exit_code != 0) throw Error(Errc::encoder_failure, std::string(tool) + " version probe failed: " + r.output);
        out[tool] = trim(r.output.substr(0, r.output.find('\n')));
    }
    return out;
}

}  // namespace spliceloc::forge
