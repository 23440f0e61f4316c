#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

namespace woodmon::test {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the woodmon binary through the shell; `args` is appended verbatim.
inline CliResult run_cli(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const std::string err_path = "/tmp/woodmon-cli-err-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
    const std::string cmd = env + (env.empty() ? "" : " ") + WOODMON_CLI + " " + args + " 2>" + err_path;
    CliResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe)
        return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream err(err_path);
    r.err.assign(std::istreambuf_iterator<char>(err), std::istreambuf_iterator<char>());
    std::remove(err_path.c_str());
    return r;
}

}  // namespace woodmon::test
