#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/log.hpp"
#include "statefusion/rng.hpp"

namespace statefusion {

namespace {

std::mutex g_warn_mutex;

void stderr_handler(std::string_view message) {
    std::cerr << "warning: " << message << '\n';
}

WarningHandler& handler() {
    static WarningHandler h = stderr_handler;
    return h;
}

}  // namespace

void warn(std::string_view message) {
    std::lock_guard lock(g_warn_mutex);
    handler()(message);
}

WarningHandler set_warning_handler(WarningHandler next) {
    std::lock_guard lock(g_warn_mutex);
    WarningHandler previous = handler();
    handler() = next ? std::move(next) : WarningHandler(stderr_handler);
    return previous;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view name) {
    std::uint64_t z = root ^ fnv1a(name);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ValidationError("write failed for " + path.string());
}

std::size_t line_at_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset; ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace statefusion
