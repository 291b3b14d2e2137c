#include "eileen/util.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eileen/error.hpp"

namespace eileen {

std::string format_double(double value) {
    char buf[64];
    auto const [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw FormatError("cannot format double");
    return std::string(buf, end);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    auto const [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw FormatError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::string read_text_file(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(std::filesystem::path const& path, std::string_view text) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw IoError("write failed for " + path.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

}  // namespace eileen
