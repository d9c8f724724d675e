#include "drugrec/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "drugrec/error.hpp"

namespace drugrec::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open file for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError(path.string(), "read failed");
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(path.parent_path().string(), ec.message());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string(), "cannot open file for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError(tmp.string(), "write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(path.string(), "rename failed: " + ec.message());
}

}  // namespace drugrec::io
