#include "binary_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace corpus_forge::detail {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoError, "read failed on '" + path + "'");
    return ss.str();
}

// Writes to a sibling temp file, then renames, so readers never see a torn file.
void write_file(const std::string& path, std::string_view data) {
    const std::string tmp = path + ".tmp";
    if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open '" + tmp + "' for writing");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed on '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename '" + tmp + "': " + ec.message());
}

}  // namespace corpus_forge::detail
