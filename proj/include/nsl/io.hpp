#pragma once

// Artifact output: CSV with 17-significant-digit floats (lossless double
// round-trip), and atomic file writes (temp name + rename) so partial
// artifacts never appear under the final name.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsl/saddle.hpp"

namespace nsl::io {

using json = nlohmann::ordered_json;

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw Error("cannot open " + tmp.string() + " for writing");
        os << content;
        if (!os.flush())
            throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        out += header[i];
        out += (i + 1 < header.size()) ? ',' : '\n';
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += fmt17(row[i]);
            out += (i + 1 < row.size()) ? ',' : '\n';
        }
    }
    atomic_write(path, out);
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    atomic_write(path, j.dump(2) + "\n");
}

} // namespace nsl::io
