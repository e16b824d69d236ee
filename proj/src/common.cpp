#include "unim/common.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>

namespace unim {

namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& content) {
    static std::atomic<uint64_t> counter{0};
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::string tmp = path + ".tmp." + std::to_string(::getpid()) + "." +
                      std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open temp file for write: " + tmp);
        out << content;
        out.flush();
        if (!out.good()) {
            out.close();
            fs::remove(tmp);
            throw Error("short write to temp file: " + tmp);
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("atomic rename failed for " + path + ": " + ec.message());
    }
}

}  // namespace unim
