#include "ibis/store.hpp"

#include <atomic>
#include <fstream>
#include <functional>
#include <thread>

#include <fmt/core.h>

namespace ibis {

namespace fs = std::filesystem;

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

fs::path ArtifactStore::path_of(const std::string& digest) const {
    if (digest.size() < 3) throw DataError(fmt::format("bad digest '{}'", digest));
    return root_ / digest.substr(0, 2) / (digest + ".png");
}

bool ArtifactStore::contains(const std::string& digest) const { return fs::exists(path_of(digest)); }

std::string ArtifactStore::put(std::span<const std::uint8_t> bytes) const {
    static std::atomic<unsigned long> counter{0};
    const std::string digest = sha256_hex(bytes);
    const fs::path target = path_of(digest);
    if (fs::exists(target)) return digest;
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() /
                         fmt::format(".{}.{}.{}.tmp", digest.substr(0, 16),
                                     std::hash<std::thread::id>{}(std::this_thread::get_id()),
                                     counter.fetch_add(1));
    write_file(tmp.string(), bytes);
    fs::rename(tmp, target);
    return digest;
}

Bytes ArtifactStore::get(const std::string& digest) const {
    Bytes bytes = read_file(path_of(digest).string());
    if (sha256_hex(bytes) != digest) throw DataError(fmt::format("blob {} fails digest check", digest));
    return bytes;
}

}  // namespace ibis
