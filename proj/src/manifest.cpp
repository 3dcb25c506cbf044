#include "dcfa/manifest.hpp"

#include <cstdint>
#include <fstream>

#include "dcfa/matrix.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/utsname.h>
#endif

namespace dcfa {

std::string fileDigest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for digest: " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void RunManifest::add(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
}

void RunManifest::addFileDigest(const std::string& key, const std::string& path) {
    entries_.emplace_back(key, fileDigest(path));
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

std::string hostDescription() {
#if defined(__unix__) || defined(__APPLE__)
    utsname u{};
    if (uname(&u) == 0)
        return std::string(u.sysname) + " " + u.release + " " + u.machine;
#endif
    return "unknown";
}

}  // namespace dcfa
