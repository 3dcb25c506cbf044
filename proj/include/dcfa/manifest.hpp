#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dcfa {

constexpr const char* kVersion = "0.1.0";

/// FNV-1a 64-bit digest of a file's bytes, hex-encoded.
std::string fileDigest(const std::string& path);

/// Ordered key=value manifest written next to every artifact-producing
/// command's outputs.
class RunManifest {
public:
    void add(const std::string& key, const std::string& value);
    void addFileDigest(const std::string& key, const std::string& path);
    void write(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string hostDescription();

}  // namespace dcfa
