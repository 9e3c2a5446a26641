#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace styler {

struct ArchiveEntry {
    std::vector<std::int64_t> shape;
    std::vector<float> values;

    std::int64_t numel() const;
};

/// Named-tensor container ("NTA1") used for pretrained weights and
/// checkpoints.
///
/// Layout, all integers little-endian:
///
///     bytes 0..3    "NTA1"
///     bytes 4..11   u64 header length N
///     next N bytes  JSON header:
///                     {"metadata": {key: string, ...},
///                      "tensors": [{"name", "dtype": "f32", "shape": [..],
///                                   "offset": byte offset into payload}, ...]}
///     payload       f32 runs, one per tensor, contiguous and in header order
///
/// Tensors are written in name order and JSON keys are sorted, so equal
/// archives serialize to identical bytes.
class TensorArchive {
public:
    void put(const std::string& name, std::vector<std::int64_t> shape, std::vector<float> values);
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    /// Throws LoadError naming `name` when absent.
    const ArchiveEntry& get(const std::string& name) const;
    /// As get(), also checking the shape; the error names the tensor and both shapes.
    const ArchiveEntry& get(const std::string& name, const std::vector<std::int64_t>& expected_shape) const;

    const std::map<std::string, ArchiveEntry>& tensors() const { return tensors_; }

    void set_meta(const std::string& key, std::string value) { metadata_[key] = std::move(value); }
    bool has_meta(const std::string& key) const { return metadata_.count(key) != 0; }
    /// Throws LoadError when absent.
    const std::string& meta(const std::string& key) const;
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

    std::vector<unsigned char> serialize() const;
    static TensorArchive deserialize(const std::vector<unsigned char>& bytes, const std::string& origin = "<memory>");

    void save(const std::filesystem::path& path) const;
    static TensorArchive load(const std::filesystem::path& path);

private:
    std::map<std::string, ArchiveEntry> tensors_;
    std::map<std::string, std::string> metadata_;
};

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size);

/// FNV-1a digest of a file's bytes as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace styler
