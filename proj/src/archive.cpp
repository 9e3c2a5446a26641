#include "styler/archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "styler/errors.hpp"

static_assert(std::endian::native == std::endian::little, "NTA1 payload is read with a little-endian memcpy");

namespace styler {

namespace {

constexpr char kMagic[4] = {'N', 'T', 'A', '1'};

std::string shape_str(const std::vector<std::int64_t>& shape)
{
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

std::vector<unsigned char> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::int64_t ArchiveEntry::numel() const
{
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void TensorArchive::put(const std::string& name, std::vector<std::int64_t> shape, std::vector<float> values)
{
    ArchiveEntry e{std::move(shape), std::move(values)};
    for (auto d : e.shape) {
        if (d < 0) throw InvalidInput("archive tensor " + name + " has a negative dimension");
    }
    if (e.numel() != static_cast<std::int64_t>(e.values.size())) {
        throw InvalidInput("archive tensor " + name + " shape " + shape_str(e.shape) + " does not match " +
                           std::to_string(e.values.size()) + " values");
    }
    tensors_[name] = std::move(e);
}

const ArchiveEntry& TensorArchive::get(const std::string& name) const
{
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw LoadError("archive is missing tensor \"" + name + "\"");
    return it->second;
}

const ArchiveEntry& TensorArchive::get(const std::string& name, const std::vector<std::int64_t>& expected_shape) const
{
    const auto& e = get(name);
    if (e.shape != expected_shape) {
        throw LoadError("archive tensor \"" + name + "\" has shape " + shape_str(e.shape) + ", expected " +
                        shape_str(expected_shape));
    }
    return e;
}

const std::string& TensorArchive::meta(const std::string& key) const
{
    auto it = metadata_.find(key);
    if (it == metadata_.end()) throw LoadError("archive metadata is missing \"" + key + "\"");
    return it->second;
}

std::vector<unsigned char> TensorArchive::serialize() const
{
    nlohmann::json header;
    header["metadata"] = nlohmann::json::object();
    for (const auto& [k, v] : metadata_) header["metadata"][k] = v;
    header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, e] : tensors_) {
        header["tensors"].push_back({{"name", name}, {"dtype", "f32"}, {"shape", e.shape}, {"offset", offset}});
        offset += e.values.size() * sizeof(float);
    }
    const std::string text = header.dump();
    const std::uint64_t header_len = text.size();

    std::vector<unsigned char> out;
    out.reserve(12 + text.size() + offset);
    out.insert(out.end(), kMagic, kMagic + 4);
    unsigned char len_bytes[8];
    std::memcpy(len_bytes, &header_len, 8);
    out.insert(out.end(), len_bytes, len_bytes + 8);
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& [name, e] : tensors_) {
        const auto* p = reinterpret_cast<const unsigned char*>(e.values.data());
        out.insert(out.end(), p, p + e.values.size() * sizeof(float));
    }
    return out;
}

TensorArchive TensorArchive::deserialize(const std::vector<unsigned char>& bytes, const std::string& origin)
{
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw LoadError(origin + ": not an NTA1 archive");
    }
    std::uint64_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 4, 8);
    if (header_len > bytes.size() - 12) throw LoadError(origin + ": truncated NTA1 header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(origin + ": malformed NTA1 header: " + e.what());
    }

    const std::size_t payload_start = 12 + header_len;
    const std::size_t payload_size = bytes.size() - payload_start;
    TensorArchive archive;
    try {
        for (const auto& [k, v] : header.at("metadata").items()) archive.metadata_[k] = v.get<std::string>();

        std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
        std::uint64_t total = 0;
        for (const auto& t : header.at("tensors")) {
            const auto name = t.at("name").get<std::string>();
            if (t.at("dtype").get<std::string>() != "f32") {
                throw LoadError(origin + ": tensor \"" + name + "\" has unsupported dtype");
            }
            if (archive.tensors_.count(name)) throw LoadError(origin + ": duplicate tensor name \"" + name + "\"");
            ArchiveEntry e;
            e.shape = t.at("shape").get<std::vector<std::int64_t>>();
            const auto offset = t.at("offset").get<std::uint64_t>();
            const auto n = static_cast<std::uint64_t>(e.numel());
            if (offset + n * 4 > payload_size) {
                throw LoadError(origin + ": tensor \"" + name + "\" runs past the payload");
            }
            e.values.resize(n);
            std::memcpy(e.values.data(), bytes.data() + payload_start + offset, n * 4);
            spans.emplace_back(offset, offset + n * 4);
            total += n * 4;
            archive.tensors_.emplace(name, std::move(e));
        }
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first < spans[i - 1].second) throw LoadError(origin + ": overlapping tensor payloads");
        }
        if (total != payload_size) throw LoadError(origin + ": payload length does not match tensor shapes");
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(origin + ": malformed NTA1 header: " + e.what());
    }
    return archive;
}

void TensorArchive::save(const std::filesystem::path& path) const
{
    // Written beside the target and renamed, so a reader never sees a
    // partial archive and an interrupted save keeps the previous one.
    const auto bytes = serialize();
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path.string() + ": cannot open for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.close();
        if (!out) throw IoError(path.string() + ": write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(path.string() + ": " + ec.message());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path)
{
    return deserialize(read_file(path), path.string());
}

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string file_digest(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << fnv1a64(bytes.data(), bytes.size());
    return s.str();
}

}  // namespace styler
