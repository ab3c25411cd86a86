#include "hadfl/checkpoint.hpp"

#include "hadfl/errors.hpp"
#include "hadfl/wire.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace hadfl {

namespace {

constexpr char kMagic[4] = {'H', 'A', 'D', 'F'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
    return v;
}

std::optional<std::uint64_t> round_from_name(const std::string& name) {
    if (name.size() < 10 || name.rfind("ckpt_", 0) != 0 || name.substr(name.size() - 4) != ".bin") return std::nullopt;
    const std::string digits = name.substr(5, name.size() - 9);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    return std::stoull(digits);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_le(out, kCheckpointFormatVersion, 4);
    put_le(out, ckpt.config_hash, 8);
    const auto body = encode_model(ModelPayload{ckpt.sync_round, ckpt.params});
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kCheckpointHeaderBytes) throw IoError("checkpoint: truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("checkpoint: bad magic");
    const auto version = get_le(bytes, 4, 4);
    if (version != kCheckpointFormatVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    Checkpoint c;
    c.config_hash = get_le(bytes, 8, 8);
    ModelPayload m = decode_model(bytes.subspan(kCheckpointHeaderBytes));
    c.sync_round = m.version;
    c.params = std::move(m.params);
    return c;
}

void MemoryCheckpointStore::write(const Checkpoint& ckpt) {
    if (fail_) throw IoError("checkpoint store: write failed");
    if (!items_.empty() && ckpt.sync_round <= items_.rbegin()->first)
        throw InvalidArgument("checkpoint store: sync_round must increase");
    items_.emplace(ckpt.sync_round, ckpt);
}

std::optional<Checkpoint> MemoryCheckpointStore::latest() const {
    if (items_.empty()) return std::nullopt;
    return items_.rbegin()->second;
}

std::vector<std::uint64_t> MemoryCheckpointStore::rounds() const {
    std::vector<std::uint64_t> out;
    for (const auto& [r, c] : items_) out.push_back(r);
    return out;
}

DirectoryCheckpointStore::DirectoryCheckpointStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("checkpoint store: cannot create " + dir_.string() + ": " + ec.message());
}

void DirectoryCheckpointStore::write(const Checkpoint& ckpt) {
    const auto existing = rounds();
    if (!existing.empty() && ckpt.sync_round <= existing.back())
        throw InvalidArgument("checkpoint store: sync_round must increase");
    const auto path = dir_ / ("ckpt_" + std::to_string(ckpt.sync_round) + ".bin");
    const auto tmp = path.string() + ".tmp";
    const auto bytes = encode_checkpoint(ckpt);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("checkpoint store: cannot write " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("checkpoint store: cannot rename " + tmp + ": " + ec.message());
}

std::vector<std::uint64_t> DirectoryCheckpointStore::rounds() const {
    std::vector<std::uint64_t> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec))
        if (auto r = round_from_name(entry.path().filename().string())) out.push_back(*r);
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<Checkpoint> DirectoryCheckpointStore::latest() const {
    const auto r = rounds();
    if (r.empty()) return std::nullopt;
    return read_checkpoint_file(dir_ / ("ckpt_" + std::to_string(r.back()) + ".bin"));
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

std::optional<Checkpoint> restore(const CheckpointStore& store) { return store.latest(); }

}  // namespace hadfl
