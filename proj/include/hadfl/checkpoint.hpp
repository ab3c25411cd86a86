#pragma once

#include "hadfl/param_vector.hpp"
#include "hadfl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace hadfl {

struct Checkpoint {
    ParamVector params;
    std::uint64_t sync_round = 0;
    // Virtual time of the backup; kept in memory only, the file format has no slot for it.
    Time wall_time{0};
    std::uint64_t config_hash = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 16;

// {"HADF", format version u32, config digest u64} followed by the model-broadcast payload
// whose version field carries the sync round.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
// Throws IoError on a bad magic or format version, ProtocolError on a malformed payload.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

class CheckpointStore {
public:
    virtual ~CheckpointStore() = default;
    // Throws InvalidArgument unless sync_round exceeds every stored round; IoError on storage failure.
    virtual void write(const Checkpoint& ckpt) = 0;
    virtual std::optional<Checkpoint> latest() const = 0;
    virtual std::vector<std::uint64_t> rounds() const = 0;
};

class MemoryCheckpointStore : public CheckpointStore {
public:
    void write(const Checkpoint& ckpt) override;
    std::optional<Checkpoint> latest() const override;
    std::vector<std::uint64_t> rounds() const override;
    // Subsequent writes throw IoError.
    void set_fail_writes(bool fail) { fail_ = fail; }

private:
    std::map<std::uint64_t, Checkpoint> items_;
    bool fail_ = false;
};

// A directory of ckpt_{sync_round}.bin files.
class DirectoryCheckpointStore : public CheckpointStore {
public:
    explicit DirectoryCheckpointStore(std::filesystem::path dir);
    void write(const Checkpoint& ckpt) override;
    std::optional<Checkpoint> latest() const override;
    std::vector<std::uint64_t> rounds() const override;
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

Checkpoint read_checkpoint_file(const std::filesystem::path& path);

// Highest-round checkpoint or nullopt for an empty store.
std::optional<Checkpoint> restore(const CheckpointStore& store);

}  // namespace hadfl
