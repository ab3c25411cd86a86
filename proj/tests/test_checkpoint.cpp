#include "hadfl/checkpoint.hpp"
#include "hadfl/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace hadfl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hadfl_test_" + name);
    fs::remove_all(p);
    return p;
}

Checkpoint sample(std::uint64_t round) {
    return {ParamVector{0.5 * static_cast<double>(round), -1.0, 3.25}, round, Time(0), 0xabcdef0123456789ULL};
}

}  // namespace

TEST_CASE("encode and decode") {
    const Checkpoint c = sample(7);
    const auto bytes = encode_checkpoint(c);
    CHECK(bytes.size() > kCheckpointHeaderBytes);
    CHECK(bytes[0] == 'H');
    CHECK(decode_checkpoint(bytes) == c);

    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), IoError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(decode_checkpoint(bad_version), IoError);
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 10);
    CHECK_THROWS_AS(decode_checkpoint(truncated), IoError);
}

TEST_CASE("directory store keeps every round and restores the latest") {
    const auto dir = scratch("store");
    DirectoryCheckpointStore store(dir);
    CHECK_FALSE(restore(store).has_value());
    for (std::uint64_t r : {1u, 2u, 5u}) store.write(sample(r));
    CHECK(store.rounds() == std::vector<std::uint64_t>{1, 2, 5});
    CHECK(restore(store)->sync_round == 5);
    CHECK(restore(store)->params == sample(5).params);
    CHECK_THROWS_AS(store.write(sample(5)), InvalidArgument);
    CHECK_THROWS_AS(store.write(sample(3)), InvalidArgument);
    // a fresh store over the same directory sees the same history
    DirectoryCheckpointStore again(dir);
    CHECK(again.rounds() == store.rounds());
    for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() == ".bin");
    CHECK(read_checkpoint_file(dir / "ckpt_2.bin") == sample(2));
    fs::remove_all(dir);
}

TEST_CASE("memory store") {
    MemoryCheckpointStore m;
    m.write(sample(1));
    m.write(sample(3));
    CHECK(m.latest()->sync_round == 3);
    m.set_fail_writes(true);
    CHECK_THROWS_AS(m.write(sample(4)), IoError);
    CHECK(m.rounds() == std::vector<std::uint64_t>{1, 3});
}

TEST_CASE("unreadable files are i/o errors") {
    CHECK_THROWS_AS(read_checkpoint_file("/nonexistent/ckpt_1.bin"), IoError);
    const auto p = scratch("garbage.bin");
    std::ofstream(p) << "not a checkpoint";
    CHECK_THROWS_AS(read_checkpoint_file(p), IoError);
    fs::remove(p);
}
