#include <doctest.h>

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "blockprune/weight_store.hpp"
#include "helpers.hpp"

using namespace blockprune;

TEST_SUITE("weight_store") {

TEST_CASE("container round-trips bit-exactly, including NaN payloads and negative zero") {
    WeightStore w;
    w.insert("a.weight", testutil::random_tensor({3, 2, 3, 3}, 1));
    Tensor odd({4});
    odd[0] = -0.0f;
    odd[1] = std::numeric_limits<float>::quiet_NaN();
    odd[2] = std::numeric_limits<float>::denorm_min();
    odd[3] = std::numeric_limits<float>::infinity();
    w.insert("b.bias", odd);
    std::string bytes = serialize_weights(w);
    WeightStore back = deserialize_weights(bytes);
    CHECK(serialize_weights(back) == bytes);
    CHECK(back.at("a.weight") == w.at("a.weight"));
    CHECK(std::memcmp(back.at("b.bias").data(), odd.data(), 16) == 0);
}

TEST_CASE("header is a JSON index with little-endian length prefix") {
    WeightStore w;
    w.insert("x", Tensor({2, 3}, 1.5f));
    w.insert("y", Tensor({1}, 2.0f));
    const std::string bytes = serialize_weights(w);
    std::uint64_t len = 0;
    for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]);
    auto header = nlohmann::json::parse(bytes.substr(8, len));
    CHECK(header.at("x").at("dtype") == "F32");
    CHECK(header.at("x").at("shape") == nlohmann::json::array({2, 3}));
    CHECK(header.at("x").at("length") == 24);
    CHECK(header.at("y").at("offset").get<int>() + 4 <= static_cast<int>(bytes.size() - 8 - len));
    float first = 0.0f;
    std::memcpy(&first, bytes.data() + 8 + len + header.at("x").at("offset").get<std::size_t>(), 4);
    CHECK(first == 1.5f);
}

TEST_CASE("truncated and malformed containers are rejected") {
    WeightStore w;
    w.insert("x", Tensor({8}, 1.0f));
    const std::string bytes = serialize_weights(w);
    CHECK_THROWS_AS(deserialize_weights(bytes.substr(0, bytes.size() - 1)), std::runtime_error);
    CHECK_THROWS_AS(deserialize_weights(bytes.substr(0, 4)), std::runtime_error);
    CHECK_THROWS_AS(deserialize_weights(std::string(16, '\xff')), std::runtime_error);
}

TEST_CASE("names are unique and fingerprints track content") {
    WeightStore w;
    w.insert("x", Tensor({2}, 1.0f));
    CHECK_THROWS(w.insert("x", Tensor({2}, 1.0f)));
    WeightStore v = w;
    CHECK(v.fingerprint() == w.fingerprint());
    v.at("x")[1] = 1.0000001f;
    CHECK(v.fingerprint() != w.fingerprint());
    CHECK(is_buffer("stem.bn.running_mean"));
    CHECK(is_buffer("stem.bn.running_var"));
    CHECK_FALSE(is_buffer("stem.bn.weight"));
}

TEST_CASE("save and load through a file") {
    auto dir = testutil::temp_dir("weights_file");
    WeightStore w;
    w.insert("x", testutil::random_tensor({5, 5}, 3));
    save_weights(w, dir / "w.bin");
    CHECK(load_weights(dir / "w.bin") == w);
    CHECK_THROWS(load_weights(dir / "missing.bin"));
    std::filesystem::remove_all(dir);
}

}
