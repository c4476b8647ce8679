#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gpga/dataset.hpp"

using namespace gpga;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void put_be32(std::ofstream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_images(const std::string& path, std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                  const std::vector<unsigned char>& pixels, std::uint32_t magic = 0x00000803u) {
    std::ofstream os(path, std::ios::binary);
    put_be32(os, magic);
    put_be32(os, count);
    put_be32(os, rows);
    put_be32(os, cols);
    os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_labels(const std::string& path, const std::vector<unsigned char>& labels,
                  std::uint32_t magic = 0x00000801u) {
    std::ofstream os(path, std::ios::binary);
    put_be32(os, magic);
    put_be32(os, static_cast<std::uint32_t>(labels.size()));
    os.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace

TEST_CASE("idx pixels rescale to [-1, 1]") {
    const std::string ip = temp_path("idx_ok_images"), lp = temp_path("idx_ok_labels");
    std::vector<unsigned char> px(2 * 2 * 2, 0);
    px[0] = 255;  // -> 1.0
    px[1] = 0;    // -> -1.0
    px[2] = 128;
    write_images(ip, 2, 2, 2, px);
    write_labels(lp, {1, 0});
    const Dataset d = load_idx_dataset(ip, lp);
    CHECK(d.images.shape == std::vector<std::size_t>{2, 1, 2, 2});
    CHECK(d.images.data[0] == doctest::Approx(1.0));
    CHECK(d.images.data[1] == doctest::Approx(-1.0));
    CHECK(d.images.data[2] == doctest::Approx(128.0 / 127.5 - 1.0).epsilon(1e-15));
    CHECK(d.labels == std::vector<std::size_t>{1, 0});
    d.validate();
    std::remove(ip.c_str());
    std::remove(lp.c_str());
}

TEST_CASE("an all-zero image becomes all -1.0") {
    const std::string ip = temp_path("idx_zero_images"), lp = temp_path("idx_zero_labels");
    write_images(ip, 1, 28, 28, std::vector<unsigned char>(28 * 28, 0));
    write_labels(lp, {0});
    const Dataset d = load_idx_dataset(ip, lp);
    for (double v : d.images.data) CHECK(v == doctest::Approx(-1.0));
    std::remove(ip.c_str());
    std::remove(lp.c_str());
}

TEST_CASE("idx loader errors are distinct and informative") {
    const std::string ip = temp_path("idx_bad_images"), lp = temp_path("idx_bad_labels");
    SUBCASE("bad magic") {
        write_images(ip, 1, 2, 2, std::vector<unsigned char>(4, 0), 0xdeadbeefu);
        write_labels(lp, {0});
        try {
            load_idx_dataset(ip, lp);
            FAIL("expected a format error");
        } catch (const FileFormatError& e) {
            CHECK(e.kind == FileFormatError::Kind::BadMagic);
        }
    }
    SUBCASE("count mismatch names both counts") {
        write_images(ip, 2, 2, 2, std::vector<unsigned char>(8, 0));
        write_labels(lp, {0, 1, 0});
        try {
            load_idx_dataset(ip, lp);
            FAIL("expected a format error");
        } catch (const FileFormatError& e) {
            CHECK(e.kind == FileFormatError::Kind::CountMismatch);
            const std::string msg = e.what();
            CHECK(msg.find('2') != std::string::npos);
            CHECK(msg.find('3') != std::string::npos);
        }
    }
    SUBCASE("truncated pixel payload") {
        write_images(ip, 2, 2, 2, std::vector<unsigned char>(5, 0));  // needs 8
        write_labels(lp, {0, 1});
        try {
            load_idx_dataset(ip, lp);
            FAIL("expected a format error");
        } catch (const FileFormatError& e) {
            CHECK(e.kind == FileFormatError::Kind::Truncated);
        }
    }
    std::remove(ip.c_str());
    std::remove(lp.c_str());
}

TEST_CASE("synthetic blobs are deterministic and well-formed") {
    RngState r1(100), r2(100);
    const Dataset a = generate_synthetic(4, 25, 36, 6.0, r1);
    const Dataset b = generate_synthetic(4, 25, 36, 6.0, r2);
    CHECK(a.images.data == b.images.data);
    CHECK(a.labels == b.labels);
    CHECK(a.images.shape == std::vector<std::size_t>{100, 1, 6, 6});
    a.validate();
    for (double v : a.images.data) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    CHECK(a.num_classes() == 4);
}

TEST_CASE("synthetic generation rejects degenerate requests") {
    RngState rng(0);
    CHECK_THROWS_AS(generate_synthetic(4, 0, 16, 4.0, rng), ContractViolation);
    CHECK_THROWS_AS(generate_synthetic(1, 10, 16, 4.0, rng), ContractViolation);
}

TEST_CASE("train and eval splits describe the same task") {
    RngState rng(5);
    auto [train, test] = generate_synthetic_split(3, 40, 10, 25, 7.0, rng);
    CHECK(train.count() == 120);
    CHECK(test.count() == 30);
    CHECK(train.split == "train");
    CHECK(test.split == "test");
    CHECK(train.images.shape[3] == test.images.shape[3]);
    train.validate();
    test.validate();
}

TEST_CASE("slice keeps a contiguous window") {
    RngState rng(6);
    const Dataset d = generate_synthetic(2, 10, 9, 5.0, rng);
    const Dataset s = d.slice(5, 8);
    CHECK(s.count() == 8);
    CHECK(s.labels[0] == d.labels[5]);
    const std::size_t ps = d.sample_size();
    for (std::size_t i = 0; i < ps; ++i) CHECK(s.images.data[i] == d.images.data[5 * ps + i]);
}
