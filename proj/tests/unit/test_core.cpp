/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: tests/unit/test_core.cpp
 *
 * Copyright 2026 The facelearn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "doctest.h"
#include "support.hpp"

#include "facelearn/core/archive.hpp"
#include "facelearn/core/config.hpp"
#include "facelearn/core/image.hpp"
#include "facelearn/core/parallel.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

using namespace facelearn;

TEST_CASE("archive round trip")
{
    testing::TempDir dir("archive");
    std::mt19937_64 rng(1);
    Archive a;
    const Eigen::MatrixXd m = testing::random_matrix(4, 7, rng, 1e3);
    const Eigen::VectorXd v = testing::random_vector(9, rng, 1e-7);
    Eigen::MatrixXi idx(2, 3);
    idx << 0, 1, 2, 30, 40, 1 << 30;
    a.put("m", m);
    a.put("v", v);
    a.put("empty", Eigen::MatrixXd(0, 5));
    a.put_indices("list", std::vector<int>{5, 0, 9});
    a.put_indices("idx", idx);
    a.put_scalar("s", -0.25);
    a.save(dir.path() / "a.arc");

    const Archive b = Archive::load(dir.path() / "a.arc");
    CHECK(b.names() == std::vector<std::string>{"empty", "idx", "list", "m", "s", "v"});
    CHECK(b.matrix("m") == m); // bit exact
    CHECK(b.vector("v") == v);
    CHECK(b.matrix("empty").rows() == 0);
    CHECK(b.matrix("empty").cols() == 5);
    CHECK(b.indices("list") == std::vector<int>{5, 0, 9});
    CHECK(b.index_matrix("idx") == idx);
    CHECK(b.scalar("s") == -0.25);
    CHECK(b.array("m").shape == std::vector<std::int64_t>{4, 7});
    // Row-major storage.
    CHECK(b.array("m").data[1] == m(0, 1));

    CHECK_THROWS_WITH(b.matrix("nope"), doctest::Contains("nope"));
    CHECK_THROWS(b.scalar("m"));
    CHECK_THROWS(b.vector("m"));
    Archive bad;
    bad.put("x", Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.5)));
    CHECK_THROWS(bad.indices("x"));
    CHECK_THROWS(bad.put_array("y", Archive::Array{{2, 2}, {1.0}}));
}

TEST_CASE("archive load errors")
{
    testing::TempDir dir("archive_bad");
    Archive a;
    a.put("m", Eigen::MatrixXd(Eigen::MatrixXd::Ones(3, 3)));
    a.save(dir.path() / "good.arc");

    std::ifstream in(dir.path() / "good.arc", std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const auto write_bytes = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir.path() / name, std::ios::binary);
        out << content;
        return dir.path() / name;
    };
    CHECK_THROWS_AS(Archive::load(dir.path() / "missing.arc"), std::runtime_error);
    CHECK_THROWS_AS(Archive::load(write_bytes("short.arc", bytes.substr(0, bytes.size() - 8))), std::runtime_error);
    std::string magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(Archive::load(write_bytes("magic.arc", magic)), std::runtime_error);
    CHECK_THROWS_AS(Archive::load(write_bytes("trailing.arc", bytes + "junk")), std::runtime_error);
}

TEST_CASE("images")
{
    testing::TempDir dir("image");
    Image img(5, 3, Eigen::Vector3d(0.1, 0.2, 0.3));
    img.set_pixel(4, 2, Eigen::Vector3d(1.0, 0.0, 0.5));
    img.at(0, 1, 2) = 0.75;
    CHECK(img.pixel(4, 2) == Eigen::Vector3d(1.0, 0.0, 0.5));
    CHECK(img.data()[(1 * 5 + 0) * 3 + 2] == 0.75);

    const Image q = quantize_8bit(img);
    CHECK(q.at(0, 0, 0) == std::round(0.1 * 255.0) / 255.0);
    CHECK(quantize_8bit(q) == q);

    for (const char* ext : {".png", ".ppm"})
    {
        const auto path = dir.path() / (std::string("img") + ext);
        write_image(img, path);
        const Image back = read_image(path);
        CHECK(back.width() == 5);
        CHECK(back.height() == 3);
        CHECK(back == q);
    }

    // Out-of-range values are clamped on write only.
    Image bright(1, 1, Eigen::Vector3d(1.7, -0.2, 0.5));
    write_png(bright, dir.path() / "clamp.png");
    CHECK(read_png(dir.path() / "clamp.png").pixel(0, 0) == Eigen::Vector3d(1.0, 0.0, 128.0 / 255.0));
    CHECK(bright.pixel(0, 0).x() == 1.7);

    CHECK_THROWS_AS(read_image(dir.path() / "img.bmp"), std::invalid_argument);
    CHECK_THROWS_AS(read_png(dir.path() / "missing.png"), std::runtime_error);
    testing::write_text(dir.path() / "fake.png", "not a png");
    CHECK_THROWS_AS(read_png(dir.path() / "fake.png"), std::runtime_error);
    testing::write_text(dir.path() / "fake.ppm", "P6\n2 2\n255\nab");
    CHECK_THROWS_AS(read_ppm(dir.path() / "fake.ppm"), std::runtime_error);
}

TEST_CASE("key-value config")
{
    std::istringstream in("# comment\n"
                          "  alpha = 0.5  \n"
                          "\n"
                          "name = hello world\n"
                          "count=12\n"
                          "flag = true\n"
                          "unused = 1\n");
    const KeyValueConfig c = KeyValueConfig::parse(in, "test.cfg");
    CHECK(c.get("alpha", 0.0) == 0.5);
    CHECK(c.get("name", std::string()) == "hello world");
    CHECK(c.get("count", 0) == 12);
    CHECK(c.get("flag", false) == true);
    CHECK(c.get("absent", 7) == 7);
    CHECK_THROWS_WITH_AS(c.reject_unknown(), doctest::Contains("unused"), ConfigError);
    CHECK(c.get("unused", 0) == 1);
    CHECK_NOTHROW(c.reject_unknown());

    // ConfigError is a precondition failure.
    const auto parse = [](const std::string& text) {
        std::istringstream s(text);
        return KeyValueConfig::parse(s, "bad.cfg");
    };
    CHECK_THROWS_WITH_AS(parse("a = 1\nno equals sign\n"), doctest::Contains("bad.cfg:2"), std::invalid_argument);
    CHECK_THROWS_AS(parse("= 3\n"), ConfigError);
    CHECK_THROWS_AS(parse("a = 1\na = 2\n"), ConfigError);
    const KeyValueConfig typed = parse("x = abc\ny = 1.5\nz = maybe\n");
    CHECK_THROWS_AS(typed.get("x", 0.0), ConfigError);
    CHECK_THROWS_AS(typed.get("y", 0), ConfigError);
    CHECK_THROWS_AS(typed.get("z", false), ConfigError);

    KeyValueConfig set;
    set.set("k", "3");
    CHECK(set.has("k"));
    CHECK(set.get("k", 0) == 3);
    CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/x.cfg"), std::runtime_error);
}

TEST_CASE("parallel_for")
{
    for (int threads : {1, 2, 8})
    {
        std::vector<int> slots(100, 0);
        parallel_for(100, threads, [&](int i) { slots[static_cast<std::size_t>(i)] += i * i; });
        for (int i = 0; i < 100; ++i)
            CHECK(slots[static_cast<std::size_t>(i)] == i * i);
    }
    std::atomic<int> calls{0};
    parallel_for(0, 4, [&](int) { ++calls; });
    CHECK(calls == 0);

    // The lowest failing index wins, whatever the scheduling.
    for (int threads : {1, 3})
    {
        std::atomic<int> done{0};
        CHECK_THROWS_WITH(parallel_for(20, threads,
                                       [&](int i) {
                                           ++done;
                                           if (i == 7 || i == 15)
                                               throw std::runtime_error("index " + std::to_string(i));
                                       }),
                          "index 7");
        CHECK(done >= 8);
    }
}
