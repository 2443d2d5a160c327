#include <doctest.h>

#include <cstring>
#include <fstream>

#include "cgcv/io.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace cgcv;

namespace {

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void append_le_f32(std::string& s, float v) {
    char b[4];
    std::memcpy(b, &v, 4);
    s.append(b, 4);
}

void append_le_i32(std::string& s, int32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    s.append(b, 4);
}

}  // namespace

TEST_CASE("read_image: white P6, P5 replication, error paths") {
    ScratchDir scratch;
    SUBCASE("2x2 P6 all-255 is an all-ones image") {
        write_bytes(scratch.path("white.ppm"),
                    std::string("P6\n2 2\n255\n") + std::string(12, '\xff'));
        auto img = read_image(scratch.path("white.ppm"));
        CHECK(img.channels == 3);
        CHECK(img.height == 2);
        CHECK(img.width == 2);
        for (float v : img.data) CHECK(v == 1.0f);
    }
    SUBCASE("P5 grayscale replicates to 3 identical channels") {
        write_bytes(scratch.path("gray.pgm"),
                    std::string("P5\n2 1\n255\n") + std::string("\x40\x80", 2));
        auto img = read_image(scratch.path("gray.pgm"));
        for (int c = 0; c < 3; ++c) {
            CHECK(img.at(c, 0, 0) == doctest::Approx(64.0f / 255.0f));
            CHECK(img.at(c, 0, 1) == doctest::Approx(128.0f / 255.0f));
        }
    }
    SUBCASE("bad magic is rejected") {
        write_bytes(scratch.path("bad.ppm"), "P3\n1 1\n255\n0 0 0\n");
        CHECK_THROWS_AS(read_image(scratch.path("bad.ppm")), FormatError);
    }
    SUBCASE("truncated payload names the byte counts") {
        write_bytes(scratch.path("trunc.ppm"),
                    std::string("P6\n2 2\n255\n") + std::string(5, '\x00'));
        CHECK_THROWS_WITH_AS(read_image(scratch.path("trunc.ppm")),
                             doctest::Contains("truncated"), FormatError);
    }
    SUBCASE("16-bit maxval is rejected") {
        write_bytes(scratch.path("deep.ppm"), "P6\n1 1\n65535\n??????");
        CHECK_THROWS_AS(read_image(scratch.path("deep.ppm")), FormatError);
    }
}

TEST_CASE("ppm round trip through write_ppm/read_image") {
    ScratchDir scratch;
    auto img = oracle::random_map<float>(3, 5, 7, 160, 0.0, 1.0);
    write_ppm(img, scratch.path("rt.ppm"));
    auto back = read_image(scratch.path("rt.ppm"));
    for (size_t n = 0; n < img.data.size(); ++n)
        CHECK(back.data[n] == doctest::Approx(img.data[n]).epsilon(0.5 / 255));
}

TEST_CASE("write_flo: zero 4x4 flow is 12 header + 128 zero payload bytes") {
    ScratchDir scratch;
    FlowField<float> flow(4, 4);
    write_flo(flow, scratch.path("zero.flo"));
    const std::string bytes = read_bytes(scratch.path("zero.flo"));
    REQUIRE(bytes.size() == 12 + 128);
    for (size_t n = 12; n < bytes.size(); ++n) CHECK(bytes[n] == 0);
    float magic;
    std::memcpy(&magic, bytes.data(), 4);
    CHECK(magic == kFloMagic);
}

TEST_CASE("flo round trip is bit-exact for random flows") {
    ScratchDir scratch;
    std::mt19937 rng(161);
    std::uniform_real_distribution<float> d(-30.0f, 30.0f);
    FlowField<float> flow(6, 9);
    for (size_t n = 0; n < flow.size(); ++n) {
        flow.u[n] = d(rng);
        flow.v[n] = d(rng);
    }
    write_flo(flow, scratch.path("rt.flo"));
    auto back = read_flo(scratch.path("rt.flo"));
    CHECK(back.height == 6);
    CHECK(back.width == 9);
    CHECK(std::memcmp(back.u.data(), flow.u.data(), flow.u.size() * 4) == 0);
    CHECK(std::memcmp(back.v.data(), flow.v.data(), flow.v.size() * 4) == 0);
}

TEST_CASE("read_flo: zero magic is rejected") {
    ScratchDir scratch;
    std::string bogus;
    append_le_f32(bogus, 0.0f);
    append_le_i32(bogus, 2);
    append_le_i32(bogus, 2);
    bogus.append(32, '\0');
    write_bytes(scratch.path("bogus.flo"), bogus);
    CHECK_THROWS_AS(read_flo(scratch.path("bogus.flo")), FormatError);
}

TEST_CASE("read_flo: parses a byte-for-byte handcrafted reference file") {
    // constructed independently of write_flo, straight from the format spec
    ScratchDir scratch;
    std::string ref;
    append_le_f32(ref, 202021.25f);
    append_le_i32(ref, 2);  // width
    append_le_i32(ref, 1);  // height
    append_le_f32(ref, 1.5f);   // u(0,0)
    append_le_f32(ref, -2.0f);  // v(0,0)
    append_le_f32(ref, 0.25f);  // u(1,0)
    append_le_f32(ref, 8.0f);   // v(1,0)
    write_bytes(scratch.path("ref.flo"), ref);
    auto flow = read_flo(scratch.path("ref.flo"));
    CHECK(flow.width == 2);
    CHECK(flow.height == 1);
    CHECK(flow.u_at(0, 0) == 1.5f);
    CHECK(flow.v_at(0, 0) == -2.0f);
    CHECK(flow.u_at(1, 0) == 0.25f);
    CHECK(flow.v_at(1, 0) == 8.0f);
}

TEST_CASE("write_flo rejects non-finite flow") {
    ScratchDir scratch;
    FlowField<float> flow(2, 2);
    flow.u[1] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(write_flo(flow, scratch.path("inf.flo")), EvaluationError);
}

TEST_CASE("volume dump round trip and validation") {
    ScratchDir scratch;
    auto v = oracle::random_volume<float>(2, 3, 4, 5, 162);
    write_volume(v, scratch.path("v.cgcv"));
    auto back = read_volume(scratch.path("v.cgcv"));
    CHECK(back.h1 == 2);
    CHECK(back.w1 == 3);
    CHECK(back.h2 == 4);
    CHECK(back.w2 == 5);
    CHECK(back.data == v.data);

    const std::string bytes = read_bytes(scratch.path("v.cgcv"));
    CHECK(bytes.substr(0, 4) == "CGCV");
    write_bytes(scratch.path("bad.cgcv"), "NOPE" + bytes.substr(4));
    CHECK_THROWS_AS(read_volume(scratch.path("bad.cgcv")), FormatError);
}

TEST_CASE("checkpoint: save/load round trip preserves every tensor") {
    ScratchDir scratch;
    ModelConfig cfg = ModelConfig::toy();
    cfg.seed = 5;
    auto model = make_model<float>(cfg);
    model.gate.lambda = 0.012f;
    save_checkpoint(model, scratch.path("w.cgck"));

    const std::string bytes = read_bytes(scratch.path("w.cgck"));
    CHECK(bytes.substr(0, 4) == "CGCK");

    auto back = load_checkpoint<float>(scratch.path("w.cgck"), cfg.gate_mode,
                                       cfg.lift_enabled, cfg.radius, cfg.levels,
                                       cfg.iterations);
    auto a = param_refs(model);
    auto b = param_refs(back);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(a[i].dims == b[i].dims);
        for (size_t n = 0; n < a[i].size; ++n) CHECK(a[i].data[n] == b[i].data[n]);
    }
    CHECK(back.gate.lambda == 0.012f);
}

TEST_CASE("checkpoint: lookup geometry mismatch gives a clear error") {
    ScratchDir scratch;
    ModelConfig cfg = ModelConfig::toy();  // radius 2, levels 2
    auto model = make_model<double>(cfg);
    save_checkpoint(model, scratch.path("w.cgck"));
    CHECK_THROWS_WITH_AS(
        load_checkpoint<double>(scratch.path("w.cgck"), GateMode::Sigmoid, true,
                                4, 4, 8),
        doctest::Contains("--radius"), DimensionError);
}

TEST_CASE("png writer emits structurally valid chunks") {
    ScratchDir scratch;
    std::vector<uint8_t> rgb(3 * 9 * 5);
    for (size_t n = 0; n < rgb.size(); ++n) rgb[n] = static_cast<uint8_t>(n * 7);
    write_png_rgb(rgb, 5, 9, scratch.path("x.png"));
    const std::string bytes = read_bytes(scratch.path("x.png"));
    REQUIRE(bytes.size() > 8);
    CHECK(bytes.substr(1, 3) == "PNG");
    CHECK(bytes.find("IHDR") != std::string::npos);
    CHECK(bytes.find("IDAT") != std::string::npos);
    CHECK(bytes.rfind("IEND") == bytes.size() - 8);
}
