#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "cgcv/io.hpp"
#include "scratch.hpp"

namespace {

int run(const std::string& cmd) {
    return std::system((cmd + " > /dev/null 2>&1").c_str());
}

const std::string kCli = CGCV_CLI_PATH;

struct CliFixture {
    ScratchDir scratch;
    std::string data;

    CliFixture() {
        const std::string spec = scratch.path("spec.txt");
        std::ofstream out(spec);
        out << "width = 64\nheight = 64\nseed = 11\ncount = 1\n"
            << "motion = translation 3 1\n";
        out.close();
        data = scratch.path("data");
        REQUIRE(run(kCli + " synth --spec " + spec + " --out-dir " + data) == 0);
    }
    std::string ref() const { return data + "/pair_000_ref.ppm"; }
    std::string tgt() const { return data + "/pair_000_tgt.ppm"; }
};

}  // namespace

TEST_CASE("cli: flow with the full ablation reproduces the plain-volume path") {
    CliFixture fx;
    const std::string out = fx.scratch.path("ablated.flo");
    CHECK(run(kCli + " flow " + fx.ref() + " " + fx.tgt() +
              " --gate none --lift off --iters 2 --out " + out) == 0);
    auto flow = cgcv::read_flo(out);
    CHECK(flow.width == 64);
    CHECK(flow.height == 64);
}

TEST_CASE("cli: volume dumps both the plane image and the raw volume") {
    CliFixture fx;
    const std::string pgm = fx.scratch.path("plane.pgm");
    const std::string raw = fx.scratch.path("vol.cgcv");
    CHECK(run(kCli + " volume " + fx.ref() + " " + fx.tgt() +
              " --query 3,2 --which V --out " + pgm + " --raw " + raw) == 0);
    auto img = cgcv::read_image(pgm);
    CHECK(img.width == 8);  // 64/8 target grid
    CHECK(img.height == 8);
    auto vol = cgcv::read_volume(raw);
    CHECK(vol.h1 == 8);
    CHECK(vol.w2 == 8);
    // A-plane dump is rejected when the gate is ablated away
    CHECK(run(kCli + " volume " + fx.ref() + " " + fx.tgt() +
              " --gate none --which A --out " + pgm) != 0);
}

TEST_CASE("cli: feature dumps write one grayscale image per channel") {
    CliFixture fx;
    const std::string dir = fx.scratch.path("feat");
    CHECK(run(kCli + " features " + fx.ref() + " --which net --out-dir " + dir) ==
          0);
    auto c0 = cgcv::read_image(dir + "/net_c000.pgm");
    CHECK(c0.width == 8);
    auto c127 = cgcv::read_image(dir + "/net_c127.pgm");
    CHECK(c127.height == 8);
}

TEST_CASE("cli: config file sets options, flags override it") {
    CliFixture fx;
    const std::string cfg = fx.scratch.path("run.cfg");
    {
        std::ofstream out(cfg);
        out << "[flow]\niters = 2\ngate = softmax\n";
    }
    const std::string out = fx.scratch.path("cfg.flo");
    CHECK(run(kCli + " --config " + cfg + " flow " + fx.ref() + " " + fx.tgt() +
              " --out " + out) == 0);
    CHECK(run(kCli + " --config " + cfg + " flow " + fx.ref() + " " + fx.tgt() +
              " --gate sigmoid --out " + out) == 0);  // flag wins, still valid
    CHECK(cgcv::read_flo(out).width == 64);
}

TEST_CASE("cli: unknown flags and missing files fail with nonzero status") {
    CliFixture fx;
    CHECK(run(kCli + " flow --nonsense") != 0);
    CHECK(run(kCli + " flow missing_a.ppm missing_b.ppm --out x.flo") != 0);
    CHECK(run(kCli + " synth --spec does_not_exist.txt --out-dir x") != 0);
}
