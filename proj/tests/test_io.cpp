#include "ltgs/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace ltgs;

namespace {

std::filesystem::path tmp_dir() {
    auto p = std::filesystem::temp_directory_path() / "ltgs_io_test";
    std::filesystem::create_directories(p);
    return p;
}

SplatSet random_splats(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1, 1);
    SplatSet s;
    for (int i = 0; i < n; ++i) {
        Quat q(uni(rng), uni(rng), uni(rng), uni(rng));
        q.normalize();
        std::array<double, 48> c{};
        for (auto& v : c) v = uni(rng);
        s.push_back(Vec3(uni(rng), uni(rng), uni(rng)), q,
                    Vec3(uni(rng), uni(rng), uni(rng)), uni(rng), c, i % 4);
    }
    return s;
}

}  // namespace

TEST_CASE("io: splat ply round-trips bit-exactly") {
    const auto dir = tmp_dir();
    const auto s = random_splats(37, 11);
    io::save_splats(dir / "s.ply", s);
    const auto r = io::load_splats(dir / "s.ply");
    REQUIRE(r.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(r.positions[i] == s.positions[i]);
        CHECK(r.rotations[i].coeffs() == s.rotations[i].coeffs());
        CHECK(r.log_scales[i] == s.log_scales[i]);
        CHECK(r.logit_opacities[i] == s.logit_opacities[i]);
        CHECK(r.sh_coeffs[i] == s.sh_coeffs[i]);
        CHECK(r.labels[i] == s.labels[i]);
    }
    // Saving twice produces identical bytes.
    io::save_splats(dir / "s2.ply", s);
    CHECK(io::read_text(dir / "s.ply") == io::read_text(dir / "s2.ply"));
}

TEST_CASE("io: splat ply rejects foreign layouts") {
    const auto dir = tmp_dir();
    io::write_text(dir / "bad.ply",
                   "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
                   "property float x\nend_header\n");
    CHECK_THROWS(io::load_splats(dir / "bad.ply"));
    CHECK_THROWS(io::load_splats(dir / "does_not_exist.ply"));
}

TEST_CASE("io: tensor containers round-trip") {
    const auto dir = tmp_dir();
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> uni(0, 1);

    Image img(9, 7, 3);
    for (auto& v : img.data) v = uni(rng);
    io::save_image(dir / "img.bin", img);
    const auto img2 = io::load_image(dir / "img.bin");
    CHECK(img2.same_dims(img));
    CHECK(img2.data == img.data);

    std::vector<float> plane(9 * 7);
    for (auto& v : plane) v = uni(rng);
    io::save_plane(dir / "plane.bin", plane, 9, 7);
    int w = 0, h = 0;
    CHECK(io::load_plane(dir / "plane.bin", &w, &h) == plane);
    CHECK(w == 9);
    CHECK(h == 7);

    LabelImage li(6, 4);
    for (auto& v : li.data) v = int32_t(rng() % 7);
    io::save_labels(dir / "labels.bin", li);
    const auto li2 = io::load_labels(dir / "labels.bin");
    CHECK(li2.width == li.width);
    CHECK(li2.height == li.height);
    CHECK(li2.data == li.data);

    // dtype mismatch is rejected.
    CHECK_THROWS(io::load_labels(dir / "img.bin"));
}

TEST_CASE("io: mask rle round-trip and hand-decoded oracle") {
    const auto dir = tmp_dir();
    Mask m(10, 4);
    for (int x = 3; x < 8; ++x) m.at(x, 1) = 1;
    m.at(0, 0) = 1;
    io::save_mask(dir / "m.txt", m);
    const auto m2 = io::load_mask(dir / "m.txt");
    CHECK(m2.width == m.width);
    CHECK(m2.height == m.height);
    CHECK(m2.data == m.data);

    // Runs alternate starting with zeros: pixel 0 set => leading "0".
    const auto text = io::read_text(dir / "m.txt");
    CHECK(text.substr(0, 15) == "ltgs-mask 10 4\n");
    CHECK(text.substr(15, 2) == "0 ");

    for (uint8_t fill : {uint8_t(0), uint8_t(1)}) {
        Mask u(5, 3, fill);
        io::save_mask(dir / "u.txt", u);
        CHECK(io::load_mask(dir / "u.txt").data == u.data);
    }
}

TEST_CASE("io: ppm preview header and quantization") {
    const auto dir = tmp_dir();
    Image img(2, 1, 3);
    img.at(0, 0, 0) = 1.5f;   // clamps to 255
    img.at(1, 0, 2) = -0.5f;  // clamps to 0
    img.at(1, 0, 1) = 0.5f;   // rounds to 128
    io::save_ppm(dir / "p.ppm", img);
    const auto text = io::read_text(dir / "p.ppm");
    REQUIRE(text.size() == 11 + 6);
    CHECK(text.substr(0, 11) == "P6\n2 1\n255\n");
    CHECK(uint8_t(text[11]) == 255);
    CHECK(uint8_t(text[12]) == 0);
    CHECK(uint8_t(text[15]) == 128);
    CHECK(uint8_t(text[16]) == 0);
}

TEST_CASE("io: camera and transform json round-trip") {
    const auto dir = tmp_dir();
    std::vector<Camera> cams;
    for (int i = 0; i < 3; ++i) {
        Camera c;
        c.width = 64;
        c.height = 48;
        c.fx = 50 + i;
        c.fy = 51 + i;
        c.cx = 32;
        c.cy = 24;
        c.pose = axis_angle_transform(Vec3(0.1 * i, 0.2, -0.1), Vec3(i, -1, 2));
        cams.push_back(c);
    }
    io::save_cameras_json(dir / "cams.json", cams);
    const auto back = io::load_cameras_json(dir / "cams.json");
    REQUIRE(back.size() == cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        CHECK((back[i].pose.R - cams[i].pose.R).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((back[i].pose.T - cams[i].pose.T).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(back[i].fx == doctest::Approx(cams[i].fx));
    }

    const auto t = axis_angle_transform(Vec3(0.3, -0.2, 0.5), Vec3(0.1, 0.2, 0.3));
    io::save_transform_json(dir / "t.json", t);
    const auto t2 = io::load_transform_json(dir / "t.json");
    CHECK((t2.R - t.R).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t2.T - t.T).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("io: file hash matches fnv-1a test vectors") {
    const auto dir = tmp_dir();
    // Published FNV-1a 64-bit values for short strings.
    io::write_text(dir / "empty.txt", "");
    CHECK(io::file_hash(dir / "empty.txt") == "cbf29ce484222325");
    io::write_text(dir / "a.txt", "a");
    CHECK(io::file_hash(dir / "a.txt") == "af63dc4c8601ec8c");
    io::write_text(dir / "foobar.txt", "foobar");
    CHECK(io::file_hash(dir / "foobar.txt") == "85944171f73967e8");
}
