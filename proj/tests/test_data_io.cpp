#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "asnet/data_io.hpp"

using namespace asnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

SynthSpec small_spec() {
    SynthSpec s;
    s.height = 48;
    s.width = 40;
    s.min_count = 3;
    s.max_count = 12;
    s.seed = 17;
    return s;
}

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("empty and missing directories give empty datasets") {
    TempDir tmp("asnet_empty_ds");
    CHECK(Dataset::open(tmp.path, "train", true).empty());
    fs::create_directories(tmp.path / "train" / "images");
    CHECK(Dataset::open(tmp.path, "train", true).size() == 0);
}

TEST_CASE("synthetic data survives a save and load") {
    TempDir tmp("asnet_synth_ds");
    const auto samples = synth_samples(small_spec(), 5, Domain::source);
    save_samples(tmp.path / "train", samples);
    const Dataset ds = Dataset::open(tmp.path, "train", true);
    REQUIRE(ds.size() == 5);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Sample s = ds.get(i);
        CHECK(s.stem == samples[i].stem);
        CHECK(s.image.height == 48);
        CHECK(s.image.width == 40);
        REQUIRE(s.annotation);
        CHECK(s.annotation->count() == samples[i].annotation->count());
        CHECK(s.annotation->points == samples[i].annotation->points);
        for (std::size_t k = 0; k < s.image.data.size(); ++k)
            CHECK(std::fabs(s.image.data[k] - samples[i].image.data[k]) <= 0.5f / 255.0f + 1e-6f);
    }
}

TEST_CASE("missing annotation names the stem") {
    TempDir tmp("asnet_missing_ann");
    auto samples = synth_samples(small_spec(), 2, Domain::source);
    save_samples(tmp.path / "train", samples);
    fs::remove(tmp.path / "train" / "annotations" / (samples[1].stem + ".json"));
    try {
        (void)Dataset::open(tmp.path, "train", true);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(samples[1].stem) != std::string::npos);
    }
    const Dataset unlabelled = Dataset::open(tmp.path, "train", false);
    CHECK(unlabelled.size() == 2);
    CHECK_FALSE(unlabelled.get(1).annotation.has_value());
}

TEST_CASE("annotation size mismatch is rejected") {
    TempDir tmp("asnet_size_mismatch");
    auto samples = synth_samples(small_spec(), 1, Domain::source);
    samples[0].annotation->height = 64;
    save_samples(tmp.path / "train", samples);
    const Dataset ds = Dataset::open(tmp.path, "train", true);
    CHECK_THROWS_AS((void)ds.get(0), std::runtime_error);
}

TEST_CASE("roi mask is attached to every sample") {
    TempDir tmp("asnet_roi");
    save_samples(tmp.path / "test", synth_samples(small_spec(), 2, Domain::target));
    Field2D mask(48, 40, 0.0);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 40; ++x) mask.at(y, x) = 1.0;
    write_gray(tmp.path / "test" / "roi.png", mask);
    const Dataset ds = Dataset::open(tmp.path, "test", true);
    const Sample s = ds.get(0);
    REQUIRE(s.roi);
    CHECK(s.roi->at(0, 0) == 1);
    CHECK(s.roi->at(47, 0) == 0);
}

TEST_CASE("synthetic count range is respected") {
    SynthSpec spec = small_spec();
    spec.min_count = 5;
    spec.max_count = 5;
    for (const auto& s : synth_samples(spec, 10, Domain::target)) CHECK(s.annotation->count() == 5);
    spec.min_count = 0;
    spec.max_count = 30;
    for (const auto& s : synth_samples(spec, 20, Domain::source)) {
        CHECK(s.annotation->count() <= 30);
        for (const Point& p : s.annotation->points) {
            CHECK(p.x >= 0.0);
            CHECK(p.x < 40.0);
            CHECK(p.y < 48.0);
        }
    }
    CHECK(synth_samples(spec, 0, Domain::source).empty());
    spec.max_count = -1;
    CHECK_THROWS_AS(synth_samples(spec, 1, Domain::source), std::invalid_argument);
}

TEST_CASE("synthesis is deterministic and domains differ only in the background") {
    const SynthSpec spec = small_spec();
    const auto a = synth_samples(spec, 6, Domain::source);
    const auto b = synth_samples(spec, 6, Domain::source);
    const auto t = synth_samples(spec, 6, Domain::target);
    for (int i = 0; i < 6; ++i) {
        CHECK(a[i].image.data == b[i].image.data);
        CHECK(t[i].annotation->points == a[i].annotation->points);
        int inside = 0;
        int differing = 0;
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                double nearest = 1e9;
                for (const Point& p : a[i].annotation->points)
                    nearest = std::min(nearest, std::hypot(x + 0.5 - p.x, y + 0.5 - p.y));
                bool same = true;
                for (int c = 0; c < 3; ++c) same = same && a[i].image.at(c, y, x) == t[i].image.at(c, y, x);
                if (nearest <= spec.min_radius) {
                    ++inside;
                    CHECK(same);
                } else if (!same) {
                    ++differing;
                }
            }
        }
        CHECK(inside > 0);
        CHECK(differing > spec.height * spec.width / 2);
    }
}

TEST_CASE("horizontal flip is an involution") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 39.999);
    PointAnnotation ann{{}, 30, 40};
    for (int i = 0; i < 20; ++i) ann.points.push_back({u(rng), u(rng) * 0.75});
    const PointAnnotation f = flip_horizontal(ann);
    for (std::size_t i = 0; i < ann.points.size(); ++i) {
        CHECK(f.points[i].x >= 0.0);
        CHECK(f.points[i].x < 40.0);
        CHECK(f.points[i].y == ann.points[i].y);
    }
    const PointAnnotation ff = flip_horizontal(f);
    for (std::size_t i = 0; i < ann.points.size(); ++i) {
        CHECK(ff.points[i].x == doctest::Approx(ann.points[i].x).epsilon(1e-13));
        CHECK(std::floor(ff.points[i].x) == std::floor(ann.points[i].x));
    }
    const Image img = synth_samples(small_spec(), 1, Domain::target)[0].image;
    CHECK(flip_horizontal(flip_horizontal(img)).data == img.data);
    CHECK(flip_horizontal(img).at(1, 3, 0) == img.at(1, 3, 39));
}

TEST_CASE("preprocessing keeps the count and sets the output size") {
    SynthSpec spec;
    spec.height = 300;
    spec.width = 200;
    spec.seed = 4;
    const auto samples = synth_samples(spec, 4, Domain::source);
    PreprocessOptions opt;
    opt.random_flip = true;
    std::mt19937_64 rng(3);
    for (const auto& s : samples) {
        const TrainingPair p = preprocess(s, opt, &rng);
        CHECK(p.image.shape() == Shape4{1, 3, 512, 512});
        CHECK(p.target.height() == 32);
        CHECK(p.target.width() == 32);
        CHECK(std::fabs(p.target.sum() - static_cast<double>(s.annotation->count())) < 1e-6);
        CHECK(p.points.count() == s.annotation->count());
    }
    Sample unlabelled = samples[0];
    unlabelled.annotation.reset();
    CHECK_THROWS_AS(preprocess(unlabelled, opt, &rng), std::invalid_argument);
    opt.input_size = 500;
    CHECK_THROWS_AS(preprocess(samples[0], opt, &rng), std::invalid_argument);
}

TEST_CASE("density binary format") {
    SUBCASE("2x2 round trip is bit exact") {
        const Field2D m(2, 2, {0.25, 1.5, -3.0, 1e-7});
        const auto bytes = encode_density(m);
        CHECK(bytes.size() == kDensityHeaderBytes + 16);
        CHECK(std::memcmp(bytes.data(), "ASDM", 4) == 0);
        CHECK(bytes[4] == 1);
        const Field2D d = decode_density(bytes);
        for (int i = 0; i < 4; ++i) CHECK(d.values()[i] == static_cast<double>(static_cast<float>(m.values()[i])));
    }
    SUBCASE("32x32 file size and little-endian header") {
        Field2D m(32, 32);
        std::mt19937_64 rng(5);
        for (double& v : m.values()) v = static_cast<float>(std::uniform_real_distribution<double>()(rng));
        TempDir tmp("asnet_density_fmt");
        const fs::path p = tmp.path / "d.asdm";
        write_density(p, m);
        CHECK(fs::file_size(p) == 16 + 4096);
        CHECK(read_density(p) == m);
        const auto bytes = encode_density(m);
        CHECK(bytes[8] == 32);
        CHECK(bytes[9] == 0);
        CHECK(bytes[12] == 32);
    }
    SUBCASE("malformed input") {
        auto bytes = encode_density(Field2D(3, 3, 1.0));
        const auto code = [](std::vector<std::uint8_t> b) {
            try {
                (void)decode_density(b);
            } catch (const DensityFormatError& e) {
                return static_cast<int>(e.code());
            }
            return -1;
        };
        CHECK(code(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1)) ==
              static_cast<int>(DensityFormatErrc::truncated));
        CHECK(code(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)) ==
              static_cast<int>(DensityFormatErrc::truncated));
        auto trailing = bytes;
        trailing.push_back(0);
        CHECK(code(trailing) == static_cast<int>(DensityFormatErrc::trailing_bytes));
        auto magic = bytes;
        magic[0] = 'X';
        CHECK(code(magic) == static_cast<int>(DensityFormatErrc::bad_magic));
        auto version = bytes;
        version[4] = 2;
        CHECK(code(version) == static_cast<int>(DensityFormatErrc::bad_version));
        CHECK(code(bytes) == -1);
    }
}

TEST_CASE("image tensor layout") {
    Image img(2, 3);
    img.at(2, 1, 0) = 0.75f;
    const Tensor<double> t = image_tensor<double>(img);
    CHECK(t.shape() == Shape4{1, 3, 2, 3});
    CHECK(t(0, 2, 1, 0) == 0.75);
    CHECK(t.sum() == 0.75);
}

TEST_CASE("domain names") {
    CHECK(parse_domain("source") == Domain::source);
    CHECK(to_string(Domain::target) == "target");
    CHECK_THROWS_AS(parse_domain("other"), std::invalid_argument);
}

}  // TEST_SUITE
