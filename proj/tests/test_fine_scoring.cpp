#include <doctest.h>

#include <random>

#include "asnet/fine_scoring.hpp"
#include "asnet/netspec.hpp"
#include "oracles.hpp"

using namespace asnet;

namespace {

Field2D map2(double a, double b, double c, double d) { return Field2D(2, 2, {a, b, c, d}); }

}  // namespace

TEST_SUITE("fine_scoring") {

TEST_CASE("image score") {
    CHECK(image_score(map2(0.2, 0.4, 0.6, 0.4)) == 1);
    CHECK(image_score(Field2D(3, 3, 0.9)) == 0);
    CHECK(image_score(Field2D(3, 3, 0.5)) == 0);
    CHECK(image_score(Field2D(3, 3, 0.6), 0.7) == 1);
}

TEST_CASE("pixel score on a 2x2 map doubled") {
    const BinaryMap s = pixel_score(map2(0.2, 0.6, 0.4, 0.8), 4, 4);
    const oracle::Bits want = {{1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}};
    CHECK(oracle::bits(s) == want);
}

TEST_CASE("constant map has no significant pixels") {
    const BinaryMap s = pixel_score(Field2D(3, 3, 0.37), 12, 12);
    for (auto v : s.values) CHECK(v == 0);
    for (int k = 1; k < 100; ++k) {
        const double v = k / 100.0;
        for (int n : {2, 3, 4, 7}) {
            CHECK(oracle::bits(pixel_score(Field2D(n, n, v), 4 * n, 4 * n)) ==
                  oracle::bits(BinaryMap(4 * n, 4 * n, 0)));
            const auto ppx = patch_pixel_score(std::vector<DiscriminationMap>(4, Field2D(n, n, v)), n, n);
            for (const auto& p : ppx)
                for (auto b : p.values) CHECK(b == 0);
        }
    }
}

TEST_CASE("unit scale is pure thresholding at the mean") {
    const Field2D m(2, 3, {0.1, 0.9, 0.5, 0.3, 0.7, 0.5});
    CHECK(oracle::bits(pixel_score(m, 2, 3)) == oracle::Bits{{1, 0, 0}, {1, 0, 0}});
    CHECK(oracle::bits(pixel_score(m, 2, 3, 0.6)) == oracle::Bits{{1, 0, 1}, {1, 0, 1}});
}

TEST_CASE("patch score") {
    CHECK(patch_score({Field2D(2, 2, 0.3), Field2D(2, 2, 0.7)}) == std::vector<std::uint8_t>{1, 0});
    SUBCASE("soft rule thresholds at the mean of patch means") {
        const auto s = patch_score({Field2D(2, 2, 0.6), Field2D(2, 2, 0.8), Field2D(2, 2, 0.9), Field2D(2, 2, 0.7)},
                                   0.5, PatchRule::soft);
        CHECK(s == std::vector<std::uint8_t>{1, 0, 0, 1});
    }
}

TEST_CASE("patch-pixel thresholds are per patch") {
    // Patch 0 has a low mean, patch 1 a high one; each still splits around its own mean.
    const std::vector<Field2D> o2 = {map2(0.1, 0.3, 0.1, 0.3), map2(0.7, 0.9, 0.9, 0.7)};
    const auto p = patch_pixel_score(o2, 2, 2);
    CHECK(oracle::bits(p[0]) == oracle::Bits{{1, 0}, {1, 0}});
    CHECK(oracle::bits(p[1]) == oracle::Bits{{1, 0}, {0, 1}});
}

TEST_CASE("S = 1 patch-pixel equals the pixel score") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 50; ++t) {
        const Field2D o = oracle::random_disc_map(rng, 3, 3);
        const auto p = patch_pixel_score({o}, 16, 16);
        CHECK(assemble_patch_maps(p, 1) == pixel_score(o, 16, 16));
    }
}

TEST_CASE("adding a constant leaves soft scores unchanged") {
    std::mt19937_64 rng(32);
    for (int t = 0; t < 50; ++t) {
        // Dyadic values keep the shifted means exact.
        Field2D o_lattice = oracle::random_disc_map(rng, 2, 2);
        for (double& v : o_lattice.values()) v = std::round(v * 8) / 8;
        Field2D s_lattice = o_lattice;
        for (double& v : s_lattice.values()) v += 0.25;
        CHECK(pixel_score(o_lattice, 8, 8) == pixel_score(s_lattice, 8, 8));
        CHECK(patch_pixel_score({o_lattice}, 8, 8) == patch_pixel_score({s_lattice}, 8, 8));
    }
}

TEST_CASE("scores are block constant at the discriminator resolution") {
    std::mt19937_64 rng(33);
    const Field2D o = oracle::random_disc_map(rng, 2, 2);
    const BinaryMap s = pixel_score(o, 16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) CHECK(s.at(y, x) == s.at((y / 8) * 8, (x / 8) * 8));
}

TEST_CASE("non-integer upsampling follows the floor rule") {
    const Field2D o(3, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8});
    const Field2D u = upsample_nearest(o, 8, 8);
    CHECK(oracle::grid(u) == oracle::replicate(oracle::grid(o), 8, 8));
    CHECK_THROWS_AS(upsample_nearest(o, 2, 8), std::invalid_argument);
}

TEST_CASE("compute_scores agrees with the oracle on random maps") {
    std::mt19937_64 rng(34);
    std::uniform_int_distribution<int> sdist(1, 4);
    for (int t = 0; t < 200; ++t) {
        const int s = sdist(rng);
        const int h = 8 * s;
        const int w = 8 * s;
        const Field2D o1 = oracle::random_disc_map(rng, 2 + t % 2, 2 + t % 2);
        std::vector<Field2D> o2;
        for (int j = 0; j < s * s; ++j) o2.push_back(oracle::random_disc_map(rng, 2, 2));
        const ScoreSet sc = compute_scores(o1, o2, h, w, s);
        CHECK(sc.s_img == oracle::image_score(oracle::grid(o1), 0.5));
        std::vector<oracle::Grid> g2;
        for (const auto& m : o2) g2.push_back(oracle::grid(m));
        const auto want_patch = oracle::patch_score(g2, 0.5);
        CHECK(std::vector<int>(sc.s_patch.begin(), sc.s_patch.end()) == want_patch);
        CHECK(oracle::bits(sc.s_pix) == oracle::pixel_score(oracle::grid(o1), h, w));
        CHECK(oracle::bits(sc.s_ppx) == oracle::patch_pixel_score(g2, h, w, s));
    }
}

TEST_CASE("assembly places patches row-major") {
    std::vector<BinaryMap> p(4, BinaryMap(2, 2, 0));
    p[1] = BinaryMap(2, 2, 1);
    const BinaryMap m = assemble_patch_maps(p, 2);
    CHECK(oracle::bits(m) == oracle::Bits{{0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    CHECK_THROWS_AS(assemble_patch_maps(p, 3), std::invalid_argument);
}

TEST_CASE("score sets contain only zeros and ones") {
    std::mt19937_64 rng(35);
    const Field2D o1 = oracle::random_disc_map(rng, 3, 3);
    std::vector<Field2D> o2;
    for (int j = 0; j < 16; ++j) o2.push_back(oracle::random_disc_map(rng, 3, 3));
    const ScoreSet s = compute_scores(o1, o2, 32, 32, 4);
    CHECK(s.s_patch.size() == 16);
    CHECK(s.s_pix.height == 32);
    CHECK(s.s_ppx.width == 32);
    for (auto v : s.s_pix.values) CHECK(v <= 1);
    for (auto v : s.s_ppx.values) CHECK(v <= 1);
    CHECK_THROWS_AS(compute_scores(o1, o2, 30, 32, 4), std::invalid_argument);
    o2.pop_back();
    CHECK_THROWS_AS(compute_scores(o1, o2, 32, 32, 4), std::invalid_argument);
}

}  // TEST_SUITE
