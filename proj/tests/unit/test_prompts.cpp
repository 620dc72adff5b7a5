#include <doctest.h>

#include "fixtures.hpp"

#include <agarseg/prompts.hpp>

#include <set>

using namespace agarseg;
using namespace fixtures;

namespace {

RasterImage left_black_right_white(int w, int h) {
    return with_blob(w, h, kWhite, {0, 0, w / 2, h}, kBlack);
}

std::vector<PromptPoint> random_descriptors(std::mt19937& rng, std::size_t n, double spread) {
    std::uniform_real_distribution<double> ch(0.0, spread);
    std::vector<PromptPoint> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {int(i), 0, PromptLabel::Foreground, {ch(rng), ch(rng), ch(rng)}};
    return out;
}

} // namespace

TEST_CASE("grid centres follow floor((j + 0.5) * size / count)") {
    SUBCASE("one cell per pixel") {
        const auto grid = generate_grid(uniform(16, 16, {9, 9, 9}), {}, full_mask(16, 16));
        REQUIRE(grid.size() == 256);
        for (int i = 0; i < 256; ++i) {
            CHECK(grid[i].x == i % 16);
            CHECK(grid[i].y == i / 16);
            CHECK(grid[i].label == PromptLabel::Foreground);
        }
    }
    SUBCASE("2x2 grid on 32x32") {
        PromptGridConfig cfg;
        cfg.rows = cfg.cols = 2;
        const auto grid = generate_grid(uniform(32, 32, {9, 9, 9}), cfg, full_mask(32, 32));
        REQUIRE(grid.size() == 4);
        const std::pair<int, int> expected[] = {{8, 8}, {24, 8}, {8, 24}, {24, 24}};
        for (int i = 0; i < 4; ++i) {
            CHECK(grid[i].x == expected[i].first);
            CHECK(grid[i].y == expected[i].second);
        }
    }
    SUBCASE("masked-out centres are dropped") {
        CHECK(generate_grid(uniform(16, 16, {9, 9, 9}), {}, BinaryMask(16, 16)).empty());
        const auto half = generate_grid(uniform(32, 32, {9, 9, 9}), {}, rect_mask(32, 32, {0, 0, 16, 32}));
        CHECK(half.size() == 128);
    }
    SUBCASE("count never exceeds rows x cols; equality iff all centres are foreground") {
        std::mt19937 rng(5);
        for (int trial = 0; trial < 30; ++trial) {
            PromptGridConfig cfg;
            cfg.rows = 1 + trial % 7;
            cfg.cols = 1 + trial % 5;
            const int w = 3 + trial, h = 4 + trial % 9;
            const BinaryMask fg = random_mask(rng, w, h, 0.7);
            const auto grid = generate_grid(random_image(rng, w, h), cfg, fg);
            std::size_t centres_in_fg = 0;
            for (int i = 0; i < cfg.rows; ++i)
                for (int j = 0; j < cfg.cols; ++j)
                    centres_in_fg += fg.test(int(std::floor((j + 0.5) * w / cfg.cols)),
                                             int(std::floor((i + 0.5) * h / cfg.rows)));
            CHECK(grid.size() <= std::size_t(cfg.rows * cfg.cols));
            CHECK(grid.size() == centres_in_fg);
        }
    }
    SUBCASE("invalid config") {
        PromptGridConfig cfg;
        cfg.patch_size = 4;
        CHECK_THROWS_AS(generate_grid(uniform(4, 4, {}), cfg, full_mask(4, 4)), Error);
        CHECK_THROWS_AS(generate_grid(uniform(4, 4, {}), {}, full_mask(3, 4)), Error);
    }
}

TEST_CASE("compute_descriptor") {
    const RasterImage flat = uniform(9, 9, {10, 20, 30});
    for (auto [x, y] : {std::pair{0, 0}, {4, 4}, {8, 3}}) {
        const Descriptor d = compute_descriptor(flat, x, y, 7);
        CHECK(d[0] == 10.0);
        CHECK(d[1] == 20.0);
        CHECK(d[2] == 30.0);
    }

    std::mt19937 rng(2);
    const RasterImage noisy = random_image(rng, 5, 5);
    const Descriptor one = compute_descriptor(noisy, 2, 3, 1);
    CHECK(one[0] == noisy.at(2, 3).r);
    CHECK(one[1] == noisy.at(2, 3).g);
    CHECK(one[2] == noisy.at(2, 3).b);

    RasterImage row(3, 1);
    row.at(0, 0) = {0, 0, 0};
    row.at(1, 0) = {30, 30, 30};
    row.at(2, 0) = {60, 60, 60};
    const Descriptor mid = compute_descriptor(row, 1, 0, 3);
    CHECK(mid[0] == doctest::Approx(30.0));
    CHECK(mid[2] == doctest::Approx(30.0));

    // Clipped window at the corner: mean of the 2x2 in-bounds pixels.
    RasterImage corner = uniform(4, 4, {0, 0, 0});
    corner.at(0, 0) = {40, 0, 0};
    CHECK(compute_descriptor(corner, 0, 0, 3)[0] == doctest::Approx(10.0));

    CHECK_THROWS_AS(compute_descriptor(flat, 9, 0, 3), Error);
    CHECK_THROWS_AS(compute_descriptor(flat, 0, 0, 2), Error);
}

TEST_CASE("greedy dedup") {
    SUBCASE("uniform image keeps exactly one prompt for any threshold") {
        const RasterImage img = uniform(40, 30, {120, 80, 40});
        const auto grid = generate_grid(img, {}, full_mask(40, 30));
        for (double t : {0.0, 0.5, 12.0, 441.68}) {
            const PromptSet s = dedup_prompts(grid, t);
            CHECK(s.kept.size() == 1);
            CHECK(s.source_index == std::vector<std::size_t>{0});
            CHECK(s.generated_count == 256);
        }
    }
    SUBCASE("two-tone image keeps one prompt per tone") {
        // k = 1 on 32x32: centres sit at odd x, none straddles the x = 16 edge.
        PromptGridConfig cfg;
        cfg.patch_size = 1;
        auto grid = generate_grid(left_black_right_white(32, 32), cfg, full_mask(32, 32));
        PromptSet s = dedup_prompts(grid, 10.0);
        REQUIRE(s.kept.size() == 2);
        CHECK(s.source_index == std::vector<std::size_t>{0, 8});
        CHECK(s.kept[0].descriptor[0] == 0.0);
        CHECK(s.kept[1].descriptor[0] == 255.0);

        // k = 3 on 64x64: centres at x = 4j + 2, windows end at 31 / start at 33.
        cfg.patch_size = 3;
        grid = generate_grid(left_black_right_white(64, 64), cfg, full_mask(64, 64));
        s = dedup_prompts(grid, 10.0);
        CHECK(s.kept.size() == 2);
    }
    SUBCASE("threshold zero keeps every distinct descriptor") {
        std::vector<PromptPoint> distinct;
        for (int i = 0; i < 50; ++i) distinct.push_back({i, 0, PromptLabel::Foreground, {double(i), 0.0, 0.0}});
        CHECK(dedup_prompts(distinct, 0.0).kept.size() == 50);
    }
    SUBCASE("max-distance sentinel keeps one") {
        std::mt19937 rng(4);
        CHECK(dedup_prompts(random_descriptors(rng, 100, 255.0), kMaxRgbDistance).kept.size() == 1);
    }
    SUBCASE("empty input") {
        const PromptSet s = dedup_prompts({}, 12.0);
        CHECK(s.kept.empty());
        CHECK(s.generated_count == 0);
    }
    SUBCASE("negative threshold is rejected") { CHECK_THROWS_AS(dedup_prompts({}, -1.0), Error); }
    SUBCASE("greedy certificate on random sequences") {
        std::mt19937 rng(99);
        for (int trial = 0; trial < 200; ++trial) {
            const auto input = random_descriptors(rng, 1 + trial % 64, 60.0);
            const double thresh = (trial % 10) * 4.0;
            const PromptSet s = dedup_prompts(input, thresh);
            std::string why;
            CHECK_MESSAGE(greedy_certificate(input, s.source_index, thresh, &why), why);
            for (std::size_t k = 0; k < s.kept.size(); ++k) CHECK(s.kept[k] == input[s.source_index[k]]);
        }
    }
}

TEST_CASE("centroid dedup") {
    // Three clusters along the red axis; chains within each cluster are < 5 apart.
    std::vector<PromptPoint> input;
    for (double base : {0.0, 100.0, 200.0})
        for (double off : {0.0, 3.0, 6.0}) input.push_back({int(input.size()), 0, PromptLabel::Foreground, {base + off, 0, 0}});
    const PromptSet s = dedup_prompts_centroid(input, 4.0);
    REQUIRE(s.kept.size() == 3);
    // Representative is the member nearest the cluster mean (base + 3).
    CHECK(s.source_index == std::vector<std::size_t>{1, 4, 7});

    // Single linkage: a chain of small steps forms one cluster.
    std::vector<PromptPoint> chain;
    for (int i = 0; i < 10; ++i) chain.push_back({i, 0, PromptLabel::Foreground, {i * 3.0, 0, 0}});
    CHECK(dedup_prompts_centroid(chain, 3.0).kept.size() == 1);
    CHECK(dedup_prompts(chain, 3.0).kept.size() == 5);

    PromptGridConfig cfg;
    cfg.dedup_threshold = 4.0;
    cfg.mode = DedupMode::Centroid;
    CHECK(dedup_prompts(input, cfg).source_index == s.source_index);
}

TEST_CASE("merge_custom_prompts") {
    const RasterImage img = uniform(10, 10, {50, 50, 50});
    std::vector<PromptPoint> base_points;
    for (int i = 0; i < 5; ++i) base_points.push_back({i, i, PromptLabel::Foreground, {double(i * 20), 0, 0}});
    const PromptSet base = dedup_prompts(base_points, 1.0);
    REQUIRE(base.kept.size() == 5);

    SUBCASE("empty custom list is identity") {
        const PromptSet merged = merge_custom_prompts(base, {}, 10, 10);
        CHECK(merged.kept == base.kept);
        CHECK(merged.source_index == base.source_index);
    }
    SUBCASE("customs are appended in order") {
        const auto a = make_prompt(img, 9, 9, PromptLabel::Foreground, 7);
        const auto b = make_prompt(img, 0, 9, PromptLabel::Background, 7);
        const PromptSet merged = merge_custom_prompts(base, {a, b}, 10, 10);
        REQUIRE(merged.kept.size() == 7);
        CHECK(merged.kept[5] == a);
        CHECK(merged.kept[6] == b);
        CHECK(merged.grid_count() == 5);
        CHECK(merged.custom_count() == 2);
    }
    SUBCASE("customs bypass dedup even at a kept location") {
        PromptPoint dup = base.kept[2];
        dup.label = PromptLabel::Background;
        const PromptSet merged = merge_custom_prompts(base, {dup}, 10, 10);
        CHECK(merged.kept.size() == 6);
        CHECK(merged.kept[2].label == PromptLabel::Foreground);
        CHECK(merged.kept[5].label == PromptLabel::Background);
        CHECK(merged.kept[5].x == merged.kept[2].x);
    }
    SUBCASE("out-of-bounds custom prompt") {
        try {
            merge_custom_prompts(base, {{10, 0, PromptLabel::Foreground, {}}}, 10, 10);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::OutOfBounds);
        }
        CHECK_THROWS_AS(make_prompt(img, -1, 0, PromptLabel::Foreground, 3), Error);
    }
}

TEST_CASE("prompt exchange json") {
    const std::vector<PromptPoint> prompts = {{3, 4, PromptLabel::Foreground, {}}, {0, 7, PromptLabel::Background, {}}};
    const std::string text = prompts_to_json(prompts);
    CHECK(text == R"([{"label":"fg","x":3,"y":4},{"label":"bg","x":0,"y":7}])");
    const auto back = prompts_from_json(text);
    REQUIRE(back.size() == 2);
    CHECK(back[1].label == PromptLabel::Background);
    CHECK(back[1].y == 7);

    CHECK_THROWS_AS(prompts_from_json(R"([{"x":1,"y":2,"label":"maybe"}])"), Error);
    CHECK_THROWS_AS(prompts_from_json(R"({"x":1})"), Error);
    CHECK_THROWS_AS(prompts_from_json(R"([{"x":1.5,"y":2,"label":"fg"}])"), Error);
}
