#include <doctest.h>

#include "fixtures.hpp"

#include <agarseg/service.hpp>

#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace agarseg;
using namespace fixtures;
using nlohmann::json;

namespace {

constexpr Rgb kWood{200, 160, 110};
constexpr Rgb kResin{40, 30, 20};
constexpr Rgb kGreen{0, 255, 0};

std::vector<std::uint8_t> png_of(const RasterImage& img) { return encode_png(img); }

/// Two resin blocks on wood: A under the single grid prompt, B elsewhere.
RasterImage two_blobs() {
    RasterImage img = with_blob(40, 20, kWood, {16, 6, 8, 8}, kResin);
    for (int y = 2; y < 9; ++y)
        for (int x = 2; x < 9; ++x) img.at(x, y) = kResin;
    return img;
}
const Rect kBlobA{16, 6, 8, 8};
const Rect kBlobB{2, 2, 7, 7};

PipelineConfig region_grow_config() {
    PipelineConfig cfg;
    cfg.background.mode = BackgroundModel::Mode::ChromaKey;
    cfg.background.key_color = kGreen;
    cfg.background.tolerance = 10;
    cfg.grid.rows = 1;
    cfg.grid.cols = 1;
    cfg.grid.patch_size = 3;
    cfg.backend = RegionGrowBackend{30.0};
    return cfg;
}

PipelineConfig threshold_config() {
    PipelineConfig cfg;
    cfg.background.mode = BackgroundModel::Mode::ChromaKey;
    cfg.background.key_color = kGreen;
    cfg.background.tolerance = 10;
    return cfg;
}

} // namespace

TEST_CASE("session creation") {
    SessionStore store;

    SUBCASE("green screen only") {
        PipelineConfig cfg = threshold_config();
        const auto created = store.create(png_of(uniform(12, 9, kGreen)), cfg);
        CHECK(created.result.final_mask.count() == 0);
        CHECK(created.id.size() == 32);
        CHECK(store.contains(created.id));
    }
    SUBCASE("two-tone fixture with the threshold backend") {
        const auto created = store.create(png_of(with_blob(24, 20, kWood, {5, 4, 6, 7}, kResin)), threshold_config());
        REQUIRE(created.result.proposals.size() == 1);
        CHECK(created.result.proposals[0].confidence == 1.0);
        CHECK(created.result.final_mask == rect_mask(24, 20, {5, 4, 6, 7}));
    }
    SUBCASE("malformed PNG") {
        const std::string junk = "not a png";
        CHECK_THROWS_AS(store.create(bytes_of(junk), threshold_config()), Error);
        CHECK(store.size() == 0);
    }
    SUBCASE("ids are unique") {
        const auto png = png_of(uniform(4, 4, kWood));
        std::set<std::string> ids;
        for (int i = 0; i < 20; ++i) ids.insert(store.create(png, threshold_config()).id);
        CHECK(ids.size() == 20);
    }
}

TEST_CASE("prompt edits") {
    SessionStore store;
    const RasterImage img = two_blobs();
    const auto id = store.create(png_of(img), region_grow_config()).id;
    REQUIRE(store.final_mask(id) == rect_mask(40, 20, kBlobA));

    SUBCASE("fg inside the retained region changes nothing") {
        const auto u = store.apply_prompt(id, 18, 8, PromptLabel::Foreground);
        CHECK(u.delta == 0);
        CHECK(u.index == 0);
    }
    SUBCASE("fg on an unsegmented blob adds exactly that blob") {
        const auto u = store.apply_prompt(id, 5, 5, PromptLabel::Foreground);
        CHECK(u.delta == 49);
        BinaryMask expected = rect_mask(40, 20, kBlobA);
        expected |= rect_mask(40, 20, kBlobB);
        CHECK(u.result.final_mask == expected);

        SUBCASE("deleting it restores the previous mask") {
            const auto d = store.delete_prompt(id, 0);
            CHECK(d.delta == -49);
            CHECK(store.final_mask(id) == rect_mask(40, 20, kBlobA));
            CHECK(store.prompt_history(id).empty());
        }
    }
    SUBCASE("bg inside the retained region removes the grown sub-region") {
        const auto u = store.apply_prompt(id, 20, 10, PromptLabel::Background);
        CHECK(u.delta == -64);
        CHECK(u.result.final_mask.count() == 0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(store.apply_prompt(id, 40, 0, PromptLabel::Foreground), Error);
        CHECK(store.prompt_history(id).empty());
        CHECK_THROWS_AS(store.delete_prompt(id, 0), Error);
        try {
            store.apply_prompt("feedface", 1, 1, PromptLabel::Foreground);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownSession);
        }
    }
    SUBCASE("replaying image and history reproduces the mask") {
        store.apply_prompt(id, 5, 5, PromptLabel::Foreground);
        store.apply_prompt(id, 30, 15, PromptLabel::Background);
        store.apply_prompt(id, 3, 3, PromptLabel::Foreground);
        store.delete_prompt(id, 1);
        const auto replay = run_segmentation(img, region_grow_config(), store.prompt_history(id));
        CHECK(encode_png(binarize(replay.result.final_mask)) == encode_png(binarize(store.final_mask(id))));
    }
    SUBCASE("sessions are isolated") {
        const auto other = store.create(png_of(img), region_grow_config()).id;
        store.apply_prompt(id, 5, 5, PromptLabel::Foreground);
        CHECK(store.prompt_history(other).empty());
        CHECK(store.final_mask(other) == rect_mask(40, 20, kBlobA));
    }
}

TEST_CASE("G-code export") {
    SessionStore store;

    SUBCASE("nothing retained removes all the wood") {
        const auto id = store.create(png_of(uniform(3, 1, kWood)), threshold_config()).id;
        REQUIRE(store.final_mask(id).count() == 0);
        const auto exp = store.export_gcode(id, MachineConfig{}, false);
        CHECK(exp.gcode.find("G1 X2.000 Y0.000 F300") != std::string::npos);
        CHECK(exp.removed_cells == 3);
        CHECK(exp.verified);
        CHECK(exp.cut_mm == 2.0);
    }
    SUBCASE("backdrop only is header and footer only") {
        const auto id = store.create(png_of(uniform(5, 4, kGreen)), threshold_config()).id;
        const auto exp = store.export_gcode(id, MachineConfig{}, false);
        CHECK(exp.removed_cells == 0);
        CHECK(exp.gcode == "G21\nG90\nM3 S10000\nG0 Z2.000\nG0 X0.000 Y0.000\nM5\n");
    }
    SUBCASE("everything retained is header and footer only") {
        PipelineConfig cfg = threshold_config();
        cfg.backend = ThresholdBackend{ThresholdBackend::Mode::Fixed, 255};
        const auto id = store.create(png_of(uniform(4, 4, kResin)), cfg).id;
        const auto exp = store.export_gcode(id, MachineConfig{}, true);
        CHECK(exp.removed_cells == 0);
        CHECK(exp.gcode == "G21\nG90\nM3 S10000\nG0 Z2.000\nG0 X0.000 Y0.000\nM5\n");
    }
    SUBCASE("removed_cells follows the simulator on every export") {
        const auto id = store.create(png_of(two_blobs()), region_grow_config()).id;
        for (double mm : {1.0, 0.5}) {
            MachineConfig m;
            m.mm_per_pixel = mm;
            const auto exp = store.export_gcode(id, m, mm < 1.0);
            const BinaryMask removed = simulate_toolpath(parse_gcode(exp.gcode), m, 40, 20).removed;
            CHECK(exp.removed_cells == removed.count());
            CHECK(exp.removed_cells == 40 * 20 - 64);
        }
        MachineConfig bad;
        bad.feed_rate = -1;
        CHECK_THROWS_AS(store.export_gcode(id, bad, false), Error);
    }
}

TEST_CASE("session evaluation") {
    SessionStore store;
    const auto id = store.create(png_of(two_blobs()), region_grow_config()).id;
    CHECK_THROWS_AS(store.evaluate(id), Error);
    store.set_truth(id, rect_mask(40, 20, kBlobA));
    const EvalReport r = store.evaluate(id);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].iou.ratio == 1.0);
    CHECK(r.grade == Grade::A);
    CHECK_THROWS_AS(store.set_truth(id, full_mask(3, 3)), Error);
}

TEST_CASE("sessions survive a restart") {
    TempDir dir;
    std::string id;
    BinaryMask before;
    {
        SessionStore store(dir.path());
        id = store.create(png_of(two_blobs()), region_grow_config()).id;
        store.apply_prompt(id, 5, 5, PromptLabel::Foreground);
        before = store.final_mask(id);
    }
    write_text(dir / "broken" / "session.json", "{");
    SessionStore reopened(dir.path());
    REQUIRE(reopened.contains(id));
    CHECK(reopened.size() == 1);
    CHECK(reopened.final_mask(id) == before);
    CHECK(reopened.prompt_history(id).size() == 1);
}

namespace {

struct LiveServer {
    SessionStore store;
    Server server{store};
    int port = 0;
    std::thread thread;

    LiveServer() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LiveServer() {
        server.stop();
        thread.join();
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

} // namespace

TEST_CASE("HTTP API") {
    std::filesystem::create_directories(std::filesystem::temp_directory_path());
    LiveServer live;
    auto cli = live.client();

    const auto health = cli.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);

    const auto png = png_of(two_blobs());
    const httplib::MultipartFormDataItems form = {
        {"image", std::string(png.begin(), png.end()), "x.png", "image/png"},
        {"config", config_to_json(region_grow_config()), "", "application/json"}};
    const auto created = cli.Post("/sessions", form);
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const json body = json::parse(created->body);
    const std::string id = body["id"];
    CHECK(body["width"] == 40);
    CHECK(body["retained_pixels"] == 64);
    const std::string decoded = base64_decode(body["mask_png_b64"].get<std::string>());
    CHECK(mask_from_image(decode_png(bytes_of(decoded))) == rect_mask(40, 20, kBlobA));

    const auto prompt = cli.Post("/sessions/" + id + "/prompts", R"({"x":5,"y":5,"label":"fg"})", "application/json");
    REQUIRE(prompt);
    CHECK(prompt->status == 200);
    const json update = json::parse(prompt->body);
    CHECK(update["delta"] == 49);
    CHECK(update.contains("mask_png_b64"));

    const auto listed = cli.Get("/sessions/" + id + "/prompts");
    REQUIRE(listed);
    CHECK(json::parse(listed->body).size() == 1);

    const auto mask = cli.Get("/sessions/" + id + "/mask.png");
    REQUIRE(mask);
    CHECK(mask->get_header_value("Content-Type") == "image/png");
    CHECK(mask_from_image(decode_png(bytes_of(mask->body))).count() == 64 + 49);

    const auto gcode = cli.Post("/sessions/" + id + "/gcode", R"({"mm_per_pixel":0.5,"optimize":true})", "application/json");
    REQUIRE(gcode);
    REQUIRE(gcode->status == 200);
    const json exp = json::parse(gcode->body);
    CHECK(exp["removed_cells"] == 40 * 20 - 113);
    CHECK(exp["verified"] == true);
    CHECK(exp["gcode"].get<std::string>().rfind("G21\n", 0) == 0);

    const auto deleted = cli.Delete("/sessions/" + id + "/prompts/0");
    REQUIRE(deleted);
    CHECK(json::parse(deleted->body)["delta"] == -49);

    TempDir dir;
    save_mask(dir / "truth.png", rect_mask(40, 20, kBlobA));
    const auto eval = cli.Get("/sessions/" + id + "/evaluation?truth=" + (dir / "truth.png").string());
    REQUIRE(eval);
    REQUIRE(eval->status == 200);
    const json report = json::parse(eval->body);
    CHECK(report["images"][0]["iou_percent"] == 100.0);
    CHECK(report["grade"] == "A");

    SUBCASE("errors are JSON with a code") {
        const auto unknown = cli.Get("/sessions/abc123/mask.png");
        REQUIRE(unknown);
        CHECK(unknown->status == 404);
        CHECK(json::parse(unknown->body)["code"] == "unknown_session");

        const auto bad_png = cli.Post("/sessions", "garbage", "image/png");
        REQUIRE(bad_png);
        CHECK(bad_png->status == 400);
        CHECK(json::parse(bad_png->body)["code"] == "decode_failure");

        const auto bad_label = cli.Post("/sessions/" + id + "/prompts", R"({"x":1,"y":1,"label":"maybe"})", "application/json");
        REQUIRE(bad_label);
        CHECK(bad_label->status == 400);

        const auto out_of_range = cli.Delete("/sessions/" + id + "/prompts/7");
        REQUIRE(out_of_range);
        CHECK(out_of_range->status == 400);
        CHECK(json::parse(out_of_range->body)["code"] == "out_of_bounds");

        const auto bad_machine = cli.Post("/sessions/" + id + "/gcode", R"({"cut_z":3})", "application/json");
        REQUIRE(bad_machine);
        CHECK(bad_machine->status == 400);
    }
    SUBCASE("concurrent sessions") {
        std::vector<std::thread> workers;
        std::vector<int> deltas(4, -1);
        std::vector<std::string> ids;
        for (int i = 0; i < 4; ++i) {
            const auto r = cli.Post("/sessions", form);
            REQUIRE(r);
            ids.push_back(json::parse(r->body)["id"]);
        }
        for (int i = 0; i < 4; ++i)
            workers.emplace_back([&, i] {
                auto c = live.client();
                const auto r = c.Post("/sessions/" + ids[i] + "/prompts", R"({"x":5,"y":5,"label":"fg"})", "application/json");
                if (r && r->status == 200) deltas[i] = json::parse(r->body)["delta"];
            });
        for (auto& w : workers) w.join();
        for (int d : deltas) CHECK(d == 49);
    }
}
