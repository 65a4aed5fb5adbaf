#include <doctest.h>

#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "mudseg/archive.hpp"
#include "mudseg/error.hpp"
#include "mudseg/image_io.hpp"
#include "mudseg/overlay.hpp"
#include "mudseg/service.hpp"
#include "oracles.hpp"
#include "phantom.hpp"

using namespace mudseg;
using namespace mudseg::testing;
using json = nlohmann::json;

namespace {

const std::string kMeta = R"({"source_id":"demo","magnification":15000,"hfw_um":5.0})";

Bytes png_of(const Raster<std::uint8_t>& img) { return encode_png(img); }

std::string one_scale(int threshold, int median = 1, int se = 2) {
    return R"({"scales":[{"median_radius_px":)" + std::to_string(median) + R"(,"se_radius_px":)" + std::to_string(se) +
           R"(,"threshold":)" + std::to_string(threshold) +
           R"(}],"erosion_count":1,"erosion_se_radius_px":1,"reconstruct":false,"silt_ecd_min_um":0.5})";
}

std::string create(TuningService& svc, const Raster<std::uint8_t>& img, const std::string& meta = kMeta) {
    const auto r = svc.create_session(png_of(img), meta);
    REQUIRE(r.status == 201);
    return json::parse(r.body)["id"];
}

Raster<std::uint8_t> phantom_image(int size, std::uint64_t seed = 1) {
    PhantomSpec spec;
    spec.width = spec.height = size;
    spec.seed = seed;
    spec.silt_count = 2;
    spec.large_pore_count = 5;
    return make_phantom(spec).image;
}

Raster<std::uint8_t> decode(const std::string& body) {
    return decode_gray8(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

}  // namespace

TEST_CASE("tar writer round trip") {
    std::vector<ArchiveEntry> entries{{"a.txt", {'h', 'i'}}, {"b.bin", Bytes(1000, 7)}, {"empty", {}}};
    const auto tar = write_tar(entries);
    CHECK(tar.size() % 512 == 0);
    const auto back = read_tar(tar);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].name == entries[i].name);
        CHECK(back[i].data == entries[i].data);
    }
    CHECK(write_tar(entries) == tar);
    auto corrupt = tar;
    corrupt[0] ^= 1;
    CHECK_THROWS_AS(read_tar(corrupt), FormatError);
}

TEST_CASE("create session validates input and reports a histogram") {
    TuningService svc;
    Xoshiro256 rng(1);
    const auto img = random_image(31, 17, rng);
    const auto r = svc.create_session(png_of(img), kMeta);
    CHECK(r.status == 201);
    const auto j = json::parse(r.body);
    CHECK(j["width"] == 31);
    CHECK(j["height"] == 17);
    CHECK(j["pitch_um"].get<double>() == doctest::Approx(5.0 / 31));
    std::uint64_t sum = 0;
    for (const auto& b : j["histogram"]) sum += b.get<std::uint64_t>();
    CHECK(j["histogram"].size() == 256);
    CHECK(sum == 31 * 17);
    CHECK(j["histogram"][img(0, 0)].get<int>() >= 1);

    CHECK(svc.create_session(png_of(img), R"({"magnification":15000})").status == 400);
    CHECK(svc.create_session(Bytes{1, 2, 3}, kMeta).status == 400);
}

TEST_CASE("params updates: status codes, stats and monotone pore fraction") {
    TuningService svc;
    const auto id = create(svc, Raster<std::uint8_t>(40, 40, 200));
    CHECK(svc.update_params("nope", one_scale(10)).status == 404);
    CHECK(svc.update_params(id, R"({"scales":[]})").status == 422);
    CHECK(svc.update_params(id, "not json").status == 422);

    const auto r0 = svc.update_params(id, one_scale(0));
    REQUIRE(r0.status == 200);
    const auto j0 = json::parse(r0.body);
    CHECK(j0["revision"] == 1);
    CHECK(j0["stats"]["fractions"]["pore"] == 0.0);
    CHECK(r0.headers.at(kRevisionHeader) == "1");
    CHECK(j0["params"] == json::parse(one_scale(0)));

    const auto noisy = create(svc, phantom_image(128));
    double last = -1.0;
    json last_stats;
    for (int t : {20, 60, 90, 120, 160}) {
        const auto j = json::parse(svc.update_params(noisy, one_scale(t)).body);
        const double pore = j["stats"]["fractions"]["pore"];
        CHECK(pore >= last);
        last = pore;
        last_stats = j["stats"];
    }
    const auto again = json::parse(svc.update_params(noisy, one_scale(160)).body);
    CHECK(again["stats"] == last_stats);
    CHECK(again["revision"] == 6);
}

TEST_CASE("stage images") {
    TuningService svc;
    PhantomSpec spec;
    spec.width = spec.height = 96;
    spec.silt_count = 1;
    spec.large_pore_count = 3;
    const auto ph = make_phantom(spec);
    const auto id = create(svc, ph.image);
    REQUIRE(svc.update_params(id, one_scale(90)).status == 200);

    GrayImage img(96, 96, ph.image.vector(), 5.0 / 96);
    ImageMeta meta{"demo", 15000, 5.0};
    const auto direct = run_pipeline(img, meta, params_from_json(one_scale(90)));

    const auto ov = svc.get_stage(id, "1", "overlay", std::nullopt, false);
    CHECK(ov.status == 200);
    CHECK(ov.content_type == "image/png");
    const auto want = encode_png(overlay(img, direct.mask));
    CHECK(ov.body == std::string(want.begin(), want.end()));

    const auto th = svc.get_stage(id, "1", "thresholded", std::string("0"), false);
    CHECK(mismatches(decode(th.body), binary_to_gray(direct.trace.scales[0].thresholded)) == 0);
    CHECK(mismatches(decode(svc.get_stage(id, "1", "mask", std::nullopt, false).body), direct.mask) == 0);
    CHECK(mismatches(decode(svc.get_stage(id, "1", "smoothed", std::nullopt, false).body),
                     direct.trace.scales[0].smoothed) == 0);
    for (const char* s : {"enhanced", "pores", "silt"}) CHECK(svc.get_stage(id, "1", s, std::nullopt, false).status == 200);

    CHECK(svc.get_stage(id, "1", "bogus", std::nullopt, false).status == 404);
    CHECK(svc.get_stage(id, "1", "smoothed", std::string("1"), false).status == 404);
    CHECK(svc.get_stage(id, "2", "overlay", std::nullopt, false).status == 404);
    CHECK(svc.get_stage(id, "0", "overlay", std::nullopt, false).status == 404);
    CHECK(svc.get_stage(id, "x", "overlay", std::nullopt, false).status == 404);
    CHECK(svc.get_stage("missing", "1", "overlay", std::nullopt, false).status == 404);

    svc.update_params(id, one_scale(91));
    svc.update_params(id, one_scale(92));
    CHECK(svc.get_stage(id, "1", "overlay", std::nullopt, false).status == 409);
    CHECK(svc.get_stage(id, "2", "overlay", std::nullopt, false).status == 200);
    CHECK(svc.get_stage(id, "3", "overlay", std::nullopt, false).headers.at(kRevisionHeader) == "3");
}

TEST_CASE("large stages are previewed at 1024 px unless full is requested") {
    TuningService svc;
    const auto id = create(svc, Raster<std::uint8_t>(1500, 600, 180));
    REQUIRE(svc.update_params(id, one_scale(50, 0, 0)).status == 200);
    const auto preview = decode(svc.get_stage(id, "1", "pores", std::nullopt, false).body);
    CHECK(preview.width() == 1024);
    CHECK(preview.height() == 410);
    const auto full = decode(svc.get_stage(id, "1", "pores", std::nullopt, true).body);
    CHECK(full.width() == 1500);
    CHECK(full.height() == 600);
}

TEST_CASE("export archive and delete semantics") {
    TuningService svc;
    const auto img = phantom_image(64);
    const auto a = create(svc, img);
    const auto b = create(svc, img);
    CHECK(svc.export_session(a).status == 409);
    REQUIRE(svc.update_params(a, one_scale(80)).status == 200);
    const auto ex = svc.export_session(a);
    REQUIRE(ex.status == 200);
    const auto entries = read_tar(std::span(reinterpret_cast<const std::uint8_t*>(ex.body.data()), ex.body.size()));
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].name == "mask.png");
    CHECK(entries[1].name == "params.json");
    CHECK(entries[2].name == "stats.csv");
    CHECK(params_from_json(std::string(entries[1].data.begin(), entries[1].data.end())) ==
          params_from_json(one_scale(80)));
    CHECK(decode_mask(entries[0].data).width() == 64);

    CHECK(svc.delete_session(a).status == 204);
    CHECK(svc.delete_session(a).status == 404);
    CHECK(svc.update_params(a, one_scale(80)).status == 404);
    CHECK(svc.get_stage(a, "1", "overlay", std::nullopt, false).status == 404);
    CHECK(svc.update_params(b, one_scale(80)).status == 200);
}

TEST_CASE("least recently used sessions are evicted") {
    ServiceConfig cfg;
    cfg.max_sessions = 2;
    TuningService svc(cfg);
    const Raster<std::uint8_t> img(8, 8, 100);
    const auto a = create(svc, img);
    const auto b = create(svc, img);
    CHECK(svc.update_params(a, one_scale(5)).status == 200);  // touch a
    const auto c = create(svc, img);
    CHECK(svc.session_count() == 2);
    CHECK(svc.update_params(b, one_scale(5)).status == 404);
    CHECK(svc.update_params(a, one_scale(5)).status == 200);
    CHECK(svc.update_params(c, one_scale(5)).status == 200);
}

TEST_CASE("http front end") {
    TuningService svc;
    HttpServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    std::thread loop([&] { server.listen(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    const auto png = png_of(phantom_image(80));
    httplib::MultipartFormDataItems items{{"image", std::string(png.begin(), png.end()), "x.png", "image/png"},
                                          {"meta", kMeta, "", "application/json"}};
    auto created = cli.Post("/sessions", items);
    REQUIRE(created);
    CHECK(created->status == 201);
    const std::string id = json::parse(created->body)["id"];

    httplib::MultipartFormDataItems missing{{"image", std::string(png.begin(), png.end()), "x.png", "image/png"}};
    CHECK(cli.Post("/sessions", missing)->status == 400);

    auto put = cli.Put("/sessions/" + id + "/params", one_scale(80), "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    const auto stage_url = json::parse(put->body)["stage_urls"]["thresholded"][0].get<std::string>();
    auto stage = cli.Get(stage_url);
    CHECK(stage->status == 200);
    CHECK(stage->get_header_value("Content-Type") == "image/png");
    CHECK(cli.Get("/sessions/" + id + "/stages/1/overlay?full=true")->status == 200);
    CHECK(cli.Get("/sessions/" + id + "/stages/1/nope")->status == 404);
    CHECK(cli.Put("/sessions/" + id + "/params", "{}", "application/json")->status == 422);
    CHECK(cli.Get("/sessions/" + id + "/export")->status == 200);

    // Concurrent updates on separate sessions.
    auto other = cli.Post("/sessions", items);
    const std::string id2 = json::parse(other->body)["id"];
    std::vector<std::thread> workers;
    std::vector<int> statuses(8, 0);
    for (int k = 0; k < 8; ++k) {
        workers.emplace_back([&, k] {
            httplib::Client c("127.0.0.1", port);
            auto r = c.Put("/sessions/" + (k % 2 ? id : id2) + "/params", one_scale(60 + k), "application/json");
            statuses[static_cast<std::size_t>(k)] = r ? r->status : -1;
        });
    }
    for (auto& w : workers) w.join();
    for (int s : statuses) CHECK(s == 200);
    const auto rev1 = json::parse(cli.Put("/sessions/" + id + "/params", one_scale(1), "application/json")->body);
    const auto rev2 = json::parse(cli.Put("/sessions/" + id2 + "/params", one_scale(1), "application/json")->body);
    CHECK(rev1["revision"] == 6);
    CHECK(rev2["revision"] == 5);

    CHECK(cli.Delete("/sessions/" + id)->status == 204);
    CHECK(cli.Delete("/sessions/" + id)->status == 404);
    CHECK(cli.Get("/sessions/" + id + "/export")->status == 404);
    CHECK(cli.Get("/sessions/" + id2 + "/export")->status == 200);

    server.stop();
    loop.join();
}

TEST_CASE("address parsing") {
    CHECK(parse_address("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
    CHECK(parse_address(":8080").first == "127.0.0.1");
    CHECK_THROWS_AS(parse_address("localhost"), InvalidArgument);
    CHECK_THROWS_AS(parse_address("h:99999"), InvalidArgument);
}
