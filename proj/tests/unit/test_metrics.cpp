#include <doctest.h>

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "mudseg/error.hpp"
#include "mudseg/metrics.hpp"
#include "oracles.hpp"

using namespace mudseg;
using namespace mudseg::testing;

namespace {

ClassMask filled(int w, int h, ClassCode c) { return ClassMask(w, h, c); }

/// 100x100 clay frame; truth has 1000 silt and 1000 pore pixels, prediction recovers
/// `silt_hit` and `pore_hit` of them and labels the rest clay.
std::pair<ClassMask, ClassMask> ratio_fixture(int silt_hit, int pore_hit) {
    ClassMask truth(100, 100), pred(100, 100);
    for (int i = 0; i < 1000; ++i) {
        truth.samples()[static_cast<std::size_t>(i)] = 1;
        truth.samples()[static_cast<std::size_t>(5000 + i)] = 2;
        if (i < silt_hit) pred.samples()[static_cast<std::size_t>(i)] = 1;
        if (i < pore_hit) pred.samples()[static_cast<std::size_t>(5000 + i)] = 2;
    }
    return {pred, truth};
}

}  // namespace

TEST_CASE("confusion tallies") {
    Xoshiro256 rng(1);
    const auto a = random_classes(9, 9, rng);
    const auto same = confusion(a, a);
    for (int t = 0; t < 3; ++t) {
        for (int p = 0; p < 3; ++p) {
            if (t != p) CHECK(same.counts[t][p] == 0);
        }
    }
    const auto cm = confusion(filled(10, 1, ClassCode::Clay), filled(10, 1, ClassCode::Pore));
    CHECK(cm.counts[2][0] == 10);
    CHECK(cm.total() == 10);
    CHECK_THROWS_AS(confusion(ClassMask(3, 3), ClassMask(3, 4)), InvalidArgument);

    for (int k = 0; k < 20; ++k) {
        const auto p = random_classes(12, 7, rng);
        const auto t = random_classes(12, 7, rng);
        const auto c = confusion(p, t);
        for (int cls = 0; cls < 3; ++cls) {
            std::uint64_t row = 0;
            for (int q = 0; q < 3; ++q) row += c.counts[cls][q];
            const auto n = static_cast<std::uint64_t>(std::count(t.samples().begin(), t.samples().end(), cls));
            CHECK(row == n);
        }
    }
}

TEST_CASE("8x8 hand-counted fixture") {
    // Truth: rows 0-3 silt, rows 4-7 pore. Prediction: rows 0-2 silt, row 3 clay, rows 4-5 pore, rows 6-7 clay.
    ClassMask truth(8, 8), pred(8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            truth.set(x, y, y < 4 ? ClassCode::Silt : ClassCode::Pore);
            pred.set(x, y, y < 3 ? ClassCode::Silt : (y == 4 || y == 5) ? ClassCode::Pore : ClassCode::Clay);
        }
    }
    const auto cm = confusion(pred, truth);
    CHECK(cm.correct() == 40);
    CHECK(pixel_accuracy(cm) == doctest::Approx(40.0 / 64));
    CHECK(*class_iou(cm, ClassCode::Silt) == doctest::Approx(24.0 / 32));
    CHECK(*class_iou(cm, ClassCode::Pore) == doctest::Approx(16.0 / 32));
    CHECK(*class_iou(cm, ClassCode::Clay) == 0.0);

    // 48 of 64 correct gives 0.75.
    for (int x = 0; x < 8; ++x) pred.set(x, 6, ClassCode::Pore);
    CHECK(pixel_accuracy(confusion(pred, truth)) == 0.75);
}

TEST_CASE("overlap 2 of union 6 is one third") {
    ClassMask pred(8, 8), truth(8, 8);
    for (int x = 0; x < 4; ++x) pred.set(x, 0, ClassCode::Silt);
    for (int x = 2; x < 6; ++x) truth.set(x, 0, ClassCode::Silt);
    const auto cm = confusion(pred, truth);
    CHECK(*class_iou(cm, ClassCode::Silt) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_FALSE(class_iou(cm, ClassCode::Pore));
    CHECK(*class_dice(cm, ClassCode::Silt) == doctest::Approx(0.5));
}

TEST_CASE("identical and fully wrong masks") {
    Xoshiro256 rng(2);
    const auto a = random_classes(10, 10, rng);
    CHECK(pixel_accuracy(confusion(a, a)) == 1.0);
    for (ClassCode c : {ClassCode::Clay, ClassCode::Silt, ClassCode::Pore}) CHECK(*class_iou(confusion(a, a), c) == 1.0);
    CHECK(pixel_accuracy(confusion(filled(4, 4, ClassCode::Silt), filled(4, 4, ClassCode::Pore))) == 0.0);
    CHECK(*class_iou(confusion(filled(4, 4, ClassCode::Silt), filled(4, 4, ClassCode::Pore)), ClassCode::Silt) == 0.0);
}

TEST_CASE("IoU is symmetric and never exceeds Dice") {
    Xoshiro256 rng(3);
    for (int k = 0; k < 300; ++k) {
        const auto p = random_classes(8, 8, rng);
        const auto t = random_classes(8, 8, rng);
        const auto pt = confusion(p, t);
        const auto tp = confusion(t, p);
        for (ClassCode c : {ClassCode::Clay, ClassCode::Silt, ClassCode::Pore}) {
            CHECK(class_iou(pt, c) == class_iou(tp, c));
            if (auto j = class_iou(pt, c)) CHECK(*j <= *class_dice(pt, c) + 1e-15);
        }
        std::uint64_t diag = 0;
        for (ClassCode c : {ClassCode::Clay, ClassCode::Silt, ClassCode::Pore}) diag += pt.true_positive(c);
        CHECK(pixel_accuracy(pt) == static_cast<double>(diag) / static_cast<double>(pt.total()));
    }
}

TEST_CASE("evaluate_set aggregation") {
    CHECK_THROWS_AS(evaluate_set({}), InvalidArgument);

    auto [p1, t1] = ratio_fixture(800, 1000);
    auto [p2, t2] = ratio_fixture(600, 1000);
    ClassMask clay_only(100, 100);
    std::vector<ScoredPair> pairs{{&p1, &t1, "a"}, {&p2, &t2, "b"}, {&clay_only, &clay_only, "c"}};
    const auto r = evaluate_set(pairs);
    CHECK(*r.mean_iou[1] == doctest::Approx(0.7));
    CHECK(*r.mean_iou[2] == doctest::Approx(1.0));
    CHECK_FALSE(r.images[2].iou[1]);
    CHECK(r.true_positive_images[1] == 2);

    std::vector<ScoredPair> reversed(pairs.rbegin(), pairs.rend());
    const auto r2 = evaluate_set(reversed);
    for (int c = 0; c < 3; ++c) CHECK(*r2.mean_iou[c] == doctest::Approx(*r.mean_iou[c]).epsilon(1e-15));
    CHECK(r2.overall_pixel_accuracy == r.overall_pixel_accuracy);

    const auto pooled = evaluate_set(pairs, Aggregation::PooledPixels);
    CHECK(*pooled.mean_iou[1] == doctest::Approx(1400.0 / 2000.0));
}

TEST_CASE("table row 6-1 ratios echo to three decimals") {
    auto [pred, truth] = ratio_fixture(892, 729);
    const auto r = evaluate_set({{&pred, &truth, "6-1"}});
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << *r.images[0].iou[1] << ' ' << *r.images[0].iou[2];
    CHECK(os.str() == "0.892 0.729");
}

TEST_CASE("json and csv reports agree") {
    auto [p1, t1] = ratio_fixture(333, 777);
    ClassMask clay(100, 100);
    const auto r = evaluate_set({{&p1, &t1, "x"}, {&clay, &clay, "y"}});
    const auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j["aggregation"] == "per_image_mean");
    CHECK(j["images"][1]["iou_silt"].is_null());
    std::istringstream csv(report_to_csv(r));
    std::string line;
    std::getline(csv, line);
    CHECK(line == kReportCsvHeader);
    for (int i = 0; i < 2; ++i) {
        std::getline(csv, line);
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        REQUIRE(cells.size() == 5);
        const auto& ji = j["images"][static_cast<std::size_t>(i)];
        CHECK(cells[0] == ji["image"]);
        const char* keys[] = {"iou_clay", "iou_silt", "iou_pore"};
        for (int c = 0; c < 3; ++c) {
            if (ji[keys[c]].is_null()) {
                CHECK(cells[static_cast<std::size_t>(c + 1)].empty());
            } else {
                CHECK(std::stod(cells[static_cast<std::size_t>(c + 1)]) == ji[keys[c]].get<double>());
            }
        }
        CHECK(std::stod(cells[4]) == ji["pixel_accuracy"].get<double>());
    }
    EvalReport empty;
    CHECK_THROWS_AS(report_to_json(empty), InvalidArgument);
}
