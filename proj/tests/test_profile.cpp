#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>

#include "dyntok/dtome.hpp"
#include "dyntok/errors.hpp"
#include "dyntok/oracle.hpp"
#include "dyntok/profile.hpp"

using namespace dyntok;

static const double kInf = std::numeric_limits<double>::infinity();

TEST_CASE("schedule kinds") {
    CHECK(schedule_kind_from_name("constant") == ScheduleKind::constant);
    CHECK(schedule_kind_from_name("linear") == ScheduleKind::linear);
    CHECK(schedule_kind_from_name("reverse_linear") == ScheduleKind::reverse_linear);
    CHECK(schedule_kind_name(ScheduleKind::linear) == "linear");
    CHECK_THROWS_AS(schedule_kind_from_name("bogus"), ConfigError);
}

TEST_CASE("schedule targets") {
    CHECK(schedule_targets({ScheduleKind::constant, 3}, 4) == std::vector<int>{3, 3, 3, 3});
    CHECK(schedule_targets({ScheduleKind::linear, 3}, 4) == std::vector<int>{6, 4, 2, 0});
    CHECK(schedule_targets({ScheduleKind::reverse_linear, 3}, 4) == std::vector<int>{0, 2, 4, 6});
    CHECK(schedule_targets({ScheduleKind::linear, 1}, 5) == std::vector<int>{2, 1, 1, 1, 0});
    CHECK(schedule_targets({ScheduleKind::reverse_linear, 1}, 5) == std::vector<int>{0, 1, 1, 1, 2});
    CHECK(schedule_targets({ScheduleKind::linear, 2}, 1) == std::vector<int>{2});
    CHECK(schedule_targets({ScheduleKind::constant, 0}, 3) == std::vector<int>{0, 0, 0});
    CHECK_THROWS_AS(schedule_targets({ScheduleKind::constant, -1}, 3), ConfigError);
    CHECK_THROWS_AS(schedule_targets({ScheduleKind::constant, 2}, 0), ConfigError);
}

TEST_CASE("all schedules spend the same total budget") {
    for (int layers = 1; layers <= 12; ++layers) {
        for (int r = 0; r <= 9; ++r) {
            int want = layers * r;
            for (ScheduleKind k : {ScheduleKind::constant, ScheduleKind::linear,
                                   ScheduleKind::reverse_linear}) {
                std::vector<int> t = schedule_targets({k, r}, layers);
                REQUIRE(static_cast<int>(t.size()) == layers);
                int sum = 0;
                for (int v : t) {
                    CHECK(v >= 0);
                    sum += v;
                }
                CHECK(sum == want);
            }
            // linear never increases along depth, reverse never decreases
            std::vector<int> lin = schedule_targets({ScheduleKind::linear, r}, layers);
            for (std::size_t i = 1; i < lin.size(); ++i) CHECK(lin[i - 1] >= lin[i]);
        }
    }
}

TEST_CASE("calibrate_layer selects the k-th largest") {
    std::vector<double> s{0.9, 0.8, 0.95, 0.2};
    CHECK(calibrate_layer(s, 2) == 0.9);
    CHECK(calibrate_layer(s, 1) == 0.95);
    CHECK(calibrate_layer(s, 3) == 0.8);
    CHECK(calibrate_layer(s, 0) == kInf);
    CHECK(calibrate_layer(s, 4) == -kInf);
    CHECK(calibrate_layer(s, 9) == -kInf);
    CHECK(calibrate_layer({}, 0) == kInf);
    CHECK(calibrate_layer({}, 1) == -kInf);
}

TEST_CASE("calibrate_layer agrees with the sorting reference") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> s(1 + rng() % 64);
        for (double& v : s) v = u(rng);
        if (it % 3 == 0 && s.size() > 2) s[1] = s[0]; // exercise ties
        for (std::size_t k = 0; k <= s.size() + 1; ++k)
            CHECK(calibrate_layer(s, k) == oracle::reference_threshold(s, k));
    }
}

TEST_CASE("pooled threshold splits the batch budget per image") {
    // two images, one merge each wanted: pool both candidate lists, take the
    // (2*1)-th largest, then select per image at that threshold
    std::vector<double> img1{0.9, 0.8};
    std::vector<double> img2{0.95, 0.2};
    std::vector<double> pool = img1;
    pool.insert(pool.end(), img2.begin(), img2.end());
    double tau = calibrate_layer(pool, 2);
    CHECK(tau == 0.9);
    auto edges_of = [](const std::vector<double>& scores) {
        EdgeSet e;
        for (std::size_t i = 0; i < scores.size(); ++i)
            e.push_back({2 * i + 1, 0, scores[i]});
        return e;
    };
    CHECK(select_edges_threshold(edges_of(img1), tau).size() == 1);
    CHECK(select_edges_threshold(edges_of(img2), tau).size() == 1);
}

TEST_CASE("profile json round trip keeps infinities and field order") {
    ThresholdProfile p;
    p.taus = {1.5, kInf, -kInf};
    p.schedule = {ScheduleKind::linear, 2};
    p.batch_size = 4;
    p.num_batches = 2;
    p.corpus_id = "corpus-a";
    std::string text = profile_to_json_text(p);
    CHECK(text.find("\"inf\"") != std::string::npos);
    CHECK(text.find("\"-inf\"") != std::string::npos);
    std::size_t pv = text.find("\"version\"");
    std::size_t pt = text.find("\"taus\"");
    std::size_t ps = text.find("\"schedule\"");
    std::size_t pb = text.find("\"batch_size\"");
    std::size_t pn = text.find("\"num_batches\"");
    std::size_t pc = text.find("\"corpus_id\"");
    std::size_t pm = text.find("\"similarity\"");
    REQUIRE(pv != std::string::npos);
    CHECK(pv < pt);
    CHECK(pt < ps);
    CHECK(ps < pb);
    CHECK(pb < pn);
    CHECK(pn < pc);
    CHECK(pc < pm);

    ThresholdProfile q = profile_from_json_text(text);
    CHECK(q.taus.size() == 3);
    CHECK(q.taus[0] == 1.5);
    CHECK(q.taus[1] == kInf);
    CHECK(q.taus[2] == -kInf);
    CHECK(q.schedule.kind == ScheduleKind::linear);
    CHECK(q.schedule.r_bar == 2);
    CHECK(q.batch_size == 4);
    CHECK(q.num_batches == 2);
    CHECK(q.corpus_id == "corpus-a");
    CHECK(q.similarity == "cosine-headmean");
}

TEST_CASE("profile json rejects bad input") {
    ThresholdProfile p;
    p.taus = {0.5};
    std::string good = profile_to_json_text(p);

    std::string wrong_version = good;
    wrong_version.replace(wrong_version.find(": 1"), 3, ": 9");
    CHECK_THROWS_AS(profile_from_json_text(wrong_version), SchemaError);

    CHECK_THROWS_AS(profile_from_json_text("{}"), SchemaError);
    CHECK_THROWS_AS(profile_from_json_text("{\"version\":1}"), SchemaError);
    CHECK_THROWS_AS(profile_from_json_text("not json at all"), SchemaError);
    CHECK_THROWS_AS(
        profile_from_json_text(
            "{\"version\":1,\"taus\":[\"huge\"],\"schedule\":{\"kind\":\"constant\","
            "\"r_bar\":1},\"batch_size\":1,\"num_batches\":1,\"corpus_id\":\"\","
            "\"similarity\":\"cosine-headmean\"}"),
        SchemaError);
}

TEST_CASE("profile file io") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "dyntok_profile_test";
    fs::create_directories(dir);
    fs::path file = dir / "p.json";

    ThresholdProfile p;
    p.taus = {0.25, kInf};
    p.schedule = {ScheduleKind::constant, 1};
    p.batch_size = 2;
    p.num_batches = 1;
    p.corpus_id = "x";
    save_profile(p, file.string());
    ThresholdProfile q = load_profile(file.string());
    CHECK(q.taus == p.taus);
    CHECK_THROWS_AS(load_profile((dir / "missing.json").string()), IoError);
    fs::remove_all(dir);
}
