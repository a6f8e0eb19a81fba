#include "drivemon/features.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "drivemon/rng.hpp"

using namespace drivemon;
using namespace drivemon::features;

namespace {

RawRecord rec(double t, double i, double temp, Label label = Label::healthy) {
    return RawRecord{t, i, i, i, temp, label};
}

std::vector<GridPoint> grid_of(const std::vector<RawRecord>& rs, double period = 10.0) {
    return downsample(rs, period);
}

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("mean rms current") {
    CHECK(mean_rms_current(RawRecord{0, 3.0, 4.0, 5.0, 0, Label::healthy}) ==
          doctest::Approx(4.0));
}

TEST_CASE("fixed-physical normalizer endpoints and round trip") {
    const auto n = Normalizer::fixed_physical();
    CHECK(n.norm_current(0.0) == doctest::Approx(0.0));
    CHECK(n.norm_current(15.0) == doctest::Approx(1.0));
    CHECK(n.norm_temp(20.0) == doctest::Approx(0.0));
    CHECK(n.norm_temp(120.0) == doctest::Approx(1.0));
    CHECK(n.denorm_temp(n.norm_temp(77.5)) == doctest::Approx(77.5));
    CHECK(n.denorm_current(n.norm_current(9.3)) == doctest::Approx(9.3));
    CHECK(n.mode() == Normalizer::Mode::fixed_physical);
    CHECK_THROWS_AS(Normalizer::fixed_physical(5.0, 5.0, 20.0, 120.0), std::invalid_argument);
}

TEST_CASE("fitted normalizer spans the training records") {
    std::vector<RawRecord> rs{rec(0, 2.0, 40.0), rec(10, 6.0, 55.0), rec(20, 4.0, 70.0)};
    const auto n = Normalizer::fit(rs);
    CHECK(n.mode() == Normalizer::Mode::dataset_fitted);
    CHECK(n.norm_current(2.0) == doctest::Approx(0.0));
    CHECK(n.norm_current(6.0) == doctest::Approx(1.0));
    CHECK(n.norm_temp(40.0) == doctest::Approx(0.0));
    CHECK(n.norm_temp(70.0) == doctest::Approx(1.0));

    // Constant channel -> degenerate range.
    std::vector<RawRecord> flat{rec(0, 3.0, 50.0), rec(10, 3.0, 50.0)};
    CHECK_THROWS_AS(Normalizer::fit(flat), std::invalid_argument);
    CHECK_THROWS_AS(Normalizer::fit({}), std::invalid_argument);
}

TEST_CASE("downsample picks the latest record per grid slot") {
    const std::vector<RawRecord> rs{rec(0, 1, 30), rec(3, 2, 31), rec(9, 3, 32), rec(12, 4, 33)};
    const auto g = grid_of(rs);
    REQUIRE(g.size() == 2);  // grid at 0 and 10; t=12 lies beyond the last full slot
    CHECK(g[0].timestamp_s == 0.0);
    REQUIRE(g[0].record.has_value());
    CHECK(g[0].record->i_a == 1);
    CHECK(g[1].timestamp_s == 10.0);
    REQUIRE(g[1].record.has_value());
    CHECK(g[1].record->i_a == 3);  // t=9 supersedes t=3
}

TEST_CASE("downsample marks empty slots as gaps") {
    const std::vector<RawRecord> rs{rec(0, 1, 30), rec(10, 2, 31), rec(30, 3, 32)};
    const auto g = grid_of(rs);
    REQUIRE(g.size() == 4);
    CHECK(g[0].record.has_value());
    CHECK(g[1].record.has_value());
    CHECK_FALSE(g[2].record.has_value());  // nothing in (10, 20]
    CHECK(g[3].record.has_value());
}

TEST_CASE("downsample rejects decreasing timestamps") {
    const std::vector<RawRecord> rs{rec(0, 1, 30), rec(10, 2, 31), rec(5, 3, 32)};
    CHECK_THROWS_WITH_AS(grid_of(rs), doctest::Contains("record 2"), std::invalid_argument);
    CHECK_THROWS_AS(grid_of({rec(0, 1, 30)}, 0.0), std::invalid_argument);
}

TEST_CASE("window extraction: counts, contents, targets") {
    const auto norm = Normalizer::fixed_physical();
    std::vector<RawRecord> rs;
    for (int i = 0; i < 181; ++i)
        rs.push_back(rec(10.0 * i, 0.01 * i, 20 + i % 40));
    const auto g = grid_of(rs);
    REQUIRE(g.size() == 181);

    WindowSpec spec;  // window_len 180
    const auto wd = make_windows(g, spec, norm);
    REQUIRE(wd.size() == 2);
    CHECK(wd.skipped_windows == 0);

    // First window covers records 0..179, second 1..180.
    CHECK(wd.X(0, 0) == doctest::Approx(norm.norm_current(0.0)));
    CHECK(wd.X(179, 0) == doctest::Approx(norm.norm_current(1.79)));
    CHECK(wd.X(0, 1) == doctest::Approx(norm.norm_current(0.01)));
    CHECK(wd.y(0) == doctest::Approx(norm.norm_temp(20 + 179 % 40)));
    CHECK(wd.end_time_s[0] == doctest::Approx(1790.0));
    CHECK(wd.end_time_s[1] == doctest::Approx(1800.0));

    const auto s = sample_at(wd, 1);
    CHECK(s.x.size() == 180);
    CHECK(s.y == wd.y(1));
    CHECK(s.t == 1800);
}

TEST_CASE("a single gap kills every window that covers it") {
    const auto norm = Normalizer::fixed_physical();
    std::vector<RawRecord> rs;
    for (int i = 0; i <= 360; ++i) {
        if (i == 180) continue;  // one missing slot in the middle
        rs.push_back(rec(10.0 * i, 1.0, 40.0));
    }
    const auto g = grid_of(rs);
    REQUIRE(g.size() == 361);
    CHECK_FALSE(g[180].record.has_value());

    const auto wd = make_windows(g, WindowSpec{}, norm);
    // Windows end at grid index 179 (covers 0..179) and 360 (covers 181..360);
    // the 180 windows covering the gap are skipped.
    CHECK(wd.size() == 2);
    CHECK(wd.skipped_windows == 180);
}

TEST_CASE("window label comes from the final record") {
    const auto norm = Normalizer::fixed_physical();
    std::vector<RawRecord> rs;
    for (int i = 0; i < 4; ++i)
        rs.push_back(rec(10.0 * i, 1.0, 40.0, i >= 2 ? Label::anomalous : Label::healthy));
    WindowSpec spec;
    spec.window_len = 3;
    const auto wd = make_windows(grid_of(rs), spec, norm);
    REQUIRE(wd.size() == 2);
    CHECK(wd.labels[0] == Label::anomalous);  // ends at record 2
    CHECK(wd.labels[1] == Label::anomalous);
}

TEST_CASE("format_double round trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1e-9, 123456.789, -0.0, 25.0, 1e300}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(25.0) == "25");
}

TEST_CASE("dataset csv round trip is byte exact") {
    Rng rng(3);
    std::vector<RawRecord> rs;
    for (int i = 0; i < 200; ++i) {
        RawRecord r;
        r.timestamp_s = 10.0 * i;
        r.i_a = rng.uniform(0.0, 12.0);
        r.i_b = rng.uniform(0.0, 12.0);
        r.i_c = rng.uniform(0.0, 12.0);
        r.t_hs = std::floor(rng.uniform(20.0, 90.0));
        r.label = (i % 3 == 0) ? Label::anomalous : Label::healthy;
        rs.push_back(r);
    }
    const auto p1 = tmp_path("drivemon_ds_a.csv");
    const auto p2 = tmp_path("drivemon_ds_b.csv");
    write_dataset(p1, rs);
    const auto back = read_dataset(p1);
    REQUIRE(back.size() == rs.size());
    CHECK(back == rs);
    write_dataset(p2, back);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(c1 == c2);
    CHECK(!c1.empty());
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("dataset csv reader reports precise errors") {
    const auto path = tmp_path("drivemon_bad.csv");
    const auto write_text = [&](const std::string& text) {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << text;
    };

    write_text("timestamp_s,i_a,i_b,i_c,t_hs\n");
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("label"), std::runtime_error);

    write_text("timestamp_s,i_a,i_b,i_c,t_hs,label\n10,1,1,1,40,2\n");
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains(":2"), std::runtime_error);

    write_text("timestamp_s,i_a,i_b,i_c,t_hs,label\n10,1,1,1,forty,0\n");
    CHECK_THROWS_AS(read_dataset(path), std::runtime_error);

    write_text("timestamp_s,i_a,i_b,i_c,t_hs,label\n10,-1,1,1,40,0\n");
    CHECK_THROWS_AS(read_dataset(path), std::runtime_error);

    write_text("timestamp_s,i_a,i_b,i_c,t_hs,label\n10,1,1,1,500,0\n");
    CHECK_THROWS_AS(read_dataset(path), std::runtime_error);

    CHECK_THROWS_AS(read_dataset(path + ".missing"), std::runtime_error);
    std::filesystem::remove(path);
}
