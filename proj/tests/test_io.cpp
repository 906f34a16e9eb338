#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "dlab/experiments.hpp"
#include "dlab/io.hpp"

using namespace dlab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const std::string kTmp = "/tmp/dlab_io_test";

struct TmpDir {
    TmpDir() {
        std::filesystem::remove_all(kTmp);
        io::ensure_dir(kTmp);
    }
};

}  // namespace

TEST_CASE("csv round trip and determinism") {
    TmpDir tmp;
    io::Csv csv;
    csv.header = {"a", "b"};
    csv.rows = {{1.0, 2.5}, {-0.125, 1e-9}, {3.14159265358979, 97.0}};
    io::write_csv(kTmp + "/x.csv", csv);
    io::write_csv(kTmp + "/y.csv", csv);
    CHECK(slurp(kTmp + "/x.csv") == slurp(kTmp + "/y.csv"));

    const io::Csv back = io::read_csv(kTmp + "/x.csv");
    CHECK(back.header == csv.header);
    REQUIRE(back.rows.size() == csv.rows.size());
    for (size_t i = 0; i < csv.rows.size(); ++i) {
        for (size_t j = 0; j < csv.rows[i].size(); ++j) {
            CHECK(back.rows[i][j] == doctest::Approx(csv.rows[i][j]).epsilon(1e-12));
        }
    }

    io::Csv ragged;
    ragged.header = {"a", "b"};
    ragged.rows = {{1.0}};
    CHECK_THROWS_AS(io::write_csv(kTmp + "/bad.csv", ragged), std::invalid_argument);
}

TEST_CASE("svg plots are deterministic and non-empty") {
    TmpDir tmp;
    io::Series s;
    s.label = "series";
    for (int i = 0; i < 20; ++i) {
        s.x.push_back(i);
        s.y.push_back(std::sin(0.3 * i));
    }
    io::write_line_svg(kTmp + "/a.svg", "title", "x", "y", {s});
    io::write_line_svg(kTmp + "/b.svg", "title", "x", "y", {s});
    const std::string a = slurp(kTmp + "/a.svg");
    CHECK(a == slurp(kTmp + "/b.svg"));
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("polyline") != std::string::npos);

    std::vector<double> values;
    for (int i = 0; i < 100; ++i) values.push_back(0.01 * i);
    io::write_histogram_svg(kTmp + "/h.svg", "hist", "v", values, 10, 0.5);
    CHECK(slurp(kTmp + "/h.svg").find("rect") != std::string::npos);

    Matrix m(4, 4);
    m.at(1, 2) = 3.0;
    io::write_heatmap_svg(kTmp + "/m.svg", "heat", m);
    CHECK(slurp(kTmp + "/m.svg").find("rgb(") != std::string::npos);
}

TEST_CASE("plot_csv recognizes schemas and rejects bad input") {
    TmpDir tmp;
    io::Csv line;
    line.header = {"i", "accuracy"};
    for (int i = 1; i <= 30; ++i) line.rows.push_back({double(i), 1.0 / i});
    io::write_csv(kTmp + "/acc.csv", line);
    io::plot_csv(kTmp + "/acc.csv", "line", kTmp + "/acc.svg");
    CHECK(std::filesystem::exists(kTmp + "/acc.svg"));

    io::Csv ent;
    ent.header = {"class", "entropy"};
    for (int k = 0; k < 97; ++k) ent.rows.push_back({double(k), 3.5});
    io::write_csv(kTmp + "/ent.csv", ent);
    io::plot_csv(kTmp + "/ent.csv", "hist", kTmp + "/ent.svg");
    const std::string svg = slurp(kTmp + "/ent.svg");
    CHECK(svg.find("stroke=\"red\"") != std::string::npos);  // ln p marker

    // empty CSV: error, no file written
    io::Csv empty;
    empty.header = {"x", "y"};
    io::write_csv(kTmp + "/empty.csv", empty);
    CHECK_THROWS_AS(io::plot_csv(kTmp + "/empty.csv", "line", kTmp + "/no.svg"),
                    std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(kTmp + "/no.svg"));

    // single-column line plot lacks series
    io::Csv narrow;
    narrow.header = {"x"};
    narrow.rows = {{1.0}};
    io::write_csv(kTmp + "/narrow.csv", narrow);
    CHECK_THROWS_AS(io::plot_csv(kTmp + "/narrow.csv", "line", kTmp + "/no2.svg"),
                    std::invalid_argument);

    CHECK_THROWS_AS(io::plot_csv(kTmp + "/acc.csv", "sparkline", kTmp + "/no3.svg"),
                    std::invalid_argument);
}

TEST_CASE("report json round-trips losslessly") {
    TmpDir tmp;
    xp::FlowXpConfig cfg;
    cfg.eps_sweep = {1e-3};
    xp::RunContext ctx;
    ctx.out_dir = kTmp;
    const xp::FlowXpResult result = xp::run_flow(cfg, ctx);
    CHECK(std::filesystem::exists(kTmp + "/report.json"));

    std::ifstream in(kTmp + "/report.json");
    nlohmann::json parsed;
    in >> parsed;
    CHECK(parsed.at("experiment") == "flow");
    CHECK(parsed.at("cells").size() == 1);
    const nlohmann::json again = nlohmann::json::parse(parsed.dump());
    CHECK(again == parsed);
    CHECK(result.runs.size() == 1);
}

TEST_CASE("flow experiment CSVs are byte-identical across runs") {
    TmpDir tmp;
    xp::FlowXpConfig cfg;
    cfg.eps_sweep = {1e-2};
    xp::RunContext ctx1, ctx2;
    ctx1.out_dir = kTmp + "/r1";
    ctx2.out_dir = kTmp + "/r2";
    io::ensure_dir(ctx1.out_dir);
    io::ensure_dir(ctx2.out_dir);
    xp::run_flow(cfg, ctx1);
    xp::run_flow(cfg, ctx2);
    CHECK(slurp(ctx1.out_dir + "/flow_eps0.01.csv") == slurp(ctx2.out_dir + "/flow_eps0.01.csv"));
    CHECK(slurp(ctx1.out_dir + "/flow_unlearn_eps0.01.csv") ==
          slurp(ctx2.out_dir + "/flow_unlearn_eps0.01.csv"));
}
