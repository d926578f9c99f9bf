#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "bexp/cli.hpp"
#include "bexp/synthetic.hpp"

using namespace bexp;
using namespace bexp::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("bexp_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::vector<std::string>> read_tsv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, '\t')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("dataset format round-trips and rejects malformed input") {
    const std::string text = "BED1 2 2 3\n101010\n000111\n";
    const Dataset ds = parse_dataset(text);
    CHECK(ds.shape == Shape{2, 3});
    CHECK(ds.records[1].bits == std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1});
    CHECK(format_dataset(ds) == text);
    for (const char* bad : {"BED1 2 2 3\n101010\n", "BED1 1 2 3\n10101\n", "BED1 1 2 3\n10101x\n", "BED2 1 1 1\n1\n",
                            "BED1 1 1 1\n1", "BED1 1 1 1 \n1\n", "BED1 1 1 1\n1 \n", ""}) {
        CHECK_THROWS_AS(parse_dataset(bad), UsageError);
    }
}

TEST_CASE("model format round-trips") {
    ExpertModel m = quadrant_ground_truth_model(6);
    m.grid = TransformGrid::shifts(1, 1, {-5.0, 0.0, 5.0});
    m.counts[0][0] = 1.0 + 2.0 / 3.0;
    m.templates[1].probs[2] = 0.1 + 0.2;
    GeometricModel g;
    g.mean.assign(3 * m.size(), 0.25);
    g.cov.assign(3 * m.size(), std::vector<double>(3 * m.size(), 0.0));
    g.cov[0][0] = 1.0 / 3.0;
    g.sample_count = 7;
    m.geometry = g;
    m.background = 0.05;
    const std::string text = format_model(m);
    const ExpertModel back = parse_model(text);
    CHECK(format_model(back) == text);
    CHECK(back.templates[1].probs[2] == m.templates[1].probs[2]);
    CHECK(back.counts[0][0] == m.counts[0][0]);
    CHECK(back.grid == m.grid);
    CHECK(back.geometry->cov[0][0] == g.cov[0][0]);
    CHECK(*back.background == 0.05);

    CHECK_THROWS_AS(parse_model("{"), UsageError);
    CHECK_THROWS_AS(parse_model(R"({"version": 2})"), UsageError);
    std::string wrong = text;
    wrong.replace(wrong.find("maxminusmin"), 11, "maxminusmax");
    CHECK_THROWS_AS(parse_model(wrong), UsageError);
}

TEST_CASE("representations round-trip") {
    Representation r;
    r.picks = {{2, 5}, {0, 1}};
    r.loglik = -3.25;
    r.trace = {-7.0, -3.25};
    const std::vector<Representation> reps = {r, Representation{}};
    const std::string text = format_representations(reps);
    const auto back = parse_representations(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].picks == r.picks);
    CHECK(back[0].trace == r.trace);
    CHECK(format_representations(back) == text);
}

TEST_CASE("image encodings") {
    const std::vector<double> v(56 * 56, 0.5);
    const std::string pgm = encode_pgm(Shape{56, 56}, v);
    CHECK(pgm.substr(0, 13) == "P5\n56 56\n255\n");
    CHECK(pgm.size() == 13 + 56 * 56);
    CHECK(static_cast<unsigned char>(pgm[13]) == 128);

    CHECK(diverging_color(0.0) == std::array<std::uint8_t, 3>{0, 0, 255});
    CHECK(diverging_color(0.5) == std::array<std::uint8_t, 3>{128, 128, 128});
    CHECK(diverging_color(1.0) == std::array<std::uint8_t, 3>{255, 255, 0});
    const std::string ppm = encode_ppm(Shape{1, 2}, std::vector<double>{0.5, 1.0});
    CHECK(ppm == std::string("P6\n2 1\n255\n") + "\x80\x80\x80\xff\xff" + std::string(1, '\0'));

    std::string ext;
    encode_template(RuleKind::max_minus_min(), Shape{1, 1}, std::vector<double>{0.5}, ext);
    CHECK(ext == ".ppm");
    encode_template(RuleKind::of(Rule::Max), Shape{1, 1}, std::vector<double>{0.5}, ext);
    CHECK(ext == ".pgm");
    CHECK_THROWS_AS(encode_pgm(Shape{2, 2}, std::vector<double>{0.5}), UsageError);
}

TEST_CASE("generation is deterministic") {
    TempDir dir;
    CHECK(run({"gen", "quadrant", "--n", "100", "--seed", "7", "--out", dir / "a.bed"}).code == 0);
    CHECK(run({"gen", "quadrant", "--n", "100", "--seed", "7", "--out", dir / "b.bed"}).code == 0);
    CHECK(read_file(dir / "a.bed") == read_file(dir / "b.bed"));
    CHECK(fs::exists(dir / "a.truth.json"));
    CHECK(read_dataset(dir / "a.bed").records.size() == 100);

    CHECK(run({"gen", "bars", "--n", "10", "--seed", "1", "--out", dir / "bars.bed"}).code == 0);
    CHECK(read_file(dir / "bars.bed").substr(0, 14) == "BED1 10 56 56\n");

    CHECK(run({"gen", "scene", "--count", "5", "--noise", "0.1", "--out", dir / "s.bed"}).code == 0);
    CHECK(fs::exists(dir / "s.clean.bed"));
    CHECK(fs::exists(dir / "s.truth.json"));
}

TEST_CASE("train, infer and eval") {
    TempDir dir;
    REQUIRE(run({"gen", "quadrant", "--n", "60", "--seed", "3", "--out", dir / "d.bed"}).code == 0);
    const std::vector<std::string> train = {"train", "--data", dir / "d.bed", "--rule", "maxminusmin", "--k-max", "8",
                                            "--epochs", "2", "--seed", "1", "--out"};
    auto t1 = train, t2 = train;
    t1.push_back(dir / "m1.json");
    t2.push_back(dir / "m2.json");
    const Run r1 = run(t1);
    REQUIRE(r1.code == 0);
    CHECK(run(t2).code == 0);
    CHECK(read_file(dir / "m1.json") == read_file(dir / "m2.json"));
    CHECK(read_model(dir / "m1.json").size() == 8);
    const auto rows = read_tsv(r1.out);
    CHECK(rows[0] == std::vector<std::string>{"epoch", "mean_loglik"});
    CHECK(rows.size() == 4);

    // Zero epochs from an initialization echoes it.
    CHECK(run({"train", "--data", dir / "d.bed", "--epochs", "0", "--init-from", dir / "m1.json", "--out",
               dir / "m3.json"}).code == 0);
    CHECK(read_file(dir / "m3.json") == read_file(dir / "m1.json"));

    CHECK(run({"infer", "--model", dir / "m1.json", "--data", dir / "d.bed", "--out", dir / "r.json"}).code == 0);
    CHECK(parse_representations(read_file(dir / "r.json")).size() == 60);

    const Run online = run({"train", "--data", dir / "d.bed", "--mode", "online", "--k-max", "4", "--out", dir / "o.json"});
    CHECK(online.code == 0);
    CHECK(read_tsv(online.out)[0] == std::vector<std::string>{"example", "experts", "loglik_per_pixel", "spawned"});
}

TEST_CASE("eval of a uniform model and record order") {
    TempDir dir;
    ExpertModel m;
    m.add_expert(BernoulliTemplate::filled(Shape{6, 6}, 0.5));
    write_model(dir / "u.json", m);
    REQUIRE(run({"gen", "quadrant", "--n", "25", "--seed", "2", "--out", dir / "d.bed"}).code == 0);
    const Run r = run({"eval", "--model", dir / "u.json", "--data", dir / "d.bed"});
    REQUIRE(r.code == 0);
    const auto rows = read_tsv(r.out);
    CHECK(rows[0] == std::vector<std::string>{"n", "nats_per_image", "nats_per_pixel"});
    CHECK(rows[1][0] == "25");
    CHECK(std::stod(rows[1][1]) == doctest::Approx(36 * std::log(2.0)).epsilon(1e-14));

    Dataset ds = read_dataset(dir / "d.bed");
    std::reverse(ds.records.begin(), ds.records.end());
    write_dataset(dir / "rev.bed", ds);
    const ExpertModel gt = quadrant_ground_truth_model(6);
    write_model(dir / "gt.json", gt);
    const Run a = run({"eval", "--model", dir / "gt.json", "--data", dir / "d.bed"});
    const Run b = run({"eval", "--model", dir / "gt.json", "--data", dir / "rev.bed"});
    CHECK(a.out == b.out);
}

TEST_CASE("ground-truth model evaluation matches the oracle estimate") {
    TempDir dir;
    write_model(dir / "gt.json", quadrant_ground_truth_model(6));
    REQUIRE(run({"gen", "quadrant", "--n", "1000", "--seed", "7", "--out", dir / "d.bed"}).code == 0);
    const Run r = run({"eval", "--model", dir / "gt.json", "--data", dir / "d.bed"});
    REQUIRE(r.code == 0);
    const double got = std::stod(read_tsv(r.out)[1][1]);
    const McEstimate mc = ground_truth_cross_entropy(QuadrantModelCfg{}, 20000, 99);
    // Standard error of a 1000-record mean, estimated from the reference sample.
    const double se = mc.std_error * std::sqrt(20000.0 / 1000.0);
    CHECK(std::abs(got - mc.mean) < 3 * std::hypot(se, mc.std_error));
}

TEST_CASE("render and sample") {
    TempDir dir;
    ExpertModel m = quadrant_ground_truth_model(6);
    write_model(dir / "m.json", m);
    REQUIRE(run({"render", "--model", dir / "m.json", "--out", dir / "render"}).code == 0);
    CHECK(fs::exists(dir / "render/expert_000.ppm"));
    CHECK(fs::exists(dir / "render/expert_007.ppm"));
    CHECK(read_file(dir / "render/expert_000.ppm").substr(0, 11) == "P6\n6 6\n255\n");

    CHECK(run({"sample", "--model", dir / "m.json", "--out", dir / "s"}).code == 2);

    ExpertModel b;
    b.rule = RuleKind::of(Rule::Max);
    b.grid = TransformGrid::shifts(2, 1);
    b.add_expert(BernoulliTemplate::filled(Shape{5, 5}, 0.0));
    b.templates[0].probs[12] = 0.9;
    GeometricModel g;
    g.mean = {0.0, 0.0, 0.0};
    g.cov = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}};
    g.sample_count = 3;
    b.geometry = g;
    write_model(dir / "b.json", b);
    REQUIRE(run({"sample", "--model", dir / "b.json", "--n", "9", "--seed", "4", "--out", dir / "s1"}).code == 0);
    REQUIRE(run({"sample", "--model", dir / "b.json", "--n", "9", "--seed", "4", "--out", dir / "s2"}).code == 0);
    for (int i = 0; i < 9; ++i) {
        const std::string name = "sample_00" + std::to_string(i) + ".pgm";
        CHECK(read_file(dir / ("s1/" + name)) == read_file(dir / ("s2/" + name)));
    }
}

TEST_CASE("landscape command") {
    TempDir dir;
    const Run r = run({"landscape", "--rule", "maxminusmin", "--step", "0.01", "--out", dir / "l.pgm"});
    REQUIRE(r.code == 0);
    const auto rows = read_tsv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "0.01");
    CHECK(rows[1][1] == "0.99");
    CHECK(rows[2][0] == "0.99");
    CHECK(rows[2][1] == "0.01");
    CHECK(read_file(dir / "l.pgm").substr(0, 13) == "P5\n99 99\n255\n");

    const auto grid = read_tsv(read_file(dir / "l.tsv"));
    REQUIRE(grid.size() == 99);
    for (std::size_t i = 0; i < 99; ++i) {
        REQUIRE(grid[i].size() == 99);
        for (std::size_t j = 0; j < 99; ++j) CHECK(grid[i][j] == grid[j][i]);
    }
}

TEST_CASE("scene demo report") {
    const Run a = run({"scene-demo", "--noise", "0.1", "--seed", "1", "--robustify", "on"});
    const Run b = run({"scene-demo", "--noise", "0.1", "--seed", "1", "--robustify", "on"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("recovered\t5/5\n") != std::string::npos);
    for (const char* mode : {"on", "off"}) {
        const Run c = run({"scene-demo", "--noise", "0", "--seed", "4", "--robustify", mode});
        CHECK(c.out.find("recovered\t5/5\n") != std::string::npos);
    }
}

TEST_CASE("exit codes") {
    TempDir dir;
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"gen", "quadrant", "--n", "abc", "--out", dir / "x.bed"}).code == 2);
    CHECK(run({"gen", "quadrant", "--out", dir / "missing_dir/x.bed"}).code == 3);
    CHECK(run({"eval", "--model", dir / "nope.json", "--data", dir / "nope.bed"}).code == 3);
    CHECK(run({"landscape", "--step", "0.5", "--out", dir / "l.pgm"}).code == 2);
    CHECK(run({"--help"}).code == 0);

    write_model(dir / "gt.json", quadrant_ground_truth_model(6));
    REQUIRE(run({"gen", "bars", "--n", "2", "--out", dir / "b.bed"}).code == 0);
    const Run mismatch = run({"eval", "--model", dir / "gt.json", "--data", dir / "b.bed"});
    CHECK(mismatch.code == 2);
    CHECK(!mismatch.err.empty());
    CHECK(run({"infer", "--model", dir / "gt.json", "--data", dir / "b.bed", "--out", dir / "r.json"}).code == 2);
}

}
