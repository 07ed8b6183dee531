#include "rscn/cli.hpp"
#include "rscn/tasks.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "rscn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = rscn::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path d = fs::path(RSCN_TEST_TMP) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string field(const std::string& line, const std::string& key)
{
    const auto pos = line.find(key + "=");
    REQUIRE(pos != std::string::npos);
    const auto start = pos + key.size() + 1;
    return line.substr(start, line.find_first_of(" \n", start) - start);
}

fs::path write_manifest(const fs::path& dir)
{
    const nlohmann::json j{
        {"task", {{"generator", "mg"}, {"variant", "mg"}, {"seed", 3},
                  {"splits", {{"train", 200}, {"validation", 100}}}}},
        {"model", {{"type", "rscn"}, {"n_max", 10}, {"g_max", 10}}},
        {"seed", 5},
        {"out", dir.string()}};
    const auto p = dir / "manifest.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

} // namespace

TEST_CASE("gen writes the lagged columns")
{
    const auto d = fresh_dir("gen");
    const auto r = cli({"gen", "mg", "--variant", "mg2", "--out", d.string(), "--seed", "4"});
    REQUIRE(r.code == 0);
    const auto train = slurp(d / "MG2_train.csv");
    CHECK(train.substr(0, train.find('\n')) == "u1,u2,y");
    CHECK(fs::exists(d / "MG2_test.csv"));
    CHECK(fs::exists(d / "task.json"));
    CHECK(fs::exists(d / "run.json"));
    const auto seq = rscn::read_sequence_csv(d / "MG2_train.csv");
    CHECK(seq.length() == 500);
}

TEST_CASE("train, eval and online")
{
    const auto d = fresh_dir("pipeline");
    const auto m = write_manifest(d);
    const auto t = cli({"train", "--manifest", m.string()});
    REQUIRE(t.code == 0);
    CHECK(fs::exists(d / "model.json"));
    CHECK(fs::exists(d / "history.csv"));
    CHECK(field(t.out, "task") == "MG");
    CHECK(std::stod(field(t.out, "train_nrmse")) < 0.5);

    const auto e = cli({"eval", "--manifest", m.string(), "--model-file", (d / "model.json").string(),
                        "--split", "validation"});
    REQUIRE(e.code == 0);
    CHECK(field(e.out, "split") == "validation");
    CHECK(field(e.out, "n") == field(t.out, "n"));
    CHECK(std::stod(field(e.out, "nrmse")) < 0.5);

    const auto o = cli({"online", "--manifest", m.string(), "--model-file", (d / "model.json").string(),
                        "--mode", "decreasing"});
    REQUIRE(o.code == 0);
    CHECK(field(o.out, "mode") == "decreasing_gain");
    const auto csv = slurp(d / "online.csv");
    CHECK(csv.substr(0, csv.find('\n')).find("weight_gap") != std::string::npos);
    CHECK(std::stod(field(o.out, "nrmse")) < 0.5);
}

TEST_CASE("esp-check converges on a contractive model")
{
    const auto d = fresh_dir("esp");
    const auto m = write_manifest(d);
    REQUIRE(cli({"train", "--manifest", m.string()}).code == 0);
    const auto r = cli({"esp-check", "--manifest", m.string(), "--model-file",
                        (d / "model.json").string(), "--alpha", "0.8", "--trials", "20", "--steps", "300"});
    REQUIRE(r.code == 0);
    CHECK(field(r.out, "converged") == "true");
    CHECK(std::stod(field(r.out, "sigma_max")) <= 0.8 + 1e-9);
    CHECK(field(r.out, "pairs") == "20");
}

TEST_CASE("exit codes")
{
    const auto d = fresh_dir("errors");
    const auto u = cli({"train", "--no-such-flag"});
    CHECK(u.code == 2);
    CHECK(u.err.find("error code=2") != std::string::npos);

    const auto bad_task = cli({"gen", "lorenz", "--out", d.string()});
    CHECK(bad_task.code == 3);
    CHECK(bad_task.err.find("kind=schema") != std::string::npos);

    std::ofstream(d / "broken.json") << "{ not json";
    CHECK(cli({"train", "--manifest", (d / "broken.json").string()}).code == 3);
    CHECK(cli({"eval", "--task", "mg", "--model-file", (d / "missing.json").string(),
               "--out", d.string()}).code == 3);
}

TEST_CASE("flags override the manifest and run.json replays")
{
    const auto d = fresh_dir("replay");
    const auto m = write_manifest(d);
    const auto first = cli({"train", "--manifest", m.string(), "--seed", "9"});
    REQUIRE(first.code == 0);
    const auto run = nlohmann::json::parse(slurp(d / "run.json"));
    CHECK(run.at("seed") == 9);
    const auto model_a = slurp(d / "model.json");

    fs::copy_file(d / "run.json", d / "replay.json");
    const auto second = cli({"train", "--manifest", (d / "replay.json").string()});
    REQUIRE(second.code == 0);
    CHECK(second.out == first.out);
    CHECK(slurp(d / "model.json") == model_a);
}
