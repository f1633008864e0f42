#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "rdp/errors.hpp"
#include "rdp/reports.hpp"

using namespace rdp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(RDP_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& err_file = "/dev/null") {
  const std::string cmd = std::string(RDP_CLI) + " " + args + " > /dev/null 2> " + err_file.string();
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string data(const std::string& f) { return (fs::path(RDP_DATA_DIR) / f).string(); }

}  // namespace

TEST_SUITE("reports") {
  TEST_CASE("curve CSV: empty, single row, round trip") {
    CHECK(format_curve({}) == std::string(kCurveHeader) + "\n");
    const std::vector<CurveRow> one{{0.1, 0.35, 0.0, 1e-17, 3, true}};
    const auto s = format_curve(one);
    CHECK(std::count(s.begin(), s.end(), '\n') == 2);
    std::vector<CurveRow> rows{{0.3, 0.1234567890123, 0.05, 2e-13, 4, true},
                               {0.05, 0.7, 0.01, 0.0, 4, false},
                               {0.1, 1.0 / 3.0, 0.2, 1e-9, 4, true}};
    const auto back = parse_curve(format_curve(rows));
    REQUIRE(back.size() == 3);
    std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.delta < b.delta; });
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(back[i].delta - rows[i].delta) <= 1e-12);
      CHECK(std::abs(back[i].rate - rows[i].rate) <= 1e-12);
      CHECK(std::abs(back[i].rc_sum - rows[i].rc_sum) <= 1e-12);
      CHECK(back[i].v_size == rows[i].v_size);
      CHECK(back[i].feasible == rows[i].feasible);
    }
    CHECK_THROWS_AS(parse_curve("bad,header\n1,2\n"), ArgumentError);
  }

  TEST_CASE("curve rows clip rc_sum at zero") {
    SolveResult r;
    r.delta = 0.1;
    r.feasible = true;
    r.v_size = 2;
    r.point.rc_sum = -0.2;
    CHECK(curve_row(r).rc_sum == 0.0);
    CHECK(to_json(r)["rc_sum_raw"].get<double>() == -0.2);
  }

  TEST_CASE("atomic writes") {
    const auto dir = scratch("atomic");
    write_atomic(dir / "a.txt", "hello");
    CHECK(slurp(dir / "a.txt") == "hello");
    CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
    CHECK_THROWS_AS(write_atomic(dir / "missing" / "a.txt", "x"), CapacityError);
    emit_curve({}, dir / "c.csv");
    CHECK(slurp(dir / "c.csv") == std::string(kCurveHeader) + "\n");
  }

  TEST_CASE("source specifications") {
    const auto d = source_from_json(json::parse(R"({"dsbs": 0.2})"));
    CHECK(d.pxz()[1] == doctest::Approx(0.1));
    const auto i = source_from_json(json::parse(R"({"independent": {"px": [0.3, 0.7], "pz": [0.5, 0.5]}})"));
    CHECK(i.px()[0] == doctest::Approx(0.3));
    const auto f = source_from_json(json::parse(
        R"({"pxz": {"axes": [{"name":"X","size":2},{"name":"Z","size":1}], "probs": [0.4, 0.6]},
            "distortion": [[0, 2], [1, 0]]})"));
    CHECK(f.d(0, 1) == 2.0);
    CHECK(source_from_json(to_json(f)).distortion_flat() == f.distortion_flat());
    CHECK_THROWS_AS(source_from_json(json::parse(R"({"foo": 1})")), ArgumentError);
    CHECK_THROWS_AS(source_from_json(json::parse(R"({"dsbs": 2})")), ArgumentError);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("gaussian command reports the closed form") {
    const auto dir = scratch("cli_gauss");
    REQUIRE(run_cli("--out-dir " + dir.string() + " --seed 3 gaussian --eta 0.3 --delta 0.8 --samples 20000") == 0);
    const auto j = json::parse(slurp(dir / "gaussian.json"));
    CHECK(j["rate_bits"].get<double>() == doctest::Approx(0.5 * std::log2(0.91 / 0.64)).epsilon(1e-12));
    CHECK(j["rho"].get<double>() == doctest::Approx(0.6));
    CHECK(j["seed"] == 3);
    CHECK(j["version"] == kToolVersion);
    CHECK(j.contains("config"));
    CHECK(j.contains("guard_flags"));
    CHECK(j["mc"].contains("mean_sq_err"));
  }

  TEST_CASE("invalid delta exits 2 and names the interval") {
    const auto dir = scratch("cli_bad");
    CHECK(run_cli("--out-dir " + dir.string() + " gaussian --eta 0.3 --delta 1.5", dir / "err.txt") == 2);
    const auto err = json::parse(slurp(dir / "err.txt"));
    CHECK(err["error"]["message"].get<std::string>().find("(0, 1.4]") != std::string::npos);
    CHECK(run_cli("--out-dir " + dir.string() + " region --source " + data("dsbs02.json")) == 2);
    CHECK(run_cli("--out-dir " + dir.string() + " nosuchcommand") == 2);
    CHECK(run_cli("--format xml gaussian --eta 0.3 --delta 0.5") == 2);
  }

  TEST_CASE("region above the independent distortion has rate 0") {
    const auto dir = scratch("cli_region");
    REQUIRE(run_cli("--out-dir " + dir.string() + " region --source " + data("dsbs02.json") +
                    " --delta 0.9 --v-size 1") == 0);
    const auto rows = parse_curve(slurp(dir / "region.csv"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].rate == 0.0);
    CHECK(rows[0].feasible);
    const auto meta = json::parse(slurp(dir / "region.meta.json"));
    CHECK(meta["version"] == kToolVersion);
    CHECK(meta["config"]["v_size"] == 1);
  }

  TEST_CASE("identical config and seed give byte-identical artifacts") {
    const auto a = scratch("cli_rep_a"), b = scratch("cli_rep_b");
    const std::string args = " --seed 11 --workers 2 region --source " + data("dsbs02.json") +
                             " --delta 0.05,0.2 --v-size 2 --starts 4";
    REQUIRE(run_cli("--out-dir " + a.string() + args) == 0);
    REQUIRE(run_cli("--out-dir " + b.string() + args) == 0);
    for (const char* f : {"region.csv", "region.json", "region.meta.json"}) CHECK(slurp(a / f) == slurp(b / f));
    CHECK(fs::exists(a / "run.log"));

    const std::string sim = " --seed 4 --format json simulate --source " + data("dsbs02.json") +
                            " --delta 0.05 --v-size 2 --n 4 --trials 200";
    REQUIRE(run_cli("--out-dir " + a.string() + sim) == 0);
    REQUIRE(run_cli("--out-dir " + b.string() + " --workers 1" + sim) == 0);
    CHECK(slurp(a / "simulate.json") == slurp(b / "simulate.json"));
  }

  TEST_CASE("softcover and couple commands") {
    const auto dir = scratch("cli_misc");
    REQUIRE(run_cli("--out-dir " + dir.string() +
                    " softcover --pv 0.5,0.5 --crossover 0.19 --rates 0.6 --n 3,5 --codebooks 4") == 0);
    const auto sc = json::parse(slurp(dir / "softcover.json"));
    CHECK(sc["cells"].size() == 2);
    REQUIRE(run_cli("--out-dir " + dir.string() + " couple --p " + data("p.json") + " --q " + data("q.json")) == 0);
    const auto c = json::parse(slurp(dir / "couple.json"));
    CHECK(c["mismatch_probability"].get<double>() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(c["total_variation"].get<double>() == doctest::Approx(0.3).epsilon(1e-12));
  }

  TEST_CASE("unwritable output exits 3") {
    const auto dir = scratch("cli_ro");
    std::ofstream(dir / "file") << "x";
    CHECK(run_cli("--out-dir " + (dir / "file").string() + " gaussian --eta 0.3 --delta 0.8") == 3);
  }

  TEST_CASE("infeasible simulate design exits 3") {
    CHECK(run_cli("--out-dir " + scratch("cli_inf").string() + " simulate --source " + data("dsbs02.json") +
                  " --delta 0.1 --v-size 1 --n 4") == 3);
  }
}
