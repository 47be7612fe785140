#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "memheat/cli.hpp"
#include "memheat/errors.hpp"

using namespace memheat;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.ini");
}

std::string parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("memheat-" + tag + "-" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const std::string kParams = "[params]\nN = 1\nalpha = 0.5\nbeta = 1\n";

const std::string kVerify = kParams +
                            "[forcing]\ngamma = 1.5\n"
                            "[regions]\nregion = exterior nu=1\nregion = global\n"
                            "[run]\np = 2\nt_min = 100\nt_max = 10000\nt_points = 9\n";

}  // namespace

TEST_CASE("config: full parse") {
    const ExperimentConfig c = parse(kParams +
                                     "# comment\n[forcing]\ngamma = 0.5, 1.5 ; trailing\nradius = 2\n"
                                     "[regions]\nregion = compact radius=3\nregion = intermediate omega=theta/2 nu=1 mu=2\n"
                                     "[run]\np = 1, inf\n[output]\nsvg = false\n");
    CHECK(c.params.dim_n == 1);
    CHECK(c.params.alpha == 0.5);
    CHECK(c.gammas == std::vector<double>{0.5, 1.5});
    CHECK(c.radius == 2.0);
    REQUIRE(c.regions.size() == 2);
    CHECK(std::get<CompactBall>(c.regions[0]).radius == 3.0);
    CHECK(std::get<Intermediate>(c.regions[1]).omega == doctest::Approx(c.params.theta() / 2).epsilon(1e-15));
    CHECK(c.p_list.back() == kInf);
    CHECK_FALSE(c.svg);
}

TEST_CASE("config: diagnostics name the line and key") {
    const std::string alpha = parse_error("[params]\nN = 1\nalpha = 1.2\nbeta = 1\n");
    CHECK(alpha.find("test.ini:3") != std::string::npos);
    CHECK(alpha.find("alpha") != std::string::npos);
    CHECK(alpha.find("(0,1)") != std::string::npos);
    CHECK(parse_error(kParams + "[run]\nspeed = 3\n").find("unknown key") != std::string::npos);
    CHECK(parse_error(kParams + "[params]\nalpha = 0.4\n").find("duplicate key") != std::string::npos);
    CHECK(parse_error(kParams + "[nope]\n").find("unknown section") != std::string::npos);
    CHECK(parse_error(kParams + "[regions]\nregion = annulus\n").find("unknown region kind") != std::string::npos);
    CHECK(parse_error(kParams + "[run]\np = 0.5\n").find("[1, inf]") != std::string::npos);
    CHECK(parse_error("[params]\nN = 3\nalpha = 0.5\nbeta = 1/2\n").find("N > 4 beta") != std::string::npos);
    CHECK(parse_error("[params]\nN = 1\n").find("needs N, alpha and beta") != std::string::npos);
    CHECK(parse_error(kParams + "[regions]\nregion = intermediate omega=0.9\n") != "");
}

TEST_CASE("profile cache key") {
    const ExperimentConfig c = parse(kParams);
    const std::uint64_t k = profile_cache_key(c.params, c.grid, c.profile_tol);
    CHECK(k == profile_cache_key(c.params, c.grid, c.profile_tol));
    CHECK(k != profile_cache_key(c.params, c.grid, 1e-7));
    GridSpec g = c.grid;
    g.points += 1;
    CHECK(k != profile_cache_key(c.params, g, c.profile_tol));
}

TEST_CASE("cached profile round trip") {
    TempDir dir("cache");
    ExperimentConfig c = parse(kParams);
    c.cache_dir = dir.path;
    const ProfileTable a = cached_profile(c, 1);
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir.path)) {
        ++files;
        CHECK(e.path().filename().string().rfind("profile-", 0) == 0);
    }
    CHECK(files == 1);
    const ProfileTable b = cached_profile(c, 1);
    REQUIRE(a.radii().size() == b.radii().size());
    for (std::size_t i = 0; i < a.radii().size(); ++i) CHECK(a.values()[i] == b.values()[i]);
}

TEST_CASE("exponents subcommand") {
    TempDir dir("exp");
    ExperimentConfig c = parse(kParams + "[run]\np = 1, 2, inf\n");
    c.out_dir = dir.path;
    std::ostringstream log;
    CHECK(run_config("exponents", c, 1, log) == kExitPass);
    const std::string csv = slurp(dir.path / "exponents.csv");
    CHECK(csv.rfind("N,alpha,beta,p,theta,sigma_star,sigma_p,p_c,q_c\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(run_config("bogus", c, 1, log) == kExitUsage);
}

TEST_CASE("verify subcommand: one row and one plot per cell, reproducible bytes") {
    TempDir dir("verify");
    ExperimentConfig c = parse(kVerify);
    c.out_dir = dir.path / "a";
    c.cache_dir = dir.path / "cache";
    std::ostringstream log;
    const int rc = run_config("verify", c, 1, log);
    CHECK(rc != kExitUsage);
    const std::string csv = slurp(c.out_dir / "verify.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    int svgs = 0;
    for (const auto& e : fs::directory_iterator(c.out_dir / "plots")) svgs += e.path().extension() == ".svg";
    CHECK(svgs == 2);
    CHECK(fs::exists(c.out_dir / "summary.txt"));

    c.out_dir = dir.path / "b";
    CHECK(run_config("verify", c, 1, log) == rc);
    CHECK(slurp(c.out_dir / "verify.csv") == csv);
}

TEST_CASE("emit_report with nothing to report writes nothing") {
    TempDir dir("empty");
    CHECK_THROWS_AS(emit_report({}, dir.path / "out", true), DomainError);
    CHECK_FALSE(fs::exists(dir.path / "out" / "verify.csv"));
}

TEST_CASE("exit code of a report set") {
    VerificationReport pass, fail, inc;
    pass.pass = true;
    fail.log_verdict = LogVerdict::Mismatch;
    inc.infeasible = true;
    CHECK(verdict_exit_code({pass}) == kExitPass);
    CHECK(verdict_exit_code({pass, inc}) == kExitInconclusive);
    CHECK(verdict_exit_code({pass, inc, fail}) == kExitFail);
}

TEST_CASE("executable") {
    const char* exe = std::getenv("MEMHEAT_CLI");
    if (exe == nullptr) return;
    TempDir dir("exe");
    std::ofstream(dir.path / "good.ini") << kParams << "[run]\np = 2\n";
    std::ofstream(dir.path / "bad.ini") << "[params]\nN = 1\nalpha = 1.2\nbeta = 1\n";
    const std::string out = " --out " + (dir.path / "out").string() + " > " + (dir.path / "log").string() + " 2>&1";
    auto run = [&](const std::string& args) {
        const int s = std::system((std::string(exe) + " " + args + out).c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(run("exponents --config " + (dir.path / "good.ini").string()) == 0);
    CHECK(fs::exists(dir.path / "out" / "exponents.csv"));
    CHECK(run("exponents --config " + (dir.path / "bad.ini").string()) == 1);
    CHECK(slurp(dir.path / "log").find("alpha") != std::string::npos);
    CHECK(run("exponents") == 1);
    CHECK(run("frobnicate --config x") == 1);
}
