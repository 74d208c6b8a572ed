#include <catch2/catch_amalgamated.hpp>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

// exit codes and the determinism contract of the command line tool

namespace {

std::pair<int, std::string> run_cli(const std::string& args) {
    std::string cmd = std::string(RC_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    int st = pclose(p);
    int code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return {code, out};
}

std::string sample(const std::string& name) { return std::string(SAMPLES_DIR) + "/" + name; }

}  // namespace

TEST_CASE("exit codes follow the documented table") {
    auto tmp = std::filesystem::temp_directory_path() / "synchrone-test-cli";
    std::filesystem::create_directories(tmp);

    SECTION("clean program checks out") {
        auto [code, out] = run_cli("check " + sample("monitor.sct"));
        REQUIRE(code == 0);
        REQUIRE(out.find("ok") != std::string::npos);
    }
    SECTION("read-once failure is exit 2") {
        auto [code, out] = run_cli("check " + sample("exp.sct"));
        REQUIRE(code == 2);
        REQUIRE(out.find("cycle") != std::string::npos);
    }
    SECTION("missing input is exit 3") {
        auto [code, out] = run_cli("run " + sample("no_such_file.sct"));
        REQUIRE(code == 3);
    }
    SECTION("run does not gate on read-once") {
        auto [code, out] = run_cli("run " + sample("exp.sct") + " --instants 1");
        REQUIRE(code == 0);
    }
    SECTION("verifier rejects a tampered stack, exit 1") {
        auto bad = (tmp / "underflow.sbc").string();
        std::ofstream(bad) << "func f/0 : () -> beh\n  1: load 1\n  2: stop\nend\n\nsystem = f()\n";
        auto [code, out] = run_cli("verify " + bad);
        REQUIRE(code == 1);
    }
    SECTION("vm fault is exit 6") {
        auto bad = (tmp / "underflow.sbc").string();
        std::ofstream(bad) << "func f/0 : () -> beh\n  1: load 1\n  2: stop\nend\n\nsystem = f()\n";
        auto [code, out] = run_cli("exec " + bad);
        REQUIRE(code == 6);
    }
    SECTION("analyze without usable order or assignment is exit 4") {
        auto src = (tmp / "opaque.sct").string();
        // g duplicates both subtrees, so no max-plus template dominates it
        std::ofstream(src) << "type tree = leaf || node of (tree, tree)\n"
                              "reftype rt = ref tree with r = leaf\n"
                              "def g(x) : tree = match x with node(l, m) then"
                              " node(g(l), node(g(l), node(g(m), g(m)))) else leaf\n"
                              "beh p(x) = r := g(x) . stop\n"
                              "system = p(leaf)\n";
        auto [code, out] = run_cli("analyze " + src);
        REQUIRE(code == 4);
    }
}

TEST_CASE("identical invocations are byte-identical") {
    auto once = run_cli("analyze " + sample("alarm.sct"));
    auto twice = run_cli("analyze " + sample("alarm.sct"));
    REQUIRE(once.first == twice.first);
    REQUIRE(once.second == twice.second);

    auto r1 = run_cli("run " + sample("readers_writers.sct") + " --format=records");
    auto r2 = run_cli("run " + sample("readers_writers.sct") + " --format=records");
    REQUIRE(r1.second == r2.second);
}
