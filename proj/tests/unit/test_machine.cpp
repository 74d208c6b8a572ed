#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "synchrone/bytecode.hpp"
#include "synchrone/compiler.hpp"
#include "synchrone/interpreter.hpp"
#include "synchrone/lexer.hpp"
#include "synchrone/parser.hpp"
#include "synchrone/typecheck.hpp"
#include "synchrone/vm.hpp"

using namespace synchrone;

static std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

static TypedProgram load(const std::string& src) {
    DiagnosticList d;
    auto toks = Lexer(src, d).run();
    Parser parser(std::move(toks), d);
    Program p = parser.parse_program();
    auto tp = typecheck(std::move(p), d);
    for (auto& diag : d.items) UNSCOPED_INFO(render(diag));
    REQUIRE(tp.has_value());
    return std::move(*tp);
}

static TypedProgram load_sample(const std::string& name) {
    return load(slurp(std::string(SAMPLES_DIR) + "/" + name));
}

static std::vector<std::string> listing(const Segment& s) {
    std::vector<std::string> out;
    for (auto& I : s.code) out.push_back(show_instr(I));
    return out;
}

TEST_CASE("compiled alarm matches the reference listing") {
    auto bp = compile_program(load_sample("alarm.sct"));
    const Segment* s = bp.find("alarm");
    REQUIRE(s != nullptr);
    REQUIRE(listing(*s) == std::vector<std::string>{
                               "branch s 12",
                               "read sig",
                               "branch prst 8",
                               "next",
                               "load 1",
                               "load 1",
                               "tcall alarm 2",
                               "wait 2",
                               "load 1",
                               "load 2",
                               "tcall alarm 2",
                               "build prst 0",
                               "write ring",
                               "stop",
                           });
}

TEST_CASE("compiled monitor matches the reference listings") {
    auto bp = compile_program(load_sample("monitor.sct"));
    const Segment* f = bp.find("f");
    REQUIRE(f != nullptr);
    REQUIRE(listing(*f) == std::vector<std::string>{
                               "yield",
                               "read i",
                               "load 1",
                               "call maxl 2",
                               "call f1 1",
                               "return",
                           });
    const Segment* maxl = bp.find("maxl");
    REQUIRE(maxl != nullptr);
    REQUIRE(listing(*maxl) == std::vector<std::string>{
                                  "load 1",
                                  "branch cons 9",
                                  "load 4",
                                  "load 2",
                                  "load 3",
                                  "call max 2",
                                  "call maxl 2",
                                  "return",
                                  "load 2",
                                  "return",
                              });
    const Segment* f1 = bp.find("f1");
    REQUIRE(f1 != nullptr);
    REQUIRE(listing(*f1) == std::vector<std::string>{
                                "load 1",
                                "write o",
                                "next",
                                "load 1",
                                "tcall f 1",
                            });
}

TEST_CASE("bytecode text round-trips") {
    for (const char* name : {"alarm.sct", "monitor.sct", "when.sct", "readers_writers.sct",
                             "buffer.sct", "exp.sct", "ping.sct"}) {
        auto bp = compile_program(load_sample(name));
        std::string text = show_bytecode(bp);
        DiagnosticList d;
        auto back = load_bytecode(text, d);
        for (auto& diag : d.items) UNSCOPED_INFO(render(diag));
        REQUIRE(back.has_value());
        REQUIRE(show_bytecode(*back) == text);
    }
}

TEST_CASE("loader rejects malformed programs") {
    DiagnosticList d;
    SECTION("bad final instruction") {
        auto bp = load_bytecode("func f/0 : () -> beh\n  1: yield\nend\n", d);
        REQUIRE(!bp.has_value());
    }
    SECTION("wait must target a read") {
        auto bp = load_bytecode("func f/0 : () -> beh\n  1: wait 2\n  2: stop\nend\n", d);
        REQUIRE(!bp.has_value());
    }
    SECTION("branch target out of range") {
        auto bp = load_bytecode(
            "type t = a || b\nfunc f/0 : () -> beh\n  1: branch a 9\n  2: stop\nend\n", d);
        REQUIRE(!bp.has_value());
    }
    SECTION("gap in instruction numbering") {
        auto bp = load_bytecode("func f/0 : () -> beh\n  1: yield\n  3: stop\nend\n", d);
        REQUIRE(!bp.has_value());
    }
}

TEST_CASE("machine alarm rings at the third instant") {
    auto bp = compile_program(load_sample("alarm.sct"));
    Vm vm(bp);
    auto trace = vm.run(5);
    REQUIRE(trace.all_stopped);
    REQUIRE(trace.instants.size() == 3);
    REQUIRE(show_value(trace.instants[2].snapshot[1].second) == "prst");
    REQUIRE(trace.instants[2].stopped == std::vector<int>{0});
}

static void require_same_observations(const RunTrace& a, const RunTrace& b) {
    REQUIRE(a.instants.size() == b.instants.size());
    REQUIRE(a.all_stopped == b.all_stopped);
    for (size_t i = 0; i < a.instants.size(); ++i) {
        auto& ra = a.instants[i];
        auto& rb = b.instants[i];
        REQUIRE(ra.snapshot.size() == rb.snapshot.size());
        for (size_t j = 0; j < ra.snapshot.size(); ++j) {
            REQUIRE(ra.snapshot[j].first == rb.snapshot[j].first);
            REQUIRE(show_value(ra.snapshot[j].second) == show_value(rb.snapshot[j].second));
        }
        REQUIRE(ra.stopped == rb.stopped);
    }
}

TEST_CASE("machine agrees with the reference executor on the corpus") {
    for (const char* name : {"alarm.sct", "monitor.sct", "when.sct", "readers_writers.sct",
                             "buffer.sct", "exp.sct", "ping.sct"}) {
        INFO(name);
        auto tp = load_sample(name);
        auto ref = Interpreter(tp).run(5);
        auto got = Vm(compile_program(tp)).run(5);
        require_same_observations(ref, got);
    }
}

TEST_CASE("machine and executor agree on end-of-instant statuses") {
    auto tp = load_sample("readers_writers.sct");
    auto ref = Interpreter(tp).run(5);
    auto got = Vm(compile_program(tp)).run(5);
    REQUIRE(ref.instants.size() == got.instants.size());
    for (size_t i = 0; i < ref.instants.size(); ++i)
        REQUIRE(ref.instants[i].statuses == got.instants[i].statuses);
}

TEST_CASE("exp doubles the register each cycle once reads repeat") {
    auto tp = load(R"(
type nat = z || s of nat
type list = nil || cons of (nat, list)
reftype rlist = ref list with r = cons(z, nil)

def dble(l) : list =
  match l with cons(h, t) then cons(h, cons(h, dble(t))) else nil

beh exp(n) =
  match n with s(m) then
    (read r with y => (r := dble(y) . exp(m)) | [_] => exp(m))
  else stop

system = exp(s(s(s(z))))
)");
    auto got = Vm(compile_program(tp)).run(1);
    REQUIRE(got.instants.size() == 1);
    // r starts as a one-element list (size 1) and doubles |n| = 3 times
    REQUIRE(value_size(got.instants[0].snapshot[0].second) == 8);
}

TEST_CASE("fuel exhaustion raises with the offending instant") {
    auto tp = load(R"(
type nat = z || s of nat
reftype rnat = ref nat with r = z
beh spin() = yield . spin()
system = spin()
)");
    Vm vm(compile_program(tp), 1000);
    REQUIRE_THROWS_AS(vm.run(1), FuelExhausted);
}

TEST_CASE("indexed register access reads through a parameter") {
    auto tp = load(R"(
type signal = abs || prst
reftype rsignal = ref signal with sig = abs
beh poll(x) = read x with prst => stop | [_] => poll(x)
beh emit() = sig := prst . stop
system = poll(sig), emit()
)");
    auto bp = compile_program(tp);
    const Segment* poll = bp.find("poll");
    REQUIRE(poll != nullptr);
    REQUIRE(listing(*poll)[0] == "read 1");
    auto ref = Interpreter(tp).run(3);
    auto got = Vm(bp).run(3);
    require_same_observations(ref, got);
    REQUIRE(got.all_stopped);
}
