#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "synchrone/interpreter.hpp"
#include "synchrone/lexer.hpp"
#include "synchrone/parser.hpp"
#include "synchrone/typecheck.hpp"

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

static const Value* find_reg(const InstantRecord& rec, const Name& r) {
    for (auto& [n, v] : rec.snapshot)
        if (n == r) return &v;
    return nullptr;
}

TEST_CASE("alarm rings when the countdown runs out") {
    auto tp = load_sample("alarm.sct");
    Interpreter interp(tp);
    auto trace = interp.run(5);
    REQUIRE(trace.all_stopped);
    REQUIRE(trace.instants.size() == 3);
    REQUIRE(show_value(*find_reg(trace.instants[0], "ring")) == "abs");
    REQUIRE(show_value(*find_reg(trace.instants[1], "ring")) == "abs");
    REQUIRE(show_value(*find_reg(trace.instants[2], "ring")) == "prst");
    REQUIRE(trace.instants[0].statuses == std::vector<ThreadStatus>{ThreadStatus::W});
    REQUIRE(trace.instants[2].stopped == std::vector<int>{0});
}

TEST_CASE("a present signal reloads the countdown") {
    auto tp = load(R"(
type nat = z || s of nat
type signal = abs || prst
reftype rsignal = ref signal with sig = abs || ring = abs

beh alarm(x, y) =
  match y with s(y') then
    (read sig with prst => next . alarm(x, x) | [_] => alarm(x, y'))
  else (ring := prst . stop)

beh emit() = sig := prst . stop

system = alarm(s(z), s(z)), emit()
)");
    Interpreter interp(tp);
    auto trace = interp.run(4);
    // Instant 1: alarm blocks, emit writes sig, alarm resumes in the same
    // instant and suspends on next; without the emitter it would ring in
    // instant 2.
    auto& rec1 = trace.instants[0];
    REQUIRE(rec1.steps.size() == 3);
    REQUIRE(rec1.steps[0].thread == 0);
    REQUIRE(rec1.steps[0].status == ThreadStatus::W);
    REQUIRE(rec1.steps[1].thread == 1);
    REQUIRE(rec1.steps[2].thread == 0);
    REQUIRE(rec1.steps[2].status == ThreadStatus::N);
    REQUIRE(show_value(*find_reg(trace.instants[1], "ring")) == "abs");
    REQUIRE(show_value(*find_reg(trace.instants[2], "ring")) == "prst");
}

TEST_CASE("exp doubles the register |n| times in one instant") {
    for (int k = 1; k <= 6; ++k) {
        std::string arg = "z";
        for (int i = 0; i < k; ++i) arg = "s(" + arg + ")";
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

system = exp()" + arg +
                       ")\n");
        Interpreter interp(tp);
        auto trace = interp.run(1);
        REQUIRE(trace.all_stopped);
        REQUIRE(value_size(*find_reg(trace.instants[0], "r")) == (1LL << k));
    }
}

TEST_CASE("ping doubles twice per instant") {
    auto tp = load_sample("ping.sct");
    Interpreter interp(tp);
    auto trace = interp.run(1);
    REQUIRE(value_size(*find_reg(trace.instants[0], "r")) == 4);
    REQUIRE(trace.instants[0].max_value_size == 4);
}

TEST_CASE("store resets to defaults at each instant") {
    auto tp = load(R"(
type nat = z || s of nat
reftype rnat = ref nat with r = z

beh w(x) = r := s(x) . next . w(s(x))
system = w(z)
)");
    Interpreter interp(tp);
    auto trace = interp.run(3);
    REQUIRE(show_value(*find_reg(trace.instants[0], "r")) == "s(z)");
    REQUIRE(show_value(*find_reg(trace.instants[1], "r")) == "s(s(z))");
    // Writes accumulate within an instant only; each instant starts at z.
    REQUIRE(trace.instants[1].steps.size() == 1);
}

TEST_CASE("single stop terminates in the first instant") {
    auto tp = load(R"(
type nat = z
beh halt() = stop
system = halt()
)");
    Interpreter interp(tp);
    auto trace = interp.run(5);
    REQUIRE(trace.all_stopped);
    REQUIRE(trace.instants.size() == 1);
}

TEST_CASE("readers-writers grants the writer") {
    auto tp = load_sample("readers_writers.sct");
    Interpreter interp(tp);
    auto trace = interp.run(5);
    REQUIRE(trace.instants.size() == 5);
    REQUIRE(show_value(*find_reg(trace.instants[0], "req")) == "startWrite(s(z))");
    REQUIRE(show_value(*find_reg(trace.instants[1], "allow")) == "s(z)");
}

TEST_CASE("when forwards c when b is true") {
    auto tp = load_sample("when.sct");
    Interpreter interp(tp);
    auto trace = interp.run(2);
    REQUIRE(show_value(*find_reg(trace.instants[0], "c'")) == "fulln(s(z))");
    REQUIRE(show_value(*find_reg(trace.instants[1], "c'")) == "nonen");
}

TEST_CASE("traces are deterministic and render stably") {
    auto t1 = Interpreter(load_sample("readers_writers.sct")).run(5);
    auto t2 = Interpreter(load_sample("readers_writers.sct")).run(5);
    REQUIRE(show_trace(t1) == show_trace(t2));
    auto alarm = Interpreter(load_sample("alarm.sct")).run(5);
    std::string text = show_trace(alarm);
    REQUIRE(text.find("instant 1 | thread 0 | W | writes -") != std::string::npos);
    REQUIRE(text.find("instant 3 | thread 0 | S | writes ring=prst(|v|=0)") != std::string::npos);
    REQUIRE(text.find("instant 3 | snapshot | sig=abs, ring=prst | stopped {0}") !=
            std::string::npos);
}

TEST_CASE("fuel exhaustion raises") {
    auto tp = load(R"(
type nat = z || s of nat
reftype rnat = ref nat with r = z

beh spin(x) = read r with y => spin(s(y)) | [_] => spin(x)
system = spin(z)
)");
    Interpreter interp(tp, 1000);
    REQUIRE_THROWS_AS(interp.run(1), FuelExhausted);
}

TEST_CASE("read executions per label per instant stay at most one on read-once programs") {
    for (auto* name : {"alarm.sct", "monitor.sct", "when.sct", "readers_writers.sct",
                       "buffer.sct", "ping.sct"}) {
        auto tp = load_sample(name);
        Interpreter interp(tp);
        auto trace = interp.run(5);
        for (auto& rec : trace.instants)
            for (auto& [key, count] : rec.read_counts) {
                INFO(name << " thread " << key.first << " label " << key.second);
                REQUIRE(count <= 1);
            }
    }
}
