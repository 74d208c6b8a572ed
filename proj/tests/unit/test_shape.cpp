#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "synchrone/cfa.hpp"
#include "synchrone/compiler.hpp"
#include "synchrone/control_points.hpp"
#include "synchrone/flow_graph.hpp"
#include "synchrone/lexer.hpp"
#include "synchrone/parser.hpp"
#include "synchrone/shape.hpp"
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

static std::vector<std::string> constraint_strings(const ShapeReport& rep) {
    std::vector<std::string> out;
    for (auto& c : rep.constraints) out.push_back(show_constraint(c));
    return out;
}

static const SegmentShapes* find_shapes(const ShapeReport& rep, const Name& f) {
    for (auto& s : rep.shapes)
        if (s.segment == f) return &s;
    return nullptr;
}

TEST_CASE("flow properties hold on the compiled corpus") {
    for (const char* name : {"alarm.sct", "monitor.sct", "when.sct", "readers_writers.sct",
                             "buffer.sct", "ping.sct"}) {
        INFO(name);
        auto fg = analyze_flow(compile_program(load_sample(name)));
        for (auto& e : fg.errors) UNSCOPED_INFO(e);
        REQUIRE(fg.ok);
    }
}

TEST_CASE("exp compiles but its read sits on a call cycle") {
    auto fg = analyze_flow(compile_program(load_sample("exp.sct")));
    REQUIRE(fg.tree_ok);
    REQUIRE(fg.read_wait_ok);
    REQUIRE(fg.next_ok);
    REQUIRE(!fg.read_once_ok);
    REQUIRE(!fg.read_once_witness.empty());
    bool has_exp = false;
    for (auto& [f, pc] : fg.read_once_witness) has_exp = has_exp || f == "exp";
    REQUIRE(has_exp);
}

TEST_CASE("shape analysis reproduces the monitor table") {
    auto bp = compile_program(load_sample("monitor.sct"));
    auto fg = analyze_flow(bp);
    REQUIRE(fg.ok);
    auto rep = shape_analysis(bp, fg);
    for (auto& e : rep.errors) UNSCOPED_INFO(e);
    REQUIRE(rep.ok);

    const SegmentShapes* f = find_shapes(rep, "f");
    REQUIRE(f != nullptr);
    REQUIRE(f->rows.size() == 6);
    REQUIRE(show_shape_row(f->rows[0]) == "x");
    REQUIRE(show_shape_row(f->rows[1]) == "x");
    REQUIRE(show_shape_row(f->rows[2]) == "x, v2");
    REQUIRE(show_shape_row(f->rows[3]) == "x, v2, x");
    REQUIRE(show_shape_row(f->rows[4]) == "x, maxl(v2, x)");
    REQUIRE(show_shape_row(f->rows[5]) == "x, f1(maxl(v2, x))");

    auto cs = constraint_strings(rep);
    REQUIRE(std::count(cs.begin(), cs.end(), "f^(x, v2) >0 f1^(maxl(v2, x))") == 1);
    REQUIRE(std::count(cs.begin(), cs.end(), "f1^(x) >1 x") == 1);
    // expression segments mirror their source control points
    REQUIRE(std::count(cs.begin(), cs.end(),
                       "maxl(cons(x3_3, x3_4), x2) >0 maxl(x3_4, max(x2, x3_3))") == 1);
    REQUIRE(std::count(cs.begin(), cs.end(), "maxl(x1, x2) >0 x2") == 1);
    REQUIRE(rep.hat_params.at("f^") == std::vector<Name>{"x", "v2"});
    REQUIRE(rep.hat_params.at("f1^") == std::vector<Name>{"x"});
    REQUIRE(rep.symbol_arity.at("f^") == 2);
    REQUIRE(rep.symbol_arity.at("maxl") == 2);
}

TEST_CASE("alarm emits exactly one constraint, of index 1") {
    auto bp = compile_program(load_sample("alarm.sct"));
    auto fg = analyze_flow(bp);
    REQUIRE(fg.ok);
    auto rep = shape_analysis(bp, fg);
    REQUIRE(rep.ok);
    REQUIRE(rep.constraints.size() == 1);
    REQUIRE(show_constraint(rep.constraints[0]) == "alarm^(x1, x2, v2) >1 prst");
    // the wait row agrees with its read: the check is exercised, not skipped
    const SegmentShapes* a = find_shapes(rep, "alarm");
    REQUIRE(a != nullptr);
    REQUIRE(show_shape_row(a->rows[7]) == "x1, x2_2, v2");
    REQUIRE(show_shape_row(a->rows[11]) == "x1, x2");
}

TEST_CASE("shape analysis accepts the whole corpus") {
    for (const char* name : {"alarm.sct", "monitor.sct", "when.sct", "readers_writers.sct",
                             "buffer.sct", "exp.sct", "ping.sct"}) {
        INFO(name);
        auto bp = compile_program(load_sample(name));
        auto fg = analyze_flow(bp);
        REQUIRE(fg.tree_ok);
        auto rep = shape_analysis(bp, fg);
        for (auto& e : rep.errors) UNSCOPED_INFO(e);
        REQUIRE(rep.ok);
    }
}

TEST_CASE("nested read refinements reach the write constraint") {
    auto bp = compile_program(load_sample("when.sct"));
    auto fg = analyze_flow(bp);
    REQUIRE(fg.ok);
    REQUIRE(fg.reads_of.at("When").size() == 2);
    auto rep = shape_analysis(bp, fg);
    REQUIRE(rep.ok);
    bool found = false;
    for (auto& c : rep.constraints) {
        if (c.flag != 1 || c.lhs.head != "When^") continue;
        REQUIRE(c.lhs.args.size() == 2);
        REQUIRE(show_term(c.lhs.args[0]) == "fullb(true)");
        REQUIRE(c.lhs.args[1].head == "fulln");
        REQUIRE(show_term(c.rhs) == show_term(c.lhs.args[1]));
        found = true;
    }
    REQUIRE(found);
}

TEST_CASE("visible read sites follow unguarded calls") {
    auto bp = compile_program(load_sample("readers_writers.sct"));
    auto fg = analyze_flow(bp);
    REQUIRE(fg.ok);
    REQUIRE(fg.reads_of.at("onlyreader").size() == 2);
    REQUIRE(fg.reads_of.at("grantRead").size() == 2);
    REQUIRE(fg.reads_of.at("pwrite").size() == 3);
    REQUIRE(fg.reads_of.at("grantWrite").size() == 3);
    REQUIRE(fg.reads_of.at("writer1").size() == 1);
    auto rep = shape_analysis(bp, fg);
    REQUIRE(rep.ok);
    REQUIRE(rep.symbol_arity.at("grantRead^") == 4);
    REQUIRE(rep.symbol_arity.at("onlyreader^") == 3);
}

TEST_CASE("bytecode constraints agree with the source constraints") {
    for (const char* name : {"alarm.sct", "monitor.sct", "when.sct", "readers_writers.sct",
                             "buffer.sct", "exp.sct", "ping.sct"}) {
        INFO(name);
        auto tp = load_sample(name);
        auto cfa = analyze_read_once(tp);
        auto src = control_points(tp, cfa);
        auto bp = compile_program(tp);
        auto rep = shape_analysis(bp, analyze_flow(bp));
        REQUIRE(rep.ok);

        auto group = [](const std::vector<Constraint>& cs) {
            std::map<Name, std::vector<Constraint>> g;
            for (auto& c : cs) g[c.lhs.head].push_back(c);
            return g;
        };
        auto a = group(src.constraints);
        auto b = group(rep.constraints);
        for (auto& [f, cs] : a) {
            INFO(f);
            for (auto& c : cs) UNSCOPED_INFO("src: " + show_constraint(c));
            for (auto& c : b[f]) UNSCOPED_INFO("bc:  " + show_constraint(c));
            REQUIRE(constraints_alpha_match(cs, b[f]));
        }
        REQUIRE(a.size() == b.size());
    }
}

TEST_CASE("tampered bytecode fails the shape stage") {
    DiagnosticList d;
    auto bp = load_bytecode(R"(
type nat = z || s of nat
type list = nil || cons of (nat, list)

func f/1 : (nat) -> list
  1: load 1
  2: load 1
  3: build cons 2
  4: return
end
)",
                            d);
    REQUIRE(bp.has_value());
    auto fg = analyze_flow(*bp);
    REQUIRE(fg.ok);
    auto rep = shape_analysis(*bp, fg);
    REQUIRE(!rep.ok);
    REQUIRE(!rep.errors.empty());
    REQUIRE(rep.errors[0].find("f[3]") != std::string::npos);
}

TEST_CASE("wait consistency is enforced") {
    DiagnosticList d;
    // an extra load between the read and the wait leaves a longer stack
    auto bp = load_bytecode(R"(
type signal = abs || prst
reftype rsignal = ref signal with sig = abs

func f/0 : () -> beh
  1: read sig
  2: branch prst 4
  3: stop
  4: load 1
  5: wait 1
  6: tcall f 0
end
)",
                            d);
    for (auto& diag : d.items) UNSCOPED_INFO(render(diag));
    REQUIRE(bp.has_value());
    auto fg = analyze_flow(*bp);
    auto rep = shape_analysis(*bp, fg);
    REQUIRE(!rep.ok);
    bool wait_err = false;
    for (auto& e : rep.errors) wait_err = wait_err || e.find("f[5]") != std::string::npos;
    REQUIRE(wait_err);
}
