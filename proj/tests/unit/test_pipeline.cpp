#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "synchrone/analyze.hpp"
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

// sidecars hold bare annotation items and parse as a program fragment
static Program parse_annotations(const std::string& text) {
    DiagnosticList d;
    auto toks = Lexer(text, d).run();
    Parser parser(std::move(toks), d);
    Program p = parser.parse_program();
    REQUIRE(!d.has_errors());
    return p;
}

TEST_CASE("monitor passes the full pipeline with its sidecars") {
    auto tp = load_sample("monitor.sct");
    auto prec = parse_annotations(slurp(std::string(SAMPLES_DIR) + "/monitor.prec"));
    auto qi = parse_annotations(slurp(std::string(SAMPLES_DIR) + "/monitor.qi"));
    Program side = prec;
    for (auto& q : qi.qis) side.qis.push_back(q);

    auto rep = analyze_program(tp, &side);
    REQUIRE(rep.cfa.ok);
    REQUIRE(rep.lpo_source == "annotation");
    REQUIRE(rep.lpo.ok);
    REQUIRE(rep.lpo.linear);
    REQUIRE(rep.qi_source == "annotation");
    REQUIRE(rep.qi_errors.empty());
    REQUIRE(rep.qi_check.ok);
    for (auto& chk : rep.qi_check.checks) REQUIRE(chk.v == Verdict::Holds);
    REQUIRE(rep.size.has_value());
    REQUIRE(rep.size->n == 1);
    REQUIRE(rep.size->m == 1);
    REQUIRE(rep.space.has_value());
    REQUIRE(rep.space->ptime);
    REQUIRE(rep.ok());

    auto text = show_analyze_report(rep);
    REQUIRE(text.find("read-once: ok") != std::string::npos);
    REQUIRE(text.find("lpo (annotation): ok") != std::string::npos);
    REQUIRE(text.find("linear lpo: yes") != std::string::npos);
    REQUIRE(text.find("complexity: ptime") != std::string::npos);
}

TEST_CASE("alarm needs no sidecars: vacuous lpo, synthesized qi") {
    auto tp = load_sample("alarm.sct");
    auto rep = analyze_program(tp);
    REQUIRE(rep.cfa.ok);
    REQUIRE(rep.cps.points.size() == 8);
    REQUIRE(rep.cps.constraints.size() == 1);
    REQUIRE(rep.lpo_source == "search");
    REQUIRE(rep.lpo.ok);
    REQUIRE(rep.qi_source == "synthesis");
    REQUIRE(rep.qi.has_value());
    REQUIRE(rep.qi_check.ok);
    REQUIRE(rep.size.has_value());
    REQUIRE(rep.space.has_value());
    REQUIRE(rep.ok());
}

TEST_CASE("exp stops at read-once with a cycle witness") {
    auto tp = load_sample("exp.sct");
    auto rep = analyze_program(tp);
    REQUIRE(!rep.cfa.ok);
    REQUIRE(!rep.ok());
    REQUIRE(!rep.cfa.witness_cycle.empty());
    auto text = show_analyze_report(rep);
    REQUIRE(text.find("read-once: fail") != std::string::npos);
    REQUIRE(text.find("exp") != std::string::npos);
}

TEST_CASE("ping finds a precedence by search and checks its qi sidecar") {
    auto tp = load_sample("ping.sct");
    auto qi = parse_annotations(slurp(std::string(SAMPLES_DIR) + "/ping.qi"));
    auto rep = analyze_program(tp, &qi);
    REQUIRE(rep.cfa.ok);
    REQUIRE(rep.lpo_source == "search");
    REQUIRE(rep.lpo.ok);
    REQUIRE(rep.qi_source == "annotation");
    REQUIRE(rep.qi_check.ok);
    REQUIRE(rep.size.has_value());
    REQUIRE(rep.size->n == 1);
    REQUIRE(rep.size->m == 2);
    // h(x) = 2x from q_f^ = max(2x1, 2x2, 2x3), so bound = 2^{n*m+1} * c
    REQUIRE(rep.size->c == 1);
    REQUIRE(rep.size->bound == 8);
    REQUIRE(rep.ok());
}

TEST_CASE("inline annotations shadow sidecar entries") {
    auto tp = load(R"(
type nat = z || s of nat
def dbl(x) : nat = match x with s(m) then s(s(dbl(m))) else z
beh go(x) = next . go(dbl(x))
system = go(s(z))
qi dbl = 2*x1
qi go^ = x1
order dbl
)");
    // the sidecar disagrees; inline must win
    auto side = parse_annotations("qi dbl = x1\norder dbl\n");
    auto rep = analyze_program(tp, &side);
    REQUIRE(rep.lpo_source == "annotation");
    REQUIRE(rep.qi_source == "annotation");
    REQUIRE(rep.qi_check.ok);  // with qi dbl = x1 the dbl rule would be refuted
    REQUIRE(rep.ok());
}

TEST_CASE("space bound dominates hand-computed parameters on monitor") {
    auto tp = load_sample("monitor.sct");
    auto prec = parse_annotations(slurp(std::string(SAMPLES_DIR) + "/monitor.prec"));
    auto qi = parse_annotations(slurp(std::string(SAMPLES_DIR) + "/monitor.qi"));
    Program side = prec;
    for (auto& q : qi.qis) side.qis.push_back(q);
    auto rep = analyze_program(tp, &side);
    REQUIRE(rep.space.has_value());
    auto& sp = *rep.space;
    REQUIRE(sp.params.n == 1);
    REQUIRE(sp.params.r == 2);
    REQUIRE(sp.params.k == 4);  // f^, f1^, maxl, max
    REQUIRE(sp.params.a >= 2);
    REQUIRE(sp.params.s >= 3);
    REQUIRE(sp.bound == space_bound_at(sp.params, sp.value_bound));
    // all monitor initial sizes are 0, so the bound degenerates to 0 and
    // the meter must also stay at 0
    REQUIRE(sp.value_bound == 0);
    REQUIRE(sp.bound == 0);
}

TEST_CASE("synthesis failure reports exit guidance material") {
    // grow is size-increasing beyond any additive template: g(x) majorizes
    // pairing the argument with itself, so no max-plus template fits >=0
    auto tp = load(R"(
type tree = leaf || node of (tree, tree)
def g(x) : tree = match x with node(l, r) then node(g(l), node(g(l), g(r))) else leaf
beh go(x) = go(g(x))
system = go(node(leaf, leaf))
)");
    auto rep = analyze_program(tp);
    REQUIRE(rep.cfa.ok);
    REQUIRE(!rep.qi.has_value());
    REQUIRE(!rep.qi_errors.empty());
    REQUIRE(!rep.ok());
}
