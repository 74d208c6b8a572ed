#include <catch2/catch_amalgamated.hpp>

#include "../support/random_program.hpp"
#include "synchrone/compiler.hpp"
#include "synchrone/flow_graph.hpp"
#include "synchrone/lexer.hpp"
#include "synchrone/parser.hpp"
#include "synchrone/shape.hpp"
#include "synchrone/typecheck.hpp"

using namespace synchrone;

TEST_CASE("random systems compile and pass the machine checks") {
    for (unsigned seed = 1; seed <= 50; ++seed) {
        testgen::Gen gen(seed);
        std::string src = gen.program();
        INFO("seed " << seed << "\n" << src);
        DiagnosticList d;
        auto toks = Lexer(src, d).run();
        Parser parser(std::move(toks), d);
        Program p = parser.parse_program();
        auto tp = typecheck(std::move(p), d);
        for (auto& diag : d.items) UNSCOPED_INFO(render(diag));
        REQUIRE(tp.has_value());

        auto bp = compile_program(*tp);
        auto fg = analyze_flow(bp);
        for (auto& e : fg.errors) UNSCOPED_INFO(e);
        REQUIRE(fg.ok);

        auto rep = shape_analysis(bp, fg);
        for (auto& e : rep.errors) UNSCOPED_INFO(e);
        REQUIRE(rep.ok);

        // round-trip: the loader accepts what the compiler prints
        DiagnosticList d2;
        auto re = load_bytecode(show_bytecode(bp), d2);
        for (auto& diag : d2.items) UNSCOPED_INFO(render(diag));
        REQUIRE(re.has_value());
    }
}
