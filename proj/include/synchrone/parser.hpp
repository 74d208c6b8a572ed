#pragma once

#include <set>
#include <string>
#include <vector>

#include "ast.hpp"
#include "diagnostics.hpp"
#include "lexer.hpp"

namespace synchrone {

inline const std::set<std::string>& reserved_words() {
    static const std::set<std::string> r = {"type", "reftype", "def",  "beh",  "system", "order",
                                            "qi",   "match",   "with", "then", "else",   "read",
                                            "stop", "yield",   "next", "ref",  "of"};
    return r;
}

// Recursive-descent parser for the concrete grammar. Read branch lists end at
// the mandatory default branch, which keeps nested reads unambiguous.
class Parser {
  public:
    Parser(std::vector<Token> toks, DiagnosticList& diags)
        : toks_(std::move(toks)), diags_(diags) {}

    Program parse_program() {
        Program p;
        while (!at_eof()) {
            if (is_kw("type")) {
                parse_type(p);
            } else if (is_kw("reftype")) {
                parse_reftype(p);
            } else if (is_kw("def")) {
                parse_def(p);
            } else if (is_kw("beh")) {
                parse_beh(p);
            } else if (is_kw("system")) {
                parse_system(p);
            } else if (is_kw("order")) {
                parse_order(p);
            } else if (is_kw("qi")) {
                parse_qi(p);
            } else {
                diags_.error(peek().pos, "parse", "expected a declaration, found '" + peek().text + "'");
                sync_to_item();
            }
            if (diags_.items.size() > 200) break;  // runaway guard
        }
        return p;
    }

    // Exposed pieces reused by the bytecode text parser.
    Expr parse_expr_public() { return parse_expr(); }
    void parse_type_public(Program& p) { parse_type(p); }
    void parse_reftype_public(Program& p) { parse_reftype(p); }
    void parse_system_public(Program& p) { parse_system(p); }
    bool at_item_kw(const char* k) { return is_kw(k); }
    const Token& peek_public() const { return peek(); }
    Token next_public() { return next(); }
    bool accept_public(Token::Kind k) { return accept(k); }
    void expect_public(Token::Kind k, const char* what) { expect(k, what); }
    Name parse_name_public(const char* what) { return parse_name(what); }
    QiExpr parse_qi_expr_public() { return parse_qi_expr(); }
    size_t cursor() const { return i_; }

  private:
    const Token& peek(int off = 0) const {
        size_t k = i_ + static_cast<size_t>(off);
        return k < toks_.size() ? toks_[k] : toks_.back();
    }
    Token next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
    bool at_eof() const { return peek().kind == Token::Kind::Eof; }
    bool is_kw(const char* k, int off = 0) const {
        return peek(off).kind == Token::Kind::Ident && peek(off).text == k;
    }
    void eat_kw(const char* k) {
        if (!is_kw(k)) diags_.error(peek().pos, "parse", std::string("expected '") + k + "'");
        else next();
    }
    bool accept(Token::Kind k) {
        if (peek().kind == k) {
            next();
            return true;
        }
        return false;
    }
    void expect(Token::Kind k, const char* what) {
        if (!accept(k)) diags_.error(peek().pos, "parse", std::string("expected ") + what);
    }
    Name parse_name(const char* what) {
        if (peek().kind != Token::Kind::Ident) {
            diags_.error(peek().pos, "parse", std::string("expected ") + what);
            return "_err";
        }
        if (reserved_words().count(peek().text)) {
            diags_.error(peek().pos, "parse", "'" + peek().text + "' is reserved");
            return next().text;
        }
        return next().text;
    }
    void sync_to_item() {
        while (!at_eof() && !(is_kw("type") || is_kw("reftype") || is_kw("def") || is_kw("beh") ||
                              is_kw("system") || is_kw("order") || is_kw("qi")))
            next();
    }

    void parse_type(Program& p) {
        TypeDecl t;
        t.kind = TypeDecl::Kind::Data;
        t.pos = peek().pos;
        eat_kw("type");
        t.name = parse_name("type name");
        expect(Token::Kind::Eq, "'='");
        do {
            ConstructorDecl c;
            c.pos = peek().pos;
            c.name = parse_name("constructor name");
            if (is_kw("of")) {
                next();
                if (accept(Token::Kind::LParen)) {
                    do c.arg_types.push_back(parse_name("type name"));
                    while (accept(Token::Kind::Comma));
                    expect(Token::Kind::RParen, "')'");
                } else {
                    c.arg_types.push_back(parse_name("type name"));
                }
            }
            t.ctors.push_back(std::move(c));
        } while (accept(Token::Kind::BarBar));
        p.types.push_back(std::move(t));
    }

    void parse_reftype(Program& p) {
        TypeDecl t;
        t.kind = TypeDecl::Kind::Ref;
        t.pos = peek().pos;
        eat_kw("reftype");
        t.name = parse_name("type name");
        expect(Token::Kind::Eq, "'='");
        eat_kw("ref");
        t.referent = parse_name("referent type name");
        eat_kw("with");
        do {
            RegisterDecl r;
            r.pos = peek().pos;
            r.name = parse_name("register name");
            expect(Token::Kind::Eq, "'='");
            r.default_expr = parse_expr();
            t.registers.push_back(std::move(r));
        } while (accept(Token::Kind::BarBar));
        p.types.push_back(std::move(t));
    }

    std::vector<Param> parse_params() {
        std::vector<Param> ps;
        expect(Token::Kind::LParen, "'('");
        if (!accept(Token::Kind::RParen)) {
            do ps.push_back({parse_name("parameter name"), ""});
            while (accept(Token::Kind::Comma));
            expect(Token::Kind::RParen, "')'");
        }
        return ps;
    }

    void parse_def(Program& p) {
        FunctionDef f;
        f.kind = FunctionDef::Kind::Expression;
        f.pos = peek().pos;
        eat_kw("def");
        f.name = parse_name("function name");
        f.params = parse_params();
        expect(Token::Kind::Colon, "':'");
        f.return_type = parse_name("return type");
        expect(Token::Kind::Eq, "'='");
        f.body = parse_expr_body();
        p.functions.push_back(std::move(f));
    }

    void parse_beh(Program& p) {
        FunctionDef f;
        f.kind = FunctionDef::Kind::Behaviour;
        f.pos = peek().pos;
        eat_kw("beh");
        f.name = parse_name("function name");
        f.params = parse_params();
        f.return_type = "beh";
        expect(Token::Kind::Eq, "'='");
        f.beh = mkbeh(parse_behaviour());
        p.functions.push_back(std::move(f));
    }

    void parse_system(Program& p) {
        eat_kw("system");
        expect(Token::Kind::Eq, "'='");
        do {
            SystemThread t;
            t.pos = peek().pos;
            t.callee = parse_name("behaviour function name");
            expect(Token::Kind::LParen, "'('");
            if (!accept(Token::Kind::RParen)) {
                do t.args.push_back(parse_expr());
                while (accept(Token::Kind::Comma));
                expect(Token::Kind::RParen, "')'");
            }
            p.system.push_back(std::move(t));
        } while (accept(Token::Kind::Comma));
    }

    void parse_order(Program& p) {
        OrderAnnotation o;
        o.pos = peek().pos;
        eat_kw("order");
        do {
            std::vector<Name> cls;
            cls.push_back(parse_name("function name"));
            while (accept(Token::Kind::Eq)) cls.push_back(parse_name("function name"));
            o.classes.push_back(std::move(cls));
        } while (accept(Token::Kind::Gt));
        if (p.order) diags_.error(o.pos, "parse", "duplicate order annotation");
        p.order = std::move(o);
    }

    void parse_qi(Program& p) {
        QiAnnotation q;
        q.pos = peek().pos;
        eat_kw("qi");
        q.symbol = parse_name("symbol name");
        expect(Token::Kind::Eq, "'='");
        q.expr = parse_qi_expr();
        p.qis.push_back(std::move(q));
    }

    // qiexpr := qiterm ('+' qiterm)* ; qiterm := NUM [('/' NUM)] ['*' qifactor] | qifactor
    QiExpr parse_qi_expr() {
        QiExpr sum;
        sum.kind = QiExpr::Kind::Add;
        sum.args.push_back(parse_qi_term());
        while (accept(Token::Kind::Plus)) sum.args.push_back(parse_qi_term());
        if (sum.args.size() == 1) return sum.args[0];
        return sum;
    }

    QiExpr parse_qi_term() {
        if (peek().kind == Token::Kind::Number) {
            long long num = next().number, den = 1;
            if (accept(Token::Kind::Slash)) {
                if (peek().kind != Token::Kind::Number) {
                    diags_.error(peek().pos, "parse", "expected denominator");
                } else {
                    den = next().number;
                }
            }
            if (accept(Token::Kind::Star)) {
                QiExpr s;
                s.kind = QiExpr::Kind::Scale;
                s.num = num;
                s.den = den == 0 ? 1 : den;
                s.args.push_back(parse_qi_factor());
                return s;
            }
            QiExpr c;
            c.kind = QiExpr::Kind::Const;
            c.num = num;
            c.den = den == 0 ? 1 : den;
            return c;
        }
        return parse_qi_factor();
    }

    QiExpr parse_qi_factor() {
        if (is_kw("max")) {
            next();
            QiExpr m;
            m.kind = QiExpr::Kind::Max;
            expect(Token::Kind::LParen, "'('");
            do m.args.push_back(parse_qi_expr());
            while (accept(Token::Kind::Comma));
            expect(Token::Kind::RParen, "')'");
            return m;
        }
        if (accept(Token::Kind::LParen)) {
            QiExpr e = parse_qi_expr();
            expect(Token::Kind::RParen, "')'");
            return e;
        }
        if (peek().kind == Token::Kind::Ident && peek().text.size() > 1 && peek().text[0] == 'x') {
            bool digits = true;
            for (size_t k = 1; k < peek().text.size(); ++k)
                if (!std::isdigit(static_cast<unsigned char>(peek().text[k]))) digits = false;
            if (digits) {
                QiExpr v;
                v.kind = QiExpr::Kind::Var;
                v.var_index = static_cast<int>(std::stol(next().text.substr(1)));
                return v;
            }
        }
        diags_.error(peek().pos, "parse", "expected qi term");
        next();
        QiExpr c;
        c.kind = QiExpr::Kind::Const;
        return c;
    }

    Expr parse_expr() {
        if (accept(Token::Kind::LParen)) {
            Expr e = parse_expr();
            expect(Token::Kind::RParen, "')'");
            return e;
        }
        Pos p = peek().pos;
        Name n = parse_name("expression");
        if (peek().kind == Token::Kind::LParen) {
            next();
            std::vector<Expr> args;
            if (!accept(Token::Kind::RParen)) {
                do args.push_back(parse_expr());
                while (accept(Token::Kind::Comma));
                expect(Token::Kind::RParen, "')'");
            }
            return Expr::apply(n, std::move(args), p);
        }
        return Expr::ident(n, p);
    }

    // Shallow pattern: IDENT or IDENT(v1, ..., vn).
    Pattern parse_pattern() {
        Pos p = peek().pos;
        Name n = parse_name("pattern");
        if (peek().kind == Token::Kind::LParen) {
            next();
            std::vector<Pattern> args;
            if (!accept(Token::Kind::RParen)) {
                do {
                    Pos ap = peek().pos;
                    args.push_back(Pattern::var(parse_name("pattern variable"), ap));
                } while (accept(Token::Kind::Comma));
                expect(Token::Kind::RParen, "')'");
            }
            return Pattern::ctor(n, std::move(args), p);
        }
        // Bare name: variable or nullary constructor, resolved by the typechecker.
        return Pattern::var(n, p);
    }

    ExprBody parse_expr_body() {
        if (is_kw("match")) {
            ExprBody b;
            b.kind = ExprBody::Kind::Match;
            b.pos = peek().pos;
            next();
            b.scrutinee = parse_name("scrutinee variable");
            eat_kw("with");
            b.pattern = parse_pattern();
            eat_kw("then");
            b.then_body = std::make_shared<ExprBody>(parse_expr_body());
            eat_kw("else");
            b.else_body = std::make_shared<ExprBody>(parse_expr_body());
            return b;
        }
        if (peek().kind == Token::Kind::LParen && (is_kw("match", 1))) {
            next();
            ExprBody b = parse_expr_body();
            expect(Token::Kind::RParen, "')'");
            return b;
        }
        ExprBody b;
        b.kind = ExprBody::Kind::Expr;
        b.pos = peek().pos;
        b.expr = parse_expr();
        return b;
    }

    std::pair<Name, std::vector<Expr>> parse_call() {
        Name callee = parse_name("function name");
        std::vector<Expr> args;
        expect(Token::Kind::LParen, "'('");
        if (!accept(Token::Kind::RParen)) {
            do args.push_back(parse_expr());
            while (accept(Token::Kind::Comma));
            expect(Token::Kind::RParen, "')'");
        }
        return {callee, std::move(args)};
    }

    Behaviour parse_behaviour() {
        Pos p = peek().pos;
        if (accept(Token::Kind::LParen)) {
            Behaviour b = parse_behaviour();
            expect(Token::Kind::RParen, "')'");
            return b;
        }
        if (is_kw("stop")) {
            next();
            Behaviour b;
            b.kind = Behaviour::Kind::Stop;
            b.pos = p;
            return b;
        }
        if (is_kw("yield")) {
            next();
            expect(Token::Kind::Dot, "'.'");
            Behaviour b;
            b.kind = Behaviour::Kind::Yield;
            b.pos = p;
            b.cont = mkbeh(parse_behaviour());
            return b;
        }
        if (is_kw("next")) {
            next();
            expect(Token::Kind::Dot, "'.'");
            Behaviour b;
            b.kind = Behaviour::Kind::Next;
            b.pos = p;
            auto [callee, args] = parse_call();
            b.callee = callee;
            b.args = std::move(args);
            return b;
        }
        if (is_kw("match")) {
            next();
            Behaviour b;
            b.kind = Behaviour::Kind::Match;
            b.pos = p;
            b.scrutinee = parse_name("scrutinee variable");
            eat_kw("with");
            b.pattern = parse_pattern();
            eat_kw("then");
            b.then_body = mkbeh(parse_behaviour());
            eat_kw("else");
            b.else_body = mkbeh(parse_behaviour());
            return b;
        }
        if (is_kw("read")) {
            next();
            Behaviour b;
            b.kind = Behaviour::Kind::Read;
            b.pos = p;
            if (accept(Token::Kind::Lt)) {
                b.label = parse_name("read label");
                expect(Token::Kind::Gt, "'>'");
            }
            b.target = parse_name("register or variable");
            eat_kw("with");
            // Branches until the mandatory default, which closes the list.
            while (true) {
                if (peek().kind == Token::Kind::DefaultPat) {
                    next();
                    expect(Token::Kind::Arrow, "'=>'");
                    auto [callee, args] = parse_call();
                    b.default_callee = callee;
                    b.default_args = std::move(args);
                    break;
                }
                ReadBranch br;
                br.pattern = parse_pattern();
                expect(Token::Kind::Arrow, "'=>'");
                br.body = mkbeh(parse_behaviour());
                b.branches.push_back(std::move(br));
                if (!accept(Token::Kind::Bar)) {
                    diags_.error(peek().pos, "parse", "read needs a default branch [_] => f(...)");
                    break;
                }
            }
            return b;
        }
        // Assignment or tail call, one token of lookahead past the name.
        if (peek().kind == Token::Kind::Ident && peek(1).kind == Token::Kind::Assign) {
            Behaviour b;
            b.kind = Behaviour::Kind::Assign;
            b.pos = p;
            b.target = parse_name("register or variable");
            next();  // :=
            b.expr = parse_expr();
            expect(Token::Kind::Dot, "'.'");
            b.cont = mkbeh(parse_behaviour());
            return b;
        }
        Behaviour b;
        b.kind = Behaviour::Kind::TailCall;
        b.pos = p;
        auto [callee, args] = parse_call();
        b.callee = callee;
        b.args = std::move(args);
        return b;
    }

    std::vector<Token> toks_;
    DiagnosticList& diags_;
    size_t i_ = 0;
};

inline Program parse_source(const std::string& text, DiagnosticList& diags) {
    Lexer lex(text, diags);
    Parser p(lex.run(), diags);
    return p.parse_program();
}

}  // namespace synchrone
