#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

// Core syntax of the two-level language: first-order values and expressions
// below, cooperative behaviours above. Nodes carry source positions for
// diagnostics and resolved kinds filled in by the typechecker.

namespace synchrone {

using Name = std::string;

struct Pos {
    int line = 0;
    int col = 0;
};

// A value is a constructor term. Registers are nullary constructors of their
// reference type, so they appear here as heads with no arguments.
struct Value {
    Name head;
    std::vector<Value> args;

    bool operator==(const Value& o) const { return head == o.head && args == o.args; }
    bool operator!=(const Value& o) const { return !(*this == o); }
};

inline Value mkval(Name head, std::vector<Value> args = {}) {
    return Value{std::move(head), std::move(args)};
}

// |c| = 0 for nullary heads, 1 + sum of argument sizes otherwise.
inline unsigned long long value_size(const Value& v) {
    if (v.args.empty()) return 0;
    unsigned long long n = 1;
    for (const auto& a : v.args) n += value_size(a);
    return n;
}

// Shallow or nested constructor pattern. Branch patterns in source are
// shallow linear c(x1..xn) or a bare variable; nested patterns only arise
// internally (control-point vectors).
struct Pattern {
    enum class Kind { Var, Ctor } kind = Kind::Var;
    Name name;                  // variable name or constructor head
    std::vector<Pattern> args;  // for Kind::Ctor
    Pos pos;

    static Pattern var(Name n, Pos p = {}) { return Pattern{Kind::Var, std::move(n), {}, p}; }
    static Pattern ctor(Name n, std::vector<Pattern> as = {}, Pos p = {}) {
        return Pattern{Kind::Ctor, std::move(n), std::move(as), p};
    }
};

// Expressions: variables, constructor applications, function calls.
// The parser emits Ident/Apply; the resolver rewrites each node's kind.
struct Expr {
    enum class Kind { Ident, Var, Ctor, Call } kind = Kind::Ident;
    Name name;
    std::vector<Expr> args;
    Pos pos;
    Name type;  // filled by the typechecker

    static Expr ident(Name n, Pos p = {}) { return Expr{Kind::Ident, std::move(n), {}, p, {}}; }
    static Expr apply(Name n, std::vector<Expr> as, Pos p = {}) {
        return Expr{Kind::Ident, std::move(n), std::move(as), p, {}};
    }
};

// Expression bodies: plain expression or match with the asymmetric scoping
// rule (then sees the components but not the scrutinee; else the reverse).
struct ExprBody {
    enum class Kind { Expr, Match } kind = Kind::Expr;
    Expr expr;  // for Kind::Expr
    // for Kind::Match
    Name scrutinee;
    Pattern pattern;  // shallow c(y...)
    std::shared_ptr<ExprBody> then_body;
    std::shared_ptr<ExprBody> else_body;
    Pos pos;
};

struct Behaviour;
using BehaviourPtr = std::shared_ptr<Behaviour>;

struct ReadBranch {
    Pattern pattern;  // shallow c(y...) or variable
    BehaviourPtr body;
};

struct Behaviour {
    enum class Kind { Stop, TailCall, Yield, Next, Assign, Read, Match } kind = Kind::Stop;
    Pos pos;

    // TailCall / Next: callee + args. Next's continuation is the call itself.
    Name callee;
    std::vector<Expr> args;

    // Yield: continuation.
    BehaviourPtr cont;

    // Assign: target := expr . cont
    Name target;       // register constant or variable
    Expr expr;

    // Read: target register/variable, optional explicit label, branches,
    // mandatory default tail call.
    Name label;  // empty until the typechecker assigns one
    std::vector<ReadBranch> branches;
    Name default_callee;
    std::vector<Expr> default_args;

    // Match
    Name scrutinee;
    Pattern pattern;
    BehaviourPtr then_body;
    BehaviourPtr else_body;
};

inline BehaviourPtr mkbeh(Behaviour b) { return std::make_shared<Behaviour>(std::move(b)); }

struct ConstructorDecl {
    Name name;
    std::vector<Name> arg_types;
    Pos pos;
};

struct RegisterDecl {
    Name name;
    Expr default_expr;  // must denote a value of the referent type
    Pos pos;
};

struct TypeDecl {
    enum class Kind { Data, Ref } kind = Kind::Data;
    Name name;
    std::vector<ConstructorDecl> ctors;  // Kind::Data
    Name referent;                       // Kind::Ref
    std::vector<RegisterDecl> registers; // Kind::Ref
    Pos pos;
};

struct Param {
    Name name;
    Name type;  // filled by the typechecker for behaviours? declared for defs
};

struct FunctionDef {
    enum class Kind { Expression, Behaviour } kind = Kind::Expression;
    Name name;
    std::vector<Param> params;
    Name return_type;  // expression functions only
    ExprBody body;     // expression functions
    BehaviourPtr beh;  // behaviour functions
    Pos pos;
};

struct SystemThread {
    Name callee;
    std::vector<Expr> args;  // value expressions
    Pos pos;
};

// `order f > g = h > k`: classes from highest to lowest, members equal.
struct OrderAnnotation {
    std::vector<std::vector<Name>> classes;
    Pos pos;
};

// `qi f = max(2*x1, x2 + 1)`: raw expression tree, normalized later.
struct QiExpr {
    enum class Kind { Const, Var, Add, Scale, Max } kind = Kind::Const;
    long long num = 0, den = 1;          // Const / Scale factor
    int var_index = 0;                   // Var: 1-based position
    std::vector<QiExpr> args;            // Add / Max / Scale(single arg)
};

struct QiAnnotation {
    Name symbol;
    QiExpr expr;
    Pos pos;
};

struct Program {
    std::vector<TypeDecl> types;
    std::vector<FunctionDef> functions;
    std::vector<SystemThread> system;
    std::optional<OrderAnnotation> order;
    std::vector<QiAnnotation> qis;
};

// Resolved symbol tables produced by the typechecker.
struct CtorInfo {
    std::vector<Name> arg_types;
    Name result_type;
    bool is_register = false;
};

struct RegisterInfo {
    Name ref_type;
    Name referent;
    Value default_value;
    int decl_index = 0;
};

struct FnInfo {
    FunctionDef::Kind kind;
    std::vector<Name> param_types;
    Name return_type;  // "beh" for behaviours
    int decl_index = 0;
};

struct ReadSite {
    Name fn;
    Name label;
    int global_index = 0;  // source order across the whole program
};

struct SymbolTable {
    std::map<Name, CtorInfo> ctors;        // includes registers
    std::map<Name, RegisterInfo> registers;
    std::map<Name, FnInfo> functions;
    std::map<Name, Name> referent_of;      // ref type -> referent type
    std::vector<Name> register_order;      // declaration order
    std::vector<ReadSite> reads;           // global source order
};

// Closed constructor expressions denote values (register defaults, system
// arguments). Register names count: they are nullary constructors of their
// reference type.
inline std::optional<Value> closed_value(const Expr& e, const SymbolTable& sym) {
    auto it = sym.ctors.find(e.name);
    if (it == sym.ctors.end()) return std::nullopt;
    if (it->second.arg_types.size() != e.args.size()) return std::nullopt;
    Value v;
    v.head = e.name;
    for (auto& a : e.args) {
        auto av = closed_value(a, sym);
        if (!av) return std::nullopt;
        v.args.push_back(std::move(*av));
    }
    return v;
}

// Matches a shallow-or-nested pattern against a value; on success extends
// `out` (fails on inconsistent repeated variables, though source patterns
// are linear).
inline bool match_pattern(const Pattern& p, const Value& v, std::map<Name, Value>& out) {
    if (p.kind == Pattern::Kind::Var) {
        auto it = out.find(p.name);
        if (it != out.end()) return it->second == v;
        out.emplace(p.name, v);
        return true;
    }
    if (p.name != v.head || p.args.size() != v.args.size()) return false;
    for (size_t i = 0; i < p.args.size(); ++i)
        if (!match_pattern(p.args[i], v.args[i], out)) return false;
    return true;
}

}  // namespace synchrone
