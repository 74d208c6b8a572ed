#pragma once

// Source-to-bytecode translation. Stack slots are addressed from the bottom
// of the frame, so argument loads stay valid while outer calls push partial
// results. A variable read branch always matches: later branches and the
// default are unreachable and are not emitted.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "synchrone/ast.hpp"
#include "synchrone/bytecode.hpp"
#include "synchrone/typecheck.hpp"

namespace synchrone {

namespace detail {

using Env = std::vector<Name>;

// Rightmost occurrence, 1-based from the bottom; the innermost binding wins.
inline long long slot_of(const Name& x, const Env& env) {
    for (size_t i = env.size(); i > 0; --i)
        if (env[i - 1] == x) return static_cast<long long>(i);
    throw std::logic_error("compile: unbound variable '" + x + "'");
}

// Leftmost leaf in evaluation order: the first value the compiled expression
// pushes. Returns the variable name, or empty for a nullary head.
inline Name first_leaf(const Expr& e) {
    if (e.kind == Expr::Kind::Var) return e.name;
    if (e.args.empty()) return "";
    return first_leaf(e.args[0]);
}

inline int count_var(const Expr& e, const Name& x) {
    if (e.kind == Expr::Kind::Var) return e.name == x ? 1 : 0;
    int n = 0;
    for (auto& a : e.args) n += count_var(a, x);
    return n;
}

class FunctionCompiler {
  public:
    FunctionCompiler(const SymbolTable& sym) : sym_(sym) {}

    Segment run(const FunctionDef& f) {
        Segment s;
        s.name = f.name;
        s.param_types = sym_.functions.at(f.name).param_types;
        s.result = sym_.functions.at(f.name).return_type;
        Env env;
        for (auto& p : f.params) env.push_back(p.name);
        if (f.kind == FunctionDef::Kind::Expression) {
            expr_body(f.body, env);
        } else {
            behaviour(*f.beh, env);
        }
        s.code = std::move(code_);
        return s;
    }

  private:
    long long emit(Instr I) {
        code_.push_back(I);
        return static_cast<long long>(code_.size());  // 1-based address
    }
    long long here() const { return static_cast<long long>(code_.size()) + 1; }

    // Push the value of e; slots referenced by index are stable under pushes.
    void expr(const Expr& e, const Env& env) {
        switch (e.kind) {
            case Expr::Kind::Var:
                emit({Op::Load, "", slot_of(e.name, env)});
                break;
            case Expr::Kind::Ctor:
                for (auto& a : e.args) expr(a, env);
                emit({Op::Build, e.name, static_cast<long long>(e.args.size())});
                break;
            case Expr::Kind::Call:
                for (auto& a : e.args) expr(a, env);
                emit({Op::Call, e.name, static_cast<long long>(e.args.size())});
                break;
            case Expr::Kind::Ident:
                throw std::logic_error("compile: unresolved identifier '" + e.name + "'");
        }
    }

    // As expr, but the first leaf value is already on top of the stack.
    void expr_in_place(const Expr& e, const Env& env) {
        if (e.kind == Expr::Kind::Var) return;  // the value stands for it
        if (e.args.empty() || e.kind == Expr::Kind::Ident)
            throw std::logic_error("compile: in-place argument must start at a leaf");
        expr_in_place(e.args[0], env);
        for (size_t i = 1; i < e.args.size(); ++i) expr(e.args[i], env);
        emit({e.kind == Expr::Kind::Ctor ? Op::Build : Op::Call, e.name,
              static_cast<long long>(e.args.size())});
    }

    void expr_body(const ExprBody& b, const Env& env) {
        if (b.kind == ExprBody::Kind::Expr) {
            expr(b.expr, env);
            emit({Op::Return, "", 0});
            return;
        }
        match_node(
            b.scrutinee, b.pattern, env, [&](const Env& e2) { expr_body(*b.then_body, e2); },
            [&](const Env& e2) { expr_body(*b.else_body, e2); });
    }

    template <class Then, class Else>
    void match_node(const Name& scrut, const Pattern& pat, const Env& env, Then then_k,
                    Else else_k) {
        Env then_env = env;
        Env else_env = env;
        if (!env.empty() && env.back() == scrut) {
            // scrutinee on top: branch consumes it in the then arm
            then_env.pop_back();
        } else {
            emit({Op::Load, "", slot_of(scrut, env)});
            else_env.push_back(scrut);  // the duplicate survives a failed test
        }
        long long bpos = emit({Op::Branch, pat.name, 0});
        for (auto& a : pat.args) then_env.push_back(a.name);
        then_k(then_env);
        code_[static_cast<size_t>(bpos) - 1].a = here();
        else_k(else_env);
    }

    Instr register_operand(Op op, const Name& target, const Env& env) {
        if (sym_.registers.count(target)) return {op, target, 0};
        return {op, "", slot_of(target, env)};
    }

    void behaviour(const Behaviour& b, const Env& env) {
        switch (b.kind) {
            case Behaviour::Kind::Stop:
                emit({Op::Stop, "", 0});
                return;
            case Behaviour::Kind::TailCall:
                for (auto& a : b.args) expr(a, env);
                emit({Op::Tcall, b.callee, static_cast<long long>(b.args.size())});
                return;
            case Behaviour::Kind::Yield:
                emit({Op::Yield, "", 0});
                behaviour(*b.cont, env);
                return;
            case Behaviour::Kind::Next:
                // arguments evaluate after the instant boundary
                emit({Op::Next, "", 0});
                for (auto& a : b.args) expr(a, env);
                emit({Op::Tcall, b.callee, static_cast<long long>(b.args.size())});
                return;
            case Behaviour::Kind::Assign:
                expr(b.expr, env);
                emit(register_operand(Op::Write, b.target, env));
                behaviour(*b.cont, env);
                return;
            case Behaviour::Kind::Match:
                match_node(
                    b.scrutinee, b.pattern, env,
                    [&](const Env& e2) { behaviour(*b.then_body, e2); },
                    [&](const Env& e2) { behaviour(*b.else_body, e2); });
                return;
            case Behaviour::Kind::Read:
                read_node(b, env);
                return;
        }
    }

    void read_node(const Behaviour& b, const Env& env) {
        long long j0 = emit(register_operand(Op::Read, b.target, env));
        for (auto& br : b.branches) {
            if (br.pattern.kind == Pattern::Kind::Var) {
                // always matches; anything after this branch is unreachable
                Env env2 = env;
                env2.push_back(br.pattern.name);
                variable_branch(br, env2);
                return;
            }
            long long bpos = emit({Op::Branch, br.pattern.name, 0});
            Env env2 = env;
            for (auto& a : br.pattern.args) env2.push_back(a.name);
            behaviour(*br.body, env2);
            code_[static_cast<size_t>(bpos) - 1].a = here();
        }
        emit({Op::Wait, "", j0});
        for (auto& a : b.default_args) expr(a, env);
        emit({Op::Tcall, b.default_callee, static_cast<long long>(b.default_args.size())});
    }

    // A direct call that consumes the read value where it sits keeps the
    // caller frame below the callee; everything else takes the tail path.
    void variable_branch(const ReadBranch& br, const Env& env) {
        const Name& v = env.back();
        const Behaviour& body = *br.body;
        bool in_place = body.kind == Behaviour::Kind::TailCall && !body.args.empty() &&
                        first_leaf(body.args[0]) == v;
        if (in_place) {
            int uses = 0;
            for (auto& a : body.args) uses += count_var(a, v);
            in_place = uses == 1;
        }
        if (!in_place) {
            behaviour(body, env);
            return;
        }
        expr_in_place(body.args[0], env);
        for (size_t i = 1; i < body.args.size(); ++i) expr(body.args[i], env);
        emit({Op::Call, body.callee, static_cast<long long>(body.args.size())});
        emit({Op::Return, "", 0});
    }

    const SymbolTable& sym_;
    std::vector<Instr> code_;
};

}  // namespace detail

inline BytecodeProgram compile_program(const TypedProgram& tp) {
    BytecodeProgram bp;
    bp.types = tp.prog.types;
    bp.system = tp.prog.system;
    bp.sym = tp.sym;
    for (auto& f : tp.prog.functions) bp.segments.push_back(detail::FunctionCompiler(tp.sym).run(f));
    return bp;
}

}  // namespace synchrone
