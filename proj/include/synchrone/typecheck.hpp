#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ast.hpp"
#include "diagnostics.hpp"

// Name resolution and monomorphic type inference. Parameter types are not
// written in source; they are solved by unification across the whole
// program (behaviours are mutually recursive).

namespace synchrone {

struct TypedProgram {
    Program prog;
    SymbolTable sym;
};

class Typechecker {
  public:
    Typechecker(Program prog, DiagnosticList& diags) : p_(std::move(prog)), diags_(diags) {}

    std::optional<TypedProgram> run() {
        collect_declarations();
        if (diags_.has_errors()) return std::nullopt;
        infer_signatures();
        for (auto& f : p_.functions) check_function(f);
        check_system();
        finish_inference();
        if (diags_.has_errors()) return std::nullopt;
        annotate_types();
        assign_labels();
        if (diags_.has_errors()) return std::nullopt;
        return TypedProgram{std::move(p_), std::move(sym_)};
    }

  private:
    // --- type variables -------------------------------------------------
    struct TNode {
        int parent;
        std::optional<Name> concrete;
    };
    int fresh_tv() {
        tv_.push_back({static_cast<int>(tv_.size()), std::nullopt});
        return static_cast<int>(tv_.size()) - 1;
    }
    int concrete_tv(const Name& t) {
        auto it = concrete_cache_.find(t);
        if (it != concrete_cache_.end()) return it->second;
        tv_.push_back({static_cast<int>(tv_.size()), t});
        concrete_cache_[t] = static_cast<int>(tv_.size()) - 1;
        return static_cast<int>(tv_.size()) - 1;
    }
    int find(int a) {
        while (tv_[a].parent != a) a = tv_[a].parent = tv_[tv_[a].parent].parent;
        return a;
    }
    void unify(int a, int b, Pos pos, const char* what) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (tv_[a].concrete && tv_[b].concrete) {
            if (*tv_[a].concrete != *tv_[b].concrete)
                diags_.error(pos, "type", std::string(what) + ": expected " + *tv_[b].concrete +
                                              ", found " + *tv_[a].concrete);
            return;
        }
        if (tv_[a].concrete) std::swap(a, b);
        tv_[a].parent = b;
    }
    std::optional<Name> resolved(int a) { return tv_[find(a)].concrete; }

    using Scope = std::map<Name, int>;  // variable -> type var

    // --- declarations ---------------------------------------------------
    void collect_declarations() {
        std::set<Name> typenames;
        for (auto& t : p_.types) {
            if (!typenames.insert(t.name).second)
                diags_.error(t.pos, "decl", "type '" + t.name + "' declared twice");
        }
        for (auto& t : p_.types) {
            if (t.kind == TypeDecl::Kind::Data) {
                for (auto& c : t.ctors) {
                    if (sym_.ctors.count(c.name)) {
                        diags_.error(c.pos, "decl", "constructor '" + c.name + "' declared twice");
                        continue;
                    }
                    for (auto& at : c.arg_types)
                        if (!typenames.count(at))
                            diags_.error(c.pos, "decl", "unknown type '" + at + "'");
                    sym_.ctors[c.name] = {c.arg_types, t.name, false};
                }
            } else {
                if (!typenames.count(t.referent))
                    diags_.error(t.pos, "decl", "unknown referent type '" + t.referent + "'");
                sym_.referent_of[t.name] = t.referent;
                for (auto& r : t.registers) {
                    if (sym_.ctors.count(r.name)) {
                        diags_.error(r.pos, "decl", "register '" + r.name + "' collides with another constructor");
                        continue;
                    }
                    sym_.ctors[r.name] = {{}, t.name, true};
                    sym_.registers[r.name] = {t.name, t.referent, Value{},
                                              static_cast<int>(sym_.register_order.size())};
                    sym_.register_order.push_back(r.name);
                }
            }
        }
        int idx = 0;
        for (auto& f : p_.functions) {
            if (sym_.functions.count(f.name))
                diags_.error(f.pos, "decl", "function '" + f.name + "' declared twice");
            if (sym_.ctors.count(f.name))
                diags_.error(f.pos, "decl", "function '" + f.name + "' collides with a constructor");
            Name ret = f.kind == FunctionDef::Kind::Expression ? f.return_type : Name("beh");
            if (f.kind == FunctionDef::Kind::Expression && !typenames.count(f.return_type))
                diags_.error(f.pos, "decl", "unknown return type '" + f.return_type + "'");
            sym_.functions[f.name] = {f.kind, std::vector<Name>(f.params.size()), ret, idx++};
            std::set<Name> seen;
            for (auto& prm : f.params) {
                if (!seen.insert(prm.name).second)
                    diags_.error(f.pos, "decl", "duplicate parameter '" + prm.name + "' in " + f.name);
                if (sym_.ctors.count(prm.name) || sym_.functions.count(prm.name))
                    diags_.error(f.pos, "decl",
                                 "parameter '" + prm.name + "' shadows a declared symbol");
            }
        }
        if (p_.system.empty())
            diags_.error(Pos{}, "decl", "program has no system declaration");
        // Register defaults are closed values of the referent type; registers
        // may appear inside them (their types are already recorded).
        for (auto& t : p_.types) {
            if (t.kind != TypeDecl::Kind::Ref) continue;
            for (auto& r : t.registers) {
                Scope empty;
                int tv = check_expr(r.default_expr, empty, nullptr);
                unify(tv, concrete_tv(t.referent), r.pos, "register default");
                if (auto v = expr_value(r.default_expr)) {
                    if (sym_.registers.count(r.name)) sym_.registers[r.name].default_value = *v;
                } else {
                    diags_.error(r.pos, "decl", "register default must be a value");
                }
            }
        }
    }

    void infer_signatures() {
        for (auto& f : p_.functions) {
            std::vector<int>& tvs = param_tvs_[f.name];
            for (size_t i = 0; i < f.params.size(); ++i) tvs.push_back(fresh_tv());
        }
    }

    // --- expressions ----------------------------------------------------
    // Returns the node's type var; fills node kinds. `fn` is the enclosing
    // function (null inside declarations).
    int check_expr(Expr& e, Scope& scope, const FunctionDef* fn) {
        if (e.kind == Expr::Kind::Ident && e.args.empty()) {
            auto it = scope.find(e.name);
            if (it != scope.end()) {
                if (it->second < 0) {
                    diags_.error(e.pos, "scope",
                                 "'" + e.name + "' (the match scrutinee) is not available in the then branch");
                    return fresh_tv();
                }
                e.kind = Expr::Kind::Var;
                return it->second;
            }
            auto ct = sym_.ctors.find(e.name);
            if (ct != sym_.ctors.end()) {
                if (!ct->second.arg_types.empty()) {
                    diags_.error(e.pos, "type", "constructor '" + e.name + "' expects arguments");
                    return fresh_tv();
                }
                e.kind = Expr::Kind::Ctor;
                return concrete_tv(ct->second.result_type);
            }
            diags_.error(e.pos, "scope", "unknown name '" + e.name + "'");
            return fresh_tv();
        }
        // Application.
        auto ct = sym_.ctors.find(e.name);
        if (ct != sym_.ctors.end()) {
            e.kind = Expr::Kind::Ctor;
            if (e.args.size() != ct->second.arg_types.size()) {
                diags_.error(e.pos, "type", "constructor '" + e.name + "' arity mismatch");
            }
            for (size_t i = 0; i < e.args.size(); ++i) {
                int at = check_expr(e.args[i], scope, fn);
                if (i < ct->second.arg_types.size())
                    unify(at, concrete_tv(ct->second.arg_types[i]), e.args[i].pos, "argument");
            }
            return concrete_tv(ct->second.result_type);
        }
        auto fit = sym_.functions.find(e.name);
        if (fit != sym_.functions.end()) {
            if (fit->second.kind != FunctionDef::Kind::Expression) {
                diags_.error(e.pos, "type", "behaviour '" + e.name + "' used in expression position");
                return fresh_tv();
            }
            e.kind = Expr::Kind::Call;
            auto& tvs = param_tvs_[e.name];
            if (e.args.size() != tvs.size())
                diags_.error(e.pos, "type", "function '" + e.name + "' arity mismatch");
            for (size_t i = 0; i < e.args.size(); ++i) {
                int at = check_expr(e.args[i], scope, fn);
                if (i < tvs.size()) unify(at, tvs[i], e.args[i].pos, "argument");
            }
            return concrete_tv(fit->second.return_type);
        }
        diags_.error(e.pos, "scope", "unknown name '" + e.name + "'");
        for (auto& a : e.args) check_expr(a, scope, fn);
        return fresh_tv();
    }

    // Resolves a pattern at scrutinee type var `tv`. Binds variables into
    // `scope`. Bare names that are declared constructors become nullary
    // constructor patterns.
    void check_pattern(Pattern& pat, int tv, Scope& scope, bool allow_variable) {
        if (pat.kind == Pattern::Kind::Var) {
            auto ct = sym_.ctors.find(pat.name);
            if (ct != sym_.ctors.end()) {
                pat.kind = Pattern::Kind::Ctor;
            } else if (!allow_variable) {
                diags_.error(pat.pos, "type", "match pattern must be a constructor");
                return;
            } else {
                if (scope.count(pat.name))
                    diags_.error(pat.pos, "scope", "pattern variable '" + pat.name + "' shadows another variable");
                scope[pat.name] = tv;
                return;
            }
        }
        auto ct = sym_.ctors.find(pat.name);
        if (ct == sym_.ctors.end()) {
            diags_.error(pat.pos, "scope", "unknown constructor '" + pat.name + "'");
            return;
        }
        if (ct->second.is_register)
            diags_.error(pat.pos, "type", "register '" + pat.name + "' cannot be a pattern");
        unify(concrete_tv(ct->second.result_type), tv, pat.pos, "pattern");
        if (pat.args.size() != ct->second.arg_types.size()) {
            diags_.error(pat.pos, "type", "constructor '" + pat.name + "' arity mismatch in pattern");
            return;
        }
        std::set<Name> seen;
        for (size_t i = 0; i < pat.args.size(); ++i) {
            auto& a = pat.args[i];
            if (a.kind != Pattern::Kind::Var || sym_.ctors.count(a.name)) {
                diags_.error(a.pos, "type", "pattern components must be distinct variables");
                continue;
            }
            if (!seen.insert(a.name).second)
                diags_.error(a.pos, "type", "pattern is not linear: '" + a.name + "' repeats");
            if (scope.count(a.name))
                diags_.error(a.pos, "scope", "pattern variable '" + a.name + "' shadows another variable");
            scope[a.name] = concrete_tv(ct->second.arg_types[i]);
        }
    }

    int check_expr_body(ExprBody& b, Scope scope, const FunctionDef* fn) {
        if (b.kind == ExprBody::Kind::Expr) return check_expr(b.expr, scope, fn);
        auto it = scope.find(b.scrutinee);
        int scrut_tv;
        if (it == scope.end() || it->second < 0) {
            diags_.error(b.pos, "scope", "match scrutinee '" + b.scrutinee + "' is not in scope");
            scrut_tv = fresh_tv();
        } else {
            scrut_tv = it->second;
        }
        Scope then_scope = scope;
        then_scope[b.scrutinee] = -1;  // tombstone: then branch must not use it
        check_pattern(b.pattern, scrut_tv, then_scope, /*allow_variable=*/false);
        int t1 = check_expr_body(*b.then_body, then_scope, fn);
        int t2 = check_expr_body(*b.else_body, scope, fn);
        unify(t1, t2, b.pos, "match branches");
        return t1;
    }

    // A target is a register constant or a variable of reference type.
    // Returns the referent type var the assigned/read value must have.
    int check_target(const Name& target, Pos pos, Scope& scope) {
        auto rit = sym_.registers.find(target);
        if (rit != sym_.registers.end()) return concrete_tv(rit->second.referent);
        auto vit = scope.find(target);
        if (vit != scope.end() && vit->second >= 0) {
            int referent = fresh_tv();
            pending_targets_.push_back({vit->second, referent, pos});
            return referent;
        }
        diags_.error(pos, "scope", "unknown register or variable '" + target + "'");
        return fresh_tv();
    }

    void check_tail_call(const Name& callee, std::vector<Expr>& args, Pos pos, Scope& scope,
                         const FunctionDef* fn) {
        auto it = sym_.functions.find(callee);
        if (it == sym_.functions.end()) {
            diags_.error(pos, "scope", "unknown behaviour function '" + callee + "'");
            for (auto& a : args) check_expr(a, scope, fn);
            return;
        }
        if (it->second.kind != FunctionDef::Kind::Behaviour) {
            diags_.error(pos, "type", "'" + callee + "' is not a behaviour function");
        }
        auto& tvs = param_tvs_[callee];
        if (args.size() != tvs.size())
            diags_.error(pos, "type", "behaviour '" + callee + "' arity mismatch");
        for (size_t i = 0; i < args.size(); ++i) {
            int at = check_expr(args[i], scope, fn);
            if (i < tvs.size()) unify(at, tvs[i], args[i].pos, "argument");
        }
    }

    void check_behaviour(Behaviour& b, Scope scope, const FunctionDef* fn) {
        switch (b.kind) {
            case Behaviour::Kind::Stop:
                return;
            case Behaviour::Kind::TailCall:
            case Behaviour::Kind::Next:
                check_tail_call(b.callee, b.args, b.pos, scope, fn);
                return;
            case Behaviour::Kind::Yield:
                check_behaviour(*b.cont, scope, fn);
                return;
            case Behaviour::Kind::Assign: {
                int referent = check_target(b.target, b.pos, scope);
                int et = check_expr(b.expr, scope, fn);
                unify(et, referent, b.pos, "assigned value");
                check_behaviour(*b.cont, scope, fn);
                return;
            }
            case Behaviour::Kind::Read: {
                int referent = check_target(b.target, b.pos, scope);
                bool saw_variable = false;
                for (auto& br : b.branches) {
                    if (saw_variable)
                        diags_.warning(br.pattern.pos, "dead",
                                       "read branch is unreachable after a variable pattern");
                    Scope bscope = scope;
                    check_pattern(br.pattern, referent, bscope, /*allow_variable=*/true);
                    if (br.pattern.kind == Pattern::Kind::Var) saw_variable = true;
                    check_behaviour(*br.body, bscope, fn);
                }
                if (saw_variable)
                    diags_.warning(b.pos, "dead",
                                   "read default is unreachable after a variable pattern");
                if (b.branches.empty())
                    diags_.error(b.pos, "type", "read needs at least one branch");
                check_tail_call(b.default_callee, b.default_args, b.pos, scope, fn);
                return;
            }
            case Behaviour::Kind::Match: {
                auto it = scope.find(b.scrutinee);
                int scrut_tv;
                if (it == scope.end() || it->second < 0) {
                    diags_.error(b.pos, "scope", "match scrutinee '" + b.scrutinee + "' is not in scope");
                    scrut_tv = fresh_tv();
                } else {
                    scrut_tv = it->second;
                }
                Scope then_scope = scope;
                then_scope[b.scrutinee] = -1;
                check_pattern(b.pattern, scrut_tv, then_scope, /*allow_variable=*/false);
                check_behaviour(*b.then_body, then_scope, fn);
                check_behaviour(*b.else_body, scope, fn);
                return;
            }
        }
    }

    void check_function(FunctionDef& f) {
        Scope scope;
        auto& tvs = param_tvs_[f.name];
        for (size_t i = 0; i < f.params.size() && i < tvs.size(); ++i)
            scope[f.params[i].name] = tvs[i];
        if (f.kind == FunctionDef::Kind::Expression) {
            int bt = check_expr_body(f.body, scope, &f);
            unify(bt, concrete_tv(f.return_type), f.pos, "function body");
        } else {
            check_behaviour(*f.beh, scope, &f);
        }
    }

    void check_system() {
        for (auto& t : p_.system) {
            auto it = sym_.functions.find(t.callee);
            if (it == sym_.functions.end() || it->second.kind != FunctionDef::Kind::Behaviour) {
                diags_.error(t.pos, "type", "system thread '" + t.callee + "' is not a behaviour function");
                continue;
            }
            auto& tvs = param_tvs_[t.callee];
            if (t.args.size() != tvs.size()) {
                diags_.error(t.pos, "type", "system thread '" + t.callee + "' arity mismatch");
                continue;
            }
            for (size_t i = 0; i < t.args.size(); ++i) {
                Scope empty;
                int at = check_expr(t.args[i], empty, nullptr);
                unify(at, tvs[i], t.args[i].pos, "system argument");
                if (!expr_value(t.args[i]))
                    diags_.error(t.args[i].pos, "type", "system arguments must be values");
            }
        }
    }

    // Deferred reference-type obligations, then concreteness of signatures.
    void finish_inference() {
        for (int round = 0; round < 4; ++round) {
            for (auto& ob : pending_targets_) {
                if (ob.done) continue;
                if (auto t = resolved(ob.target_tv)) {
                    auto it = sym_.referent_of.find(*t);
                    if (it == sym_.referent_of.end()) {
                        diags_.error(ob.pos, "type", "'" + *t + "' is not a reference type");
                    } else {
                        unify(ob.referent_tv, concrete_tv(it->second), ob.pos, "referent");
                    }
                    ob.done = true;
                }
            }
        }
        for (auto& ob : pending_targets_)
            if (!ob.done) diags_.error(ob.pos, "type", "cannot infer the register type used here");
        for (auto& f : p_.functions) {
            auto& tvs = param_tvs_[f.name];
            for (size_t i = 0; i < tvs.size(); ++i) {
                auto t = resolved(tvs[i]);
                if (!t) {
                    diags_.error(f.pos, "type", "cannot infer the type of parameter '" +
                                                    f.params[i].name + "' of " + f.name);
                } else {
                    f.params[i].type = *t;
                    sym_.functions[f.name].param_types[i] = *t;
                }
            }
        }
    }

    // Second pass stamping concrete types onto expression nodes (used by the
    // compiler's shape annotations and by pretty reports).
    void annotate_types() {
        for (auto& f : p_.functions) {
            Scope scope;
            auto& tvs = param_tvs_[f.name];
            for (size_t i = 0; i < f.params.size() && i < tvs.size(); ++i)
                scope[f.params[i].name] = tvs[i];
            if (f.kind == FunctionDef::Kind::Expression)
                annotate_expr_body(f.body, scope);
            else
                annotate_behaviour(*f.beh, scope);
        }
        for (auto& t : p_.system)
            for (auto& a : t.args) annotate_expr(a);
        for (auto& t : p_.types)
            if (t.kind == TypeDecl::Kind::Ref)
                for (auto& r : t.registers) annotate_expr(r.default_expr);
    }

    void annotate_expr(Expr& e) {
        if (e.kind == Expr::Kind::Var) {
            // type set from scope during annotate walk; leave if already set
        } else if (e.kind == Expr::Kind::Ctor) {
            e.type = sym_.ctors[e.name].result_type;
        } else if (e.kind == Expr::Kind::Call) {
            e.type = sym_.functions[e.name].return_type;
        }
        for (auto& a : e.args) annotate_expr(a);
    }

    void annotate_expr_scoped(Expr& e, Scope& scope) {
        if (e.kind == Expr::Kind::Var) {
            auto it = scope.find(e.name);
            if (it != scope.end() && it->second >= 0)
                if (auto t = resolved(it->second)) e.type = *t;
        }
        if (e.kind == Expr::Kind::Ctor) e.type = sym_.ctors[e.name].result_type;
        if (e.kind == Expr::Kind::Call) e.type = sym_.functions[e.name].return_type;
        for (auto& a : e.args) annotate_expr_scoped(a, scope);
    }

    void bind_pattern(const Pattern& pat, Scope& scope) {
        if (pat.kind == Pattern::Kind::Var) return;  // handled by caller for variables
        auto& info = sym_.ctors[pat.name];
        for (size_t i = 0; i < pat.args.size() && i < info.arg_types.size(); ++i)
            scope[pat.args[i].name] = concrete_tv(info.arg_types[i]);
    }

    void annotate_expr_body(ExprBody& b, Scope scope) {
        if (b.kind == ExprBody::Kind::Expr) {
            annotate_expr_scoped(b.expr, scope);
            return;
        }
        Scope then_scope = scope;
        then_scope.erase(b.scrutinee);
        bind_pattern(b.pattern, then_scope);
        annotate_expr_body(*b.then_body, then_scope);
        annotate_expr_body(*b.else_body, scope);
    }

    Name target_referent(const Name& target, Scope& scope) {
        auto rit = sym_.registers.find(target);
        if (rit != sym_.registers.end()) return rit->second.referent;
        auto vit = scope.find(target);
        if (vit != scope.end())
            if (auto t = resolved(vit->second)) {
                auto r = sym_.referent_of.find(*t);
                if (r != sym_.referent_of.end()) return r->second;
            }
        return "";
    }

    void annotate_behaviour(Behaviour& b, Scope scope) {
        switch (b.kind) {
            case Behaviour::Kind::Stop:
                return;
            case Behaviour::Kind::TailCall:
            case Behaviour::Kind::Next:
                for (auto& a : b.args) annotate_expr_scoped(a, scope);
                return;
            case Behaviour::Kind::Yield:
                annotate_behaviour(*b.cont, scope);
                return;
            case Behaviour::Kind::Assign:
                annotate_expr_scoped(b.expr, scope);
                annotate_behaviour(*b.cont, scope);
                return;
            case Behaviour::Kind::Read: {
                Name referent = target_referent(b.target, scope);
                for (auto& br : b.branches) {
                    Scope bscope = scope;
                    if (br.pattern.kind == Pattern::Kind::Var)
                        bscope[br.pattern.name] = concrete_tv(referent);
                    else
                        bind_pattern(br.pattern, bscope);
                    annotate_behaviour(*br.body, bscope);
                }
                for (auto& a : b.default_args) annotate_expr_scoped(a, scope);
                return;
            }
            case Behaviour::Kind::Match: {
                Scope then_scope = scope;
                then_scope.erase(b.scrutinee);
                bind_pattern(b.pattern, then_scope);
                annotate_behaviour(*b.then_body, then_scope);
                annotate_behaviour(*b.else_body, scope);
                return;
            }
        }
    }

    // --- read labels ----------------------------------------------------
    void collect_taken_names(std::set<Name>& taken) {
        for (auto& [n, _] : sym_.ctors) taken.insert(n);
        for (auto& [n, _] : sym_.functions) taken.insert(n);
        for (auto& f : p_.functions) {
            for (auto& prm : f.params) taken.insert(prm.name);
            if (f.beh) collect_bound_vars(*f.beh, taken);
            if (f.kind == FunctionDef::Kind::Expression) collect_bound_vars_eb(f.body, taken);
        }
    }
    static void collect_pattern_vars(const Pattern& p, std::set<Name>& out) {
        if (p.kind == Pattern::Kind::Var) out.insert(p.name);
        for (auto& a : p.args) collect_pattern_vars(a, out);
    }
    void collect_bound_vars_eb(const ExprBody& b, std::set<Name>& out) {
        if (b.kind != ExprBody::Kind::Match) return;
        collect_pattern_vars(b.pattern, out);
        collect_bound_vars_eb(*b.then_body, out);
        collect_bound_vars_eb(*b.else_body, out);
    }
    void collect_bound_vars(const Behaviour& b, std::set<Name>& out) {
        switch (b.kind) {
            case Behaviour::Kind::Yield: collect_bound_vars(*b.cont, out); return;
            case Behaviour::Kind::Assign: collect_bound_vars(*b.cont, out); return;
            case Behaviour::Kind::Read:
                for (auto& br : b.branches) {
                    collect_pattern_vars(br.pattern, out);
                    collect_bound_vars(*br.body, out);
                }
                return;
            case Behaviour::Kind::Match:
                collect_pattern_vars(b.pattern, out);
                collect_bound_vars(*b.then_body, out);
                collect_bound_vars(*b.else_body, out);
                return;
            default:
                return;
        }
    }

    void assign_labels_in(Behaviour& b, const Name& fn, std::set<Name>& taken, int& counter) {
        switch (b.kind) {
            case Behaviour::Kind::Yield:
                assign_labels_in(*b.cont, fn, taken, counter);
                return;
            case Behaviour::Kind::Assign:
                assign_labels_in(*b.cont, fn, taken, counter);
                return;
            case Behaviour::Kind::Read: {
                if (b.label.empty()) {
                    Name candidate;
                    do candidate = "u" + std::to_string(++counter);
                    while (taken.count(candidate));
                    b.label = candidate;
                } else if (taken.count(b.label) || labels_.count(b.label)) {
                    diags_.error(b.pos, "decl",
                                 "read label '" + b.label + "' collides with another name");
                }
                labels_.insert(b.label);
                taken.insert(b.label);
                sym_.reads.push_back({fn, b.label, static_cast<int>(sym_.reads.size())});
                for (auto& br : b.branches) assign_labels_in(*br.body, fn, taken, counter);
                return;
            }
            case Behaviour::Kind::Match:
                assign_labels_in(*b.then_body, fn, taken, counter);
                assign_labels_in(*b.else_body, fn, taken, counter);
                return;
            default:
                return;
        }
    }

    void assign_labels() {
        std::set<Name> taken;
        collect_taken_names(taken);
        int counter = 0;
        for (auto& f : p_.functions)
            if (f.kind == FunctionDef::Kind::Behaviour)
                assign_labels_in(*f.beh, f.name, taken, counter);
    }

    // --- helpers ----------------------------------------------------------
    std::optional<Value> expr_value(const Expr& e) const {
        if (e.kind != Expr::Kind::Ctor && !(e.kind == Expr::Kind::Ident && sym_.ctors.count(e.name)))
            return std::nullopt;
        Value v;
        v.head = e.name;
        for (auto& a : e.args) {
            auto av = expr_value(a);
            if (!av) return std::nullopt;
            v.args.push_back(std::move(*av));
        }
        return v;
    }

    struct TargetObligation {
        int target_tv;
        int referent_tv;
        Pos pos;
        bool done = false;
    };

    Program p_;
    DiagnosticList& diags_;
    SymbolTable sym_;
    std::vector<TNode> tv_;
    std::map<Name, int> concrete_cache_;
    std::map<Name, std::vector<int>> param_tvs_;
    std::vector<TargetObligation> pending_targets_;
    std::set<Name> labels_;
};

inline std::optional<TypedProgram> typecheck(Program prog, DiagnosticList& diags) {
    Typechecker tc(std::move(prog), diags);
    return tc.run();
}

// Convenience used by values appearing in already-typechecked positions.
inline Value expr_to_value(const Expr& e) {
    Value v;
    v.head = e.name;
    for (auto& a : e.args) v.args.push_back(expr_to_value(a));
    return v;
}

}  // namespace synchrone
