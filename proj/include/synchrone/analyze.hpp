#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfa.hpp"
#include "control_points.hpp"
#include "lpo.hpp"
#include "maxplus.hpp"
#include "term.hpp"
#include "typecheck.hpp"

// End-to-end static pipeline: read-once, control points, termination by
// LPO, quasi-interpretation, value size bound and the per-instant space
// polynomial. Annotations come from the source or from a sidecar program
// holding only `order` and `qi` items; inline annotations win.

namespace synchrone {

// n * (K*(V+2)^A + 1) * S * V + R * V. The middle factor bounds the
// nested same-instant calls of one thread: the function rank can drop at
// most K times and within a rank the argument tuples descend
// lexicographically, each ground component chain having length at most
// V+1. S bounds the slots of one frame, R charges the registers.
struct SpaceParams {
    long long k = 0;  // function symbols
    long long a = 0;  // widest symbol arity
    long long s = 0;  // frame slot bound
    long long r = 0;  // registers
    int n = 0;        // threads
};

inline Rat space_bound_at(const SpaceParams& p, const Rat& v) {
    Rat pw = 1;
    for (long long i = 0; i < p.a; ++i) pw *= v + 2;
    Rat depth = Rat(p.k) * pw + 1;
    return Rat(p.n) * depth * Rat(p.s) * v + Rat(p.r) * v;
}

struct SpaceReport {
    SpaceParams params;
    Rat value_bound = 0;  // V
    Rat bound = 0;
    bool ptime = false;  // linear LPO
};

struct AnalyzeReport {
    CfaResult cfa;
    ControlPointsResult cps;

    std::string lpo_source;  // "annotation" or "search"
    LpoReport lpo;

    std::string qi_source;  // "annotation" or "synthesis"
    std::vector<std::string> qi_errors;
    std::optional<Assignment> qi;
    QiReport qi_check;
    long long qi_tried = 0;

    std::optional<SizeBoundReport> size;
    std::optional<SpaceReport> space;

    bool ok() const {
        return cfa.ok && lpo.ok && qi.has_value() && qi_check.ok;
    }
};

namespace detail {

inline int expr_slots(const Expr& e) {
    // operand stack high-water mark when evaluating e left to right
    int best = 1;
    int held = 0;
    for (auto& a : e.args) {
        best = std::max(best, held + expr_slots(a));
        held += 1;
    }
    return best;
}

inline void max_expr_slots(const ExprBody& b, int& out) {
    if (b.kind == ExprBody::Kind::Expr) {
        out = std::max(out, expr_slots(b.expr));
        return;
    }
    max_expr_slots(*b.then_body, out);
    max_expr_slots(*b.else_body, out);
}

inline void max_expr_slots(const Behaviour& b, int& out) {
    switch (b.kind) {
        case Behaviour::Kind::Stop:
            return;
        case Behaviour::Kind::TailCall:
            for (auto& a : b.args) out = std::max(out, expr_slots(a));
            return;
        case Behaviour::Kind::Yield:
            return max_expr_slots(*b.cont, out);
        case Behaviour::Kind::Next:
            for (auto& a : b.args) out = std::max(out, expr_slots(a));
            return;
        case Behaviour::Kind::Assign:
            out = std::max(out, expr_slots(b.expr));
            return max_expr_slots(*b.cont, out);
        case Behaviour::Kind::Read:
            for (auto& br : b.branches) max_expr_slots(*br.body, out);
            for (auto& a : b.default_args) out = std::max(out, expr_slots(a));
            return;
        case Behaviour::Kind::Match:
            max_expr_slots(*b.then_body, out);
            max_expr_slots(*b.else_body, out);
            return;
    }
}

inline int pattern_slots(const Behaviour& b) {
    // components pushed by matches and read branches along one path
    switch (b.kind) {
        case Behaviour::Kind::Stop:
            return 0;
        case Behaviour::Kind::TailCall:
            return 0;
        case Behaviour::Kind::Yield:
            return pattern_slots(*b.cont);
        case Behaviour::Kind::Next:
            return 0;
        case Behaviour::Kind::Assign:
            return pattern_slots(*b.cont);
        case Behaviour::Kind::Read: {
            int best = 0;
            for (auto& br : b.branches) {
                int w = static_cast<int>(br.pattern.args.size()) + 1;
                best = std::max(best, w + pattern_slots(*br.body));
            }
            return best;
        }
        case Behaviour::Kind::Match: {
            int t = static_cast<int>(b.pattern.args.size()) + pattern_slots(*b.then_body);
            return std::max(t, pattern_slots(*b.else_body));
        }
    }
    return 0;
}

inline int pattern_slots(const ExprBody& b) {
    if (b.kind == ExprBody::Kind::Expr) return 0;
    int t = static_cast<int>(b.pattern.args.size()) + pattern_slots(*b.then_body);
    return std::max(t, pattern_slots(*b.else_body));
}

}  // namespace detail

// Arities of the constraint-level symbols: behaviours under their hatted
// name with the read variables appended, expression functions as declared.
inline std::map<Name, size_t> constraint_arities(const TypedProgram& tp,
                                                 const ControlPointsResult& cps) {
    std::map<Name, size_t> ar;
    for (auto& f : tp.prog.functions) {
        if (f.kind == FunctionDef::Kind::Behaviour)
            ar[hat(f.name)] = cps.hat_params.at(hat(f.name)).size();
        else
            ar[f.name] = f.params.size();
    }
    return ar;
}

struct AnnotationSet {
    std::optional<OrderAnnotation> order;
    std::vector<QiAnnotation> qis;
};

// Inline annotations shadow the sidecar ones symbol by symbol.
inline AnnotationSet merge_annotations(const Program& inline_src, const Program* sidecar) {
    AnnotationSet out;
    out.order = inline_src.order;
    if (!out.order && sidecar) out.order = sidecar->order;
    std::set<Name> seen;
    for (auto& q : inline_src.qis) {
        out.qis.push_back(q);
        seen.insert(q.symbol);
    }
    if (sidecar)
        for (auto& q : sidecar->qis)
            if (!seen.count(q.symbol)) out.qis.push_back(q);
    return out;
}

inline AnalyzeReport analyze_program(const TypedProgram& tp, const Program* sidecar = nullptr,
                                     unsigned seed = 0) {
    AnalyzeReport rep;
    rep.cfa = analyze_read_once(tp);
    rep.cps = control_points(tp, rep.cfa);
    if (!rep.cfa.ok) return rep;

    auto arities = constraint_arities(tp, rep.cps);
    std::set<Name> fns;
    for (auto& [f, _] : arities) fns.insert(f);
    AnnotationSet ann = merge_annotations(tp.prog, sidecar);

    if (ann.order) {
        rep.lpo_source = "annotation";
        rep.lpo = lpo_check(rep.cps.constraints, Precedence::of(ann.order->classes), fns);
    } else {
        rep.lpo_source = "search";
        rep.lpo = lpo_search(rep.cps.constraints, fns);
    }

    if (!ann.qis.empty()) {
        rep.qi_source = "annotation";
        Assignment asg = base_assignment(tp.sym, 1);
        for (auto& q : ann.qis) {
            auto it = arities.find(q.symbol);
            if (it == arities.end()) {
                rep.qi_errors.push_back("qi names unknown symbol '" + q.symbol + "'");
                continue;
            }
            std::string err;
            auto mp = maxplus_of_qi(q.expr, it->second, err);
            if (!mp) {
                rep.qi_errors.push_back("qi for '" + q.symbol + "': " + err);
                continue;
            }
            asg.q[q.symbol] = std::move(*mp);
        }
        for (auto& [f, n] : arities)
            if (!asg.q.count(f)) rep.qi_errors.push_back("no qi for '" + f + "'");
        if (rep.qi_errors.empty()) {
            auto bad = validate_assignment(asg, tp.sym);
            for (auto& e : bad) rep.qi_errors.push_back(e);
        }
        if (rep.qi_errors.empty()) {
            rep.qi_check = check_assignment(asg, rep.cps.constraints, seed);
            rep.qi = std::move(asg);
        }
    } else {
        rep.qi_source = "synthesis";
        auto syn = synthesize(rep.cps.constraints, arities, tp.sym, 200000, seed);
        rep.qi_tried = syn.tried;
        if (syn.assignment) {
            rep.qi_check = check_assignment(*syn.assignment, rep.cps.constraints, seed);
            rep.qi = std::move(syn.assignment);
        } else {
            rep.qi_errors.push_back("quasi-interpretation synthesis failed: " + syn.note);
        }
    }

    if (!rep.qi || !rep.qi_check.ok || tp.prog.system.empty()) return rep;

    int n = static_cast<int>(tp.prog.system.size());
    int m = static_cast<int>(tp.sym.reads.size());
    Rat c = 0;
    std::vector<Name> initial;
    for (auto& th : tp.prog.system) {
        initial.push_back(hat(th.callee));
        for (auto& a : th.args) {
            auto v = closed_value(a, tp.sym);
            if (v) c = std::max(c, Rat(value_size(*v)));
        }
    }
    for (auto& [r, info] : tp.sym.registers) c = std::max(c, Rat(value_size(info.default_value)));
    std::sort(initial.begin(), initial.end());
    initial.erase(std::unique(initial.begin(), initial.end()), initial.end());
    rep.size = size_bound(*rep.qi, initial, n, m, c);

    if (!rep.lpo.ok) return rep;

    SpaceReport sp;
    sp.params.k = static_cast<long long>(arities.size());
    for (auto& [f, a] : arities) sp.params.a = std::max(sp.params.a, static_cast<long long>(a));
    int slots = 1;
    for (auto& f : tp.prog.functions) {
        int w = 0;
        int pats = 0;
        if (f.kind == FunctionDef::Kind::Behaviour) {
            detail::max_expr_slots(*f.beh, w);
            pats = detail::pattern_slots(*f.beh);
        } else {
            detail::max_expr_slots(f.body, w);
            pats = detail::pattern_slots(f.body);
        }
        int s = static_cast<int>(f.params.size()) + pats + w + 2;
        slots = std::max(slots, s);
    }
    sp.params.s = slots;
    sp.params.r = static_cast<long long>(tp.sym.register_order.size());
    sp.params.n = n;
    sp.value_bound = rep.size->bound;
    sp.bound = space_bound_at(sp.params, sp.value_bound);
    sp.ptime = rep.lpo.linear;
    rep.space = sp;
    return rep;
}

inline std::vector<std::string> generic_vars(size_t n) {
    std::vector<std::string> vs;
    if (n == 1) return {"x"};
    for (size_t i = 1; i <= n; ++i) vs.push_back("x" + std::to_string(i));
    return vs;
}

inline std::string show_analyze_report(const AnalyzeReport& rep) {
    std::string out;
    if (!rep.cfa.ok) {
        out += "read-once: fail\n";
        out += "cycle:";
        for (auto& f : rep.cfa.witness_cycle) out += " " + f;
        out += "\n";
        return out;
    }
    out += "read-once: ok\n";
    for (auto& p : rep.cps.points)
        out += "point (" + show_term(p.lhs) + ", " + p.cont + ", " + std::to_string(p.flag) +
               ")\n";
    for (auto& c : rep.cps.constraints) out += "constraint " + show_constraint(c) + "\n";

    out += "lpo (" + rep.lpo_source + "): " + (rep.lpo.ok ? "ok" : "fail") + "\n";
    if (rep.lpo.ok) {
        out += "precedence: " + show_precedence(rep.lpo.precedence) + "\n";
        out += std::string("linear lpo: ") + (rep.lpo.linear ? "yes" : "no") + "\n";
    } else {
        for (auto& [c, good] : rep.lpo.results)
            if (!good) out += "lpo fails on: " + show_constraint(c) + "\n";
    }

    out += "qi (" + rep.qi_source + "): ";
    if (rep.qi && rep.qi_check.ok) {
        out += "ok\n";
        for (auto& [f, mp] : rep.qi->q)
            out += "qi " + f + " = " + show_maxplus(mp, generic_vars(mp.arity)) + "\n";
    } else {
        out += "fail\n";
        for (auto& e : rep.qi_errors) out += "qi error: " + e + "\n";
        for (auto& cc : rep.qi_check.checks)
            if (cc.v != Verdict::Holds)
                out += "qi " + std::string(show_verdict(cc.v)) + ": " + show_constraint(cc.c) +
                       "\n";
    }

    if (rep.size) {
        out += "size bound: threads=" + std::to_string(rep.size->n) +
               " reads=" + std::to_string(rep.size->m) + " c=" + show_rat(rep.size->c) +
               " h=" + show_maxplus(rep.size->h, {"x"}) + " bound=" + show_rat(rep.size->bound) +
               "\n";
    }
    if (rep.space) {
        auto& sp = *rep.space;
        out += "space bound: K=" + std::to_string(sp.params.k) +
               " A=" + std::to_string(sp.params.a) + " S=" + std::to_string(sp.params.s) +
               " R=" + std::to_string(sp.params.r) + " n=" + std::to_string(sp.params.n) +
               " V=" + show_rat(sp.value_bound) + " bound=" + show_rat(sp.bound) + "\n";
        out += std::string("complexity: ") + (sp.ptime ? "ptime" : "pspace") + "\n";
    }
    return out;
}

}  // namespace synchrone
