#pragma once

#include <map>
#include <string>
#include <vector>

#include "ast.hpp"
#include "cfa.hpp"
#include "pretty.hpp"
#include "term.hpp"
#include "typecheck.hpp"

// Control points abstract every state a thread can reach within an instant.
// A behaviour f gets an extended symbol f^ whose extra parameters are the
// labels y_f of the reads it may still execute; crossing a read substitutes
// the branch pattern for its label.

namespace synchrone {

struct ControlPoint {
    Term lhs;
    std::string cont;
    int flag;
};

struct ControlPointsResult {
    std::vector<ControlPoint> points;
    std::vector<Constraint> constraints;
    std::map<Name, std::vector<Name>> hat_params;  // f^ -> formals . y_f
};

class ControlPointBuilder {
  public:
    ControlPointBuilder(const TypedProgram& tp, const CfaResult& cfa) : tp_(tp), cfa_(cfa) {}

    ControlPointsResult run() {
        for (auto& f : tp_.prog.functions) {
            std::vector<Term> ps;
            std::vector<Name> names;
            for (auto& prm : f.params) {
                ps.push_back(tvar(prm.name));
                names.push_back(prm.name);
            }
            if (f.kind == FunctionDef::Kind::Expression) {
                expr_fn(f.name, ps, f.body);
            } else {
                for (auto& label : cfa_.reads.at(f.name)) {
                    ps.push_back(tvar(label));
                    names.push_back(label);
                }
                res_.hat_params[hat(f.name)] = names;
                behaviour_fn(hat(f.name), ps, *f.beh);
            }
        }
        return std::move(res_);
    }

  private:
    static std::vector<Term> subst_all(const std::vector<Term>& ps, const Name& x, Term t) {
        std::map<Name, Term> sub{{x, std::move(t)}};
        std::vector<Term> out;
        for (auto& p : ps) out.push_back(term_subst(p, sub));
        return out;
    }

    void point(const Name& f, const std::vector<Term>& ps, std::string cont, int flag) {
        res_.points.push_back({tapp(f, ps), std::move(cont), flag});
    }

    // Tail calls become calls of the callee's extended symbol carrying its
    // own read labels.
    Term hat_call(const Name& g, const std::vector<Expr>& args) {
        Term t = tapp(hat(g));
        for (auto& a : args) t.args.push_back(term_of_expr(a));
        for (auto& label : cfa_.reads.at(g)) t.args.push_back(tvar(label));
        return t;
    }

    void expr_fn(const Name& f, const std::vector<Term>& ps, const ExprBody& eb) {
        if (eb.kind == ExprBody::Kind::Expr) {
            point(f, ps, show_expr(eb.expr), 0);
            res_.constraints.push_back({tapp(f, ps), term_of_expr(eb.expr), 0});
            return;
        }
        point(f, ps, show_expr_body(eb), 2);
        expr_fn(f, subst_all(ps, eb.scrutinee, term_of_pattern(eb.pattern)), *eb.then_body);
        expr_fn(f, ps, *eb.else_body);
    }

    void behaviour_fn(const Name& fhat, const std::vector<Term>& ps, const Behaviour& b) {
        switch (b.kind) {
            case Behaviour::Kind::Stop:
                point(fhat, ps, "stop", 2);
                return;
            case Behaviour::Kind::TailCall: {
                point(fhat, ps, show_call(b.callee, b.args), 0);
                res_.constraints.push_back({tapp(fhat, ps), hat_call(b.callee, b.args), 0});
                return;
            }
            case Behaviour::Kind::Yield:
                point(fhat, ps, show_behaviour(b), 2);
                behaviour_fn(fhat, ps, *b.cont);
                return;
            case Behaviour::Kind::Next:
                point(fhat, ps, show_behaviour(b), 2);
                point(fhat, ps, show_call(b.callee, b.args), 2);
                return;
            case Behaviour::Kind::Assign: {
                point(fhat, ps, show_behaviour(b), 2);
                point(fhat, ps, show_expr(b.expr), 1);
                res_.constraints.push_back({tapp(fhat, ps), term_of_expr(b.expr), 1});
                behaviour_fn(fhat, ps, *b.cont);
                return;
            }
            case Behaviour::Kind::Read: {
                point(fhat, ps, show_behaviour(b), 2);
                point(fhat, ps, show_call(b.default_callee, b.default_args), 2);
                for (auto& br : b.branches)
                    behaviour_fn(fhat, subst_all(ps, b.label, term_of_pattern(br.pattern)),
                                 *br.body);
                return;
            }
            case Behaviour::Kind::Match:
                point(fhat, ps, show_behaviour(b), 2);
                behaviour_fn(fhat, subst_all(ps, b.scrutinee, term_of_pattern(b.pattern)),
                             *b.then_body);
                behaviour_fn(fhat, ps, *b.else_body);
                return;
        }
    }

    const TypedProgram& tp_;
    const CfaResult& cfa_;
    ControlPointsResult res_;
};

inline ControlPointsResult control_points(const TypedProgram& tp, const CfaResult& cfa) {
    return ControlPointBuilder(tp, cfa).run();
}

inline std::string show_control_point(const ControlPoint& cp) {
    return "(" + show_term(cp.lhs) + ", " + cp.cont + ", " + std::to_string(cp.flag) + ")";
}

}  // namespace synchrone
