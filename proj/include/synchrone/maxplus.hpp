#pragma once

// Max-plus assignments over the nonnegative rationals: a function is a max of
// affine terms. Constructors are additive (sum plus d, d >= 1; constants are
// 0), so the interpretation of a value equals its size when d = 1.

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cassert>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "synchrone/ast.hpp"
#include "synchrone/term.hpp"

namespace synchrone {

using Rat = boost::multiprecision::cpp_rational;

struct AffineTerm {
    std::vector<Rat> coef;
    Rat cst = 0;
};

// Invariant: every term has coef.size() == arity; terms nonempty once built.
struct MaxPlus {
    size_t arity = 0;
    std::vector<AffineTerm> terms;
};

inline Rat eval_affine(const AffineTerm& t, const std::vector<Rat>& x) {
    Rat r = t.cst;
    for (size_t i = 0; i < t.coef.size(); ++i) r += t.coef[i] * x[i];
    return r;
}

inline Rat eval(const MaxPlus& f, const std::vector<Rat>& x) {
    Rat best = 0;
    bool first = true;
    for (auto& t : f.terms) {
        Rat v = eval_affine(t, x);
        if (first || v > best) best = v, first = false;
    }
    return best;
}

inline bool dominates(const AffineTerm& a, const AffineTerm& b) {
    if (a.cst < b.cst) return false;
    for (size_t i = 0; i < a.coef.size(); ++i)
        if (a.coef[i] < b.coef[i]) return false;
    return true;
}

inline void prune(MaxPlus& f) {
    std::vector<AffineTerm> kept;
    for (auto& t : f.terms) {
        bool dead = false;
        for (auto& k : kept)
            if (dominates(k, t)) {
                dead = true;
                break;
            }
        if (dead) continue;
        std::erase_if(kept, [&](const AffineTerm& k) { return dominates(t, k); });
        kept.push_back(t);
    }
    f.terms = std::move(kept);
}

inline MaxPlus mp_const(size_t arity, Rat c) {
    MaxPlus f;
    f.arity = arity;
    f.terms.push_back({std::vector<Rat>(arity, Rat(0)), std::move(c)});
    return f;
}

inline MaxPlus mp_var(size_t arity, size_t i) {
    MaxPlus f = mp_const(arity, 0);
    f.terms[0].coef[i] = 1;
    return f;
}

// sum a*x_i + b
inline MaxPlus mp_sum(size_t arity, Rat a, Rat b) {
    MaxPlus f;
    f.arity = arity;
    f.terms.push_back({std::vector<Rat>(arity, std::move(a)), std::move(b)});
    return f;
}

// max_i(x_i) + b; collapses to the constant for arity 0
inline MaxPlus mp_max(size_t arity, Rat b) {
    if (arity == 0) return mp_const(0, std::move(b));
    MaxPlus f;
    f.arity = arity;
    for (size_t i = 0; i < arity; ++i) {
        AffineTerm t{std::vector<Rat>(arity, Rat(0)), b};
        t.coef[i] = 1;
        f.terms.push_back(std::move(t));
    }
    return f;
}

inline MaxPlus mp_union(MaxPlus a, const MaxPlus& b) {
    for (auto& t : b.terms) a.terms.push_back(t);
    prune(a);
    return a;
}

// (max A) + (max B) = max over pairs; both operands share an arity
inline MaxPlus mp_add(const MaxPlus& a, const MaxPlus& b) {
    MaxPlus out;
    out.arity = a.arity;
    for (auto& ta : a.terms)
        for (auto& tb : b.terms) {
            AffineTerm t = ta;
            for (size_t i = 0; i < out.arity; ++i) t.coef[i] += tb.coef[i];
            t.cst += tb.cst;
            out.terms.push_back(std::move(t));
        }
    prune(out);
    return out;
}

inline MaxPlus mp_scale(MaxPlus a, const Rat& r) {
    for (auto& t : a.terms) {
        for (auto& c : t.coef) c *= r;
        t.cst *= r;
    }
    prune(a);
    return a;
}

// Composition q_f(g_1, ..., g_n). Scaling distributes over max because all
// coefficients are nonnegative.
inline MaxPlus compose(const MaxPlus& f, const std::vector<MaxPlus>& args) {
    assert(f.arity == args.size());
    size_t m = args.empty() ? 0 : args[0].arity;
    MaxPlus out;
    out.arity = m;
    for (const AffineTerm& t : f.terms) {
        std::vector<AffineTerm> acc{{std::vector<Rat>(m, Rat(0)), t.cst}};
        for (size_t j = 0; j < t.coef.size(); ++j) {
            if (t.coef[j] == 0) continue;
            MaxPlus step;
            step.arity = m;
            for (const AffineTerm& a : acc)
                for (const AffineTerm& g : args[j].terms) {
                    AffineTerm n = a;
                    for (size_t i = 0; i < m; ++i) n.coef[i] += t.coef[j] * g.coef[i];
                    n.cst += t.coef[j] * g.cst;
                    step.terms.push_back(std::move(n));
                }
            prune(step);
            acc = std::move(step.terms);
        }
        for (auto& a : acc) out.terms.push_back(std::move(a));
    }
    prune(out);
    return out;
}

struct Assignment {
    std::map<Name, MaxPlus> q;
};

struct UncoveredSymbol {
    Name symbol;
};

inline MaxPlus extend_term(const Assignment& asg, const Term& t, const std::vector<Name>& vars) {
    size_t m = vars.size();
    if (t.is_var) {
        auto it = std::find(vars.begin(), vars.end(), t.head);
        assert(it != vars.end());
        return mp_var(m, static_cast<size_t>(it - vars.begin()));
    }
    auto qit = asg.q.find(t.head);
    if (qit == asg.q.end()) throw UncoveredSymbol{t.head};
    if (t.args.empty()) {
        Rat c = eval(qit->second, {});
        return mp_const(m, c);
    }
    std::vector<MaxPlus> args;
    args.reserve(t.args.size());
    for (auto& a : t.args) args.push_back(extend_term(asg, a, vars));
    return compose(qit->second, args);
}

// Constructor interpretations fixed by shape: constants are 0, otherwise
// sum plus d. Register names masquerade as nullary constructors in the
// symbol table and never appear in constraint terms; giving them 0 is inert.
inline Assignment base_assignment(const SymbolTable& sym, const Rat& d = 1) {
    Assignment asg;
    for (auto& [name, info] : sym.ctors) {
        size_t n = info.arg_types.size();
        asg.q[name] = n == 0 ? mp_const(0, 0) : mp_sum(n, 1, d);
    }
    return asg;
}

// Shape checks: constructors additive with d >= 1, functions monotone with
// nonnegative entries and majorizing every projection.
inline std::vector<std::string> validate_assignment(const Assignment& asg,
                                                    const SymbolTable& sym) {
    std::vector<std::string> errs;
    for (auto& [name, f] : asg.q) {
        for (auto& t : f.terms) {
            if (t.cst < 0) errs.push_back(name + ": negative constant");
            for (auto& c : t.coef)
                if (c < 0) errs.push_back(name + ": negative coefficient");
        }
        auto ct = sym.ctors.find(name);
        if (ct != sym.ctors.end() && !ct->second.is_register) {
            size_t n = ct->second.arg_types.size();
            if (n == 0) {
                if (!(f.terms.size() == 1 && f.terms[0].cst == 0))
                    errs.push_back(name + ": constant constructors are interpreted by 0");
            } else if (f.terms.size() != 1 || f.terms[0].cst < 1 ||
                       std::any_of(f.terms[0].coef.begin(), f.terms[0].coef.end(),
                                   [](const Rat& c) { return c != 1; })) {
                errs.push_back(name + ": constructors are sums of arguments plus d >= 1");
            }
            continue;
        }
        for (size_t i = 0; i < f.arity; ++i) {
            bool covered = false;
            for (auto& t : f.terms)
                if (t.coef[i] >= 1) covered = true;
            if (!covered)
                errs.push_back(name + ": does not majorize argument " + std::to_string(i + 1));
        }
    }
    return errs;
}

enum class Verdict { Holds, Refuted, Unknown };

inline const char* show_verdict(Verdict v) {
    switch (v) {
        case Verdict::Holds: return "holds";
        case Verdict::Refuted: return "refuted";
        default: return "unknown";
    }
}

struct InequalityResult {
    Verdict v = Verdict::Unknown;
    std::vector<Rat> witness;
};

// P >= Q over the nonnegative orthant. Domination of every term of Q by some
// term of P is sound and complete enough for additive assignments; sampling
// refutes; anything else is reported unknown rather than guessed.
inline InequalityResult check_inequality(const MaxPlus& P, const MaxPlus& Q,
                                         unsigned seed = 0) {
    bool dom = true;
    for (auto& tq : Q.terms) {
        bool cov = false;
        for (auto& tp : P.terms)
            if (dominates(tp, tq)) {
                cov = true;
                break;
            }
        if (!cov) {
            dom = false;
            break;
        }
    }
    if (dom) return {Verdict::Holds, {}};

    size_t k = std::max(P.arity, Q.arity);
    auto probe = [&](const std::vector<Rat>& x) -> bool { return eval(Q, x) > eval(P, x); };
    if (k == 0) {
        std::vector<Rat> x;
        if (probe(x)) return {Verdict::Refuted, x};
        return {Verdict::Unknown, {}};
    }
    // corner grid over {0, 1, 5}, capped at 3^7 points
    if (k <= 7) {
        std::vector<Rat> grid = {0, 1, 5};
        std::vector<size_t> idx(k, 0);
        for (;;) {
            std::vector<Rat> x(k);
            for (size_t i = 0; i < k; ++i) x[i] = grid[idx[i]];
            if (probe(x)) return {Verdict::Refuted, x};
            size_t i = 0;
            while (i < k && ++idx[i] == grid.size()) idx[i++] = 0;
            if (i == k) break;
        }
    }
    std::mt19937 rng(seed ^ 0x9e3779b9u);
    std::uniform_int_distribution<int> halves(0, 40);
    for (int round = 0; round < 200; ++round) {
        std::vector<Rat> x(k);
        for (size_t i = 0; i < k; ++i) x[i] = Rat(halves(rng), 2);
        if (probe(x)) return {Verdict::Refuted, x};
    }
    return {Verdict::Unknown, {}};
}

// First-occurrence variable order, left side first; the right side never
// introduces variables of its own but we stay defensive.
inline std::vector<Name> ordered_vars(const Term& lhs, const Term& rhs) {
    std::vector<Name> out;
    auto walk = [&](auto&& self, const Term& t) -> void {
        if (t.is_var) {
            if (std::find(out.begin(), out.end(), t.head) == out.end()) out.push_back(t.head);
            return;
        }
        for (auto& a : t.args) self(self, a);
    };
    walk(walk, lhs);
    walk(walk, rhs);
    return out;
}

struct ConstraintCheck {
    Constraint c;
    Verdict v = Verdict::Unknown;
    std::vector<Name> vars;
    std::vector<Rat> witness;
};

struct QiReport {
    bool ok = false;
    std::vector<ConstraintCheck> checks;
    std::string note;
};

inline QiReport check_assignment(const Assignment& asg, const std::vector<Constraint>& cs,
                                 unsigned seed = 0) {
    QiReport rep;
    rep.ok = true;
    for (auto& c : cs) {
        ConstraintCheck chk;
        chk.c = c;
        chk.vars = ordered_vars(c.lhs, c.rhs);
        MaxPlus P = extend_term(asg, c.lhs, chk.vars);
        MaxPlus Q = extend_term(asg, c.rhs, chk.vars);
        auto r = check_inequality(P, Q, seed);
        chk.v = r.v;
        chk.witness = std::move(r.witness);
        if (chk.v != Verdict::Holds) rep.ok = false;
        rep.checks.push_back(std::move(chk));
    }
    return rep;
}

// Template family, cheapest first: sums and maxes with small additive parts,
// then doubled sums. Arity-0 symbols keep only the distinct constants.
inline MaxPlus qi_template(size_t arity, int idx) {
    switch (idx) {
        case 0: return mp_sum(arity, 1, 0);
        case 1: return mp_max(arity, 0);
        case 2: return mp_sum(arity, 1, 1);
        case 3: return mp_max(arity, 1);
        case 4: return mp_sum(arity, 1, 2);
        case 5: return mp_max(arity, 2);
        case 6: return mp_sum(arity, 2, 0);
        case 7: return mp_sum(arity, 2, 1);
        default: return mp_sum(arity, 2, 2);
    }
}

inline const std::vector<int>& qi_template_indices(size_t arity) {
    static const std::vector<int> nullary = {0, 2, 4};
    static const std::vector<int> general = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    return arity == 0 ? nullary : general;
}

struct SynthesisResult {
    std::optional<Assignment> assignment;
    long long tried = 0;
    std::string note;
};

// Bounded search: constructor constant d in {1, 2} crossed with per-function
// templates, enumerated by total template cost so cheap assignments win ties.
inline SynthesisResult synthesize(const std::vector<Constraint>& cs,
                                  const std::map<Name, size_t>& fn_arity,
                                  const SymbolTable& sym, long long budget = 200000,
                                  unsigned seed = 0) {
    SynthesisResult res;
    std::vector<Name> fns;
    for (auto& [name, _] : fn_arity) fns.push_back(name);
    size_t nf = fns.size();
    std::vector<int> pick(nf, 0);
    int max_cost = static_cast<int>(nf) * 8;
    for (int cost = 0; cost <= max_cost; ++cost) {
        // enumerate index vectors with the given total
        auto rec = [&](auto&& self, size_t at, int left) -> bool {
            if (at == nf) {
                if (left != 0) return false;
                for (Rat d : {Rat(1), Rat(2)}) {
                    if (res.tried >= budget) return true;
                    ++res.tried;
                    Assignment asg = base_assignment(sym, d);
                    for (size_t i = 0; i < nf; ++i)
                        asg.q[fns[i]] = qi_template(fn_arity.at(fns[i]), pick[i]);
                    if (check_assignment(asg, cs, seed).ok) {
                        res.assignment = std::move(asg);
                        return true;
                    }
                }
                return false;
            }
            for (int idx : qi_template_indices(fn_arity.at(fns[at]))) {
                if (idx > left) break;
                pick[at] = idx;
                if (self(self, at + 1, left - idx)) return true;
            }
            return false;
        };
        if (rec(rec, 0, cost)) {
            if (res.assignment) return res;
            res.note = "budget exceeded";
            return res;
        }
    }
    res.note = "budget exceeded";
    return res;
}

struct SizeBoundReport {
    int n = 0;  // threads
    int m = 0;  // distinct read instructions
    Rat c = 0;  // largest initial parameter or register default
    MaxPlus h;  // unary majorant of the initial thread interpretations
    Rat bound = 0;
};

// h iterated n*m + 1 times on c. h also majorizes the identity so that the
// iteration is monotone even when every initial interpretation is constant.
inline SizeBoundReport size_bound(const Assignment& asg, const std::vector<Name>& initial,
                                  int n, int m, Rat c) {
    SizeBoundReport rep;
    rep.n = n;
    rep.m = m;
    rep.c = c;
    rep.h = mp_var(1, 0);
    for (auto& f : initial) {
        const MaxPlus& qf = asg.q.at(f);
        std::vector<MaxPlus> args(qf.arity, mp_var(1, 0));
        rep.h = mp_union(std::move(rep.h), qf.arity == 0 ? mp_const(1, eval(qf, {}))
                                                         : compose(qf, args));
    }
    Rat b = std::move(c);
    for (int i = 0; i < n * m + 1; ++i) b = eval(rep.h, {b});
    rep.bound = std::move(b);
    return rep;
}

// Raw annotation tree to normal form. Negative scales and out-of-range
// variables are rejected.
inline std::optional<MaxPlus> maxplus_of_qi(const QiExpr& e, size_t arity, std::string& err) {
    switch (e.kind) {
        case QiExpr::Kind::Const: {
            Rat c(e.num, e.den);
            if (c < 0) {
                err = "negative constant";
                return std::nullopt;
            }
            return mp_const(arity, c);
        }
        case QiExpr::Kind::Var:
            if (e.var_index < 1 || static_cast<size_t>(e.var_index) > arity) {
                err = "variable x" + std::to_string(e.var_index) + " out of range";
                return std::nullopt;
            }
            return mp_var(arity, static_cast<size_t>(e.var_index - 1));
        case QiExpr::Kind::Add: {
            MaxPlus acc = mp_const(arity, 0);
            for (auto& a : e.args) {
                auto m = maxplus_of_qi(a, arity, err);
                if (!m) return std::nullopt;
                acc = mp_add(acc, *m);
            }
            return acc;
        }
        case QiExpr::Kind::Scale: {
            Rat r(e.num, e.den);
            if (r < 0) {
                err = "negative scale";
                return std::nullopt;
            }
            auto m = maxplus_of_qi(e.args[0], arity, err);
            if (!m) return std::nullopt;
            return mp_scale(std::move(*m), r);
        }
        case QiExpr::Kind::Max: {
            std::optional<MaxPlus> acc;
            for (auto& a : e.args) {
                auto m = maxplus_of_qi(a, arity, err);
                if (!m) return std::nullopt;
                acc = acc ? mp_union(std::move(*acc), *m) : std::move(*m);
            }
            if (!acc) err = "empty max";
            return acc;
        }
    }
    err = "malformed interpretation";
    return std::nullopt;
}

inline std::string show_rat(const Rat& r) {
    return r.str();
}

inline std::string show_maxplus(const MaxPlus& f, const std::vector<std::string>& vars) {
    auto show_term = [&](const AffineTerm& t) {
        std::string s;
        for (size_t i = 0; i < t.coef.size(); ++i) {
            if (t.coef[i] == 0) continue;
            if (!s.empty()) s += " + ";
            if (t.coef[i] != 1) s += show_rat(t.coef[i]) + "*";
            s += i < vars.size() ? vars[i] : "x" + std::to_string(i + 1);
        }
        if (t.cst != 0 || s.empty()) {
            if (!s.empty()) s += " + ";
            s += show_rat(t.cst);
        }
        return s;
    };
    if (f.terms.empty()) return "0";
    if (f.terms.size() == 1) return show_term(f.terms[0]);
    std::string s = "max(";
    for (size_t i = 0; i < f.terms.size(); ++i) {
        if (i) s += ", ";
        s += show_term(f.terms[i]);
    }
    return s + ")";
}

}  // namespace synchrone
