#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ast.hpp"

// First-order terms shared by the termination and size analyses.
// Heads carry their spelling directly; extended behaviour symbols use a
// trailing hat, e.g. "alarm^".

namespace synchrone {

struct Term {
    bool is_var = false;
    Name head;
    std::vector<Term> args;

    bool operator==(const Term& o) const {
        return is_var == o.is_var && head == o.head && args == o.args;
    }
    bool operator!=(const Term& o) const { return !(*this == o); }
};

inline Name hat(const Name& f) { return f + "^"; }

inline Term tvar(Name n) {
    Term t;
    t.is_var = true;
    t.head = std::move(n);
    return t;
}

inline Term tapp(Name head, std::vector<Term> args = {}) {
    Term t;
    t.head = std::move(head);
    t.args = std::move(args);
    return t;
}

inline Term term_of_expr(const Expr& e) {
    if (e.kind == Expr::Kind::Var) return tvar(e.name);
    Term t = tapp(e.name);
    for (auto& a : e.args) t.args.push_back(term_of_expr(a));
    return t;
}

inline Term term_of_pattern(const Pattern& p) {
    if (p.kind == Pattern::Kind::Var) return tvar(p.name);
    Term t = tapp(p.name);
    for (auto& a : p.args) t.args.push_back(term_of_pattern(a));
    return t;
}

inline Term term_of_value(const Value& v) {
    Term t = tapp(v.head);
    for (auto& a : v.args) t.args.push_back(term_of_value(a));
    return t;
}

inline void term_vars(const Term& t, std::set<Name>& out) {
    if (t.is_var) {
        out.insert(t.head);
        return;
    }
    for (auto& a : t.args) term_vars(a, out);
}

inline std::set<Name> term_vars(const Term& t) {
    std::set<Name> out;
    term_vars(t, out);
    return out;
}

inline bool term_contains_var(const Term& t, const Name& x) {
    if (t.is_var) return t.head == x;
    for (auto& a : t.args)
        if (term_contains_var(a, x)) return true;
    return false;
}

inline int term_size(const Term& t) {
    if (t.is_var) return 1;
    int n = 1;
    for (auto& a : t.args) n += term_size(a);
    return n;
}

inline Term term_subst(const Term& t, const std::map<Name, Term>& sub) {
    if (t.is_var) {
        auto it = sub.find(t.head);
        return it == sub.end() ? t : it->second;
    }
    Term out = tapp(t.head);
    for (auto& a : t.args) out.args.push_back(term_subst(a, sub));
    return out;
}

inline std::string show_term(const Term& t) {
    if (t.args.empty()) return t.head;
    std::string out = t.head + "(";
    for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ", ";
        out += show_term(t.args[i]);
    }
    return out + ")";
}

// A rewrite constraint lhs >i rhs produced by the control point analysis.
struct Constraint {
    Term lhs;
    Term rhs;
    int flag = 0;  // 0: termination + size, 1: size only
};

inline std::string show_constraint(const Constraint& c) {
    return show_term(c.lhs) + " >" + std::to_string(c.flag) + " " + show_term(c.rhs);
}

// Maps every variable of a onto a variable of b, consistently but not
// necessarily injectively: two source variables naming the same read site
// may collapse onto one target variable.
inline bool term_alpha_map(const Term& a, const Term& b, std::map<Name, Name>& m) {
    if (a.is_var) {
        if (!b.is_var) return false;
        auto it = m.find(a.head);
        if (it != m.end()) return it->second == b.head;
        m.emplace(a.head, b.head);
        return true;
    }
    if (b.is_var || a.head != b.head || a.args.size() != b.args.size()) return false;
    for (size_t i = 0; i < a.args.size(); ++i)
        if (!term_alpha_map(a.args[i], b.args[i], m)) return false;
    return true;
}

inline bool constraint_alpha_matches(const Constraint& a, const Constraint& b) {
    if (a.flag != b.flag) return false;
    std::map<Name, Name> m;
    return term_alpha_map(a.lhs, b.lhs, m) && term_alpha_map(a.rhs, b.rhs, m);
}

// Perfect matching between two constraint lists modulo renaming.
inline bool constraints_alpha_match(const std::vector<Constraint>& from,
                                    const std::vector<Constraint>& to) {
    if (from.size() != to.size()) return false;
    std::vector<char> used(to.size(), 0);
    std::vector<size_t> order(from.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    struct Rec {
        const std::vector<Constraint>& from;
        const std::vector<Constraint>& to;
        std::vector<char>& used;
        bool place(size_t i) {
            if (i == from.size()) return true;
            for (size_t j = 0; j < to.size(); ++j) {
                if (used[j] || !constraint_alpha_matches(from[i], to[j])) continue;
                used[j] = 1;
                if (place(i + 1)) return true;
                used[j] = 0;
            }
            return false;
        }
    } rec{from, to, used};
    return rec.place(0);
}

}  // namespace synchrone
