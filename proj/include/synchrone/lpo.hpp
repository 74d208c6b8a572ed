#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "term.hpp"

// Recursive path order specialized as in the termination analysis:
// functions are above all constructors, distinct constructors are
// incomparable, function arguments compare lexicographically and
// constructor arguments by product order. Precedence between functions is
// an ordered partition into priority classes.

namespace synchrone {

struct Precedence {
    std::vector<std::vector<Name>> classes;  // classes[0] is the highest
    std::map<Name, int> rank;

    static Precedence of(std::vector<std::vector<Name>> cls) {
        Precedence p;
        p.classes = std::move(cls);
        for (size_t i = 0; i < p.classes.size(); ++i)
            for (auto& n : p.classes[i]) p.rank[n] = static_cast<int>(i);
        return p;
    }
    // <0: a higher, 0: same class, >0: b higher; nullopt: incomparable.
    std::optional<int> compare(const Name& a, const Name& b) const {
        if (a == b) return 0;
        auto ia = rank.find(a), ib = rank.find(b);
        if (ia == rank.end() || ib == rank.end()) return std::nullopt;
        return ia->second - ib->second;
    }
};

class Lpo {
  public:
    Lpo(const Precedence& prec, const std::set<Name>& functions)
        : prec_(prec), fns_(functions) {}

    bool greater(const Term& s, const Term& t) const {
        if (s.is_var) return false;
        if (t.is_var) return term_contains_var(s, t.head);
        // (a) some argument of s already covers t
        for (auto& a : s.args)
            if (greater_eq(a, t)) return true;
        bool sf = fns_.count(s.head), tf = fns_.count(t.head);
        if (sf && !tf) return majorizes(s, t);  // function above constructor
        if (!sf && tf) return false;
        if (!sf && !tf) {
            // distinct constructors are incomparable; equal ones use the
            // product order on arguments
            if (s.head != t.head || s.args.size() != t.args.size()) return false;
            bool strict = false;
            for (size_t i = 0; i < s.args.size(); ++i) {
                if (greater(s.args[i], t.args[i]))
                    strict = true;
                else if (s.args[i] != t.args[i])
                    return false;
            }
            return strict;
        }
        auto cmp = prec_.compare(s.head, t.head);
        if (!cmp) return false;
        if (*cmp < 0) return majorizes(s, t);
        if (*cmp > 0) return false;
        return lex_greater(s.args, t.args) && majorizes(s, t);
    }

    bool greater_eq(const Term& s, const Term& t) const { return s == t || greater(s, t); }

  private:
    bool majorizes(const Term& s, const Term& t) const {
        for (auto& a : t.args)
            if (!greater(s, a)) return false;
        return true;
    }

    bool lex_greater(const std::vector<Term>& a, const std::vector<Term>& b) const {
        size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; ++i) {
            if (greater(a[i], b[i])) return true;
            if (a[i] != b[i]) return false;
        }
        return a.size() > b.size();
    }

    const Precedence& prec_;
    const std::set<Name>& fns_;
};

struct LpoReport {
    bool ok = false;
    bool linear = false;
    Precedence precedence;
    std::vector<std::pair<Constraint, bool>> results;  // index-0 constraints
    std::string note;
};

inline int count_same_priority(const Term& t, int lhs_rank, const Precedence& prec,
                               const std::set<Name>& fns) {
    int n = 0;
    if (!t.is_var) {
        if (fns.count(t.head)) {
            auto it = prec.rank.find(t.head);
            if (it != prec.rank.end() && it->second == lhs_rank) ++n;
        }
        for (auto& a : t.args) n += count_same_priority(a, lhs_rank, prec, fns);
    }
    return n;
}

inline LpoReport lpo_check(const std::vector<Constraint>& cs, const Precedence& prec,
                           const std::set<Name>& fns) {
    LpoReport rep;
    rep.precedence = prec;
    rep.ok = true;
    rep.linear = true;
    Lpo lpo(rep.precedence, fns);
    for (auto& c : cs) {
        if (c.flag != 0) continue;
        bool g = lpo.greater(c.lhs, c.rhs);
        rep.results.push_back({c, g});
        if (!g) rep.ok = false;
        auto it = rep.precedence.rank.find(c.lhs.head);
        int lhs_rank = it == rep.precedence.rank.end() ? -1 : it->second;
        if (count_same_priority(c.rhs, lhs_rank, rep.precedence, fns) > 1) rep.linear = false;
    }
    if (!rep.ok) rep.linear = false;
    return rep;
}

// Enumerates ordered partitions of the function symbols occurring in
// index-0 constraints, fewest classes first, and returns the first
// precedence validating every constraint.
inline LpoReport lpo_search(const std::vector<Constraint>& cs, const std::set<Name>& fns) {
    std::set<Name> used;
    for (auto& c : cs) {
        if (c.flag != 0) continue;
        std::vector<const Term*> stack{&c.lhs, &c.rhs};
        while (!stack.empty()) {
            const Term* t = stack.back();
            stack.pop_back();
            if (!t->is_var && fns.count(t->head)) used.insert(t->head);
            for (auto& a : t->args) stack.push_back(&a);
        }
    }
    std::vector<Name> syms(used.begin(), used.end());
    if (syms.empty()) {
        LpoReport rep = lpo_check(cs, Precedence::of({}), fns);
        rep.note = "no function symbols in index-0 constraints";
        return rep;
    }
    if (syms.size() > 8) {
        LpoReport rep;
        rep.note = "precedence search limited to 8 symbols; provide an order annotation";
        return rep;
    }
    size_t n = syms.size();
    std::vector<int> rgs(n, 0);  // restricted growth string: set partition
    std::vector<std::vector<std::vector<std::vector<Name>>>> by_count(n + 1);
    for (;;) {
        int k = *std::max_element(rgs.begin(), rgs.end()) + 1;
        std::vector<std::vector<Name>> parts(k);
        for (size_t i = 0; i < n; ++i) parts[rgs[i]].push_back(syms[i]);
        by_count[k].push_back(std::move(parts));
        // next RGS
        int i = static_cast<int>(n) - 1;
        for (; i > 0; --i) {
            int cap = *std::max_element(rgs.begin(), rgs.begin() + i) + 1;
            if (rgs[i] < cap) {
                ++rgs[i];
                std::fill(rgs.begin() + i + 1, rgs.end(), 0);
                break;
            }
            rgs[i] = 0;
        }
        if (i == 0) break;
    }
    for (size_t k = 1; k <= n; ++k) {
        for (auto& parts : by_count[k]) {
            std::vector<int> order(k);
            for (size_t i = 0; i < k; ++i) order[i] = static_cast<int>(i);
            do {
                std::vector<std::vector<Name>> classes;
                for (int ci : order) classes.push_back(parts[ci]);
                LpoReport rep = lpo_check(cs, Precedence::of(classes), fns);
                if (rep.ok) return rep;
            } while (std::next_permutation(order.begin(), order.end()));
        }
    }
    LpoReport rep;
    rep.note = "no precedence found";
    for (auto& c : cs)
        if (c.flag == 0) rep.results.push_back({c, false});
    return rep;
}

inline std::string show_precedence(const Precedence& p) {
    std::string out;
    for (size_t i = 0; i < p.classes.size(); ++i) {
        if (i) out += " > ";
        for (size_t j = 0; j < p.classes[i].size(); ++j) {
            if (j) out += " = ";
            out += p.classes[i][j];
        }
    }
    return out;
}

}  // namespace synchrone
