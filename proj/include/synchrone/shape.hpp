#pragma once

// Symbolic re-execution of each segment over its control tree: every
// instruction gets the substitution and stack of shapes that reach it.
// Constraints fall out at returns, behaviour calls, and writes; a tail call
// behind an instant boundary binds nothing within the instant and stays
// silent. Read sites visible from a segment become the extra parameters of
// its hatted symbol.

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "synchrone/bytecode.hpp"
#include "synchrone/flow_graph.hpp"
#include "synchrone/term.hpp"

namespace synchrone {

struct ShapeEntry {
    Term term;
    Name type;

    bool operator==(const ShapeEntry& o) const { return term == o.term && type == o.type; }
};

struct ShapeRow {
    bool reached = false;
    std::map<Name, Term> sigma;
    std::vector<ShapeEntry> stack;
};

struct SegmentShapes {
    Name segment;
    std::vector<ShapeRow> rows;
};

struct ShapeReport {
    bool ok = false;
    std::vector<std::string> errors;
    std::vector<SegmentShapes> shapes;
    std::vector<Constraint> constraints;
    std::map<Name, std::vector<Name>> hat_params;  // hatted symbol -> formal names
    std::map<Name, size_t> symbol_arity;           // analysis arity per function symbol
};

inline std::string show_shape_row(const ShapeRow& row) {
    if (!row.reached) return "-";
    std::string out;
    for (size_t i = 0; i < row.stack.size(); ++i) {
        if (i) out += ", ";
        out += show_term(row.stack[i].term);
    }
    return out;
}

namespace detail {

inline std::vector<Name> fresh_params(size_t arity) {
    if (arity == 1) return {"x"};
    std::vector<Name> out;
    for (size_t i = 1; i <= arity; ++i) out.push_back("x" + std::to_string(i));
    return out;
}

// Read-site variable as seen from `from`: local sites keep the short name.
inline Name site_var(const std::pair<Name, long long>& site, const Name& from) {
    if (site.first == from) return "v" + std::to_string(site.second);
    return "v_" + site.first + "_" + std::to_string(site.second);
}

class SegmentShaper {
  public:
    SegmentShaper(const BytecodeProgram& bp, const FlowGraph& fg, const Segment& s,
                  ShapeReport& rep)
        : bp_(bp), fg_(fg), s_(s), rep_(rep), params_(fresh_params(s.arity())) {}

    void run() {
        SegmentShapes shapes;
        shapes.segment = s_.name;
        shapes.rows.resize(s_.code.size());
        rows_ = &shapes.rows;

        auto nit = fg_.nodes.find(s_.name);
        if (nit == fg_.nodes.end()) return;
        std::vector<std::vector<long long>> children(s_.code.size());
        for (size_t i = 1; i < nit->second.size(); ++i) {
            long long p = nit->second[i].parent;
            if (p > 0) children[static_cast<size_t>(p) - 1].push_back(static_cast<long long>(i) + 1);
        }

        ShapeRow& entry = shapes.rows[0];
        entry.reached = true;
        for (size_t i = 0; i < params_.size(); ++i)
            entry.stack.push_back({tvar(params_[i]), s_.param_types[i]});

        std::vector<long long> work{1};
        while (!work.empty()) {
            long long pc = work.back();
            work.pop_back();
            ShapeRow& row = shapes.rows[static_cast<size_t>(pc) - 1];
            if (!row.reached) continue;  // dead branch arm
            step(pc, row, nit->second);
            for (long long c : children[static_cast<size_t>(pc) - 1]) work.push_back(c);
        }

        // wait rows check against their read once everything is assigned
        for (size_t i = 0; i < s_.code.size(); ++i) {
            const Instr& I = s_.code[i];
            if (I.op != Op::Wait) continue;
            const ShapeRow& here = shapes.rows[i];
            if (!here.reached) continue;
            const ShapeRow& at_read = shapes.rows[static_cast<size_t>(I.a) - 1];
            std::vector<ShapeEntry> want = at_read.stack;
            want.push_back(read_entry(I.a));
            if (!(here.stack == want))
                fail(static_cast<long long>(i) + 1, "stack disagrees with the read it waits on");
            if (!(here.sigma == at_read.sigma))
                fail(static_cast<long long>(i) + 1,
                     "substitution disagrees with the read it waits on");
        }

        rep_.shapes.push_back(std::move(shapes));
    }

  private:
    void fail(long long pc, const std::string& msg) {
        rep_.errors.push_back(s_.name + "[" + std::to_string(pc) + "]: " + msg);
    }

    ShapeEntry read_entry(long long pc) const {
        const Instr& I = s_.code[static_cast<size_t>(pc) - 1];
        Name t;
        if (!I.sym.empty()) {
            t = bp_.sym.registers.at(I.sym).referent;
        } else {
            // operand slot type resolved where the read is stepped
            const ShapeRow& row = (*rows_)[static_cast<size_t>(pc) - 1];
            size_t k = static_cast<size_t>(I.a);
            if (k >= 1 && k <= row.stack.size()) {
                auto it = bp_.sym.referent_of.find(row.stack[k - 1].type);
                if (it != bp_.sym.referent_of.end()) t = it->second;
            }
        }
        return {tvar("v" + std::to_string(pc)), t};
    }

    Term apply(const std::map<Name, Term>& sigma, const Name& var) const {
        auto it = sigma.find(var);
        return it != sigma.end() ? it->second : tvar(var);
    }

    // Formal shape of this segment at a row: parameters, then visible reads.
    Term lhs_at(const ShapeRow& row) const {
        std::vector<Term> args;
        for (auto& p : params_) args.push_back(apply(row.sigma, p));
        if (s_.is_behaviour()) {
            auto rit = fg_.reads_of.find(s_.name);
            if (rit != fg_.reads_of.end())
                for (auto& site : rit->second) args.push_back(apply(row.sigma, site_var(site, s_.name)));
        }
        Term t = tapp(s_.is_behaviour() ? hat(s_.name) : s_.name, std::move(args));
        return t;
    }

    Term callee_shape(const Name& g, std::vector<Term> args) const {
        auto rit = fg_.reads_of.find(g);
        if (rit != fg_.reads_of.end())
            for (auto& site : rit->second) args.push_back(tvar(site_var(site, s_.name)));
        return tapp(hat(g), std::move(args));
    }

    bool pop_args(long long pc, ShapeRow& row, const std::vector<Name>& want,
                  std::vector<Term>& out) {
        size_t n = want.size();
        if (row.stack.size() < n) {
            fail(pc, "not enough operands on the stack");
            return false;
        }
        for (size_t i = 0; i < n; ++i) {
            const ShapeEntry& e = row.stack[row.stack.size() - n + i];
            if (e.type != want[i]) {
                fail(pc, "operand type '" + e.type + "' where '" + want[i] + "' is expected");
                return false;
            }
            out.push_back(e.term);
        }
        row.stack.resize(row.stack.size() - n);
        return true;
    }

    void propagate(long long to, const ShapeRow& st) {
        ShapeRow& dst = (*rows_)[static_cast<size_t>(to) - 1];
        dst = st;
        dst.reached = true;
    }

    void step(long long pc, const ShapeRow& row, const std::vector<FlowNode>& nodes) {
        const Instr& I = s_.code[static_cast<size_t>(pc) - 1];
        ShapeRow st = row;  // scratch successor state
        switch (I.op) {
            case Op::Load: {
                size_t k = static_cast<size_t>(I.a);
                if (k < 1 || k > st.stack.size()) return fail(pc, "load beyond the stack");
                st.stack.push_back(st.stack[k - 1]);
                return propagate(pc + 1, st);
            }
            case Op::Build: {
                const CtorInfo& c = bp_.sym.ctors.at(I.sym);
                std::vector<Term> args;
                if (!pop_args(pc, st, c.arg_types, args)) return;
                st.stack.push_back({tapp(I.sym, std::move(args)), c.result_type});
                return propagate(pc + 1, st);
            }
            case Op::Call: {
                const Segment* g = bp_.find(I.sym);
                if (!g) return fail(pc, "unknown callee");
                std::vector<Term> args;
                if (!pop_args(pc, st, g->param_types, args)) return;
                if (g->is_behaviour()) {
                    if (!s_.is_behaviour())
                        return fail(pc, "behaviour call inside an expression segment");
                    if (!nodes[static_cast<size_t>(pc) - 1].next_guarded)
                        rep_.constraints.push_back({lhs_at(row), callee_shape(I.sym, args), 0});
                    st.stack.push_back({tapp(I.sym, std::move(args)), "beh"});
                } else {
                    st.stack.push_back({tapp(I.sym, std::move(args)), g->result});
                }
                return propagate(pc + 1, st);
            }
            case Op::Tcall: {
                const Segment* g = bp_.find(I.sym);
                if (!g) return fail(pc, "unknown callee");
                if (!g->is_behaviour()) return fail(pc, "tail call to an expression function");
                std::vector<Term> args;
                if (!pop_args(pc, st, g->param_types, args)) return;
                if (!nodes[static_cast<size_t>(pc) - 1].next_guarded)
                    rep_.constraints.push_back({lhs_at(row), callee_shape(I.sym, args), 0});
                return;  // no successor
            }
            case Op::Return: {
                if (st.stack.empty()) return fail(pc, "return with an empty stack");
                ShapeEntry top = st.stack.back();
                if (top.type != s_.result)
                    return fail(pc, "returned type '" + top.type + "' is not '" + s_.result + "'");
                if (!s_.is_behaviour())
                    rep_.constraints.push_back({lhs_at(row), top.term, 0});
                return;  // no successor
            }
            case Op::Read: {
                if (I.sym.empty()) {
                    size_t k = static_cast<size_t>(I.a);
                    if (k < 1 || k > st.stack.size()) return fail(pc, "read slot beyond the stack");
                    if (!bp_.sym.referent_of.count(st.stack[k - 1].type))
                        return fail(pc, "read through a non-reference slot");
                }
                st.stack.push_back(read_entry(pc));
                return propagate(pc + 1, st);
            }
            case Op::Write: {
                if (st.stack.empty()) return fail(pc, "write with an empty stack");
                ShapeEntry top = st.stack.back();
                st.stack.pop_back();
                Name referent;
                if (!I.sym.empty()) {
                    referent = bp_.sym.registers.at(I.sym).referent;
                } else {
                    size_t k = static_cast<size_t>(I.a);
                    if (k < 1 || k > st.stack.size()) return fail(pc, "write slot beyond the stack");
                    auto it = bp_.sym.referent_of.find(st.stack[k - 1].type);
                    if (it == bp_.sym.referent_of.end())
                        return fail(pc, "write through a non-reference slot");
                    referent = it->second;
                }
                if (top.type != referent)
                    return fail(pc, "written type '" + top.type + "' is not '" + referent + "'");
                rep_.constraints.push_back({lhs_at(row), top.term, 1});
                return propagate(pc + 1, st);
            }
            case Op::Stop:
                return;  // no successor
            case Op::Yield:
            case Op::Next:
                return propagate(pc + 1, st);
            case Op::Wait: {
                // consistency with the read is checked afterwards; the next
                // instant resumes with the read value gone
                const ShapeRow& at_read = (*rows_)[static_cast<size_t>(I.a) - 1];
                if (!at_read.reached) return fail(pc, "wait targets an unreached read");
                ShapeRow resumed = at_read;
                resumed.sigma = row.sigma;
                return propagate(pc + 1, resumed);
            }
            case Op::Branch:
                return branch(pc, row, I);
        }
    }

    void branch(long long pc, const ShapeRow& row, const Instr& I) {
        const CtorInfo& c = bp_.sym.ctors.at(I.sym);
        if (row.stack.empty()) return fail(pc, "branch with an empty stack");
        const ShapeEntry top = row.stack.back();
        if (top.term.is_var) {
            if (top.type != c.result_type)
                return fail(pc, "branch constructor does not match the scrutinee type");
            // split: the taken arm refines the variable, the other keeps it
            std::vector<Term> comps;
            ShapeRow then_st = row;
            then_st.stack.pop_back();
            size_t base = then_st.stack.size();
            std::vector<ShapeEntry> fresh;
            for (size_t t = 0; t < c.arg_types.size(); ++t) {
                Name v = "x" + std::to_string(pc + 1) + "_" + std::to_string(base + 1 + t);
                comps.push_back(tvar(v));
                fresh.push_back({tvar(v), c.arg_types[t]});
            }
            std::map<Name, Term> refine{{top.term.head, tapp(I.sym, comps)}};
            for (auto& e : then_st.stack) e.term = term_subst(e.term, refine);
            for (auto& [k, v] : then_st.sigma) v = term_subst(v, refine);
            then_st.sigma[top.term.head] = tapp(I.sym, std::move(comps));
            for (auto& e : fresh) then_st.stack.push_back(std::move(e));
            propagate(pc + 1, then_st);
            propagate(I.a, row);
            return;
        }
        if (!bp_.sym.ctors.count(top.term.head))
            return fail(pc, "branch scrutinee is not in constructor form");
        if (top.term.head == I.sym) {
            if (top.term.args.size() != c.arg_types.size())
                return fail(pc, "constructor arity mismatch on the stack");
            ShapeRow then_st = row;
            then_st.stack.pop_back();
            for (size_t t = 0; t < top.term.args.size(); ++t)
                then_st.stack.push_back({top.term.args[t], c.arg_types[t]});
            propagate(pc + 1, then_st);
            return;  // mismatch arm is dead
        }
        propagate(I.a, row);  // taken arm is dead
    }

    const BytecodeProgram& bp_;
    const FlowGraph& fg_;
    const Segment& s_;
    ShapeReport& rep_;
    std::vector<Name> params_;
    std::vector<ShapeRow>* rows_ = nullptr;
};

}  // namespace detail

inline ShapeReport shape_analysis(const BytecodeProgram& bp, const FlowGraph& fg) {
    ShapeReport rep;
    for (auto& s : bp.segments) detail::SegmentShaper(bp, fg, s, rep).run();
    for (auto& s : bp.segments) {
        if (s.is_behaviour()) {
            std::vector<Name> formals = detail::fresh_params(s.arity());
            auto rit = fg.reads_of.find(s.name);
            if (rit != fg.reads_of.end())
                for (auto& site : rit->second) formals.push_back(detail::site_var(site, s.name));
            rep.symbol_arity[hat(s.name)] = formals.size();
            rep.hat_params[hat(s.name)] = std::move(formals);
        } else {
            rep.symbol_arity[s.name] = s.arity();
        }
    }
    rep.ok = rep.errors.empty();
    return rep;
}

}  // namespace synchrone
