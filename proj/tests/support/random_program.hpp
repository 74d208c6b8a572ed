#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

// Seeded generator of well-typed source systems. Same-instant calls only
// target lower-indexed behaviours, so every generated program is read-once
// by construction; recursion goes through next.

namespace synchrone::testgen {

struct Ctor {
    std::string name;
    std::vector<int> args;  // type indices
};

struct Type {
    std::string name;
    std::vector<Ctor> ctors;
};

struct Reg {
    std::string name;
    int type;
};

struct ExprFn {
    std::string name;
    std::vector<int> params;  // type indices
    int result;
};

struct BehFn {
    std::string name;
    std::vector<int> params;
};

class Gen {
  public:
    explicit Gen(unsigned seed) : rng_(seed) {}

    std::string program() {
        reset();
        std::ostringstream out;
        types_.push_back({"nat", {{"z", {}}, {"s", {0}}}});
        types_.push_back({"list", {{"nil", {}}, {"cons", {0, 1}}}});
        types_.push_back({"flag", {{"off", {}}, {"on", {}}, {"dim", {}}}});
        out << "type nat = z || s of nat\n";
        out << "type list = nil || cons of (nat, list)\n";
        out << "type flag = off || on || dim\n";

        // one register per type so any parameter can be anchored by a write
        for (int t = 0; t < 3; ++t) {
            std::string def = closed_value(t, 2);
            regs_.push_back({"r" + std::to_string(t), t});
            out << "reftype ref" << t << " = ref " << types_[t].name << " with r" << t << " = "
                << def << "\n";
        }

        int nexprs = pick(1, 2);
        for (int i = 0; i < nexprs; ++i) {
            ExprFn f;
            f.name = "g" + std::to_string(i);
            int np = pick(1, 2);
            for (int p = 0; p < np; ++p) f.params.push_back(pick(0, 2));
            f.result = pick(0, 2);
            out << expr_fn(f);
            exprs_.push_back(f);
        }

        int nbehs = pick(1, 3);
        for (int i = 0; i < nbehs; ++i) {
            BehFn b;
            b.name = "p" + std::to_string(i);
            int np = pick(0, 2);
            for (int p = 0; p < np; ++p) b.params.push_back(pick(0, 2));
            behs_.push_back(b);
        }
        for (int i = 0; i < nbehs; ++i) out << beh_fn(i);

        out << "system = ";
        int nthreads = pick(1, 2);
        for (int i = 0; i < nthreads; ++i) {
            if (i) out << ", ";
            auto& b = behs_[static_cast<size_t>(pick(0, nbehs - 1))];
            out << b.name << "(";
            for (size_t p = 0; p < b.params.size(); ++p) {
                if (p) out << ", ";
                out << closed_value(b.params[p], 2);
            }
            out << ")";
        }
        out << "\n";
        return out.str();
    }

  private:
    void reset() {
        types_.clear();
        regs_.clear();
        exprs_.clear();
        behs_.clear();
        fresh_ = 0;
    }

    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return pick(0, 1) == 1; }
    std::string fresh(const char* base) { return base + std::to_string(fresh_++); }

    std::string closed_value(int t, int depth) {
        auto& ty = types_[static_cast<size_t>(t)];
        std::vector<const Ctor*> small, any;
        for (auto& c : ty.ctors) {
            any.push_back(&c);
            if (c.args.empty()) small.push_back(&c);
        }
        const Ctor* c = depth <= 0 && !small.empty()
                            ? small[static_cast<size_t>(pick(0, int(small.size()) - 1))]
                            : any[static_cast<size_t>(pick(0, int(any.size()) - 1))];
        if (c->args.empty()) return c->name;
        std::string out = c->name + "(";
        for (size_t i = 0; i < c->args.size(); ++i) {
            if (i) out += ", ";
            out += closed_value(c->args[i], depth - 1);
        }
        return out + ")";
    }

    // variables in scope with their types
    using Env = std::vector<std::pair<std::string, int>>;

    std::vector<std::string> vars_of(const Env& env, int t) {
        std::vector<std::string> vs;
        for (auto& [n, vt] : env)
            if (vt == t) vs.push_back(n);
        return vs;
    }

    std::string expr(int t, const Env& env, int depth, size_t fn_limit) {
        auto vs = vars_of(env, t);
        int kind = pick(0, 9);
        if (!vs.empty() && (depth <= 0 || kind < 4))
            return vs[static_cast<size_t>(pick(0, int(vs.size()) - 1))];
        if (depth > 0 && kind >= 8) {
            // call an earlier expression function with this result type
            std::vector<const ExprFn*> fits;
            for (size_t i = 0; i < fn_limit && i < exprs_.size(); ++i)
                if (exprs_[i].result == t) fits.push_back(&exprs_[i]);
            if (!fits.empty()) {
                auto& f = *fits[static_cast<size_t>(pick(0, int(fits.size()) - 1))];
                std::string out = f.name + "(";
                for (size_t i = 0; i < f.params.size(); ++i) {
                    if (i) out += ", ";
                    out += expr(f.params[i], env, depth - 1, fn_limit);
                }
                return out + ")";
            }
        }
        auto& ty = types_[static_cast<size_t>(t)];
        std::vector<const Ctor*> small, any;
        for (auto& c : ty.ctors) {
            any.push_back(&c);
            if (c.args.empty()) small.push_back(&c);
        }
        const Ctor* c = depth <= 0 && !small.empty()
                            ? small[static_cast<size_t>(pick(0, int(small.size()) - 1))]
                            : any[static_cast<size_t>(pick(0, int(any.size()) - 1))];
        if (c->args.empty()) return c->name;
        std::string out = c->name + "(";
        for (size_t i = 0; i < c->args.size(); ++i) {
            if (i) out += ", ";
            out += expr(c->args[i], env, depth - 1, fn_limit);
        }
        return out + ")";
    }

    std::string expr_fn(const ExprFn& f) {
        size_t self = exprs_.size();
        Env env;
        std::vector<std::string> names;
        std::ostringstream out;
        out << "def " << f.name << "(";
        for (size_t i = 0; i < f.params.size(); ++i) {
            if (i) out << ", ";
            std::string v = fresh("x");
            env.push_back({v, f.params[i]});
            names.push_back(v);
            out << v;
        }
        out << ") : " << types_[static_cast<size_t>(f.result)].name << " = "
            << expr_chain(f, names, env, 0, self) << "\n";
        return out.str();
    }

    // match on every parameter in turn; parameters have no annotations, so
    // each one needs a concrete occurrence or inference leaves it open
    std::string expr_chain(const ExprFn& f, const std::vector<std::string>& names, const Env& env,
                           size_t i, size_t self) {
        if (i == names.size()) return expr(f.result, env, 2, self);
        const std::string& sv = names[i];
        auto& ty = types_[static_cast<size_t>(f.params[i])];
        const Ctor& c = ty.ctors[static_cast<size_t>(pick(0, int(ty.ctors.size()) - 1))];
        std::string out = "match " + sv + " with " + c.name;
        // the scrutinee is consumed by the then branch
        Env then_env;
        for (auto& e : env)
            if (e.first != sv) then_env.push_back(e);
        if (!c.args.empty()) {
            out += "(";
            for (size_t a = 0; a < c.args.size(); ++a) {
                if (a) out += ", ";
                std::string v = fresh("y");
                then_env.push_back({v, c.args[a]});
                out += v;
            }
            out += ")";
        }
        out += " then (" + expr_chain(f, names, then_env, i + 1, self) + ") else (" +
               expr_chain(f, names, env, i + 1, self) + ")";
        return out;
    }

    // same-instant calls go strictly down; next calls go anywhere
    std::string call(size_t idx, const Env& env, bool via_next) {
        size_t hi = via_next ? behs_.size() : idx;
        size_t target = hi == 0 ? idx : static_cast<size_t>(pick(0, int(hi) - 1));
        if (hi == 0) target = idx;  // self through next only
        auto& b = behs_[target];
        std::string out = b.name;
        if (!b.params.empty()) {
            out += "(";
            for (size_t i = 0; i < b.params.size(); ++i) {
                if (i) out += ", ";
                out += expr(b.params[i], env, 2, exprs_.size());
            }
            out += ")";
        } else {
            out += "()";
        }
        return out;
    }

    std::string behaviour(size_t idx, const Env& env, int depth) {
        int kind = depth <= 0 ? pick(0, 1) : pick(0, 6);
        switch (kind) {
            case 0:
                return "stop";
            case 1:
                return "next . " + call(idx, env, true);
            case 2:
                if (idx > 0) return call(idx, env, false);
                return "yield . " + behaviour(idx, env, depth - 1);
            case 3:
                return "yield . " + behaviour(idx, env, depth - 1);
            case 4: {
                auto& r = regs_[static_cast<size_t>(pick(0, int(regs_.size()) - 1))];
                return r.name + " := " + expr(r.type, env, 2, exprs_.size()) + " . " +
                       behaviour(idx, env, depth - 1);
            }
            case 5: {
                // match on a variable if one is available
                if (env.empty()) return "stop";
                size_t si = static_cast<size_t>(pick(0, int(env.size()) - 1));
                auto [sv, st] = env[si];
                auto& ty = types_[static_cast<size_t>(st)];
                const Ctor& c = ty.ctors[static_cast<size_t>(pick(0, int(ty.ctors.size()) - 1))];
                std::string out = "match " + sv + " with " + c.name;
                // the scrutinee is consumed by the then branch
                Env then_env = env;
                then_env.erase(then_env.begin() + static_cast<long>(si));
                if (!c.args.empty()) {
                    out += "(";
                    for (size_t i = 0; i < c.args.size(); ++i) {
                        if (i) out += ", ";
                        std::string v = fresh("m");
                        then_env.push_back({v, c.args[i]});
                        out += v;
                    }
                    out += ")";
                }
                out += " then (" + behaviour(idx, then_env, depth - 1) + ") else (" +
                       behaviour(idx, env, depth - 1) + ")";
                return out;
            }
            default: {
                auto& r = regs_[static_cast<size_t>(pick(0, int(regs_.size()) - 1))];
                auto& ty = types_[static_cast<size_t>(r.type)];
                std::string out = "read " + r.name + " with ";
                int nb = pick(1, int(ty.ctors.size()));
                bool var_branch = coin();
                for (int i = 0; i < nb; ++i) {
                    if (i) out += " | ";
                    const Ctor& c = ty.ctors[static_cast<size_t>(i)];
                    Env benv = env;
                    out += c.name;
                    if (!c.args.empty()) {
                        out += "(";
                        for (size_t a = 0; a < c.args.size(); ++a) {
                            if (a) out += ", ";
                            std::string v = fresh("w");
                            benv.push_back({v, c.args[a]});
                            out += v;
                        }
                        out += ")";
                    }
                    out += " => (" + branch_body(idx, benv, depth - 1) + ")";
                }
                if (var_branch) {
                    std::string v = fresh("w");
                    Env benv = env;
                    benv.push_back({v, r.type});
                    out += " | " + v + " => (" + branch_body(idx, benv, depth - 1) + ")";
                }
                out += " | [_] => " + call(idx, env, true);
                return out;
            }
        }
    }

    // read branch bodies: keep them same-instant-call free toward higher
    // indices so read-once stays vacuous
    std::string branch_body(size_t idx, const Env& env, int depth) {
        switch (pick(0, 3)) {
            case 0:
                return "stop";
            case 1:
                return "next . " + call(idx, env, true);
            case 2: {
                auto& r = regs_[static_cast<size_t>(pick(0, int(regs_.size()) - 1))];
                return r.name + " := " + expr(r.type, env, 2, exprs_.size()) + " . next . " +
                       call(idx, env, true);
            }
            default:
                if (idx > 0) return call(idx, env, false);
                return "next . " + call(idx, env, true);
        }
    }

    std::string beh_fn(size_t idx) {
        auto& b = behs_[idx];
        Env env;
        std::ostringstream out;
        out << "beh " << b.name << "(";
        for (size_t i = 0; i < b.params.size(); ++i) {
            if (i) out << ", ";
            std::string v = fresh("x");
            env.push_back({v, b.params[i]});
            out << v;
        }
        out << ") = ";
        // write each parameter once; a parameter whose only occurrences are
        // arguments of other inferred parameters never gets a concrete type
        for (auto& [v, t] : env)
            out << regs_[static_cast<size_t>(t)].name << " := " << v << " . ";
        out << behaviour(idx, env, 3) << "\n";
        return out.str();
    }

    std::mt19937 rng_;
    std::vector<Type> types_;
    std::vector<Reg> regs_;
    std::vector<ExprFn> exprs_;
    std::vector<BehFn> behs_;
    int fresh_ = 0;
};

}  // namespace synchrone::testgen
