#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ast.hpp"
#include "pretty.hpp"
#include "typecheck.hpp"

// Reference executor. A thread runs one atomic sequence at a time; the
// sequence ends only at stop, yield, next, or a read that no branch
// matches. The store resets to the register defaults at every instant
// boundary.

namespace synchrone {

struct FuelExhausted : std::runtime_error {
    int instant;
    explicit FuelExhausted(int k)
        : std::runtime_error("fuel exhausted in instant " + std::to_string(k)), instant(k) {}
};

enum class ThreadStatus : char { N = 'N', R = 'R', S = 'S', W = 'W' };

struct StepRecord {
    int thread;
    ThreadStatus status;  // status when the atomic sequence ended
    std::vector<std::pair<Name, Value>> writes;
};

struct InstantRecord {
    int instant;  // 1-based
    std::vector<StepRecord> steps;
    std::vector<std::pair<Name, Value>> snapshot;  // store before reset, declaration order
    std::vector<ThreadStatus> statuses;            // before the end-of-instant update
    std::vector<int> stopped;                      // thread ids with status S
    long long max_value_size = 0;
    std::map<std::pair<int, Name>, int> read_counts;  // (thread, label) -> executions
};

struct RunTrace {
    std::vector<InstantRecord> instants;
    bool all_stopped = false;
};

class Interpreter {
  public:
    Interpreter(const TypedProgram& tp, long long fuel_per_instant = 10'000'000)
        : tp_(tp), fuel_(fuel_per_instant) {
        for (auto& r : tp_.sym.register_order) store0_[r] = tp_.sym.registers.at(r).default_value;
        store_ = store0_;
        for (auto& t : tp_.prog.system) {
            Thread th;
            th.status = ThreadStatus::R;
            th.call_callee = t.callee;
            th.call_args = &t.args;
            threads_.push_back(std::move(th));
        }
    }

    RunTrace run(int instants) {
        RunTrace trace;
        for (int k = 1; k <= instants; ++k) {
            InstantRecord rec = run_instant(k);
            bool done = rec.stopped.size() == threads_.size();
            trace.instants.push_back(std::move(rec));
            if (done) {
                trace.all_stopped = true;
                break;
            }
        }
        return trace;
    }

    int thread_count() const { return static_cast<int>(threads_.size()); }

  private:
    using Env = std::map<Name, Value>;

    struct Thread {
        ThreadStatus status;
        const Behaviour* at = nullptr;  // resumption point when call_callee is empty
        Env env;
        Name call_callee;  // pending call with unevaluated arguments
        const std::vector<Expr>* call_args = nullptr;
        Env call_env;
    };

    // --- expression evaluation -------------------------------------------
    void tick() {
        if (++used_ > fuel_) throw FuelExhausted(instant_);
    }

    Value eval(const Expr& e, const Env& env) {
        tick();
        switch (e.kind) {
            case Expr::Kind::Var:
                return env.at(e.name);
            case Expr::Kind::Ident:
            case Expr::Kind::Ctor: {
                Value v;
                v.head = e.name;
                for (auto& a : e.args) v.args.push_back(eval(a, env));
                note_size(v);
                return v;
            }
            case Expr::Kind::Call: {
                auto& fn = fn_def(e.name);
                Env callee_env;
                for (size_t i = 0; i < e.args.size(); ++i) {
                    Value v = eval(e.args[i], env);
                    note_size(v);
                    callee_env[fn.params[i].name] = std::move(v);
                }
                return eval_body(fn.body, callee_env);
            }
        }
        throw std::logic_error("unreachable expression kind");
    }

    Value eval_body(const ExprBody& b, const Env& env) {
        tick();
        if (b.kind == ExprBody::Kind::Expr) return eval(b.expr, env);
        const Value& scrut = env.at(b.scrutinee);
        Env then_env = env;
        then_env.erase(b.scrutinee);
        if (match_pattern(b.pattern, scrut, then_env)) return eval_body(*b.then_body, then_env);
        return eval_body(*b.else_body, env);
    }

    const FunctionDef& fn_def(const Name& f) const {
        return tp_.prog.functions[tp_.sym.functions.at(f).decl_index];
    }

    // Register a thread's read/assign target refers to.
    const Name& target_register(const Thread& th, const Behaviour& b) const {
        auto rit = tp_.sym.registers.find(b.target);
        if (rit != tp_.sym.registers.end()) return b.target;
        return th.env.at(b.target).head;
    }

    // --- one atomic sequence ----------------------------------------------
    void enter_call(Thread& th, const Name& callee, std::vector<Value> args) {
        auto& fn = fn_def(callee);
        Env env;
        for (size_t i = 0; i < args.size(); ++i) env[fn.params[i].name] = std::move(args[i]);
        th.env = std::move(env);
        th.at = fn.beh.get();
    }

    std::vector<Value> eval_args(const std::vector<Expr>& args, const Env& env) {
        std::vector<Value> out;
        for (auto& a : args) {
            Value v = eval(a, env);
            note_size(v);
            out.push_back(std::move(v));
        }
        return out;
    }

    StepRecord step_thread(int i, InstantRecord& rec) {
        Thread& th = threads_[i];
        StepRecord step;
        step.thread = i;
        if (!th.call_callee.empty()) {
            Name callee = th.call_callee;
            th.call_callee.clear();
            enter_call(th, callee, eval_args(*th.call_args, th.call_env));
            th.call_env.clear();
        }
        for (;;) {
            tick();
            const Behaviour& b = *th.at;
            switch (b.kind) {
                case Behaviour::Kind::Stop:
                    th.status = ThreadStatus::S;
                    th.at = nullptr;
                    th.env.clear();
                    step.status = th.status;
                    return step;
                case Behaviour::Kind::Yield:
                    th.status = ThreadStatus::R;
                    th.at = b.cont.get();
                    step.status = th.status;
                    return step;
                case Behaviour::Kind::Next:
                    th.status = ThreadStatus::N;
                    th.call_callee = b.callee;
                    th.call_args = &b.args;
                    th.call_env = th.env;
                    th.at = nullptr;
                    step.status = th.status;
                    return step;
                case Behaviour::Kind::TailCall: {
                    enter_call(th, b.callee, eval_args(b.args, th.env));
                    break;
                }
                case Behaviour::Kind::Assign: {
                    const Name& r = target_register(th, b);
                    Value v = eval(b.expr, th.env);
                    note_size(v);
                    store_[r] = v;
                    step.writes.emplace_back(r, std::move(v));
                    th.at = b.cont.get();
                    break;
                }
                case Behaviour::Kind::Read: {
                    const Name& r = target_register(th, b);
                    const Value& v = store_.at(r);
                    const ReadBranch* hit = nullptr;
                    Env env2 = th.env;
                    for (auto& br : b.branches) {
                        if (match_pattern(br.pattern, v, env2)) {
                            hit = &br;
                            break;
                        }
                        env2 = th.env;
                    }
                    if (!hit) {
                        th.status = ThreadStatus::W;
                        step.status = th.status;
                        return step;  // stays at this read
                    }
                    note_size(v);
                    rec.read_counts[{i, b.label}] += 1;
                    th.env = std::move(env2);
                    th.at = hit->body.get();
                    break;
                }
                case Behaviour::Kind::Match: {
                    const Value& scrut = th.env.at(b.scrutinee);
                    Env then_env = th.env;
                    then_env.erase(b.scrutinee);
                    if (match_pattern(b.pattern, scrut, then_env)) {
                        th.env = std::move(then_env);
                        th.at = b.then_body.get();
                    } else {
                        th.at = b.else_body.get();
                    }
                    break;
                }
            }
        }
    }

    // --- scheduling --------------------------------------------------------
    bool eligible(const Thread& th) const {
        if (th.status == ThreadStatus::R) return true;
        if (th.status != ThreadStatus::W) return false;
        const Behaviour& b = *th.at;
        const Value& v = store_.at(target_register(th, b));
        for (auto& br : b.branches) {
            Env scratch;
            if (match_pattern(br.pattern, v, scratch)) return true;
        }
        return false;
    }

    int pick(bool instant_start) const {
        int n = static_cast<int>(threads_.size());
        for (int d = 0; d < n; ++d) {
            int k = instant_start ? d : (current_ + 1 + d) % n;
            if (eligible(threads_[k])) return k;
        }
        return -1;
    }

    InstantRecord run_instant(int k) {
        instant_ = k;
        used_ = 0;
        max_size_ = 0;
        InstantRecord rec;
        rec.instant = k;
        bool first = true;
        for (;;) {
            int i = pick(first);
            first = false;
            if (i < 0) break;
            current_ = i;
            rec.steps.push_back(step_thread(i, rec));
        }
        for (auto& r : tp_.sym.register_order) rec.snapshot.emplace_back(r, store_.at(r));
        for (int i = 0; i < static_cast<int>(threads_.size()); ++i) {
            rec.statuses.push_back(threads_[i].status);
            if (threads_[i].status == ThreadStatus::S) rec.stopped.push_back(i);
        }
        rec.max_value_size = max_size_;
        // End of instant: waiting reads fall to their defaults, suspended
        // threads revive, store returns to the defaults.
        for (auto& th : threads_) {
            if (th.status == ThreadStatus::W) {
                const Behaviour& b = *th.at;
                th.call_callee = b.default_callee;
                th.call_args = &b.default_args;
                th.call_env = th.env;
                th.at = nullptr;
                th.status = ThreadStatus::R;
            } else if (th.status == ThreadStatus::N) {
                th.status = ThreadStatus::R;
            }
        }
        store_ = store0_;
        return rec;
    }

    void note_size(const Value& v) {
        long long s = value_size(v);
        if (s > max_size_) max_size_ = s;
    }

    const TypedProgram& tp_;
    long long fuel_;
    long long used_ = 0;
    long long max_size_ = 0;
    int instant_ = 0;
    int current_ = 0;
    std::map<Name, Value> store0_, store_;
    std::vector<Thread> threads_;
};

// --- trace rendering (shared shape with the machine) -----------------------

inline std::string show_step_line(int instant, const StepRecord& s) {
    std::ostringstream out;
    out << "instant " << instant << " | thread " << s.thread << " | "
        << static_cast<char>(s.status) << " | writes ";
    if (s.writes.empty()) {
        out << "-";
    } else {
        for (size_t i = 0; i < s.writes.size(); ++i) {
            if (i) out << ", ";
            out << s.writes[i].first << "=" << show_value(s.writes[i].second) << "(|v|="
                << value_size(s.writes[i].second) << ")";
        }
    }
    return out.str();
}

inline std::string show_snapshot_line(const InstantRecord& rec) {
    std::ostringstream out;
    out << "instant " << rec.instant << " | snapshot | ";
    for (size_t i = 0; i < rec.snapshot.size(); ++i) {
        if (i) out << ", ";
        out << rec.snapshot[i].first << "=" << show_value(rec.snapshot[i].second);
    }
    out << " | stopped {";
    for (size_t i = 0; i < rec.stopped.size(); ++i) {
        if (i) out << ",";
        out << rec.stopped[i];
    }
    out << "} | max|v|=" << rec.max_value_size;
    return out.str();
}

inline std::string show_trace(const RunTrace& t) {
    std::string out;
    for (auto& rec : t.instants) {
        for (auto& s : rec.steps) out += show_step_line(rec.instant, s) + "\n";
        out += show_snapshot_line(rec) + "\n";
    }
    if (t.all_stopped) out += "all threads stopped\n";
    return out;
}

}  // namespace synchrone
