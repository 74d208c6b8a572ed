#pragma once

// Stack machine with the cooperative scheduler. A slice runs until the
// instruction stream yields a status; the scheduler then scans onward from
// the next thread. A waiting thread is re-eligible only after a store write
// that postdates its wait; at the instant boundary it resumes at the saved
// default address instead.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "synchrone/ast.hpp"
#include "synchrone/bytecode.hpp"
#include "synchrone/interpreter.hpp"

namespace synchrone {

struct VmFault : std::runtime_error {
    explicit VmFault(const std::string& msg) : std::runtime_error("vm fault: " + msg) {}
};

class Vm {
  public:
    explicit Vm(BytecodeProgram bp, long long fuel_per_instant = 10'000'000)
        : bp_(std::move(bp)), fuel_(fuel_per_instant) {
        for (auto& r : bp_.sym.register_order) {
            store0_[r] = bp_.sym.registers.at(r).default_value;
            store_size_ += static_cast<long long>(value_size(store0_[r]));
        }
        store_ = store0_;
        config_ = store_size_;
        for (auto& t : bp_.system) {
            Thread th;
            const Segment* seg = bp_.find(t.callee);
            if (!seg) throw VmFault("unknown system function '" + t.callee + "'");
            Frame fr;
            fr.seg = seg;
            fr.pc = 1;
            for (auto& a : t.args) {
                auto v = closed_value(a, bp_.sym);
                if (!v) throw VmFault("system argument is not a value");
                note_size(*v);
                push(th, fr, std::move(*v));
            }
            th.frames.push_back(std::move(fr));
            threads_.push_back(std::move(th));
        }
        init_max_ = max_size_;
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

    // Peak sum of stack and store value sizes, one entry per instant run.
    const std::vector<long long>& config_peaks() const { return config_peaks_; }

  private:
    struct Frame {
        const Segment* seg = nullptr;
        long long pc = 1;
        std::vector<Value> stack;
    };

    struct Thread {
        std::vector<Frame> frames;
        ThreadStatus st = ThreadStatus::R;
        long long resume_pc = 0;  // default-call address saved by wait
        long long wait_entry = 0; // scheduler time the wait ran
        long long mem = 0;        // sum of stack value sizes across frames
    };

    // --- size accounting ----------------------------------------------------
    void push(Thread& th, Frame& fr, Value v) {
        long long s = static_cast<long long>(value_size(v));
        th.mem += s;
        config_ += s;
        fr.stack.push_back(std::move(v));
    }
    Value pop(Thread& th, Frame& fr) {
        if (fr.stack.empty()) throw VmFault("stack underflow in " + fr.seg->name);
        Value v = std::move(fr.stack.back());
        fr.stack.pop_back();
        long long s = static_cast<long long>(value_size(v));
        th.mem -= s;
        config_ -= s;
        return v;
    }
    void drop_frames(Thread& th) {
        config_ -= th.mem;
        th.mem = 0;
        th.frames.clear();
    }
    void note_size(const Value& v) {
        long long s = static_cast<long long>(value_size(v));
        if (s > max_size_) max_size_ = s;
    }
    static long long frame_total(const Frame& fr) {
        long long s = 0;
        for (auto& v : fr.stack) s += static_cast<long long>(value_size(v));
        return s;
    }
    void note_config() {
        if (config_ > config_peak_) config_peak_ = config_;
    }

    const Segment* segment(const Name& f) const {
        const Segment* s = bp_.find(f);
        if (!s) throw VmFault("unknown function '" + f + "'");
        return s;
    }

    const Name& operand_register(const Instr& I, const Frame& fr) const {
        if (!I.sym.empty()) return I.sym;
        size_t k = static_cast<size_t>(I.a);
        if (k < 1 || k > fr.stack.size()) throw VmFault("register slot out of range");
        return fr.stack[k - 1].head;
    }

    void tick() {
        if (++used_ > fuel_) throw FuelExhausted(instant_);
    }

    // --- one instruction ------------------------------------------------------
    std::optional<ThreadStatus> exec(Thread& th, StepRecord& step) {
        if (th.frames.empty()) throw VmFault("running a stopped thread");
        Frame& fr = th.frames.back();
        if (fr.pc < 1 || fr.pc > static_cast<long long>(fr.seg->code.size()))
            throw VmFault("pc out of range in " + fr.seg->name);
        const Instr& I = fr.seg->code[static_cast<size_t>(fr.pc) - 1];
        tick();
        switch (I.op) {
            case Op::Load: {
                size_t k = static_cast<size_t>(I.a);
                if (k < 1 || k > fr.stack.size())
                    throw VmFault("load out of range in " + fr.seg->name);
                Value v = fr.stack[k - 1];
                push(th, fr, std::move(v));
                fr.pc += 1;
                return std::nullopt;
            }
            case Op::Branch: {
                if (fr.stack.empty()) throw VmFault("branch on empty stack");
                if (fr.stack.back().head == I.sym) {
                    Value v = pop(th, fr);
                    for (auto& a : v.args) push(th, fr, std::move(a));
                    fr.pc += 1;
                } else {
                    fr.pc = I.a;
                }
                return std::nullopt;
            }
            case Op::Build: {
                size_t n = static_cast<size_t>(I.a);
                Value v;
                v.head = I.sym;
                v.args.resize(n);
                for (size_t i = n; i > 0; --i) v.args[i - 1] = pop(th, fr);
                note_size(v);
                push(th, fr, std::move(v));
                fr.pc += 1;
                return std::nullopt;
            }
            case Op::Call: {
                size_t n = static_cast<size_t>(I.a);
                if (fr.stack.size() < n) throw VmFault("call arguments missing");
                Frame callee;
                callee.seg = segment(I.sym);
                callee.pc = 1;
                for (size_t i = fr.stack.size() - n; i < fr.stack.size(); ++i) {
                    Value v = fr.stack[i];
                    long long s = static_cast<long long>(value_size(v));
                    th.mem += s;
                    config_ += s;
                    callee.stack.push_back(std::move(v));
                }
                th.frames.push_back(std::move(callee));
                return std::nullopt;  // caller pc advances on return
            }
            case Op::Tcall: {
                size_t n = static_cast<size_t>(I.a);
                if (fr.stack.size() < n) throw VmFault("tcall arguments missing");
                Frame next;
                next.seg = segment(I.sym);
                next.pc = 1;
                next.stack.assign(fr.stack.end() - static_cast<long>(n), fr.stack.end());
                long long delta = frame_total(next) - frame_total(fr);
                th.mem += delta;
                config_ += delta;
                th.frames.pop_back();
                th.frames.push_back(std::move(next));
                return std::nullopt;
            }
            case Op::Return: {
                if (th.frames.size() < 2) throw VmFault("return from the base frame");
                if (fr.stack.empty()) throw VmFault("return with no value");
                Value v = pop(th, fr);
                size_t ar = fr.seg->arity();
                long long gone = frame_total(fr);
                th.frames.pop_back();
                Frame& caller = th.frames.back();
                if (caller.stack.size() < ar) throw VmFault("caller arguments missing");
                for (size_t i = caller.stack.size() - ar; i < caller.stack.size(); ++i)
                    gone += static_cast<long long>(value_size(caller.stack[i]));
                caller.stack.resize(caller.stack.size() - ar);
                th.mem -= gone;
                config_ -= gone;
                push(th, caller, std::move(v));
                caller.pc += 1;
                return std::nullopt;
            }
            case Op::Read: {
                const Name& r = operand_register(I, fr);
                auto it = store_.find(r);
                if (it == store_.end()) throw VmFault("read of unknown register '" + r + "'");
                Value v = it->second;
                note_size(v);
                push(th, fr, std::move(v));
                fr.pc += 1;
                return std::nullopt;
            }
            case Op::Write: {
                Value v = pop(th, fr);
                const Name& r = operand_register(I, fr);
                auto it = store_.find(r);
                if (it == store_.end()) throw VmFault("write to unknown register '" + r + "'");
                wtime_ = time_;
                note_size(v);
                long long delta = static_cast<long long>(value_size(v)) -
                                  static_cast<long long>(value_size(it->second));
                store_size_ += delta;
                config_ += delta;
                step.writes.emplace_back(r, v);
                it->second = std::move(v);
                fr.pc += 1;
                return std::nullopt;
            }
            case Op::Stop:
                drop_frames(th);
                return ThreadStatus::S;
            case Op::Yield:
                fr.pc += 1;
                return ThreadStatus::R;
            case Op::Next:
                fr.pc += 1;
                return ThreadStatus::N;
            case Op::Wait: {
                th.resume_pc = fr.pc + 1;
                th.wait_entry = time_;
                pop(th, fr);  // the unmatched read value
                fr.pc = I.a;
                return ThreadStatus::W;
            }
        }
        throw VmFault("bad opcode");
    }

    // --- scheduling -----------------------------------------------------------
    bool eligible(const Thread& th) const {
        if (th.st == ThreadStatus::R) return true;
        return th.st == ThreadStatus::W && th.wait_entry < wtime_;
    }

    int pick(int from) const {
        int n = static_cast<int>(threads_.size());
        for (int d = 0; d < n; ++d) {
            int k = (from + d) % n;
            if (eligible(threads_[k])) return k;
        }
        return -1;
    }

    InstantRecord run_instant(int k) {
        instant_ = k;
        used_ = 0;
        max_size_ = k == 1 ? init_max_ : 0;
        config_peak_ = config_;
        InstantRecord rec;
        rec.instant = k;
        int tid = pick(0);
        while (tid >= 0) {
            Thread& th = threads_[tid];
            th.st = ThreadStatus::R;
            StepRecord step;
            step.thread = tid;
            std::optional<ThreadStatus> X;
            while (!X) {
                X = exec(th, step);
                note_config();
            }
            th.st = *X;
            step.status = *X;
            rec.steps.push_back(std::move(step));
            int nxt = pick((tid + 1) % static_cast<int>(threads_.size()));
            if (nxt < 0) break;
            threads_[nxt].st = ThreadStatus::R;
            time_ += 1;
            tid = nxt;
        }
        for (auto& r : bp_.sym.register_order) rec.snapshot.emplace_back(r, store_.at(r));
        for (int i = 0; i < static_cast<int>(threads_.size()); ++i) {
            rec.statuses.push_back(threads_[i].st);
            if (threads_[i].st == ThreadStatus::S) rec.stopped.push_back(i);
        }
        rec.max_value_size = max_size_;
        config_peaks_.push_back(config_peak_);
        // Instant boundary: waiting threads fall to their default address,
        // suspended threads revive, the store returns to the defaults.
        for (auto& th : threads_) {
            if (th.st == ThreadStatus::W) {
                th.frames.back().pc = th.resume_pc;
                th.st = ThreadStatus::R;
            } else if (th.st == ThreadStatus::N) {
                th.st = ThreadStatus::R;
            }
        }
        long long fresh = 0;
        for (auto& r : bp_.sym.register_order) fresh += static_cast<long long>(value_size(store0_.at(r)));
        config_ += fresh - store_size_;
        store_size_ = fresh;
        store_ = store0_;
        wtime_ = time_;
        return rec;
    }

    const BytecodeProgram bp_;
    long long fuel_;
    long long used_ = 0;
    int instant_ = 0;
    long long time_ = 0;
    long long wtime_ = 0;
    long long max_size_ = 0;
    long long init_max_ = 0;
    long long config_ = 0;
    long long config_peak_ = 0;
    long long store_size_ = 0;
    std::vector<long long> config_peaks_;
    std::map<Name, Value> store0_, store_;
    std::vector<Thread> threads_;
};

}  // namespace synchrone
