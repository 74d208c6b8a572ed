#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ast.hpp"
#include "typecheck.hpp"

// Read-once control flow analysis. Nodes are behaviour functions; edges are
// the calls that can happen within the current instant (next continuations
// and read defaults run in the following instant and are excluded).

namespace synchrone {

struct CfaResult {
    bool ok = true;
    std::vector<Name> witness_cycle;           // f0 -> f1 -> ... -> f0 when !ok
    Name witness_function;                     // the node with a read on the cycle
    std::map<Name, std::set<Name>> calls;      // E
    std::map<Name, std::vector<Name>> labels;  // L(f), source order
    std::map<Name, std::vector<Name>> reads;   // R(f) = y_f, source order
};

class Cfa {
  public:
    explicit Cfa(const TypedProgram& tp) : tp_(tp) {}

    CfaResult run() {
        CfaResult res;
        std::vector<Name> fns;
        for (auto& f : tp_.prog.functions) {
            if (f.kind != FunctionDef::Kind::Behaviour) continue;
            fns.push_back(f.name);
            res.calls[f.name] = {};
            res.labels[f.name] = {};
            collect(*f.beh, res.calls[f.name], res.labels[f.name]);
        }
        std::map<Name, int> label_index;
        for (auto& site : tp_.sym.reads) label_index[site.label] = site.global_index;
        for (auto& f : fns) {
            std::set<Name> seen{f};
            std::deque<Name> work{f};
            std::set<Name> acc;
            while (!work.empty()) {
                Name g = work.front();
                work.pop_front();
                for (auto& l : res.labels[g]) acc.insert(l);
                for (auto& h : res.calls[g])
                    if (seen.insert(h).second) work.push_back(h);
            }
            std::vector<Name> ordered(acc.begin(), acc.end());
            std::sort(ordered.begin(), ordered.end(),
                      [&](const Name& a, const Name& b) { return label_index[a] < label_index[b]; });
            res.reads[f] = std::move(ordered);
        }
        // A loop through a node with a read violates the condition. Find the
        // shortest such cycle as a witness.
        for (auto& f : fns) {
            if (res.labels[f].empty()) continue;
            auto cycle = shortest_cycle(res.calls, f);
            if (!cycle.empty()) {
                res.ok = false;
                res.witness_function = f;
                res.witness_cycle = std::move(cycle);
                break;
            }
        }
        return res;
    }

  private:
    void collect(const Behaviour& b, std::set<Name>& calls, std::vector<Name>& labels) {
        switch (b.kind) {
            case Behaviour::Kind::Stop:
            case Behaviour::Kind::Next:
                return;
            case Behaviour::Kind::TailCall:
                calls.insert(b.callee);
                return;
            case Behaviour::Kind::Yield:
                collect(*b.cont, calls, labels);
                return;
            case Behaviour::Kind::Assign:
                collect(*b.cont, calls, labels);
                return;
            case Behaviour::Kind::Read:
                labels.push_back(b.label);
                for (auto& br : b.branches) collect(*br.body, calls, labels);
                return;  // the default branch is deferred to the next instant
            case Behaviour::Kind::Match:
                collect(*b.then_body, calls, labels);
                collect(*b.else_body, calls, labels);
                return;
        }
    }

    // BFS from f back to f; returns f .. f (nonempty iff f lies on a cycle).
    static std::vector<Name> shortest_cycle(const std::map<Name, std::set<Name>>& calls,
                                            const Name& f) {
        std::map<Name, Name> parent;
        std::deque<Name> work;
        for (auto& g : calls.at(f)) {
            if (g == f) return {f, f};
            if (!parent.count(g)) {
                parent[g] = f;
                work.push_back(g);
            }
        }
        while (!work.empty()) {
            Name g = work.front();
            work.pop_front();
            auto it = calls.find(g);
            if (it == calls.end()) continue;
            for (auto& h : it->second) {
                if (h == f) {
                    std::vector<Name> path{f};
                    std::vector<Name> back;
                    for (Name cur = g; cur != f; cur = parent.at(cur)) back.push_back(cur);
                    for (auto rit = back.rbegin(); rit != back.rend(); ++rit) path.push_back(*rit);
                    path.push_back(f);
                    return path;
                }
                if (!parent.count(h)) {
                    parent[h] = g;
                    work.push_back(h);
                }
            }
        }
        return {};
    }

    const TypedProgram& tp_;
};

inline CfaResult analyze_read_once(const TypedProgram& tp) { return Cfa(tp).run(); }

}  // namespace synchrone
