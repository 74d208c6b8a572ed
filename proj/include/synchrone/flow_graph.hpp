#pragma once

// Control flow over bytecode and the structural properties the shape stage
// relies on: segment bodies form trees once wait and call edges are removed,
// every wait points back at its read through branch tests only, nothing
// after an instant boundary reads, and no read sits on a call/branch cycle.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "synchrone/bytecode.hpp"

namespace synchrone {

struct FlowNode {
    long long parent = 0;      // unique tree predecessor pc, 0 at the root
    bool next_guarded = false; // tree path from the root crosses an instant boundary
    bool reached = false;
};

struct FlowGraph {
    bool ok = false;
    bool tree_ok = false;
    bool read_wait_ok = false;
    bool next_ok = false;
    bool read_once_ok = false;
    std::vector<std::string> errors;
    std::map<Name, std::vector<FlowNode>> nodes;  // per segment, index pc-1
    // register read sites visible from each segment through unguarded calls,
    // ordered by (declaration, pc); these become the hat parameters
    std::map<Name, std::vector<std::pair<Name, long long>>> reads_of;
    std::vector<std::pair<Name, long long>> read_once_witness;
};

namespace detail {

inline bool is_terminator(Op op) { return op == Op::Stop || op == Op::Tcall || op == Op::Return; }

inline bool has_successor_edge(Op op) {
    switch (op) {
        case Op::Load:
        case Op::Branch:
        case Op::Build:
        case Op::Call:
        case Op::Read:
        case Op::Write:
        case Op::Yield:
            return true;
        default:
            return false;
    }
}

}  // namespace detail

inline FlowGraph analyze_flow(const BytecodeProgram& bp) {
    FlowGraph fg;
    auto err = [&](const Name& f, long long pc, const std::string& msg) {
        fg.errors.push_back(f + "[" + std::to_string(pc) + "]: " + msg);
    };

    // Tree property: within a segment, successor, branch, and boundary edges
    // give every non-root node exactly one predecessor.
    fg.tree_ok = true;
    for (auto& s : bp.segments) {
        auto& nodes = fg.nodes[s.name];
        nodes.assign(s.code.size(), FlowNode{});
        std::vector<int> indeg(s.code.size(), 0);
        auto add_edge = [&](long long from, long long to) {
            if (to < 1 || to > static_cast<long long>(s.code.size())) return;
            if (nodes[static_cast<size_t>(to) - 1].parent == 0) {
                nodes[static_cast<size_t>(to) - 1].parent = from;
            }
            indeg[static_cast<size_t>(to) - 1] += 1;
        };
        for (size_t i = 0; i < s.code.size(); ++i) {
            const Instr& I = s.code[i];
            long long pc = static_cast<long long>(i) + 1;
            if (detail::has_successor_edge(I.op)) add_edge(pc, pc + 1);
            if (I.op == Op::Branch) add_edge(pc, I.a);
            if (I.op == Op::Next || I.op == Op::Wait) add_edge(pc, pc + 1);  // boundary edge
        }
        if (indeg[0] != 0) {
            err(s.name, 1, "entry instruction has a predecessor");
            fg.tree_ok = false;
        }
        for (size_t i = 1; i < s.code.size(); ++i) {
            if (indeg[i] != 1) {
                err(s.name, static_cast<long long>(i) + 1,
                    indeg[i] == 0 ? "unreachable instruction" : "multiple predecessors");
                fg.tree_ok = false;
            }
        }
        // reachability and boundary propagation along parents
        bool grew = true;
        nodes[0].reached = true;
        while (grew) {
            grew = false;
            for (size_t i = 1; i < nodes.size(); ++i) {
                if (nodes[i].reached || nodes[i].parent == 0) continue;
                FlowNode& p = nodes[static_cast<size_t>(nodes[i].parent) - 1];
                if (!p.reached) continue;
                nodes[i].reached = true;
                Op pop = s.code[static_cast<size_t>(nodes[i].parent) - 1].op;
                bool boundary = (pop == Op::Next || pop == Op::Wait) &&
                                nodes[i].parent + 1 == static_cast<long long>(i) + 1;
                nodes[i].next_guarded = p.next_guarded || boundary;
                grew = true;
            }
        }
        for (size_t i = 0; i < nodes.size(); ++i)
            if (!nodes[i].reached && indeg[i] == 1) {
                err(s.name, static_cast<long long>(i) + 1, "instruction not reachable from the entry");
                fg.tree_ok = false;
            }
    }

    // Read-Wait: the parent chain from a wait must climb back to its read
    // through branch instructions only.
    fg.read_wait_ok = true;
    for (auto& s : bp.segments) {
        auto& nodes = fg.nodes[s.name];
        for (size_t i = 0; i < s.code.size(); ++i) {
            const Instr& I = s.code[i];
            if (I.op != Op::Wait) continue;
            long long pc = static_cast<long long>(i) + 1;
            if (s.code[static_cast<size_t>(I.a) - 1].op != Op::Read) {
                err(s.name, pc, "wait does not target a read");
                fg.read_wait_ok = false;
                continue;
            }
            long long cur = fg.tree_ok ? nodes[i].parent : 0;
            bool good = false;
            while (cur != 0) {
                if (cur == I.a) {
                    good = true;
                    break;
                }
                if (s.code[static_cast<size_t>(cur) - 1].op != Op::Branch) break;
                cur = nodes[static_cast<size_t>(cur) - 1].parent;
            }
            if (!good) {
                err(s.name, pc, "path from the read to the wait is not all branches");
                fg.read_wait_ok = false;
            }
        }
    }

    // Next: with call edges removed, nothing reachable after an instant
    // boundary may read.
    fg.next_ok = true;
    for (auto& s : bp.segments) {
        std::vector<char> seen(s.code.size(), 0);
        std::vector<long long> work;
        for (size_t i = 0; i < s.code.size(); ++i) {
            const Instr& I = s.code[i];
            if ((I.op == Op::Next || I.op == Op::Wait) &&
                static_cast<long long>(i) + 2 <= static_cast<long long>(s.code.size()))
                work.push_back(static_cast<long long>(i) + 2);
        }
        while (!work.empty()) {
            long long pc = work.back();
            work.pop_back();
            if (pc < 1 || pc > static_cast<long long>(s.code.size())) continue;
            if (seen[static_cast<size_t>(pc) - 1]) continue;
            seen[static_cast<size_t>(pc) - 1] = 1;
            const Instr& I = s.code[static_cast<size_t>(pc) - 1];
            if (I.op == Op::Read) {
                err(s.name, pc, "read reachable after an instant boundary");
                fg.next_ok = false;
            }
            if (detail::has_successor_edge(I.op) || I.op == Op::Next || I.op == Op::Wait)
                work.push_back(pc + 1);
            if (I.op == Op::Branch || I.op == Op::Wait) work.push_back(I.a);
        }
    }

    // Read-Once: with wait and boundary edges removed, a cycle through a read
    // would let one instant read the same register unboundedly often.
    fg.read_once_ok = true;
    {
        std::vector<std::pair<Name, long long>> ids;
        std::map<Name, size_t> base;
        for (auto& s : bp.segments) {
            base[s.name] = ids.size();
            for (size_t i = 0; i < s.code.size(); ++i)
                ids.emplace_back(s.name, static_cast<long long>(i) + 1);
        }
        std::vector<std::vector<int>> adj(ids.size());
        for (auto& s : bp.segments) {
            size_t b = base[s.name];
            for (size_t i = 0; i < s.code.size(); ++i) {
                const Instr& I = s.code[i];
                int u = static_cast<int>(b + i);
                if (detail::has_successor_edge(I.op))
                    if (i + 1 < s.code.size()) adj[u].push_back(static_cast<int>(b + i + 1));
                if (I.op == Op::Branch) adj[u].push_back(static_cast<int>(b + I.a - 1));
                if (I.op == Op::Call || I.op == Op::Tcall) {
                    auto it = base.find(I.sym);
                    if (it != base.end()) adj[u].push_back(static_cast<int>(it->second));
                }
            }
        }
        // iterative Tarjan
        int n = static_cast<int>(ids.size());
        std::vector<int> idx(n, -1), low(n, 0), comp(n, -1);
        std::vector<char> on(n, 0);
        std::vector<int> stk;
        std::vector<int> comp_size;
        int counter = 0;
        for (int s0 = 0; s0 < n; ++s0) {
            if (idx[s0] != -1) continue;
            std::vector<std::pair<int, size_t>> call_stack{{s0, 0}};
            while (!call_stack.empty()) {
                auto& [u, ei] = call_stack.back();
                if (ei == 0) {
                    idx[u] = low[u] = counter++;
                    stk.push_back(u);
                    on[u] = 1;
                }
                bool descended = false;
                while (ei < adj[u].size()) {
                    int v = adj[u][ei++];
                    if (idx[v] == -1) {
                        call_stack.emplace_back(v, 0);
                        descended = true;
                        break;
                    }
                    if (on[v]) low[u] = std::min(low[u], idx[v]);
                }
                if (descended) continue;
                if (low[u] == idx[u]) {
                    int c = static_cast<int>(comp_size.size());
                    comp_size.push_back(0);
                    int w;
                    do {
                        w = stk.back();
                        stk.pop_back();
                        on[w] = 0;
                        comp[w] = c;
                        comp_size[c] += 1;
                    } while (w != u);
                }
                int done = u;
                call_stack.pop_back();
                if (!call_stack.empty())
                    low[call_stack.back().first] =
                        std::min(low[call_stack.back().first], low[done]);
            }
        }
        for (auto& s : bp.segments) {
            size_t b = base[s.name];
            for (size_t i = 0; i < s.code.size(); ++i) {
                if (s.code[i].op != Op::Read) continue;
                int c = comp[b + i];
                if (comp_size[c] > 1) {
                    fg.read_once_ok = false;
                    err(s.name, static_cast<long long>(i) + 1, "read lies on a call cycle");
                    if (fg.read_once_witness.empty()) {
                        for (int v = 0; v < n; ++v)
                            if (comp[v] == c) fg.read_once_witness.push_back(ids[static_cast<size_t>(v)]);
                    }
                }
            }
        }
    }

    // Visible read sites: own reads plus those of callees not behind an
    // instant boundary, ordered by declaration then pc.
    {
        std::map<Name, std::set<Name>> callees;
        std::map<Name, std::vector<std::pair<Name, long long>>> own;
        for (auto& s : bp.segments) {
            auto& nodes = fg.nodes[s.name];
            for (size_t i = 0; i < s.code.size(); ++i) {
                const Instr& I = s.code[i];
                if (I.op == Op::Read) own[s.name].emplace_back(s.name, static_cast<long long>(i) + 1);
                if ((I.op == Op::Call || I.op == Op::Tcall) && !nodes[i].next_guarded)
                    callees[s.name].insert(I.sym);
            }
        }
        std::map<Name, int> seg_index;
        for (auto& s : bp.segments) seg_index[s.name] = static_cast<int>(seg_index.size());
        bool grew = true;
        std::map<Name, std::set<std::pair<Name, long long>>> acc;
        for (auto& s : bp.segments)
            acc[s.name] = {own[s.name].begin(), own[s.name].end()};
        while (grew) {
            grew = false;
            for (auto& s : bp.segments) {
                auto& mine = acc[s.name];
                for (auto& g : callees[s.name]) {
                    for (auto& site : acc[g])
                        if (mine.insert(site).second) grew = true;
                }
            }
        }
        for (auto& s : bp.segments) {
            std::vector<std::pair<Name, long long>> sites(acc[s.name].begin(), acc[s.name].end());
            std::sort(sites.begin(), sites.end(), [&](auto& a, auto& b) {
                if (seg_index[a.first] != seg_index[b.first])
                    return seg_index[a.first] < seg_index[b.first];
                return a.second < b.second;
            });
            fg.reads_of[s.name] = std::move(sites);
        }
    }

    fg.ok = fg.tree_ok && fg.read_wait_ok && fg.next_ok && fg.read_once_ok;
    return fg;
}

}  // namespace synchrone
