#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "synchrone/analyze.hpp"
#include "synchrone/bytecode.hpp"
#include "synchrone/compiler.hpp"
#include "synchrone/flow_graph.hpp"
#include "synchrone/interpreter.hpp"
#include "synchrone/lexer.hpp"
#include "synchrone/parser.hpp"
#include "synchrone/shape.hpp"
#include "synchrone/typecheck.hpp"
#include "synchrone/vm.hpp"

using namespace synchrone;
using nlohmann::json;

namespace {

// stable exit codes, documented in the readme
enum Exit {
    kOk = 0,
    kDiagnostics = 1,
    kReadOnce = 2,
    kIo = 3,
    kMissingEvidence = 4,  // no precedence or quasi-interpretation found
    kFuel = 5,
    kVmFault = 6,
};

struct Options {
    int instants = 5;
    long long fuel = 10'000'000;
    unsigned seed = 0;
    bool meter = false;
    std::string format = "text";  // or "records"
    std::string prec_file;
    std::string qi_file;
    std::string out_file;
};

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string swap_extension(const std::string& path, const std::string& ext) {
    auto slash = path.find_last_of('/');
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + ext;
    return path.substr(0, dot) + ext;
}

void print_diags(const DiagnosticList& d) {
    for (auto& diag : d.items) std::cerr << render(diag) << "\n";
}

std::optional<TypedProgram> load_source(const std::string& text, DiagnosticList& d) {
    auto toks = Lexer(text, d).run();
    Parser parser(std::move(toks), d);
    Program p = parser.parse_program();
    return typecheck(std::move(p), d);
}

// sidecar files hold bare `order` / `qi` items
std::optional<Program> load_annotations(const std::string& path, bool required) {
    auto text = read_file(path);
    if (!text) {
        if (required) {
            std::cerr << "cannot read " << path << "\n";
            std::exit(kIo);
        }
        return std::nullopt;
    }
    DiagnosticList d;
    auto toks = Lexer(*text, d).run();
    Parser parser(std::move(toks), d);
    Program p = parser.parse_program();
    if (d.has_errors()) {
        print_diags(d);
        std::exit(kDiagnostics);
    }
    return p;
}

Program gather_sidecars(const std::string& input, const Options& opt) {
    Program side;
    std::string prec = opt.prec_file.empty() ? swap_extension(input, ".prec") : opt.prec_file;
    std::string qi = opt.qi_file.empty() ? swap_extension(input, ".qi") : opt.qi_file;
    if (auto p = load_annotations(prec, !opt.prec_file.empty())) side.order = p->order;
    if (auto p = load_annotations(qi, !opt.qi_file.empty())) side.qis = p->qis;
    return side;
}

json value_json(const Value& v) { return show_value(v); }

json instant_json(const InstantRecord& rec) {
    json j;
    j["kind"] = "instant";
    j["instant"] = rec.instant;
    json snap = json::object();
    for (auto& [r, v] : rec.snapshot) snap[r] = value_json(v);
    j["snapshot"] = snap;
    j["stopped"] = rec.stopped;
    j["max_value_size"] = rec.max_value_size;
    std::string st;
    for (auto s : rec.statuses) st.push_back(static_cast<char>(s));
    j["statuses"] = st;
    return j;
}

int cmd_check(const std::vector<std::string>& files, const Options& opt) {
    int worst = kOk;
    for (auto& f : files) {
        auto text = read_file(f);
        if (!text) {
            std::cerr << "cannot read " << f << "\n";
            return kIo;
        }
        DiagnosticList d;
        auto tp = load_source(*text, d);
        if (!tp) {
            print_diags(d);
            worst = std::max(worst, static_cast<int>(kDiagnostics));
            continue;
        }
        auto cfa = analyze_read_once(*tp);
        if (opt.format == "records") {
            json j;
            j["kind"] = "check";
            j["file"] = f;
            j["read_once"] = cfa.ok;
            if (!cfa.ok) j["cycle"] = cfa.witness_cycle;
            std::cout << j.dump() << "\n";
        } else if (cfa.ok) {
            std::cout << f << ": ok\n";
        } else {
            std::cout << f << ": read-once fail, cycle:";
            for (auto& g : cfa.witness_cycle) std::cout << " " << g;
            std::cout << "\n";
        }
        if (!cfa.ok) worst = std::max(worst, static_cast<int>(kReadOnce));
    }
    return worst;
}

int analyze_exit(const AnalyzeReport& rep) {
    if (!rep.cfa.ok) return kReadOnce;
    if (!rep.lpo.ok || !rep.qi || !rep.qi_check.ok) return kMissingEvidence;
    return kOk;
}

void analyze_records(const AnalyzeReport& rep) {
    json ro;
    ro["kind"] = "read_once";
    ro["ok"] = rep.cfa.ok;
    if (!rep.cfa.ok) ro["cycle"] = rep.cfa.witness_cycle;
    std::cout << ro.dump() << "\n";
    if (!rep.cfa.ok) return;
    for (auto& p : rep.cps.points) {
        json j;
        j["kind"] = "point";
        j["lhs"] = show_term(p.lhs);
        j["cont"] = p.cont;
        j["flag"] = p.flag;
        std::cout << j.dump() << "\n";
    }
    for (auto& c : rep.cps.constraints) {
        json j;
        j["kind"] = "constraint";
        j["lhs"] = show_term(c.lhs);
        j["rhs"] = show_term(c.rhs);
        j["index"] = c.flag;
        std::cout << j.dump() << "\n";
    }
    json lpo;
    lpo["kind"] = "lpo";
    lpo["ok"] = rep.lpo.ok;
    lpo["linear"] = rep.lpo.linear;
    lpo["source"] = rep.lpo_source;
    if (rep.lpo.ok) lpo["precedence"] = show_precedence(rep.lpo.precedence);
    std::cout << lpo.dump() << "\n";
    json qi;
    qi["kind"] = "qi";
    qi["ok"] = rep.qi.has_value() && rep.qi_check.ok;
    qi["source"] = rep.qi_source;
    if (!rep.qi_errors.empty()) qi["errors"] = rep.qi_errors;
    std::cout << qi.dump() << "\n";
    if (rep.size) {
        json j;
        j["kind"] = "size_bound";
        j["threads"] = rep.size->n;
        j["reads"] = rep.size->m;
        j["c"] = show_rat(rep.size->c);
        j["bound"] = show_rat(rep.size->bound);
        std::cout << j.dump() << "\n";
    }
    if (rep.space) {
        json j;
        j["kind"] = "space_bound";
        j["value_bound"] = show_rat(rep.space->value_bound);
        j["bound"] = show_rat(rep.space->bound);
        j["complexity"] = rep.space->ptime ? "ptime" : "pspace";
        std::cout << j.dump() << "\n";
    }
}

int cmd_analyze(const std::vector<std::string>& files, const Options& opt) {
    int worst = kOk;
    for (auto& f : files) {
        auto text = read_file(f);
        if (!text) {
            std::cerr << "cannot read " << f << "\n";
            return kIo;
        }
        DiagnosticList d;
        auto tp = load_source(*text, d);
        if (!tp) {
            print_diags(d);
            worst = std::max(worst, static_cast<int>(kDiagnostics));
            continue;
        }
        Program side = gather_sidecars(f, opt);
        auto rep = analyze_program(*tp, &side, opt.seed);
        if (opt.format == "records")
            analyze_records(rep);
        else
            std::cout << show_analyze_report(rep);
        worst = std::max(worst, analyze_exit(rep));
    }
    return worst;
}

int cmd_run(const std::string& file, const Options& opt) {
    auto text = read_file(file);
    if (!text) {
        std::cerr << "cannot read " << file << "\n";
        return kIo;
    }
    DiagnosticList d;
    auto tp = load_source(*text, d);
    if (!tp) {
        print_diags(d);
        return kDiagnostics;
    }
    Interpreter interp(*tp, opt.fuel);
    try {
        auto trace = interp.run(opt.instants);
        if (opt.format == "records") {
            for (auto& rec : trace.instants) std::cout << instant_json(rec).dump() << "\n";
            json j;
            j["kind"] = "end";
            j["all_stopped"] = trace.all_stopped;
            std::cout << j.dump() << "\n";
        } else {
            std::cout << show_trace(trace);
        }
    } catch (const FuelExhausted& e) {
        std::cerr << "fuel exhausted in instant " << e.instant << "\n";
        return kFuel;
    }
    return kOk;
}

int cmd_compile(const std::string& file, const Options& opt) {
    auto text = read_file(file);
    if (!text) {
        std::cerr << "cannot read " << file << "\n";
        return kIo;
    }
    DiagnosticList d;
    auto tp = load_source(*text, d);
    if (!tp) {
        print_diags(d);
        return kDiagnostics;
    }
    auto bp = compile_program(*tp);
    std::string out = opt.out_file.empty() ? swap_extension(file, ".sbc") : opt.out_file;
    std::ofstream os(out, std::ios::binary);
    if (!os.good()) {
        std::cerr << "cannot write " << out << "\n";
        return kIo;
    }
    os << show_bytecode(bp);
    if (!os.good()) {
        std::cerr << "cannot write " << out << "\n";
        return kIo;
    }
    std::cout << out << "\n";
    return kOk;
}

int cmd_exec(const std::string& file, const Options& opt) {
    auto text = read_file(file);
    if (!text) {
        std::cerr << "cannot read " << file << "\n";
        return kIo;
    }
    DiagnosticList d;
    auto bp = load_bytecode(*text, d);
    if (!bp) {
        print_diags(d);
        return kDiagnostics;
    }
    Vm vm(std::move(*bp), opt.fuel);
    try {
        auto trace = vm.run(opt.instants);
        auto& peaks = vm.config_peaks();
        if (opt.format == "records") {
            for (size_t i = 0; i < trace.instants.size(); ++i) {
                json j = instant_json(trace.instants[i]);
                if (opt.meter && i < peaks.size()) j["max_config_size"] = peaks[i];
                std::cout << j.dump() << "\n";
            }
            json j;
            j["kind"] = "end";
            j["all_stopped"] = trace.all_stopped;
            std::cout << j.dump() << "\n";
        } else {
            for (size_t i = 0; i < trace.instants.size(); ++i) {
                auto& rec = trace.instants[i];
                for (auto& s : rec.steps) std::cout << show_step_line(rec.instant, s) << "\n";
                std::cout << show_snapshot_line(rec) << "\n";
                if (opt.meter && i < peaks.size())
                    std::cout << "instant " << rec.instant << " | max-config-size " << peaks[i]
                              << "\n";
            }
            if (trace.all_stopped) std::cout << "all threads stopped\n";
        }
    } catch (const FuelExhausted& e) {
        std::cerr << "fuel exhausted in instant " << e.instant << "\n";
        return kFuel;
    } catch (const VmFault& e) {
        std::cerr << e.what() << "\n";
        return kVmFault;
    }
    return kOk;
}

int cmd_verify(const std::string& file, const Options& opt) {
    auto text = read_file(file);
    if (!text) {
        std::cerr << "cannot read " << file << "\n";
        return kIo;
    }
    DiagnosticList d;
    auto bp = load_bytecode(*text, d);
    if (!bp) {
        print_diags(d);
        return kDiagnostics;
    }
    auto fg = analyze_flow(*bp);
    bool records = opt.format == "records";
    if (!fg.tree_ok || !fg.read_wait_ok || !fg.next_ok) {
        for (auto& e : fg.errors) std::cerr << e << "\n";
        return kDiagnostics;
    }
    if (!fg.read_once_ok) {
        if (records) {
            json j;
            j["kind"] = "flow";
            j["read_once"] = false;
            std::cout << j.dump() << "\n";
        } else {
            std::cout << "flow: read-once fail\n";
        }
        for (auto& e : fg.errors) std::cerr << e << "\n";
        return kReadOnce;
    }
    auto rep = shape_analysis(*bp, fg);
    if (!rep.ok) {
        for (auto& e : rep.errors) std::cerr << e << "\n";
        return kDiagnostics;
    }

    if (records) {
        for (auto& seg : rep.shapes)
            for (size_t i = 0; i < seg.rows.size(); ++i) {
                json j;
                j["kind"] = "shape";
                j["segment"] = seg.segment;
                j["pc"] = i + 1;
                j["stack"] = show_shape_row(seg.rows[i]);
                std::cout << j.dump() << "\n";
            }
        for (auto& c : rep.constraints) {
            json j;
            j["kind"] = "constraint";
            j["lhs"] = show_term(c.lhs);
            j["rhs"] = show_term(c.rhs);
            j["index"] = c.flag;
            std::cout << j.dump() << "\n";
        }
    } else {
        std::cout << "flow: ok\n";
        for (auto& seg : rep.shapes) {
            std::cout << "segment " << seg.segment << "\n";
            for (size_t i = 0; i < seg.rows.size(); ++i)
                std::cout << "  " << (i + 1) << ": " << show_shape_row(seg.rows[i]) << "\n";
        }
        for (auto& c : rep.constraints) std::cout << "constraint " << show_constraint(c) << "\n";
    }

    // termination and size checks on the bytecode-level constraints
    Program side = gather_sidecars(file, opt);
    std::set<Name> fns;
    for (auto& [f, _] : rep.symbol_arity) fns.insert(f);
    LpoReport lpo = side.order
                        ? lpo_check(rep.constraints, Precedence::of(side.order->classes), fns)
                        : lpo_search(rep.constraints, fns);

    std::optional<Assignment> qi;
    QiReport qc;
    std::vector<std::string> qi_errors;
    if (!side.qis.empty()) {
        Assignment asg = base_assignment(bp->sym, 1);
        for (auto& q : side.qis) {
            auto it = rep.symbol_arity.find(q.symbol);
            if (it == rep.symbol_arity.end()) {
                qi_errors.push_back("qi names unknown symbol '" + q.symbol + "'");
                continue;
            }
            std::string err;
            auto mp = maxplus_of_qi(q.expr, it->second, err);
            if (!mp) {
                qi_errors.push_back("qi for '" + q.symbol + "': " + err);
                continue;
            }
            asg.q[q.symbol] = std::move(*mp);
        }
        for (auto& [f, n] : rep.symbol_arity)
            if (!asg.q.count(f)) qi_errors.push_back("no qi for '" + f + "'");
        if (qi_errors.empty()) {
            for (auto& e : validate_assignment(asg, bp->sym)) qi_errors.push_back(e);
        }
        if (qi_errors.empty()) {
            qc = check_assignment(asg, rep.constraints, opt.seed);
            qi = std::move(asg);
        }
    } else {
        auto syn = synthesize(rep.constraints, rep.symbol_arity, bp->sym, 200000, opt.seed);
        if (syn.assignment) {
            qc = check_assignment(*syn.assignment, rep.constraints, opt.seed);
            qi = std::move(syn.assignment);
        } else {
            qi_errors.push_back("quasi-interpretation synthesis failed: " + syn.note);
        }
    }

    bool qi_ok = qi.has_value() && qc.ok;
    if (records) {
        json j;
        j["kind"] = "verdict";
        j["flow"] = true;
        j["shape"] = true;
        j["lpo"] = lpo.ok;
        j["linear"] = lpo.linear;
        j["qi"] = qi_ok;
        j["ok"] = lpo.ok && qi_ok;
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "lpo: " << (lpo.ok ? "ok" : "fail") << "\n";
        if (lpo.ok) std::cout << "linear lpo: " << (lpo.linear ? "yes" : "no") << "\n";
        std::cout << "qi: " << (qi_ok ? "ok" : "fail") << "\n";
        for (auto& e : qi_errors) std::cout << "qi error: " << e << "\n";
        for (auto& cc : qc.checks)
            if (cc.v != Verdict::Holds)
                std::cout << "qi " << show_verdict(cc.v) << ": " << show_constraint(cc.c) << "\n";
        std::cout << "verdict: " << (lpo.ok && qi_ok ? "pass" : "fail") << "\n";
    }
    return lpo.ok && qi_ok ? kOk : kMissingEvidence;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"resource control toolchain for synchronous cooperative threads"};
    app.require_subcommand(1);
    Options opt;
    std::vector<std::string> files;
    std::string one_file;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--format", opt.format, "text or records")
            ->check(CLI::IsMember({"text", "records"}));
        c->add_option("--seed", opt.seed, "seed for numeric refutation search");
        c->add_option("--prec", opt.prec_file, "precedence sidecar path");
        c->add_option("--qi", opt.qi_file, "quasi-interpretation sidecar path");
    };

    auto* check = app.add_subcommand("check", "parse, typecheck, read-once");
    check->add_option("files", files)->required();
    add_common(check);

    auto* analyze = app.add_subcommand("analyze", "control points, lpo, qi, bounds");
    analyze->add_option("files", files)->required();
    add_common(analyze);

    auto* run = app.add_subcommand("run", "interpret a source system");
    run->add_option("file", one_file)->required();
    run->add_option("--instants", opt.instants, "instants to run");
    run->add_option("--fuel", opt.fuel, "steps per instant");
    add_common(run);

    auto* compile = app.add_subcommand("compile", "compile a source system to bytecode");
    compile->add_option("file", one_file)->required();
    compile->add_option("-o,--out", opt.out_file, "output path (default: <input>.sbc)");
    add_common(compile);

    auto* exec = app.add_subcommand("exec", "execute a bytecode file");
    exec->add_option("file", one_file)->required();
    exec->add_option("--instants", opt.instants, "instants to run");
    exec->add_option("--fuel", opt.fuel, "instructions per instant");
    exec->add_flag("--meter", opt.meter, "print per-instant max configuration size");
    add_common(exec);

    auto* verify = app.add_subcommand("verify", "flow, shape and resource checks on bytecode");
    verify->add_option("file", one_file)->required();
    add_common(verify);

    CLI11_PARSE(app, argc, argv);

    if (check->parsed()) return cmd_check(files, opt);
    if (analyze->parsed()) return cmd_analyze(files, opt);
    if (run->parsed()) return cmd_run(one_file, opt);
    if (compile->parsed()) return cmd_compile(one_file, opt);
    if (exec->parsed()) return cmd_exec(one_file, opt);
    if (verify->parsed()) return cmd_verify(one_file, opt);
    return kOk;
}
