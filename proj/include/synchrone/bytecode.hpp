#pragma once

// Bytecode container and its text serialization. A program is the type
// declarations, one code segment per function, and the system line. Every
// segment ends in return, stop, or tcall, and jump targets stay in range.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "synchrone/ast.hpp"
#include "synchrone/diagnostics.hpp"
#include "synchrone/lexer.hpp"
#include "synchrone/parser.hpp"
#include "synchrone/pretty.hpp"

namespace synchrone {

enum class Op { Load, Branch, Build, Call, Tcall, Return, Read, Write, Stop, Yield, Next, Wait };

// Read/Write address a register either by name (sym) or by stack index (a);
// an empty sym means indexed.
struct Instr {
    Op op = Op::Stop;
    Name sym;
    long long a = 0;  // load k | branch j | build n | call n | read k | write k | wait j

    bool operator==(const Instr& o) const { return op == o.op && sym == o.sym && a == o.a; }
};

inline std::string show_instr(const Instr& I) {
    switch (I.op) {
        case Op::Load: return "load " + std::to_string(I.a);
        case Op::Branch: return "branch " + I.sym + " " + std::to_string(I.a);
        case Op::Build: return "build " + I.sym + " " + std::to_string(I.a);
        case Op::Call: return "call " + I.sym + " " + std::to_string(I.a);
        case Op::Tcall: return "tcall " + I.sym + " " + std::to_string(I.a);
        case Op::Return: return "return";
        case Op::Read: return "read " + (I.sym.empty() ? std::to_string(I.a) : I.sym);
        case Op::Write: return "write " + (I.sym.empty() ? std::to_string(I.a) : I.sym);
        case Op::Stop: return "stop";
        case Op::Yield: return "yield";
        case Op::Next: return "next";
        case Op::Wait: return "wait " + std::to_string(I.a);
    }
    return "";
}

struct Segment {
    Name name;
    std::vector<Name> param_types;
    Name result;  // type name, or "beh"
    std::vector<Instr> code;

    size_t arity() const { return param_types.size(); }
    bool is_behaviour() const { return result == "beh"; }
};

struct BytecodeProgram {
    std::vector<TypeDecl> types;
    std::vector<Segment> segments;
    std::vector<SystemThread> system;
    SymbolTable sym;  // ctors, registers and their defaults, segment signatures

    const Segment* find(const Name& f) const {
        for (auto& s : segments)
            if (s.name == f) return &s;
        return nullptr;
    }
};

inline std::string show_segment(const Segment& s) {
    std::ostringstream out;
    out << "func " << s.name << "/" << s.arity() << " : (";
    for (size_t i = 0; i < s.param_types.size(); ++i) {
        if (i) out << ", ";
        out << s.param_types[i];
    }
    out << ") -> " << s.result << "\n";
    for (size_t i = 0; i < s.code.size(); ++i)
        out << "  " << (i + 1) << ": " << show_instr(s.code[i]) << "\n";
    out << "end\n";
    return out.str();
}

inline std::string show_bytecode(const BytecodeProgram& bp) {
    std::ostringstream out;
    for (auto& t : bp.types) out << show_type_decl(t) << "\n";
    for (auto& s : bp.segments) out << "\n" << show_segment(s);
    if (!bp.system.empty()) {
        out << "\nsystem = ";
        for (size_t i = 0; i < bp.system.size(); ++i) {
            if (i) out << ", ";
            out << show_call(bp.system[i].callee, bp.system[i].args);
        }
        out << "\n";
    }
    return out.str();
}

// Symbol tables for a loaded bytecode file: constructors, registers with
// evaluated defaults, and one function entry per segment.
inline bool build_bytecode_symbols(BytecodeProgram& bp, DiagnosticList& diags) {
    SymbolTable& sym = bp.sym;
    sym = SymbolTable{};
    for (auto& t : bp.types) {
        if (t.kind == TypeDecl::Kind::Data) {
            for (auto& c : t.ctors) {
                if (sym.ctors.count(c.name)) {
                    diags.error(c.pos, "bytecode", "duplicate constructor '" + c.name + "'");
                    return false;
                }
                sym.ctors[c.name] = {c.arg_types, t.name, false};
            }
        } else {
            sym.referent_of[t.name] = t.referent;
            for (auto& r : t.registers) {
                if (sym.ctors.count(r.name)) {
                    diags.error(r.pos, "bytecode", "duplicate register '" + r.name + "'");
                    return false;
                }
                sym.ctors[r.name] = {{}, t.name, true};
                sym.registers[r.name] = {t.name, t.referent, Value{},
                                         static_cast<int>(sym.register_order.size())};
                sym.register_order.push_back(r.name);
            }
        }
    }
    for (auto& t : bp.types) {
        if (t.kind != TypeDecl::Kind::Ref) continue;
        for (auto& r : t.registers) {
            auto v = closed_value(r.default_expr, sym);
            if (!v) {
                diags.error(r.pos, "bytecode", "register default for '" + r.name +
                                                   "' is not a closed value");
                return false;
            }
            sym.registers[r.name].default_value = std::move(*v);
        }
    }
    int idx = 0;
    for (auto& s : bp.segments) {
        if (sym.functions.count(s.name)) {
            diags.error({}, "bytecode", "duplicate segment '" + s.name + "'");
            return false;
        }
        sym.functions[s.name] = {s.is_behaviour() ? FunctionDef::Kind::Behaviour
                                                  : FunctionDef::Kind::Expression,
                                 s.param_types, s.result, idx++};
    }
    return true;
}

// Structural checks shared by the loader and the verifier front door: final
// instruction kind, jump ranges, operand symbols, arities.
inline bool check_bytecode_wellformed(const BytecodeProgram& bp, DiagnosticList& diags) {
    bool ok = true;
    auto err = [&](const Name& f, size_t i, const std::string& msg) {
        diags.error({}, "bytecode", f + "[" + std::to_string(i + 1) + "]: " + msg);
        ok = false;
    };
    for (auto& s : bp.segments) {
        if (s.code.empty()) {
            diags.error({}, "bytecode", "segment '" + s.name + "' is empty");
            ok = false;
            continue;
        }
        Op last = s.code.back().op;
        if (last != Op::Return && last != Op::Stop && last != Op::Tcall)
            err(s.name, s.code.size() - 1, "segment must end in return, stop, or tcall");
        for (size_t i = 0; i < s.code.size(); ++i) {
            const Instr& I = s.code[i];
            switch (I.op) {
                case Op::Load:
                    if (I.a < 1) err(s.name, i, "load index must be positive");
                    break;
                case Op::Branch:
                case Op::Build: {
                    auto it = bp.sym.ctors.find(I.sym);
                    if (it == bp.sym.ctors.end() ||
                        (it->second.is_register && I.op == Op::Branch))
                        err(s.name, i, "unknown constructor '" + I.sym + "'");
                    else if (I.op == Op::Build &&
                             it->second.arg_types.size() != static_cast<size_t>(I.a))
                        err(s.name, i, "build arity mismatch for '" + I.sym + "'");
                    if (I.op == Op::Branch && (I.a < 1 || I.a > static_cast<long long>(s.code.size())))
                        err(s.name, i, "branch target out of range");
                    break;
                }
                case Op::Call:
                case Op::Tcall: {
                    auto it = bp.sym.functions.find(I.sym);
                    if (it == bp.sym.functions.end())
                        err(s.name, i, "unknown function '" + I.sym + "'");
                    else if (it->second.param_types.size() != static_cast<size_t>(I.a))
                        err(s.name, i, "call arity mismatch for '" + I.sym + "'");
                    else if (I.op == Op::Tcall && !s.is_behaviour())
                        err(s.name, i, "tcall outside a behaviour segment");
                    break;
                }
                case Op::Read:
                case Op::Write:
                    if (!I.sym.empty() && !bp.sym.registers.count(I.sym))
                        err(s.name, i, "unknown register '" + I.sym + "'");
                    if (I.sym.empty() && I.a < 1)
                        err(s.name, i, "register stack index must be positive");
                    break;
                case Op::Wait:
                    if (I.a < 1 || I.a > static_cast<long long>(s.code.size()))
                        err(s.name, i, "wait target out of range");
                    else if (s.code[I.a - 1].op != Op::Read)
                        err(s.name, i, "wait must target a read instruction");
                    break;
                default: break;
            }
        }
    }
    for (auto& t : bp.system) {
        auto it = bp.sym.functions.find(t.callee);
        if (it == bp.sym.functions.end()) {
            diags.error(t.pos, "bytecode", "unknown system function '" + t.callee + "'");
            ok = false;
        } else if (it->second.param_types.size() != t.args.size()) {
            diags.error(t.pos, "bytecode", "system arity mismatch for '" + t.callee + "'");
            ok = false;
        }
        for (auto& a : t.args)
            if (!closed_value(a, bp.sym)) {
                diags.error(a.pos, "bytecode", "system argument is not a closed value");
                ok = false;
            }
    }
    return ok;
}

// Text loader. Shares the source lexer; type, reftype, and system lines use
// the source grammar.
class BytecodeParser {
  public:
    BytecodeParser(std::string text, DiagnosticList& diags)
        : toks_(Lexer(std::move(text), diags).run()), diags_(diags) {}

    std::optional<BytecodeProgram> parse() {
        BytecodeProgram bp;
        while (peek().kind != Token::Kind::Eof) {
            if (is_word("type") || is_word("reftype") || is_word("system")) {
                // delegate a single declaration to the source parser
                size_t before = diags_.items.size();
                Parser one(slice_from(cur_), diags_);
                Program frag;
                if (is_word("type"))
                    one.parse_type_public(frag);
                else if (is_word("reftype"))
                    one.parse_reftype_public(frag);
                else
                    one.parse_system_public(frag);
                if (diags_.items.size() > before) return std::nullopt;
                advance_to(one.cursor());
                for (auto& t : frag.types) bp.types.push_back(std::move(t));
                for (auto& s : frag.system) bp.system.push_back(std::move(s));
            } else if (is_word("func")) {
                auto seg = parse_segment();
                if (!seg) return std::nullopt;
                bp.segments.push_back(std::move(*seg));
            } else {
                diags_.error(peek().pos, "bytecode",
                             "expected type, reftype, func, or system");
                return std::nullopt;
            }
        }
        if (!build_bytecode_symbols(bp, diags_)) return std::nullopt;
        if (!check_bytecode_wellformed(bp, diags_)) return std::nullopt;
        return bp;
    }

  private:
    const Token& peek(size_t k = 0) const {
        size_t i = cur_ + k;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    const Token& next() { return toks_[cur_ < toks_.size() - 1 ? cur_++ : cur_]; }
    bool is_word(const char* w) const {
        return peek().kind == Token::Kind::Ident && peek().text == w;
    }
    bool accept(Token::Kind k) {
        if (peek().kind != k) return false;
        next();
        return true;
    }
    bool expect(Token::Kind k, const char* what) {
        if (accept(k)) return true;
        diags_.error(peek().pos, "bytecode", std::string("expected ") + what);
        return false;
    }
    std::vector<Token> slice_from(size_t i) const {
        return std::vector<Token>(toks_.begin() + static_cast<long>(i), toks_.end());
    }
    void advance_to(size_t consumed) { cur_ += consumed; }

    std::optional<Segment> parse_segment() {
        Segment s;
        next();  // func
        if (peek().kind != Token::Kind::Ident) {
            diags_.error(peek().pos, "bytecode", "expected function name");
            return std::nullopt;
        }
        s.name = next().text;
        if (!expect(Token::Kind::Slash, "'/'")) return std::nullopt;
        if (peek().kind != Token::Kind::Number) {
            diags_.error(peek().pos, "bytecode", "expected arity");
            return std::nullopt;
        }
        long long arity = next().number;
        if (!expect(Token::Kind::Colon, "':'")) return std::nullopt;
        if (!expect(Token::Kind::LParen, "'('")) return std::nullopt;
        if (!accept(Token::Kind::RParen)) {
            do {
                if (peek().kind != Token::Kind::Ident) {
                    diags_.error(peek().pos, "bytecode", "expected parameter type");
                    return std::nullopt;
                }
                s.param_types.push_back(next().text);
            } while (accept(Token::Kind::Comma));
            if (!expect(Token::Kind::RParen, "')'")) return std::nullopt;
        }
        if (!expect(Token::Kind::Minus, "'->'")) return std::nullopt;
        if (!expect(Token::Kind::Gt, "'->'")) return std::nullopt;
        if (peek().kind != Token::Kind::Ident) {
            diags_.error(peek().pos, "bytecode", "expected result type");
            return std::nullopt;
        }
        s.result = next().text;
        if (static_cast<size_t>(arity) != s.param_types.size()) {
            diags_.error(peek().pos, "bytecode", "declared arity disagrees with types");
            return std::nullopt;
        }
        while (!is_word("end")) {
            if (peek().kind == Token::Kind::Eof) {
                diags_.error(peek().pos, "bytecode", "unterminated segment");
                return std::nullopt;
            }
            if (peek().kind != Token::Kind::Number) {
                diags_.error(peek().pos, "bytecode", "expected instruction index");
                return std::nullopt;
            }
            long long idx = next().number;
            if (idx != static_cast<long long>(s.code.size()) + 1) {
                diags_.error(peek().pos, "bytecode", "instruction indices must count up from 1");
                return std::nullopt;
            }
            if (!expect(Token::Kind::Colon, "':'")) return std::nullopt;
            auto ins = parse_instr();
            if (!ins) return std::nullopt;
            s.code.push_back(*ins);
        }
        next();  // end
        return s;
    }

    std::optional<Instr> parse_instr() {
        if (peek().kind != Token::Kind::Ident) {
            diags_.error(peek().pos, "bytecode", "expected mnemonic");
            return std::nullopt;
        }
        std::string m = next().text;
        Instr I;
        auto want_num = [&](long long& out) {
            if (peek().kind != Token::Kind::Number) {
                diags_.error(peek().pos, "bytecode", "expected numeric operand");
                return false;
            }
            out = next().number;
            return true;
        };
        auto want_sym = [&](Name& out) {
            if (peek().kind != Token::Kind::Ident) {
                diags_.error(peek().pos, "bytecode", "expected symbol operand");
                return false;
            }
            out = next().text;
            return true;
        };
        if (m == "load") {
            I.op = Op::Load;
            if (!want_num(I.a)) return std::nullopt;
        } else if (m == "branch") {
            I.op = Op::Branch;
            if (!want_sym(I.sym) || !want_num(I.a)) return std::nullopt;
        } else if (m == "build") {
            I.op = Op::Build;
            if (!want_sym(I.sym) || !want_num(I.a)) return std::nullopt;
        } else if (m == "call") {
            I.op = Op::Call;
            if (!want_sym(I.sym) || !want_num(I.a)) return std::nullopt;
        } else if (m == "tcall") {
            I.op = Op::Tcall;
            if (!want_sym(I.sym) || !want_num(I.a)) return std::nullopt;
        } else if (m == "return") {
            I.op = Op::Return;
        } else if (m == "read" || m == "write") {
            I.op = m == "read" ? Op::Read : Op::Write;
            if (peek().kind == Token::Kind::Number) {
                I.a = next().number;
            } else if (!want_sym(I.sym)) {
                return std::nullopt;
            }
        } else if (m == "stop") {
            I.op = Op::Stop;
        } else if (m == "yield") {
            I.op = Op::Yield;
        } else if (m == "next") {
            I.op = Op::Next;
        } else if (m == "wait") {
            I.op = Op::Wait;
            if (!want_num(I.a)) return std::nullopt;
        } else {
            diags_.error(peek().pos, "bytecode", "unknown mnemonic '" + m + "'");
            return std::nullopt;
        }
        return I;
    }

    std::vector<Token> toks_;
    DiagnosticList& diags_;
    size_t cur_ = 0;
};

inline std::optional<BytecodeProgram> load_bytecode(std::string text, DiagnosticList& diags) {
    return BytecodeParser(std::move(text), diags).parse();
}

}  // namespace synchrone
