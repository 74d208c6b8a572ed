#pragma once

#include <sstream>
#include <string>

#include "ast.hpp"

// Deterministic source printer. Output parses back to the same program
// (read labels are always printed explicitly once assigned).

namespace synchrone {

inline std::string show_value(const Value& v) {
    if (v.args.empty()) return v.head;
    std::string out = v.head + "(";
    for (size_t i = 0; i < v.args.size(); ++i) {
        if (i) out += ", ";
        out += show_value(v.args[i]);
    }
    return out + ")";
}

inline std::string show_pattern(const Pattern& p) {
    if (p.args.empty()) return p.name;
    std::string out = p.name + "(";
    for (size_t i = 0; i < p.args.size(); ++i) {
        if (i) out += ", ";
        out += show_pattern(p.args[i]);
    }
    return out + ")";
}

inline std::string show_expr(const Expr& e) {
    if (e.args.empty() && e.kind != Expr::Kind::Call) return e.name;
    if (e.args.empty()) return e.name + "()";
    std::string out = e.name + "(";
    for (size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += show_expr(e.args[i]);
    }
    return out + ")";
}

inline std::string show_expr_body(const ExprBody& b) {
    if (b.kind == ExprBody::Kind::Expr) return show_expr(b.expr);
    return "match " + b.scrutinee + " with " + show_pattern(b.pattern) + " then " +
           show_expr_body(*b.then_body) + " else " + show_expr_body(*b.else_body);
}

inline std::string show_call(const Name& f, const std::vector<Expr>& args) {
    std::string out = f + "(";
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += show_expr(args[i]);
    }
    return out + ")";
}

inline std::string show_behaviour(const Behaviour& b) {
    switch (b.kind) {
        case Behaviour::Kind::Stop:
            return "stop";
        case Behaviour::Kind::TailCall:
            return show_call(b.callee, b.args);
        case Behaviour::Kind::Yield:
            return "yield . " + show_behaviour(*b.cont);
        case Behaviour::Kind::Next:
            return "next . " + show_call(b.callee, b.args);
        case Behaviour::Kind::Assign:
            return b.target + " := " + show_expr(b.expr) + " . " + show_behaviour(*b.cont);
        case Behaviour::Kind::Read: {
            std::string out = "read";
            if (!b.label.empty()) out += "<" + b.label + ">";
            out += " " + b.target + " with ";
            for (auto& br : b.branches)
                out += show_pattern(br.pattern) + " => (" + show_behaviour(*br.body) + ") | ";
            out += "[_] => " + show_call(b.default_callee, b.default_args);
            return out;
        }
        case Behaviour::Kind::Match:
            return "match " + b.scrutinee + " with " + show_pattern(b.pattern) + " then (" +
                   show_behaviour(*b.then_body) + ") else (" + show_behaviour(*b.else_body) + ")";
    }
    return "";
}

inline std::string show_type_decl(const TypeDecl& t) {
    std::ostringstream out;
    if (t.kind == TypeDecl::Kind::Data) {
        out << "type " << t.name << " = ";
        for (size_t i = 0; i < t.ctors.size(); ++i) {
            if (i) out << " || ";
            auto& c = t.ctors[i];
            out << c.name;
            if (!c.arg_types.empty()) {
                out << " of (";
                for (size_t j = 0; j < c.arg_types.size(); ++j) {
                    if (j) out << ", ";
                    out << c.arg_types[j];
                }
                out << ")";
            }
        }
    } else {
        out << "reftype " << t.name << " = ref " << t.referent;
        for (size_t i = 0; i < t.registers.size(); ++i) {
            out << (i ? " || " : " with ") << t.registers[i].name << " = "
                << show_expr(t.registers[i].default_expr);
        }
    }
    return out.str();
}

inline std::string show_program(const Program& p) {
    std::ostringstream out;
    for (auto& t : p.types) out << show_type_decl(t) << "\n";
    for (auto& f : p.functions) {
        if (f.kind == FunctionDef::Kind::Expression) {
            out << "def " << f.name << "(";
            for (size_t i = 0; i < f.params.size(); ++i) {
                if (i) out << ", ";
                out << f.params[i].name;
            }
            out << ") : " << f.return_type << " = " << show_expr_body(f.body) << "\n";
        } else {
            out << "beh " << f.name << "(";
            for (size_t i = 0; i < f.params.size(); ++i) {
                if (i) out << ", ";
                out << f.params[i].name;
            }
            out << ") = " << show_behaviour(*f.beh) << "\n";
        }
    }
    if (p.order) {
        out << "order ";
        for (size_t i = 0; i < p.order->classes.size(); ++i) {
            if (i) out << " > ";
            for (size_t j = 0; j < p.order->classes[i].size(); ++j) {
                if (j) out << " = ";
                out << p.order->classes[i][j];
            }
        }
        out << "\n";
    }
    out << "system = ";
    for (size_t i = 0; i < p.system.size(); ++i) {
        if (i) out << ", ";
        out << show_call(p.system[i].callee, p.system[i].args);
    }
    out << "\n";
    return out.str();
}

}  // namespace synchrone
