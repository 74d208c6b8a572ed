#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "ast.hpp"

namespace synchrone {

struct Diagnostic {
    enum class Severity { Error, Warning } severity = Severity::Error;
    std::string file;
    Pos pos;
    std::string code;     // stable short code, e.g. "parse", "type", "scope"
    std::string message;
};

inline std::string render(const Diagnostic& d) {
    std::ostringstream os;
    os << (d.file.empty() ? "<input>" : d.file) << ":" << d.pos.line << ":" << d.pos.col << ": "
       << (d.severity == Diagnostic::Severity::Error ? "error" : "warning") << ": " << d.message
       << " [" << d.code << "]";
    return os.str();
}

struct DiagnosticList {
    std::vector<Diagnostic> items;
    std::string file;

    void error(Pos p, std::string code, std::string msg) {
        items.push_back({Diagnostic::Severity::Error, file, p, std::move(code), std::move(msg)});
    }
    void warning(Pos p, std::string code, std::string msg) {
        items.push_back({Diagnostic::Severity::Warning, file, p, std::move(code), std::move(msg)});
    }
    bool has_errors() const {
        for (const auto& d : items)
            if (d.severity == Diagnostic::Severity::Error) return true;
        return false;
    }
};

}  // namespace synchrone
