#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "ast.hpp"
#include "diagnostics.hpp"

namespace synchrone {

struct Token {
    enum class Kind {
        Ident, Number,
        LParen, RParen, Comma, Dot, Colon, Assign,       // ( ) , . : :=
        Eq, BarBar, Bar, Arrow, DefaultPat,              // = || | => [_]
        Lt, Gt, Plus, Star, Slash, Minus,
        Eof
    } kind;
    std::string text;
    long long number = 0;
    Pos pos;
};

// Identifiers admit trailing primes (x', y'') like the notation they mirror.
class Lexer {
  public:
    Lexer(std::string src, DiagnosticList& diags) : src_(std::move(src)), diags_(diags) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws();
            Pos p{line_, col_};
            if (eof()) {
                out.push_back({Token::Kind::Eof, "", 0, p});
                break;
            }
            char c = peek();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string id;
                while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                                  peek() == '_' || peek() == '\''))
                    id.push_back(get());
                if (!eof() && peek() == '^') id.push_back(get());  // extended symbols: f^
                out.push_back({Token::Kind::Ident, id, 0, p});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                long long n = 0;
                std::string text;
                while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
                    char d = get();
                    text.push_back(d);
                    n = n * 10 + (d - '0');
                }
                out.push_back({Token::Kind::Number, text, n, p});
                continue;
            }
            get();
            switch (c) {
                case '(': out.push_back({Token::Kind::LParen, "(", 0, p}); break;
                case ')': out.push_back({Token::Kind::RParen, ")", 0, p}); break;
                case ',': out.push_back({Token::Kind::Comma, ",", 0, p}); break;
                case '.': out.push_back({Token::Kind::Dot, ".", 0, p}); break;
                case '+': out.push_back({Token::Kind::Plus, "+", 0, p}); break;
                case '-': out.push_back({Token::Kind::Minus, "-", 0, p}); break;
                case '*': out.push_back({Token::Kind::Star, "*", 0, p}); break;
                case '/': out.push_back({Token::Kind::Slash, "/", 0, p}); break;
                case '<': out.push_back({Token::Kind::Lt, "<", 0, p}); break;
                case '>': out.push_back({Token::Kind::Gt, ">", 0, p}); break;
                case ':':
                    if (!eof() && peek() == '=') {
                        get();
                        out.push_back({Token::Kind::Assign, ":=", 0, p});
                    } else {
                        out.push_back({Token::Kind::Colon, ":", 0, p});
                    }
                    break;
                case '=':
                    if (!eof() && peek() == '>') {
                        get();
                        out.push_back({Token::Kind::Arrow, "=>", 0, p});
                    } else {
                        out.push_back({Token::Kind::Eq, "=", 0, p});
                    }
                    break;
                case '|':
                    if (!eof() && peek() == '|') {
                        get();
                        out.push_back({Token::Kind::BarBar, "||", 0, p});
                    } else {
                        out.push_back({Token::Kind::Bar, "|", 0, p});
                    }
                    break;
                case '[':
                    if (!eof() && peek() == '_') {
                        get();
                        if (!eof() && peek() == ']') {
                            get();
                            out.push_back({Token::Kind::DefaultPat, "[_]", 0, p});
                            break;
                        }
                    }
                    diags_.error(p, "lex", "expected [_]");
                    break;
                default: {
                    diags_.error(p, "lex", std::string("unexpected character '") + c + "'");
                    break;
                }
            }
        }
        return out;
    }

  private:
    bool eof() const { return i_ >= src_.size(); }
    char peek() const { return src_[i_]; }
    char get() {
        char c = src_[i_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void skip_ws() {
        while (!eof()) {
            char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') get();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                get();
            } else {
                break;
            }
        }
    }

    std::string src_;
    DiagnosticList& diags_;
    size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace synchrone
