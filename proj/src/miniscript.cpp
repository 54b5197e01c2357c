#include "vcache/miniscript.hpp"

#include <optional>
#include <sstream>

#include "vcache/digest.hpp"
#include "vcache/error.hpp"

namespace vcache {

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class TokKind { KwPrint, KwIf, KwElse, KwFor, KwIn, Ident, Str, EqEq, Semi, LBrace, RBrace, End };

struct Token {
    TokKind kind;
    std::string text;
    int line, col;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    [[noreturn]] void err(const std::string& msg, int line, int col) {
        std::ostringstream ss;
        ss << msg << " at " << line << ":" << col;
        fail(ErrorKind::SyntaxError, ss.str());
    }

    char cur() const { return src_[pos_]; }
    bool done() const { return pos_ >= src_.size(); }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void advance() {
        while (!done() && (cur() == ' ' || cur() == '\t' || cur() == '\r' || cur() == '\n')) bump();
        int line = line_, col = col_;
        if (done()) {
            tok_ = Token{TokKind::End, "", line, col};
            return;
        }
        char c = cur();
        if (c == ';') {
            bump();
            tok_ = Token{TokKind::Semi, ";", line, col};
            return;
        }
        if (c == '{') {
            bump();
            tok_ = Token{TokKind::LBrace, "{", line, col};
            return;
        }
        if (c == '}') {
            bump();
            tok_ = Token{TokKind::RBrace, "}", line, col};
            return;
        }
        if (c == '=') {
            bump();
            if (done() || cur() != '=') err("expected '=='", line, col);
            bump();
            tok_ = Token{TokKind::EqEq, "==", line, col};
            return;
        }
        if (c == '"') {
            bump();
            std::string text;
            for (;;) {
                if (done()) err("unterminated string literal", line, col);
                char d = cur();
                if (d == '"') {
                    bump();
                    break;
                }
                if (d == '\\') {
                    bump();
                    if (done()) err("unterminated string escape", line, col);
                    char e = cur();
                    if (e == '"' || e == '\\') {
                        text.push_back(e);
                        bump();
                    } else {
                        err("unknown string escape", line_, col_);
                    }
                } else {
                    text.push_back(d);
                    bump();
                }
            }
            tok_ = Token{TokKind::Str, std::move(text), line, col};
            return;
        }
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
            std::string name;
            while (!done() && ((cur() >= 'a' && cur() <= 'z') || (cur() >= 'A' && cur() <= 'Z') ||
                               (cur() >= '0' && cur() <= '9') || cur() == '_')) {
                name.push_back(cur());
                bump();
            }
            TokKind kind = TokKind::Ident;
            if (name == "print") kind = TokKind::KwPrint;
            else if (name == "if") kind = TokKind::KwIf;
            else if (name == "else") kind = TokKind::KwElse;
            else if (name == "for") kind = TokKind::KwFor;
            else if (name == "in") kind = TokKind::KwIn;
            tok_ = Token{kind, std::move(name), line, col};
            return;
        }
        err("unexpected character", line, col);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_{TokKind::End, "", 1, 1};
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    Program run() {
        Program p;
        p.stmts = stmt_list(TokKind::End);
        p.site_count = next_site_;
        return p;
    }

private:
    [[noreturn]] void err(const std::string& msg, const Token& t) {
        std::ostringstream ss;
        ss << msg << " at " << t.line << ":" << t.col;
        fail(ErrorKind::SyntaxError, ss.str());
    }

    Token expect(TokKind kind, const char* what) {
        Token t = lex_.take();
        if (t.kind != kind) err(std::string("expected ") + what, t);
        return t;
    }

    std::vector<Stmt> stmt_list(TokKind terminator) {
        std::vector<Stmt> out;
        while (lex_.peek().kind != terminator) {
            if (lex_.peek().kind == TokKind::End) err("unexpected end of input", lex_.peek());
            out.push_back(stmt());
        }
        return out;
    }

    std::vector<Stmt> block() {
        expect(TokKind::LBrace, "'{'");
        std::vector<Stmt> body = stmt_list(TokKind::RBrace);
        expect(TokKind::RBrace, "'}'");
        return body;
    }

    Stmt stmt() {
        Token t = lex_.take();
        switch (t.kind) {
            case TokKind::KwPrint: {
                Token arg = lex_.take();
                Stmt s;
                s.kind = Stmt::Kind::Print;
                if (arg.kind == TokKind::Str) {
                    s.print_expr = StrExpr{false, arg.text};
                } else if (arg.kind == TokKind::Ident) {
                    s.print_expr = StrExpr{true, arg.text};
                } else {
                    err("expected string or identifier after print", arg);
                }
                expect(TokKind::Semi, "';'");
                return s;
            }
            case TokKind::KwIf: {
                Stmt s;
                s.kind = Stmt::Kind::If;
                s.site = next_site_++;  // pre-order: parent before arms
                s.cond_var = expect(TokKind::Ident, "identifier").text;
                expect(TokKind::EqEq, "'=='");
                s.cond_lit = expect(TokKind::Str, "string literal").text;
                s.then_arm = block();
                if (lex_.peek().kind == TokKind::KwElse) {
                    lex_.take();
                    s.else_arm = block();
                }
                return s;
            }
            case TokKind::KwFor: {
                Stmt s;
                s.kind = Stmt::Kind::For;
                s.site = next_site_++;
                s.loop_var = expect(TokKind::Ident, "identifier").text;
                expect(TokKind::KwIn, "'in'");
                s.list_var = expect(TokKind::Ident, "identifier").text;
                s.body = block();
                return s;
            }
            default:
                err("expected a statement", t);
        }
    }

    Lexer lex_;
    int next_site_ = 0;
};

void collect_sites(const std::vector<Stmt>& stmts, bool inside_loop, std::vector<SiteInfo>& out) {
    for (const Stmt& s : stmts) {
        if (s.kind == Stmt::Kind::If) {
            out.push_back(SiteInfo{s.site, Stmt::Kind::If, inside_loop});
            collect_sites(s.then_arm, inside_loop, out);
            collect_sites(s.else_arm, inside_loop, out);
        } else if (s.kind == Stmt::Kind::For) {
            out.push_back(SiteInfo{s.site, Stmt::Kind::For, inside_loop});
            collect_sites(s.body, true, out);
        }
    }
}

}  // namespace

Program parse_script(std::string_view source) {
    return Parser(source).run();
}

std::vector<SiteInfo> site_table(const Program& program) {
    std::vector<SiteInfo> out;
    collect_sites(program.stmts, false, out);
    std::vector<SiteInfo> by_id(out.size());
    for (const SiteInfo& info : out) by_id.at(static_cast<std::size_t>(info.site)) = info;
    return by_id;
}

// ---------------------------------------------------------------------------
// Pretty printer

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void print_stmts(const std::vector<Stmt>& stmts, int indent, std::string& out) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const Stmt& s : stmts) {
        switch (s.kind) {
            case Stmt::Kind::Print:
                out += pad + "print " + (s.print_expr.is_var ? s.print_expr.text : quote(s.print_expr.text)) + ";\n";
                break;
            case Stmt::Kind::If:
                out += pad + "if " + s.cond_var + " == " + quote(s.cond_lit) + " {\n";
                print_stmts(s.then_arm, indent + 1, out);
                if (s.else_arm.empty()) {
                    out += pad + "}\n";
                } else {
                    out += pad + "} else {\n";
                    print_stmts(s.else_arm, indent + 1, out);
                    out += pad + "}\n";
                }
                break;
            case Stmt::Kind::For:
                out += pad + "for " + s.loop_var + " in " + s.list_var + " {\n";
                print_stmts(s.body, indent + 1, out);
                out += pad + "}\n";
                break;
        }
    }
}

}  // namespace

std::string to_source(const Program& program) {
    std::string out;
    print_stmts(program.stmts, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Interpreter

const Value& env_lookup(const Env& env, const std::string& name) {
    auto it = env.find(name);
    if (it == env.end()) fail(ErrorKind::UndefinedVar, "variable '" + name + "' is not bound");
    return it->second;
}

const std::string& env_scalar(const Env& env, const std::string& name) {
    const Value& v = env_lookup(env, name);
    if (v.is_list) fail(ErrorKind::TypeError, "variable '" + name + "' is a list, expected a string");
    return v.str;
}

const std::vector<std::string>& env_list(const Env& env, const std::string& name) {
    const Value& v = env_lookup(env, name);
    if (!v.is_list) fail(ErrorKind::TypeError, "variable '" + name + "' is a string, expected a list");
    return v.list;
}

namespace {

struct Exec {
    Env& env;
    std::string out;
    RunTrace* trace = nullptr;  // null for plain interpretation

    void run(const std::vector<Stmt>& stmts) {
        for (const Stmt& s : stmts) exec(s);
    }

    void exec(const Stmt& s) {
        switch (s.kind) {
            case Stmt::Kind::Print:
                out += s.print_expr.is_var ? env_scalar(env, s.print_expr.text) : s.print_expr.text;
                break;
            case Stmt::Kind::If: {
                bool taken = env_scalar(env, s.cond_var) == s.cond_lit;
                if (trace) trace->events.emplace_back(s.site, taken ? 0 : 1);
                run(taken ? s.then_arm : s.else_arm);
                break;
            }
            case Stmt::Kind::For: {
                // copy: the env entry may be replaced if the loop var shadows it
                std::vector<std::string> elems = env_list(env, s.list_var);
                if (trace) trace->loop_counts.emplace_back(s.site, static_cast<int>(elems.size()));
                std::optional<Value> saved;
                auto it = env.find(s.loop_var);
                if (it != env.end()) saved = it->second;
                for (const std::string& e : elems) {
                    env[s.loop_var] = Value::of(e);
                    run(s.body);
                }
                if (saved)
                    env[s.loop_var] = *saved;
                else
                    env.erase(s.loop_var);
                break;
            }
        }
    }
};

}  // namespace

std::string interpret_stmts(const std::vector<Stmt>& stmts, Env& env) {
    Exec ex{env, {}, nullptr};
    ex.run(stmts);
    return std::move(ex.out);
}

std::string interpret(const Program& program, const Env& env) {
    Env scratch = env;
    return interpret_stmts(program.stmts, scratch);
}

std::pair<std::string, RunTrace> trace_run(const Program& program, const Env& env) {
    Env scratch = env;
    RunTrace trace;
    trace.env_digest = env_digest(env);
    Exec ex{scratch, {}, &trace};
    ex.run(program.stmts);
    return {std::move(ex.out), std::move(trace)};
}

std::string env_digest(const Env& env) {
    // canonical: sorted by key (std::map order), values length-prefixed
    std::string canon;
    for (const auto& [name, value] : env) {
        canon += name;
        canon += '=';
        if (value.is_list) {
            canon += '[';
            for (const auto& e : value.list) {
                canon += std::to_string(e.size());
                canon += ':';
                canon += e;
            }
            canon += ']';
        } else {
            canon += std::to_string(value.str.size());
            canon += ':';
            canon += value.str;
        }
        canon += ';';
    }
    return short_sha256_hex(canon);
}

}  // namespace vcache
