#pragma once

// MiniScript: a minimal print-oriented scripting language whose runs produce
// the dynamic documents this pipeline decomposes. Grammar:
//
//   program := stmt*
//   stmt    := "print" (STRING | IDENT) ";"
//            | "if" IDENT "==" STRING block ("else" block)?
//            | "for" IDENT "in" IDENT block
//   block   := "{" stmt* "}"
//
// STRING is double-quoted with \" and \\ escapes. If and For statements are
// branch sites, numbered 0.. in pre-order; site ids are stable across
// re-parses of the same source.

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vcache {

using SiteId = int;

struct StrExpr {
    bool is_var = false;
    std::string text;  // literal text or variable name

    bool operator==(const StrExpr&) const = default;
};

struct Stmt {
    enum class Kind { Print, If, For };

    Kind kind = Kind::Print;
    StrExpr print_expr;                 // Print
    std::string cond_var, cond_lit;     // If
    std::vector<Stmt> then_arm;         // If arm 0
    std::vector<Stmt> else_arm;         // If arm 1 (empty when absent)
    std::string loop_var, list_var;     // For
    std::vector<Stmt> body;             // For
    SiteId site = -1;                   // If and For only

    bool operator==(const Stmt&) const = default;
};

struct Program {
    std::vector<Stmt> stmts;
    int site_count = 0;

    bool operator==(const Program&) const = default;
};

struct SiteInfo {
    SiteId site = -1;
    Stmt::Kind kind = Stmt::Kind::If;
    bool inside_loop = false;
};

// Site table in id order (ids are dense 0..site_count-1).
std::vector<SiteInfo> site_table(const Program& program);

// ---------------------------------------------------------------------------
// Request environments

struct Value {
    bool is_list = false;
    std::string str;
    std::vector<std::string> list;

    static Value of(std::string s) { return Value{false, std::move(s), {}}; }
    static Value of_list(std::vector<std::string> xs) { return Value{true, "", std::move(xs)}; }

    bool operator==(const Value&) const = default;
};

using Env = std::map<std::string, Value>;

// Hex audit digest over a canonical rendering of the environment.
std::string env_digest(const Env& env);

// Shared lookup rules: missing name is UndefinedVar, wrong shape is TypeError.
const Value& env_lookup(const Env& env, const std::string& name);
const std::string& env_scalar(const Env& env, const std::string& name);
const std::vector<std::string>& env_list(const Env& env, const std::string& name);

// ---------------------------------------------------------------------------
// Operations

// Errors: SyntaxError (message carries line:column).
Program parse_script(std::string_view source);

// Canonical source text; parse_script(to_source(p)) == p.
std::string to_source(const Program& program);

// Errors: UndefinedVar, TypeError.
std::string interpret(const Program& program, const Env& env);

// Execution engine over a statement list. The environment is mutated only
// for loop-variable shadowing and is restored before returning.
std::string interpret_stmts(const std::vector<Stmt>& stmts, Env& env);

// One execution's branch/loop record. events holds (site, arm) per executed
// If (0 = then, 1 = else), loop_counts holds (site, iteration count) per
// executed For; both in execution order. doc is filled in by the caller that
// knows which document the run belongs to.
struct RunTrace {
    std::string doc;
    std::vector<std::pair<SiteId, int>> events;
    std::vector<std::pair<SiteId, int>> loop_counts;
    std::string env_digest;
};

// Same output as interpret, plus the run's trace.
std::pair<std::string, RunTrace> trace_run(const Program& program, const Env& env);

}  // namespace vcache
