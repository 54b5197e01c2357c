#pragma once

// Document model for the template/binding wire format.
//
// A template is ordinary HTML text punctuated by two reserved constructs:
// a void `<gap>` marker and a `<loop>`...`</loop>` region. A binding is the
// per-request fill material for one template, wrapped in
// `<temp ref="...">`...`</temp>`: gap fills as `<gap>`...`</gap>` containers,
// loop runs as `<loop><1>...</1><2>...</2></loop>`, and nested bindings for
// templates referenced recursively. Everything between reserved tokens is an
// opaque byte literal; no HTML parsing happens anywhere.
//
// Reserved tokens (case-sensitive, byte-exact): <gap> </gap> <loop> </loop>
// </temp>, the prefix "<temp " of a binding open tag, and run tags <N> </N>
// with N a decimal integer >= 1 without leading zeros. Literal text that
// collides with a token is defused by escape_reserved(), which rewrites the
// token's leading '<' to "&lt;".

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace vcache {

// ---------------------------------------------------------------------------
// Template trees

struct TNode {
    enum class Kind { Literal, Gap, Loop };

    Kind kind = Kind::Literal;
    std::string literal;      // Kind::Literal payload, never empty
    std::vector<TNode> body;  // Kind::Loop children

    static TNode lit(std::string bytes);
    static TNode gap();
    static TNode loop(std::vector<TNode> body);

    bool operator==(const TNode&) const = default;
};

// Appends a node, merging adjacent literals and dropping empty ones so the
// "no two adjacent Literal nodes" invariant holds by construction.
void append_node(std::vector<TNode>& nodes, TNode node);
std::vector<TNode> normalized(std::vector<TNode> nodes);
std::size_t count_literal_bytes(const std::vector<TNode>& nodes);

struct TemplateDoc {
    std::vector<TNode> nodes;
    std::size_t literal_bytes = 0;  // total Literal payload bytes, recursively

    // Normalizes the node list and computes literal_bytes.
    static TemplateDoc make(std::vector<TNode> nodes);

    bool operator==(const TemplateDoc&) const = default;
};

// Content-addressed identity: 16 hex digits of SHA-256 over the canonical
// serialization, plus the derived /tpl/<hash>.vct URL.
struct TemplateId {
    std::string hash;
    std::string url;

    auto operator<=>(const TemplateId&) const = default;
};

TemplateId template_id(const TemplateDoc& doc);
std::string template_url_for_hash(std::string_view hash);
// Extracts the hash from a /tpl/<hash>.vct URL; empty string if the URL does
// not have that shape.
std::string hash_from_template_url(std::string_view url);

// ---------------------------------------------------------------------------
// Binding trees

struct BindingDoc;

// One piece of gap-fill content: either literal bytes or a nested binding.
struct BNode {
    std::string literal;
    std::shared_ptr<const BindingDoc> nested;

    static BNode lit(std::string bytes);
    static BNode nest(BindingDoc doc);

    bool is_nested() const { return nested != nullptr; }
};

bool operator==(const BNode& a, const BNode& b);

struct BItem {
    enum class Kind { Fill, Runs };

    Kind kind = Kind::Fill;
    std::vector<BNode> fill;               // Kind::Fill (may be empty)
    std::vector<std::vector<BItem>> runs;  // Kind::Runs (may be empty)

    static BItem make_fill(std::vector<BNode> content);
    static BItem make_runs(std::vector<std::vector<BItem>> runs);
};

bool operator==(const BItem& a, const BItem& b);

struct BindingDoc {
    std::string ref;  // template URL; non-empty, contains no '"'
    std::vector<BItem> items;
};

bool operator==(const BindingDoc& a, const BindingDoc& b);

// ---------------------------------------------------------------------------
// Wire format

// Errors: UnbalancedLoop, StrayBindingToken.
TemplateDoc parse_template(std::string_view wire);

// The outermost construct must be exactly one <temp ref="...">...</temp>
// block. Errors: MissingOuterTemp, NonConsecutiveRuns, UnbalancedTag,
// BareGapMarker.
BindingDoc parse_binding(std::string_view wire);

std::string serialize(const TemplateDoc& doc);
std::string serialize(const BindingDoc& doc);

// Rewrites the leading '<' of every reserved-token occurrence to "&lt;".
// Idempotent; the result contains no reserved token.
std::string escape_reserved(std::string_view text);

// True when text contains no reserved token.
bool token_free(std::string_view text);

}  // namespace vcache
