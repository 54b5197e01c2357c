#include "vcache/docmodel.hpp"

#include <cctype>
#include <utility>

#include "vcache/digest.hpp"
#include "vcache/error.hpp"

namespace vcache {

namespace {

enum class Tok {
    GapOpen,    // <gap>
    GapClose,   // </gap>
    LoopOpen,   // <loop>
    LoopClose,  // </loop>
    TempOpen,   // the prefix "<temp "
    TempClose,  // </temp>
    RunOpen,    // <N>
    RunClose,   // </N>
};

struct TokenHit {
    std::size_t pos = 0;
    std::size_t len = 0;
    Tok tok = Tok::GapOpen;
    long run_number = 0;  // RunOpen / RunClose only
};

bool is_run_digits(std::string_view s) {
    if (s.empty() || s[0] < '1' || s[0] > '9') return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

// Classifies the token starting at the '<' at position pos, if any.
bool classify_at(std::string_view s, std::size_t pos, TokenHit& hit) {
    std::string_view rest = s.substr(pos);
    auto match = [&](std::string_view tag, Tok tok) {
        if (rest.substr(0, tag.size()) == tag) {
            hit = TokenHit{pos, tag.size(), tok, 0};
            return true;
        }
        return false;
    };
    if (match("<gap>", Tok::GapOpen)) return true;
    if (match("</gap>", Tok::GapClose)) return true;
    if (match("<loop>", Tok::LoopOpen)) return true;
    if (match("</loop>", Tok::LoopClose)) return true;
    if (match("<temp ", Tok::TempOpen)) return true;
    if (match("</temp>", Tok::TempClose)) return true;
    // run tags: <N> or </N>, N >= 1, no leading zeros
    std::size_t body_begin = 1;
    bool closing = false;
    if (rest.size() > 1 && rest[1] == '/') {
        body_begin = 2;
        closing = true;
    }
    std::size_t gt = rest.find('>', body_begin);
    if (gt == std::string_view::npos) return false;
    std::string_view digits = rest.substr(body_begin, gt - body_begin);
    if (digits.size() > 9 || !is_run_digits(digits)) return false;
    long n = 0;
    for (char c : digits) n = n * 10 + (c - '0');
    hit = TokenHit{pos, gt + 1, closing ? Tok::RunClose : Tok::RunOpen, n};
    return true;
}

// Finds the next reserved token at or after position from.
bool next_token(std::string_view s, std::size_t from, TokenHit& hit) {
    for (std::size_t i = from; i < s.size(); ++i) {
        i = s.find('<', i);
        if (i == std::string_view::npos) return false;
        if (classify_at(s, i, hit)) return true;
    }
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Node construction

TNode TNode::lit(std::string bytes) {
    TNode n;
    n.kind = Kind::Literal;
    n.literal = std::move(bytes);
    return n;
}

TNode TNode::gap() {
    TNode n;
    n.kind = Kind::Gap;
    return n;
}

TNode TNode::loop(std::vector<TNode> body) {
    TNode n;
    n.kind = Kind::Loop;
    n.body = normalized(std::move(body));
    return n;
}

void append_node(std::vector<TNode>& nodes, TNode node) {
    if (node.kind == TNode::Kind::Literal) {
        if (node.literal.empty()) return;
        if (!nodes.empty() && nodes.back().kind == TNode::Kind::Literal) {
            nodes.back().literal += node.literal;
            return;
        }
    }
    nodes.push_back(std::move(node));
}

std::vector<TNode> normalized(std::vector<TNode> nodes) {
    std::vector<TNode> out;
    out.reserve(nodes.size());
    for (auto& n : nodes) {
        if (n.kind == TNode::Kind::Loop) n.body = normalized(std::move(n.body));
        append_node(out, std::move(n));
    }
    return out;
}

std::size_t count_literal_bytes(const std::vector<TNode>& nodes) {
    std::size_t total = 0;
    for (const auto& n : nodes) {
        if (n.kind == TNode::Kind::Literal) total += n.literal.size();
        if (n.kind == TNode::Kind::Loop) total += count_literal_bytes(n.body);
    }
    return total;
}

TemplateDoc TemplateDoc::make(std::vector<TNode> nodes) {
    TemplateDoc doc;
    doc.nodes = normalized(std::move(nodes));
    doc.literal_bytes = count_literal_bytes(doc.nodes);
    return doc;
}

std::string template_url_for_hash(std::string_view hash) {
    return "/tpl/" + std::string(hash) + ".vct";
}

std::string hash_from_template_url(std::string_view url) {
    constexpr std::string_view prefix = "/tpl/";
    constexpr std::string_view suffix = ".vct";
    if (url.size() != prefix.size() + 16 + suffix.size()) return "";
    if (url.substr(0, prefix.size()) != prefix) return "";
    if (url.substr(url.size() - suffix.size()) != suffix) return "";
    std::string_view hash = url.substr(prefix.size(), 16);
    for (char c : hash) {
        bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!ok) return "";
    }
    return std::string(hash);
}

TemplateId template_id(const TemplateDoc& doc) {
    std::string hash = short_sha256_hex(serialize(doc));
    return TemplateId{hash, template_url_for_hash(hash)};
}

BNode BNode::lit(std::string bytes) {
    BNode n;
    n.literal = std::move(bytes);
    return n;
}

BNode BNode::nest(BindingDoc doc) {
    BNode n;
    n.nested = std::make_shared<const BindingDoc>(std::move(doc));
    return n;
}

bool operator==(const BNode& a, const BNode& b) {
    if (a.is_nested() != b.is_nested()) return false;
    if (a.is_nested()) return *a.nested == *b.nested;
    return a.literal == b.literal;
}

BItem BItem::make_fill(std::vector<BNode> content) {
    BItem item;
    item.kind = Kind::Fill;
    // normalize: drop empty literals, merge adjacent ones
    for (auto& n : content) {
        if (!n.is_nested() && n.literal.empty()) continue;
        if (!n.is_nested() && !item.fill.empty() && !item.fill.back().is_nested()) {
            item.fill.back().literal += n.literal;
            continue;
        }
        item.fill.push_back(std::move(n));
    }
    return item;
}

BItem BItem::make_runs(std::vector<std::vector<BItem>> runs) {
    BItem item;
    item.kind = Kind::Runs;
    item.runs = std::move(runs);
    return item;
}

bool operator==(const BItem& a, const BItem& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == BItem::Kind::Fill) return a.fill == b.fill;
    return a.runs == b.runs;
}

bool operator==(const BindingDoc& a, const BindingDoc& b) {
    return a.ref == b.ref && a.items == b.items;
}

// ---------------------------------------------------------------------------
// Template parsing

TemplateDoc parse_template(std::string_view wire) {
    // stack of open node lists; level 0 is the document, deeper levels are
    // open <loop> regions
    std::vector<std::vector<TNode>> stack;
    stack.emplace_back();
    std::size_t lit_start = 0;
    std::size_t i = 0;
    auto flush_literal = [&](std::size_t end) {
        if (end > lit_start)
            append_node(stack.back(), TNode::lit(std::string(wire.substr(lit_start, end - lit_start))));
    };
    TokenHit hit;
    while (next_token(wire, i, hit)) {
        switch (hit.tok) {
            case Tok::GapOpen:
                flush_literal(hit.pos);
                stack.back().push_back(TNode::gap());
                break;
            case Tok::LoopOpen:
                flush_literal(hit.pos);
                stack.emplace_back();
                break;
            case Tok::LoopClose: {
                flush_literal(hit.pos);
                if (stack.size() == 1) fail(ErrorKind::UnbalancedLoop, "</loop> without matching <loop>");
                std::vector<TNode> body = std::move(stack.back());
                stack.pop_back();
                stack.back().push_back(TNode::loop(std::move(body)));
                break;
            }
            case Tok::GapClose:
                fail(ErrorKind::StrayBindingToken, "</gap> is a binding-only construct");
            case Tok::TempOpen:
            case Tok::TempClose:
                fail(ErrorKind::StrayBindingToken, "<temp> tags are binding-only constructs");
            case Tok::RunOpen:
            case Tok::RunClose:
                fail(ErrorKind::StrayBindingToken, "run tags are binding-only constructs");
        }
        i = hit.pos + hit.len;
        lit_start = i;
    }
    flush_literal(wire.size());
    if (stack.size() != 1) fail(ErrorKind::UnbalancedLoop, "<loop> without matching </loop>");
    return TemplateDoc::make(std::move(stack.front()));
}

// ---------------------------------------------------------------------------
// Binding parsing

namespace {

struct BCursor {
    std::string_view s;
    std::size_t pos = 0;
};

BindingDoc parse_temp_block(BCursor& c);

// Parses <gap>...</gap> content after the <gap> token has been consumed.
std::vector<BNode> parse_fill_content(BCursor& c) {
    std::vector<BNode> out;
    std::string pending;
    auto flush = [&] {
        if (!pending.empty()) {
            out.push_back(BNode::lit(std::move(pending)));
            pending.clear();
        }
    };
    for (;;) {
        TokenHit hit;
        if (!next_token(c.s, c.pos, hit))
            fail(ErrorKind::BareGapMarker, "<gap> without closing </gap>");
        pending.append(c.s.substr(c.pos, hit.pos - c.pos));
        switch (hit.tok) {
            case Tok::GapClose: {
                c.pos = hit.pos + hit.len;
                flush();
                return out;
            }
            case Tok::TempOpen: {
                flush();
                c.pos = hit.pos;
                out.push_back(BNode::nest(parse_temp_block(c)));
                break;
            }
            case Tok::GapOpen:
                fail(ErrorKind::BareGapMarker, "nested <gap> inside a gap fill");
            case Tok::TempClose:
                fail(ErrorKind::BareGapMarker, "<gap> not closed before </temp>");
            case Tok::LoopOpen:
            case Tok::LoopClose:
                fail(ErrorKind::UnbalancedTag, "loop tags are not allowed inside a gap fill");
            case Tok::RunOpen:
            case Tok::RunClose:
                fail(ErrorKind::UnbalancedTag, "run tags are not allowed inside a gap fill");
        }
    }
}

std::vector<BItem> parse_item_sequence(BCursor& c, bool stop_at_temp_close);

// Parses loop content after the <loop> token. Run numbering is validated for
// the whole block before any run's contents are parsed, so a numbering gap is
// always reported as NonConsecutiveRuns.
std::vector<std::vector<BItem>> parse_loop_runs(BCursor& c) {
    struct Span {
        std::size_t begin, end;
    };
    std::vector<Span> spans;
    long expected = 1;
    for (;;) {
        TokenHit hit;
        if (!next_token(c.s, c.pos, hit) )
            fail(ErrorKind::UnbalancedTag, "<loop> in binding without closing </loop>");
        if (hit.pos != c.pos)
            fail(ErrorKind::UnbalancedTag, "unexpected literal content between loop runs");
        if (hit.tok == Tok::LoopClose) {
            c.pos = hit.pos + hit.len;
            break;
        }
        if (hit.tok != Tok::RunOpen)
            fail(ErrorKind::UnbalancedTag, "expected a run tag inside <loop>");
        if (hit.run_number != expected)
            fail(ErrorKind::NonConsecutiveRuns, "run tags must be numbered consecutively from 1");
        long number = hit.run_number;
        c.pos = hit.pos + hit.len;
        std::size_t begin = c.pos;
        // scan for the matching </N>; only inner <loop> regions can legally
        // re-introduce run tags, so loop depth alone decides the match
        int loop_depth = 0;
        for (;;) {
            TokenHit t;
            if (!next_token(c.s, c.pos, t))
                fail(ErrorKind::UnbalancedTag, "run tag without matching close tag");
            c.pos = t.pos + t.len;
            if (t.tok == Tok::LoopOpen) {
                ++loop_depth;
            } else if (t.tok == Tok::LoopClose) {
                if (loop_depth == 0)
                    fail(ErrorKind::UnbalancedTag, "</loop> before the open run closed");
                --loop_depth;
            } else if (t.tok == Tok::RunClose && loop_depth == 0) {
                if (t.run_number != number)
                    fail(ErrorKind::UnbalancedTag, "mismatched run close tag");
                spans.push_back(Span{begin, t.pos});
                break;
            } else if (t.tok == Tok::RunOpen && loop_depth == 0) {
                fail(ErrorKind::UnbalancedTag, "run tag opened inside another run");
            }
        }
        ++expected;
    }
    std::vector<std::vector<BItem>> runs;
    runs.reserve(spans.size());
    for (const Span& span : spans) {
        BCursor sub{c.s.substr(span.begin, span.end - span.begin), 0};
        runs.push_back(parse_item_sequence(sub, false));
    }
    return runs;
}

// Parses a sequence of binding items. With stop_at_temp_close the sequence
// ends at (and does not consume) the enclosing </temp>; otherwise the whole
// view must consist of items.
std::vector<BItem> parse_item_sequence(BCursor& c, bool stop_at_temp_close) {
    std::vector<BItem> items;
    for (;;) {
        TokenHit hit;
        if (!next_token(c.s, c.pos, hit)) {
            if (stop_at_temp_close)
                fail(ErrorKind::UnbalancedTag, "binding not closed with </temp>");
            if (c.pos < c.s.size())
                fail(ErrorKind::UnbalancedTag, "unexpected literal content between binding items");
            return items;
        }
        if (hit.pos != c.pos)
            fail(ErrorKind::UnbalancedTag, "unexpected literal content between binding items");
        switch (hit.tok) {
            case Tok::GapOpen: {
                c.pos = hit.pos + hit.len;
                items.push_back(BItem::make_fill(parse_fill_content(c)));
                break;
            }
            case Tok::LoopOpen: {
                c.pos = hit.pos + hit.len;
                items.push_back(BItem::make_runs(parse_loop_runs(c)));
                break;
            }
            case Tok::TempClose:
                if (stop_at_temp_close) return items;
                fail(ErrorKind::UnbalancedTag, "stray </temp>");
            case Tok::TempOpen:
                fail(ErrorKind::UnbalancedTag, "nested binding must appear inside a gap fill");
            case Tok::GapClose:
                fail(ErrorKind::UnbalancedTag, "stray </gap>");
            case Tok::LoopClose:
                fail(ErrorKind::UnbalancedTag, "stray </loop>");
            case Tok::RunOpen:
            case Tok::RunClose:
                fail(ErrorKind::UnbalancedTag, "run tags must appear directly inside <loop>");
        }
    }
}

BindingDoc parse_temp_block(BCursor& c) {
    constexpr std::string_view open = "<temp ";
    if (c.s.substr(c.pos, open.size()) != open)
        fail(ErrorKind::MissingOuterTemp, "binding must start with <temp ref=\"...\">");
    c.pos += open.size();
    constexpr std::string_view attr = "ref=\"";
    if (c.s.substr(c.pos, attr.size()) != attr)
        fail(ErrorKind::UnbalancedTag, "<temp> tag must carry a ref=\"...\" attribute");
    c.pos += attr.size();
    std::size_t quote = c.s.find('"', c.pos);
    if (quote == std::string_view::npos)
        fail(ErrorKind::UnbalancedTag, "unterminated ref attribute");
    std::string url(c.s.substr(c.pos, quote - c.pos));
    if (url.empty()) fail(ErrorKind::UnbalancedTag, "empty template ref");
    c.pos = quote + 1;
    if (c.pos >= c.s.size() || c.s[c.pos] != '>')
        fail(ErrorKind::UnbalancedTag, "malformed <temp> open tag");
    ++c.pos;

    BindingDoc doc;
    doc.ref = std::move(url);
    doc.items = parse_item_sequence(c, true);
    constexpr std::string_view close = "</temp>";
    // parse_item_sequence returned at the </temp> token
    c.pos += close.size();
    return doc;
}

}  // namespace

BindingDoc parse_binding(std::string_view wire) {
    BCursor c{wire, 0};
    BindingDoc doc = parse_temp_block(c);
    if (c.pos != wire.size())
        fail(ErrorKind::UnbalancedTag, "content after the outer </temp>");
    return doc;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void serialize_nodes(const std::vector<TNode>& nodes, std::string& out) {
    for (const auto& n : nodes) {
        switch (n.kind) {
            case TNode::Kind::Literal:
                out += n.literal;
                break;
            case TNode::Kind::Gap:
                out += "<gap>";
                break;
            case TNode::Kind::Loop:
                out += "<loop>";
                serialize_nodes(n.body, out);
                out += "</loop>";
                break;
        }
    }
}

void serialize_items(const std::vector<BItem>& items, std::string& out);

void serialize_binding(const BindingDoc& doc, std::string& out) {
    out += "<temp ref=\"";
    out += doc.ref;
    out += "\">";
    serialize_items(doc.items, out);
    out += "</temp>";
}

void serialize_items(const std::vector<BItem>& items, std::string& out) {
    for (const auto& item : items) {
        if (item.kind == BItem::Kind::Fill) {
            out += "<gap>";
            for (const auto& n : item.fill) {
                if (n.is_nested())
                    serialize_binding(*n.nested, out);
                else
                    out += n.literal;
            }
            out += "</gap>";
        } else {
            out += "<loop>";
            for (std::size_t k = 0; k < item.runs.size(); ++k) {
                std::string num = std::to_string(k + 1);
                out += "<" + num + ">";
                serialize_items(item.runs[k], out);
                out += "</" + num + ">";
            }
            out += "</loop>";
        }
    }
}

}  // namespace

std::string serialize(const TemplateDoc& doc) {
    std::string out;
    serialize_nodes(doc.nodes, out);
    return out;
}

std::string serialize(const BindingDoc& doc) {
    std::string out;
    serialize_binding(doc, out);
    return out;
}

std::string escape_reserved(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t from = 0;
    TokenHit hit;
    while (next_token(text, from, hit)) {
        out.append(text.substr(from, hit.pos - from));
        out += "&lt;";
        out.append(text.substr(hit.pos + 1, hit.len - 1));
        from = hit.pos + hit.len;
    }
    out.append(text.substr(from));
    return out;
}

bool token_free(std::string_view text) {
    TokenHit hit;
    return !next_token(text, 0, hit);
}

}  // namespace vcache
