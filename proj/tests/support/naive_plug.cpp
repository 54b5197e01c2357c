#include "support/naive_plug.hpp"

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace testsupport {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw std::runtime_error("naive_plug: " + msg); }

struct Hit {
    enum Kind { GapOpen, GapClose, LoopOpen, LoopClose, TempOpen, TempClose, RunOpen, RunClose };

    std::size_t pos = 0;
    std::size_t len = 0;
    Kind kind = GapOpen;
    long num = 0;
};

bool digits_ok(std::string_view d) {
    if (d.empty() || d.size() > 9 || d[0] < '1' || d[0] > '9') return false;
    for (char c : d)
        if (c < '0' || c > '9') return false;
    return true;
}

bool hit_at(std::string_view s, std::size_t i, Hit& h) {
    auto starts = [&](std::string_view t) { return s.substr(i, t.size()) == t; };
    if (starts("<gap>")) h = Hit{i, 5, Hit::GapOpen, 0};
    else if (starts("</gap>")) h = Hit{i, 6, Hit::GapClose, 0};
    else if (starts("<loop>")) h = Hit{i, 6, Hit::LoopOpen, 0};
    else if (starts("</loop>")) h = Hit{i, 7, Hit::LoopClose, 0};
    else if (starts("<temp ")) h = Hit{i, 6, Hit::TempOpen, 0};
    else if (starts("</temp>")) h = Hit{i, 7, Hit::TempClose, 0};
    else {
        std::size_t b = i + 1;
        bool closing = b < s.size() && s[b] == '/';
        if (closing) ++b;
        std::size_t gt = s.find('>', b);
        if (gt == std::string_view::npos) return false;
        std::string_view d = s.substr(b, gt - b);
        if (!digits_ok(d)) return false;
        long n = 0;
        for (char c : d) n = n * 10 + (c - '0');
        h = Hit{i, gt + 1 - i, closing ? Hit::RunClose : Hit::RunOpen, n};
    }
    return true;
}

bool next_hit(std::string_view s, std::size_t from, Hit& h) {
    for (std::size_t i = from; i < s.size(); ++i) {
        i = s.find('<', i);
        if (i == std::string_view::npos) return false;
        if (hit_at(s, i, h)) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Binding wire -> lightweight tree

struct Binding;

struct Part {
    std::string lit;
    std::shared_ptr<Binding> nested;
};

struct Item {
    bool is_fill = true;
    std::vector<Part> parts;
    std::vector<std::vector<Item>> runs;
};

struct Binding {
    std::string ref;
    std::vector<Item> items;
};

Binding parse_one_binding(std::string_view s, std::size_t& pos);
std::vector<Item> parse_item_list(std::string_view s, std::size_t& pos);

std::vector<Part> parse_fill(std::string_view s, std::size_t& pos) {
    std::vector<Part> parts;
    std::string lit;
    for (;;) {
        Hit h;
        if (!next_hit(s, pos, h)) bad("unterminated gap fill");
        lit.append(s.substr(pos, h.pos - pos));
        if (h.kind == Hit::GapClose) {
            pos = h.pos + h.len;
            if (!lit.empty()) parts.push_back(Part{std::move(lit), nullptr});
            return parts;
        }
        if (h.kind == Hit::TempOpen) {
            if (!lit.empty()) {
                parts.push_back(Part{std::move(lit), nullptr});
                lit.clear();
            }
            pos = h.pos;
            parts.push_back(Part{"", std::make_shared<Binding>(parse_one_binding(s, pos))});
            continue;
        }
        bad("unexpected token in gap fill");
    }
}

std::vector<std::vector<Item>> parse_runs(std::string_view s, std::size_t& pos) {
    std::vector<std::vector<Item>> runs;
    long expect = 1;
    for (;;) {
        Hit h;
        if (!next_hit(s, pos, h) || h.pos != pos) bad("loose bytes in binding loop");
        if (h.kind == Hit::LoopClose) {
            pos = h.pos + h.len;
            return runs;
        }
        if (h.kind != Hit::RunOpen || h.num != expect) bad("bad run tag");
        pos = h.pos + h.len;
        runs.push_back(parse_item_list(s, pos));
        Hit c;
        if (!next_hit(s, pos, c) || c.pos != pos || c.kind != Hit::RunClose || c.num != expect)
            bad("run not closed");
        pos = c.pos + c.len;
        ++expect;
    }
}

std::vector<Item> parse_item_list(std::string_view s, std::size_t& pos) {
    std::vector<Item> items;
    for (;;) {
        Hit h;
        if (!next_hit(s, pos, h)) return items;  // caller validates what follows
        if (h.pos != pos) bad("loose bytes between binding items");
        if (h.kind == Hit::TempClose || h.kind == Hit::RunClose) return items;  // not consumed
        if (h.kind == Hit::GapOpen) {
            pos = h.pos + h.len;
            Item it;
            it.is_fill = true;
            it.parts = parse_fill(s, pos);
            items.push_back(std::move(it));
        } else if (h.kind == Hit::LoopOpen) {
            pos = h.pos + h.len;
            Item it;
            it.is_fill = false;
            it.runs = parse_runs(s, pos);
            items.push_back(std::move(it));
        } else {
            bad("unexpected token between binding items");
        }
    }
}

Binding parse_one_binding(std::string_view s, std::size_t& pos) {
    constexpr std::string_view open = "<temp ";
    if (s.substr(pos, open.size()) != open) bad("missing <temp");
    pos += open.size();
    constexpr std::string_view attr = "ref=\"";
    if (s.substr(pos, attr.size()) != attr) bad("missing ref attribute");
    pos += attr.size();
    std::size_t q = s.find('"', pos);
    if (q == std::string_view::npos) bad("unterminated ref");
    Binding b;
    b.ref = std::string(s.substr(pos, q - pos));
    pos = q + 1;
    if (pos >= s.size() || s[pos] != '>') bad("malformed <temp> tag");
    ++pos;
    b.items = parse_item_list(s, pos);
    constexpr std::string_view close = "</temp>";
    if (s.substr(pos, close.size()) != close) bad("missing </temp>");
    pos += close.size();
    return b;
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_binding(const Binding& b, const std::map<std::string, std::string>& tws);

std::string render_region(std::string_view tpl, const std::vector<Item>& items,
                          const std::map<std::string, std::string>& tws) {
    std::string out;
    std::size_t pos = 0;
    std::size_t next_item = 0;
    for (;;) {
        Hit h;
        if (!next_hit(tpl, pos, h)) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, h.pos - pos));
        if (h.kind == Hit::GapOpen) {
            if (next_item >= items.size()) bad("gap with no binding item");
            const Item& it = items[next_item++];
            if (!it.is_fill) bad("gap paired with runs");
            for (const Part& p : it.parts) out += p.nested ? render_binding(*p.nested, tws) : p.lit;
            pos = h.pos + h.len;
        } else if (h.kind == Hit::LoopOpen) {
            std::size_t scan = h.pos + h.len;
            std::size_t body_begin = scan;
            std::size_t body_end = 0;
            int depth = 0;
            for (;;) {
                Hit t;
                if (!next_hit(tpl, scan, t)) bad("template loop not closed");
                scan = t.pos + t.len;
                if (t.kind == Hit::LoopOpen) {
                    ++depth;
                } else if (t.kind == Hit::LoopClose) {
                    if (depth == 0) {
                        body_end = t.pos;
                        break;
                    }
                    --depth;
                }
            }
            if (next_item >= items.size()) bad("loop with no binding item");
            const Item& it = items[next_item++];
            if (it.is_fill) bad("loop paired with fill");
            std::string_view body = tpl.substr(body_begin, body_end - body_begin);
            for (const auto& run : it.runs) out += render_region(body, run, tws);
            pos = scan;
        } else {
            bad("unexpected token in template");
        }
    }
    if (next_item != items.size()) bad("unused binding items");
    return out;
}

std::string render_binding(const Binding& b, const std::map<std::string, std::string>& tws) {
    auto it = tws.find(b.ref);
    if (it == tws.end()) bad("unknown template " + b.ref);
    return render_region(it->second, b.items, tws);
}

}  // namespace

std::string naive_plug(const std::string& binding_wire, const std::map<std::string, std::string>& template_wires) {
    std::size_t pos = 0;
    Binding b = parse_one_binding(binding_wire, pos);
    if (pos != binding_wire.size()) bad("trailing bytes after binding");
    return render_binding(b, template_wires);
}

}  // namespace testsupport
