#include "vcache/assembler.hpp"

#include <set>

#include "vcache/error.hpp"

namespace vcache {

bool MemoryTemplateCache::has(const std::string& url) {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.count(url) != 0;
}

TemplateDoc MemoryTemplateCache::get(const std::string& url) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(url);
    if (it == entries_.end()) fail(ErrorKind::MissingTemplate, url);
    return it->second;
}

void MemoryTemplateCache::put(const std::string& url, const TemplateDoc& doc) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.insert_or_assign(url, doc);
}

std::size_t MemoryTemplateCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

// ---------------------------------------------------------------------------

namespace {

struct RefCollector {
    std::vector<std::string> out;
    std::set<std::string> seen;

    void binding_doc(const BindingDoc& b) {
        if (seen.insert(b.ref).second) out.push_back(b.ref);
        for (const BItem& it : b.items) item(it);
    }
    void item(const BItem& it) {
        if (it.kind == BItem::Kind::Fill) {
            for (const BNode& node : it.fill)
                if (node.is_nested()) binding_doc(*node.nested);
        } else {
            for (const auto& run : it.runs)
                for (const BItem& sub : run) item(sub);
        }
    }
};

}  // namespace

std::vector<std::string> generate_list(const BindingDoc& binding) {
    RefCollector c;
    c.binding_doc(binding);
    return std::move(c.out);
}

TemplateMap fetch_list(const std::vector<std::string>& urls, TemplateCache& cache,
                       TemplateFetcher& fetcher, FetchListStats* stats) {
    TemplateMap resolved;
    for (const std::string& url : urls) {
        if (resolved.count(url)) continue;
        if (cache.has(url)) {
            if (stats) ++stats->cache_hits;
            resolved.emplace(url, cache.get(url));
            continue;
        }
        std::string wire = fetcher.fetch(url);
        if (stats) {
            ++stats->fetches;
            stats->bytes_fetched += wire.size();
        }
        TemplateDoc doc;
        try {
            doc = parse_template(wire);
        } catch (const Error& e) {
            fail(ErrorKind::ParseFailed, url + ": " + e.what());
        }
        cache.put(url, doc);
        resolved.emplace(url, std::move(doc));
    }
    return resolved;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxNestingDepth = 64;

struct Plugger {
    const TemplateMap& templates;
    std::string out;

    void binding_doc(const BindingDoc& binding, int depth) {
        if (depth > kMaxNestingDepth)
            fail(ErrorKind::CycleSuspected, "binding nesting exceeds " + std::to_string(kMaxNestingDepth));
        auto it = templates.find(binding.ref);
        if (it == templates.end()) fail(ErrorKind::MissingTemplate, binding.ref);
        level(it->second.nodes, binding.items, depth);
    }

    // one nesting level: markers in `nodes` consume `items` in order
    void level(const std::vector<TNode>& nodes, const std::vector<BItem>& items, int depth) {
        std::size_t next = 0;
        for (const TNode& node : nodes) {
            switch (node.kind) {
                case TNode::Kind::Literal:
                    out += node.literal;
                    break;
                case TNode::Kind::Gap: {
                    const BItem& item = take(items, next, "gap");
                    if (item.kind != BItem::Kind::Fill)
                        fail(ErrorKind::KindMismatch, "gap marker paired with loop runs");
                    for (const BNode& bn : item.fill) {
                        if (bn.is_nested())
                            binding_doc(*bn.nested, depth + 1);
                        else
                            out += bn.literal;
                    }
                    break;
                }
                case TNode::Kind::Loop: {
                    const BItem& item = take(items, next, "loop");
                    if (item.kind != BItem::Kind::Runs)
                        fail(ErrorKind::KindMismatch, "loop region paired with a fill");
                    for (const auto& run : item.runs) level(node.body, run, depth);
                    break;
                }
            }
        }
        if (next != items.size())
            fail(ErrorKind::ArityMismatch, std::to_string(items.size() - next) + " unconsumed binding item(s)");
    }

    static const BItem& take(const std::vector<BItem>& items, std::size_t& next, const char* what) {
        if (next >= items.size())
            fail(ErrorKind::ArityMismatch, std::string("no binding item left for ") + what + " marker");
        return items[next++];
    }
};

}  // namespace

std::string plug(const BindingDoc& binding, const TemplateMap& templates) {
    Plugger p{templates, {}};
    p.binding_doc(binding, 0);
    return std::move(p.out);
}

}  // namespace vcache
