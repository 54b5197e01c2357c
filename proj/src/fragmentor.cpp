#include "vcache/fragmentor.hpp"

#include <algorithm>
#include <cstdint>

#include "vcache/error.hpp"

namespace vcache {

void validate_config(const FragmentConfig& config) {
    if (config.rare_arm_threshold < 0.0 || config.rare_arm_threshold > 1.0)
        fail(ErrorKind::BadConfig, "rare_arm_threshold must be within [0, 1]");
    if (config.dominant_path_threshold <= 0.5 || config.dominant_path_threshold > 1.0)
        fail(ErrorKind::BadConfig, "dominant_path_threshold must be within (0.5, 1]");
    if (config.rare_arm_threshold >= config.dominant_path_threshold)
        fail(ErrorKind::BadConfig, "rare_arm_threshold must be below dominant_path_threshold");
    if (config.min_runs < 1) fail(ErrorKind::BadConfig, "min_runs must be at least 1");
}

const TemplateDoc* find_template(const Registry& reg, const std::string& url) {
    std::string hash = hash_from_template_url(url);
    if (hash.empty()) return nullptr;
    auto it = reg.templates.find(TemplateId{std::move(hash), url});
    return it == reg.templates.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Template construction

namespace {

// Accumulates raw static bytes and escapes each maximal run once, so that a
// reserved token assembled across adjacent prints (or across an inlined arm
// boundary) is still caught whole.
struct TemplateBuilder {
    const PathSignature& sig;
    std::vector<TNode> nodes;
    std::string raw;

    void flush() {
        if (raw.empty()) return;
        append_node(nodes, TNode::lit(escape_reserved(raw)));
        raw.clear();
    }

    void walk(const std::vector<Stmt>& stmts) {
        for (const Stmt& s : stmts) {
            switch (s.kind) {
                case Stmt::Kind::Print:
                    if (s.print_expr.is_var) {
                        flush();
                        append_node(nodes, TNode::gap());
                    } else {
                        raw += s.print_expr.text;
                    }
                    break;
                case Stmt::Kind::If: {
                    auto fixed = sig.find(s.site);
                    if (fixed != sig.end()) {
                        // arm inlined: keep accumulating raw across the boundary
                        walk(fixed->second == 0 ? s.then_arm : s.else_arm);
                    } else {
                        flush();
                        append_node(nodes, TNode::gap());
                    }
                    break;
                }
                case Stmt::Kind::For: {
                    flush();
                    TemplateBuilder body{sig, {}, {}};
                    body.walk(s.body);
                    body.flush();
                    append_node(nodes, TNode::loop(std::move(body.nodes)));
                    break;
                }
            }
        }
    }
};

}  // namespace

TemplateDoc build_template(const std::vector<Stmt>& stmts, const PathSignature& sig) {
    TemplateBuilder builder{sig, {}, {}};
    builder.walk(stmts);
    builder.flush();
    return TemplateDoc::make(std::move(builder.nodes));
}

// ---------------------------------------------------------------------------
// Brute-force fragmentation

namespace {

const PathSignature kNoSignature;

void collect_arm_templates(const std::vector<Stmt>& stmts, std::map<ArmKey, ArmDisposition>& arms,
                           std::map<TemplateId, TemplateDoc>& templates) {
    for (const Stmt& s : stmts) {
        if (s.kind == Stmt::Kind::If) {
            for (int arm = 0; arm < 2; ++arm) {
                const std::vector<Stmt>& arm_stmts = arm == 0 ? s.then_arm : s.else_arm;
                TemplateDoc doc = build_template(arm_stmts, kNoSignature);
                TemplateId id = template_id(doc);
                templates.emplace(id, std::move(doc));
                arms.emplace(ArmKey{s.site, arm}, ArmDisposition::template_ref(id));
                collect_arm_templates(arm_stmts, arms, templates);
            }
        } else if (s.kind == Stmt::Kind::For) {
            collect_arm_templates(s.body, arms, templates);
        }
    }
}

}  // namespace

FragmentResult fragment_brute(const Program& program, const FragmentConfig& config) {
    validate_config(config);  // pruning comes later; reject bad configs early
    FragmentResult result;
    TemplateDoc root = build_template(program.stmts, kNoSignature);
    result.root = template_id(root);
    result.templates.emplace(result.root, std::move(root));
    collect_arm_templates(program.stmts, result.arms, result.templates);
    return result;
}

void register_document(Registry& reg, const std::string& doc, const std::string& source,
                       const FragmentResult& fragment) {
    for (const auto& [id, tpl] : fragment.templates) reg.templates.emplace(id, tpl);
    DispatchEntry entry;
    entry.root = fragment.root;
    entry.arms = fragment.arms;
    reg.docs.insert_or_assign(doc, std::move(entry));
    reg.scripts.insert_or_assign(doc, source);
}

// ---------------------------------------------------------------------------
// Specialization

namespace {

constexpr double kFreqEps = 1e-9;
constexpr std::size_t kMaxRestrictionSites = 16;  // subset search is exponential

bool site_set_less(const PathSignature& a, const PathSignature& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [](const auto& x, const auto& y) { return x.first < y.first; });
}

// Largest closed restriction of `sig` whose frequency clears theta; ties go
// to the lowest site-id set. Empty result means nothing qualified.
PathSignature best_restriction(const PathSignature& sig, const PathStats& stats, const IfAncestry& ancestry,
                               double theta) {
    if (sig.size() > kMaxRestrictionSites) return {};
    std::vector<std::pair<SiteId, int>> entries(sig.begin(), sig.end());
    const std::size_t n = entries.size();
    PathSignature best;
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n); ++mask) {
        PathSignature r;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1u) r.emplace(entries[i]);
        if (r.size() == sig.size()) continue;  // the maximal itself already failed
        if (!signature_closed(r, ancestry)) continue;
        if (restriction_freq(stats, r) + kFreqEps < theta) continue;
        if (r.size() > best.size() || (r.size() == best.size() && site_set_less(r, best))) best = std::move(r);
    }
    return best;
}

}  // namespace

std::vector<std::pair<PathSignature, TemplateDoc>> specialize(const Program& program, const PathStats& stats,
                                                              const FragmentConfig& config) {
    validate_config(config);
    if (stats.run_count < config.min_runs)
        fail(ErrorKind::InsufficientRuns, std::to_string(stats.run_count) + " run(s) recorded, need at least " +
                                              std::to_string(config.min_runs));

    const IfAncestry ancestry = if_ancestry(program);
    const double theta = config.dominant_path_threshold;

    std::map<PathSignature, TemplateDoc> picked;
    for (const auto& [sig, freq] : stats.signature_freq) {
        if (sig.empty()) continue;  // an empty signature would just reproduce the root
        if (freq + kFreqEps >= theta) {
            picked.emplace(sig, build_template(program.stmts, sig));
            continue;
        }
        PathSignature fallback = best_restriction(sig, stats, ancestry, theta);
        if (!fallback.empty() && !picked.count(fallback))
            picked.emplace(fallback, build_template(program.stmts, fallback));
    }

    std::vector<std::pair<PathSignature, TemplateDoc>> out(picked.begin(), picked.end());
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    return out;
}

void attach_specializations(Registry& reg, const std::string& doc,
                            const std::vector<std::pair<PathSignature, TemplateDoc>>& merged) {
    auto entry_it = reg.docs.find(doc);
    if (entry_it == reg.docs.end()) fail(ErrorKind::UnregisteredDoc, "document '" + doc + "' is not registered");
    DispatchEntry& entry = entry_it->second;

    std::map<PathSignature, TemplateId> by_sig(entry.specialized.begin(), entry.specialized.end());
    for (const auto& [sig, tpl] : merged) {
        TemplateId id = template_id(tpl);
        reg.templates.emplace(id, tpl);
        by_sig.insert_or_assign(sig, std::move(id));
    }

    entry.specialized.assign(by_sig.begin(), by_sig.end());
    std::stable_sort(entry.specialized.begin(), entry.specialized.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
        return a.second < b.second;
    });
}

// ---------------------------------------------------------------------------
// Pruning

void prune_and_dedup(Registry& reg, const FragmentConfig& config, const std::map<std::string, PathStats>& stats) {
    validate_config(config);

    std::set<TemplateId> roots;
    for (const auto& [name, entry] : reg.docs) roots.insert(entry.root);

    // non-root templates under the size floor go away everywhere
    std::set<TemplateId> condemned;
    for (const auto& [id, tpl] : reg.templates)
        if (!roots.count(id) && tpl.literal_bytes < config.min_template_bytes) condemned.insert(id);

    for (auto& [name, entry] : reg.docs) {
        const PathStats* doc_stats = nullptr;
        if (auto it = stats.find(name); it != stats.end()) doc_stats = &it->second;

        for (auto& [key, disp] : entry.arms) {
            if (disp.kind != ArmDisposition::Kind::TemplateRef) continue;
            if (condemned.count(disp.ref)) {
                disp = ArmDisposition::inline_only();
                continue;
            }
            if (doc_stats) {
                auto freq_it = doc_stats->arm_freq.find(key);
                double freq = freq_it == doc_stats->arm_freq.end() ? 0.0 : freq_it->second;
                if (freq + 1e-9 < config.rare_arm_threshold) disp = ArmDisposition::inline_only();
            }
        }

        std::erase_if(entry.specialized,
                      [&](const std::pair<PathSignature, TemplateId>& p) { return condemned.count(p.second) != 0; });
    }

    // garbage collect templates nothing references any more
    std::set<TemplateId> live = roots;
    for (const auto& [name, entry] : reg.docs) {
        for (const auto& [key, disp] : entry.arms)
            if (disp.kind == ArmDisposition::Kind::TemplateRef) live.insert(disp.ref);
        for (const auto& [sig, id] : entry.specialized) live.insert(id);
    }
    std::erase_if(reg.templates, [&](const auto& kv) { return live.count(kv.first) == 0; });
}

}  // namespace vcache
