#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vcache/branchstats.hpp"
#include "vcache/docmodel.hpp"
#include "vcache/miniscript.hpp"

namespace vcache {

struct FragmentConfig {
    std::size_t min_template_bytes = 50;   // smaller non-root templates are inlined
    double rare_arm_threshold = 0.05;      // arms observed less often than this are inlined
    double dominant_path_threshold = 0.6;  // signatures at least this frequent get merged templates
    int min_runs = 100;                    // traces required before specialization kicks in
};

// Throws BadConfig when thresholds are out of range or inconsistent.
void validate_config(const FragmentConfig& config);

struct ArmDisposition {
    enum class Kind { TemplateRef, InlineOnly };
    Kind kind = Kind::TemplateRef;
    TemplateId ref;  // meaningful only for TemplateRef

    static ArmDisposition template_ref(TemplateId id) { return {Kind::TemplateRef, std::move(id)}; }
    static ArmDisposition inline_only() { return {Kind::InlineOnly, {}}; }
    bool operator==(const ArmDisposition&) const = default;
};

using ArmKey = std::pair<SiteId, int>;  // (branch site, arm index)

struct DispatchEntry {
    TemplateId root;
    std::map<ArmKey, ArmDisposition> arms;
    // kept sorted: descending signature size, ties by ascending TemplateId
    std::vector<std::pair<PathSignature, TemplateId>> specialized;

    bool operator==(const DispatchEntry&) const = default;
};

struct Registry {
    std::map<TemplateId, TemplateDoc> templates;  // content-addressed store
    std::map<std::string, DispatchEntry> docs;
    std::map<std::string, std::string> scripts;  // doc name -> source text

    bool operator==(const Registry&) const = default;
};

// Template for a wire URL, or null when the registry holds no such template.
const TemplateDoc* find_template(const Registry& reg, const std::string& url);

// One document's brute-force decomposition: a root template with a gap at
// every variable print and branch site plus one template per branch arm,
// loop bodies inlined as loop regions.
struct FragmentResult {
    TemplateId root;
    std::map<ArmKey, ArmDisposition> arms;  // all TemplateRef at this stage
    std::map<TemplateId, TemplateDoc> templates;
};

FragmentResult fragment_brute(const Program& program, const FragmentConfig& config);

// Install a fragmented document in the registry (replacing any previous
// entry under the same name). Identical templates collapse automatically
// because the store is content addressed.
void register_document(Registry& reg, const std::string& doc, const std::string& source,
                       const FragmentResult& fragment);

// Template construction shared by brute fragmentation and specialization:
// walk the statements emitting literals/gaps/loops, with the arms of any
// branch site fixed by `sig` inlined in place of its gap.
TemplateDoc build_template(const std::vector<Stmt>& stmts, const PathSignature& sig);

// Merged templates for the dominant path signatures observed in stats.
// Requires stats over at least config.min_runs runs (InsufficientRuns).
std::vector<std::pair<PathSignature, TemplateDoc>> specialize(const Program& program,
                                                              const PathStats& stats,
                                                              const FragmentConfig& config);

void attach_specializations(Registry& reg, const std::string& doc,
                            const std::vector<std::pair<PathSignature, TemplateDoc>>& merged);

// Size pruning (non-root templates under min_template_bytes become
// InlineOnly), rare-arm pruning for documents with stats (arm frequency
// below rare_arm_threshold), dropping of under-size specializations, and
// garbage collection of unreferenced templates. Idempotent.
void prune_and_dedup(Registry& reg, const FragmentConfig& config,
                     const std::map<std::string, PathStats>& stats = {});

}  // namespace vcache
