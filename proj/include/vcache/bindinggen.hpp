#pragma once

#include <string>
#include <vector>

#include "vcache/branchstats.hpp"
#include "vcache/docmodel.hpp"
#include "vcache/fragmentor.hpp"
#include "vcache/miniscript.hpp"

namespace vcache {

struct BindingResult {
    BindingDoc binding;
    std::vector<TemplateId> referenced;  // every template the binding pulls in
    std::size_t binding_bytes = 0;       // serialized wire length
};

// The template a request is served with, plus the signature baked into it
// (empty for the root).
struct Selection {
    TemplateId tpl;
    PathSignature signature;
};

// Most specific specialized template consistent with the trace; root when
// none matches. The specialized list is kept sorted by descending signature
// size with TemplateId tie-breaks, so the first consistent entry wins.
Selection select_template(const DispatchEntry& entry, const RunTrace& trace);

// Execute the program once for this request and shape its dynamic output
// into a binding over the selected template.
BindingResult generate_binding(const Program& program, const Env& env, const Registry& reg,
                               const std::string& doc);

// Same walk with the template choice forced, for callers comparing
// alternatives (e.g. root vs specialized for one run).
BindingResult generate_binding_for(const Program& program, const Env& env, const Registry& reg,
                                   const std::string& doc, const Selection& selection);

}  // namespace vcache
