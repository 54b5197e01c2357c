#include "vcache/bindinggen.hpp"

#include <optional>

#include "vcache/assembler.hpp"
#include "vcache/error.hpp"

namespace vcache {

Selection select_template(const DispatchEntry& entry, const RunTrace& trace) {
    for (const auto& [sig, id] : entry.specialized)
        if (consistent_with(sig, trace)) return Selection{id, sig};
    return Selection{entry.root, {}};
}

namespace {

std::vector<BNode> fill_nodes(std::string escaped) {
    if (escaped.empty()) return {};
    return {BNode::lit(std::move(escaped))};
}

// Mirrors the template walk: where build_template put a gap, emit the item
// that fills it; where it fixed an arm inline, walk straight through.
struct BindingWalker {
    const DispatchEntry& entry;
    Env& env;

    std::vector<BItem> walk(const std::vector<Stmt>& stmts, const PathSignature& sig) {
        std::vector<BItem> items;
        walk_into(stmts, sig, items);
        return items;
    }

    void walk_into(const std::vector<Stmt>& stmts, const PathSignature& sig, std::vector<BItem>& items) {
        for (const Stmt& s : stmts) {
            switch (s.kind) {
                case Stmt::Kind::Print:
                    if (s.print_expr.is_var)
                        items.push_back(BItem::make_fill(fill_nodes(escape_reserved(env_scalar(env, s.print_expr.text)))));
                    break;
                case Stmt::Kind::If: {
                    int arm = env_scalar(env, s.cond_var) == s.cond_lit ? 0 : 1;
                    const std::vector<Stmt>& arm_stmts = arm == 0 ? s.then_arm : s.else_arm;
                    auto fixed = sig.find(s.site);
                    if (fixed != sig.end()) {
                        if (fixed->second != arm)
                            fail(ErrorKind::ReconstructionMismatch,
                                 "selected template fixes site " + std::to_string(s.site) +
                                     " to an arm this run does not take");
                        // arm is inlined in the template: no item of its own
                        walk_into(arm_stmts, sig, items);
                        break;
                    }
                    auto disp_it = entry.arms.find(ArmKey{s.site, arm});
                    if (disp_it == entry.arms.end())
                        fail(ErrorKind::UnknownSite, "registry has no disposition for site " +
                                                         std::to_string(s.site) + " arm " + std::to_string(arm));
                    const ArmDisposition& disp = disp_it->second;
                    if (disp.kind == ArmDisposition::Kind::TemplateRef) {
                        BindingDoc nested;
                        nested.ref = disp.ref.url;
                        nested.items = walk(arm_stmts, PathSignature{});
                        items.push_back(BItem::make_fill({BNode::nest(std::move(nested))}));
                    } else {
                        items.push_back(BItem::make_fill(fill_nodes(escape_reserved(interpret_stmts(arm_stmts, env)))));
                    }
                    break;
                }
                case Stmt::Kind::For: {
                    std::vector<std::string> elems = env_list(env, s.list_var);
                    std::vector<std::vector<BItem>> runs;
                    runs.reserve(elems.size());
                    std::optional<Value> saved;
                    if (auto it = env.find(s.loop_var); it != env.end()) saved = it->second;
                    for (const std::string& e : elems) {
                        env[s.loop_var] = Value::of(e);
                        runs.push_back(walk(s.body, sig));
                    }
                    if (saved)
                        env[s.loop_var] = *saved;
                    else
                        env.erase(s.loop_var);
                    items.push_back(BItem::make_runs(std::move(runs)));
                    break;
                }
            }
        }
    }
};

BindingResult build_result(const Program& program, const Env& env, const Registry& reg, const std::string& doc,
                           const Selection& selection) {
    auto entry_it = reg.docs.find(doc);
    if (entry_it == reg.docs.end()) fail(ErrorKind::UnregisteredDoc, "document '" + doc + "' is not registered");

    Env scratch = env;
    BindingWalker walker{entry_it->second, scratch};

    BindingResult result;
    result.binding.ref = selection.tpl.url;
    result.binding.items = walker.walk(program.stmts, selection.signature);
    result.binding_bytes = serialize(result.binding).size();
    for (const std::string& url : generate_list(result.binding)) {
        std::string hash = hash_from_template_url(url);
        result.referenced.push_back(TemplateId{std::move(hash), url});
    }
    return result;
}

}  // namespace

BindingResult generate_binding(const Program& program, const Env& env, const Registry& reg,
                               const std::string& doc) {
    auto entry_it = reg.docs.find(doc);
    if (entry_it == reg.docs.end()) fail(ErrorKind::UnregisteredDoc, "document '" + doc + "' is not registered");
    auto [output, trace] = trace_run(program, env);
    (void)output;
    trace.doc = doc;
    Selection selection = select_template(entry_it->second, trace);
    return build_result(program, env, reg, doc, selection);
}

BindingResult generate_binding_for(const Program& program, const Env& env, const Registry& reg,
                                   const std::string& doc, const Selection& selection) {
    return build_result(program, env, reg, doc, selection);
}

}  // namespace vcache
