#include "vcache/harness.hpp"

#include <sstream>

#include <json.hpp>

#include "vcache/bindinggen.hpp"
#include "vcache/error.hpp"
#include "vcache/fsutil.hpp"

namespace vcache {

SimMode sim_mode_from_name(const std::string& name) {
    if (name == "brute") return SimMode::Brute;
    if (name == "pruned") return SimMode::Pruned;
    if (name == "optimized") return SimMode::Optimized;
    fail(ErrorKind::BadConfig, "unknown mode '" + name + "' (expected brute, pruned, or optimized)");
}

std::string sim_mode_name(SimMode mode) {
    switch (mode) {
        case SimMode::Brute: return "brute";
        case SimMode::Pruned: return "pruned";
        case SimMode::Optimized: return "optimized";
    }
    return "brute";
}

Env env_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, "malformed environment JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) fail(ErrorKind::Io, "environment JSON must be an object");
    Env env;
    for (const auto& [name, value] : j.items()) {
        if (value.is_string()) {
            env[name] = Value::of(value.get<std::string>());
        } else if (value.is_array()) {
            std::vector<std::string> list;
            for (const auto& elem : value) {
                if (!elem.is_string()) fail(ErrorKind::Io, "environment list '" + name + "' must hold strings");
                list.push_back(elem.get<std::string>());
            }
            env[name] = Value::of_list(std::move(list));
        } else {
            fail(ErrorKind::Io, "environment entry '" + name + "' must be a string or a list of strings");
        }
    }
    return env;
}

Env load_env_file(const std::filesystem::path& file) {
    return env_from_json_text(read_file(file));
}

WorkloadSpec load_workload(const std::filesystem::path& file) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, "malformed workload JSON: " + std::string(e.what()));
    }

    WorkloadSpec spec;
    const std::filesystem::path base = file.parent_path();
    try {
        spec.script = base / j.at("script").get<std::string>();
        spec.doc = j.value("doc", spec.script.stem().string());
        spec.mode = sim_mode_from_name(j.value("mode", "brute"));
        if (j.contains("config")) {
            const auto& c = j.at("config");
            spec.config.min_template_bytes = c.value("min_template_bytes", spec.config.min_template_bytes);
            spec.config.rare_arm_threshold = c.value("rare_arm_threshold", spec.config.rare_arm_threshold);
            spec.config.dominant_path_threshold =
                c.value("dominant_path_threshold", spec.config.dominant_path_threshold);
            spec.config.min_runs = c.value("min_runs", spec.config.min_runs);
        }
        spec.header_overhead_bytes = j.value("header_overhead_bytes", std::size_t{0});
        for (const auto& request : j.at("requests")) {
            if (request.is_string())
                spec.requests.push_back(load_env_file(base / request.get<std::string>()));
            else
                spec.requests.push_back(env_from_json_text(request.dump()));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, "malformed workload JSON: " + std::string(e.what()));
    }
    if (spec.requests.empty()) fail(ErrorKind::BadConfig, "workload has no requests");
    return spec;
}

std::string RegistryFetcher::fetch(const std::string& url) {
    const TemplateDoc* tpl = find_template(reg_, url);
    if (!tpl) fail(ErrorKind::FetchFailed, url);
    return serialize(*tpl);
}

Report simulate(const WorkloadSpec& workload) {
    validate_config(workload.config);
    if (workload.requests.empty()) fail(ErrorKind::BadConfig, "workload has no requests");

    Program program = parse_script(read_file(workload.script));
    std::string source = to_source(program);

    Registry reg;
    register_document(reg, workload.doc, source, fragment_brute(program, workload.config));

    if (workload.mode == SimMode::Pruned) {
        prune_and_dedup(reg, workload.config);
    } else if (workload.mode == SimMode::Optimized) {
        // the workload itself is the trace population
        std::vector<RunTrace> traces;
        traces.reserve(workload.requests.size());
        for (const Env& env : workload.requests) {
            auto [output, trace] = trace_run(program, env);
            (void)output;
            trace.doc = workload.doc;
            traces.push_back(std::move(trace));
        }
        PathStats stats = compute_stats(traces, program);
        attach_specializations(reg, workload.doc, specialize(program, stats, workload.config));
        prune_and_dedup(reg, workload.config, {{workload.doc, stats}});
    }

    MemoryTemplateCache cache;  // cold
    RegistryFetcher fetcher(reg);

    Report report;
    for (std::size_t i = 0; i < workload.requests.size(); ++i) {
        const Env& env = workload.requests[i];
        std::string oracle;
        RequestRow row;
        try {
            oracle = escape_reserved(interpret(program, env));
            row.baseline_bytes = oracle.size();

            BindingResult result = generate_binding(program, env, reg, workload.doc);
            row.binding_bytes = result.binding_bytes;

            FetchListStats fetch_stats;
            TemplateMap templates = fetch_list(generate_list(result.binding), cache, fetcher, &fetch_stats);
            row.template_bytes_fetched = fetch_stats.bytes_fetched;
            row.templates_fetched = fetch_stats.fetches;
            row.cache_hits = fetch_stats.cache_hits;

            std::string rebuilt = plug(result.binding, templates);
            if (rebuilt != oracle)
                fail(ErrorKind::ReconstructionMismatch, "plugged output differs from the interpreter");
        } catch (const Error& e) {
            fail(e.kind(), "request " + std::to_string(i) + ": " + e.what());
        }
        report.rows.push_back(row);
    }

    for (const RequestRow& row : report.rows) {
        report.baseline_total += row.baseline_bytes;
        report.binding_total += row.binding_bytes;
        report.template_total += row.template_bytes_fetched;
    }
    report.vcache_total = report.binding_total + report.template_total;
    if (workload.header_overhead_bytes > 0) {
        // one exchange for the binding plus one per template actually fetched
        for (const RequestRow& row : report.rows) {
            std::size_t exchanges = 1 + static_cast<std::size_t>(row.templates_fetched);
            report.vcache_total += workload.header_overhead_bytes * exchanges;
            report.baseline_total += workload.header_overhead_bytes;
        }
    }
    report.savings_ratio =
        report.baseline_total == 0 ? 0.0 : 1.0 - static_cast<double>(report.vcache_total) / report.baseline_total;
    return report;
}

std::string report_json(const Report& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const RequestRow& row : report.rows)
        rows.push_back({{"baseline_bytes", row.baseline_bytes},
                        {"binding_bytes", row.binding_bytes},
                        {"template_bytes_fetched", row.template_bytes_fetched},
                        {"templates_fetched", row.templates_fetched},
                        {"cache_hits", row.cache_hits}});
    nlohmann::json j{{"requests", std::move(rows)},
                     {"totals",
                      {{"baseline", report.baseline_total},
                       {"binding", report.binding_total},
                       {"template", report.template_total},
                       {"vcache", report.vcache_total}}},
                     {"savings_ratio", report.savings_ratio}};
    return j.dump(2) + "\n";
}

std::string report_csv(const Report& report) {
    std::ostringstream out;
    out << "request,baseline_bytes,binding_bytes,template_bytes_fetched,templates_fetched,cache_hits\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const RequestRow& row = report.rows[i];
        out << i << ',' << row.baseline_bytes << ',' << row.binding_bytes << ',' << row.template_bytes_fetched << ','
            << row.templates_fetched << ',' << row.cache_hits << '\n';
    }
    return out.str();
}

}  // namespace vcache
