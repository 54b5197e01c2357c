#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "vcache/assembler.hpp"
#include "vcache/bindinggen.hpp"
#include "vcache/branchstats.hpp"
#include "vcache/error.hpp"
#include "vcache/fragmentor.hpp"
#include "vcache/fsutil.hpp"
#include "vcache/harness.hpp"
#include "vcache/registry_io.hpp"
#include "vcache/transport.hpp"

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop_requested{false};

void on_signal(int) { g_stop_requested = true; }

int run_fragment(const std::string& script_path, const std::string& out_dir, const std::string& name,
                 const vcache::FragmentConfig& config) {
    vcache::validate_config(config);
    std::string source = vcache::read_file(script_path);
    vcache::Program program = vcache::parse_script(source);

    vcache::Registry reg;
    if (fs::exists(fs::path(out_dir) / "dispatch.json")) reg = vcache::load_registry(out_dir).registry;

    std::string doc = name.empty() ? fs::path(script_path).stem().string() : name;
    vcache::register_document(reg, doc, source, vcache::fragment_brute(program, config));
    vcache::prune_and_dedup(reg, config);
    vcache::save_registry(reg, config, out_dir);

    std::cout << "registered '" << doc << "' (root " << reg.docs.at(doc).root.hash << ", " << reg.templates.size()
              << " template(s) in " << out_dir << ")\n";
    return 0;
}

int run_stats(const std::string& registry_dir, const std::string& traces_path) {
    vcache::LoadedRegistry loaded = vcache::load_registry(registry_dir);
    vcache::Registry& reg = loaded.registry;
    fs::path traces = traces_path.empty() ? vcache::traces_file(registry_dir) : fs::path(traces_path);
    vcache::TraceStore store{traces};

    std::map<std::string, vcache::PathStats> stats_by_doc;
    for (const auto& [doc, entry] : reg.docs) {
        (void)entry;
        vcache::Program program = vcache::parse_script(reg.scripts.at(doc));
        vcache::PathStats stats;
        try {
            stats = vcache::compute_stats(store, doc, program);
        } catch (const vcache::Error& e) {
            if (e.kind() == vcache::ErrorKind::EmptyStore) {
                std::cout << doc << ": no traces, skipped\n";
                continue;
            }
            throw;
        }
        try {
            vcache::attach_specializations(reg, doc, vcache::specialize(program, stats, loaded.config));
        } catch (const vcache::Error& e) {
            if (e.kind() != vcache::ErrorKind::InsufficientRuns) throw;
            std::cout << doc << ": " << stats.run_count << " run(s), below min_runs, no specialization\n";
            continue;
        }
        stats_by_doc.emplace(doc, std::move(stats));
        std::cout << doc << ": " << stats_by_doc.at(doc).run_count << " run(s), "
                  << reg.docs.at(doc).specialized.size() << " specialized template(s)\n";
    }

    vcache::prune_and_dedup(reg, loaded.config, stats_by_doc);
    vcache::save_registry(reg, loaded.config, registry_dir);
    return 0;
}

int run_bindgen(const std::string& registry_dir, const std::string& doc, const std::string& env_path, bool record) {
    vcache::LoadedRegistry loaded = vcache::load_registry(registry_dir);
    auto script = loaded.registry.scripts.find(doc);
    if (script == loaded.registry.scripts.end())
        vcache::fail(vcache::ErrorKind::UnregisteredDoc, "document '" + doc + "' is not registered");
    vcache::Program program = vcache::parse_script(script->second);
    vcache::Env env = vcache::load_env_file(env_path);

    vcache::BindingResult result = vcache::generate_binding(program, env, loaded.registry, doc);
    if (record) {
        vcache::TraceStore store{vcache::traces_file(registry_dir)};
        auto [output, trace] = vcache::trace_run(program, env);
        (void)output;
        trace.doc = doc;
        vcache::record_run(store, trace, program);
    }
    std::cout << vcache::serialize(result.binding);
    return 0;
}

int run_plug(const std::string& binding_path, const std::string& cache_dir) {
    struct OfflineFetcher final : vcache::TemplateFetcher {
        std::string fetch(const std::string& url) override {
            vcache::fail(vcache::ErrorKind::MissingTemplate, url + " (not in cache; offline plug has no transport)");
        }
    };

    vcache::BindingDoc binding = vcache::parse_binding(vcache::read_file(binding_path));
    vcache::DiskCache cache{fs::path(cache_dir)};
    OfflineFetcher fetcher;
    vcache::TemplateMap templates = vcache::fetch_list(vcache::generate_list(binding), cache, fetcher);
    std::cout << vcache::plug(binding, templates);
    return 0;
}

int run_simulate(const std::string& workload_path, const std::string& report_path, bool csv) {
    vcache::WorkloadSpec spec = vcache::load_workload(workload_path);
    vcache::Report report = vcache::simulate(spec);
    if (!report_path.empty()) vcache::write_file_atomic(report_path, vcache::report_json(report));
    std::cout << (csv ? vcache::report_csv(report) : vcache::report_json(report));
    return 0;
}

int run_serve(const std::string& registry_dir, const std::string& addr, const std::string& log_path) {
    std::size_t colon = addr.rfind(':');
    if (colon == std::string::npos)
        vcache::fail(vcache::ErrorKind::BadConfig, "--addr must look like HOST:PORT, got '" + addr + "'");
    std::string host = addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        vcache::fail(vcache::ErrorKind::BadConfig, "bad port in --addr '" + addr + "'");
    }

    vcache::LoadedRegistry loaded = vcache::load_registry(registry_dir);
    vcache::Server server(std::move(loaded.registry), host, port);
    if (!log_path.empty()) server.set_log_file(log_path);
    server.start();
    std::cout << "serving on " << server.origin() << " (Ctrl-C to stop)\n";

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return 0;
}

int run_fetch(const std::string& url, const std::string& cache_dir) {
    std::cout << vcache::fetch_render(url, cache_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vcache: dynamic documents as cacheable templates plus per-request bindings"};
    app.require_subcommand(1);

    // fragment
    std::string script_path, out_dir = "registry", doc_name;
    vcache::FragmentConfig config;
    CLI::App* fragment = app.add_subcommand("fragment", "Decompose a script into a template registry");
    fragment->add_option("script", script_path, "MiniScript source file (.ms)")->required();
    fragment->add_option("--out", out_dir, "registry directory (created or merged into)");
    fragment->add_option("--min-bytes", config.min_template_bytes, "size floor for non-root templates");
    fragment->add_option("--theta", config.dominant_path_threshold, "dominant path threshold");
    fragment->add_option("--phi", config.rare_arm_threshold, "rare arm threshold");
    fragment->add_option("--min-runs", config.min_runs, "runs required before specialization");
    fragment->add_option("--name", doc_name, "document name (default: script stem)");

    // stats
    std::string registry_dir, traces_path;
    CLI::App* stats = app.add_subcommand("stats", "Fold recorded traces into specialized templates");
    stats->add_option("registry", registry_dir, "registry directory")->required();
    stats->add_option("--traces", traces_path, "trace store (default: <registry>/traces.jsonl)");

    // bindgen
    std::string bindgen_registry, bindgen_doc, env_path;
    bool record = false;
    CLI::App* bindgen = app.add_subcommand("bindgen", "Generate the binding for one request");
    bindgen->add_option("registry", bindgen_registry, "registry directory")->required();
    bindgen->add_option("doc", bindgen_doc, "document name")->required();
    bindgen->add_option("--env", env_path, "environment JSON file")->required();
    bindgen->add_flag("--record", record, "append this run to the registry's trace store");

    // plug
    std::string binding_path, plug_cache;
    CLI::App* plug = app.add_subcommand("plug", "Reassemble a document from a binding and cached templates");
    plug->add_option("binding", binding_path, "binding wire file")->required();
    plug->add_option("--cache", plug_cache, "template cache directory")->required();

    // simulate
    std::string workload_path, report_path;
    bool csv = false;
    CLI::App* simulate = app.add_subcommand("simulate", "Replay a workload and report byte savings");
    simulate->add_option("workload", workload_path, "workload JSON file")->required();
    simulate->add_option("--report", report_path, "also write the JSON report here");
    simulate->add_flag("--csv", csv, "print per-request rows as CSV instead of JSON");

    // serve
    std::string serve_registry, addr = "127.0.0.1:8080", log_path;
    CLI::App* serve = app.add_subcommand("serve", "Serve templates and bindings over HTTP");
    serve->add_option("registry", serve_registry, "registry directory")->required();
    serve->add_option("--addr", addr, "HOST:PORT to bind");
    serve->add_option("--log", log_path, "access log file (JSON lines)");

    // fetch
    std::string fetch_url, fetch_cache;
    CLI::App* fetch = app.add_subcommand("fetch", "Fetch a document url, reassemble it, print it");
    fetch->add_option("url", fetch_url, "document url, e.g. http://127.0.0.1:8080/doc/hello?name=World")->required();
    fetch->add_option("--cache", fetch_cache, "disk template cache directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (fragment->parsed()) return run_fragment(script_path, out_dir, doc_name, config);
        if (stats->parsed()) return run_stats(registry_dir, traces_path);
        if (bindgen->parsed()) return run_bindgen(bindgen_registry, bindgen_doc, env_path, record);
        if (plug->parsed()) return run_plug(binding_path, plug_cache);
        if (simulate->parsed()) return run_simulate(workload_path, report_path, csv);
        if (serve->parsed()) return run_serve(serve_registry, addr, log_path);
        if (fetch->parsed()) return run_fetch(fetch_url, fetch_cache);
    } catch (const vcache::Error& e) {
        std::cerr << vcache::error_kind_name(e.kind()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
