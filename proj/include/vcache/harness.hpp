#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "vcache/assembler.hpp"
#include "vcache/fragmentor.hpp"
#include "vcache/miniscript.hpp"

namespace vcache {

// How far the fragmentor goes before the replay starts.
enum class SimMode {
    Brute,      // root + all arm templates, no pruning
    Pruned,     // size pruning only (no statistics)
    Optimized,  // trace the whole workload, specialize, prune with statistics
};

SimMode sim_mode_from_name(const std::string& name);  // BadConfig on unknown names
std::string sim_mode_name(SimMode mode);

struct WorkloadSpec {
    std::string doc;               // document name (defaults to the script stem)
    std::filesystem::path script;  // MiniScript source
    SimMode mode = SimMode::Brute;
    FragmentConfig config;
    std::size_t header_overhead_bytes = 0;  // flat per-HTTP-exchange constant
    std::vector<Env> requests;
};

Env env_from_json_text(const std::string& text);
Env load_env_file(const std::filesystem::path& file);

// Workload JSON: {"doc", "script", "mode", "config"?, "header_overhead_bytes"?,
// "requests": [<env file path> | <inline env object>, ...]} — paths are
// resolved relative to the workload file.
WorkloadSpec load_workload(const std::filesystem::path& file);

struct RequestRow {
    std::size_t baseline_bytes = 0;          // full document a plain server would send
    std::size_t binding_bytes = 0;           // per-request binding wire size
    std::size_t template_bytes_fetched = 0;  // template wire bytes pulled on cache misses
    int templates_fetched = 0;               // number of cache misses
    int cache_hits = 0;
};

struct Report {
    std::vector<RequestRow> rows;
    std::size_t baseline_total = 0;
    std::size_t binding_total = 0;
    std::size_t template_total = 0;
    std::size_t vcache_total = 0;  // binding + template + header overhead
    double savings_ratio = 0.0;    // 1 - vcache_total / baseline_total
};

// Serves the workload's templates straight out of a registry.
class RegistryFetcher final : public TemplateFetcher {
public:
    explicit RegistryFetcher(const Registry& reg) : reg_(reg) {}
    std::string fetch(const std::string& url) override;

private:
    const Registry& reg_;
};

// Fragments the script per mode, then replays every request against a cold
// in-memory template cache. Each reconstruction is checked against the
// interpreter before any bytes are counted.
Report simulate(const WorkloadSpec& workload);

std::string report_json(const Report& report);
std::string report_csv(const Report& report);

}  // namespace vcache
