#pragma once

#include <filesystem>

#include "vcache/fragmentor.hpp"

namespace vcache {

// On-disk layout: <dir>/tpl/<hash>.vct template files plus <dir>/dispatch.json
// describing the documents and the config in force. Run traces accumulate
// alongside in <dir>/traces.jsonl (see TraceStore).

void save_registry(const Registry& reg, const FragmentConfig& config, const std::filesystem::path& dir);

struct LoadedRegistry {
    Registry registry;
    FragmentConfig config;
};

// Loads and verifies: every template file must hash to its own name, and
// every referenced template must be present.
LoadedRegistry load_registry(const std::filesystem::path& dir);

inline std::filesystem::path traces_file(const std::filesystem::path& dir) { return dir / "traces.jsonl"; }

}  // namespace vcache
