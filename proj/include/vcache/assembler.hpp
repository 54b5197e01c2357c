#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "vcache/docmodel.hpp"

namespace vcache {

// Client-side reassembly: discover the templates a binding needs, retrieve
// them through a cache, and expand the binding back into the final document.

class TemplateCache {
public:
    virtual ~TemplateCache() = default;
    virtual bool has(const std::string& url) = 0;
    virtual TemplateDoc get(const std::string& url) = 0;  // throws MissingTemplate when absent
    virtual void put(const std::string& url, const TemplateDoc& doc) = 0;
};

class TemplateFetcher {
public:
    virtual ~TemplateFetcher() = default;
    virtual std::string fetch(const std::string& url) = 0;  // wire bytes; throws FetchFailed
};

class MemoryTemplateCache final : public TemplateCache {
public:
    bool has(const std::string& url) override;
    TemplateDoc get(const std::string& url) override;
    void put(const std::string& url, const TemplateDoc& doc) override;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, TemplateDoc> entries_;
};

using TemplateMap = std::map<std::string, TemplateDoc>;

// Every template URL referenced by the binding and its nested bindings,
// first-occurrence order, deduplicated.
std::vector<std::string> generate_list(const BindingDoc& binding);

struct FetchListStats {
    int cache_hits = 0;
    int fetches = 0;
    std::size_t bytes_fetched = 0;  // wire bytes pulled through the fetcher
};

// Resolve urls through the cache, fetching and storing only the misses.
TemplateMap fetch_list(const std::vector<std::string>& urls, TemplateCache& cache,
                       TemplateFetcher& fetcher, FetchListStats* stats = nullptr);

// Expand the binding against its templates into the final document.
// Pairing is level-wise: the i-th marker (gap or loop) at each nesting level
// of the template consumes the i-th binding item at that level; loop bodies
// are expanded once per run with the run's items feeding the body's markers.
std::string plug(const BindingDoc& binding, const TemplateMap& templates);

}  // namespace vcache
