#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vcache/assembler.hpp"
#include "vcache/fragmentor.hpp"

namespace vcache {

struct AccessLogEntry {
    std::string method;
    std::string path;
    int status = 0;
    std::size_t bytes = 0;  // response body size
};

std::string access_log_json(const AccessLogEntry& entry);

// Template cache backed by a directory of <hash>.vct files. Writes go to a
// temp file first and are renamed into place, so concurrent readers never
// see a partial template.
class DiskCache final : public TemplateCache {
public:
    explicit DiskCache(std::filesystem::path dir);

    bool has(const std::string& url) override;
    TemplateDoc get(const std::string& url) override;
    void put(const std::string& url, const TemplateDoc& doc) override;

    std::filesystem::path file_for(const std::string& url) const;

private:
    std::filesystem::path dir_;
};

// Resolves template urls against a single origin, e.g. "http://127.0.0.1:8080".
class HttpFetcher final : public TemplateFetcher {
public:
    explicit HttpFetcher(std::string origin) : origin_(std::move(origin)) {}
    std::string fetch(const std::string& url) override;

private:
    std::string origin_;
};

// Loopback deployment of the pipeline: templates as immutable static
// resources, bindings generated per request.
//
//   GET /tpl/<hash>.vct  -> template bytes, Cache-Control: max-age=31536000, immutable
//   GET /doc/<name>?k=v  -> binding bytes,  Cache-Control: no-store
//
// Query parameters become the request environment; a repeated key forms a
// string list. Everything is text/plain; charset=utf-8; unknown paths 404;
// generation failures 500 with the error name.
class Server {
public:
    // port 0 binds an ephemeral port (see port() after start()).
    explicit Server(Registry reg, std::string host = "127.0.0.1", int port = 0);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Optional JSON Lines sink for the access log; set before start().
    void set_log_file(std::filesystem::path file);

    void start();  // binds and serves on a background thread; throws Network on failure
    void stop();

    int port() const;
    std::string origin() const;  // "http://host:port"

    std::vector<AccessLogEntry> log_snapshot() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// GET the binding at doc_url, resolve its templates through the disk cache
// (HTTP GETs only for the misses), and plug the document back together.
std::string fetch_render(const std::string& doc_url, const std::filesystem::path& cache_dir);

}  // namespace vcache
