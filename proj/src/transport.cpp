#include "vcache/transport.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vcache/bindinggen.hpp"
#include "vcache/error.hpp"
#include "vcache/fsutil.hpp"
#include "vcache/miniscript.hpp"

namespace vcache {

namespace {

constexpr const char* kTextPlain = "text/plain; charset=utf-8";

Env env_from_params(const httplib::Params& params) {
    Env env;
    for (auto it = params.begin(); it != params.end();) {
        auto range_end = params.upper_bound(it->first);
        std::vector<std::string> values;
        for (auto v = it; v != range_end; ++v) values.push_back(v->second);
        if (values.size() == 1)
            env[it->first] = Value::of(std::move(values.front()));
        else
            env[it->first] = Value::of_list(std::move(values));
        it = range_end;
    }
    return env;
}

// "http://host:port/path?query" -> ("http://host:port", "/path?query")
std::pair<std::string, std::string> split_origin(const std::string& url) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) fail(ErrorKind::Network, "expected an http:// url: " + url);
    std::size_t path_start = url.find('/', scheme.size());
    if (path_start == std::string::npos) fail(ErrorKind::Network, "url has no path: " + url);
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string access_log_json(const AccessLogEntry& entry) {
    return nlohmann::json{{"method", entry.method}, {"path", entry.path}, {"status", entry.status},
                          {"bytes", entry.bytes}}
        .dump();
}

// ---------------------------------------------------------------------------
// Disk cache

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path DiskCache::file_for(const std::string& url) const {
    std::string hash = hash_from_template_url(url);
    if (hash.empty()) fail(ErrorKind::Io, "not a template url: " + url);
    return dir_ / (hash + ".vct");
}

bool DiskCache::has(const std::string& url) { return std::filesystem::exists(file_for(url)); }

TemplateDoc DiskCache::get(const std::string& url) {
    std::filesystem::path file = file_for(url);
    if (!std::filesystem::exists(file)) fail(ErrorKind::MissingTemplate, url);
    return parse_template(read_file(file));
}

void DiskCache::put(const std::string& url, const TemplateDoc& doc) {
    write_file_atomic(file_for(url), serialize(doc));
}

// ---------------------------------------------------------------------------
// HTTP fetcher

std::string HttpFetcher::fetch(const std::string& url) {
    httplib::Client client(origin_);
    httplib::Result res = client.Get(url);
    if (!res) fail(ErrorKind::FetchFailed, url + ": " + httplib::to_string(res.error()));
    if (res->status != 200) fail(ErrorKind::FetchFailed, url + ": status " + std::to_string(res->status));
    return res->body;
}

// ---------------------------------------------------------------------------
// Server

struct Server::Impl {
    Registry reg;
    std::map<std::string, Program> programs;
    std::string host;
    int requested_port = 0;
    int bound_port = -1;

    httplib::Server svr;
    std::thread worker;

    mutable std::mutex log_mu;
    std::vector<AccessLogEntry> log;
    std::ofstream log_file;

    void record(const httplib::Request& req, const httplib::Response& res) {
        AccessLogEntry entry{req.method, req.path, res.status, res.body.size()};
        std::lock_guard<std::mutex> lock(log_mu);
        if (log_file.is_open()) {
            log_file << access_log_json(entry) << '\n';
            log_file.flush();
        }
        log.push_back(std::move(entry));
    }

    void route() {
        svr.Get(R"(/tpl/([0-9a-f]{16})\.vct)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string url = "/tpl/" + req.matches[1].str() + ".vct";
            const TemplateDoc* tpl = find_template(reg, url);
            if (!tpl) {
                res.status = 404;
                res.set_content("no such template\n", kTextPlain);
                return;
            }
            res.set_header("Cache-Control", "max-age=31536000, immutable");
            res.set_content(serialize(*tpl), kTextPlain);
        });

        svr.Get(R"(/doc/([A-Za-z0-9._-]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string name = req.matches[1].str();
            auto program = programs.find(name);
            if (program == programs.end() || !reg.docs.count(name)) {
                res.status = 404;
                res.set_content("no such document\n", kTextPlain);
                return;
            }
            try {
                BindingResult result = generate_binding(program->second, env_from_params(req.params), reg, name);
                res.set_header("Cache-Control", "no-store");
                res.set_content(serialize(result.binding), kTextPlain);
            } catch (const Error& e) {
                res.status = 500;
                res.set_content(std::string(error_kind_name(e.kind())) + ": " + e.what() + "\n", kTextPlain);
            }
        });

        svr.Get(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.status = 404;
            res.set_content("not found\n", kTextPlain);
        });

        svr.set_logger([this](const httplib::Request& req, const httplib::Response& res) { record(req, res); });
    }
};

Server::Server(Registry reg, std::string host, int port) : impl_(std::make_unique<Impl>()) {
    impl_->reg = std::move(reg);
    impl_->host = std::move(host);
    impl_->requested_port = port;
    for (const auto& [name, source] : impl_->reg.scripts) impl_->programs.emplace(name, parse_script(source));
    impl_->route();
}

Server::~Server() { stop(); }

void Server::set_log_file(std::filesystem::path file) {
    std::lock_guard<std::mutex> lock(impl_->log_mu);
    impl_->log_file.open(file, std::ios::app | std::ios::binary);
    if (!impl_->log_file) fail(ErrorKind::Io, "cannot open access log " + file.string());
}

void Server::start() {
    if (impl_->worker.joinable()) return;  // already serving
    if (impl_->requested_port == 0) {
        impl_->bound_port = impl_->svr.bind_to_any_port(impl_->host);
        if (impl_->bound_port < 0) fail(ErrorKind::Network, "cannot bind " + impl_->host);
    } else {
        if (!impl_->svr.bind_to_port(impl_->host, impl_->requested_port))
            fail(ErrorKind::Network, "cannot bind " + impl_->host + ":" + std::to_string(impl_->requested_port));
        impl_->bound_port = impl_->requested_port;
    }
    impl_->worker = std::thread([this] { impl_->svr.listen_after_bind(); });
    impl_->svr.wait_until_ready();
}

void Server::stop() {
    if (!impl_ || !impl_->worker.joinable()) return;
    impl_->svr.stop();
    impl_->worker.join();
}

int Server::port() const { return impl_->bound_port; }

std::string Server::origin() const { return "http://" + impl_->host + ":" + std::to_string(impl_->bound_port); }

std::vector<AccessLogEntry> Server::log_snapshot() const {
    std::lock_guard<std::mutex> lock(impl_->log_mu);
    return impl_->log;
}

// ---------------------------------------------------------------------------
// Client-side render

std::string fetch_render(const std::string& doc_url, const std::filesystem::path& cache_dir) {
    auto [origin, path] = split_origin(doc_url);

    httplib::Client client(origin);
    httplib::Result res = client.Get(path);
    if (!res) fail(ErrorKind::Network, doc_url + ": " + httplib::to_string(res.error()));
    if (res->status != 200) fail(ErrorKind::Network, doc_url + ": status " + std::to_string(res->status));

    BindingDoc binding = parse_binding(res->body);
    DiskCache cache(cache_dir);
    HttpFetcher fetcher(origin);
    TemplateMap templates = fetch_list(generate_list(binding), cache, fetcher);
    return plug(binding, templates);
}

}  // namespace vcache
