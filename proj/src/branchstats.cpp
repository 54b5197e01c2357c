#include "vcache/branchstats.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "vcache/error.hpp"

namespace vcache {

namespace {

void collect(const std::vector<Stmt>& stmts, bool in_loop,
             std::vector<std::pair<SiteId, int>>& chain, std::set<SiteId>& sites, IfAncestry& ancestry) {
    for (const Stmt& s : stmts) {
        if (s.kind == Stmt::Kind::If) {
            if (!in_loop) {
                sites.insert(s.site);
                ancestry[s.site] = chain;
            }
            chain.emplace_back(s.site, 0);
            collect(s.then_arm, in_loop, chain, sites, ancestry);
            chain.back().second = 1;
            collect(s.else_arm, in_loop, chain, sites, ancestry);
            chain.pop_back();
        } else if (s.kind == Stmt::Kind::For) {
            collect(s.body, true, chain, sites, ancestry);
        }
    }
}

}  // namespace

std::set<SiteId> specializable_sites(const Program& program) {
    std::vector<std::pair<SiteId, int>> chain;
    std::set<SiteId> sites;
    IfAncestry ancestry;
    collect(program.stmts, false, chain, sites, ancestry);
    return sites;
}

IfAncestry if_ancestry(const Program& program) {
    std::vector<std::pair<SiteId, int>> chain;
    std::set<SiteId> sites;
    IfAncestry ancestry;
    collect(program.stmts, false, chain, sites, ancestry);
    return ancestry;
}

bool signature_closed(const PathSignature& sig, const IfAncestry& ancestry) {
    for (const auto& [site, arm] : sig) {
        (void)arm;
        auto it = ancestry.find(site);
        if (it == ancestry.end()) return false;  // not a specializable site at all
        for (const auto& [anc, on_path] : it->second) {
            auto fixed = sig.find(anc);
            if (fixed == sig.end() || fixed->second != on_path) return false;
        }
    }
    return true;
}

bool consistent_with(const PathSignature& sig, const RunTrace& trace) {
    for (const auto& [site, arm] : sig) {
        bool found = false;
        for (const auto& [s, a] : trace.events) {
            if (s == site && a == arm) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

double restriction_freq(const PathStats& stats, const PathSignature& restriction) {
    double total = 0.0;
    for (const auto& [sig, freq] : stats.signature_freq) {
        bool extends = true;
        for (const auto& [site, arm] : restriction) {
            auto it = sig.find(site);
            if (it == sig.end() || it->second != arm) {
                extends = false;
                break;
            }
        }
        if (extends) total += freq;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Trace store

std::string trace_to_json(const RunTrace& trace) {
    nlohmann::json j;
    j["doc"] = trace.doc;
    auto& events = j["events"] = nlohmann::json::array();
    for (const auto& [site, arm] : trace.events) events.push_back({site, arm});
    auto& loops = j["loops"] = nlohmann::json::array();
    for (const auto& [site, count] : trace.loop_counts) loops.push_back({site, count});
    j["env"] = trace.env_digest;
    return j.dump();
}

RunTrace trace_from_json(const std::string& line) {
    RunTrace trace;
    try {
        nlohmann::json j = nlohmann::json::parse(line);
        trace.doc = j.at("doc").get<std::string>();
        for (const auto& pair : j.at("events"))
            trace.events.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
        for (const auto& pair : j.at("loops"))
            trace.loop_counts.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
        trace.env_digest = j.at("env").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, std::string("malformed trace line: ") + e.what());
    }
    return trace;
}

void TraceStore::append(const RunTrace& trace) {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(file_, std::ios::app | std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open trace store " + file_.string());
    out << trace_to_json(trace) << '\n';
    out.flush();
    if (!out) fail(ErrorKind::Io, "write to trace store failed: " + file_.string());
}

std::vector<RunTrace> TraceStore::read_all() const {
    std::vector<RunTrace> traces;
    std::ifstream in(file_, std::ios::binary);
    if (!in) return traces;  // no store yet: no runs
    // snapshot: take the current size and consume only complete lines within it
    in.seekg(0, std::ios::end);
    auto limit = in.tellg();
    in.seekg(0, std::ios::beg);
    std::string content(static_cast<std::size_t>(limit), '\0');
    in.read(content.data(), limit);
    content.resize(static_cast<std::size_t>(in.gcount()));
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) break;  // trailing partial line: not yet durable
        if (end > start) traces.push_back(trace_from_json(content.substr(start, end - start)));
        start = end + 1;
    }
    return traces;
}

// ---------------------------------------------------------------------------

namespace {

void validate_trace(const RunTrace& trace, const Program& program) {
    const std::vector<SiteInfo> sites = site_table(program);
    auto check = [&](SiteId site, Stmt::Kind kind, const char* what) {
        if (site < 0 || static_cast<std::size_t>(site) >= sites.size() || sites[static_cast<std::size_t>(site)].kind != kind)
            fail(ErrorKind::UnknownSite, std::string(what) + " site " + std::to_string(site) +
                                             " does not name a matching statement");
    };
    for (const auto& [site, arm] : trace.events) {
        check(site, Stmt::Kind::If, "branch");
        if (arm != 0 && arm != 1)
            fail(ErrorKind::UnknownSite, "branch site " + std::to_string(site) + " has no arm " + std::to_string(arm));
    }
    for (const auto& [site, count] : trace.loop_counts) {
        check(site, Stmt::Kind::For, "loop");
        if (count < 0) fail(ErrorKind::UnknownSite, "loop site " + std::to_string(site) + " has negative count");
    }
}

}  // namespace

void record_run(TraceStore& store, const RunTrace& trace, const Program& program) {
    validate_trace(trace, program);
    store.append(trace);
}

PathStats compute_stats(const std::vector<RunTrace>& traces, const Program& program) {
    if (traces.empty()) fail(ErrorKind::EmptyStore, "no traces to compute statistics from");
    const std::set<SiteId> spec = specializable_sites(program);

    PathStats stats;
    stats.run_count = static_cast<int>(traces.size());
    std::map<std::pair<SiteId, int>, double> share_sum;
    std::map<PathSignature, int> sig_count;

    for (const RunTrace& trace : traces) {
        validate_trace(trace, program);
        std::map<SiteId, int> executions;
        std::map<std::pair<SiteId, int>, int> taken;
        PathSignature sig;
        for (const auto& [site, arm] : trace.events) {
            ++executions[site];
            ++taken[{site, arm}];
            if (spec.count(site)) sig[site] = arm;
        }
        for (const auto& [key, count] : taken)
            share_sum[key] += static_cast<double>(count) / executions[key.first];
        ++sig_count[sig];
    }

    for (const auto& [key, sum] : share_sum) stats.arm_freq[key] = sum / stats.run_count;
    for (const auto& [sig, count] : sig_count)
        stats.signature_freq[sig] = static_cast<double>(count) / stats.run_count;
    return stats;
}

PathStats compute_stats(const TraceStore& store, const std::string& doc, const Program& program) {
    std::vector<RunTrace> all = store.read_all();
    std::vector<RunTrace> mine;
    for (RunTrace& trace : all)
        if (trace.doc == doc) mine.push_back(std::move(trace));
    if (mine.empty()) fail(ErrorKind::EmptyStore, "no traces recorded for document '" + doc + "'");
    return compute_stats(mine, program);
}

}  // namespace vcache
