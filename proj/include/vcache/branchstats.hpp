#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vcache/miniscript.hpp"

namespace vcache {

// Arm choices at specializable branch sites. A site is specializable when its
// If statement is not nested inside any loop, so it fires at most once per run.
using PathSignature = std::map<SiteId, int>;

std::set<SiteId> specializable_sites(const Program& program);

// For each specializable If site, the (ancestor site, arm) choices required to
// reach it. Signatures are kept closed under this ancestry: fixing a nested
// site without fixing the arms that lead to it would fix nothing.
using IfAncestry = std::map<SiteId, std::vector<std::pair<SiteId, int>>>;
IfAncestry if_ancestry(const Program& program);

bool signature_closed(const PathSignature& sig, const IfAncestry& ancestry);

// true when every (site, arm) choice in the signature appears in the trace
bool consistent_with(const PathSignature& sig, const RunTrace& trace);

struct PathStats {
    int run_count = 0;
    // share of runs taking (site, arm); for sites inside loops each run
    // contributes its per-run fraction, so arms still sum to at most 1
    std::map<std::pair<SiteId, int>, double> arm_freq;
    // frequency of each observed full per-run signature
    std::map<PathSignature, double> signature_freq;
};

// Fraction of runs whose signature extends (or equals) the restriction.
double restriction_freq(const PathStats& stats, const PathSignature& restriction);

// Append-only JSON Lines trace store, one run per line.
class TraceStore {
public:
    explicit TraceStore(std::filesystem::path file) : file_(std::move(file)) {}

    const std::filesystem::path& path() const { return file_; }

    void append(const RunTrace& trace);

    // Snapshot read: only the complete lines present at call time.
    std::vector<RunTrace> read_all() const;

private:
    std::filesystem::path file_;
    std::mutex mu_;
};

std::string trace_to_json(const RunTrace& trace);
RunTrace trace_from_json(const std::string& line);

// Validates the trace's sites against the program, then appends it.
void record_run(TraceStore& store, const RunTrace& trace, const Program& program);

PathStats compute_stats(const std::vector<RunTrace>& traces, const Program& program);
PathStats compute_stats(const TraceStore& store, const std::string& doc, const Program& program);

}  // namespace vcache
