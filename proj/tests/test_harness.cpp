#include <doctest.h>

#include <json.hpp>

#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "support/checks.hpp"
#include "vcache/error.hpp"
#include "vcache/fsutil.hpp"
#include "vcache/harness.hpp"

using namespace vcache;
using testsupport::thrown_kind;

namespace {

constexpr const char* kPlainScript =
    "print \"<html><body>a modest amount of fixed page text</body></html>\";\n"
    "print user;\n"
    "for i in items { print \"<li>\"; print i; }\n";

// Same shape plus a branch whose arms are comfortably above the size floor.
constexpr const char* kBranchingScript =
    "print \"<html><body>a modest amount of fixed page text</body></html>\";\n"
    "print user;\n"
    "if tier == \"gold\" {\n"
    "  print \"<div>member perk copy for the gold tier, well over the size floor limit</div>\";\n"
    "} else {\n"
    "  print \"<div>shipping notice for the standard tier, also above the size floor</div>\";\n"
    "}\n"
    "for i in items { print \"<li>\"; print i; }\n";

// Writes a self-contained workload (script + inline envs) into dir.
std::filesystem::path write_workload(const std::filesystem::path& dir, const std::string& mode,
                                     const std::vector<std::string>& inline_envs,
                                     const std::string& extra_fields = "",
                                     const char* script = kPlainScript) {
    write_file_atomic(dir / "page.ms", script);
    std::ostringstream w;
    w << "{\"doc\":\"page\",\"script\":\"page.ms\",\"mode\":\"" << mode << "\"" << extra_fields
      << ",\"requests\":[";
    for (std::size_t i = 0; i < inline_envs.size(); ++i) w << (i ? "," : "") << inline_envs[i];
    w << "]}";
    write_file_atomic(dir / "workload.json", w.str());
    return dir / "workload.json";
}

const std::string kEnvA = R"({"user":"ada","items":["bolt","nut"]})";
const std::string kEnvB = R"({"user":"bo","items":["pin"]})";
const std::string kGold = R"({"user":"ada","tier":"gold","items":["bolt","nut"]})";
const std::string kStd = R"({"user":"bo","tier":"std","items":["pin"]})";

std::size_t vcache_bytes(const RequestRow& r) { return r.binding_bytes + r.template_bytes_fetched; }

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("env json: strings and string lists") {
    Env env = env_from_json_text(R"({"a":"x","xs":["1","2"]})");
    CHECK(env.at("a") == Value::of("x"));
    CHECK(env.at("xs") == Value::of_list({"1", "2"}));
    CHECK(env_from_json_text("{}").empty());

    CHECK(thrown_kind([] { env_from_json_text("not json"); }) == ErrorKind::Io);
    CHECK(thrown_kind([] { env_from_json_text("[]"); }) == ErrorKind::Io);
    CHECK(thrown_kind([] { env_from_json_text(R"({"n":3})"); }) == ErrorKind::Io);
    CHECK(thrown_kind([] { env_from_json_text(R"({"xs":["a",3]})"); }) == ErrorKind::Io);
}

TEST_CASE("mode names round-trip") {
    for (const char* name : {"brute", "pruned", "optimized"})
        CHECK(sim_mode_name(sim_mode_from_name(name)) == name);
    CHECK(thrown_kind([] { sim_mode_from_name("turbo"); }) == ErrorKind::BadConfig);
}

TEST_CASE("load_workload: inline envs and env files mix; paths resolve near the file") {
    testsupport::TempDir dir{"workload"};
    write_file_atomic(dir.path / "env0.json", kEnvA);
    std::filesystem::path file =
        write_workload(dir.path, "brute", {"\"env0.json\"", kEnvB});
    WorkloadSpec spec = load_workload(file);
    CHECK(spec.doc == "page");
    CHECK(spec.mode == SimMode::Brute);
    REQUIRE(spec.requests.size() == 2);
    CHECK(spec.requests[0].at("user") == Value::of("ada"));
    CHECK(spec.requests[1].at("user") == Value::of("bo"));
    CHECK(spec.script.parent_path() == dir.path);
}

TEST_CASE("load_workload: config overrides and overhead are honored") {
    testsupport::TempDir dir{"workload-config"};
    std::filesystem::path file = write_workload(
        dir.path, "optimized", {kEnvA},
        ",\"header_overhead_bytes\":64,\"config\":{\"min_template_bytes\":10,\"min_runs\":1}");
    WorkloadSpec spec = load_workload(file);
    CHECK(spec.mode == SimMode::Optimized);
    CHECK(spec.header_overhead_bytes == 64);
    CHECK(spec.config.min_template_bytes == 10);
    CHECK(spec.config.min_runs == 1);
    CHECK(spec.config.rare_arm_threshold == doctest::Approx(0.05));  // untouched default
}

TEST_CASE("load_workload: an empty request list is rejected") {
    testsupport::TempDir dir{"workload-empty"};
    std::filesystem::path file = write_workload(dir.path, "brute", {});
    CHECK(thrown_kind([&] { load_workload(file); }) == ErrorKind::BadConfig);
}

TEST_CASE("simulate: cold start fetches templates, repeats do not") {
    testsupport::TempDir dir{"sim"};
    WorkloadSpec spec = load_workload(write_workload(dir.path, "brute", {kEnvA, kEnvA, kEnvA}));
    Report rep = simulate(spec);
    REQUIRE(rep.rows.size() == 3);

    CHECK(rep.rows[0].template_bytes_fetched > 0);
    CHECK(rep.rows[0].templates_fetched > 0);
    CHECK(rep.rows[0].cache_hits == 0);

    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(rep.rows[i].template_bytes_fetched == 0);
        CHECK(rep.rows[i].templates_fetched == 0);
        CHECK(rep.rows[i].cache_hits > 0);
        CHECK(rep.rows[i].baseline_bytes == rep.rows[0].baseline_bytes);
        CHECK(rep.rows[i].binding_bytes == rep.rows[0].binding_bytes);
    }

    // warmth monotonicity: per-request vcache bytes never grow along repeats
    CHECK(vcache_bytes(rep.rows[1]) <= vcache_bytes(rep.rows[0]));
    CHECK(vcache_bytes(rep.rows[2]) <= vcache_bytes(rep.rows[1]));

    CHECK(rep.baseline_total == 3 * rep.rows[0].baseline_bytes);
    CHECK(rep.vcache_total == rep.binding_total + rep.template_total);
    CHECK(rep.savings_ratio ==
          doctest::Approx(1.0 - static_cast<double>(rep.vcache_total) / rep.baseline_total));
}

TEST_CASE("simulate: baseline equals the interpreter output length") {
    testsupport::TempDir dir{"sim-baseline"};
    WorkloadSpec spec = load_workload(write_workload(dir.path, "brute", {kEnvA}));
    Report rep = simulate(spec);
    std::string oracle = escape_reserved(
        interpret(parse_script(read_file(spec.script)), spec.requests[0]));
    CHECK(rep.rows[0].baseline_bytes == oracle.size());
}

TEST_CASE("simulate: header overhead charges one exchange plus one per template fetch") {
    testsupport::TempDir dir{"sim-overhead"};
    WorkloadSpec spec = load_workload(write_workload(dir.path, "brute", {kEnvA, kEnvA}));
    Report plain = simulate(spec);
    spec.header_overhead_bytes = 100;
    Report charged = simulate(spec);

    int total_fetches = 0;
    for (const RequestRow& r : plain.rows) total_fetches += r.templates_fetched;
    CHECK(charged.vcache_total ==
          plain.vcache_total + 100 * (plain.rows.size() + static_cast<std::size_t>(total_fetches)));
    CHECK(charged.baseline_total == plain.baseline_total + 100 * plain.rows.size());
}

TEST_CASE("simulate: optimized mode specializes from the workload itself") {
    testsupport::TempDir dir{"sim-opt"};
    // 9 gold + 1 std: the gold path's 0.9 frequency crosses theta
    std::vector<std::string> reqs(9, kGold);
    reqs.push_back(kStd);
    std::filesystem::path file = write_workload(dir.path, "optimized", reqs,
                                                ",\"config\":{\"min_runs\":1}", kBranchingScript);
    Report opt = simulate(load_workload(file));

    std::filesystem::path brute_file = write_workload(dir.path, "brute", reqs, "", kBranchingScript);
    Report brute = simulate(load_workload(brute_file));

    REQUIRE(opt.rows.size() == brute.rows.size());
    for (std::size_t i = 0; i < opt.rows.size(); ++i)
        CHECK(opt.rows[i].baseline_bytes == brute.rows[i].baseline_bytes);
    // gold runs ride the merged template, so their bindings shed the arm bytes
    CHECK(opt.binding_total < brute.binding_total);
}

TEST_CASE("simulate: pruning everything can only cost bytes once warm") {
    testsupport::TempDir dir{"sim-prune-all"};
    std::vector<std::string> reqs;
    for (int i = 0; i < 6; ++i) reqs.push_back(i % 2 ? kGold : kStd);
    WorkloadSpec spec =
        load_workload(write_workload(dir.path, "pruned", reqs, "", kBranchingScript));

    Report normal = simulate(spec);
    spec.config.min_template_bytes = std::numeric_limits<std::size_t>::max();
    Report inlined = simulate(spec);

    REQUIRE(inlined.rows.size() == normal.rows.size());
    for (std::size_t i = 2; i < inlined.rows.size(); ++i)  // both caches warm from row 2 on
        CHECK(vcache_bytes(inlined.rows[i]) >= vcache_bytes(normal.rows[i]));
    CHECK(inlined.vcache_total >= normal.vcache_total);
    CHECK(inlined.binding_total > normal.binding_total);  // arm bytes ride every binding
}

TEST_CASE("report serialization carries the rows and totals") {
    testsupport::TempDir dir{"report"};
    WorkloadSpec spec = load_workload(write_workload(dir.path, "brute", {kEnvA, kEnvB}));
    Report rep = simulate(spec);

    nlohmann::json j = nlohmann::json::parse(report_json(rep));
    REQUIRE(j.at("requests").size() == 2);
    CHECK(j.at("requests")[0].at("baseline_bytes") == rep.rows[0].baseline_bytes);
    CHECK(j.at("requests")[1].at("binding_bytes") == rep.rows[1].binding_bytes);
    CHECK(j.at("totals").at("baseline") == rep.baseline_total);
    CHECK(j.at("totals").at("vcache") == rep.vcache_total);
    CHECK(j.at("savings_ratio").get<double>() == doctest::Approx(rep.savings_ratio));

    std::istringstream csv(report_csv(rep));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(csv, line))
        if (!line.empty()) lines.push_back(line);
    REQUIRE(lines.size() == 3);  // header + one row per request
    CHECK(lines[0].find("baseline_bytes") != std::string::npos);
    CHECK(lines[1].find(std::to_string(rep.rows[0].baseline_bytes)) != std::string::npos);
}

TEST_CASE("registry fetcher serves serialized templates and rejects strangers") {
    std::string src = "print \"stable text\"; print x;";
    Registry reg;
    register_document(reg, "d", src, fragment_brute(parse_script(src), {}));
    RegistryFetcher fetcher{reg};
    const TemplateId& root = reg.docs.at("d").root;
    CHECK(fetcher.fetch(root.url) == serialize(reg.templates.at(root)));
    CHECK(thrown_kind([&] { fetcher.fetch("/tpl/0000000000000000.vct"); }) == ErrorKind::FetchFailed);
}

}  // TEST_SUITE
