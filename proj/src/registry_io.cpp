#include "vcache/registry_io.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "vcache/digest.hpp"
#include "vcache/error.hpp"
#include "vcache/fsutil.hpp"

namespace vcache {

namespace {

nlohmann::json config_to_json(const FragmentConfig& config) {
    return nlohmann::json{{"min_template_bytes", config.min_template_bytes},
                          {"rare_arm_threshold", config.rare_arm_threshold},
                          {"dominant_path_threshold", config.dominant_path_threshold},
                          {"min_runs", config.min_runs}};
}

FragmentConfig config_from_json(const nlohmann::json& j) {
    FragmentConfig config;
    config.min_template_bytes = j.value("min_template_bytes", config.min_template_bytes);
    config.rare_arm_threshold = j.value("rare_arm_threshold", config.rare_arm_threshold);
    config.dominant_path_threshold = j.value("dominant_path_threshold", config.dominant_path_threshold);
    config.min_runs = j.value("min_runs", config.min_runs);
    return config;
}

nlohmann::json signature_to_json(const PathSignature& sig) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [site, arm] : sig) arr.push_back({site, arm});
    return arr;
}

PathSignature signature_from_json(const nlohmann::json& arr) {
    PathSignature sig;
    for (const auto& pair : arr) sig[pair.at(0).get<SiteId>()] = pair.at(1).get<int>();
    return sig;
}

TemplateId id_for_hash(std::string hash) {
    std::string url = template_url_for_hash(hash);
    return TemplateId{std::move(hash), std::move(url)};
}

}  // namespace

void save_registry(const Registry& reg, const FragmentConfig& config, const std::filesystem::path& dir) {
    const std::filesystem::path tpl_dir = dir / "tpl";
    std::filesystem::create_directories(tpl_dir);

    std::set<std::filesystem::path> wanted;
    for (const auto& [id, tpl] : reg.templates) {
        std::filesystem::path file = tpl_dir / (id.hash + ".vct");
        write_file_atomic(file, serialize(tpl));
        wanted.insert(file.filename());
    }
    // the directory mirrors the registry: drop templates that fell out of it
    for (const auto& entry : std::filesystem::directory_iterator(tpl_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".vct") continue;
        if (!wanted.count(entry.path().filename())) std::filesystem::remove(entry.path());
    }

    nlohmann::json docs = nlohmann::json::object();
    for (const auto& [name, entry] : reg.docs) {
        nlohmann::json arms = nlohmann::json::array();
        for (const auto& [key, disp] : entry.arms) {
            nlohmann::json arm{{"site", key.first}, {"arm", key.second}};
            if (disp.kind == ArmDisposition::Kind::TemplateRef)
                arm["ref"] = disp.ref.hash;
            else
                arm["inline"] = true;
            arms.push_back(std::move(arm));
        }
        nlohmann::json specialized = nlohmann::json::array();
        for (const auto& [sig, id] : entry.specialized)
            specialized.push_back({{"signature", signature_to_json(sig)}, {"ref", id.hash}});
        auto script = reg.scripts.find(name);
        docs[name] = nlohmann::json{{"script", script == reg.scripts.end() ? "" : script->second},
                                    {"root", entry.root.hash},
                                    {"arms", std::move(arms)},
                                    {"specialized", std::move(specialized)}};
    }

    nlohmann::json dispatch{{"config", config_to_json(config)}, {"docs", std::move(docs)}};
    write_file_atomic(dir / "dispatch.json", dispatch.dump(2) + "\n");
}

LoadedRegistry load_registry(const std::filesystem::path& dir) {
    LoadedRegistry loaded;
    nlohmann::json dispatch;
    try {
        dispatch = nlohmann::json::parse(read_file(dir / "dispatch.json"));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, "malformed dispatch.json: " + std::string(e.what()));
    }

    try {
        loaded.config = config_from_json(dispatch.value("config", nlohmann::json::object()));

        for (const auto& [name, doc] : dispatch.at("docs").items()) {
            DispatchEntry entry;
            entry.root = id_for_hash(doc.at("root").get<std::string>());
            for (const auto& arm : doc.at("arms")) {
                ArmKey key{arm.at("site").get<SiteId>(), arm.at("arm").get<int>()};
                if (arm.contains("ref"))
                    entry.arms.emplace(key, ArmDisposition::template_ref(id_for_hash(arm.at("ref").get<std::string>())));
                else
                    entry.arms.emplace(key, ArmDisposition::inline_only());
            }
            for (const auto& spec : doc.at("specialized"))
                entry.specialized.emplace_back(signature_from_json(spec.at("signature")),
                                               id_for_hash(spec.at("ref").get<std::string>()));
            std::stable_sort(entry.specialized.begin(), entry.specialized.end(),
                             [](const auto& a, const auto& b) {
                                 if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
                                 return a.second < b.second;
                             });
            loaded.registry.docs.emplace(name, std::move(entry));
            loaded.registry.scripts.emplace(name, doc.value("script", std::string{}));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, "malformed dispatch.json: " + std::string(e.what()));
    }

    const std::filesystem::path tpl_dir = dir / "tpl";
    if (std::filesystem::is_directory(tpl_dir)) {
        for (const auto& file : std::filesystem::directory_iterator(tpl_dir)) {
            if (!file.is_regular_file() || file.path().extension() != ".vct") continue;
            std::string wire = read_file(file.path());
            std::string name = file.path().stem().string();
            if (short_sha256_hex(wire) != name)
                fail(ErrorKind::Io, "template file " + file.path().string() + " does not match its hash");
            loaded.registry.templates.emplace(id_for_hash(name), parse_template(wire));
        }
    }

    // every reference must resolve
    auto require = [&](const TemplateId& id) {
        if (!loaded.registry.templates.count(id)) fail(ErrorKind::MissingTemplate, id.url);
    };
    for (const auto& [name, entry] : loaded.registry.docs) {
        require(entry.root);
        for (const auto& [key, disp] : entry.arms)
            if (disp.kind == ArmDisposition::Kind::TemplateRef) require(disp.ref);
        for (const auto& [sig, id] : entry.specialized) require(id);
    }
    return loaded;
}

}  // namespace vcache
