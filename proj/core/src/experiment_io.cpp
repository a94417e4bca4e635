#include "tti/experiment_io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace tti {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// ---- canonical JSON ------------------------------------------------------

void canonical_dump_into(const json& j, std::string& out) {
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: sorted keys
                if (!first) out += ',';
                first = false;
                out += json(it.key()).dump();
                out += ':';
                canonical_dump_into(it.value(), out);
            }
            out += '}';
            break;
        }
        case json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                canonical_dump_into(j[i], out);
            }
            out += ']';
            break;
        }
        case json::value_t::number_float:
            out += fmt6(j.get<double>());
            break;
        default:
            out += j.dump();
            break;
    }
}

std::string canonical_dump(const json& j) {
    std::string out;
    canonical_dump_into(j, out);
    out += '\n';
    return out;
}

// ---- strict parsing helpers ----------------------------------------------

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("manifest: " + path + ": " + message);
}

const json& expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    return j;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& obj, const std::string& path, const char* key,
                      std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(path + "." + key, "expected an integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required) fail(path + "." + key, "required key is missing");
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

TierSpec parse_tiering(const json& j, const std::string& path, const TierSpec& fallback) {
    expect_object(j, path);
    check_keys(j, path, {"mode", "tau_high", "tau_low", "p_trusted", "p_suspicious", "p_malicious"});
    TierSpec spec = fallback;
    std::string mode = get_string(j, path, "mode", "proportion");
    if (mode == "proportion")
        spec.mode = TierSpec::Mode::Proportion;
    else if (mode == "threshold")
        spec.mode = TierSpec::Mode::Threshold;
    else
        fail(path + ".mode", "expected \"proportion\" or \"threshold\"");
    spec.tau_high = get_number(j, path, "tau_high", spec.tau_high);
    spec.tau_low = get_number(j, path, "tau_low", spec.tau_low);
    spec.p_trusted = get_number(j, path, "p_trusted", spec.p_trusted);
    spec.p_suspicious = get_number(j, path, "p_suspicious", spec.p_suspicious);
    spec.p_malicious = get_number(j, path, "p_malicious", spec.p_malicious);
    return spec;
}

ScenarioConfig parse_scenario(const json& j, const std::string& path) {
    expect_object(j, path);
    check_keys(j, path,
               {"seed", "rounds", "warmup_rounds", "num_clients", "malicious_count",
                "malicious_ids", "defense_mode", "rho", "ota_noise_std", "rs_only_after_round",
                "trust_weights", "transforms", "data", "model", "train", "trigger", "attack",
                "tiering"});
    ScenarioConfig c;
    c.seed = get_u64(j, path, "seed", c.seed);
    c.rounds = get_int(j, path, "rounds", c.rounds);
    c.warmup_rounds = get_int(j, path, "warmup_rounds", c.warmup_rounds);
    c.num_clients = get_int(j, path, "num_clients", c.num_clients);
    c.malicious_count = get_int(j, path, "malicious_count", c.malicious_count);
    c.rho = get_number(j, path, "rho", c.rho);
    c.ota_noise_std = get_number(j, path, "ota_noise_std", c.ota_noise_std);
    c.rs_only_after_round = get_int(j, path, "rs_only_after_round", c.rs_only_after_round);

    if (j.contains("defense_mode")) {
        try {
            c.defense = defense_mode_from_string(get_string(j, path, "defense_mode", "", true));
        } catch (const ConfigError& e) {
            fail(path + ".defense_mode", e.what());
        }
    }
    if (j.contains("malicious_ids")) {
        const auto& arr = j.at("malicious_ids");
        if (!arr.is_array()) fail(path + ".malicious_ids", "expected an array of integers");
        c.malicious_ids.clear();
        for (const auto& v : arr) {
            if (!v.is_number_integer() && !v.is_number_unsigned())
                fail(path + ".malicious_ids", "expected an array of integers");
            c.malicious_ids.push_back(v.get<int>());
        }
    }
    if (j.contains("trust_weights")) {
        const auto& arr = j.at("trust_weights");
        if (!arr.is_array()) fail(path + ".trust_weights", "expected an array of numbers");
        c.trust_weights.clear();
        for (const auto& v : arr) {
            if (!v.is_number()) fail(path + ".trust_weights", "expected an array of numbers");
            c.trust_weights.push_back(v.get<double>());
        }
    }
    if (j.contains("transforms")) {
        const auto& t = expect_object(j.at("transforms"), path + ".transforms");
        check_keys(t, path + ".transforms", {"r0", "alpha_steep", "s0", "gamma"});
        c.transforms.r0 = get_number(t, path + ".transforms", "r0", c.transforms.r0);
        c.transforms.alpha_steep =
            get_number(t, path + ".transforms", "alpha_steep", c.transforms.alpha_steep);
        c.transforms.s0 = get_number(t, path + ".transforms", "s0", c.transforms.s0);
        c.transforms.gamma = get_number(t, path + ".transforms", "gamma", c.transforms.gamma);
    }
    if (j.contains("data")) {
        const auto& d = expect_object(j.at("data"), path + ".data");
        check_keys(d, path + ".data",
                   {"classes", "feature_dim", "train_per_class", "test_per_class",
                    "cluster_spread", "dirichlet_alpha"});
        c.data.classes = get_int(d, path + ".data", "classes", c.data.classes);
        c.data.feature_dim = get_int(d, path + ".data", "feature_dim", c.data.feature_dim);
        c.data.train_per_class =
            get_int(d, path + ".data", "train_per_class", c.data.train_per_class);
        c.data.test_per_class = get_int(d, path + ".data", "test_per_class", c.data.test_per_class);
        c.data.cluster_spread =
            get_number(d, path + ".data", "cluster_spread", c.data.cluster_spread);
        c.data.dirichlet_alpha =
            get_number(d, path + ".data", "dirichlet_alpha", c.data.dirichlet_alpha);
    }
    if (j.contains("model")) {
        const auto& m = expect_object(j.at("model"), path + ".model");
        check_keys(m, path + ".model", {"hidden_layers"});
        if (m.contains("hidden_layers")) {
            const auto& arr = m.at("hidden_layers");
            if (!arr.is_array()) fail(path + ".model.hidden_layers", "expected an array of integers");
            c.hidden_layers.clear();
            for (const auto& v : arr) {
                if (!v.is_number_integer() && !v.is_number_unsigned())
                    fail(path + ".model.hidden_layers", "expected an array of integers");
                c.hidden_layers.push_back(v.get<int>());
            }
        }
    }
    if (j.contains("train")) {
        const auto& t = expect_object(j.at("train"), path + ".train");
        check_keys(t, path + ".train", {"learning_rate", "local_epochs", "batch_size"});
        c.train.learning_rate =
            get_number(t, path + ".train", "learning_rate", c.train.learning_rate);
        c.train.local_epochs = get_int(t, path + ".train", "local_epochs", c.train.local_epochs);
        c.train.batch_size = get_int(t, path + ".train", "batch_size", c.train.batch_size);
    }
    if (j.contains("trigger")) {
        const auto& t = expect_object(j.at("trigger"), path + ".trigger");
        check_keys(t, path + ".trigger", {"coords", "offset", "target_label", "poison_rate"});
        if (t.contains("coords")) {
            const auto& arr = t.at("coords");
            if (!arr.is_array()) fail(path + ".trigger.coords", "expected an array of integers");
            c.trigger.coords.clear();
            for (const auto& v : arr) {
                if (!v.is_number_integer() && !v.is_number_unsigned())
                    fail(path + ".trigger.coords", "expected an array of integers");
                c.trigger.coords.push_back(v.get<int>());
            }
        }
        c.trigger.offset = get_number(t, path + ".trigger", "offset", c.trigger.offset);
        c.trigger.target_label = get_int(t, path + ".trigger", "target_label", c.trigger.target_label);
        c.trigger.poison_rate = get_number(t, path + ".trigger", "poison_rate", c.trigger.poison_rate);
    }
    if (j.contains("attack")) {
        const auto& a = expect_object(j.at("attack"), path + ".attack");
        check_keys(a, path + ".attack",
                   {"kind", "alpha_mix", "scale_factor", "norm_bound", "norm_bound_factor",
                    "mask_top_fraction"});
        if (a.contains("kind")) {
            try {
                c.attack.kind = attack_kind_from_string(get_string(a, path + ".attack", "kind", "", true));
            } catch (const ConfigError& e) {
                fail(path + ".attack.kind", e.what());
            }
        }
        c.attack.alpha_mix = get_number(a, path + ".attack", "alpha_mix", c.attack.alpha_mix);
        c.attack.scale_factor = get_number(a, path + ".attack", "scale_factor", c.attack.scale_factor);
        c.attack.norm_bound = get_number(a, path + ".attack", "norm_bound", c.attack.norm_bound);
        c.attack.norm_bound_factor =
            get_number(a, path + ".attack", "norm_bound_factor", c.attack.norm_bound_factor);
        c.attack.mask_top_fraction =
            get_number(a, path + ".attack", "mask_top_fraction", c.attack.mask_top_fraction);
    }
    if (j.contains("tiering")) c.tiering = parse_tiering(j.at("tiering"), path + ".tiering", c.tiering);
    return c;
}

BOConfig parse_bo(const json& j, const std::string& path) {
    expect_object(j, path);
    check_keys(j, path,
               {"n_init", "n_iter", "lambda_tradeoff", "ei_candidate_count", "gp_noise", "seed"});
    BOConfig b;
    b.n_init = get_int(j, path, "n_init", b.n_init);
    b.n_iter = get_int(j, path, "n_iter", b.n_iter);
    b.lambda_tradeoff = get_number(j, path, "lambda_tradeoff", b.lambda_tradeoff);
    b.ei_candidate_count = get_int(j, path, "ei_candidate_count", b.ei_candidate_count);
    b.gp_noise = get_number(j, path, "gp_noise", b.gp_noise);
    b.seed = get_u64(j, path, "seed", b.seed);
    return b;
}

SweepSpec parse_sweep(const json& j, const std::string& path) {
    expect_object(j, path);
    check_keys(j, path, {"attack", "defense_mode", "malicious_count", "tiering"});
    SweepSpec s;
    if (j.contains("attack")) {
        const auto& arr = j.at("attack");
        if (!arr.is_array()) fail(path + ".attack", "expected an array of attack kinds or objects");
        s.attacks.emplace();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& v = arr[i];
            std::string apath = path + ".attack[" + std::to_string(i) + "]";
            AttackSpec spec;
            if (v.is_string()) {
                try {
                    spec.kind = attack_kind_from_string(v.get<std::string>());
                } catch (const ConfigError& e) {
                    fail(apath, e.what());
                }
            } else if (v.is_object()) {
                check_keys(v, apath,
                           {"kind", "alpha_mix", "scale_factor", "norm_bound",
                            "norm_bound_factor", "mask_top_fraction"});
                try {
                    spec.kind = attack_kind_from_string(get_string(v, apath, "kind", "", true));
                } catch (const ConfigError& e) {
                    fail(apath + ".kind", e.what());
                }
                spec.alpha_mix = get_number(v, apath, "alpha_mix", spec.alpha_mix);
                spec.scale_factor = get_number(v, apath, "scale_factor", spec.scale_factor);
                spec.norm_bound = get_number(v, apath, "norm_bound", spec.norm_bound);
                spec.norm_bound_factor =
                    get_number(v, apath, "norm_bound_factor", spec.norm_bound_factor);
                spec.mask_top_fraction =
                    get_number(v, apath, "mask_top_fraction", spec.mask_top_fraction);
            } else {
                fail(apath, "expected a string or an object");
            }
            s.attacks->push_back(spec);
        }
        if (s.attacks->empty()) fail(path + ".attack", "sweep axis must be nonempty");
    }
    if (j.contains("defense_mode")) {
        const auto& arr = j.at("defense_mode");
        if (!arr.is_array()) fail(path + ".defense_mode", "expected an array of defense modes");
        s.defenses.emplace();
        for (const auto& v : arr) {
            if (!v.is_string()) fail(path + ".defense_mode", "expected an array of strings");
            try {
                s.defenses->push_back(defense_mode_from_string(v.get<std::string>()));
            } catch (const ConfigError& e) {
                fail(path + ".defense_mode", e.what());
            }
        }
        if (s.defenses->empty()) fail(path + ".defense_mode", "sweep axis must be nonempty");
    }
    if (j.contains("malicious_count")) {
        const auto& arr = j.at("malicious_count");
        if (!arr.is_array()) fail(path + ".malicious_count", "expected an array of integers");
        s.malicious_counts.emplace();
        for (const auto& v : arr) {
            if (!v.is_number_integer() && !v.is_number_unsigned())
                fail(path + ".malicious_count", "expected an array of integers");
            s.malicious_counts->push_back(v.get<int>());
        }
        if (s.malicious_counts->empty()) fail(path + ".malicious_count", "sweep axis must be nonempty");
    }
    if (j.contains("tiering")) {
        const auto& arr = j.at("tiering");
        if (!arr.is_array()) fail(path + ".tiering", "expected an array of tiering objects");
        s.tierings.emplace();
        for (std::size_t i = 0; i < arr.size(); ++i)
            s.tierings->push_back(
                parse_tiering(arr[i], path + ".tiering[" + std::to_string(i) + "]", TierSpec{}));
        if (s.tierings->empty()) fail(path + ".tiering", "sweep axis must be nonempty");
    }
    if (!s.attacks && !s.defenses && !s.malicious_counts && !s.tierings)
        fail(path, "sweep declares no axis");
    return s;
}

json tiering_to_json(const TierSpec& t) {
    json j;
    j["mode"] = t.mode == TierSpec::Mode::Proportion ? "proportion" : "threshold";
    if (t.mode == TierSpec::Mode::Threshold) {
        j["tau_high"] = t.tau_high;
        j["tau_low"] = t.tau_low;
    } else {
        j["p_trusted"] = t.p_trusted;
        j["p_suspicious"] = t.p_suspicious;
        j["p_malicious"] = t.p_malicious;
    }
    return j;
}

json scenario_to_json(const ScenarioConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["rounds"] = c.rounds;
    j["warmup_rounds"] = c.warmup_rounds;
    j["num_clients"] = c.num_clients;
    j["malicious_count"] = c.malicious_count;
    if (!c.malicious_ids.empty()) j["malicious_ids"] = c.malicious_ids;
    j["defense_mode"] = to_string(c.defense);
    j["rho"] = c.rho;
    j["ota_noise_std"] = c.ota_noise_std;
    j["rs_only_after_round"] = c.rs_only_after_round;
    j["trust_weights"] = c.trust_weights;
    j["transforms"] = {{"r0", c.transforms.r0},
                       {"alpha_steep", c.transforms.alpha_steep},
                       {"s0", c.transforms.s0},
                       {"gamma", c.transforms.gamma}};
    j["data"] = {{"classes", c.data.classes},
                 {"feature_dim", c.data.feature_dim},
                 {"train_per_class", c.data.train_per_class},
                 {"test_per_class", c.data.test_per_class},
                 {"cluster_spread", c.data.cluster_spread},
                 {"dirichlet_alpha", c.data.dirichlet_alpha}};
    j["model"] = {{"hidden_layers", c.hidden_layers}};
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"local_epochs", c.train.local_epochs},
                  {"batch_size", c.train.batch_size}};
    j["trigger"] = {{"coords", c.trigger.coords},
                    {"offset", c.trigger.offset},
                    {"target_label", c.trigger.target_label},
                    {"poison_rate", c.trigger.poison_rate}};
    j["attack"] = {{"kind", to_string(c.attack.kind)},
                   {"alpha_mix", c.attack.alpha_mix},
                   {"scale_factor", c.attack.scale_factor},
                   {"norm_bound", c.attack.norm_bound},
                   {"norm_bound_factor", c.attack.norm_bound_factor},
                   {"mask_top_fraction", c.attack.mask_top_fraction}};
    j["tiering"] = tiering_to_json(c.tiering);
    return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
}

std::string resolve_output_dir(const ExperimentManifest& manifest, const CliOverrides& overrides) {
    if (overrides.output_dir) return *overrides.output_dir;
    if (const char* env = std::getenv(kOutputDirEnvVar); env != nullptr && env[0] != '\0')
        return env;
    return manifest.output_dir;
}

void run_one(const ExperimentManifest& manifest, const fs::path& dir) {
    auto t0 = std::chrono::steady_clock::now();
    auto result = run_experiment(manifest.scenario);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(dir);
    write_text_file(dir / "metrics.csv", metrics_csv_text(result.records));

    const auto& last = result.records.back();
    json summary;
    summary["schema_version"] = manifest.schema_version;
    summary["run_label"] = manifest.run_label;
    summary["seed"] = manifest.scenario.seed;
    summary["final_mta"] = last.mta;
    summary["final_asr"] = last.asr;
    summary["wall_time_seconds"] = wall;
    summary["config"] = scenario_to_json(manifest.scenario);
    write_text_file(dir / "summary.json", canonical_dump(summary));
}

}  // namespace

ExperimentManifest parse_manifest_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("manifest: not valid JSON: ") + e.what());
    }
    expect_object(j, "manifest");
    check_keys(j, "manifest",
               {"schema_version", "run_label", "output_dir", "scenario", "bo", "sweep"});
    if (!j.contains("schema_version")) fail("schema_version", "required key is missing");

    ExperimentManifest m;
    m.schema_version = get_int(j, "manifest", "schema_version", 0);
    if (m.schema_version != 1) fail("schema_version", "unsupported schema version");
    m.run_label = get_string(j, "manifest", "run_label", "", true);
    m.output_dir = get_string(j, "manifest", "output_dir", "", true);
    if (!j.contains("scenario")) fail("scenario", "required key is missing");
    m.scenario = parse_scenario(j.at("scenario"), "scenario");
    if (j.contains("bo")) m.bo = parse_bo(j.at("bo"), "bo");
    if (j.contains("sweep")) m.sweep = parse_sweep(j.at("sweep"), "sweep");

    validate_scenario(m.scenario);  // surfaces value errors with field names
    return m;
}

ExperimentManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("manifest: cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest_text(ss.str());
}

std::string canonical_reserialize(const std::string& json_text) {
    return canonical_dump(json::parse(json_text));
}

std::string metrics_csv_text(const std::vector<RoundRecord>& records) {
    std::string out =
        "round,mta,asr,n_trusted,n_suspicious,n_malicious_tier,n_accepted_suspects,n_rs_filtered\n";
    for (const auto& r : records) {
        out += std::to_string(r.round);
        out += ',' + fmt6(r.mta);
        out += ',' + fmt6(r.asr);
        out += ',' + std::to_string(r.tier_count(Tier::Trusted));
        out += ',' + std::to_string(r.tier_count(Tier::Suspicious));
        out += ',' + std::to_string(r.tier_count(Tier::Malicious));
        out += ',' + std::to_string(r.accepted_suspect_count());
        out += ',' + std::to_string(r.n_rs_filtered);
        out += '\n';
    }
    return out;
}

int cmd_run(const std::string& manifest_path, const CliOverrides& overrides) {
    try {
        auto manifest = load_manifest(manifest_path);
        if (overrides.seed) manifest.scenario.seed = *overrides.seed;
        run_one(manifest, resolve_output_dir(manifest, overrides));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_calibrate(const std::string& manifest_path, const CliOverrides& overrides) {
    try {
        auto manifest = load_manifest(manifest_path);
        if (overrides.seed) manifest.scenario.seed = *overrides.seed;
        if (!manifest.bo)
            throw ConfigError("manifest: bo: required for the calibrate command");

        const auto& bo = *manifest.bo;
        auto objective = [&](const std::vector<double>& beta) {
            return scenario_objective(beta, manifest.scenario, bo.lambda_tradeoff);
        };
        auto result = run_bo(bo, kIndicatorCount, objective);

        json out;
        out["schema_version"] = manifest.schema_version;
        out["run_label"] = manifest.run_label;
        out["lambda_tradeoff"] = bo.lambda_tradeoff;
        out["seed"] = bo.seed;
        json records = json::array();
        for (const auto& rec : result.records)
            records.push_back({{"beta", rec.beta}, {"objective", rec.objective}});
        out["records"] = records;
        out["best_beta"] = result.best().beta;
        out["best_objective"] = result.best().objective;

        fs::path dir = resolve_output_dir(manifest, overrides);
        fs::create_directories(dir);
        write_text_file(dir / "calibration.json", canonical_dump(out));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_sweep(const std::string& manifest_path, const CliOverrides& overrides) {
    try {
        auto manifest = load_manifest(manifest_path);
        if (overrides.seed) manifest.scenario.seed = *overrides.seed;
        if (!manifest.sweep)
            throw ConfigError("manifest: sweep: required for the sweep command");
        const auto& sweep = *manifest.sweep;

        struct Point {
            std::string label;
            ScenarioConfig scenario;
        };
        std::vector<Point> points{{"", manifest.scenario}};
        auto expand = [&points](auto&& values, auto&& apply) {
            std::vector<Point> next;
            for (const auto& p : points) {
                for (const auto& v : values) {
                    Point q = p;
                    apply(q, v);
                    next.push_back(std::move(q));
                }
            }
            points = std::move(next);
        };
        auto extend_label = [](Point& p, const std::string& part) {
            if (!p.label.empty()) p.label += "__";
            p.label += part;
        };

        if (sweep.attacks)
            expand(*sweep.attacks, [&](Point& p, const AttackSpec& a) {
                p.scenario.attack = a;
                extend_label(p, "attack-" + to_string(a.kind));
            });
        if (sweep.defenses)
            expand(*sweep.defenses, [&](Point& p, DefenseMode d) {
                p.scenario.defense = d;
                extend_label(p, "defense-" + to_string(d));
            });
        if (sweep.malicious_counts)
            expand(*sweep.malicious_counts, [&](Point& p, int m) {
                p.scenario.malicious_count = m;
                p.scenario.malicious_ids.clear();
                extend_label(p, "m" + std::to_string(m));
            });
        if (sweep.tierings)
            expand(*sweep.tierings, [&](Point& p, const TierSpec& t) {
                p.scenario.tiering = t;
                std::string part =
                    t.mode == TierSpec::Mode::Proportion
                        ? "tier-" + fmt_short(t.p_trusted) + "-" + fmt_short(t.p_suspicious) + "-" +
                              fmt_short(t.p_malicious)
                        : "tier-thr-" + fmt_short(t.tau_low) + "-" + fmt_short(t.tau_high);
                extend_label(p, part);
            });

        for (auto& p : points) validate_scenario(p.scenario);

        fs::path root = resolve_output_dir(manifest, overrides);
        fs::create_directories(root);
        std::string summary_csv =
            "label,attack,defense_mode,malicious_count,p_trusted,p_suspicious,p_malicious,seed,"
            "final_mta,final_asr\n";
        for (const auto& p : points) {
            ExperimentManifest one = manifest;
            one.scenario = p.scenario;
            one.run_label = manifest.run_label + "/" + p.label;
            run_one(one, root / p.label);

            // Reread the freshly written metrics for the final row; keeps the
            // summary consistent with the per-run artifacts by construction.
            auto result_rows = [&]() {
                std::ifstream in(root / p.label / "metrics.csv");
                std::string line, last;
                std::getline(in, line);  // header
                while (std::getline(in, line))
                    if (!line.empty()) last = line;
                return last;
            }();
            std::string mta = "0", asr = "0";
            {
                std::stringstream ss(result_rows);
                std::string cell;
                std::getline(ss, cell, ',');  // round
                std::getline(ss, mta, ',');
                std::getline(ss, asr, ',');
            }
            const auto& t = p.scenario.tiering;
            summary_csv += p.label + ',' + to_string(p.scenario.attack.kind) + ',' +
                           to_string(p.scenario.defense) + ',' +
                           std::to_string(p.scenario.malicious_count) + ',' +
                           fmt6(t.p_trusted) + ',' + fmt6(t.p_suspicious) + ',' +
                           fmt6(t.p_malicious) + ',' + std::to_string(p.scenario.seed) + ',' +
                           mta + ',' + asr + '\n';
        }
        write_text_file(root / "sweep_summary.csv", summary_csv);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace tti
