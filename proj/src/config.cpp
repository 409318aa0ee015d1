#include "sparsetemp/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sparsetemp/logging.hpp"

namespace sparsetemp {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::stringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        cfg.entries_[key] = value;
    }
    return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected a number, got '" + it->second + "'");
    }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an integer, got '" + it->second + "'");
    }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an unsigned integer, got '" +
                          it->second + "'");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key " + key + ": expected a boolean, got '" + it->second + "'");
}

RunConfig load_run_config(const KeyValueConfig& kv) {
    RunConfig rc;
    TrainerConfig& tc = rc.trainer;
    try {
        tc.epochs = kv.get_int("search.epochs", 60);
        tc.steps_per_epoch = kv.get_int("search.steps_per_epoch", 10);
        tc.lr_omega = kv.get_double("search.lr_omega", 0.05);
        tc.lr_arch = kv.get_double("search.lr_arch", 0.08);
        const double clip = kv.get_double("search.grad_clip_arch", 1.0);
        tc.grad_clip_arch = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
        tc.seed = kv.get_u64("search.seed", 0);
        tc.softmax.mode =
            softmax_mode_from_string(kv.get_string("search.softmax_mode", "sn_st_const"));
        tc.softmax.s = kv.get_double("search.s", 100.0);
        tc.softmax.st_const = kv.get_double("search.st_const", 1.0);

        ScheduleConfig& sch = tc.schedule;
        sch.kind = schedule_kind_from_string(kv.get_string("schedule.kind", "edd"));
        sch.t0 = kv.get_double("schedule.t0", 1.0);
        sch.tN = kv.get_double("schedule.tN", 1e-3);
        sch.N = kv.get_int("schedule.N", 4);
        sch.cycles = kv.get_int("schedule.cycles", 3);
        sch.lambda = kv.get_double("schedule.lambda", 0.06);
        sch.rho = kv.get_double("schedule.rho", 0.5);
        sch.warmup = kv.get_int("schedule.warmup", 5);
        sch.refresh_E_a = kv.get_bool("schedule.refresh_E_a", false);
        tc.warmup_epochs = sch.warmup;

        NetConfig& net = tc.net;
        net.nodes = kv.get_int("net.nodes", 3);
        net.input_nodes = kv.get_int("net.input_nodes", 1);
        net.feature_dim = kv.get_int("net.dim", 16);
        net.classes = kv.get_int("net.classes", 4);
        const std::string catalog =
            kv.get_string("net.catalog", "zero,identity,linear,tanh_linear,half_scale");
        net.catalog.clear();
        std::stringstream cs(catalog);
        std::string item;
        while (std::getline(cs, item, ',')) {
            if (!item.empty()) net.catalog.push_back(op_kind_from_string(item));
        }
        if (net.catalog.empty()) throw ConfigError("config: empty operation catalog");

        rc.data.kind = kv.get_string("data.kind", "planted");
        rc.data.n_samples = kv.get_int("data.n", 2000);
        rc.data.noise_sigma = kv.get_double("data.noise_sigma", 1.0);
        rc.data.csv_path = kv.get_string("data.csv_path", "");
        if (rc.data.kind != "planted" && rc.data.kind != "blobs" && rc.data.kind != "csv")
            throw ConfigError("config: data.kind must be planted, blobs, or csv");

        // Constraint checks that should be reported as configuration errors.
        if (sch.kind == ScheduleKind::Lts || sch.kind == ScheduleKind::Ets ||
            sch.kind == ScheduleKind::Pcd) {
            if (!(sch.t0 > sch.tN) || !(sch.tN > 0.0))
                throw ConfigError("config: schedule requires t0 > tN > 0");
            if (sch.N < 1) throw ConfigError("config: schedule.N must be at least 1");
        }
        if (tc.epochs < 1) throw ConfigError("config: search.epochs must be at least 1");
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("config: ") + err.what());
    }
    return rc;
}

Dataset build_dataset(const RunConfig& config) {
    const DataConfig& d = config.data;
    if (d.kind == "planted") {
        return planted_optimum_task(config.trainer.seed ^ 0xDA7A5EEDULL,
                                    config.trainer.net.feature_dim)
            .dataset;
    }
    if (d.kind == "blobs") {
        return generate(config.trainer.seed ^ 0xDA7A5EEDULL, d.n_samples,
                        config.trainer.net.feature_dim, config.trainer.net.classes,
                        d.noise_sigma);
    }
    std::ifstream in(d.csv_path);
    if (!in) throw ConfigError("cannot open dataset csv: " + d.csv_path);
    return load_csv(in, config.trainer.seed);
}

std::string run_config_to_json(const RunConfig& config) {
    nlohmann::json j;
    const TrainerConfig& tc = config.trainer;
    j["search"] = {{"epochs", tc.epochs},
                   {"steps_per_epoch", tc.steps_per_epoch},
                   {"lr_omega", tc.lr_omega},
                   {"lr_arch", tc.lr_arch},
                   {"grad_clip_arch", tc.grad_clip_arch ? *tc.grad_clip_arch : 0.0},
                   {"softmax_mode", to_string(tc.softmax.mode)},
                   {"s", tc.softmax.s},
                   {"st_const", tc.softmax.st_const},
                   {"seed", tc.seed}};
    const ScheduleConfig& sch = tc.schedule;
    j["schedule"] = {{"kind", to_string(sch.kind)}, {"t0", sch.t0},
                     {"tN", sch.tN},               {"N", sch.N},
                     {"cycles", sch.cycles},       {"lambda", sch.lambda},
                     {"rho", sch.rho},             {"warmup", sch.warmup},
                     {"refresh_E_a", sch.refresh_E_a}};
    std::vector<std::string> catalog;
    for (OpKind kind : tc.net.catalog) catalog.push_back(to_string(kind));
    j["net"] = {{"nodes", tc.net.nodes},
                {"input_nodes", tc.net.input_nodes},
                {"dim", tc.net.feature_dim},
                {"classes", tc.net.classes},
                {"catalog", catalog}};
    j["data"] = {{"kind", config.data.kind},
                 {"n", config.data.n_samples},
                 {"noise_sigma", config.data.noise_sigma},
                 {"csv_path", config.data.csv_path}};
    return j.dump(2) + "\n";
}

}  // namespace sparsetemp
