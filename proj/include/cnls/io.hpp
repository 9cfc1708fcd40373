#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cnls/field.hpp"

namespace cnls {

using json = nlohmann::json;

/// All numeric CSV output uses 17 significant digits: round-trip exact for
/// binary64, so identical configs reproduce byte-identical files.
inline std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string());
    }
    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << fmt17(vals[i]);
        out_ << "\n";
    }
    void raw_row(const std::vector<std::string>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << vals[i];
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

inline json grid_header(const RadialGrid& g) {
    return json{{"n", g.size()},
                {"r_max", g.r_max()},
                {"stretch", g.stretch().name()},
                {"A", g.stretch().A},
                {"B", g.stretch().B}};
}

/// Field serialization: CSV columns (r, value[, imag]) plus a JSON header.
inline void write_field(const std::filesystem::path& base, const RealField& f) {
    CsvWriter csv(base.string() + ".csv");
    csv.header({"r", "value"});
    for (std::size_t i = 0; i < f.size(); ++i) csv.row({f.grid->node(i), f.v[i]});
    std::ofstream hdr(base.string() + ".json");
    hdr << grid_header(*f.grid).dump(2) << "\n";
}

inline void write_field(const std::filesystem::path& base, const ComplexField& f) {
    CsvWriter csv(base.string() + ".csv");
    csv.header({"r", "value", "imag"});
    for (std::size_t i = 0; i < f.size(); ++i) csv.row({f.grid->node(i), f.v[i].real(), f.v[i].imag()});
    std::ofstream hdr(base.string() + ".json");
    hdr << grid_header(*f.grid).dump(2) << "\n";
}

inline RealField read_field(const std::filesystem::path& base) {
    std::ifstream hdr(base.string() + ".json");
    if (!hdr) throw std::runtime_error("cannot open " + base.string() + ".json");
    json j = json::parse(hdr);
    StretchSpec spec;
    const std::string name = j["stretch"];
    if (name == "algebraic")
        spec = StretchSpec::algebraic(j["A"]);
    else if (name == "uniform")
        spec = StretchSpec::uniform();
    else {
        spec = StretchSpec::blended(j["A"]);
        spec.B = j["B"];
    }
    auto g = make_grid(j["n"], j["r_max"], spec);
    std::ifstream csv(base.string() + ".csv");
    if (!csv) throw std::runtime_error("cannot open " + base.string() + ".csv");
    std::string line;
    std::getline(csv, line); // header
    RealField f(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!std::getline(csv, line)) throw std::runtime_error("short field file " + base.string());
        const auto comma = line.find(',');
        f.v[i] = std::stod(line.substr(comma + 1));
    }
    return f;
}

/// Declarative run configuration: `key = value` lines, '#' comments,
/// mirrored by CLI flags (flags win). Serializes round-trip stable.
class RunConfig {
  public:
    RunConfig() = default;

    static RunConfig from_file(const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("config: cannot open " + p.string());
        RunConfig c;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno));
            c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return c;
    }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& dflt = "") const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }
    double get_num(const std::string& key, double dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : std::stod(it->second);
    }
    long get_int(const std::string& key, long dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : std::stol(it->second);
    }

    std::string serialize() const {
        std::ostringstream os;
        for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
        return os.str();
    }

    /// FNV-1a of the resolved configuration, the reproducibility fingerprint.
    std::string hash() const {
        const std::string s = serialize();
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

/// Per-run manifest: resolved config, its hash, and pass/fail per check.
class RunManifest {
  public:
    RunManifest(std::filesystem::path dir, const RunConfig& cfg) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        std::ofstream cf(dir_ / "config.resolved");
        cf << cfg.serialize();
        j_["config_hash"] = cfg.hash();
        j_["version"] = "cnls 1.0";
    }

    void check(const std::string& name, bool pass, const std::string& detail = "") {
        j_["checks"].push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
        if (!pass) {
            all_pass_ = false;
            if (first_failure_.empty()) first_failure_ = name;
        }
    }

    bool all_pass() const { return all_pass_; }
    const std::string& first_failure() const { return first_failure_; }

    void finish() {
        j_["all_pass"] = all_pass_;
        std::ofstream out(dir_ / "manifest.json");
        out << j_.dump(2) << "\n";
    }

    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
    json j_;
    bool all_pass_ = true;
    std::string first_failure_;
};

} // namespace cnls
