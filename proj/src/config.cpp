#include "switchheat/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "switchheat/errors.hpp"

namespace switchheat::cli {

std::string to_string(ExampleKind e) {
    switch (e) {
        case ExampleKind::dd: return "dd";
        case ExampleKind::dn: return "dn";
        case ExampleKind::ode1d: return "ode1d";
    }
    throw std::logic_error("to_string: bad ExampleKind");
}

ExampleKind example_from_string(const std::string& s) {
    if (s == "dd") return ExampleKind::dd;
    if (s == "dn") return ExampleKind::dn;
    if (s == "ode1d") return ExampleKind::ode1d;
    throw config_error("config: example must be one of dd, dn, ode1d (got '" + s + "')");
}

void RunConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw config_error(std::string("config: ") + name + " must be positive and finite");
    };
    positive(r0, "r0");
    positive(r1, "r1");
    positive(D, "D");
    positive(L, "L");
    if (!(b >= 0.0) || !std::isfinite(b))
        throw config_error("config: b must be nonnegative and finite");
    if (K < 1) throw config_error("config: K must be >= 1");
    if (N < 1) throw config_error("config: N must be >= 1");
    if (G < 1) throw config_error("config: G must be >= 1");
    if (!(tol > 0.0) || !(tol < 1.0))
        throw config_error("config: tol must lie in (0, 1)");
}

spectral::Params RunConfig::params() const { return spectral::Params{r0, r1, D, L, b}; }

spectral::Example RunConfig::spectral_example() const {
    return example == ExampleKind::dn ? spectral::Example::dn : spectral::Example::dd;
}

int RunConfig::effective_modes() const { return example == ExampleKind::ode1d ? 1 : K; }

RunConfig parse_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config: expected a JSON object");

    static constexpr std::array<const char*, 12> known = {
        "example", "r0", "r1", "D", "L", "b", "K", "N", "seed", "G", "tol", "output"};
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known)
            if (item.key() == k) found = true;
        if (!found) throw config_error("config: unknown key '" + item.key() + "'");
    }

    auto real = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number())
            throw config_error(std::string("config: ") + key + " must be a number");
        return j[key].get<double>();
    };
    auto integer = [&](const char* key, std::int64_t fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number_integer())
            throw config_error(std::string("config: ") + key + " must be an integer");
        return j[key].get<std::int64_t>();
    };

    RunConfig c;
    if (j.contains("example")) {
        if (!j["example"].is_string()) throw config_error("config: example must be a string");
        c.example = example_from_string(j["example"].get<std::string>());
    }
    c.r0 = real("r0", c.r0);
    c.r1 = real("r1", c.r1);
    c.D = real("D", c.D);
    c.L = real("L", c.L);
    c.b = real("b", c.b);
    c.K = static_cast<int>(integer("K", c.K));
    c.N = integer("N", c.N);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() ||
            (j["seed"].is_number_integer() && !j["seed"].is_number_unsigned() &&
             j["seed"].get<std::int64_t>() < 0))
            throw config_error("config: seed must be a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.G = static_cast<int>(integer("G", c.G));
    c.tol = real("tol", c.tol);
    if (j.contains("output")) {
        if (!j["output"].is_string()) throw config_error("config: output must be a string");
        c.output = j["output"].get<std::string>();
    }
    c.validate();
    return c;
}

std::string serialize_config(const RunConfig& config) {
    nlohmann::ordered_json j;
    j["example"] = to_string(config.example);
    j["r0"] = config.r0;
    j["r1"] = config.r1;
    j["D"] = config.D;
    j["L"] = config.L;
    j["b"] = config.b;
    j["K"] = config.K;
    j["N"] = config.N;
    j["seed"] = config.seed;
    j["G"] = config.G;
    j["tol"] = config.tol;
    j["output"] = config.output;
    return j.dump();
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("failed reading config file: " + path);
    return parse_config(buf.str());
}

} // namespace switchheat::cli
