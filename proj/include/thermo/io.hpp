#pragma once

// Map-spec JSON, run manifests and CSV output shared by the command-line tool.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "maps.hpp"

namespace thermo::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

struct ParsedMap {
    json spec;
    std::optional<CircleMap> circle;
    std::optional<SkewProduct> skew;

    bool is_skew() const noexcept { return skew.has_value(); }
};

inline double number_field(const json& j, const char* key)
{
    if (!j.contains(key)) throw DomainError(std::string("map spec is missing \"") + key + "\"");
    if (!j.at(key).is_number()) throw DomainError(std::string("map spec field \"") + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline CircleMap parse_circle_map(const json& j)
{
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw DomainError("map spec must be an object with a string \"type\"");
    const std::string type = j.at("type").get<std::string>();
    if (type == "mp") return make_manneville_pomeau(number_field(j, "p"));
    if (type == "c2") return make_c2_intermittent(number_field(j, "alpha"));
    if (type == "pwl") {
        if (!j.contains("slopes") || !j.at("slopes").is_array())
            throw DomainError("pwl map spec needs an array \"slopes\"");
        std::vector<double> s;
        for (const auto& v : j.at("slopes")) {
            if (!v.is_number()) throw DomainError("pwl slopes must be numbers");
            s.push_back(v.get<double>());
        }
        return make_piecewise_linear(std::move(s));
    }
    if (type == "skew") throw DomainError("nested skew products are not supported as fibers");
    throw DomainError("unknown map type \"" + type + "\" (expected mp, c2, pwl or skew)");
}

inline ParsedMap parse_map_spec(const json& j)
{
    ParsedMap out;
    out.spec = j;
    if (j.is_object() && j.value("type", std::string{}) == "skew") {
        if (!j.contains("base_k") || !j.at("base_k").is_number_integer())
            throw DomainError("skew map spec needs an integer \"base_k\"");
        BaseEndo base = make_base_endo(j.at("base_k").get<int>());
        if (j.contains("fiber") == j.contains("fiber_rule"))
            throw DomainError("skew map spec needs exactly one of \"fiber\" or \"fiber_rule\"");
        if (j.contains("fiber")) {
            out.skew = make_skew_product(base, ConstantFiber{parse_circle_map(j.at("fiber"))});
        } else {
            const json& r = j.at("fiber_rule");
            if (r.value("family", std::string{}) != "c2")
                throw DomainError("fiber_rule family must be \"c2\"");
            out.skew = make_skew_product(base, C2FiberFamily{number_field(r, "alpha0"), number_field(r, "eps")});
        }
        return out;
    }
    out.circle = parse_circle_map(j);
    return out;
}

inline ParsedMap parse_map_spec(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("map spec is not valid JSON: ") + e.what());
    }
    return parse_map_spec(j);
}

inline ParsedMap parse_map_spec(const char* text) { return parse_map_spec(std::string(text)); }

inline json describe(const CircleMap& m)
{
    json j;
    j["family"] = to_string(m.family());
    j["degree"] = m.degree();
    j["smoothness"] = to_string(m.smoothness());
    json iv = json::array();
    for (const auto& b : m.branch_intervals()) iv.push_back(json::array({b.lo, b.hi}));
    j["branch_intervals"] = iv;
    auto ind = m.indifferent_points();
    j["indifferent_points"] = std::vector<double>(ind.begin(), ind.end());
    switch (m.family()) {
    case Family::manneville_pomeau: j["p"] = m.p(); break;
    case Family::c2_intermittent:
        j["alpha"] = m.alpha();
        j["a"] = m.coeff_a();
        j["b"] = m.coeff_b();
        break;
    case Family::piecewise_linear: {
        auto sl = m.slopes();
        j["slopes"] = std::vector<double>(sl.begin(), sl.end());
        break;
    }
    }
    return j;
}

inline json describe(const SkewProduct& F)
{
    json j;
    j["family"] = "skew";
    j["base_k"] = F.base().k;
    j["fiber_degree"] = F.fiber_degree();
    j["total_degree"] = F.total_degree();
    j["entropy_base"] = F.entropy_base();
    j["entropy_total"] = F.entropy_total();
    j["intermittent_fibers"] = F.intermittent_fibers();
    if (const auto* c = std::get_if<ConstantFiber>(&F.fiber_rule())) {
        j["fiber"] = describe(c->map);
    } else {
        const auto& r = std::get<C2FiberFamily>(F.fiber_rule());
        j["fiber_rule"] = json{{"family", "c2"}, {"alpha0", r.alpha0}, {"eps", r.eps}};
    }
    return j;
}

inline json describe(const ParsedMap& m) { return m.is_skew() ? describe(*m.skew) : describe(*m.circle); }

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Canonical serialization: compact dump of the ordered manifest.
inline std::string serialize_manifest(const json& manifest) { return manifest.dump(); }

inline json parse_manifest(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("manifest is not valid JSON: ") + e.what());
    }
}

inline std::string manifest_hash(const json& manifest) { return hex64(fnv1a64(serialize_manifest(manifest))); }

/// 12 significant digits; nan / inf / -inf for non-finite values.
inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct Range {
    double lo;
    double hi;
    double step;
};

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& what)
{
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DomainError("cannot parse " + what + " from \"" + s + "\"");
    }
}

/// "a:b:step"
inline Range parse_range(const std::string& s)
{
    auto parts = split(s, ':');
    if (parts.size() != 3) throw DomainError("range must look like a:b:step, got \"" + s + "\"");
    Range r{parse_double(parts[0], "range start"), parse_double(parts[1], "range end"),
            parse_double(parts[2], "range step")};
    if (!(r.lo < r.hi) || !(r.step > 0.0)) throw DomainError("range needs a < b and step > 0, got \"" + s + "\"");
    return r;
}

/// "a:b"
inline std::pair<double, double> parse_interval(const std::string& s)
{
    auto parts = split(s, ':');
    if (parts.size() != 2) throw DomainError("interval must look like a:b, got \"" + s + "\"");
    double a = parse_double(parts[0], "interval start");
    double b = parse_double(parts[1], "interval end");
    if (a > b) throw DomainError("interval needs a <= b, got \"" + s + "\"");
    return {a, b};
}

/// "12,16,20"
inline std::vector<int> parse_int_list(const std::string& s)
{
    std::vector<int> out;
    for (const auto& p : split(s, ',')) {
        double v = parse_double(p, "integer list entry");
        if (v != std::floor(v)) throw DomainError("integer list entry \"" + p + "\" is not an integer");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw DomainError("integer list is empty");
    return out;
}

/// CSV writer: a "# manifest_hash=" comment line, a header row, then rows.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::string& hash, const std::vector<std::string>& header) : out_(out)
    {
        out_ << "# manifest_hash=" << hash << "\n";
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << "\n";
        width_ = header.size();
    }

    /// Cells are preformatted strings (numbers via format_number).
    void row(const std::vector<std::string>& cells)
    {
        if (cells.size() != width_) throw DataError("CSV row width does not match the header");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ostream& out_;
    std::size_t width_ = 0;
};

} // namespace thermo::io
