// thermo: pressure curves, phase transitions and multifractal spectra from the command line.
//
// Exit codes: 0 ok, 2 usage or domain error, 3 numerical failure, 4 budget exceeded.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermo/io.hpp"
#include "thermo/thermo.hpp"

namespace {

using thermo::io::json;
using thermo::io::format_number;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitBudget = 4;

struct Common {
    std::string map;
    std::string manifest_in;
    std::string manifest_out;
    std::string output;
    std::string t_range = "-3:2:0.02";
    std::size_t N = 0;
    std::string method = "collocation";
};

struct Extra {
    std::vector<std::string> entropy;
    std::vector<std::string> hausdorff;
    std::size_t points = 201;
    std::string n_list = "12,16,20";
    std::string interval;
    std::vector<double> x;
    int k = 1;
    bool subleading = false;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw thermo::DomainError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string utc_timestamp()
{
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Manifest from flags; every numeric parameter the command reads is stored here.
json build_manifest(const std::string& command, const Common& c, const Extra& e)
{
    json m;
    m["tool_version"] = thermo::io::kToolVersion;
    m["command"] = command;
    if (c.map.empty()) throw thermo::DomainError("--map is required (JSON map spec)");
    m["map"] = json::parse(c.map);
    auto parsed = thermo::io::parse_map_spec(m["map"]);
    json p;
    if (command != "map-info") {
        std::size_t N = c.N;
        if (N == 0) N = parsed.is_skew() && !parsed.skew->constant_fiber() ? 128 : 4096;
        p["t"] = c.t_range;
        p["N"] = N;
        p["method"] = c.method;
    }
    if (command == "spectrum") {
        p["entropy"] = e.entropy;
        p["hausdorff"] = e.hausdorff;
        p["points"] = e.points;
    } else if (command == "rate") {
        p["points"] = e.points;
    } else if (command == "ldp") {
        p["n_list"] = e.n_list;
        if (e.interval.empty()) throw thermo::DomainError("ldp needs --interval a:b");
        p["interval"] = e.interval;
    } else if (command == "map-info") {
        p["x"] = e.x;
    } else if (command == "gap") {
        p["k"] = e.k;
        p["subleading"] = e.subleading;
    }
    m["params"] = p;
    m["outputs"] = json{{"prefix", c.output}};
    m["seed"] = 0;
    return m;
}

thermo::Method parse_method(const std::string& s)
{
    if (s == "collocation") return thermo::Method::collocation;
    if (s == "ulam") return thermo::Method::ulam;
    throw thermo::DomainError("method must be collocation or ulam, got \"" + s + "\"");
}

struct Run {
    json manifest;
    std::string hash;
    thermo::io::ParsedMap map;
    json params;
    std::string prefix;

    thermo::PressureOptions options() const
    {
        thermo::PressureOptions o;
        o.N = params.at("N").get<std::size_t>();
        o.method = parse_method(params.at("method").get<std::string>());
        return o;
    }

    thermo::PressureCurve curve(double extend_right = 0.0) const
    {
        auto r = thermo::io::parse_range(params.at("t").get<std::string>());
        auto opt = options();
        if (map.is_skew()) {
            if (opt.method != thermo::Method::collocation)
                throw thermo::DomainError("skew products support the collocation method only");
            return thermo::skew_pressure_curve(*map.skew, r.lo, r.hi + extend_right, r.step, opt);
        }
        return thermo::pressure_curve(*map.circle, r.lo, r.hi + extend_right, r.step, opt);
    }

    const thermo::CircleMap& circle(const char* what) const
    {
        if (!map.circle) throw thermo::DomainError(std::string(what) + " is only available for circle maps");
        return *map.circle;
    }
};

/// Sink for one named CSV: PREFIX_name.csv (or PREFIX.csv) or stdout.
class Output {
public:
    explicit Output(const Run& run) : run_(run) {}

    std::ostream& csv(const std::string& name)
    {
        if (run_.prefix.empty()) {
            if (wrote_stdout_) std::cout << "\n";
            wrote_stdout_ = true;
            return std::cout;
        }
        std::string path = run_.prefix + (name.empty() ? "" : "_" + name) + ".csv";
        files_.push_back(std::make_unique<std::ofstream>(path));
        if (!*files_.back()) throw thermo::DomainError("cannot write " + path);
        paths_.push_back(path);
        return *files_.back();
    }

    void summary(json body)
    {
        json s;
        s["manifest"] = run_.manifest;
        s["manifest_hash"] = run_.hash;
        s["timestamp"] = utc_timestamp();
        for (auto& [k, v] : body.items()) s[k] = v;
        if (run_.prefix.empty()) {
            std::cerr << s.dump(2) << "\n";
            return;
        }
        for (auto& f : files_) f->flush();
        std::string path = run_.prefix + ".json";
        std::ofstream out(path);
        if (!out) throw thermo::DomainError("cannot write " + path);
        out << s.dump(2) << "\n";
        paths_.push_back(path);
        for (const auto& p : paths_) std::cout << "wrote " << p << "\n";
    }

private:
    const Run& run_;
    std::vector<std::unique_ptr<std::ofstream>> files_;
    std::vector<std::string> paths_;
    bool wrote_stdout_ = false;
};

json number(double v)
{
    if (!std::isfinite(v)) return format_number(v);
    return v;
}

json curve_summary(const thermo::PressureCurve& c)
{
    json j;
    j["t0"] = c.t0 ? json(*c.t0) : json(nullptr);
    j["plateau"] = c.plateau ? json(*c.plateau) : json(nullptr);
    j["kink_classifier"] = c.slopes ? thermo::to_string(c.slopes->kind)
                                    : (c.plateau ? "undetermined" : thermo::to_string(thermo::TransitionKind::none));
    j["N"] = c.N;
    j["method"] = thermo::to_string(c.method);
    j["violations"] = c.violations;
    return j;
}

void cmd_pressure(const Run& run)
{
    auto c = run.curve();
    Output out(run);
    thermo::io::CsvWriter w(out.csv(""), run.hash, {"t", "P", "lambda_c", "sigma2", "converged"});
    for (std::size_t i = 0; i < c.size(); ++i)
        w.row({format_number(c.t[i]), format_number(c.P[i]), format_number(c.lambda_c[i]),
               format_number(c.sigma2[i]), c.converged[i] ? "1" : "0"});
    out.summary(curve_summary(c));
}

json slope_json(const thermo::SlopeReport& s)
{
    return json{{"anchor", s.anchor},          {"offsets", s.offsets},         {"slopes", s.slopes},
                {"retention", s.retention},    {"limit_slope", s.limit_slope}, {"kind", thermo::to_string(s.kind)}};
}

void cmd_transition(const Run& run)
{
    auto c = run.curve();
    if (!c.plateau) throw thermo::RangeError("no plateau: the map is uniformly expanding and has no transition");
    if (!c.t0) throw thermo::RangeError("plateau not reached on the t grid; widen it to the right");
    Output out(run);
    thermo::io::CsvWriter w(out.csv(""), run.hash, {"eps", "slope"});
    if (c.slopes)
        for (std::size_t i = 0; i < c.slopes->offsets.size(); ++i)
            w.row({format_number(c.slopes->offsets[i]), format_number(c.slopes->slopes[i])});
    json body = curve_summary(c);
    if (c.slopes) body["slopes"] = slope_json(*c.slopes);
    body["lambda_min"] = thermo::lambda_extremes(c).lambda_min;
    out.summary(body);
}

json spectrum_json(const thermo::SpectrumResult& r)
{
    return json{{"interval", json::array({r.a, r.b})},
                {"kind", thermo::to_string(r.kind)},
                {"value", number(r.value)},
                {"selection_point", r.selection_point},
                {"formula_branch", thermo::to_string(r.formula_branch)}};
}

json rate_json(const thermo::RateFunction& r)
{
    return json{{"lambda_min", r.lambda_min},
                {"lambda_max", r.lambda_max},
                {"lambda_mu0", r.lambda_mu0},
                {"t_min_used", r.t_min_used},
                {"t0", r.t0 ? json(*r.t0) : json(nullptr)},
                {"h_top", r.h_top},
                {"plateau_entropy", r.plateau_entropy},
                {"degenerate", r.degenerate},
                {"variational_residual", r.variational_residual}};
}

void write_rate_csv(std::ostream& os, const Run& run, const thermo::RateFunction& r)
{
    thermo::io::CsvWriter w(os, run.hash, {"s", "I"});
    for (std::size_t i = 0; i < r.s_grid.size(); ++i) w.row({format_number(r.s_grid[i]), format_number(r.I[i])});
}

void cmd_spectrum(const Run& run)
{
    auto c = run.curve();
    auto points = run.params.at("points").get<std::size_t>();
    auto rate = thermo::rate_function(c, points);
    // Answer every query before writing anything, so bad queries leave no files.
    json entropy = json::array();
    for (const auto& q : run.params.at("entropy")) {
        auto [a, b] = thermo::io::parse_interval(q.get<std::string>());
        entropy.push_back(spectrum_json(thermo::entropy_spectrum(rate, a, b)));
    }
    json hausdorff = json::array();
    for (const auto& q : run.params.at("hausdorff")) {
        auto [u, v] = thermo::io::parse_interval(q.get<std::string>());
        hausdorff.push_back(spectrum_json(thermo::hausdorff_spectrum(c, u, v)));
    }
    auto tau = thermo::tau_table(c, points);
    Output out(run);
    write_rate_csv(out.csv("rate"), run, rate);
    thermo::io::CsvWriter w(out.csv("tau"), run.hash, {"a", "tau_hat", "tau_check"});
    for (const auto& row : tau) w.row({format_number(row.a), format_number(row.tau_hat), format_number(row.tau_check)});
    json body = curve_summary(c);
    body["rate"] = rate_json(rate);
    body["entropy"] = entropy;
    body["hausdorff"] = hausdorff;
    out.summary(body);
}

void cmd_rate(const Run& run)
{
    auto c = run.curve();
    auto rate = thermo::rate_function(c, run.params.at("points").get<std::size_t>());
    Output out(run);
    write_rate_csv(out.csv(""), run, rate);
    json body = curve_summary(c);
    body["rate"] = rate_json(rate);
    out.summary(body);
}

void cmd_ldp(const Run& run)
{
    const auto& map = run.circle("ldp");
    auto ns = thermo::io::parse_int_list(run.params.at("n_list").get<std::string>());
    auto [a, b] = thermo::io::parse_interval(run.params.at("interval").get<std::string>());
    for (int n : ns) thermo::detail::check_budget(map.degree(), n);
    auto c = run.curve();
    auto rate = thermo::rate_function(c);
    auto rep = thermo::compare_rate(map, ns, a, b, rate);
    Output out(run);
    thermo::io::CsvWriter w(out.csv(""), run.hash,
                            {"n", "a", "b", "empirical_rate", "legendre_rate", "gap", "observed_min", "observed_max"});
    for (const auto& r : rep.rows)
        w.row({std::to_string(r.n), format_number(a), format_number(b), format_number(r.empirical),
               format_number(r.legendre), format_number(r.gap), format_number(r.observed_min),
               format_number(r.observed_max)});
    json body = curve_summary(c);
    body["extrapolated_rate"] = number(rep.extrapolated);
    body["extrapolated_gap"] = number(rep.extrapolated_gap);
    body["monotone"] = rep.monotone;
    body["control_case"] = rep.control_case;
    body["exact_path"] = rep.exact_path;
    out.summary(body);
}

void cmd_map_info(const Run& run)
{
    json j = thermo::io::describe(run.map);
    json evals = json::array();
    for (const auto& xv : run.params.at("x")) {
        double x = xv.get<double>();
        if (run.map.circle) {
            auto v = run.map.circle->evaluate(thermo::wrap_unit(x));
            json pre = json::array();
            for (const auto& p : run.map.circle->inverse_branches(thermo::wrap_unit(x)))
                pre.push_back(json{{"point", p.point}, {"derivative", p.derivative}, {"branch", p.branch}});
            evals.push_back(json{{"x", x}, {"value", v.value}, {"derivative", v.derivative}, {"preimages", pre}});
        } else {
            evals.push_back(json{{"x", x}, {"fiber", thermo::io::describe(run.map.skew->fiber_at(x))}});
        }
    }
    j["evaluations"] = evals;
    json s;
    s["manifest"] = run.manifest;
    s["manifest_hash"] = run.hash;
    s["map_info"] = j;
    if (run.prefix.empty()) {
        std::cout << s.dump(2) << "\n";
    } else {
        std::ofstream out(run.prefix + ".json");
        if (!out) throw thermo::DomainError("cannot write " + run.prefix + ".json");
        out << s.dump(2) << "\n";
        std::cout << "wrote " << run.prefix << ".json\n";
    }
}

void cmd_gap(const Run& run)
{
    int k = run.params.at("k").get<int>();
    if (k < 1) throw thermo::DomainError("--k must be >= 1");
    bool subleading = run.params.at("subleading").get<bool>();
    auto query = thermo::io::parse_range(run.params.at("t").get<std::string>());
    auto c = run.curve(static_cast<double>(k));
    auto opt = run.options();
    Output out(run);
    thermo::io::CsvWriter w(out.csv(""), run.hash, {"t", "rho_estimate", "ess_bound", "certified", "subleading_ratio"});
    std::size_t certified = 0;
    std::size_t rows = 0;
    for (double t : c.t) {
        if (t > query.hi + 1e-9) break;
        auto g = thermo::gap_certificate(c, t, k);
        if (subleading && run.map.circle) {
            auto d = thermo::build_discretization(*run.map.circle, t, opt.N, opt.method);
            g.subleading_ratio = thermo::leading_eigen(d).subleading_ratio;
        }
        certified += g.certified;
        ++rows;
        w.row({format_number(t), format_number(g.rho_estimate), format_number(g.ess_bound), g.certified ? "1" : "0",
               format_number(g.subleading_ratio)});
    }
    json body = curve_summary(c);
    body["k"] = k;
    body["certified_points"] = certified;
    body["points"] = rows;
    out.summary(body);
}

int dispatch(const std::string& command, const Common& c, const Extra& e)
{
    json manifest;
    if (!c.manifest_in.empty()) {
        manifest = thermo::io::parse_manifest(read_file(c.manifest_in));
        if (manifest.value("command", std::string{}) != command)
            throw thermo::DomainError("manifest was written for command \"" + manifest.value("command", std::string{}) +
                                      "\", not \"" + command + "\"");
    } else {
        manifest = build_manifest(command, c, e);
    }
    Run run{manifest, thermo::io::manifest_hash(manifest), thermo::io::parse_map_spec(manifest.at("map")),
            manifest.at("params"), manifest.at("outputs").value("prefix", std::string{})};
    if (!c.manifest_out.empty()) {
        std::ofstream mo(c.manifest_out);
        if (!mo) throw thermo::DomainError("cannot write " + c.manifest_out);
        mo << thermo::io::serialize_manifest(manifest);
    }
    if (command == "pressure") cmd_pressure(run);
    else if (command == "transition") cmd_transition(run);
    else if (command == "spectrum") cmd_spectrum(run);
    else if (command == "rate") cmd_rate(run);
    else if (command == "ldp") cmd_ldp(run);
    else if (command == "map-info") cmd_map_info(run);
    else if (command == "gap") cmd_gap(run);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Thermodynamic formalism toolkit for intermittent circle maps and skew products"};
    app.require_subcommand(1);
    Common common;
    Extra extra;

    auto add_common = [&](CLI::App* sub, bool sweep) {
        sub->add_option("--map", common.map, "map spec as JSON, e.g. '{\"type\":\"mp\",\"p\":0.5}'");
        sub->add_option("--manifest", common.manifest_in, "run from a saved manifest instead of flags");
        sub->add_option("--write-manifest", common.manifest_out, "save the run manifest to this path");
        sub->add_option("-o,--output", common.output, "output prefix (default: CSV to stdout, summary to stderr)");
        if (sweep) {
            sub->add_option("--t", common.t_range, "t grid a:b:step")->capture_default_str();
            sub->add_option("--N", common.N, "grid size (power of two; default 4096, 128 for joint 2D)");
            sub->add_option("--method", common.method, "collocation or ulam")->capture_default_str();
        }
    };

    auto* pressure = app.add_subcommand("pressure", "pressure curve P(t)");
    add_common(pressure, true);
    auto* transition = app.add_subcommand("transition", "phase transition t0 and left-slope classifier");
    add_common(transition, true);
    auto* spectrum = app.add_subcommand("spectrum", "rate function, tau tables and spectrum queries");
    add_common(spectrum, true);
    spectrum->add_option("--entropy", extra.entropy, "entropy spectrum query a:b (repeatable)");
    spectrum->add_option("--hausdorff", extra.hausdorff, "Hausdorff spectrum query u:v (repeatable)");
    spectrum->add_option("--points", extra.points, "grid points for I and tau")->capture_default_str();
    auto* rate = app.add_subcommand("rate", "Legendre rate function I(s)");
    add_common(rate, true);
    rate->add_option("--points", extra.points, "s grid points")->capture_default_str();
    auto* ldp = app.add_subcommand("ldp", "cylinder-count large deviations vs the rate function");
    add_common(ldp, true);
    ldp->add_option("--n-list", extra.n_list, "word lengths, comma separated")->capture_default_str();
    ldp->add_option("--interval", extra.interval, "Birkhoff-average interval a:b");
    auto* info = app.add_subcommand("map-info", "describe a map and evaluate it");
    add_common(info, false);
    info->add_option("--x", extra.x, "points to evaluate (repeatable)");
    auto* gap = app.add_subcommand("gap", "spectral gap certificates on a t grid");
    add_common(gap, true);
    gap->add_option("--k", extra.k, "smoothness index k")->capture_default_str();
    gap->add_flag("--subleading", extra.subleading, "also estimate |lambda_2|/rho by deflation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, common, extra);
    } catch (const thermo::BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const thermo::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const thermo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
