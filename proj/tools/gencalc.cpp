// gencalc: command-line front end for the generalized-function library.
//
// Every subcommand resolves its options in three layers: built-in defaults,
// then `--config run.json`, then explicit flags. The resolved set is echoed in
// each report and can be written back with `--save-config`.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gencalc/association.hpp"
#include "gencalc/asymptotics.hpp"
#include "gencalc/distribution.hpp"
#include "gencalc/embedding.hpp"
#include "gencalc/error.hpp"
#include "gencalc/expression_parser.hpp"
#include "gencalc/mollifier.hpp"
#include "gencalc/netexpr.hpp"
#include "gencalc/parallel.hpp"
#include "gencalc/spacetime.hpp"
#include "gencalc/test_object.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::json;
using namespace gencalc;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIndeterminate = 2;
constexpr int kExitFail = 3;

struct Opt {
    std::string name;  // JSON key; the flag is the same with '-' for '_'
    json def;
    std::string help;
};

struct Context {
    std::string command;
    json opts;  // resolved
    bool dry_run = false;
};

using Runner = std::function<int(Context&)>;

struct Command {
    std::string name;
    std::string description;
    std::vector<Opt> opts;
    Runner run;
};

std::string flag_of(const std::string& key) {
    std::string f = key;
    for (char& c : f)
        if (c == '_') c = '-';
    return "--" + f;
}

std::string timestamp() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": invalid JSON: " + e.what());
    }
}

// Runs a loader and prefixes schema errors with the file name.
template <class F>
auto from_file(const std::string& path, F&& load) {
    const json j = read_json_file(path);
    try {
        return load(j);
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    out << text;
}

// Coerces a value to the type of the option's default.
json coerce(const Opt& o, const json& v, const std::string& where) {
    const json& d = o.def;
    if (d.is_boolean()) {
        if (v.is_boolean()) return v;
        throw SchemaError(where + ": expected a boolean");
    }
    if (d.is_number_integer()) {
        if (v.is_number_integer()) return v;
        if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())) return static_cast<long>(v.get<double>());
        throw SchemaError(where + ": expected an integer");
    }
    if (d.is_number()) {
        if (v.is_number()) return v.get<double>();
        throw SchemaError(where + ": expected a number");
    }
    if (v.is_string()) return v;
    throw SchemaError(where + ": expected a string");
}

json coerce_flag(const Opt& o, const std::string& raw) {
    const std::string flag = flag_of(o.name);
    const json& d = o.def;
    try {
        std::size_t used = 0;
        if (d.is_number_integer()) {
            const long v = std::stol(raw, &used);
            if (used == raw.size()) return v;
        } else if (d.is_number()) {
            const double v = std::stod(raw, &used);
            if (used == raw.size()) return v;
        } else {
            return raw;
        }
    } catch (const std::exception&) {
    }
    throw ArgumentError(flag + ": cannot parse '" + raw + "' as " + (d.is_number_integer() ? "an integer" : "a number"));
}

std::vector<Opt> common_opts() {
    return {{"out", "", "output path (JSON report unless noted)"},
            {"csv", "", "optional CSV table output"},
            {"threads", 0, "worker cap (0: GENCALC_THREADS or hardware)"},
            {"seed", 1, "seed for random sample-point selection"}};
}

// ---------------------------------------------------------------------------
// Shared parsing helpers

EpsGrid parse_grid(const std::string& s) {
    if (s == "default") return EpsGrid{};
    if (s == "order") return EpsGrid::order_grid();
    double start = 0, ratio = 0;
    int count = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (!(is >> start >> c1 >> ratio >> c2 >> count) || c1 != ',' || c2 != ',' || !is.eof())
        throw ArgumentError("--eps-grid: expected 'default', 'order' or 'start,ratio,count'");
    return EpsGrid(start, ratio, count);
}

TestFunction load_mollifier(const json& o, int default_q) {
    const std::string path = o.value("mollifier", "");
    if (!path.empty()) return from_file(path, [](const json& j) { return test_function_from_json(j); });
    const int q = o.contains("q") ? o["q"].get<int>() : default_q;
    return build_vanishing_moment_mollifier(q, 1.0);
}

std::vector<double> parse_numbers(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ArgumentError(flag + ": cannot parse '" + item + "'");
        }
    }
    return out;
}

std::vector<std::array<double, 2>> parse_points(const std::string& s) {
    std::vector<std::array<double, 2>> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto v = parse_numbers(item, "--points");
        if (v.size() != 2) throw ArgumentError("--points: each point needs two coordinates, got '" + item + "'");
        out.push_back({v[0], v[1]});
    }
    if (out.empty()) throw ArgumentError("--points: no points given");
    return out;
}

NetExpr load_net(const std::string& path, const std::string& flag) {
    if (path.empty()) throw ArgumentError(flag + " is required");
    return from_file(path, [](const json& j) { return net_from_json(j); });
}

std::vector<TestFunction> load_battery(const std::string& path) {
    if (path.empty()) return default_battery();
    return from_file(path, [](const json& j) { return battery_from_json(j); });
}

// Report envelope: the payload plus timestamp and resolved options.
json envelope(const Context& ctx, json payload) {
    payload["command"] = ctx.command;
    payload["timestamp"] = timestamp();
    payload["run_config"] = ctx.opts;
    return payload;
}

void emit(const Context& ctx, const json& report) {
    const std::string out = ctx.opts["out"].get<std::string>();
    if (out.empty())
        std::cout << report.dump(2) << "\n";
    else
        write_text(out, report.dump(2) + "\n");
}

void emit_csv(const Context& ctx, const std::string& csv) {
    const std::string path = ctx.opts["csv"].get<std::string>();
    if (!path.empty()) write_text(path, csv);
}

int dry(const Context& ctx, json plan) {
    plan["command"] = ctx.command;
    plan["resolved_options"] = ctx.opts;
    plan["dry_run"] = true;
    std::cout << plan.dump(2) << "\n";
    return kExitOk;
}

int verdict_exit(Verdict v) {
    switch (v) {
        case Verdict::moderate:
        case Verdict::negligible: return kExitOk;
        case Verdict::indeterminate: return kExitIndeterminate;
        default: return kExitFail;
    }
}

// ---------------------------------------------------------------------------
// Subcommands

int run_mollifier(Context& ctx) {
    const auto& o = ctx.opts;
    const int q = o["q"], dim = o["dimension"];
    const double radius = o["radius"];
    const auto construction = construction_from_string(o["construction"].get<std::string>());
    if (ctx.dry_run) return dry(ctx, {{"plan", "build A_q mollifier"}, {"q", q}, {"dimension", dim}});
    const TestFunction phi = build_vanishing_moment_mollifier(q, radius, dim, construction);
    const json j = to_json(phi);
    const std::string out = o["out"];
    if (out.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_text(out, j.dump(2) + "\n");
    return kExitOk;
}

int run_embed(Context& ctx) {
    const auto& o = ctx.opts;
    const std::string spec = o["spec"], function = o["function"], compose = o["compose"];
    if (spec.empty() == function.empty()) throw ArgumentError("give exactly one of --spec and --function");
    NetExpr net;
    json plan{{"plan", "embed"}};
    if (!spec.empty()) {
        const auto u = from_file(spec, [](const json& j) { return distribution_from_json(j); });
        const TestFunction phi = load_mollifier(o, 2);
        const SmoothingKernelNet kernel(phi, o["amplitude"].get<double>(), o["eps_power"].get<double>());
        net = embed_distribution(u, std::make_shared<const SmoothingKernelNet>(kernel));
        plan["distribution"] = to_json(*u);
    } else {
        net = embed_smooth(parse_expression(function));
        plan["function"] = function;
    }
    if (!compose.empty()) {
        // 'u' stands for the embedded net; x, y, z, w are coordinates.
        constexpr int kPlaceholder = 3;
        if (net.dimension() > kPlaceholder) throw ArgumentError("--compose supports nets of dimension up to 3");
        const NetExpr outer = parse_expression(compose, {{"x", 0}, {"y", 1}, {"z", 2}, {"u", kPlaceholder}});
        net = substitute(outer, kPlaceholder, net);
        plan["compose"] = compose;
    }
    if (ctx.dry_run) return dry(ctx, plan);
    emit(ctx, to_json(net));
    return kExitOk;
}

int run_classify(Context& ctx) {
    const auto& o = ctx.opts;
    NetExpr net = load_net(o["net"], "--net");
    const std::string minus = o["minus"];
    if (!minus.empty()) net = net - load_net(minus, "--minus");
    const CompactBox K = CompactBox::parse(o["box"], o["resolution"].get<int>());
    const EpsGrid grid = parse_grid(o["eps_grid"]);
    const std::string test = o["test"];
    if (test != "moderate" && test != "negligible") throw ArgumentError("--test: expected moderate or negligible");
    if (ctx.dry_run) return dry(ctx, {{"plan", "classify " + test}, {"box", K.to_string()}, {"eps", grid.values()}});
    const AsymptoticReport r = test == "moderate" ? classify_moderate(net, K, o["alpha_max"], grid)
                                                  : classify_negligible(net, K, o["alpha_max"], o["m_max"], grid);
    json j = to_json(r);
    std::ostringstream csv;
    csv.precision(17);
    csv << "alpha,eps,sup\n";
    for (const auto& a : r.per_alpha) {
        std::string alpha;
        for (int k : a.alpha) alpha += (alpha.empty() ? "" : " ") + std::to_string(k);
        for (const auto& s : a.samples) csv << alpha << "," << s.eps << "," << s.sup << "\n";
    }
    emit_csv(ctx, csv.str());
    emit(ctx, envelope(ctx, j));
    std::cerr << "verdict: " << r.verdict_label() << "\n";
    return verdict_exit(r.verdict);
}

int run_associate(Context& ctx) {
    const auto& o = ctx.opts;
    const NetExpr net = load_net(o["net"], "--net");
    const auto battery = load_battery(o["battery"]);
    const EpsGrid grid = parse_grid(o["eps_grid"]);
    DistributionPtr candidate;
    if (const std::string c = o["candidate"]; !c.empty())
        candidate = from_file(c, [](const json& j) { return distribution_from_json(j); });
    if (ctx.dry_run)
        return dry(ctx, {{"plan", "associate"}, {"battery_size", battery.size()}, {"eps", grid.values()}});
    const AssociationResult r = associate(net, battery, grid);
    json j = to_json(r);
    int code = r.verdict == AssociationVerdict::associated  ? kExitOk
               : r.verdict == AssociationVerdict::divergent ? kExitFail
                                                            : kExitIndeterminate;
    if (candidate && r.verdict == AssociationVerdict::associated) {
        const MatchReport m = match_candidate(r, *candidate);
        j["candidate"] = to_json(*candidate);
        j["match"] = to_json(m);
        if (!m.match) code = kExitFail;
    }
    emit_csv(ctx, pairing_table_csv(r));
    emit(ctx, envelope(ctx, j));
    std::cerr << "verdict: " << r.verdict_label() << "\n";
    return code;
}

int run_verify_testobject(Context& ctx) {
    const auto& o = ctx.opts;
    const TestFunction phi = load_mollifier(o, 4);
    const SmoothingKernelNet kernel(phi, o["amplitude"].get<double>(), o["eps_power"].get<double>());
    TestObjectOptions to;
    to.box = CompactBox::parse(o["box"], o["resolution"].get<int>());
    to.grid = parse_grid(o["eps_grid"]);
    if (ctx.dry_run) return dry(ctx, {{"plan", "verify test object"}, {"kernel", to_json(kernel)}});
    const auto r = verify_test_object(kernel, default_distribution_battery(), default_smooth_battery(),
                                      default_test_function_battery(phi), to);
    emit(ctx, envelope(ctx, to_json(r)));
    std::cerr << "test object: " << (r.pass() ? "pass" : "fail") << "\n";
    return r.pass() ? kExitOk : kExitFail;
}

RegularizedMetric brinkmann_from(const json& o) {
    const TestFunction phi = load_mollifier(o, 0);
    return build_brinkmann(parse_profile(o["profile"]), strict_delta_net(phi));
}

std::vector<GeodesicInit> load_inits(const json& o) {
    const std::string path = o["init"];
    if (!path.empty()) {
        return from_file(path, [](const json& j) {
            std::vector<GeodesicInit> v;
            // One init (object or 7-array) or an array of them.
            if (j.is_array() && !j.empty() && (j[0].is_array() || j[0].is_object())) {
                for (std::size_t i = 0; i < j.size(); ++i) {
                    try {
                        v.push_back(geodesic_init_from_json(j[i]));
                    } catch (const SchemaError& e) {
                        std::string msg = e.what();
                        throw SchemaError("$[" + std::to_string(i) + "]" + msg.substr(1));
                    }
                }
            } else {
                v.push_back(geodesic_init_from_json(j));
            }
            return v;
        });
    }
    const auto vals = parse_numbers(o["init_values"], "--init-values");
    json arr = json::array();
    for (double d : vals) arr.push_back(d);
    try {
        return {geodesic_init_from_json(arr)};
    } catch (const SchemaError& e) {
        throw ArgumentError(std::string("--init-values: ") + e.what());
    }
}

int run_geodesic(Context& ctx) {
    const auto& o = ctx.opts;
    const RegularizedMetric m = brinkmann_from(o);
    const auto inits = load_inits(o);
    const EpsGrid grid = parse_grid(o["eps_grid"]);
    std::vector<double> eps = grid.values();
    if (o["eps"].get<double>() > 0.0) eps = {o["eps"].get<double>()};
    const bool scan = o["scan"];
    if (ctx.dry_run) {
        json ji = json::array();
        for (const auto& i : inits) ji.push_back(to_json(i));
        return dry(ctx, {{"plan", scan ? "completeness scan" : "geodesic solve"}, {"inits", ji}, {"eps", eps}});
    }
    const ChristoffelField G = christoffel(m);
    json report{{"schema", "gencalc.geodesic/1"}, {"profile", o["profile"]}};
    if (scan) {
        const CompletenessTable t = completeness_scan(m, G, inits, grid, o["u_max"].get<double>());
        report["completeness"] = to_json(t);
        bool all = true;
        for (const auto& r : t.rows)
            for (bool c : r.complete) all = all && c;
        report["note"] = "completeness is decided on [u0, u_max]; off-pulse motion is free";
        emit(ctx, envelope(ctx, report));
        return all ? kExitOk : kExitFail;
    }
    GeodesicOptions go;
    go.u_end = o["u_end"];
    std::vector<GeodesicSolution> sols(inits.size() * eps.size());
    parallel_for(sols.size(), [&](std::size_t k) {
        sols[k] = geodesic_solve(m, G, eps[k % eps.size()], inits[k / eps.size()], go);
    });
    std::string csv = "eps,u,v,x,y,du_v,du_x,du_y\n";
    bool all = true;
    report["solutions"] = json::array();
    for (const auto& s : sols) {
        csv += s.csv(false);
        all = all && s.complete;
        report["solutions"].push_back(to_json(s));
    }
    report["limits"] = json::array();
    for (std::size_t i = 0; i < inits.size(); ++i) {
        std::vector<GeodesicSolution> fam(sols.begin() + static_cast<long>(i * eps.size()),
                                          sols.begin() + static_cast<long>((i + 1) * eps.size()));
        try {
            report["limits"].push_back(to_json(limit_profile(fam)));
        } catch (const PreconditionError& e) {
            report["limits"].push_back({{"init", to_json(inits[i])}, {"skipped", e.what()}});
        }
    }
    // For this command --out names the trajectory CSV; the JSON report goes
    // to --report (stdout when absent).
    const std::string out = o["out"], rep = o["report"];
    if (!out.empty()) write_text(out, csv);
    emit_csv(ctx, csv);
    const json env = envelope(ctx, report);
    if (rep.empty())
        std::cout << env.dump(2) << "\n";
    else
        write_text(rep, env.dump(2) + "\n");
    return all ? kExitOk : kExitFail;
}

int run_curvature(Context& ctx) {
    const auto& o = ctx.opts;
    const RegularizedMetric m = brinkmann_from(o);
    const auto points = parse_points(o["points"]);
    const auto battery = load_battery(o["battery"]);
    const EpsGrid grid = parse_grid(o["eps_grid"]);
    const bool assoc = o["associate"];
    if (ctx.dry_run) return dry(ctx, {{"plan", assoc ? "curvature + Ricci association" : "curvature"}});
    const ChristoffelField G = christoffel(m);
    const CurvatureField C = curvature(m, G);
    json report{{"schema", "gencalc.curvature/1"}, {"profile", o["profile"]}, {"signature", m.signature}};
    report["ricci_constant"] = brinkmann_ricci_constant;
    auto nonzero = [&](auto&& get, int rank) {
        json list = json::array();
        const int n = 4;
        const int total = rank == 3 ? n * n * n : n * n;
        for (int t = 0; t < total; ++t) {
            const NetExpr& e = get(t);
            if (e.is_zero()) continue;
            std::string name;
            int r = t;
            std::vector<int> idx;
            for (int k = 0; k < rank; ++k) {
                idx.insert(idx.begin(), r % n);
                r /= n;
            }
            for (int k : idx) name += m.labels[static_cast<std::size_t>(k)];
            list.push_back(name);
        }
        return list;
    };
    report["christoffel_nonzero"] = nonzero([&](int t) -> const NetExpr& { return G.gamma[static_cast<std::size_t>(t)]; }, 3);
    report["ricci_nonzero"] = nonzero([&](int t) -> const NetExpr& { return C.ricci[static_cast<std::size_t>(t)]; }, 2);

    // Pointwise identities at seeded random samples, half of them inside the pulse.
    std::mt19937_64 rng(o["seed"].get<unsigned long>());
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const int samples = o["samples"];
    const NetExpr lap = derive(derive(m.profile, chart::x), chart::x) + derive(derive(m.profile, chart::y), chart::y);
    const NetExpr rho = scaled_kernel(m.pulse->base().factor(0), chart::u);
    double antisym = 0.0, bianchi = 0.0, ricci_dev = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double eps = std::pow(10.0, -0.5 - 1.5 * (0.5 * (unit(rng) + 1.0)));
        std::array<double, 4> x{unit(rng), unit(rng), unit(rng), unit(rng)};
        if (s % 2 == 0) x[0] *= eps * m.pulse_radius;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int l = 0; l < 4; ++l) {
                        antisym = std::max(antisym, std::abs(eval(C.R(i, j, k, l), eps, x) + eval(C.R(i, j, l, k), eps, x)));
                        if (k < l && l < 4 && j < k)
                            bianchi = std::max(bianchi, std::abs(eval(C.R(i, j, k, l), eps, x) + eval(C.R(i, k, l, j), eps, x) +
                                                                 eval(C.R(i, l, j, k), eps, x)));
                    }
        const double expect = brinkmann_ricci_constant * eval(lap, eps, x) * eval(rho, eps, x);
        ricci_dev = std::max(ricci_dev, std::abs(eval(C.Ric(0, 0), eps, x) - expect) / std::max(1.0, std::abs(expect)));
    }
    report["checks"] = {{"samples", samples},
                        {"max_antisymmetry_residual", antisym},
                        {"max_bianchi_residual", bianchi},
                        {"max_ricci_uu_relative_deviation", ricci_dev}};
    int code = kExitOk;
    if (assoc) {
        const auto res = ricci_associate(m, C, battery, points, grid);
        report["ricci_association"] = to_json(res);
        for (const auto& r : res) {
            if (r.association.verdict == AssociationVerdict::indeterminate)
                code = std::max(code, kExitIndeterminate);
            else if (!r.matched)
                code = kExitFail;
        }
    }
    emit(ctx, envelope(ctx, report));
    return code;
}

RegularizedMetric metric_from(const json& o) {
    const std::string spec = o["metric"];
    if (spec == "brinkmann") return brinkmann_from(o);
    if (spec == "flat") return flat_metric();
    if (spec == "kink") return kink_metric(load_mollifier(o, 2));
    return from_file(spec, [&](const json& j) {
        if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw SchemaError("$.kind: missing");
        const std::string kind = j["kind"];
        if (kind == "flat") return flat_metric();
        if (kind == "kink") return kink_metric(load_mollifier(o, 2));
        if (kind == "brinkmann") {
            if (!j.contains("profile") || !j["profile"].is_string()) throw SchemaError("$.profile: expected a string");
            return build_brinkmann(parse_profile(j["profile"]), strict_delta_net(load_mollifier(o, 0)));
        }
        if (kind != "general") throw SchemaError("$.kind: unknown metric kind '" + kind + "'");
        if (!j.contains("labels") || !j["labels"].is_array()) throw SchemaError("$.labels: expected an array");
        std::vector<std::string> labels;
        std::map<std::string, int> vars;
        for (std::size_t i = 0; i < j["labels"].size(); ++i) {
            if (!j["labels"][i].is_string()) throw SchemaError("$.labels[" + std::to_string(i) + "]: expected a string");
            labels.push_back(j["labels"][i]);
            vars[labels.back()] = static_cast<int>(i);
        }
        const auto& rows = j.value("components", json());
        if (!rows.is_array() || rows.size() != labels.size()) throw SchemaError("$.components: expected one row per label");
        std::vector<NetExpr> comps;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!rows[r].is_array() || rows[r].size() != labels.size())
                throw SchemaError("$.components[" + std::to_string(r) + "]: expected one entry per label");
            for (std::size_t c = 0; c < rows[r].size(); ++c) {
                const auto& e = rows[r][c];
                const std::string where = "$.components[" + std::to_string(r) + "][" + std::to_string(c) + "]";
                if (e.is_number())
                    comps.push_back(NetExpr::constant(e.get<double>()));
                else if (e.is_string())
                    comps.push_back(parse_expression(e.get<std::string>(), vars));
                else
                    throw SchemaError(where + ": expected a number or an expression string");
            }
        }
        return general_metric(labels, comps, j.value("name", "general"));
    });
}

int run_gtcheck(Context& ctx) {
    const auto& o = ctx.opts;
    const RegularizedMetric m = metric_from(o);
    std::string box = o["box"];
    if (box.empty()) {
        for (int a = 0; a < m.dimension(); ++a) box += (a ? "x" : "") + std::string("[-1,1]");
    }
    const CompactBox K = CompactBox::parse(box, o["resolution"].get<int>());
    const EpsGrid grid = parse_grid(o["eps_grid"]);
    if (ctx.dry_run) return dry(ctx, {{"plan", "gt-regularity check"}, {"metric", m.name}, {"box", K.to_string()}});
    const GtRegularityReport r = gt_check(m, K, grid);
    emit(ctx, envelope(ctx, to_json(r)));
    std::cerr << "verdict: " << to_string(r.verdict) << "\n";
    switch (r.verdict) {
        case GtVerdict::consistent: return kExitOk;
        case GtVerdict::indeterminate: return kExitIndeterminate;
        default: return kExitFail;
    }
}

std::vector<Command> commands() {
    const std::string grid_help = "eps grid: default | order | start,ratio,count";
    return {
        {"mollifier",
         "build an A_q mollifier with its moment certificate",
         {{"q", 2, "vanishing moment order"},
          {"radius", 1.0, "support radius"},
          {"dimension", 1, "dimension (tensor product)"},
          {"construction", "even", "even | exact_order"}},
         run_mollifier},
        {"embed",
         "embed a distribution (--spec) or a smooth function (--function) as a net",
         {{"spec", "", "distribution JSON"},
          {"function", "", "smooth expression in x, y, z, w"},
          {"mollifier", "", "mollifier JSON (default: A_2, radius 1)"},
          {"q", 2, "moment order of the default mollifier"},
          {"amplitude", 1.0, "kernel amplitude"},
          {"eps_power", 0.0, "kernel eps exponent"},
          {"compose", "", "expression in u (the embedded net) and x, y, z"}},
         run_embed},
        {"classify",
         "moderateness / negligibility verdict for a net",
         {{"net", "", "net JSON"},
          {"minus", "", "optional second net; classifies net - minus"},
          {"test", "moderate", "moderate | negligible"},
          {"box", "[-1,1]", "compact box"},
          {"resolution", defaults::box_resolution, "points per box axis"},
          {"alpha_max", defaults::alpha_max, "max derivative order"},
          {"m_max", defaults::m_max, "negligibility order"},
          {"eps_grid", "default", grid_help}},
         run_classify},
        {"associate",
         "weak limit of a net against a test-function battery",
         {{"net", "", "net JSON"},
          {"battery", "", "battery JSON (default battery when empty)"},
          {"candidate", "", "distribution JSON to match"},
          {"eps_grid", "default", grid_help}},
         run_associate},
        {"verify-testobject",
         "check the test-object conditions for a smoothing kernel",
         {{"mollifier", "", "mollifier JSON (default: A_4, radius 1)"},
          {"q", 4, "moment order of the default mollifier"},
          {"amplitude", 1.0, "kernel amplitude"},
          {"eps_power", 0.0, "kernel eps exponent"},
          {"box", "[-1,1]", "compact box"},
          {"resolution", defaults::box_resolution, "points per box axis"},
          {"eps_grid", "default", grid_help}},
         run_verify_testobject},
        {"geodesic",
         "geodesics of a regularized impulsive Brinkmann wave; --out writes the trajectory CSV",
         {{"profile", "x^2-y^2", "profile f(x, y)"},
          {"mollifier", "", "pulse mollifier JSON (default: A_0 bump, radius 1)"},
          {"q", 0, "moment order of the default pulse mollifier"},
          {"init", "", "initial data JSON (object, 7-array, or a list)"},
          {"init_values", "-1,0,1,1,0,0,0", "u0,v0,x0,y0,dv0,dx0,dy0"},
          {"eps_grid", "default", grid_help},
          {"eps", 0.0, "single eps (overrides the grid when > 0)"},
          {"u_end", 3.0, "integration end"},
          {"scan", false, "run a completeness scan instead"},
          {"u_max", defaults::completeness_u_max, "completeness scan end"},
          {"report", "", "JSON report path (stdout when empty)"}},
         run_geodesic},
        {"curvature",
         "Christoffels, Riemann and Ricci of a Brinkmann wave; optional distributional Ricci",
         {{"profile", "x^2+y^2", "profile f(x, y)"},
          {"mollifier", "", "pulse mollifier JSON"},
          {"q", 0, "moment order of the default pulse mollifier"},
          {"associate", false, "associate Ricci_uu along u"},
          {"points", "1,0", "evaluation points x,y;x,y;..."},
          {"battery", "", "battery JSON"},
          {"samples", 100, "random samples for pointwise identities"},
          {"eps_grid", "default", grid_help}},
         run_curvature},
        {"gtcheck",
         "Geroch-Traschen regularity check",
         {{"metric", "brinkmann", "brinkmann | flat | kink | metric JSON"},
          {"profile", "x^2+y^2", "profile for brinkmann"},
          {"mollifier", "", "mollifier JSON"},
          {"q", 0, "moment order of the default mollifier"},
          {"box", "", "compact box (default [-1,1]^dim)"},
          {"resolution", 17, "points per box axis"},
          {"eps_grid", "default", grid_help}},
         run_gtcheck},
    };
}

json resolve(const Command& cmd, const std::vector<Opt>& all, const std::map<std::string, std::string>& raw,
             const std::map<std::string, bool>& flags, CLI::App* sub, const std::string& config_path) {
    json o = json::object();
    for (const auto& opt : all) o[opt.name] = opt.def;
    if (!config_path.empty()) {
        const json cfg = read_json_file(config_path);
        const json* opts = &cfg;
        if (cfg.is_object() && cfg.contains("options")) {
            if (cfg.contains("command") && cfg["command"] != cmd.name)
                throw SchemaError(config_path + ": $.command: config is for '" + cfg["command"].dump() + "'");
            opts = &cfg["options"];
        }
        if (!opts->is_object()) throw SchemaError(config_path + ": $.options: expected an object");
        const std::string base = opts == &cfg ? "$." : "$.options.";
        for (const auto& [key, value] : opts->items()) {
            if (key == "schema" || key == "command") continue;
            const auto it = std::find_if(all.begin(), all.end(), [&](const Opt& x) { return x.name == key; });
            if (it == all.end()) throw SchemaError(config_path + ": " + base + key + ": unknown option");
            o[key] = coerce(*it, value, config_path + ": " + base + key);
        }
    }
    for (const auto& opt : all) {
        const std::string flag = flag_of(opt.name);
        if (sub->count(flag) == 0) continue;
        if (opt.def.is_boolean())
            o[opt.name] = flags.at(opt.name);
        else
            o[opt.name] = coerce_flag(opt, raw.at(opt.name));
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gencalc: generalized functions, association and impulsive-wave spacetimes"};
    app.require_subcommand(1);
    const auto cmds = commands();

    struct Bound {
        const Command* cmd;
        CLI::App* sub;
        std::vector<Opt> all;
        std::map<std::string, std::string> raw;
        std::map<std::string, bool> flags;
        std::string config, save_config;
        bool dry_run = false;
    };
    std::vector<std::unique_ptr<Bound>> bound;
    for (const auto& c : cmds) {
        auto b = std::make_unique<Bound>();
        b->cmd = &c;
        b->sub = app.add_subcommand(c.name, c.description);
        b->all = c.opts;
        for (auto& o : common_opts()) b->all.push_back(o);
        for (const auto& o : b->all) {
            if (o.def.is_boolean()) {
                b->flags[o.name] = false;
                b->sub->add_flag(flag_of(o.name), b->flags[o.name], o.help);
            } else {
                b->raw[o.name] = "";
                b->sub->add_option(flag_of(o.name), b->raw[o.name], o.help + " (default: " + o.def.dump() + ")");
            }
        }
        b->sub->add_option("--config", b->config, "run config JSON");
        b->sub->add_option("--save-config", b->save_config, "write the resolved run config here");
        b->sub->add_flag("--dry-run", b->dry_run, "validate inputs and print the plan");
        bound.push_back(std::move(b));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    for (auto& b : bound) {
        if (!b->sub->parsed()) continue;
        try {
            Context ctx;
            ctx.command = b->cmd->name;
            ctx.opts = resolve(*b->cmd, b->all, b->raw, b->flags, b->sub, b->config);
            ctx.dry_run = b->dry_run;
            if (const int t = ctx.opts["threads"]; t > 0) set_thread_count(t);
            if (!b->save_config.empty())
                write_text(b->save_config,
                           json{{"schema", "gencalc.run_config/1"}, {"command", ctx.command}, {"options", ctx.opts}}.dump(2) + "\n");
            return b->cmd->run(ctx);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitError;
        }
    }
    return kExitError;
}
