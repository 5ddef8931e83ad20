// carroll: command-line front end for the scenario catalog, invariant suite,
// geodesic integrator and bundle linearization.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "carroll/carroll.hpp"

using namespace carroll;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kNumeric = 3 };

struct Globals {
    std::string scenario;
    std::vector<std::string> params;
    double tol = 1e-10;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
};

ParamMap parse_params(const std::vector<std::string>& kvs) {
    ParamMap p;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ContractViolation("--param expects k=v, got '" + kv + "'");
        p[ini::trim(kv.substr(0, eq))] = ini::trim(kv.substr(eq + 1));
    }
    return p;
}

Vec parse_vec(const std::string& src, const std::string& what) {
    const auto v = evaluate_list(src);
    if (v.empty()) throw ContractViolation(what + " is empty");
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Primary output goes to --out when given, stdout otherwise; summaries then go to
// the other stream so piped CSV stays clean.
struct Sink {
    const Globals& g;
    std::FILE* summary() const { return g.out.empty() ? stderr : stdout; }
    void emit(const std::string& text) const {
        if (g.out.empty()) std::fwrite(text.data(), 1, text.size(), stdout);
        else write_text(g.out, text);
    }
};

Scenario resolve(const Globals& g, const std::string& positional) {
    const std::string name = positional.empty() ? g.scenario : positional;
    if (name.empty()) throw ContractViolation("no scenario given (positional or --scenario)");
    Scenario s = load_scenario(name, parse_params(g.params));
    for (const auto& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return s;
}

void require_format(const Globals& g, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (g.format == a) return;
    throw ContractViolation("format '" + g.format + "' is not available for this command");
}

// ---------------------------------------------------------------------------

struct CheckOpts {
    std::string scenario;
    int samples = 24;
};

int cmd_check(const Globals& g, const CheckOpts& o) {
    const Scenario s = resolve(g, o.scenario);
    CheckConfig cfg;
    cfg.samples = o.samples;
    cfg.seed = g.seed;
    const CheckReport rep = run_checks(s, cfg);
    const nlohmann::json j = to_json(rep);
    if (!g.out.empty()) write_text(g.out, j.dump(2) + "\n");
    if (g.format == "json" && g.out.empty()) {
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        std::printf("scenario %s (Euler field: %s)\n", rep.scenario.c_str(), rep.euler_kind.c_str());
        for (const auto& c : rep.checks) {
            std::printf("  %-4s %-32s %-12.4g tol %-8.2g %s\n", to_string(c.status), c.name.c_str(), c.value,
                        c.tolerance, c.detail.c_str());
        }
        std::printf("%s: %d failure(s)\n", rep.passed() ? "PASS" : "FAIL", rep.failures());
    }
    return rep.passed() ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct GeoOpts {
    std::string scenario;
    std::string x0, t0 = "1", v0, vt, Q, dir;
    int chart = 0;
    int eps = 1;
    int delta = 0;
    double lambda_max = 10.0;
    std::string method = "rk45";
    double step = 0.0;
    std::string source = "numeric";
    bool small_a = false;
    int sign = 1;
};

IntegratorConfig integrator_config(const Globals& g, const GeoOpts& o) {
    IntegratorConfig cfg;
    cfg.lambda_max = o.lambda_max;
    cfg.ode.tol = g.tol;
    if (o.method == "rk4") {
        cfg.ode.method = ode::Method::RK4;
        if (o.step > 0) cfg.ode.h_fixed = o.step;
    } else if (o.method == "rk45") {
        if (o.step > 0) cfg.ode.h0 = o.step;
    } else {
        throw ContractViolation("--method must be rk45 or rk4");
    }
    if (o.source == "closed") cfg.source = ChristoffelSource::ClosedForm;
    else if (o.source != "numeric") throw ContractViolation("--source must be numeric or closed");
    return cfg;
}

int emit_trajectory(const Globals& g, const Scenario& s, Trajectory tr, const std::string& note) {
    tr.scenario = s.name;
    const Sink sink{g};
    if (g.format == "csv") sink.emit(trajectory_csv(tr, s.coords));
    else if (g.format == "json") sink.emit(trajectory_json(tr).dump(2) + "\n");
    else if (g.format == "svg") sink.emit(trajectory_svg(tr, s.coords));
    else throw ContractViolation("--format must be csv, json or svg");
    std::FILE* f = sink.summary();
    std::fprintf(f, "samples %zu, lambda_end %.6g, event %s\n", tr.size(), tr.back().lambda, to_string(tr.event));
    if (!tr.event_detail.empty()) std::fprintf(f, "  %s\n", tr.event_detail.c_str());
    std::fprintf(f, "max charge drift %.3e, max null drift %.3e\n", tr.max_charge_drift(), tr.max_null_drift());
    if (!note.empty()) std::fprintf(f, "note: %s\n", note.c_str());
    return tr.event == GeodesicEvent::NonFinite ? kNumeric : kOk;
}

/// Null data with Q = 0 has vx = 0 and vt = 0: the state never moves.
Trajectory frozen(const GeodesicFlow& flow, const GeodesicState& s, const IntegratorConfig& cfg) {
    Trajectory tr;
    tr.config = cfg;
    tr.samples.push_back(s);
    tr.charge.push_back(carroll_charge(s, flow.gauge()));
    tr.base_speed2.push_back(base_speed2(s, flow.base_metric()));
    tr.null_residual.push_back(tr.base_speed2.back() - tr.charge.back() * tr.charge.back());
    return tr;
}

bool is_frozen(const GeodesicState& s) { return s.vt == 0.0 && s.vx.cwiseAbs().maxCoeff() == 0.0; }

int run_flow(const Globals& g, const GeoOpts& o, const Scenario& s, const GeodesicState& s0, std::string note) {
    const auto cfg = integrator_config(g, o);
    const GeodesicFlow flow = s.flow();
    if (is_frozen(s0)) {
        return emit_trajectory(g, s, frozen(flow, s0, cfg), "Q = 0 photon is frozen at its initial point");
    }
    return emit_trajectory(g, s, flow.integrate(s0, cfg), std::move(note));
}

int cmd_small_a(const Globals& g, const GeoOpts& o, const Scenario& s) {
    if (o.x0.empty() || o.v0.empty()) throw ContractViolation("--small-a needs --x0 and --v0");
    if (o.sign != 1 && o.sign != -1) throw ContractViolation("--sign must be +1 or -1");
    SmallAProblem prob{s.g, s.A, s.base_christoffel, evaluate_constant(o.t0), o.chart};
    ode::Config oc;
    oc.tol = g.tol;
    if (o.method == "rk4") {
        oc.method = ode::Method::RK4;
        if (o.step > 0) oc.h_fixed = o.step;
    }
    const auto bt = integrate_small_A(prob, parse_vec(o.x0, "--x0"), parse_vec(o.v0, "--v0"), o.sign,
                                      o.lambda_max, oc);
    const Sink sink{g};
    if (g.format == "csv") sink.emit(base_trajectory_csv(bt, s.coords));
    else if (g.format == "svg") sink.emit(base_trajectory_svg(bt, s.coords, s.name + " small-A base path"));
    else throw ContractViolation("--small-a supports csv and svg output");
    std::fprintf(sink.summary(), "samples %zu, u_end %.6g, event %s\n", bt.u.size(), bt.u.back(), to_string(bt.event));
    return bt.event == GeodesicEvent::NonFinite ? kNumeric : kOk;
}

int cmd_geodesic(const Globals& g, const GeoOpts& o) {
    const Scenario s = resolve(g, o.scenario);
    if (o.small_a) return cmd_small_a(g, o, s);
    if (o.x0.empty()) throw ContractViolation("--x0 is required");
    GeodesicState s0;
    s0.x = parse_vec(o.x0, "--x0");
    s0.t = evaluate_constant(o.t0);
    s0.chart = o.chart;
    if (s0.x.size() != s.dim) throw ContractViolation("--x0 needs " + std::to_string(s.dim) + " values");
    if (!o.Q.empty()) {
        if (!o.v0.empty() || !o.vt.empty()) throw ContractViolation("give either --Q/--dir or --v0/--vt");
        if (o.dir.empty() && evaluate_constant(o.Q) != 0.0) throw ContractViolation("--Q needs --dir");
        NullShootSpec spec;
        spec.x0 = s0.x;
        spec.t0 = s0.t;
        spec.chart = o.chart;
        spec.Q = evaluate_constant(o.Q);
        spec.eps = o.eps;
        spec.delta = o.delta;
        spec.u = o.dir.empty() ? Vec(Vec::Zero(s.dim)) : parse_vec(o.dir, "--dir");
        if (spec.u.size() != s.dim) throw ContractViolation("--dir needs " + std::to_string(s.dim) + " values");
        std::string note;
        if (spec.Q != 0.0) {
            const double len = std::sqrt(spec.u.dot(s.g.base(Point(spec.x0, spec.t0, o.chart)) * spec.u));
            if (!(len > 0.0)) throw ContractViolation("--dir has zero length");
            if (std::abs(len - 1.0) > 1e-10) note = "direction rescaled to unit length in g_M";
            spec.u /= len;
        } else {
            spec.u = Vec::Zero(s.dim);
            spec.u(0) = 1.0 / std::sqrt(s.g.base(Point(spec.x0, spec.t0, o.chart))(0, 0));
        }
        return run_flow(g, o, s, shoot_null(spec, s.g, s.A), note);
    }
    s0.vx = o.v0.empty() ? Vec(Vec::Zero(s.dim)) : parse_vec(o.v0, "--v0");
    if (s0.vx.size() != s.dim) throw ContractViolation("--v0 needs " + std::to_string(s.dim) + " values");
    s0.vt = o.vt.empty() ? 0.0 : evaluate_constant(o.vt);
    return run_flow(g, o, s, s0, {});
}

// ---------------------------------------------------------------------------

struct ChristoffelOpts {
    std::string scenario;
    std::vector<std::string> at;
    int samples = 4;
    int sigma = 1;
    int chart = 0;
};

int cmd_christoffel(const Globals& g, const ChristoffelOpts& o) {
    require_format(g, {"csv", "json"});
    const Scenario s = resolve(g, o.scenario);
    if (o.sigma != 1 && o.sigma != -1) throw ContractViolation("--sigma must be +1 or -1");
    std::vector<Point> pts;
    for (const auto& a : o.at) {
        const Vec v = parse_vec(a, "--at");
        if (v.size() != s.dim + 1) {
            throw ContractViolation("--at needs " + std::to_string(s.dim) + " base coordinates and t");
        }
        pts.emplace_back(v.head(s.dim), v(s.dim), o.chart);
    }
    if (pts.empty()) pts = s.sample_points(o.samples, g.seed);
    const auto rows = christoffel_rows(s.kk(o.sigma), pts, s.base_christoffel);
    const Sink sink{g};
    std::vector<std::string> coords = s.coords;
    if (g.format == "json") sink.emit(christoffel_json(rows, coords).dump(2) + "\n");
    else sink.emit(christoffel_csv(rows, coords));
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(r.closed - r.numeric));
    std::fprintf(sink.summary(), "%zu points, %zu components, max deviation %.3e\n", pts.size(), rows.size(), worst);
    return kOk;
}

// ---------------------------------------------------------------------------

struct LinearizeOpts {
    std::string atlas;
    double step = 1e-6;
    bool registered = false;
};

int cmd_linearize(const Globals& g, const LinearizeOpts& o) {
    require_format(g, {"csv", "json"});
    std::string name = o.atlas.empty() ? g.scenario : o.atlas;
    if (name.empty()) throw ContractViolation("no atlas given");
    TransitionAtlas atlas;
    bool builtin = false;
    for (const auto& b : builtin_atlas_names()) builtin = builtin || b == name;
    atlas = builtin ? builtin_atlas(name) : load_atlas_file(name);
    const auto shifted = shift_transitions(atlas);
    const auto lc = linearize(shifted, o.step, o.registered);
    const Sink sink{g};
    if (g.format == "json") sink.emit(cocycle_json(lc).dump(2) + "\n");
    else sink.emit(cocycle_csv(lc));
    std::FILE* f = sink.summary();
    std::fprintf(f, "atlas %s: %d charts, %zu table rows\n", atlas.name.c_str(), atlas.size(), lc.table.size());
    // Range of c per ordered chart pair.
    std::map<std::pair<int, int>, std::pair<double, double>> range;
    for (const auto& r : lc.table) {
        auto [it, fresh] = range.try_emplace({r.i, r.j}, r.c, r.c);
        if (!fresh) {
            it->second.first = std::min(it->second.first, r.c);
            it->second.second = std::max(it->second.second, r.c);
        }
    }
    for (const auto& [k, v] : range) {
        std::fprintf(f, "  c[%s <- %s] in [%.12g, %.12g]\n", atlas.chart(k.first).name.c_str(),
                     atlas.chart(k.second).name.c_str(), v.first, v.second);
    }
    std::fprintf(f, "cocycle residual %.3e, inverse residual %.3e, origin defect %.3e\n", lc.cocycle_residual,
                 lc.inverse_residual, origin_defect(shifted));
    return kOk;
}

int cmd_scenarios_list() {
    for (const auto& n : catalog_names()) std::printf("%-16s %s\n", n.c_str(), catalog_summary(n).c_str());
    std::printf("\natlases for linearize:");
    for (const auto& n : builtin_atlas_names()) std::printf(" %s", n.c_str());
    std::printf("\n");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carrollian geometry on principal R^x-bundles"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--scenario", g.scenario, "Catalog name or scenario file");
    app.add_option("--param", g.params, "Scenario parameter k=v (repeatable)");
    app.add_option("--tol", g.tol, "Integrator tolerance")->capture_default_str();
    app.add_option("--seed", g.seed, "Seed for random sample points")->capture_default_str();
    app.add_option("--out", g.out, "Output file (stdout if omitted)");
    app.add_option("--format", g.format, "Output format")
        ->check(CLI::IsMember({"csv", "json", "svg"}))
        ->capture_default_str();

    CheckOpts co;
    auto* check = app.add_subcommand("check", "Run the invariant suite on a scenario");
    check->add_option("scenario", co.scenario, "Catalog name or scenario file");
    check->add_option("--samples", co.samples, "Random sample points")->capture_default_str();

    GeoOpts go;
    auto add_geo = [&go](CLI::App* c) {
        c->add_option("scenario", go.scenario, "Catalog name or scenario file");
        c->add_option("--x0", go.x0, "Initial base point, comma list (pi-expressions allowed)");
        c->add_option("--t0", go.t0, "Initial fiber coordinate")->capture_default_str();
        c->add_option("--chart", go.chart, "Chart of the initial point")->capture_default_str();
        c->add_option("--Q", go.Q, "Carroll charge (null shooting)");
        c->add_option("--dir", go.dir, "Base direction for null shooting, normalized in g_M");
        c->add_option("--eps", go.eps, "Orientation along --dir (+1 or -1)")->capture_default_str();
        c->add_option("--delta", go.delta, "Expected fiber growth sign (0: implied by Q)")->capture_default_str();
        c->add_option("--lambda-max", go.lambda_max, "Affine parameter range (u range with --small-a)")
            ->capture_default_str();
        c->add_option("--method", go.method, "rk45 or rk4")->capture_default_str();
        c->add_option("--step", go.step, "Fixed RK4 step, or initial RK45 step");
        c->add_option("--source", go.source, "Christoffel source: numeric or closed")->capture_default_str();
    };
    auto* geo = app.add_subcommand("geodesic", "Integrate a geodesic of g - omega^2");
    add_geo(geo);
    geo->add_option("--v0", go.v0, "Initial base velocity dx/dlambda");
    geo->add_option("--vt", go.vt, "Initial dt/dlambda");
    geo->add_flag("--small-a", go.small_a, "Integrate the small-A base equation in u = ln|t| instead");
    geo->add_option("--sign", go.sign, "Sign of Q for --small-a")->capture_default_str();
    auto* shoot = app.add_subcommand("null-shoot", "Shoot a null geodesic with given charge and direction");
    add_geo(shoot);

    ChristoffelOpts xo;
    auto* chr = app.add_subcommand("christoffel", "Tabulate closed-form and finite-difference Christoffel symbols");
    chr->add_option("scenario", xo.scenario, "Catalog name or scenario file");
    chr->add_option("--at", xo.at, "Point 'x1,...,xn,t' (repeatable)");
    chr->add_option("--samples", xo.samples, "Random points when --at is absent")->capture_default_str();
    chr->add_option("--sigma", xo.sigma, "Sign of omega^2 in the KK metric")->capture_default_str();
    chr->add_option("--chart", xo.chart, "Chart of --at points")->capture_default_str();

    LinearizeOpts lo;
    auto* lin = app.add_subcommand("linearize", "Linearize a fiber-bundle atlas to a line-bundle cocycle");
    lin->add_option("atlas", lo.atlas, "Built-in atlas name or atlas file");
    lin->add_option("--step", lo.step, "Finite-difference step in r")->capture_default_str();
    lin->add_flag("--registered", lo.registered, "Use registered derivatives where available");

    auto* scen = app.add_subcommand("scenarios", "Scenario catalog");
    auto* list = scen->add_subcommand("list", "List catalog scenarios and built-in atlases");
    scen->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*check) return cmd_check(g, co);
        if (*geo) return cmd_geodesic(g, go);
        if (*shoot) {
            if (go.Q.empty()) throw ContractViolation("null-shoot needs --Q");
            return cmd_geodesic(g, go);
        }
        if (*chr) return cmd_christoffel(g, xo);
        if (*lin) return cmd_linearize(g, lo);
        if (*list) return cmd_scenarios_list();
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kNumeric;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kNumeric;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
